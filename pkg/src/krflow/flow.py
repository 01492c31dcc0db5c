"""Potential flow phi_t = log(omega(t)^n / omega_h^n) in the radial reduction.

The right-hand side at a node is log(Q''/xi_h') + (n-1) log(Q'/xi_h) with
Q' = xi0 - t rho_h' + phi'.  Its linearisation in phi is the radial
Laplacian Delta_g v = (n-1) v'/Q' + v''/Q'', discretised with the same
five-point stencils as the state itself, so the Newton matrix of the
backward Euler step is pentadiagonal.

Boundary closures
-----------------
pinned_model
    Each end node follows the exact homothety branch of its own end: if
    omega_0 = c h near that end and Ric(h) = E h, then phi_t = n log(c - E t)
    there.  Data must be homothetic to h near both ends.
extrapolated
    phi_0 = 2 phi_1 - phi_2 (and likewise at the far end).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .curvature import rm_norm_from_derivatives
from .errors import CflViolation, NewtonDivergence, PositivityLoss
from .geometry import MetricState, background_tables, c0_distance, first_violation, log_det_ratio

STEPPERS = ("explicit_rk4", "implicit_be")
BOUNDARIES = ("pinned_model", "extrapolated")
DAMPING_FLOOR = 2.0**-20
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FlowConfig:
    """Time-stepping options.

    dt is the fixed step of the implicit stepper; the explicit stepper picks
    its own step from the CFL limit and ignores it.
    """

    stepper: str = "implicit_be"
    t_end: float = 1.0
    dt: float | None = None
    cfl_theta: float = 0.5
    snapshot_times: tuple = ()
    newton_tol: float = 1e-12
    newton_max_iters: int = 50
    boundary: str = "pinned_model"
    epsilon_list: tuple | None = None
    diagnostics: bool = True
    max_steps: int = 5_000_000

    def __post_init__(self):
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive")
        if not 0 < self.cfl_theta <= 1:
            raise ValueError("cfl_theta must lie in (0, 1]")
        if self.stepper == "implicit_be" and not (self.dt is not None and self.dt > 0):
            raise ValueError("implicit_be needs a positive dt")
        snaps = tuple(float(x) for x in self.snapshot_times)
        if list(snaps) != sorted(set(snaps)):
            raise ValueError("snapshot_times must be strictly increasing")
        if snaps and (snaps[0] < 0 or snaps[-1] > self.t_end * (1 + 1e-12)):
            raise ValueError("snapshot_times must lie in [0, t_end]")
        object.__setattr__(self, "snapshot_times", snaps)
        if self.epsilon_list is not None:
            eps = tuple(float(x) for x in self.epsilon_list)
            if not eps or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
                raise ValueError("epsilon_list must be positive and strictly decreasing")
            object.__setattr__(self, "epsilon_list", eps)
        if self.newton_tol <= 0 or self.newton_max_iters < 1:
            raise ValueError("newton_tol must be positive and newton_max_iters >= 1")


@dataclass(frozen=True, eq=False)
class StepDiagnostics:
    """One row per accepted step (arrays of equal length)."""

    t: np.ndarray
    dt: np.ndarray
    newton_iters: np.ndarray
    sup_phidot: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    sup_rm: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: tuple
    diagnostics: StepDiagnostics
    config: FlowConfig
    epsilon: float | None = None

    def __post_init__(self):
        times = [st.t for st in self.states]
        if not times or times[0] != 0.0 or any(a >= b for a, b in zip(times, times[1:])):
            raise ValueError("trajectory times must start at 0 and increase strictly")

    @property
    def times(self) -> np.ndarray:
        return np.array([st.t for st in self.states])

    @property
    def grid(self):
        return self.states[0].grid

    @property
    def background(self):
        return self.states[0].background

    def at(self, t: float) -> MetricState:
        """Stored state at time t (nearest snapshot within 1e-9)."""
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.states[i]


@dataclass(frozen=True, eq=False)
class FamilyResult:
    """epsilon-regularised family started from omega_0 + eps omega_h."""

    base: MetricState
    epsilons: tuple
    trajectories: tuple
    distances: dict = field(default_factory=dict)

    def member(self, eps: float) -> Trajectory:
        return self.trajectories[self.epsilons.index(eps)]


def rhs(state: MetricState) -> np.ndarray:
    """phi_t at every node; identical to geometry.log_det_ratio."""
    return log_det_ratio(state)


# engine ------------------------------------------------------------------

class _Problem:
    """Arrays and boundary rule shared by all steps of one trajectory."""

    def __init__(self, state: MetricState, boundary: str):
        grid = state.grid
        self.grid = grid
        self.n = state.n
        self.bt = background_tables(state.background, grid)
        self.xi0 = state.xi0
        self.xi0_p = state.xi0_p
        self.w1, self.w2 = grid.stencils
        self.boundary = boundary
        self.ends = None
        if boundary == "pinned_model":
            self.ends = _end_models(state)

    def q(self, phi, t):
        bt = self.bt
        p1, p2 = self.grid.derivatives(phi)
        qp = self.xi0 - t * bt.rho_p + p1
        qpp = self.xi0_p - t * bt.rho_pp + p2
        return qp, qpp

    def interior_rate(self, qp, qpp):
        bt = self.bt
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.log(qpp / bt.xi_p) + (self.n - 1) * np.log(qp / bt.xi)

    def model_rates(self, t):
        (c0, e0), (c1, e1) = self.ends
        return self.n * math.log(c0 - e0 * t), self.n * math.log(c1 - e1 * t)

    def rate(self, phi, t):
        """phi_t with the boundary rule applied at the end nodes."""
        qp, qpp = self.q(phi, t)
        f = self.interior_rate(qp, qpp)
        if self.boundary == "pinned_model":
            f[0], f[-1] = self.model_rates(t)
        else:
            f[0] = 2.0 * f[1] - f[2]
            f[-1] = 2.0 * f[-2] - f[-3]
        return f

    def residual(self, psi, phi, t_new, dt):
        qp, qpp = self.q(psi, t_new)
        if first_violation(qp, qpp) is not None:
            return None, qp, qpp
        g = psi - phi - dt * self.interior_rate(qp, qpp)
        if self.boundary == "pinned_model":
            r0, r1 = self.model_rates(t_new)
            g[0] = psi[0] - phi[0] - dt * r0
            g[-1] = psi[-1] - phi[-1] - dt * r1
        else:
            g[0] = psi[0] - 2.0 * psi[1] + psi[2]
            g[-1] = psi[-1] - 2.0 * psi[-2] + psi[-3]
        return g, qp, qpp

    def jacobian_banded(self, qp, qpp, dt):
        n_nodes = self.grid.N
        vals = -dt * (self.w2 / qpp[:, None] + (self.n - 1) * self.w1 / qp[:, None])
        vals[:, 2] += 1.0
        vals[0] = 0.0
        vals[-1] = 0.0
        if self.boundary == "pinned_model":
            vals[0, 2] = vals[-1, 2] = 1.0
        else:
            vals[0, 2:] = (1.0, -2.0, 1.0)
            vals[-1, :3] = (1.0, -2.0, 1.0)
        ab = np.zeros((5, n_nodes))
        rows = np.arange(n_nodes)
        for o in range(-2, 3):
            cols = rows + o
            ok = (cols >= 0) & (cols < n_nodes)
            ab[2 - o, cols[ok]] = vals[rows[ok], o + 2]
        return ab

    def roundoff_floor(self, psi, phi, qp, qpp, t_new, dt):
        h = self.grid.ds
        scale = np.max(np.abs(psi))
        a1 = np.abs(self.xi0) + t_new * np.abs(self.bt.rho_p)
        a2 = np.abs(self.xi0_p) + t_new * np.abs(self.bt.rho_pp)
        cond = (a2 + 6.0 * scale / h**2) / qpp + (self.n - 1) * (a1 + 2.0 * scale / h) / qp
        return 16.0 * _EPS * (scale + np.max(np.abs(phi)) + dt * float(np.max(cond)))


def _end_models(state: MetricState):
    """(c, E) for the homothety branch at each end of the grid."""
    e = state.background.einstein_constant
    if e is None:
        raise ValueError("pinned_model boundary needs an Einstein background; use extrapolated")
    bt = state.tables
    out = []
    for idx in (slice(0, 3), slice(-3, None)):
        c = state.xi0[idx] / bt.xi[idx]
        cp = state.xi0_p[idx] / bt.xi_p[idx]
        ref = c[0] if idx.start == 0 else c[-1]
        if not (np.allclose(c, ref, rtol=1e-6, atol=0) and np.allclose(cp, ref, rtol=1e-6, atol=0)) or ref <= 0:
            raise ValueError(
                "pinned_model boundary needs omega_0 = c h near both ends; use extrapolated"
            )
        out.append((float(ref), float(e)))
    return tuple(out)


def cfl_limit(state: MetricState, cfl_theta: float) -> float:
    """Largest admissible explicit step theta ds^2 min(Q'')/2."""
    return cfl_theta * state.grid.ds**2 * float(np.min(state.Qpp)) / 2.0


def _check_state(prob: _Problem, phi, t):
    qp, qpp = prob.q(phi, t)
    bad = first_violation(qp, qpp)
    if bad is not None or not np.all(np.isfinite(phi)):
        bad = 0 if bad is None else bad
        raise PositivityLoss("step left the Kähler cone", node=bad, s=float(prob.grid.nodes[bad]), t=t)
    return qp, qpp


def _rk4(prob: _Problem, phi, t, dt):
    k1 = prob.rate(phi, t)
    k2 = prob.rate(phi + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = prob.rate(phi + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = prob.rate(phi + dt * k3, t + dt)
    return phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _newton(prob: _Problem, phi, t, dt, tol, max_iters, guesses=()):
    """Backward Euler solve; returns (phi_new, iterations)."""
    t_new = t + dt
    best = None
    for guess in (*guesses, phi + dt * prob.rate(phi, t), phi):
        if guess is None or not np.all(np.isfinite(guess)):
            continue
        res, qp, qpp = prob.residual(guess, phi, t_new, dt)
        if res is None:
            continue
        rn = float(np.max(np.abs(res)))
        if best is None or rn < best[1]:
            best = (np.array(guess, dtype=float), rn, res, qp, qpp)
    if best is None:
        raise PositivityLoss("no positive starting guess for the implicit step", t=t_new)
    psi, rn, res, qp, qpp = best
    for it in range(max_iters + 1):
        floor = prob.roundoff_floor(psi, phi, qp, qpp, t_new, dt)
        target = max(tol * max(1.0, float(np.max(np.abs(psi)))), floor)
        if rn <= target:
            return psi, it
        if it == max_iters:
            break
        delta = solve_banded((2, 2), prob.jacobian_banded(qp, qpp, dt), res)
        lam = 1.0
        while lam >= DAMPING_FLOOR:
            trial = psi - lam * delta
            tres, tqp, tqpp = prob.residual(trial, phi, t_new, dt)
            if tres is not None:
                # accept on the l2 merit, for which the Newton step is a descent direction
                if float(tres @ tres) < float(res @ res):
                    psi, rn, res, qp, qpp = trial, float(np.max(np.abs(tres))), tres, tqp, tqpp
                    break
            lam *= 0.5
        else:
            if rn <= 1e3 * target:
                return psi, it
            raise NewtonDivergence(
                f"damping floor reached with residual {rn:.3e}", t=t_new, residual=rn
            )
    raise NewtonDivergence(
        f"no convergence in {max_iters} iterations (residual {rn:.3e})", t=t_new, residual=rn
    )


def step_explicit(state: MetricState, dt: float, cfl_theta: float = 0.5,
                  boundary: str = "pinned_model") -> MetricState:
    """One classical Runge-Kutta step of the potential flow."""
    state.require_positive()
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    limit = cfl_limit(state, cfl_theta)
    if dt > limit * (1.0 + 1e-12):
        raise CflViolation(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e}")
    prob = _Problem(state, boundary)
    phi = _rk4(prob, state.phi, state.t, dt)
    _check_state(prob, phi, state.t + dt)
    return state.with_phi(state.t + dt, phi)


def step_implicit(state: MetricState, dt: float, newton_tol: float = 1e-12,
                  newton_max_iters: int = 50, boundary: str = "pinned_model") -> MetricState:
    """One backward Euler step solved by damped Newton."""
    state.require_positive()
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    prob = _Problem(state, boundary)
    phi, _ = _newton(prob, state.phi, state.t, dt, newton_tol, newton_max_iters)
    return state.with_phi(state.t + dt, phi)


# driver --------------------------------------------------------------------

def _segments(config: FlowConfig):
    targets = sorted({t for t in config.snapshot_times if t > 0} | {config.t_end})
    return targets, set(config.snapshot_times) | {config.t_end}


def _integrate(initial: MetricState, config: FlowConfig, warm=None, record=None) -> Trajectory:
    prob = _Problem(initial, config.boundary)
    grid = initial.grid
    bt = prob.bt
    phi = np.array(initial.phi, dtype=float)
    t = 0.0
    states = [initial]
    rows = []
    targets, _ = _segments(config)
    step_index = 0
    n = prob.n
    for target in targets:
        while target - t > 1e-12 * max(1.0, target):
            if step_index >= config.max_steps:
                raise NewtonDivergence(f"step budget {config.max_steps} exhausted", t=t)
            if config.stepper == "implicit_be":
                m = max(1, math.ceil((target - t) / config.dt - 1e-9))
                h = (target - t) / m
                guesses = ()
                if warm is not None and step_index in warm:
                    guesses = (warm[step_index],)
                phi_new, iters = _newton(prob, phi, t, h, config.newton_tol,
                                         config.newton_max_iters, guesses)
            else:
                qp, qpp = prob.q(phi, t)
                limit = config.cfl_theta * grid.ds**2 * float(np.min(qpp)) / 2.0
                h = min(limit, target - t)
                if target - t - h < 1e-12 * max(1.0, target):
                    h = target - t
                phi_new, iters = _rk4(prob, phi, t, h), 0
            t_new = target if abs(target - (t + h)) <= 1e-12 * max(1.0, target) else t + h
            qp, qpp = _check_state(prob, phi_new, t_new)
            phi, t = phi_new, t_new
            step_index += 1
            if record is not None:
                record[step_index] = phi
            phidot = prob.interior_rate(qp, qpp)
            rad, sph = qpp / bt.xi_p, qp / bt.xi
            lo = min(rad.min(), sph.min()) if n > 1 else rad.min()
            hi = max(rad.max(), sph.max()) if n > 1 else rad.max()
            sup_rm = math.nan
            if config.diagnostics:
                u2, u3 = grid.derivatives(qpp)
                sup_rm = float(np.max(rm_norm_from_derivatives(n, qp, qpp, u2, u3)[4:-4]))
            rows.append((t, h, iters, float(np.max(np.abs(phidot))), lo, hi, sup_rm))
        if t > 0:
            states.append(initial.with_phi(t, phi))
    cols = list(zip(*rows)) if rows else [()] * 7
    diag = StepDiagnostics(*(np.array(c, dtype=float) for c in cols))
    return Trajectory(tuple(states), diag, config)


def run(initial: MetricState, config: FlowConfig):
    """Integrate to t_end; returns a Trajectory, or a FamilyResult for epsilon runs."""
    if config.epsilon_list is None:
        if initial.degenerate:
            raise ValueError("degenerate initial data need an epsilon_list")
        return _integrate(initial, config)
    return run_family(initial, config)


def regularize(base: MetricState, eps: float) -> MetricState:
    """omega_0 + eps omega_h as a t = 0 state."""
    bt = base.tables
    return MetricState(base.grid, base.background, base.xi0 + eps * bt.xi, base.xi0_p + eps * bt.xi_p)


def run_family(base: MetricState, config: FlowConfig) -> FamilyResult:
    """Run every epsilon member, largest first, warm-starting from the previous one."""
    eps_list = config.epsilon_list
    trajs = []
    warm = None
    for eps in eps_list:
        record = {} if config.stepper == "implicit_be" else None
        traj = _integrate(regularize(base, eps), config, warm=warm, record=record)
        trajs.append(Trajectory(traj.states, traj.diagnostics, config, epsilon=eps))
        warm = record
    mask = base.grid.collar_mask()
    distances = {}
    for i in range(len(eps_list)):
        for j in range(i + 1, len(eps_list)):
            a, b = trajs[i], trajs[j]
            distances[(eps_list[i], eps_list[j])] = [
                (sa.t, c0_distance(sa, sb, mask)) for sa, sb in zip(a.states, b.states)
            ]
    return FamilyResult(base, eps_list, tuple(trajs), distances)
