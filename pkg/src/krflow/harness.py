"""Checks of a-priori estimates along computed trajectories.

Every check is a pure function returning a CheckResult.  Constants left as
None switch a check to measured mode, where it reports the smallest
constant making the estimate hold instead of a verdict.  All sup/inf
measurements skip a boundary collar (default 10 ds) and the four end nodes
of each side, where composed one-sided stencils lose accuracy.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .background import Background
from .curvature import curvature
from .errors import BandUnmet, HypothesisUnmet, InsufficientSnapshots, WrongBackground
from .geometry import (
    MetricState,
    christoffel_difference_sq,
    distance_profile,
    laplacian,
    log_det_ratio,
    ratios,
    trace_g_form,
    trace_g_h,
    trace_g_ric_h,
)

PASS, FAIL, MEASURED = "pass", "fail", "measured"
RICHARDSON_RANGE = (1.7, 4.5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    measured_constant: float | None = None
    first_violation: tuple | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (PASS, FAIL, MEASURED):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == FAIL and self.first_violation is None:
            raise ValueError("a failing check must carry its first violation")
        if self.status == MEASURED and self.measured_constant is None:
            raise ValueError("a measured check must carry its constant")

    @property
    def ok(self) -> bool:
        return self.status != FAIL


# helpers ---------------------------------------------------------------------

def interior_mask(grid, collar: float | None = None) -> np.ndarray:
    mask = grid.collar_mask(collar)
    mask[:4] = False
    mask[-4:] = False
    return mask


def _positive_times(traj, t_min: float = 0.0, t_max: float = math.inf):
    return [st for st in traj.states if st.t > 0 and t_min <= st.t <= t_max]


def _ratios_masked(state: MetricState, reference, mask):
    rad, sph = ratios(state, reference)
    if state.n == 1:
        return rad[mask][None, :]
    return np.vstack([rad[mask], sph[mask]])


def _lowest(state, reference, mask):
    """(min ratio, node index) over the mask."""
    r = _ratios_masked(state, reference, mask)
    j = int(np.argmin(r.min(axis=0)))
    return float(r.min()), int(np.flatnonzero(mask)[j])


def _require_lower_start(traj, mask, name):
    st = traj.states[0]
    lo, node = _lowest(st, st.background, mask)
    if lo < 1.0 - 1e-12:
        raise HypothesisUnmet(f"{name}: g(0) >= h fails (ratio {lo:.6g})", node=node, s=float(st.s[node]))


def _verdict(name, violation, constant, details, verify: bool):
    if verify:
        if violation is not None:
            return CheckResult(name, FAIL, constant, violation, details)
        return CheckResult(name, PASS, constant, None, details)
    return CheckResult(name, MEASURED, constant, None, details)


# sandwich and lower bounds -----------------------------------------------------

def check_sandwich(traj, C1_const: float | None = None, K: float | None = None,
                   C2_const: float | None = None, collar: float | None = None) -> CheckResult:
    """e^{-C1 K t} h <= g(t) <= C2 h at every snapshot."""
    bg = traj.background
    K = bg.K if K is None else K
    mask = interior_mask(traj.grid, collar)
    lows, highs, times = [], [], []
    for st in traj.states:
        r = _ratios_masked(st, bg, mask)
        lows.append(float(r.min()))
        highs.append(float(r.max()))
        times.append(st.t)
    lows, highs, times = map(np.array, (lows, highs, times))
    c2 = float(highs.max())
    pos = (times > 0) & (lows < 1.0)
    if K > 0 and np.any(pos):
        c1 = float(np.max(-np.log(lows[pos]) / (K * times[pos])))
    elif np.any(lows < 1.0 - 1e-12) and K == 0:
        c1 = math.inf
    else:
        c1 = 0.0
    details = {"K": K, "C1": c1, "C2": c2, "band_lo": lows.tolist(), "band_hi": highs.tolist(),
               "times": times.tolist()}
    verify = C1_const is not None and C2_const is not None
    violation = None
    if verify:
        bound = np.exp(-C1_const * K * times)
        bad = (lows < bound * (1 - 1e-12)) | (highs > C2_const * (1 + 1e-12))
        if np.any(bad):
            j = int(np.argmax(bad))
            st = traj.states[j]
            lo, node = _lowest(st, bg, mask)
            violation = (float(times[j]), float(st.s[node]))
    return _verdict("sandwich", violation, c2, details, verify)


def prop1_threshold(n: int, K: float, c1: float, t):
    """e^{-n K t / c1}."""
    return np.exp(-n * K * np.asarray(t, dtype=float) / c1)


def check_prop1_lower(traj, K: float | None = None, c1_band: float | None = None,
                      collar: float | None = None) -> CheckResult:
    """g(t) >= e^{-n K t / c1} h given g(0) >= h."""
    bg = traj.background
    K = bg.K if K is None else K
    mask = interior_mask(traj.grid, collar)
    _require_lower_start(traj, mask, "prop1_lower")
    if c1_band is None:
        c1_band = min(_lowest(st, bg, mask)[0] for st in traj.states)
    margin, violation, count = math.inf, None, 0
    for st in traj.states:
        r = _ratios_masked(st, bg, mask)
        bound = float(prop1_threshold(st.n, K, c1_band, st.t))
        gap = r.min(axis=0) - bound
        count += int(np.sum(gap < -1e-12))
        margin = min(margin, float(gap.min()))
        if violation is None and np.any(gap < -1e-12):
            node = int(np.flatnonzero(mask)[int(np.argmax(gap < -1e-12))])
            violation = (st.t, float(st.s[node]))
    details = {"K": K, "c1_band": c1_band, "violations": count, "margin": margin}
    return _verdict("prop1_lower", violation, margin, details, True)


def check_schwarz_lower(traj, K: float | None = None, eps_n: float = 1.0,
                        collar: float | None = None) -> CheckResult:
    """g(t) >= h/(2n) for t <= eps_n / K given g(0) >= h."""
    bg = traj.background
    K = bg.K if K is None else K
    mask = interior_mask(traj.grid, collar)
    _require_lower_start(traj, mask, "schwarz_lower")
    horizon = math.inf if K == 0 else eps_n / K
    factor = 1.0 / (2 * bg.n)
    worst, violation = math.inf, None
    for st in traj.states:
        if st.t > horizon:
            break
        lo, node = _lowest(st, bg, mask)
        worst = min(worst, lo)
        if violation is None and lo < factor:
            violation = (st.t, float(st.s[node]))
    details = {"factor": factor, "horizon": horizon, "min_ratio": worst}
    return _verdict("schwarz_lower", violation, worst, details, True)


# curvature ---------------------------------------------------------------------

def curvature_series(traj, collar: float | None = None, t_min: float = 0.0, t_max: float = math.inf):
    """(t, sup |Rm|, sup |nabla Rm|) over positive-time snapshots."""
    mask = interior_mask(traj.grid, collar)
    rows = []
    for st in _positive_times(traj, t_min, t_max):
        rep = curvature(st, mask)
        rows.append((st.t, rep.sup_norm, rep.sup_grad_norm))
    return np.array(rows).reshape(-1, 3)


def check_curvature_decay(traj, a_const: float | None = None, C1_const: float | None = None,
                          collar: float | None = None, t_min: float = 0.0,
                          t_max: float = math.inf) -> CheckResult:
    """sup_t t sup|Rm| (the constant a) and sup_t (t|Rm| + t^{3/2}|nabla Rm|)."""
    rows = curvature_series(traj, collar, t_min, t_max)
    if rows.shape[0] == 0:
        raise InsufficientSnapshots("curvature decay needs snapshots with t > 0 in the window")
    t, rm, grad = rows.T
    a_series = t * rm
    c_series = t * rm + t**1.5 * grad
    a = float(a_series.max())
    c1 = float(c_series.max())
    details = {"a": a, "C1": c1, "times": t.tolist(), "t_rm": a_series.tolist(),
               "t_rm_grad": c_series.tolist()}
    verify = a_const is not None
    violation = None
    if verify:
        bad = a_series > a_const * (1 + 1e-12)
        if C1_const is not None:
            bad |= c_series > C1_const * (1 + 1e-12)
        if np.any(bad):
            j = int(np.argmax(bad))
            st = traj.at(float(t[j]))
            rep = curvature(st, interior_mask(traj.grid, collar))
            node = int(np.argmax(np.where(rep.mask, rep.norm, -np.inf)))
            violation = (float(t[j]), float(st.s[node]))
    return _verdict("curvature_decay", violation, a, details, verify)


def check_family_uniformity(values: dict, factor: float = 2.0) -> CheckResult:
    """max/min of a measured constant across a family is at most `factor`."""
    vals = np.array(list(values.values()), dtype=float)
    ratio = float(vals.max() / vals.min())
    details = {"values": {str(k): float(v) for k, v in values.items()}, "factor": factor}
    if not np.all(np.isfinite(vals)) or ratio > factor:
        worst = max(values, key=values.get)
        return CheckResult("family_uniformity", FAIL, ratio, (math.nan, math.nan), {**details, "worst": str(worst)})
    return CheckResult("family_uniformity", PASS, ratio, None, details)


# identities -----------------------------------------------------------------

def _uniform_triples(states):
    out = []
    for a, b, c in zip(states, states[1:], states[2:]):
        h1, h2 = b.t - a.t, c.t - b.t
        if abs(h1 - h2) <= 1e-9 * max(h1, h2):
            out.append((a, b, c))
    return out


def identity_residuals(traj, collar: float | None = None) -> tuple[float, float]:
    """Sup-norm residuals of the two parabolic identities for phidot.

    (d/dt - Delta) phidot + tr_g Ric(h) = 0
    (d/dt - Delta)(t phidot - phi - n t) + tr_g omega_0 = 0
    Time derivatives use centred differences over uniformly spaced snapshots.
    """
    triples = _uniform_triples(traj.states)
    if not triples:
        raise InsufficientSnapshots("identities need three consecutive snapshots with uniform spacing")
    mask = interior_mask(traj.grid, collar)
    r1 = r2 = 0.0
    for a, b, c in triples:
        h = b.t - a.t
        pa, pb, pc = log_det_ratio(a), log_det_ratio(b), log_det_ratio(c)
        dt_phidot = (pc - pa) / (2 * h)
        res1 = dt_phidot - laplacian(b, pb) + trace_g_ric_h(b)
        wa = a.t * pa - a.phi - b.n * a.t
        wb = b.t * pb - b.phi - b.n * b.t
        wc = c.t * pc - c.phi - b.n * c.t
        res2 = (wc - wa) / (2 * h) - laplacian(b, wb) + trace_g_form(b, b.xi0, b.xi0_p)
        r1 = max(r1, float(np.max(np.abs(res1[mask]))))
        r2 = max(r2, float(np.max(np.abs(res2[mask]))))
    return r1, r2


def check_identities(traj, collar: float | None = None) -> CheckResult:
    r1, r2 = identity_residuals(traj, collar)
    return CheckResult("identities", MEASURED, max(r1, r2), None,
                       {"residual_phidot": r1, "residual_potential": r2})


def richardson_factors(residuals) -> list:
    r = np.asarray(residuals, dtype=float)
    return (r[:-1] / r[1:]).tolist()


def check_identity_refinement(trajectories, collar: float | None = None,
                              bounds: tuple = RICHARDSON_RANGE) -> CheckResult:
    """Residuals over successive joint (ds, dt) halvings, coarsest first."""
    res = [identity_residuals(tr, collar) for tr in trajectories]
    f1 = richardson_factors([r[0] for r in res])
    f2 = richardson_factors([r[1] for r in res])
    factors = f1 + f2
    details = {"residual_phidot": [r[0] for r in res], "residual_potential": [r[1] for r in res],
               "factors_phidot": f1, "factors_potential": f2}
    lo, hi = bounds
    bad = [i for i, f in enumerate(factors) if not lo <= f <= hi]
    if bad:
        return CheckResult("identity_refinement", FAIL, float(min(factors)), (math.nan, math.nan), details)
    return CheckResult("identity_refinement", PASS, float(min(factors)), None, details)


# degenerate start --------------------------------------------------------------

def _potential_derivatives(grid, f_pot):
    if f_pot is None:
        z = np.zeros(grid.N)
        return z, z
    vals = f_pot(grid.nodes) if callable(f_pot) else np.asarray(f_pot, dtype=float)
    return grid.derivatives(vals)


def check_degenerate_hypotheses(base: MetricState, s_horizon: float, beta: float, f_pot=None) -> None:
    """omega_h >= omega_0 and omega_0 - s Ric(h) + s i ddbar f > beta omega_h."""
    bt = base.tables
    grid = base.grid
    upper = np.maximum(base.xi0_p / bt.xi_p, base.xi0 / bt.xi if base.n > 1 else 0.0)
    if np.any(upper > 1.0 + 1e-12):
        i = int(np.argmax(upper > 1.0 + 1e-12))
        raise HypothesisUnmet(f"omega_h >= omega_0 fails (ratio {upper[i]:.6g})", node=i, s=float(grid.nodes[i]))
    f1, f2 = _potential_derivatives(grid, f_pot)
    s = s_horizon
    rad = (base.xi0_p - s * bt.rho_pp + s * f2) / bt.xi_p
    sph = (base.xi0 - s * bt.rho_p + s * f1) / bt.xi
    low = np.minimum(rad, sph) if base.n > 1 else rad
    if np.any(low <= beta):
        i = int(np.argmax(low <= beta))
        raise HypothesisUnmet(f"omega_0 - s Ric(h) + s i ddbar f > beta h fails ({low[i]:.6g} <= {beta})",
                              node=i, s=float(grid.nodes[i]))


def degenerate_constants(traj, t_min: float, t_max: float, collar: float | None = None) -> dict:
    """Measured C in phi <= Ct, phi >= nt log t - Ct, phidot <= C, tr_g h <= C."""
    mask = interior_mask(traj.grid, collar)
    out = {"phi_upper": -math.inf, "phi_lower": -math.inf, "phidot_upper": -math.inf, "trace_upper": -math.inf}
    for st in _positive_times(traj, t_min, t_max):
        t, n = st.t, st.n
        phi = st.phi[mask]
        out["phi_upper"] = max(out["phi_upper"], float(np.max(phi / t)))
        out["phi_lower"] = max(out["phi_lower"], float(np.max((n * t * math.log(t) - phi) / t)))
        out["phidot_upper"] = max(out["phidot_upper"], float(np.max(log_det_ratio(st)[mask])))
        out["trace_upper"] = max(out["trace_upper"], float(np.max(trace_g_h(st)[mask])))
    return out


def check_degenerate_bounds(family, s_horizon: float, beta: float, f_pot=None,
                            t_min: float | None = None, drift_tol: float = 0.1,
                            collar: float | None = None) -> CheckResult:
    """Constants of the degenerate-start bounds across an epsilon family.

    Measured on t in [t_min, s_horizon) (the constants may depend on t);
    pass means every constant is finite and moves by less than drift_tol,
    relative to max(|C|, 1), between the two smallest epsilons.
    """
    check_degenerate_hypotheses(family.base, s_horizon, beta, f_pot)
    t_min = 0.1 * s_horizon if t_min is None else t_min
    per_eps = {}
    reached = {}
    for eps, tr in zip(family.epsilons, family.trajectories):
        per_eps[eps] = degenerate_constants(tr, t_min, s_horizon * (1 - 1e-12), collar)
        reached[eps] = float(tr.times[-1])
    e_prev, e_last = family.epsilons[-2:] if len(family.epsilons) > 1 else family.epsilons * 2
    drift = {k: abs(per_eps[e_last][k] - per_eps[e_prev][k]) / max(abs(per_eps[e_last][k]), 1.0)
             for k in per_eps[e_last]}
    constants = {k: max(v[k] for v in per_eps.values()) for k in per_eps[e_last]}
    details = {"per_epsilon": per_eps, "drift": drift, "constants": constants, "t_reached": reached,
               "t_min": t_min}
    worst = max(drift.values())
    finite = all(math.isfinite(v) for v in constants.values())
    if not finite or worst >= drift_tol:
        return CheckResult("degenerate_bounds", FAIL, worst, (t_min, math.nan), details)
    return CheckResult("degenerate_bounds", PASS, worst, None, details)


# long-time behaviour -------------------------------------------------------------

def best_constant_gap(state: MetricState, reference, mask) -> tuple[float, float]:
    """(c, gap): the constant c minimising sup |ratio - c| and that sup."""
    r = _ratios_masked(state, reference, mask)
    lo, hi = float(r.min()), float(r.max())
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def check_stability_flat(traj, collar: float | None = None, t_compare: float | None = None) -> CheckResult:
    """t |Psi|^2 bounded and non-increasing after its peak; C0 gap to c*h decreasing."""
    bg = traj.background
    if bg.kind != "flat":
        raise WrongBackground("flat stability needs the flat background")
    mask = interior_mask(traj.grid, collar)
    states = _positive_times(traj)
    if len(states) < 2:
        raise InsufficientSnapshots("flat stability needs at least two positive-time snapshots")
    t = np.array([st.t for st in states])
    psi = np.array([st.t * float(np.max(christoffel_difference_sq(st)[mask])) for st in states])
    gaps = np.array([best_constant_gap(st, bg, mask)[1] for st in states])
    peak = int(np.argmax(psi))
    tail_t, tail_p = np.log(t[peak:]), psi[peak:]
    slope = float(np.polyfit(tail_t, tail_p, 1)[0]) if len(tail_t) >= 2 else 0.0
    t_end = t[-1]
    t_ref = t_end / 10.0 if t_compare is None else t_compare
    j = int(np.argmin(np.abs(t - t_ref)))
    details = {"times": t.tolist(), "t_psi_sq": psi.tolist(), "c0_gap": gaps.tolist(),
               "trend_slope": slope, "t_compare": float(t[j]), "peak_time": float(t[peak])}
    bounded = bool(np.all(np.isfinite(psi)))
    # floors: values at the level of stencil roundoff count as converged
    trend_ok = peak < len(t) - 1 and slope <= 0.0 or psi[-1] <= 1e-12
    decreasing = gaps[-1] < gaps[j] or gaps[-1] <= 1e-9
    if bounded and trend_ok and decreasing:
        return CheckResult("stability_flat", PASS, float(psi.max()), None, details)
    bad = len(t) - 1
    return CheckResult("stability_flat", FAIL, float(psi.max()), (float(t[bad]), math.nan), details)


def check_stability_hyperbolic(traj, k: float | None = None, collar: float | None = None,
                               t_ref: float = 1.0, rel_tol: float = 0.05) -> CheckResult:
    """sup |t^{-1} g(t)/h - 1| decreasing for t >= t_ref and below rel_tol times its value at t_ref."""
    bg = traj.background
    n = bg.n
    if bg.kind != "complex_hyperbolic" or not math.isclose(bg.k, -1.0 / (n + 1), rel_tol=1e-12):
        raise WrongBackground("hyperbolic stability needs Ric(h) = -h, i.e. k = -1/(n+1)")
    if k is not None and not math.isclose(k, bg.k, rel_tol=1e-12):
        raise WrongBackground(f"trajectory has k={bg.k}, check asked for k={k}")
    mask = interior_mask(traj.grid, collar)
    states = _positive_times(traj)
    t = np.array([st.t for st in states])
    gaps = np.array([float(np.max(np.abs(_ratios_masked(st, bg, mask) / st.t - 1.0))) for st in states])
    later = t >= t_ref * (1 - 1e-12)
    if later.sum() < 2:
        raise InsufficientSnapshots("need two snapshots at or after t_ref")
    tt, gg = t[later], gaps[later]
    details = {"times": t.tolist(), "gap": gaps.tolist(), "gap_ref": float(gg[0]), "gap_end": float(gg[-1])}
    inc = np.diff(gg) > 1e-12 * gg[:-1]
    if np.any(inc):
        j = int(np.argmax(inc)) + 1
        return CheckResult("stability_hyperbolic", FAIL, float(gg[-1]), (float(tt[j]), math.nan), details)
    if gg[-1] >= rel_tol * gg[0]:
        return CheckResult("stability_hyperbolic", FAIL, float(gg[-1]), (float(tt[-1]), math.nan), details)
    return CheckResult("stability_hyperbolic", PASS, float(gg[-1]), None, details)


# short-time attainment -------------------------------------------------------------

def attainment_limit(n: int, d: float) -> float:
    """n sqrt(2 d (1 + d)) / (1 - d)."""
    return n * math.sqrt(2.0 * d * (1.0 + d)) / (1.0 - d)


def attainment_bound(n: int, d: float, margin: float = 1.5) -> float:
    return margin * (attainment_limit(n, d) + (1.0 + d) ** 2 - 1.0)


def relative_c0_gap(state: MetricState, initial: MetricState, mask) -> float:
    return float(np.max(np.abs(_ratios_masked(state, initial, mask) - 1.0)))


def check_c0_attainment(approx_runs, reference: MetricState, margin: float = 1.5,
                        t_small: float | None = None, collar: float | None = None) -> CheckResult:
    """limsup_{t -> 0} of sup |g(t)/g(0) - 1| against the band-d bound, per run."""
    per_run = []
    violation = None
    for d, traj in approx_runs:
        g0 = traj.states[0]
        rad, sph = ratios(g0, reference)
        dist = max(float(np.max(np.abs(rad - 1))), float(np.max(np.abs(sph - 1))) if g0.n > 1 else 0.0)
        if dist > d * (1 + 1e-6) + 1e-14:
            raise BandUnmet(f"initial metric is {dist:.6g} from the reference, beyond d={d}")
        mask = interior_mask(traj.grid, collar)
        tmax = traj.times[-1] if t_small is None else t_small
        gaps = [(st.t, relative_c0_gap(st, g0, mask)) for st in _positive_times(traj, 0.0, tmax)]
        measured = max(g for _, g in gaps)
        bound = attainment_bound(g0.n, d, margin)
        per_run.append({"d": d, "band": dist, "measured": measured, "bound": bound,
                        "a_limit": attainment_limit(g0.n, d)})
        if violation is None and measured > bound:
            t_bad = next(t for t, g in gaps if g > bound)
            violation = (t_bad, math.nan)
    worst = max(r["measured"] / r["bound"] if r["bound"] > 0 else (0.0 if r["measured"] == 0 else math.inf)
                for r in per_run)
    details = {"runs": per_run, "margin": margin}
    if violation is not None:
        return CheckResult("c0_attainment", FAIL, worst, violation, details)
    return CheckResult("c0_attainment", PASS, worst, None, details)


# shrinking balls ---------------------------------------------------------------------

def check_shrinking_ball(traj, a_const: float = 1.0, beta_n: float | None = None) -> CheckResult:
    """B_t(p, 1 - beta_n sqrt(a t)) inside B_0(p, 1), p the innermost node."""
    d0 = distance_profile(traj.states[0], 0)
    outside = d0 >= 1.0
    needed = 0.0
    violation = None
    for st in _positive_times(traj):
        dt_ = distance_profile(st, 0)
        if np.any(outside):
            req = float(np.max((1.0 - dt_[outside]) / math.sqrt(a_const * st.t)))
            needed = max(needed, req)
            if beta_n is not None and violation is None:
                radius = 1.0 - beta_n * math.sqrt(a_const * st.t)
                bad = outside & (dt_ < radius)
                if np.any(bad):
                    violation = (st.t, float(st.s[int(np.argmax(bad))]))
    details = {"beta_needed": needed, "vacuous": not bool(np.any(outside)), "a": a_const}
    return _verdict("shrinking_ball", violation, needed, details, beta_n is not None)


# claim functionals -------------------------------------------------------------------

def smooth_cutoff(x):
    """1 on [0, 3/4], 0 on [1, inf), exponential-type smooth transition."""
    x = np.asarray(x, dtype=float)
    u = np.clip((x - 0.75) / 0.25, 0.0, 1.0)

    def psi(v):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)

    return psi(1.0 - u) / (psi(1.0 - u) + psi(u))


def evaluate_claim_functionals(traj, lam: float, cutoff=None, a_const: float = 1.0,
                               beta_tilde: float = 1.0, collar: float | None = None) -> CheckResult:
    """sup F and sup G along the trajectory.

    F = log tr_g h + 2 log Phi - L phi + n L t (log t - 2),   L = 6 lam
    G = Phi~ phidot^2 / (1 + L phi),                           L = 16 lam
    with Phi = cutoff(eta), Phi~ = cutoff(2 eta), eta = d_t(p, .) + beta~ sqrt(a t).
    """
    cut = smooth_cutoff if cutoff is None else cutoff
    mask = interior_mask(traj.grid, collar)
    lf, lg = 6.0 * lam, 16.0 * lam
    rows = []
    f0_on_core = None
    for st in traj.states:
        t, n = st.t, st.n
        eta = distance_profile(st, 0) + beta_tilde * math.sqrt(a_const * t)
        Phi, Phit = cut(eta), cut(2.0 * eta)
        live = mask & (Phi > 0)
        tlog = t * (math.log(t) - 2.0) if t > 0 else 0.0
        with np.errstate(divide="ignore"):
            F = np.log(trace_g_h(st)) + 2.0 * np.log(Phi) - lf * st.phi + n * lf * tlog
        denom = 1.0 + lg * st.phi
        ok = mask & (denom > 0)
        G = np.where(ok, Phit * log_det_ratio(st) ** 2 / np.where(ok, denom, 1.0), 0.0)
        supF = float(np.max(F[live])) if np.any(live) else -math.inf
        rows.append((t, supF, float(np.max(G[mask]))))
        if t == 0:
            core = mask & (Phi == 1.0)
            f0_on_core = float(np.max(F[core])) if np.any(core) else -math.inf
    arr = np.array(rows)
    supG = float(arr[:, 2].max())
    jmax = int(np.argmax(arr[:, 2]))
    logl2 = math.log(lam) ** 2 if lam > 1 else 0.0
    details = {"times": arr[:, 0].tolist(), "sup_F": arr[:, 1].tolist(), "sup_G": arr[:, 2].tolist(),
               "F0_on_core": f0_on_core, "F0_bound": math.log(traj.background.n * lam),
               "G_max_time": float(arr[jmax, 0]), "G_over_log_lambda_sq": supG / logl2 if logl2 else None}
    finite = np.all(np.isfinite(arr[:, 2])) and np.all(arr[:, 1] < math.inf)
    if not finite:
        j = int(np.argmax(~np.isfinite(arr[:, 2]) | (arr[:, 1] == math.inf)))
        return CheckResult("claim_functionals", FAIL, supG, (float(arr[j, 0]), math.nan), details)
    return CheckResult("claim_functionals", PASS, supG, None, details)


CHECKS = {
    "sandwich": check_sandwich,
    "prop1_lower": check_prop1_lower,
    "curvature_decay": check_curvature_decay,
    "schwarz_lower": check_schwarz_lower,
    "identities": check_identities,
    "stability_flat": check_stability_flat,
    "stability_hyperbolic": check_stability_hyperbolic,
    "shrinking_ball": check_shrinking_ball,
    "claim_functionals": evaluate_claim_functionals,
}
