"""U(n)-invariant Kähler metrics in the radial reduction.

A state at time t is

    omega(t) = omega_0 - t Ric(h) + i ddbar phi,

and with Q' = xi0 - t rho_h' + phi' and Q'' its s-derivative the metric has
eigenvalues (relative to the Euclidean metric)

    lambda_sph = Q' e^{-s}   (multiplicity n - 1)
    lambda_rad = Q'' e^{-s}  (multiplicity 1).
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from .background import Background
from .errors import GridMismatch, OutOfRange, PositivityLoss
from .grid import RadialGrid


@dataclass(frozen=True, eq=False)
class BackgroundTables:
    """A background sampled on a grid (read-only arrays)."""

    xi: np.ndarray
    xi_p: np.ndarray
    rho: np.ndarray
    rho_p: np.ndarray
    rho_pp: np.ndarray


@lru_cache(maxsize=64)
def background_tables(background: Background, grid: RadialGrid) -> BackgroundTables:
    s = grid.nodes
    arrays = [background.xi(s), background.xi_p(s), background.rho(s), background.rho_p(s), background.rho_pp(s)]
    for a in arrays:
        a.flags.writeable = False
    xi, xi_p = arrays[0], arrays[1]
    if np.any(~(xi > 0)) or np.any(~(xi_p > 0)):
        bad = int(np.argmax(~((xi > 0) & (xi_p > 0))))
        raise PositivityLoss("background is not positive on the grid", node=bad, s=float(s[bad]))
    return BackgroundTables(*arrays)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def first_violation(qp: np.ndarray, qpp: np.ndarray, strict: bool = True) -> int | None:
    """Index of the first node outside the (closed if not strict) Kähler cone."""
    if strict:
        bad = ~((qp > 0) & (qpp > 0))
    else:
        bad = ~((qp >= 0) & (qpp >= 0))
    if not bad.any():
        return None
    return int(np.argmax(bad))


@dataclass(frozen=True, eq=False)
class MetricState:
    """Metric omega_0 - t Ric(h) + i ddbar phi on a radial grid.

    xi0_p defaults to the finite-difference derivative of xi0; pass it
    explicitly when it is known in closed form.
    """

    grid: RadialGrid
    background: Background
    xi0: np.ndarray
    xi0_p: np.ndarray | None = None
    t: float = 0.0
    phi: np.ndarray | None = None
    degenerate: bool = False
    Qp: np.ndarray = field(init=False, repr=False)
    Qpp: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        grid = self.grid
        xi0 = _readonly(self.xi0)
        if xi0.shape != (grid.N,):
            raise GridMismatch(f"xi0 has shape {xi0.shape}, grid has N={grid.N}")
        xi0_p = _readonly(grid.d1(xi0) if self.xi0_p is None else self.xi0_p)
        phi = _readonly(np.zeros(grid.N) if self.phi is None else self.phi)
        if xi0_p.shape != (grid.N,) or phi.shape != (grid.N,):
            raise GridMismatch("xi0_p and phi must live on the state's grid")
        t = float(self.t)
        if not (t >= 0.0 and math.isfinite(t)):
            raise OutOfRange(f"time must be finite and >= 0, got {t}")
        if self.degenerate and t != 0.0:
            raise ValueError("only t = 0 states may carry the degenerate flag")
        bt = background_tables(self.background, grid)
        p1, p2 = grid.derivatives(phi)
        qp = xi0 - t * bt.rho_p + p1
        qpp = xi0_p - t * bt.rho_pp + p2
        bad = first_violation(qp, qpp, strict=not self.degenerate)
        if bad is not None:
            raise PositivityLoss(
                "state outside the Kähler cone", node=bad, s=float(grid.nodes[bad]), t=t
            )
        for name, value in (("xi0", xi0), ("xi0_p", xi0_p), ("phi", phi), ("t", t),
                            ("Qp", _readonly(qp)), ("Qpp", _readonly(qpp))):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.background.n

    @property
    def s(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def tables(self) -> BackgroundTables:
        return background_tables(self.background, self.grid)

    @classmethod
    def from_background(cls, grid: RadialGrid, background: Background, c: float = 1.0) -> "MetricState":
        """The state c*h at t = 0."""
        bt = background_tables(background, grid)
        return cls(grid, background, c * bt.xi, c * bt.xi_p)

    def with_phi(self, t: float, phi: np.ndarray) -> "MetricState":
        return MetricState(self.grid, self.background, self.xi0, self.xi0_p, t, phi)

    def require_positive(self) -> None:
        bad = first_violation(self.Qp, self.Qpp, strict=True)
        if bad is not None:
            raise PositivityLoss(
                "degenerate state has no strictly positive metric",
                node=bad, s=float(self.s[bad]), t=self.t,
            )


@dataclass(frozen=True)
class EquivalenceBand:
    """c_lo h <= g <= c_hi h with the attaining nodes and directions."""

    c_lo: float
    c_hi: float
    argmin: tuple[int, str]
    argmax: tuple[int, str]


# nodewise quantities ---------------------------------------------------

def eigenvalues(state: MetricState) -> tuple[np.ndarray, np.ndarray]:
    """(lambda_rad, lambda_sph) relative to the Euclidean metric."""
    state.require_positive()
    e = np.exp(-state.s)
    return state.Qpp * e, state.Qp * e


def log_det_ratio(state: MetricState) -> np.ndarray:
    """log(det g / det h) = log(Q''/xi_h') + (n-1) log(Q'/xi_h)."""
    state.require_positive()
    bt = state.tables
    return np.log(state.Qpp / bt.xi_p) + (state.n - 1) * np.log(state.Qp / bt.xi)


def trace_g_form(state: MetricState, a: np.ndarray, a_p: np.ndarray) -> np.ndarray:
    """tr_g of the radial (1,1)-form i ddbar A with A' = a, A'' = a_p."""
    state.require_positive()
    return (state.n - 1) * a / state.Qp + a_p / state.Qpp


def trace_g_h(state: MetricState) -> np.ndarray:
    bt = state.tables
    return trace_g_form(state, bt.xi, bt.xi_p)


def trace_h_g(state: MetricState) -> np.ndarray:
    state.require_positive()
    bt = state.tables
    return (state.n - 1) * state.Qp / bt.xi + state.Qpp / bt.xi_p


def trace_g_ric_h(state: MetricState) -> np.ndarray:
    """tr_g Ric(h)."""
    bt = state.tables
    return trace_g_form(state, bt.rho_p, bt.rho_pp)


def laplacian(state: MetricState, v: np.ndarray) -> np.ndarray:
    """Delta_g v = (n-1) v'/Q' + v''/Q'' for a radial function v."""
    state.require_positive()
    g = state.grid
    return (state.n - 1) * g.d1(v) / state.Qp + g.d2(v) / state.Qpp


def ratios(state: MetricState, reference: "MetricState | Background") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue ratios (radial, spherical) of state against reference."""
    if isinstance(reference, Background):
        bt = background_tables(reference, state.grid)
        ref_p, ref_pp = bt.xi, bt.xi_p
    else:
        state.grid.check_same(reference.grid)
        reference.require_positive()
        ref_p, ref_pp = reference.Qp, reference.Qpp
    return state.Qpp / ref_pp, state.Qp / ref_p


def equivalence_band(
    state: MetricState,
    reference: "MetricState | Background",
    mask: np.ndarray | None = None,
) -> EquivalenceBand:
    """Tight constants with c_lo ref <= g <= c_hi ref on the (masked) grid."""
    state.require_positive()
    rad, sph = ratios(state, reference)
    idx = np.arange(state.grid.N)
    if mask is not None:
        idx = idx[mask]
    rad, sph = rad[idx], sph[idx]
    if state.n == 1:
        stack, names = rad[None, :], ("rad",)
    else:
        stack, names = np.vstack([rad, sph]), ("rad", "sph")
    lo = np.unravel_index(np.argmin(stack), stack.shape)
    hi = np.unravel_index(np.argmax(stack), stack.shape)
    return EquivalenceBand(
        float(stack[lo]), float(stack[hi]),
        (int(idx[lo[1]]), names[lo[0]]), (int(idx[hi[1]]), names[hi[0]]),
    )


def c0_distance(a: MetricState, b: MetricState, mask: np.ndarray | None = None) -> float:
    """sup over nodes and directions of |lambda_a - lambda_b| / lambda_h."""
    a.grid.check_same(b.grid)
    bt = a.tables
    d = np.maximum(np.abs(a.Qpp - b.Qpp) / bt.xi_p,
                   np.abs(a.Qp - b.Qp) / bt.xi if a.n > 1 else 0.0)
    if mask is not None:
        d = d[mask]
    return float(np.max(d))


def christoffel_difference_sq(state: MetricState) -> np.ndarray:
    """|Gamma(g) - Gamma(h)|_g^2 for radial g and h.

    In the eigenframe the only nonzero components come from the radial
    derivatives of log Q'' and log Q' against those of h.
    """
    state.require_positive()
    g = state.grid
    bt = state.tables
    a = g.d1(state.Qpp) / state.Qpp - g.d1(bt.xi_p) / bt.xi_p
    b = state.Qpp / state.Qp - bt.xi_p / bt.xi
    return (a * a + 2.0 * (state.n - 1) * b * b) / state.Qpp


# distances ---------------------------------------------------------------

def _on_node(grid: RadialGrid, s: float) -> int | None:
    x = (s - grid.s_min) / grid.ds
    i = round(x)
    return int(i) if abs(x - i) < 1e-9 else None


def radial_distance(state: MetricState, s1: float, s2: float) -> float:
    """Length of the radial ray between s1 and s2: (1/2) int sqrt(Q'') ds."""
    g = state.grid
    tol = 1e-12 * (g.s_max - g.s_min)
    if not (g.s_min - tol <= s1 <= s2 <= g.s_max + tol):
        raise OutOfRange(f"need s_min <= s1 <= s2 <= s_max, got s1={s1}, s2={s2}")
    state.require_positive()
    if s1 == s2:
        return 0.0
    f = 0.5 * np.sqrt(state.Qpp)
    i1, i2 = _on_node(g, s1), _on_node(g, s2)
    if i1 is not None and i2 is not None:
        if i2 == i1:
            return 0.0
        return float(simpson(f[i1:i2 + 1], dx=g.ds))
    m = max(2, 2 * math.ceil((s2 - s1) / g.ds))
    x = np.linspace(s1, s2, m + 1)
    return float(simpson(CubicSpline(g.nodes, f)(x), x=x))


def distance_profile(state: MetricState, i0: int = 0) -> np.ndarray:
    """Signed radial distance from node i0 to every node."""
    state.require_positive()
    g = state.grid
    f = 0.5 * np.sqrt(state.Qpp)
    cum = cumulative_simpson(f, dx=g.ds, initial=0.0)
    return cum - cum[i0]
