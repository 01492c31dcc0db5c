"""Cutoff, exhaustion and conformal stretch used to localise the flow.

The one-dimensional profile is

    f(s) = 0                              for s <= 1 - kappa
    f(s) = -log(1 - ((s - 1 + kappa)/kappa)^2)   on (1 - kappa, 1)

and the cutoff is frakF(s) = int_0^s phi(tau) f'(tau) dtau, where phi is a
quintic smoothstep from 0 on (-inf, 1 - kappa + kappa^2] to 1 on
[1 - kappa + 2 kappa^2, 1).  Radial (1,1)-forms are measured against h by
their eigenvalues u''/xi_h' (radial) and u'/xi_h (spherical), and
|du|_h^2 = u'^2 / xi_h'.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from .background import Background
from .curvature import components_from_derivatives
from .errors import BumpBoundViolation, CertificationFailure, DomainError
from .geometry import MetricState, background_tables, equivalence_band
from .grid import RadialGrid

SMOOTHSTEP_MAX_SLOPE = 1.875
DEFAULT_SAMPLES = 10_000
LIMIT_GAP = 1e-8


# profile f -------------------------------------------------------------------

def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not 0.0 < kappa < 0.125:
        raise DomainError(f"kappa must lie in (0, 1/8), got {kappa}")
    return kappa


def _x(kappa, s):
    return (s - (1.0 - kappa)) / kappa  # exactly 0 at s = 1 - kappa


def eval_f(kappa: float, s):
    """f(s); +inf once 1 - x^2 underflows.  Raises DomainError for s >= 1."""
    kappa = _check_kappa(kappa)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr >= 1.0):
        raise DomainError("f is defined for s < 1 only")
    x = _x(kappa, s_arr)
    gap = np.where(x > 0.0, (1.0 - x) * (1.0 + x), 1.0)
    with np.errstate(divide="ignore"):
        out = np.where(gap > 0.0, -np.log(gap), np.inf)
    return float(out) if np.ndim(s) == 0 else out


def f_derivatives(kappa: float, s) -> tuple[np.ndarray, np.ndarray]:
    """(f', f'') for s < 1."""
    s = np.asarray(s, dtype=float)
    x = _x(kappa, s)
    inside = x > 0.0
    gap = np.where(inside, (1.0 - x) * (1.0 + x), 1.0)
    f1 = np.where(inside, 2.0 * x / (kappa * gap), 0.0)
    f2 = np.where(inside, 2.0 * (1.0 + x * x) / (kappa * kappa * gap * gap), 0.0)
    return f1, f2


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def smoothstep_derivatives(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    d1 = np.where(inside, 30.0 * u * u * (1.0 - u) ** 2, 0.0)
    d2 = np.where(inside, 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u), 0.0)
    return d1, d2


# cutoff family ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CutoffFamily:
    """f, phi and frakF for one kappa; arrays in, arrays out."""

    kappa: float
    frakF_a2: float = field(repr=False)

    @property
    def a0(self) -> float:
        """frakF vanishes up to here."""
        return 1.0 - self.kappa

    @property
    def a1(self) -> float:
        return 1.0 - self.kappa + self.kappa**2

    @property
    def a2(self) -> float:
        return 1.0 - self.kappa + 2.0 * self.kappa**2

    def f(self, s):
        return eval_f(self.kappa, s)

    def phi(self, s):
        return smoothstep((np.asarray(s, dtype=float) - self.a1) / self.kappa**2)

    def phi_derivatives(self, s):
        w = self.kappa**2
        d1, d2 = smoothstep_derivatives((np.asarray(s, dtype=float) - self.a1) / w)
        return d1 / w, d2 / (w * w)

    def integrand(self, s):
        return self.phi(s) * f_derivatives(self.kappa, s)[0]

    def frakF(self, s):
        """frakF(s): zero up to a1, quadrature across the transition, closed form beyond."""
        s = np.asarray(s, dtype=float)
        if np.any(s >= 1.0):
            raise DomainError("frakF is defined for s < 1 only")
        out = np.zeros_like(s)
        mid = (s > self.a1) & (s < self.a2)
        for i in zip(*np.nonzero(mid)):
            out[i] = _transition_integral(self, float(s[i]))
        far = s >= self.a2
        if np.any(far):
            out[far] = self.frakF_a2 + eval_f(self.kappa, s[far]) - eval_f(self.kappa, self.a2)
        return out

    def frakF_quadrature(self, s: float) -> float:
        """frakF(s) by adaptive quadrature from 0 (reference path)."""
        if s >= 1.0:
            raise DomainError("frakF is defined for s < 1 only")
        if s <= self.a1:
            return 0.0
        pts = [p for p in (self.a2,) if self.a1 < p < s]
        return integrate.quad(self.integrand, self.a1, s, points=pts or None,
                              epsabs=1e-13, epsrel=1e-12, limit=200)[0]

    def derivatives(self, s):
        """(frakF', frakF'')."""
        f1, f2 = f_derivatives(self.kappa, s)
        p0 = self.phi(s)
        p1, _ = self.phi_derivatives(s)
        return p0 * f1, p1 * f1 + p0 * f2

    def weighted_sum(self, s):
        """sum_{k=1,2} e^{-k frakF} |frakF^(k)|."""
        big = self.frakF(s)
        d1, d2 = self.derivatives(s)
        e = np.exp(-big)
        return e * np.abs(d1) + e * e * np.abs(d2)


def _transition_integral(fam: CutoffFamily, s: float) -> float:
    return integrate.quad(fam.integrand, fam.a1, s, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def cutoff_samples(kappa: float, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Uniform samples on [0, 1 - 1e-8] refined geometrically towards s = 1."""
    uniform = np.linspace(0.0, 1.0 - LIMIT_GAP, samples)
    tail = 1.0 - np.geomspace(kappa, LIMIT_GAP, samples // 4)
    return np.unique(np.concatenate([uniform, tail]))


def build_cutoff(kappa: float, samples: int = DEFAULT_SAMPLES) -> CutoffFamily:
    """Cutoff family for kappa, with its invariants re-checked on samples."""
    kappa = _check_kappa(kappa)
    probe = CutoffFamily(kappa, 0.0)
    fam = CutoffFamily(kappa, _transition_integral(probe, probe.a2))
    s = cutoff_samples(kappa, samples)
    p1, _ = fam.phi_derivatives(s)
    if np.max(p1) > 2.0 / kappa**2 or np.min(p1) < 0.0:
        raise BumpBoundViolation(f"phi' range [{np.min(p1)}, {np.max(p1)}] exceeds [0, 2/kappa^2]")
    big = fam.frakF(s)
    d1, _ = fam.derivatives(s)
    if np.any(big[s <= fam.a0] != 0.0) or np.any(big < 0.0) or np.any(d1 < 0.0):
        raise CertificationFailure("frakF must vanish up to 1 - kappa and be nonnegative and nondecreasing")
    return fam


def b_of_kappa(family: CutoffFamily, samples: int = DEFAULT_SAMPLES) -> float:
    """Measured sup of sum_k e^{-k frakF} |frakF^(k)| over dense samples."""
    s = cutoff_samples(family.kappa, samples)
    return float(np.max(family.weighted_sum(s)))


def cutoff_table(family: CutoffFamily, samples: int = 401) -> dict:
    """Columns s, f, phi_bump, frakF, weighted_sum on [0, 1) for export."""
    s = np.concatenate([np.linspace(0.0, family.a0, samples // 4, endpoint=False),
                        1.0 - np.geomspace(family.kappa, 1e-6, samples - samples // 4)])
    return {
        "s": s,
        "f": family.f(s),
        "phi_bump": family.phi(s),
        "frakF": family.frakF(s),
        "weighted_sum": family.weighted_sum(s),
    }


# exhaustion ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Exhaustion:
    """rho = 1 + c0 sqrt(1 + d^2), d the h-distance from the origin.

    grad_sq and hess_norm are |d rho|_h^2 and the Hilbert-Schmidt norm of
    i ddbar rho against h at the grid nodes; bound is their summed sup.
    """

    background: Background
    grid: RadialGrid
    c0: float
    rho: np.ndarray
    rho_p: np.ndarray
    rho_pp: np.ndarray
    grad_sq: np.ndarray
    hess_norm: np.ndarray
    bound: float

    def __call__(self, s):
        """rho at arbitrary s inside the grid."""
        d, _, _ = _distance_from_origin(self.background, self.grid, np.asarray(s, dtype=float))
        return 1.0 + self.c0 * np.sqrt(1.0 + d * d)

    def derivatives(self, s):
        d, d1, d2 = _distance_from_origin(self.background, self.grid, np.asarray(s, dtype=float))
        return _sqrt_profile(self.c0, d, d1, d2)


def _distance_from_origin(bg: Background, grid: RadialGrid, s):
    """(d, d', d'') with d = (1/2) int_{-inf}^s sqrt(xi_h')."""
    xp, xpp = bg.xi_p(s), bg.xi_pp(s)
    d1 = 0.5 * np.sqrt(xp)
    d2 = xpp / (4.0 * np.sqrt(xp))
    if bg.kind == "flat":
        d = np.exp(0.5 * s)
    elif bg.kind == "complex_hyperbolic":
        d = np.sqrt(1.0 / abs(bg.k)) * np.arctanh(np.exp(0.5 * s))
    else:
        # below the table h is treated as Euclidean-like: d(s_min) ~ sqrt(xi'(s_min))
        s0 = max(grid.s_min, bg.s_lower)
        d0 = math.sqrt(float(bg.xi_p(s0)))
        d = np.empty_like(np.atleast_1d(s))
        for i, si in enumerate(np.atleast_1d(s)):
            d[i] = d0 + integrate.quad(lambda x: 0.5 * math.sqrt(float(bg.xi_p(x))), s0, si)[0]
        d = d.reshape(np.shape(s))
    return d, d1, d2


def _sqrt_profile(c0, d, d1, d2):
    root = np.sqrt(1.0 + d * d)
    r1 = c0 * d * d1 / root
    r2 = c0 * ((d1 * d1 + d * d2) / root - (d * d1) ** 2 / root**3)
    return r1, r2


def form_norms(bg: Background, grid: RadialGrid, u1, u2):
    """(|du|_h^2, |i ddbar u|_h) for a radial function with u' = u1, u'' = u2."""
    bt = background_tables(bg, grid)
    grad_sq = u1 * u1 / bt.xi_p
    hess = np.sqrt((u2 / bt.xi_p) ** 2 + (bg.n - 1) * (u1 / bt.xi) ** 2)
    return grad_sq, hess


def build_exhaustion(bg: Background, grid: RadialGrid, safety: float = 0.999) -> Exhaustion:
    """Exhaustion with sup(|d rho|^2 + |i ddbar rho|) <= 1 on the grid."""
    s = grid.nodes
    d, d1, d2 = _distance_from_origin(bg, grid, s)
    g1, g2 = _sqrt_profile(1.0, d, d1, d2)
    grad_sq, hess = form_norms(bg, grid, g1, g2)
    big_g, big_h = float(np.max(grad_sq)), float(np.max(hess))
    if not (math.isfinite(big_g) and math.isfinite(big_h)):
        raise CertificationFailure("exhaustion derivatives are not finite on the grid")
    # c0^2 G + c0 H <= 1 with G, H the separate sups gives a bracket for the
    # largest c0 whose pointwise bound is at most `safety`
    if big_g > 0:
        lo = (-big_h + math.sqrt(big_h * big_h + 4.0 * big_g)) / (2.0 * big_g)
    else:
        lo = 1.0 / big_h
    def excess(c):
        return float(np.max(c * c * grad_sq + c * hess)) - safety
    hi = lo
    while excess(hi) < 0:
        hi *= 2.0
    c0 = optimize.brentq(excess, safety * lo, hi, xtol=1e-14) if excess(safety * lo) < 0 else safety * lo
    rho = 1.0 + c0 * np.sqrt(1.0 + d * d)
    r1, r2 = c0 * g1, c0 * g2
    grad_sq, hess = form_norms(bg, grid, r1, r2)
    bound = float(np.max(grad_sq + hess))
    if not bound <= 1.0 or np.any(np.diff(rho) <= 0) or np.min(rho) < 1.0:
        raise CertificationFailure(f"exhaustion bound {bound} not certified")
    for a in (rho, r1, r2, grad_sq, hess):
        a.flags.writeable = False
    return Exhaustion(bg, grid, c0, rho, r1, r2, grad_sq, hess, bound)


# conformal stretch -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DivergenceProbe:
    """Distance from the level u = 1 - kappa to u = 1 - delta.

    The growth is logarithmic in 1/delta; slope is d(distance)/d log(1/delta)
    from the last two probes and log10_delta_threshold the decimal log of the
    delta at which the extrapolated distance reaches the threshold.
    """

    deltas: np.ndarray
    distances: np.ndarray
    slope: float
    threshold: float
    log10_delta_threshold: float

    @property
    def diverges(self) -> bool:
        inc = np.diff(self.distances)
        return bool(self.slope > 0 and np.all(inc > 0))

    @property
    def reached(self) -> bool:
        return bool(self.distances[-1] >= self.threshold)


@dataclass(frozen=True, eq=False)
class StretchReport:
    F: np.ndarray
    u: np.ndarray
    identity_mask: np.ndarray
    identity_exact: bool
    probe: DivergenceProbe
    sup_rm_original: float
    sup_rm_stretched: float
    b: float
    measured_constant: float


def _stretch_argument(rho, R, shift, scale, offset):
    scale = R + 1.0 if scale is None else scale
    return offset + (rho - shift) / scale, scale


def conformal_stretch(state: MetricState, R: float, family: CutoffFamily,
                      exhaustion: Exhaustion | None = None, shift: float = 0.0,
                      scale: float | None = None, offset: float = 0.0,
                      threshold: float = 1e3, deltas=None):
    """e^{2F} g with F = frakF(offset + (rho - shift)/scale) on {u < 1}.

    The defaults give F = frakF(rho/(R+1)).  Returns the stretched state on
    the prefix of the grid where it is defined and a StretchReport.
    """
    state.require_positive()
    grid, bg = state.grid, state.background
    ex = exhaustion if exhaustion is not None else build_exhaustion(bg, grid)
    grid.check_same(ex.grid)
    if not (math.isfinite(R) and R >= ex.rho[0] + 1.0):
        raise DomainError(f"R must satisfy R >= rho(s_min) + 1 = {ex.rho[0] + 1.0}")
    u, scl = _stretch_argument(ex.rho, R, shift, scale, offset)
    inside = u < 1.0
    m = int(np.argmin(inside)) if not inside.all() else grid.N
    if inside.all() or m < 16 or u[0] >= family.a0:
        raise DomainError(f"R={R}: the level u = 1 must lie inside the grid past 16 nodes")
    sub = RadialGrid(grid.s_min, float(grid.nodes[m - 1]), m)
    uu = u[:m]
    F = family.frakF(uu)
    factor = np.where(F == 0.0, 1.0, np.exp(2.0 * F))
    qp, qpp = state.Qp[:m], state.Qpp[:m]
    stretched = MetricState(sub, bg, factor * qp, factor * qpp)
    ident = uu <= family.a0
    exact = bool(np.all(stretched.xi0[ident] == qp[ident]) and np.all(stretched.xi0_p[ident] == qpp[ident]))

    probe = _divergence_probe(state, ex, family, R, shift, scale, offset, threshold, deltas)

    # curvature of e^{2F} g from that of g and the Hessian of F
    a, b, c, d = components_from_derivatives(qp, qpp, grid.d1(state.Qpp)[:m], grid.d2(state.Qpp)[:m])
    n = state.n
    k = n - 1
    rm_sq = a * a + 4 * k * b * b + k * c * c + 2 * k * (k - 1) * d * d
    ric_rad = a + k * b
    ric_sph = b + c + (k - 1) * d
    p1, p2 = family.derivatives(uu)
    u1 = ex.rho_p[:m] / scl
    u2 = ex.rho_pp[:m] / scl
    F1 = p1 * u1
    F2 = p2 * u1 * u1 + p1 * u2
    f_rad, f_sph = F2 / qpp, F1 / qp
    t_sq = (rm_sq - 4.0 * (ric_rad * f_rad + k * ric_sph * f_sph)
            + 4.0 * n * (f_rad**2 + k * f_sph**2))
    rm_hat = np.exp(-2.0 * F) * np.sqrt(np.maximum(t_sq, 0.0))
    core = np.zeros(m, dtype=bool)
    core[4:-4] = True
    sup_g = float(np.max(np.sqrt(rm_sq)[core]))
    sup_hat = float(np.max(rm_hat[core]))
    bval = b_of_kappa(family)
    band = equivalence_band(state, bg)
    unit = bval * (1.0 / scl + 1.0 / scl**2) / band.c_lo
    measured = max(0.0, sup_hat - sup_g) / unit
    report = StretchReport(F, uu, ident, exact, probe, sup_g, sup_hat, bval, measured)
    return stretched, report


def _divergence_probe(state, ex, family, R, shift, scale, offset, threshold, deltas):
    grid = state.grid
    qpp = CubicSpline(grid.nodes, state.Qpp)

    def u_of(s):
        return _stretch_argument(ex(s), R, shift, scale, offset)[0]

    def level(v):
        return optimize.brentq(lambda s: u_of(s) - v, grid.s_min, grid.s_max, xtol=1e-15, rtol=1e-15)

    def integrand(s):
        uv = min(float(u_of(s)), 1.0 - 1e-300)
        return 0.5 * math.exp(float(family.frakF(np.array([uv]))[0])) * math.sqrt(max(float(qpp(s)), 0.0))

    if deltas is None:
        deltas = np.geomspace(1e-1 * family.kappa, 1e-6, 6)
    deltas = np.asarray(deltas, dtype=float)
    start = level(family.a0)
    dist, total, prev = [], 0.0, start
    for delta in deltas:
        end = level(1.0 - delta)
        total += integrate.quad(integrand, prev, end, limit=200, epsrel=1e-10)[0]
        dist.append(total)
        prev = end
    dist = np.array(dist)
    x = np.log(1.0 / deltas)
    slope = float((dist[-1] - dist[-2]) / (x[-1] - x[-2]))
    if dist[-1] >= threshold:
        dstar = math.log10(deltas[np.argmax(dist >= threshold)])
    elif slope > 0:
        dstar = -(x[-1] + (threshold - dist[-1]) / slope) / math.log(10.0)
    else:
        dstar = -math.inf
    return DivergenceProbe(deltas, dist, slope, threshold, dstar)
