"""Builders for initial metrics omega_0 on a grid.

All profiles are written as xi0 = xi_h * m(s) plus corrections, so that the
eigenvalue ratios against h are explicit:

    lambda_sph / lambda_sph(h) = xi0 / xi_h
    lambda_rad / lambda_rad(h) = xi0' / xi_h'
"""

import math

import numpy as np
from scipy import integrate, optimize

from .background import Background
from .curvature import curvature
from .geometry import MetricState, background_tables, equivalence_band
from .grid import RadialGrid
from .tables import read_two_column


def homothety(grid: RadialGrid, bg: Background, c: float) -> MetricState:
    return MetricState.from_background(grid, bg, c)


def _from_multiplier(grid, bg, m, m_p) -> MetricState:
    """xi0 = xi_h m with exact derivative."""
    bt = background_tables(bg, grid)
    return MetricState(grid, bg, bt.xi * m, bt.xi_p * m + bt.xi * m_p)


def bump(grid: RadialGrid, bg: Background, center: float, width: float,
         amplitude: float, base: float = 1.0) -> MetricState:
    """xi0 = xi_h (base + amplitude exp(-((s - center)/width)^2)).

    Homothetic to base*h away from the bump, so both pinned ends apply.
    """
    x = (grid.nodes - center) / width
    psi = np.exp(-x * x)
    return _from_multiplier(grid, bg, base + amplitude * psi, amplitude * (-2.0 * x / width) * psi)


def band_safe_amplitude(width: float, base: float = 1.5, half_band: float = 0.45) -> float:
    """Amplitude keeping a Gaussian bump inside base +- half_band on flat h.

    The radial ratio is base + a (psi + psi'), and |psi + psi'| <= 1 + sqrt(2/e)/width.
    """
    return half_band / (1.0 + math.sqrt(2.0 / math.e) / width)


def curvature_bump(grid: RadialGrid, bg: Background, target: float, center: float = 0.0,
                   base: float = 1.5, half_band: float = 0.45) -> MetricState:
    """Gaussian bump whose width is tuned so that sup |Rm(g0)| = target."""

    def make(width):
        return bump(grid, bg, center, width, band_safe_amplitude(width, base, half_band), base)

    def excess(logw):
        return math.log(curvature(make(math.exp(logw))).sup_norm / target)

    lo, hi = math.log(4.0 * grid.ds), math.log(0.25 * (grid.s_max - grid.s_min))
    if excess(lo) < 0 or excess(hi) > 0:
        raise ValueError(f"curvature {target} not reachable with widths on this grid")
    logw = optimize.brentq(excess, lo, hi, xtol=1e-10)
    return make(math.exp(logw))


# kinked profile and its mollifications --------------------------------------

def _kink(x):
    return np.where(np.abs(x) < 1.0, (1.0 - x * x) ** 3, 0.0)


def _kink_p(x):
    return np.where(np.abs(x) < 1.0, -6.0 * x * (1.0 - x * x) ** 2, 0.0)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _mollify(x, delta, panels=400):
    """(kink * G_delta)(x) and its derivative; G_delta is a Gaussian of std delta.

    Composite Gauss-Legendre over the support [-1, 1] of the kink.
    """
    edges = np.linspace(-1.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    y = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    kern = np.exp(-0.5 * ((x[:, None] - y[None, :]) / delta) ** 2) / (delta * math.sqrt(2 * math.pi))
    return kern @ (w * _kink(y)), kern @ (w * _kink_p(y))


def kink(grid: RadialGrid, bg: Background, center: float, width: float, amplitude: float,
         base: float = 1.5, delta: float = 0.0) -> MetricState:
    """Compactly supported C^2 kink (1 - x^2)^3, optionally mollified.

    With delta = 0 the metric is continuous with a jump in its second
    derivative at s = center +- width; delta > 0 (in units of s) gives the
    Gaussian mollification of the same profile.
    """
    x = (grid.nodes - center) / width
    if delta == 0.0:
        psi, dpsi = _kink(x), _kink_p(x)
    else:
        psi, dpsi = _mollify(x, delta / width, panels=max(200, int(40 * width / delta)))
    return _from_multiplier(grid, bg, base + amplitude * psi, amplitude * dpsi / width)


def band_distance(state: MetricState, reference: MetricState) -> float:
    """Smallest d with (1-d) ref <= g <= (1+d) ref."""
    band = equivalence_band(state, reference)
    return max(1.0 - band.c_lo, band.c_hi - 1.0)


def mollified_kink_for_band(grid: RadialGrid, bg: Background, d: float, center: float,
                            width: float, amplitude: float, base: float = 1.5):
    """(mollified state, kinked reference, delta) with band distance d."""
    ref = kink(grid, bg, center, width, amplitude, base)

    def gap(log_delta):
        st = kink(grid, bg, center, width, amplitude, base, math.exp(log_delta))
        return math.log(band_distance(st, ref) / d)

    lo, hi = math.log(grid.ds), math.log(width)
    log_delta = optimize.brentq(gap, lo, hi, xtol=1e-8)
    delta = math.exp(log_delta)
    return kink(grid, bg, center, width, amplitude, base, delta), ref, delta


# degenerate plateau -----------------------------------------------------------

def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def plateau_weight(s, p1: float, p2: float, tau: float, c_right: float):
    """Weight w with xi0' = xi_h' w: 1 left of p1 - tau, 0 on [p1, p2], c_right beyond p2 + tau."""
    s = np.asarray(s, dtype=float)
    left = 1.0 - _smoothstep((s - (p1 - tau)) / tau)
    right = c_right * _smoothstep((s - p2) / tau)
    return np.where(s <= p1, left, np.where(s >= p2, right, 0.0))


def plateau(grid: RadialGrid, bg: Background, p1: float, p2: float, tau: float) -> MetricState:
    """Degenerate omega_0 <= omega_h vanishing in the radial direction on [p1, p2].

    omega_0 = h left of p1 - tau and omega_0 = c h right of p2 + tau, with c
    fixed so that xi0 = c xi_h exactly there; the state carries the
    degenerate flag.
    """
    if not (grid.s_min < p1 - tau and p1 < p2 and p2 + tau < grid.s_max):
        raise ValueError("plateau and transitions must lie inside the grid")
    a, b = p1 - tau, p2 + tau
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)

    left = integrate.quad(lambda s: bg.xi_p(s) * plateau_weight(s, p1, p2, tau, 0.0), a, p1, **opts)[0]
    right = integrate.quad(lambda s: bg.xi_p(s) * _smoothstep((s - p2) / tau), p2, b, **opts)[0]
    c = (float(bg.xi(a)) + left) / (float(bg.xi(b)) - right)

    s = grid.nodes
    bt = background_tables(bg, grid)
    w = plateau_weight(s, p1, p2, tau, c)
    xi0 = np.empty_like(s)
    for i, si in enumerate(s):
        if si <= a:
            xi0[i] = bt.xi[i]
        elif si >= b:
            xi0[i] = c * bt.xi[i]
        else:
            hi = min(si, p1)
            val = float(bg.xi(a)) + integrate.quad(
                lambda x: bg.xi_p(x) * plateau_weight(x, p1, p2, tau, c), a, hi, **opts)[0]
            if si > p2:
                val += integrate.quad(
                    lambda x: bg.xi_p(x) * plateau_weight(x, p1, p2, tau, c), p2, si, **opts)[0]
            xi0[i] = val
    return MetricState(grid, bg, xi0, bt.xi_p * w, degenerate=True)


def tabulated(grid: RadialGrid, bg: Background, path: str) -> MetricState:
    """xi0 from a two-column (s, xi0) file, interpolated by a quintic spline."""
    from scipy.interpolate import make_interp_spline

    s, xi = read_two_column(path)
    if grid.s_min < s[0] - 1e-12 or grid.s_max > s[-1] + 1e-12:
        raise ValueError(f"table {path} does not cover the grid")
    spl = make_interp_spline(s, xi, k=5)
    return MetricState(grid, bg, spl(grid.nodes), spl(grid.nodes, nu=1))
