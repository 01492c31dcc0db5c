"""Reference metrics h in radial form.

A U(n)-invariant Kähler metric on a ball or on C^n is fixed by the derivative
xi = P'(s) of its radial potential.  Everything here is expressed through xi
and its s-derivatives:

    rho_h = -log(e^{-ns} xi' xi^{n-1})      (radial Ricci potential)
    Ric(h) = i ddbar rho_h
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import DomainError, OutOfRange

KINDS = ("flat", "complex_hyperbolic", "tabulated")


@dataclass(frozen=True, eq=False)
class Background:
    """Radial reference metric.

    Attributes
    ----------
    n : complex dimension
    kind : "flat", "complex_hyperbolic" or "tabulated"
    k : holomorphic sectional curvature is 2k (complex_hyperbolic only)
    table : (s, xi) samples for tabulated backgrounds
    source : file the table came from, if any
    """

    n: int
    kind: str
    k: float | None = None
    table: tuple | None = field(default=None, repr=False)
    source: str | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"complex dimension must be >= 1, got {self.n}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.kind == "complex_hyperbolic" and not (self.k is not None and self.k < 0):
            raise ValueError("complex_hyperbolic needs k < 0")
        if self.kind == "tabulated":
            s, xi = (np.asarray(a, dtype=float) for a in self.table)
            if s.ndim != 1 or s.shape != xi.shape or s.size < 8:
                raise ValueError("tabulated background needs at least 8 (s, xi) samples")
            if np.any(np.diff(s) <= 0):
                raise ValueError("tabulated s values must be strictly increasing")
            if np.any(xi <= 0):
                raise ValueError("tabulated xi must be positive")

    # constructors -------------------------------------------------------

    @classmethod
    def flat(cls, n: int) -> "Background":
        return cls(n, "flat")

    @classmethod
    def complex_hyperbolic(cls, n: int, k: float) -> "Background":
        return cls(n, "complex_hyperbolic", k=float(k))

    @classmethod
    def kahler_einstein(cls, n: int) -> "Background":
        """Complex hyperbolic ball normalised so that Ric(h) = -h."""
        return cls(n, "complex_hyperbolic", k=-1.0 / (n + 1))

    @classmethod
    def tabulated(cls, n: int, s, xi, source: str | None = None) -> "Background":
        return cls(n, "tabulated", table=(np.asarray(s, float), np.asarray(xi, float)), source=source)

    # descriptors --------------------------------------------------------

    @property
    def label(self) -> str:
        if self.kind == "complex_hyperbolic":
            return f"complex_hyperbolic k={self.k!r}"
        if self.kind == "tabulated":
            return f"tabulated source={self.source}" if self.source else "tabulated"
        return "flat"

    @property
    def s_upper(self) -> float:
        """Supremum of admissible s (the ball boundary for hyperbolic h)."""
        if self.kind == "complex_hyperbolic":
            return 0.0
        if self.kind == "tabulated":
            return float(self.table[0][-1])
        return math.inf

    @property
    def s_lower(self) -> float:
        if self.kind == "tabulated":
            return float(self.table[0][0])
        return -math.inf

    @property
    def einstein_constant(self) -> float | None:
        """E with Ric(h) = E h, or None when h is not Einstein."""
        if self.kind == "flat":
            return 0.0
        if self.kind == "complex_hyperbolic":
            return (self.n + 1) * self.k
        return None

    @cached_property
    def K(self) -> float:
        """sup |Rm(h)| in the orthonormal-frame l2 convention."""
        if self.kind == "flat":
            return 0.0
        if self.kind == "complex_hyperbolic":
            return abs(self.k) * math.sqrt(2.0 * self.n * (self.n + 1))
        from .curvature import rm_norm_from_derivatives

        s = np.linspace(self.s_lower, self.s_upper, 2001)[5:-5]
        u = [self.xi(s), self.xi_p(s), self.xi_pp(s), self.xi_ppp(s)]
        return float(np.max(rm_norm_from_derivatives(self.n, *u)))

    @cached_property
    def _spline(self):
        s, xi = self.table
        return make_interp_spline(s, xi, k=5)

    def _check_domain(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "complex_hyperbolic" and np.any(s >= 0.0):
            raise DomainError("complex hyperbolic background is defined for s < 0 only")
        if self.kind == "tabulated":
            lo, hi = self.s_lower, self.s_upper
            tol = 1e-9 * (hi - lo)
            if np.any(s < lo - tol) or np.any(s > hi + tol):
                raise OutOfRange(f"tabulated background covers [{lo}, {hi}] only")
        return s

    # potential derivatives ---------------------------------------------

    def xi_derivative(self, s, order: int) -> np.ndarray:
        """d^order/ds^order of xi_h."""
        s = self._check_domain(s)
        if self.kind == "flat":
            return np.exp(s)
        if self.kind == "tabulated":
            return self._spline(s, nu=order)
        a = 1.0 / abs(self.k)
        r = np.exp(s)
        q = -np.expm1(s)  # 1 - r
        if order == 0:
            return a * r / q
        if order == 1:
            return a * r / q**2
        if order == 2:
            return a * r * (1.0 + r) / q**3
        if order == 3:
            return a * r * (1.0 + 4.0 * r + r * r) / q**4
        raise ValueError("order must be 0..3")

    def xi(self, s) -> np.ndarray:
        return self.xi_derivative(s, 0)

    def xi_p(self, s) -> np.ndarray:
        return self.xi_derivative(s, 1)

    def xi_pp(self, s) -> np.ndarray:
        return self.xi_derivative(s, 2)

    def xi_ppp(self, s) -> np.ndarray:
        return self.xi_derivative(s, 3)

    # Ricci potential ------------------------------------------------------

    def rho(self, s) -> np.ndarray:
        s = self._check_domain(s)
        n = self.n
        if self.kind == "flat":
            return np.zeros_like(s)
        if self.kind == "complex_hyperbolic":
            return -n * math.log(1.0 / abs(self.k)) + (n + 1) * np.log(-np.expm1(s))
        return -(-n * s + np.log(self.xi_p(s)) + (n - 1) * np.log(self.xi(s)))

    def rho_p(self, s) -> np.ndarray:
        s = self._check_domain(s)
        n = self.n
        if self.kind == "flat":
            return np.zeros_like(s)
        if self.kind == "complex_hyperbolic":
            return -(n + 1) * np.exp(s) / -np.expm1(s)
        x0, x1, x2 = self.xi(s), self.xi_p(s), self.xi_pp(s)
        return n - x2 / x1 - (n - 1) * x1 / x0

    def rho_pp(self, s) -> np.ndarray:
        s = self._check_domain(s)
        n = self.n
        if self.kind == "flat":
            return np.zeros_like(s)
        if self.kind == "complex_hyperbolic":
            return -(n + 1) * np.exp(s) / np.expm1(s) ** 2
        x0, x1, x2, x3 = self.xi(s), self.xi_p(s), self.xi_pp(s), self.xi_ppp(s)
        return -(x3 * x1 - x2 * x2) / x1**2 - (n - 1) * (x2 * x0 - x1 * x1) / x0**2
