"""Constants ledger and the doubling schedule (t_k, R_k) of the extension step.

All dimensional constants of the cited estimates are plain parameters with
default 1; only the dependency structure and the arithmetic are fixed here.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveRadius, RangeError

MAX_STEPS = 10_000_000

# (name, formula, inputs) in evaluation order
DEPENDENCIES = (
    ("Lambda", "max(lambda, 2 C0 lambda^c1)", ("lambda", "C0", "c1")),
    ("mu", "sqrt(1 + alpha / (C1_curv + beta_n Lambda^4 b)) - 1", ("alpha", "C1_curv", "beta_n", "Lambda", "b")),
    ("a", "max(2 B (1 + mu)^2, n log(Lambda / alpha))", ("B", "mu", "n", "Lambda", "alpha")),
    ("sigma", "max(1, T_tilde^(-1/2), T_hat^(-1/2))", ("T_tilde", "T_hat")),
)


@dataclass(frozen=True)
class ConstantsLedger:
    n: int
    lam: float
    C0: float
    c1: float
    alpha: float
    beta_n: float
    b: float
    C1_curv: float
    B: float
    K: float
    T_tilde: float
    T_hat: float
    Lambda: float
    mu: float
    a: float
    sigma: float
    order: tuple = field(default=tuple(d[0] for d in DEPENDENCIES), repr=False)

    @property
    def terminal_time(self) -> float:
        return self.sigma**-2 * (1.0 + self.mu) ** -2

    def rows(self) -> list:
        """(name, value, formula) for primitives then derived constants."""
        prim = [("n", self.n, "primitive"), ("lambda", self.lam, "primitive")]
        prim += [(k, getattr(self, k), "primitive")
                 for k in ("C0", "c1", "alpha", "beta_n", "b", "C1_curv", "B", "K", "T_tilde", "T_hat")]
        derived = [(name, getattr(self, name), formula) for name, formula, _ in DEPENDENCIES]
        derived.append(("terminal_time", self.terminal_time, "sigma^-2 (1 + mu)^-2"))
        return prim + derived


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise RangeError(message)


def derive(lam: float, n: int = 2, C0: float = 1.0, c1: float = 1.0, alpha: float = 1.0,
           beta_n: float = 1.0, b: float = 1.0, C1_curv: float = 1.0, B: float = 1.0,
           K: float = 1.0, T_tilde: float = 1.0, T_hat: float = 1.0) -> ConstantsLedger:
    """Evaluate the derived constants from the primitives."""
    vals = dict(lam=lam, C0=C0, c1=c1, alpha=alpha, beta_n=beta_n, b=b, C1_curv=C1_curv,
                B=B, K=K, T_tilde=T_tilde, T_hat=T_hat)
    for k, v in vals.items():
        _require(isinstance(v, (int, float)) and math.isfinite(v), f"{k} must be a finite number")
    _require(int(n) == n and n >= 1, "n must be a positive integer")
    _require(lam >= 1, "lambda must be >= 1")
    _require(C0 >= 1, "C0 must be >= 1")
    _require(c1 >= 1, "c1 must be >= 1")
    _require(0 < alpha <= 1, "alpha must lie in (0, 1]")
    for k in ("beta_n", "b", "C1_curv", "B", "T_tilde", "T_hat"):
        _require(vals[k] > 0, f"{k} must be positive")
    _require(K >= 0, "K must be >= 0")

    Lambda = max(lam, 2.0 * C0 * lam**c1)
    mu = math.sqrt(1.0 + alpha / (C1_curv + beta_n * Lambda**4 * b)) - 1.0
    _require(mu > 0, "mu underflowed to zero")
    a = max(2.0 * B * (1.0 + mu) ** 2, n * math.log(Lambda / alpha))
    sigma = max(1.0, T_tilde**-0.5, T_hat**-0.5)
    return ConstantsLedger(int(n), float(lam), float(C0), float(c1), float(alpha), float(beta_n),
                           float(b), float(C1_curv), float(B), float(K), float(T_tilde),
                           float(T_hat), Lambda, mu, a, sigma)


@dataclass(frozen=True, eq=False)
class Schedule:
    """t_k, R_k for k = 0..k_max, where t_{k_max} < sigma^-2 <= t_{k_max + 1}.

    R_closed_stated and R_closed_recursion are the two closed forms at k_max;
    R_case1_bound is R - 4 Lambda mu / (1 + mu).
    """

    t0: float
    R: float
    mu: float
    Lambda: float
    sigma: float
    t: np.ndarray
    R_k: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.t) - 1

    @property
    def terminal_time(self) -> float:
        return self.sigma**-2 * (1.0 + self.mu) ** -2

    @property
    def terminal_radius(self) -> float:
        return float(self.R - 4.0 * self.Lambda * self.mu / (1.0 + self.mu))

    @property
    def R_inf(self) -> float:
        return float(np.min(self.R_k))

    def closed_form_t(self, k):
        return self.t0 * (1.0 + self.mu) ** (2 * np.asarray(k))

    def closed_form_R(self, k, stated: bool = False):
        """R - 4 Lambda sigma mu^-1 sqrt(t_k) [1 - (1+mu)^-k], times (1+mu) for the stated form."""
        k = np.asarray(k)
        m = self.mu
        val = 4.0 * self.Lambda * self.sigma / m * np.sqrt(self.closed_form_t(k)) * (1.0 - (1.0 + m) ** (-k))
        return self.R - (1.0 + m) * val if stated else self.R - val

    @property
    def R_closed_recursion(self) -> float:
        return float(self.closed_form_R(self.k_max))

    @property
    def R_closed_stated(self) -> float:
        return float(self.closed_form_R(self.k_max, stated=True))

    @property
    def R_case1_bound(self) -> float:
        return self.terminal_radius

    def variants(self) -> dict:
        rec = self.R_inf
        out = {
            "recursion_inf": rec,
            "recursion_closed_form": self.R_closed_recursion,
            "stated_closed_form": self.R_closed_stated,
            "stated_case1_bound": self.R_case1_bound,
        }
        tol = 1e-9 * max(1.0, abs(rec))
        out["closed_form_discrepancy"] = abs(self.R_closed_stated - rec) > tol
        out["case1_bound_violated"] = rec < self.R_case1_bound - tol
        return out


def build_schedule(ledger: ConstantsLedger | None = None, t0: float = 1e-4, R: float = 10.0, *,
                   mu: float | None = None, Lambda: float | None = None,
                   sigma: float | None = None) -> Schedule:
    """Iterate t_k = t_{k-1}(1+mu)^2, R_k = R_{k-1} - 4 Lambda sigma sqrt(t_{k-1}).

    Stops at the first k with t_{k+1} >= sigma^-2.  Explicit mu, Lambda,
    sigma override the ledger; without a ledger they default to Lambda =
    sigma = 1.
    """
    mu = mu if mu is not None else (ledger.mu if ledger else None)
    Lambda = Lambda if Lambda is not None else (ledger.Lambda if ledger else 1.0)
    sigma = sigma if sigma is not None else (ledger.sigma if ledger else 1.0)
    _require(mu is not None and mu > 0 and math.isfinite(mu), "mu must be positive")
    _require(Lambda > 0 and sigma >= 1, "need Lambda > 0 and sigma >= 1")
    _require(R > 0 and math.isfinite(R), "R must be positive")
    horizon = sigma**-2
    _require(0 < t0 < horizon, f"t0 must lie in (0, sigma^-2 = {horizon})")
    q = (1.0 + mu) ** 2
    steps = math.floor(math.log(horizon / t0) / math.log(q)) + 2
    _require(steps <= MAX_STEPS, f"schedule needs about {steps} steps; increase t0 or mu")
    t = t0 * np.cumprod(np.concatenate([[1.0], np.full(steps, q)]))
    k_max = int(np.argmax(t >= horizon)) - 1  # last k with t_k < sigma^-2
    t = t[: k_max + 1]
    R_k = R - np.concatenate([[0.0], np.cumsum(4.0 * Lambda * sigma * np.sqrt(t[:-1]))])
    for a in (t, R_k):
        a.flags.writeable = False
    if np.any(R_k <= 0):
        k = int(np.argmax(R_k <= 0))
        warnings.warn(NonPositiveRadius(f"R_{k} = {R_k[k]:.6g} <= 0 before the terminal step"),
                      stacklevel=2)
    return Schedule(float(t0), float(R), float(mu), float(Lambda), float(sigma), t, R_k)
