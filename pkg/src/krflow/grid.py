"""Uniform grid in the log-radius s = log|z|^2 and its difference operators.

Interior nodes use centred five-point (fourth order) stencils, the nodes next
to each end use centred three-point stencils, and the end nodes use one-sided
second order stencils.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import GridMismatch, OutOfRange, StencilUnderflow

MIN_NODES = 16

# offsets -2..2
_D1_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_C4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D1_C2 = np.array([0.0, -0.5, 0.0, 0.5, 0.0])
_D2_C2 = np.array([0.0, 1.0, -2.0, 1.0, 0.0])


@dataclass(frozen=True)
class RadialGrid:
    """Nodes s_i = s_min + i*ds, i = 0..N-1."""

    s_min: float
    s_max: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < MIN_NODES:
            raise StencilUnderflow(f"grid needs at least {MIN_NODES} nodes, got {self.N}")
        if not (np.isfinite(self.s_min) and np.isfinite(self.s_max)) or self.s_max <= self.s_min:
            raise OutOfRange(f"invalid grid interval [{self.s_min}, {self.s_max}]")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "s_min", float(self.s_min))
        object.__setattr__(self, "s_max", float(self.s_max))

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / (self.N - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        s = self.s_min + np.arange(self.N) * self.ds
        s.flags.writeable = False
        return s

    def refine(self) -> "RadialGrid":
        """Grid with half the spacing; old nodes are every other new node."""
        return RadialGrid(self.s_min, self.s_max, 2 * self.N - 1)

    def index_of(self, s: float) -> int:
        """Nearest node index to s."""
        if s < self.s_min - 1e-12 * self.ds or s > self.s_max + 1e-12 * self.ds:
            raise OutOfRange(f"s={s} outside [{self.s_min}, {self.s_max}]")
        return int(np.clip(round((s - self.s_min) / self.ds), 0, self.N - 1))

    def collar_mask(self, width: float | None = None) -> np.ndarray:
        """True on nodes at least `width` away from both ends (default 10 ds)."""
        if width is None:
            width = 10.0 * self.ds
        s = self.nodes
        return (s >= self.s_min + width - 1e-9 * self.ds) & (s <= self.s_max - width + 1e-9 * self.ds)

    def check_same(self, other: "RadialGrid") -> None:
        if self != other:
            raise GridMismatch(f"grids differ: {self} vs {other}")

    # stencils ----------------------------------------------------------

    @cached_property
    def stencils(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights W[i, k] multiplying f[i + k - 2] for rows 1..N-2.

        Rows 0 and N-1 are left zero; boundary rows are handled separately
        because their one-sided stencils reach three nodes inward.
        """
        h = self.ds
        w1 = np.zeros((self.N, 5))
        w2 = np.zeros((self.N, 5))
        w1[2:-2] = _D1_C4 / h
        w2[2:-2] = _D2_C4 / h**2
        for i in (1, self.N - 2):
            w1[i] = _D1_C2 / h
            w2[i] = _D2_C2 / h**2
        for w in (w1, w2):
            w.flags.writeable = False
        return w1, w2

    @cached_property
    def operators(self) -> sparse.csr_matrix:
        """Stacked sparse matrix [D1; D2] acting on node values."""
        w1, w2 = self.stencils
        n, h = self.N, self.ds
        rows, cols, vals = [], [], []
        for block, w in ((0, w1), (1, w2)):
            for i in range(1, n - 1):
                for k in range(5):
                    if w[i, k] != 0.0:
                        rows.append(block * n + i)
                        cols.append(i + k - 2)
                        vals.append(w[i, k])
        ends = (
            (0, 0, np.array([-3.0, 4.0, -1.0]) / (2 * h)),
            (0, n - 1, np.array([3.0, -4.0, 1.0]) / (2 * h)),
            (1, 0, np.array([2.0, -5.0, 4.0, -1.0]) / h**2),
            (1, n - 1, np.array([2.0, -5.0, 4.0, -1.0]) / h**2),
        )
        for block, i, w in ends:
            step = 1 if i == 0 else -1
            for k, v in enumerate(w):
                rows.append(block * n + i)
                cols.append(i + step * k)
                vals.append(v)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(2 * n, n))

    def derivatives(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(f', f'') in one sparse product."""
        f = np.asarray(f, dtype=float)
        if f.shape != (self.N,):
            raise GridMismatch(f"table of shape {f.shape} on grid with N={self.N}")
        out = self.operators @ f
        return out[: self.N], out[self.N :]

    def d1(self, f: np.ndarray) -> np.ndarray:
        return self.derivatives(f)[0]

    def d2(self, f: np.ndarray) -> np.ndarray:
        return self.derivatives(f)[1]
