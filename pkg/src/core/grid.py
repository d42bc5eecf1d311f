"""
Value types for functions on integer-offset grids.

A point is carried as (base, integer offset); every t - s is an integer
subtraction, so indices never drift.
"""
import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from src.core.errors import GridMismatch, InadmissibleSpec, InsufficientDomain, OutOfDomain

INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class GridPoint:
    base: float
    n: int

    @property
    def value(self) -> float:
        return self.base + self.n

    def __add__(self, k: int) -> "GridPoint":
        return GridPoint(self.base, self.n + int(k))

    def __sub__(self, other: Union["GridPoint", int]):
        if isinstance(other, GridPoint):
            if other.base != self.base:
                raise GridMismatch(f"points on different bases {self.base} and {other.base}")
            return self.n - other.n
        return GridPoint(self.base, self.n - int(other))


PointLike = Union[GridPoint, int]


def offset_of(p: PointLike, base: float = None) -> int:
    """Integer offset of a point; plain ints are already offsets."""
    if isinstance(p, GridPoint):
        if base is not None and p.base != base:
            raise GridMismatch(f"point based at {p.base}, grid based at {base}")
        return p.n
    if isinstance(p, (int, np.integer)):
        return int(p)
    raise TypeError(f"expected GridPoint or int offset, got {type(p).__name__}")


def integer_gap(a: float, b: float) -> int:
    """b - a as an int, rejecting non-integer or non-positive gaps."""
    gap = b - a
    rounded = round(gap)
    if abs(gap - rounded) > INTEGER_TOL:
        raise GridMismatch(f"b - a = {gap} is not an integer")
    if rounded < 1:
        raise GridMismatch(f"b - a = {gap} must be a positive integer")
    return int(rounded)


def rho(t: int, a: int) -> int:
    """Backward jump max{a, t - 1} on offsets."""
    return max(a, t - 1)


@dataclass(frozen=True)
class Grid:
    """The points base + n for lo <= n <= hi."""
    base: float
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise InsufficientDomain(f"empty grid: lo={self.lo} > hi={self.hi}")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, n: PointLike) -> bool:
        k = offset_of(n, self.base)
        return self.lo <= k <= self.hi

    @property
    def offsets(self) -> range:
        return range(self.lo, self.hi + 1)

    def point(self, n: int) -> GridPoint:
        return GridPoint(self.base, n)

    def points(self) -> Iterator[GridPoint]:
        return (GridPoint(self.base, n) for n in self.offsets)

    def index(self, n: PointLike) -> int:
        k = offset_of(n, self.base)
        if not self.lo <= k <= self.hi:
            raise OutOfDomain(f"offset {k} outside grid [{self.lo}, {self.hi}]")
        return k - self.lo


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Finite real sequence indexed by the points of a grid."""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or arr.shape[0] != len(self.grid):
            raise GridMismatch(
                f"{arr.shape[0] if arr.ndim == 1 else arr.shape} values for a grid of {len(self.grid)} points"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(len(grid)))

    @property
    def lo(self) -> int:
        return self.grid.lo

    @property
    def hi(self) -> int:
        return self.grid.hi

    def __call__(self, t: PointLike) -> float:
        return float(self.values[self.grid.index(t)])

    def __len__(self) -> int:
        return len(self.grid)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.grid, self.values.tobytes()))

    def values_on(self, lo: int, hi: int) -> np.ndarray:
        """Values at offsets lo..hi, which must lie inside the grid."""
        if lo < self.lo or hi > self.hi:
            raise InsufficientDomain(
                f"need offsets [{lo}, {hi}], function defined on [{self.lo}, {self.hi}]"
            )
        return self.values[lo - self.lo: hi - self.lo + 1]

    def restrict(self, lo: int, hi: int) -> "GridFunction":
        return GridFunction(Grid(self.grid.base, lo, hi), self.values_on(lo, hi))

    def extend_with_zeros(self, lo: int) -> "GridFunction":
        """Prepend zeros down to offset lo (the fractional-sum convention)."""
        if lo >= self.lo:
            return self
        pad = np.zeros(self.lo - lo)
        return GridFunction(Grid(self.grid.base, lo, self.hi), np.concatenate([pad, self.values]))

    def max_abs_diff(self, other: "GridFunction") -> float:
        if self.grid != other.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")
        return float(np.max(np.abs(self.values - other.values))) if len(self) else 0.0


@dataclass(frozen=True)
class Order:
    """A fractional order nu > 0 with N = ceil(nu)."""
    nu: float
    n_ceil: int = field(init=False)

    def __post_init__(self):
        nu = float(self.nu)
        if not math.isfinite(nu) or nu <= 0:
            raise InadmissibleSpec(f"order must be a positive real, got {self.nu}")
        if abs(nu - round(nu)) < INTEGER_TOL:
            nu = float(round(nu))
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "n_ceil", int(math.ceil(nu)))

    @property
    def is_integer(self) -> bool:
        return self.nu == self.n_ceil

    @property
    def gamma(self) -> float:
        """Reduced order nu - N + 2 used by the Lyapunov estimates."""
        return self.nu - self.n_ceil + 2
