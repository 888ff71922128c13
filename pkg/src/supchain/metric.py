"""Covering numbers, dyadic partitions, designated-point nets and chaining pairs.

The index space is a closed interval with the Euclidean metric.  Level ``n``
of a partition family splits the interval into ``N(T, d, 2**-n)`` equal cells
whose midpoints form the net ``T_n``; the single cell of the coarsest level
``n0`` carries the designated root point ``t0``.  Levels are lazy: arrays are
only materialized on request, so families can be declared far deeper than
memory would allow and still report exact pair counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import DomainError

# Beyond this many cells a level is never materialized.
MATERIALIZE_LIMIT = 1 << 22
# Distance threshold between linked net points, in units of 2**-n.
LINK_FACTOR = 6.0
DEFAULT_N_MAX = 20


def _ceil_half_ratio(length: float, radius: float) -> int:
    """Exact ``max(1, ceil(length / (2 radius)))`` for float inputs."""
    x = length / (2.0 * radius)
    if abs(x - round(x)) <= 1e-9 * max(1.0, x):
        # rounding could cross an integer; redo in exact rationals
        k = math.ceil(Fraction(length) / (2 * Fraction(radius)))
    else:
        k = math.ceil(x)
    return max(int(k), 1)


@dataclass(frozen=True)
class IndexSpace:
    """Closed interval ``[lo, hi]`` with metric ``|s - t|``."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("interval endpoints must be finite")
        if self.hi < self.lo:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    def distance(self, s, t):
        return np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float))

    def covering_number(self, radius: float) -> int:
        return _ceil_half_ratio(self.diameter, radius)

    def covering_numbers(self, radii) -> np.ndarray:
        """Vectorized count, exact away from the breakpoints ``L / (2k)``."""
        radii = np.asarray(radii, dtype=float)
        return np.maximum(1.0, np.ceil(self.diameter / (2.0 * radii)))

    def covering_breakpoints(self, a_lo: float, a_hi: float) -> np.ndarray:
        """Radii in ``(a_lo, a_hi)`` where the covering number jumps."""
        if self.diameter == 0.0:
            return np.empty(0)
        half = self.diameter / 2.0
        k_lo = max(math.floor(half / a_hi) + 1, 1)
        k_hi = math.ceil(half / a_lo) - 1
        if k_hi < k_lo:
            return np.empty(0)
        pts = half / np.arange(k_hi, k_lo - 1, -1, dtype=float)
        return pts[(pts > a_lo) & (pts < a_hi)]


UNIT_INTERVAL = IndexSpace(0.0, 1.0)


def covering_number(space, radius: float) -> int:
    """Minimal number of closed balls of the given radius covering ``space``.

    For an interval of length ``L`` this is ``ceil(L / (2 radius))``.
    """
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius!r}")
    return space.covering_number(float(radius))


def largest_trivial_level(space, n_min: int = -1074) -> int:
    """Largest integer ``n`` with ``N(T, d, 2**-n) == 1``."""
    if space.diameter <= 0:
        raise DomainError("n0 is unbounded for a space of zero diameter")
    # start from the analytic guess and walk to the exact boundary
    n = max(n_min, 1 - math.ceil(math.log2(space.diameter)) - 2)
    if covering_number(space, 2.0 ** -n) != 1:
        raise DomainError("scan start already has covering number > 1")
    while covering_number(space, 2.0 ** -(n + 1)) == 1:
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class Level:
    """One level of a partition family.

    ``cells`` are half-open ``[a, b)`` except the last, which is closed.
    """

    space: IndexSpace
    n: int
    n_cells: int
    root: float | None = None
    parent: "Level | None" = None

    @property
    def width(self) -> float:
        return self.space.diameter / self.n_cells

    @property
    def link_radius(self) -> float:
        return LINK_FACTOR * 2.0 ** -self.n

    def _check_size(self):
        if self.n_cells > MATERIALIZE_LIMIT:
            raise DomainError(
                f"level {self.n} has {self.n_cells} cells; too many to materialize"
            )

    @cached_property
    def edges(self) -> np.ndarray:
        self._check_size()
        return self.space.lo + self.width * np.arange(self.n_cells + 1, dtype=float)

    @property
    def cells(self) -> np.ndarray:
        e = self.edges
        return np.column_stack([e[:-1], e[1:]])

    @cached_property
    def net(self) -> np.ndarray:
        if self.root is not None:
            return np.array([self.root])
        self._check_size()
        return self.space.lo + self.width * (np.arange(self.n_cells, dtype=float) + 0.5)

    def cell_index(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.floor((t - self.space.lo) / self.width).astype(np.int64)
        return np.clip(idx, 0, self.n_cells - 1)

    def representative(self, t) -> np.ndarray:
        """The designated point ``s_n(t)`` of the cell containing ``t``."""
        t = np.asarray(t, dtype=float)
        if self.root is not None:
            return np.full_like(t, self.root)
        return self.space.lo + self.width * (self.cell_index(t) + 0.5)

    def _link_windows(self):
        u = self.net
        v = self.parent.net
        r = self.link_radius
        # widened window, then an exact filter on |u - v| <= r
        slack = 1e-9 * max(r, self.space.diameter)
        lo = np.searchsorted(v, u - r - slack, side="left")
        hi = np.searchsorted(v, u + r + slack, side="right")
        return u, v, r, lo, hi

    @cached_property
    def h_pairs(self) -> np.ndarray:
        """Index pairs ``(i, j)`` into ``T_n x T_{n-1}`` at distance ``<= 6 * 2**-n``."""
        if self.parent is None:
            raise DomainError(f"level {self.n} is the root level; it has no pairs")
        u, v, r, lo, hi = self._link_windows()
        rows = []
        for off in range(int((hi - lo).max(initial=0))):
            j = lo + off
            ok = j < hi
            i = np.nonzero(ok)[0]
            j = j[ok]
            keep = np.abs(u[i] - v[j]) <= r
            rows.append(np.column_stack([i[keep], j[keep]]))
        if not rows:
            return np.empty((0, 2), dtype=np.int64)
        out = np.concatenate(rows)
        return out[np.lexsort((out[:, 1], out[:, 0]))]

    @cached_property
    def h_count(self) -> int:
        """``|H_n|``; exact closed form for deep nested dyadic levels."""
        if self.parent is None:
            raise DomainError(f"level {self.n} is the root level; it has no pairs")
        if self.n_cells <= MATERIALIZE_LIMIT:
            return int(len(self.h_pairs))
        return nested_dyadic_h_count(self)


def nested_dyadic_h_count(level: Level) -> int:
    """Closed-form ``|H_n|`` when each parent cell splits into two children of width ``2**(1-n)``.

    Child ``i`` sits at ``(2i+1) 2**-n`` and parent ``j`` at ``(4j+2) 2**-n``
    (relative to the left end), so ``|u - v| <= 6 * 2**-n`` selects
    ``i in [2j-2, 2j+3]``: six children per interior parent and four at each end.
    """
    parent = level.parent
    m = parent.n_cells
    if (
        parent.root is not None
        or level.n_cells != 2 * m
        or not math.isclose(level.width, 2.0 ** (1 - level.n), rel_tol=1e-12)
    ):
        raise DomainError(f"level {level.n} is not a nested dyadic level")
    if m == 1:
        return 2
    return 6 * m - 4


@dataclass(frozen=True, eq=False)
class PartitionFamily:
    """Levels ``n0 .. n_max`` of the dyadic partition of an interval."""

    space: IndexSpace
    n0: int
    n_max: int
    t0: float

    def __post_init__(self):
        if self.n_max < self.n0 + 1:
            raise DomainError(f"n_max={self.n_max} must be at least n0 + 1 = {self.n0 + 1}")
        if not self.space.lo <= self.t0 <= self.space.hi:
            raise DomainError(f"t0={self.t0} lies outside the index space")

    def level_size(self, n: int) -> int:
        if n <= self.n0:
            return 1
        return covering_number(self.space, 2.0 ** -n)

    @cached_property
    def _levels(self) -> dict:
        out = {}
        prev = None
        for n in range(self.n0, self.n_max + 1):
            lvl = Level(
                self.space,
                n,
                self.level_size(n),
                root=self.t0 if n == self.n0 else None,
                parent=prev,
            )
            out[n] = prev = lvl
        return out

    @property
    def levels(self) -> tuple:
        return tuple(self._levels.values())

    def level(self, n: int) -> Level:
        try:
            return self._levels[n]
        except KeyError:
            raise DomainError(f"level {n} outside [{self.n0}, {self.n_max}]") from None

    def h_count(self, n: int) -> int:
        return self.level(n).h_count

    def chain(self, t) -> np.ndarray:
        """Designated points ``s_{n0}(t), ..., s_{n_max}(t)``, one row per level."""
        return np.stack([lvl.representative(t) for lvl in self.levels])


def build_partition_family(
    space: IndexSpace = UNIT_INTERVAL,
    n_max: int = DEFAULT_N_MAX,
    t0: float | None = None,
) -> PartitionFamily:
    n0 = largest_trivial_level(space)
    if t0 is None:
        t0 = space.lo + space.diameter / 2.0
    return PartitionFamily(space, n0, int(n_max), float(t0))


def _piecewise_integral(space, a_lo, a_hi, power, gamma):
    # exact integral of a**gamma * N(a)**power over (a_lo, a_hi]
    pts = np.concatenate([[a_lo], space.covering_breakpoints(a_lo, a_hi), [a_hi]])
    mids = 0.5 * (pts[:-1] + pts[1:])
    many = getattr(space, "covering_numbers", None)
    if many is not None:
        counts = many(mids)
    else:
        counts = np.array([space.covering_number(m) for m in mids], dtype=float)
    s = gamma + 1.0
    return float(np.sum(counts**power * (pts[1:] ** s - pts[:-1] ** s)) / s)


def entropy_integral(
    space,
    gamma: float,
    squared: bool = False,
    upper: float | None = None,
    max_shells: int = 80,
    max_breakpoints: int = 1 << 20,
    rtol: float = 1e-13,
) -> float:
    """Integrate ``a**gamma * N(T, d, a)`` (or ``N**2``) over ``(0, upper]``.

    The integrand is piecewise constant in ``N``.  Each dyadic shell
    ``(upper 2**-(j+1), upper 2**-j]`` is integrated exactly over its
    breakpoints.  Once shells get too fine, the remainder is closed with a
    geometric tail whose ratio is Richardson-extrapolated from the last three
    shells (the shell ratio converges linearly with factor 1/2).  Returns
    ``inf`` when the extrapolated ratio reaches 1.
    """
    if not gamma > -1:
        raise DomainError(f"gamma must exceed -1, got {gamma!r}")
    if upper is None:
        upper = space.diameter
    if not upper > 0:
        raise DomainError("integration range is empty")
    power = 2 if squared else 1
    total = 0.0
    shells = []
    hi = float(upper)
    for _ in range(max_shells):
        lo = hi / 2.0
        if len(space.covering_breakpoints(lo, hi)) > max_breakpoints:
            break
        shell = _piecewise_integral(space, lo, hi, power, gamma)
        total += shell
        shells.append(shell)
        hi = lo
        if shell <= rtol * total:
            return total
    if len(shells) < 3:
        return total
    r1 = shells[-1] / shells[-2]
    r0 = shells[-2] / shells[-3]
    ratio = 2.0 * r1 - r0
    if ratio >= 1.0 - 1e-7:
        return math.inf
    return total + shells[-1] * ratio / (1.0 - ratio)
