"""Haar-type orthonormal system for an arbitrary number of sample points.

Observations sit on the ordinal grid ``x_t = t/n`` (``t = 1..n``).  Dyadic
intervals ``I_{j,k} = ((k-1) 2^-j, k 2^-j]`` are intersected with the grid;
the wavelet ``psi_{j,k}`` is a two-valued step function on the two children of
``I_{j,k}``, rescaled by the child counts so the family stays orthonormal under
``<a, b> = (1/n) sum_t a_t b_t`` even when ``n`` is not a power of two.

All interval membership is decided with integer arithmetic: the points of
``I_{j,k}`` are exactly ``t`` with ``(k-1) n < t 2^j <= k n``, i.e. the
0-based positions ``floor((k-1) n / 2^j) .. floor(k n / 2^j) - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .errors import BasisIndexError, InputError, InvalidGridError

__all__ = [
    "SampleGrid",
    "WaveletIndex",
    "IndexSet",
    "WaveletVector",
    "finest_scale",
    "interval_count",
    "interval_bounds",
    "index_set",
    "wavelet_values",
    "scaling_values",
]


def _check_n(n) -> int:
    if isinstance(n, (bool, np.bool_)) or not isinstance(n, (int, np.integer)):
        raise InvalidGridError(f"sample size must be an integer, got {n!r}")
    n = int(n)
    if n < 2:
        raise InvalidGridError(f"sample size must be at least 2, got {n}")
    return n


def finest_scale(n: int) -> int:
    """Return the unique ``J`` with ``2**J < n <= 2**(J+1)``."""
    n = _check_n(n)
    return (n - 1).bit_length() - 1


def interval_bounds(n: int, j: int) -> np.ndarray:
    """0-based boundaries of the ``2**j`` dyadic intervals at scale ``j``.

    Interval ``k`` (1-based) covers positions ``b[k-1] .. b[k]-1``.
    """
    k = np.arange(2**j + 1, dtype=np.int64)
    return (k * n) >> j


def interval_count(n: int, j: int, k: int) -> int:
    """Number of grid points ``t/n`` falling in ``I_{j,k}``."""
    n = _check_n(n)
    if j < 0 or not 1 <= k <= 2**j:
        raise BasisIndexError(f"(j, k) = ({j}, {k}) out of range")
    return ((k * n) >> j) - (((k - 1) * n) >> j)


@dataclass(frozen=True)
class WaveletIndex:
    """One member of the index set together with its child counts.

    ``start``, ``mid`` and ``stop`` are 0-based positions: the left child is
    ``start:mid`` and the right child ``mid:stop``.
    """

    j: int
    k: int
    n_left: int
    n_right: int
    start: int = field(default=0, compare=False)
    mid: int = field(default=0, compare=False)
    stop: int = field(default=0, compare=False)

    @property
    def key(self) -> tuple[int, int]:
        return (self.j, self.k)


@dataclass(frozen=True, eq=False)
class IndexSet:
    """All admissible ``(j, k)`` for a sample size, scale-major order.

    The per-entry data live in parallel read-only integer arrays so that the
    transforms can work vectorised; ``entries`` materialises them as
    :class:`WaveletIndex` objects on demand.
    """

    n: int
    J_n: int
    j: np.ndarray
    k: np.ndarray
    start: np.ndarray
    mid: np.ndarray
    stop: np.ndarray

    def __len__(self) -> int:
        return int(self.j.size)

    @property
    def n_left(self) -> np.ndarray:
        return self.mid - self.start

    @property
    def n_right(self) -> np.ndarray:
        return self.stop - self.mid

    @cached_property
    def entries(self) -> tuple[WaveletIndex, ...]:
        return tuple(
            WaveletIndex(int(j), int(k), int(m - s), int(e - m), int(s), int(m), int(e))
            for j, k, s, m, e in zip(self.j, self.k, self.start, self.mid, self.stop)
        )

    def __iter__(self) -> Iterator[WaveletIndex]:
        return iter(self.entries)

    @cached_property
    def _positions(self) -> dict[tuple[int, int], int]:
        return {(int(j), int(k)): i for i, (j, k) in enumerate(zip(self.j, self.k))}

    def keys(self) -> list[tuple[int, int]]:
        return list(self._positions)

    def position(self, j: int, k: int) -> int:
        """Row of ``(j, k)`` in the scale-major ordering."""
        try:
            return self._positions[(int(j), int(k))]
        except KeyError:
            raise BasisIndexError(f"({j}, {k}) is not in the index set for n={self.n}") from None

    def __contains__(self, item) -> bool:
        key = item.key if isinstance(item, WaveletIndex) else tuple(item)
        return key in self._positions

    def __getitem__(self, key) -> WaveletIndex:
        if isinstance(key, tuple):
            return self.entries[self.position(*key)]
        return self.entries[key]

    def scale_slices(self) -> dict[int, slice]:
        """Contiguous row range of every scale present."""
        out = {}
        bounds = np.searchsorted(self.j, np.arange(self.J_n + 2))
        for level in range(self.J_n + 1):
            if bounds[level + 1] > bounds[level]:
                out[level] = slice(int(bounds[level]), int(bounds[level + 1]))
        return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def _index_set_cached(n: int) -> IndexSet:
    J = finest_scale(n)
    js, ks, starts, mids, stops = [], [], [], [], []
    for level in range(J + 1):
        b = interval_bounds(n, level + 1)
        left = b[1:-1:2] - b[0:-2:2]
        right = b[2::2] - b[1:-1:2]
        keep = np.flatnonzero((left >= 1) & (right >= 1))
        js.append(np.full(keep.size, level, dtype=np.int64))
        ks.append(keep + 1)
        starts.append(b[2 * keep])
        mids.append(b[2 * keep + 1])
        stops.append(b[2 * keep + 2])
    cat = lambda parts: _frozen(np.concatenate(parts).astype(np.int64))  # noqa: E731
    return IndexSet(n, J, cat(js), cat(ks), cat(starts), cat(mids), cat(stops))


def index_set(n: int) -> IndexSet:
    """Every ``(j, k)`` whose two child intervals both contain a grid point.

    The result always has ``n - 1`` entries and no scale finer than
    :func:`finest_scale`.
    """
    return _index_set_cached(_check_n(n))


def _normaliser(n_left, n_right, n):
    return np.sqrt(n) / np.sqrt(1.0 / n_left + 1.0 / n_right)


@dataclass(frozen=True)
class WaveletVector:
    """Sparse representation of ``psi_{j,k}`` evaluated at the grid."""

    n: int
    start: int
    mid: int
    stop: int
    left_value: float
    right_value: float

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.start : self.mid] = self.left_value
        out[self.mid : self.stop] = self.right_value
        return out

    def dot(self, y) -> float:
        """Sample inner product ``(1/n) sum_t psi(x_t) y_t``."""
        y = np.asarray(y, dtype=float)
        return (
            self.left_value * y[self.start : self.mid].sum()
            + self.right_value * y[self.mid : self.stop].sum()
        ) / self.n


def wavelet_values(n: int, idx) -> WaveletVector:
    """Values of ``psi_{j,k}`` at ``x_1..x_n``.

    ``idx`` may be a :class:`WaveletIndex` or a ``(j, k)`` tuple.
    """
    iset = index_set(n)
    key = idx.key if isinstance(idx, WaveletIndex) else tuple(idx)
    w = iset[key]
    c = _normaliser(w.n_left, w.n_right, iset.n)
    return WaveletVector(iset.n, w.start, w.mid, w.stop, c / w.n_left, -c / w.n_right)


def scaling_values(n: int) -> np.ndarray:
    """The scaling function ``phi_0`` at the grid: all ones."""
    return np.ones(_check_n(n))


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Observations ``y`` on the ordinal design ``x_t = t/n``.

    ``y`` may be omitted when only the design is needed.
    """

    n: int
    y: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "n", _check_n(self.n))
        if self.y is not None:
            y = np.array(self.y, dtype=float)
            if y.ndim != 1 or y.size != self.n:
                raise InputError(f"y must be a vector of length {self.n}, got shape {y.shape}")
            y.setflags(write=False)
            object.__setattr__(self, "y", y)

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1) / self.n

    @classmethod
    def from_values(cls, y) -> "SampleGrid":
        y = np.asarray(y, dtype=float)
        if y.ndim != 1:
            raise InputError("observations must be one-dimensional")
        if y.size < 2:
            raise InvalidGridError(f"need at least 2 observations, got {y.size}")
        return cls(y.size, y)

    @classmethod
    def from_design(cls, x, y) -> tuple["SampleGrid", np.ndarray]:
        """Map an unevenly spaced design to ranks.

        Returns the grid (observations sorted by ``x``) and the sorting
        permutation, so callers can put fitted values back in input order.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise InputError("x and y must be vectors of equal length")
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if np.any(np.diff(xs) <= 0):
            raise InvalidGridError("design points must be distinct")
        return cls.from_values(y[order]), order
