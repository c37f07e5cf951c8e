"""Analysis and synthesis between sample space and Haar-type coefficients.

Both directions walk the dyadic interval tree.  Analysis aggregates sums
bottom-up from the leaf level ``J_n + 1`` (every leaf holds at most one grid
point); synthesis pushes additive constants top-down.  Arrays may carry
trailing batch dimensions: a ``(n, m)`` input is treated as ``m`` independent
series, which is how the Monte Carlo code transforms whole replicate blocks at
once.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InputError, ParseError, StructureError
from .grid import SampleGrid, index_set, interval_bounds

__all__ = [
    "CoefficientSet",
    "analyze",
    "synthesize",
    "energy_gap",
    "write_coefficients",
    "read_coefficients",
]


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """``alpha0`` plus one ``beta`` per member of ``index_set(n)``.

    ``beta`` is stored in scale-major, translation-minor order (the order of
    :func:`haartrend.grid.index_set`).  A leading axis of length ``n - 1`` is
    required; trailing axes, if any, index a batch of series.
    """

    n: int
    alpha0: float | np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim == 0 or beta.shape[0] != self.n - 1:
            raise StructureError(
                f"expected {self.n - 1} wavelet coefficients for n={self.n}, got shape {beta.shape}"
            )
        object.__setattr__(self, "beta", beta)
        alpha0 = np.asarray(self.alpha0, dtype=float)
        if alpha0.shape != beta.shape[1:]:
            raise StructureError("alpha0 shape does not match the batch shape of beta")
        object.__setattr__(self, "alpha0", float(alpha0) if alpha0.ndim == 0 else alpha0)

    @property
    def index(self):
        return index_set(self.n)

    @property
    def betas(self) -> dict[tuple[int, int], float]:
        """Mapping ``(j, k) -> beta`` (single series only)."""
        if self.beta.ndim != 1:
            raise StructureError("betas mapping is only defined for a single series")
        iset = self.index
        return {(int(j), int(k)): float(b) for j, k, b in zip(iset.j, iset.k, self.beta)}

    def beta_at(self, j: int, k: int):
        return self.beta[self.index.position(j, k)]

    @classmethod
    def from_mapping(cls, n: int, alpha0: float, betas: Mapping[tuple[int, int], float]):
        iset = index_set(n)
        keys = set(map(tuple, betas))
        expected = set(iset.keys())
        if keys != expected:
            missing = sorted(expected - keys)[:5]
            extra = sorted(keys - expected)[:5]
            raise StructureError(f"key set mismatch for n={n}: missing {missing}, unexpected {extra}")
        beta = np.array([betas[key] for key in iset.keys()], dtype=float)
        return cls(n, alpha0, beta)

    def replace(self, alpha0=None, beta=None) -> "CoefficientSet":
        return CoefficientSet(
            self.n,
            self.alpha0 if alpha0 is None else alpha0,
            self.beta if beta is None else beta,
        )

    def energy(self):
        """``alpha0**2 + sum beta**2``; equals the mean square of the series."""
        return np.asarray(self.alpha0) ** 2 + np.sum(self.beta**2, axis=0)


def _as_observations(y) -> np.ndarray:
    if isinstance(y, SampleGrid):
        if y.y is None:
            raise InputError("grid carries no observations")
        y = y.y
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        raise InputError("observations must be at least one-dimensional")
    if not np.all(np.isfinite(y)):
        raise InputError("observations contain non-finite values")
    return y


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def analyze(y) -> CoefficientSet:
    """Empirical coefficients ``alpha0 = mean(y)``, ``beta = <psi_{j,k}, y>``.

    ``y`` is a :class:`SampleGrid` with observations or an array whose first
    axis runs over time.
    """
    y = _as_observations(y)
    n = y.shape[0]
    iset = index_set(n)
    J = iset.J_n
    batch = y.shape[1:]

    leaf_bounds = interval_bounds(n, J + 1)
    occupied = np.diff(leaf_bounds) == 1
    sums = np.zeros((occupied.size,) + batch)
    sums[occupied] = y
    comp = np.zeros_like(sums)
    counts = occupied.astype(np.int64)

    per_level = [None] * (J + 1)
    rsqrt_n = 1.0 / np.sqrt(n)
    for level in range(J, -1, -1):
        s_l, s_r = sums[0::2], sums[1::2]
        c_l, c_r = comp[0::2], comp[1::2]
        n_l, n_r = counts[0::2], counts[1::2]
        keep = np.flatnonzero((n_l >= 1) & (n_r >= 1))
        nl = n_l[keep].astype(float).reshape((-1,) + (1,) * len(batch))
        nr = n_r[keep].astype(float).reshape((-1,) + (1,) * len(batch))
        left_mean = (s_l[keep] + c_l[keep]) / nl
        right_mean = (s_r[keep] + c_r[keep]) / nr
        per_level[level] = (left_mean - right_mean) * rsqrt_n / np.sqrt(1.0 / nl + 1.0 / nr)
        sums, err = _two_sum(s_l, s_r)
        comp = c_l + c_r + err
        counts = n_l + n_r

    beta = np.concatenate(per_level, axis=0)
    alpha0 = (sums[0] + comp[0]) / n
    return CoefficientSet(n, alpha0, beta)


def synthesize(coeffs: CoefficientSet) -> np.ndarray:
    """Series ``alpha0 + sum beta_{j,k} psi_{j,k}(x_t)`` at the grid points."""
    if not isinstance(coeffs, CoefficientSet):
        raise StructureError("synthesize expects a CoefficientSet")
    n = coeffs.n
    iset = index_set(n)
    beta = coeffs.beta
    batch = beta.shape[1:]
    expand = (-1,) + (1,) * len(batch)

    acc = np.asarray(coeffs.alpha0, dtype=float).reshape((1,) + batch).copy()
    slices = iset.scale_slices()
    sqrt_n = np.sqrt(n)
    for level in range(iset.J_n + 1):
        acc = np.repeat(acc, 2, axis=0)
        sl = slices.get(level)
        if sl is None:
            continue
        k0 = iset.k[sl] - 1
        nl = iset.n_left[sl].astype(float)
        nr = iset.n_right[sl].astype(float)
        c = (sqrt_n / np.sqrt(1.0 / nl + 1.0 / nr)).reshape(expand)
        b = beta[sl]
        acc[2 * k0] += b * c / nl.reshape(expand)
        acc[2 * k0 + 1] -= b * c / nr.reshape(expand)

    occupied = np.diff(interval_bounds(n, iset.J_n + 1)) == 1
    return acc[occupied]


def _coefficients_of(obj) -> CoefficientSet:
    return obj if isinstance(obj, CoefficientSet) else analyze(obj)


def _samples_of(obj) -> np.ndarray:
    if isinstance(obj, CoefficientSet):
        return synthesize(obj)
    return _as_observations(obj)


def energy_gap(a, b) -> tuple[float, float]:
    """Both sides of the isometry for a fitted/true pair.

    ``a`` and ``b`` are series (arrays or grids) or coefficient sets.  Returns
    ``(mean_t (a_t - b_t)**2, (alpha_a - alpha_b)**2 + sum (beta_a - beta_b)**2)``.
    """
    sa, sb = _samples_of(a), _samples_of(b)
    if sa.shape != sb.shape:
        raise InputError(f"length mismatch: {sa.shape} vs {sb.shape}")
    ca, cb = _coefficients_of(a), _coefficients_of(b)
    sample_side = np.mean((sa - sb) ** 2, axis=0)
    coeff_side = (np.asarray(ca.alpha0) - np.asarray(cb.alpha0)) ** 2 + np.sum(
        (ca.beta - cb.beta) ** 2, axis=0
    )
    return float(sample_side), float(coeff_side)


def write_coefficients(coeffs: CoefficientSet, path) -> None:
    """Dump a single-series coefficient set as ``j,k,beta`` CSV.

    The first data row is ``-1,0,alpha0``; wavelet rows follow in scale-major
    order.  Values use 17 significant digits so the dump round-trips.
    """
    if coeffs.beta.ndim != 1:
        raise StructureError("only single-series coefficient sets can be written")
    iset = coeffs.index
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "k", "beta"])
            w.writerow([-1, 0, format(float(coeffs.alpha0), ".17g")])
            for j, k, b in zip(iset.j, iset.k, coeffs.beta):
                w.writerow([int(j), int(k), format(float(b), ".17g")])
    except OSError as exc:
        raise OSError(f"cannot write coefficients to {os.fspath(path)}: {exc}") from exc


def read_coefficients(path) -> CoefficientSet:
    """Inverse of :func:`write_coefficients`."""
    alpha0 = None
    betas = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["j", "k", "beta"]:
            raise ParseError("expected header 'j,k,beta'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                j, k, value = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise ParseError(f"malformed row {row!r}", path, lineno) from None
            if j == -1:
                alpha0 = value
            elif (j, k) in betas:
                raise ParseError(f"duplicate coefficient ({j}, {k})", path, lineno)
            else:
                betas[(j, k)] = value
    if alpha0 is None:
        raise ParseError("missing alpha0 row (-1,0,...)", path)
    n = len(betas) + 1
    return CoefficientSet.from_mapping(n, alpha0, betas)
