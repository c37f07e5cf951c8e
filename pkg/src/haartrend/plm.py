"""Partially linear model: linear trend + seasonal levels + wavelet remainder.

The parametric part is fitted first by least squares; the residuals are then
denoised with the thresholded Haar-type estimator.  Because the remainder is
taken orthogonal to the design (which contains the constant vector through
the seasonal dummies), no scaling coefficient is needed for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, RankError
from .shrinkage import ThresholdPolicy, apply_policy
from .transform import CoefficientSet, analyze, synthesize

__all__ = ["PLMDesign", "PLMFit", "build_design", "ols", "project_identifiable", "fit_plm"]

#: reciprocal condition number below which the design counts as singular
RCOND_LIMIT = 1e-10


@dataclass(frozen=True, eq=False)
class PLMDesign:
    """``n x (p+1)`` design: centred, range-scaled time then ``p`` season dummies.

    Row ``t`` (1-based) has its dummy in season ``((t - 1) mod p) + 1``.
    """

    n: int
    p: int
    X: np.ndarray

    @property
    def season(self) -> np.ndarray:
        return np.arange(self.n) % self.p + 1


def build_design(n: int, p: int) -> PLMDesign:
    n, p = int(n), int(p)
    if p < 1:
        raise RankError(f"period must be at least 1, got {p}")
    if n < p + 1:
        # fewer rows than columns can never give a full-rank design
        raise RankError(f"n={n} is too small for period {p}; need n >= {p + 1}")
    x = np.arange(1, n + 1) / n
    X = np.zeros((n, p + 1))
    X[:, 0] = (x - x.mean()) / (x[-1] - x[0])
    X[np.arange(n), np.arange(n) % p + 1] = 1.0
    X.setflags(write=False)
    return PLMDesign(n, p, X)


def _check_rank(design: PLMDesign) -> None:
    s = np.linalg.svd(design.X, compute_uv=False)
    rcond = s[-1] / s[0] if s[0] > 0 else 0.0
    if rcond < RCOND_LIMIT:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise RankError(f"design is numerically singular (condition number {cond:.3g})", condition=cond)


def ols(design: PLMDesign, y) -> np.ndarray:
    """Least-squares ``gamma`` via an orthogonal (SVD based) solver.

    ``y`` may be ``(n,)`` or ``(n, m)`` for a batch of series.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] != design.n:
        raise InputError(f"y has length {y.shape[0]}, design has {design.n} rows")
    _check_rank(design)
    gamma, *_ = np.linalg.lstsq(design.X, y, rcond=None)
    return gamma


def project_identifiable(m, design: PLMDesign) -> np.ndarray:
    """Remove the design's column space from ``m`` so that ``X.T @ out == 0``."""
    m = np.asarray(m, dtype=float)
    if m.shape[0] != design.n:
        raise InputError(f"m has length {m.shape[0]}, design has {design.n} rows")
    _check_rank(design)
    Q, _ = np.linalg.qr(design.X)
    return m - Q @ (Q.T @ m)


@dataclass(frozen=True, eq=False)
class PLMFit:
    gamma_hat: np.ndarray
    m_hat: np.ndarray
    residual_coeffs: CoefficientSet
    linear_seasonal: np.ndarray
    design: PLMDesign

    @property
    def fitted(self) -> np.ndarray:
        return self.linear_seasonal + self.m_hat

    @property
    def m_identified(self) -> np.ndarray:
        """``m_hat`` with the design's column space removed.

        Thresholding does not preserve orthogonality to ``X``; this is the
        component that satisfies the identifiability constraint exactly.
        """
        return project_identifiable(self.m_hat, self.design)

    @property
    def trend(self) -> np.ndarray:
        """Linear time trend plus the nonparametric part (seasonal levels removed)."""
        return self.design.X[:, 0] * self.gamma_hat[0] + self.m_hat


def fit_plm(y, p: int, policy: ThresholdPolicy | None = None) -> PLMFit:
    """OLS for the parametric part, then threshold the residual expansion."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InputError("y must be a vector")
    if not np.all(np.isfinite(y)):
        raise InputError("observations contain non-finite values")
    policy = ThresholdPolicy() if policy is None else policy
    design = build_design(y.size, p)
    gamma = ols(design, y)
    linear_seasonal = design.X @ gamma
    coeffs = analyze(y - linear_seasonal).replace(alpha0=0.0)
    shrunk = apply_policy(coeffs, policy)
    return PLMFit(gamma, synthesize(shrunk), shrunk, linear_seasonal, design)
