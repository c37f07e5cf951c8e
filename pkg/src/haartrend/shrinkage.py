"""Scale-dependent thresholding and the resulting trend estimator.

Coefficients at scales ``j < J*`` (the critical scale, ``2**(J*-1) < n**(1/3)
<= 2**J*``) are kept as they are; finer ones are passed through a shrinkage
rule with threshold ``t_{n,j} = K n**(-2/3) 2**(j/2)``.  The thresholds grow
with ``j`` because the signal gets sparser relative to the ``n**-1/2`` noise
level at fine scales, and a polynomial-tailed noise needs more room than the
usual Gaussian ``sqrt(2 log n)`` rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, InputError, RuleContractError
from .grid import _check_n, index_set
from .transform import CoefficientSet, analyze, synthesize

__all__ = [
    "ThresholdPolicy",
    "critical_scale",
    "threshold_value",
    "soft",
    "hard",
    "check_rule_contract",
    "apply_policy",
    "estimate_trend",
    "sn_diagnostic",
    "DEFAULT_K",
]

DEFAULT_K = 0.1

Rule = Callable[[np.ndarray, np.ndarray], np.ndarray]


def critical_scale(n: int) -> int:
    """Smallest ``J`` with ``n**(1/3) <= 2**J`` (equivalently ``n <= 8**J``)."""
    n = _check_n(n)
    J = 0
    while 8**J < n:
        J += 1
    return J


def threshold_value(n: int, j, K: float):
    """``K * n**(-2/3) * 2**(j/2)``."""
    if not K > 0 or not np.isfinite(K):
        raise ConfigError(f"threshold constant K must be positive and finite, got {K!r}")
    return K * float(n) ** (-2.0 / 3.0) * 2.0 ** (np.asarray(j) / 2.0)


def soft(b, t):
    """Soft thresholding ``sgn(b) (|b| - t)_+``.

    This is also the minimiser of ``beta -> (beta - b)**2 + 2 t |beta|``.
    """
    b = np.asarray(b, dtype=float)
    return np.sign(b) * np.maximum(np.abs(b) - t, 0.0)


def hard(b, t):
    """Hard thresholding: ``0`` if ``|b| < t``, otherwise ``b``."""
    b = np.asarray(b, dtype=float)
    return np.where(np.abs(b) < t, 0.0, b)


_BUILTIN = {"soft": soft, "hard": hard}


def _probe_points() -> tuple[np.ndarray, np.ndarray]:
    # deterministic grid, including the tie |b| == t and b == 0
    t = np.array([0.0, 1e-3, 0.1, 0.5, 1.0, 3.0, 100.0])
    frac = np.array([0.0, 0.25, 0.5, 0.999, 1.0, 1.001, 1.5, 2.0, 10.0])
    tt, ff = np.meshgrid(t, frac, indexing="ij")
    b = (tt * ff).ravel()
    tt = tt.ravel()
    b = np.concatenate([b, -b, [0.3, -0.3, 7.0]])
    tt = np.concatenate([tt, tt, [0.0, 0.0, 0.0]])
    return b, tt


def check_rule_contract(rule: Rule, atol: float = 1e-12) -> None:
    """Raise :class:`RuleContractError` unless ``rule`` kills and shifts correctly.

    The contract: ``rule(b, t) == 0`` when ``|b| < t`` and
    ``|rule(b, t) - b| <= t`` otherwise.
    """
    b, t = _probe_points()
    try:
        out = np.asarray(rule(b, t), dtype=float)
    except Exception as exc:  # noqa: BLE001 - any failure is a contract failure
        raise RuleContractError(f"rule failed on probe inputs: {exc}") from exc
    if out.shape != b.shape or not np.all(np.isfinite(out)):
        raise RuleContractError("rule must return finite values of the input shape")
    below = np.abs(b) < t
    if np.any(np.abs(out[below]) > atol):
        i = np.flatnonzero(below)[np.argmax(np.abs(out[below]))]
        raise RuleContractError(f"rule({b[i]:g}, {t[i]:g}) = {out[i]:g}, expected 0 below threshold")
    shift = np.abs(out[~below] - b[~below]) - t[~below]
    if np.any(shift > atol):
        i = np.flatnonzero(~below)[np.argmax(shift)]
        raise RuleContractError(f"rule({b[i]:g}, {t[i]:g}) = {out[i]:g} moves input by more than t")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Shrinkage rule plus threshold constant.

    ``rule`` is ``"soft"``, ``"hard"`` or a vectorised callable ``(b, t) ->
    shrunk b``; callables are checked against the kill/shift contract when
    the policy is built.  The critical scale and the threshold schedule depend
    on the sample size and are derived by :meth:`j_star` and :meth:`schedule`.
    """

    rule: Union[str, Rule] = "soft"
    K: float = DEFAULT_K
    _fn: Rule = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.K, (int, float, np.floating)) and self.K > 0 and np.isfinite(self.K)):
            raise ConfigError(f"threshold constant K must be positive and finite, got {self.K!r}")
        if isinstance(self.rule, str):
            try:
                fn = _BUILTIN[self.rule]
            except KeyError:
                raise ConfigError(f"unknown rule {self.rule!r}; expected one of {sorted(_BUILTIN)}") from None
        elif callable(self.rule):
            check_rule_contract(self.rule)
            fn = self.rule
        else:
            raise ConfigError(f"rule must be a name or a callable, got {self.rule!r}")
        object.__setattr__(self, "_fn", fn)

    @property
    def kind(self) -> str:
        return self.rule if isinstance(self.rule, str) else "custom"

    def shrink(self, b, t):
        return self._fn(b, t)

    def j_star(self, n: int) -> int:
        return critical_scale(n)

    def schedule(self, n: int) -> dict[int, float]:
        """Thresholds ``t_{n,j}`` for ``j = J*..J_n`` (empty if ``J* > J_n``)."""
        iset = index_set(n)
        return {
            j: float(threshold_value(n, j, self.K))
            for j in range(self.j_star(n), iset.J_n + 1)
        }


def apply_policy(coeffs: CoefficientSet, policy: ThresholdPolicy) -> CoefficientSet:
    """Shrink the coefficients at scales ``j >= J*``; leave coarser ones alone."""
    n = coeffs.n
    iset = index_set(n)
    j_star = policy.j_star(n)
    fine = iset.j >= j_star
    if not np.any(fine):
        return coeffs
    beta = coeffs.beta.copy()
    t = threshold_value(n, iset.j[fine], policy.K)
    t = t.reshape((-1,) + (1,) * (beta.ndim - 1))
    shrunk = np.asarray(policy.shrink(beta[fine], np.broadcast_to(t, beta[fine].shape)), dtype=float)
    if shrunk.shape != beta[fine].shape:
        raise RuleContractError("rule changed the shape of its input")
    beta[fine] = shrunk
    return coeffs.replace(beta=beta)


def estimate_trend(y, policy: ThresholdPolicy | None = None) -> np.ndarray:
    """Thresholded wavelet estimate of the trend at the sample points.

    ``y`` may be a :class:`~haartrend.grid.SampleGrid`, a vector, or an
    ``(n, m)`` block of independent series.
    """
    policy = ThresholdPolicy() if policy is None else policy
    return synthesize(apply_policy(analyze(y), policy))


def sn_diagnostic(m0, K: float = 1.0) -> float:
    """``sum_{2**j >= n**(1/3)} sum_k min(beta0_{j,k}**2, t_{n,j}**2)`` for a true trend.

    Bounded by a constant times ``n**(-2/3)`` when ``m0`` has bounded total
    variation, which is what keeps the shrinkage bias at the optimal order.
    """
    m0 = np.asarray(m0, dtype=float)
    if m0.ndim != 1:
        raise InputError("m0 must be a vector")
    coeffs = analyze(m0)
    n = coeffs.n
    iset = index_set(n)
    fine = iset.j >= critical_scale(n)
    t = threshold_value(n, iset.j[fine], K)
    return float(np.sum(np.minimum(coeffs.beta[fine] ** 2, t**2)))
