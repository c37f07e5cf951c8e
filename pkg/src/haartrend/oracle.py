"""Sparse signals observed in polynomial-tailed noise.

The abstract problem ``Y_k = theta_k + eps_k`` where the noise law ``Q``
satisfies ``P(|eps| > t) <= (epsilon / t)**4`` for all ``t > 0`` and the
signal has mean absolute size ``epsilon * q``.  A three-point prior with
atoms ``0, +-lambda`` gives a closed-form Bayes rule whose risk
``epsilon**2 q**(2/3) / 2`` is the benchmark that thresholding at
``t = K epsilon q**(-1/3)`` matches up to a constant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, stats

from .errors import ConfigError, DomainError, EvaluationError
from .shrinkage import hard, soft

__all__ = [
    "SparseModelSpec",
    "RiskEstimate",
    "NoiseLaw",
    "ThreePointNoise",
    "GaussianNoise",
    "StudentTNoise",
    "noise_law",
    "NOISE_LAWS",
    "prior_params",
    "sample_model",
    "bayes_rule",
    "bayes_risk_exact",
    "BayesCheck",
    "verify_bayes_optimality",
    "mc_risk",
    "replicate_rng",
    "make_estimator",
]


def prior_params(epsilon: float, q: float) -> tuple[float, float]:
    """Atom mass ``p = q**(4/3)`` and location ``lambda = epsilon q**(-1/3)``."""
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ConfigError(f"epsilon must be positive, got {epsilon!r}")
    if not 0 < q < 1:
        raise ConfigError(f"q must lie in (0, 1), got {q!r}")
    return q ** (4.0 / 3.0), epsilon * q ** (-1.0 / 3.0)


@dataclass(frozen=True)
class SparseModelSpec:
    epsilon: float
    q: float
    N: int = 100_000

    def __post_init__(self):
        prior_params(self.epsilon, self.q)
        if int(self.N) < 1:
            raise ConfigError(f"N must be positive, got {self.N!r}")

    @property
    def p(self) -> float:
        return prior_params(self.epsilon, self.q)[0]

    @property
    def lam(self) -> float:
        return prior_params(self.epsilon, self.q)[1]


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    std_error: float
    replicates: int


def replicate_rng(seed: int, *counter: int) -> np.random.Generator:
    """Generator for one replicate, keyed by position rather than draw order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(c) for c in counter)))


def _three_point(rng, size, p, lam):
    u = rng.random(size)
    out = np.zeros(size)
    out[u < p / 2] = -lam
    out[(u >= p / 2) & (u < p)] = lam
    return out


class NoiseLaw:
    """Member of the polynomial-tail noise class at level ``epsilon``.

    Subclasses certify the tail bound ``P(|e| > t) <= (epsilon/t)**4`` on a
    dense logarithmic grid when constructed.
    """

    name = "abstract"

    def __init__(self, epsilon: float):
        if not (epsilon > 0 and math.isfinite(epsilon)):
            raise ConfigError(f"epsilon must be positive, got {epsilon!r}")
        self.epsilon = float(epsilon)
        self.certify()

    def sf_abs(self, t):
        """``P(|e| > t)``."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size):
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def certify(self, atol: float = 1e-12) -> float:
        """Check the tail bound; returns ``sup_t t**4 P(|e| > t) / epsilon**4``."""
        t = self.epsilon * np.logspace(-3, 4, 4001)
        ratio = float(np.max(self.sf_abs(t) * (t / self.epsilon) ** 4))
        if ratio > 1 + atol:
            raise ConfigError(f"{self.name} noise violates the tail bound (ratio {ratio:.4g})")
        return ratio

    def __repr__(self):
        return f"{type(self).__name__}(epsilon={self.epsilon!r})"


class ThreePointNoise(NoiseLaw):
    """Noise with the prior's own law: ``+-lambda`` w.p. ``p/2`` each, else 0."""

    name = "three_point"

    def __init__(self, epsilon: float, q: float):
        self.p, self.lam = prior_params(epsilon, q)
        super().__init__(epsilon)

    def sf_abs(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.lam, self.p, 0.0)

    def certify(self, atol: float = 1e-12) -> float:
        # the supremum sits just below t = lambda, where it equals p lam**4/eps**4 = 1
        ratio = self.p * (self.lam / self.epsilon) ** 4
        if ratio > 1 + atol:
            raise ConfigError(f"three-point noise violates the tail bound (ratio {ratio:.4g})")
        return ratio

    def sample(self, rng, size):
        return _three_point(rng, size, self.p, self.lam)

    def second_moment(self) -> float:
        return self.p * self.lam**2


class GaussianNoise(NoiseLaw):
    """``N(0, epsilon**2)``; ``sup_u u**4 P(|Z| > u)`` is about 0.76 < 1."""

    name = "gaussian"

    def sf_abs(self, t):
        return 2.0 * stats.norm.sf(np.asarray(t) / self.epsilon)

    def sample(self, rng, size):
        return self.epsilon * rng.standard_normal(size)

    def second_moment(self) -> float:
        return self.epsilon**2


class StudentTNoise(NoiseLaw):
    """Student-t scaled so that its tail touches but never crosses the bound."""

    name = "student_t"

    def __init__(self, epsilon: float, df: float = 5.0):
        if not df > 4:
            raise ConfigError("Student-t noise needs df > 4 for a finite fourth moment")
        self.df = float(df)
        self.scale = epsilon / self._tail_constant(self.df)
        super().__init__(epsilon)

    @staticmethod
    def _tail_constant(df: float) -> float:
        # max_u u * P(|T| > u)**(1/4); the scale eps / max keeps the tail inside the class
        f = lambda lu: -np.exp(lu) * (2.0 * stats.t.sf(np.exp(lu), df)) ** 0.25  # noqa: E731
        grid = np.linspace(-3, 6, 901)
        best = grid[np.argmin([f(g) for g in grid])]
        res = optimize.minimize_scalar(f, bracket=(best - 0.02, best, best + 0.02))
        # a hair of slack absorbs optimiser error so the certificate is strict
        return float(-res.fun) * (1 + 1e-9)

    def sf_abs(self, t):
        return 2.0 * stats.t.sf(np.asarray(t) / self.scale, self.df)

    def sample(self, rng, size):
        return self.scale * rng.standard_t(self.df, size)

    def second_moment(self) -> float:
        return self.scale**2 * self.df / (self.df - 2.0)


NOISE_LAWS = ("three_point", "gaussian", "student_t")


def noise_law(name: str, spec: SparseModelSpec) -> NoiseLaw:
    if name == "three_point":
        return ThreePointNoise(spec.epsilon, spec.q)
    if name == "gaussian":
        return GaussianNoise(spec.epsilon)
    if name == "student_t":
        return StudentTNoise(spec.epsilon)
    raise ConfigError(f"unknown noise law {name!r}; expected one of {NOISE_LAWS}")


def sample_model(spec: SparseModelSpec, seed: int, noise: str | NoiseLaw = "three_point", N: int | None = None):
    """Draw ``(theta, Y)``: three-point signal plus independent noise."""
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    N = spec.N if N is None else int(N)
    law = noise if isinstance(noise, NoiseLaw) else noise_law(noise, spec)
    theta = _three_point(rng, N, spec.p, spec.lam)
    eps = law.sample(rng, N)
    return theta, theta + eps


def bayes_rule(y, lam: float, tol: float = 1e-9):
    """Posterior mean under three-point signal and noise: ``y/2`` on the support.

    ``y`` must lie on ``{-2 lam, -lam, 0, lam, 2 lam}`` (up to ``tol`` relative
    to ``lam``).
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    y = np.asarray(y, dtype=float)
    units = y / lam
    nearest = np.rint(units)
    off = (np.abs(units - nearest) > tol) | (np.abs(nearest) > 2) | ~np.isfinite(units)
    if np.any(off):
        bad = y[off] if y.ndim else y
        raise DomainError(f"observation(s) {np.ravel(bad)[:3]} off the support of the three-point model")
    out = nearest * lam / 2.0
    return float(out) if out.ndim == 0 else out


def bayes_risk_exact(epsilon: float, q: float) -> float:
    """``epsilon**2 q**(2/3) / 2``."""
    prior_params(epsilon, q)
    return epsilon**2 * q ** (2.0 / 3.0) / 2.0


@dataclass(frozen=True)
class BayesCheck:
    support: tuple[float, ...]
    minimiser: tuple[float, ...]
    rule: tuple[float, ...]
    risk: float
    exact_risk: float
    max_rule_error: float
    risk_error: float

    @property
    def ok(self) -> bool:
        return self.max_rule_error <= 1e-12 * max(1.0, max(map(abs, self.support))) and self.risk_error <= 1e-12


def verify_bayes_optimality(spec: SparseModelSpec) -> BayesCheck:
    """Brute-force Bayes rule by enumerating the nine (signal, noise) outcomes.

    The posterior risk is a sum of independent quadratics, one per observable
    value; each is minimised at the posterior mean of ``theta`` given ``Y``.
    """
    p, lam = spec.p, spec.lam
    atoms = ((-lam, p / 2), (0.0, 1 - p), (lam, p / 2))
    weight: dict[int, float] = {}
    moment: dict[int, float] = {}
    outcomes = []
    for th, p_th in atoms:
        for e, p_e in atoms:
            key = int(round((th + e) / lam))
            prob = p_th * p_e
            weight[key] = weight.get(key, 0.0) + prob
            moment[key] = moment.get(key, 0.0) + prob * th
            outcomes.append((key, th, prob))
    keys = sorted(weight)
    minimiser = {key: moment[key] / weight[key] for key in keys}
    risk = sum(prob * (minimiser[key] - th) ** 2 for key, th, prob in outcomes)
    support = tuple(key * lam for key in keys)
    rule = tuple(float(bayes_rule(y, lam)) for y in support)
    exact = bayes_risk_exact(spec.epsilon, spec.q)
    return BayesCheck(
        support=support,
        minimiser=tuple(minimiser[key] for key in keys),
        rule=rule,
        risk=risk,
        exact_risk=exact,
        max_rule_error=max(abs(a - b) for a, b in zip(rule, minimiser.values())),
        risk_error=abs(risk - exact),
    )


def make_estimator(name: str, spec: SparseModelSpec, K: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Coordinate-wise estimators used by the ``oracle`` command."""
    t = K * spec.lam
    if name == "bayes":
        return lambda y: bayes_rule(y, spec.lam)
    if name == "soft":
        return lambda y: soft(y, t)
    if name == "hard":
        return lambda y: hard(y, t)
    if name == "half":
        return lambda y: np.asarray(y) / 2.0
    raise ConfigError(f"unknown estimator {name!r}")


def mc_risk(
    estimator: Callable[[np.ndarray], np.ndarray],
    spec: SparseModelSpec,
    replicates: int,
    seed: int = 0,
    noise: str | NoiseLaw = "three_point",
    workers: int = 1,
) -> RiskEstimate:
    """Monte Carlo mean and standard error of ``(1/N) sum (T(Y_k) - theta_k)**2``.

    Replicate ``r`` uses its own generator derived from ``(seed, r)``, so the
    result does not depend on ``workers`` or on execution order.
    """
    replicates = int(replicates)
    if replicates < 2:
        raise ConfigError("need at least 2 replicates for a standard error")
    law = noise if isinstance(noise, NoiseLaw) else noise_law(noise, spec)

    def one(r: int) -> float:
        theta, y = sample_model(spec, replicate_rng(seed, r), law)
        est = np.asarray(estimator(y), dtype=float)
        if est.shape != y.shape or not np.all(np.isfinite(est)):
            raise EvaluationError(f"estimator returned non-finite or mis-shaped output in replicate {r}")
        return float(np.mean((est - theta) ** 2))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            losses = np.array(list(pool.map(one, range(replicates))))
    else:
        losses = np.array([one(r) for r in range(replicates)])
    return RiskEstimate(float(losses.mean()), float(losses.std(ddof=1) / np.sqrt(replicates)), replicates)
