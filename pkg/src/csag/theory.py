"""Closed-form convergence constants for C-SAG.

Implements the epoch contraction bound

    (1/K) sum_k E|x_k - x*|^2 <= (gamma1 / gamma2) E|x~ - x*|^2

and the parameter thresholds under which gamma1/gamma2 < 3/4.
Formulas are evaluated exactly as printed; no clamping is applied, so the
thresholds are frequently negative (infeasible) for realistic sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TheoryInputs:
    mu_f: float
    B_G: float
    L_F: float
    m: int
    n: int
    a: int
    alpha: float

    def __post_init__(self):
        for name in ("mu_f", "B_G", "L_F", "alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if not 1 <= self.a <= self.m:
            raise ValueError(f"need 1 <= a <= m, got a={self.a}, m={self.m}")

    @property
    def kappa(self) -> float:
        """B_G^4 L_F^2, the factor every variance term carries."""
        return self.B_G**4 * self.L_F**2


# Coefficients shared by the constants and the thresholds.


def _c1(m, n):
    return (m - 1) ** 2 * (1 - 1 / n) * (n + 2) + (n - 1) * (4 * m - 3)


def _d1(m, n):
    return (m - 1) ** 2 * (1 - 1 / n) ** 2 + (1 - 1 / n) ** 2


def _c2(m, n):
    return (m - 1) ** 2 * (2 * n - 1) + n + 4 * n * (m - 1)


def _d2(m, a):
    return (1 - 1 / m) ** 2 * m + 16 * (m - a)


def sigma_constants(inp: TheoryInputs) -> tuple[float, float]:
    m, n, a, al, mu = inp.m, inp.n, inp.a, inp.alpha, inp.mu_f
    sigma1 = 9 * al**2 * _c1(m, n) + 16 * al * n * _d1(m, n) / mu
    sigma2 = 9 * al**2 / m * _c2(m, n) + 16 * al * _d2(m, a) / (m**2 * mu)
    return sigma1, sigma2


@dataclass(frozen=True)
class ContractionBound:
    gamma1: float
    gamma2: float
    ratio: float
    vacuous: bool  # gamma2 <= 0: the bound says nothing


def contraction_ratio(inp: TheoryInputs, K: float) -> ContractionBound:
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    m, a, al, mu = inp.m, inp.a, inp.alpha, inp.mu_f
    s1, s2 = sigma_constants(inp)
    gamma1 = 1 / K + (inp.n * s1 + 3 * m * (1 - (a / m) ** 2) * s2) * inp.kappa
    gamma2 = al * mu - (32 * al * (m - a) / (m * mu) + 3 * a * (2 - a / m) * s2) * inp.kappa
    if gamma2 <= 0:
        return ContractionBound(gamma1, gamma2, math.inf, True)
    return ContractionBound(gamma1, gamma2, gamma1 / gamma2, False)


def _threshold(numerator: float, denominator: float) -> float:
    # a zero denominator means the constraint has no alpha-dependent part
    if denominator == 0:
        return math.inf if numerator > 0 else -math.inf
    return numerator / denominator


@dataclass(frozen=True)
class CorollaryParams:
    a_min: float
    alpha1: float
    alpha2: float
    alpha3: float
    K_min: float | None
    feasible: bool
    mu_f: float

    @property
    def alpha_max(self) -> float:
        return min(self.alpha1, self.alpha2, self.alpha3)

    def admits(self, a: int, alpha: float, K: float) -> bool:
        """True when (a, alpha, K) meets all three strict conditions."""
        return (
            self.feasible
            and a > self.a_min
            and alpha < self.alpha_max
            and K > 8 / (alpha * self.mu_f)
        )


def corollary_params(
    mu_f: float, B_G: float, L_F: float, m: int, n: int, a: int, alpha: float | None = None
) -> CorollaryParams:
    """Batch, step-size and period thresholds guaranteeing ratio < 3/4.

    ``feasible`` is True when ``a`` exceeds the batch threshold and all
    three step-size thresholds are positive.  ``K_min`` is reported only
    when ``alpha`` is given.
    """
    if not (mu_f > 0 and B_G > 0 and L_F > 0):
        raise ValueError("mu_f, B_G and L_F must be positive")
    if not 1 <= a <= m:
        raise ValueError(f"need 1 <= a <= m, got a={a}, m={m}")
    kappa = B_G**4 * L_F**2
    a_min = m * (1 - mu_f**2 / (128 * kappa))
    batch_pen = 16 * _d2(m, a) / (m**2 * mu_f)
    alpha1 = _threshold(
        m * (mu_f / (12 * a * (2 - a / m) * kappa) - batch_pen), 9 * _c2(m, n)
    )
    alpha2 = _threshold(mu_f / (8 * n * kappa) - 16 * n * _d1(m, n) / mu_f, 9 * _c1(m, n))
    shrink = 1 - (a / m) ** 2
    if shrink == 0:
        # the term this threshold controls is identically zero when a = m
        alpha3 = math.inf
    else:
        alpha3 = _threshold(m * (mu_f / (24 * m * shrink * kappa) - batch_pen), 9 * _c2(m, n))
    K_min = None if alpha is None else 8 / (alpha * mu_f)
    feasible = a > a_min and min(alpha1, alpha2, alpha3) > 0
    return CorollaryParams(a_min, alpha1, alpha2, alpha3, K_min, feasible, mu_f)


@dataclass(frozen=True)
class TheoryOutputs:
    sigma1: float
    sigma2: float
    gamma1: float
    gamma2: float
    ratio: float
    vacuous: bool
    a_min: float
    alpha1: float
    alpha2: float
    alpha3: float
    K_min: float
    feasible: bool
    K: float


def theory_report(inp: TheoryInputs, K: float | None = None) -> TheoryOutputs:
    """All constants for one parameter set; K defaults to floor(K_min) + 1."""
    cor = corollary_params(inp.mu_f, inp.B_G, inp.L_F, inp.m, inp.n, inp.a, inp.alpha)
    if K is None:
        K = math.floor(cor.K_min) + 1
    s1, s2 = sigma_constants(inp)
    bound = contraction_ratio(inp, K)
    return TheoryOutputs(
        s1, s2, bound.gamma1, bound.gamma2, bound.ratio, bound.vacuous,
        cor.a_min, cor.alpha1, cor.alpha2, cor.alpha3, cor.K_min, cor.feasible, K,
    )


def batch_terms(inp: TheoryInputs) -> dict[str, float]:
    """The (m - a) contributions that vanish for a full batch."""
    m, a, al, mu = inp.m, inp.a, inp.alpha, inp.mu_f
    _, s2 = sigma_constants(inp)
    return {
        "sigma2_batch_term": 16 * al * 16 * (m - a) / (m**2 * mu),
        "gamma1_sigma2_term": 3 * m * (1 - (a / m) ** 2) * s2 * inp.kappa,
        "gamma2_batch_term": 32 * al * (m - a) / (m * mu) * inp.kappa,
    }
