"""Concrete compositional problems and the synthetic reward generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CompositionalProblem, DimensionError, check_point


# ---------------------------------------------------------------------------
# synthetic rewards


@dataclass
class RewardMatrix:
    """Non-negative rewards, one row per time point, one column per asset."""

    values: np.ndarray
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionError("reward matrix must be 2-D")
        n, N = self.values.shape
        if n < 2 or N < 1:
            raise DimensionError(f"need n >= 2 time points and N >= 1 assets, got {n}x{N}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("rewards must be finite and non-negative")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def save(self, path) -> None:
        lines = [f"{self.n} {self.N}"]
        lines += [" ".join(f"{v:.17g}" for v in row) for row in self.values]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "RewardMatrix":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: first line must be 'n N'")
            n, N = int(header[0]), int(header[1])
            values = np.loadtxt(fh, dtype=np.float64, ndmin=2)
        if values.shape != (n, N):
            raise DimensionError(f"{path}: header says {n}x{N}, body is {values.shape}")
        return cls(values)


def random_orthogonal(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    Z = rng.standard_normal((N, N))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def covariance_eigenvalues(N: int, kappa_cov: float) -> np.ndarray:
    # log-spaced in [1, kappa]; geomspace pins both endpoints exactly
    if N == 1:
        return np.ones(1)
    return np.geomspace(1.0, kappa_cov, N)


def gen_gaussian_rewards(n: int, N: int, kappa_cov: float, seed: int) -> RewardMatrix:
    """Folded zero-mean Gaussian rewards whose covariance has condition number ``kappa_cov``."""
    if kappa_cov < 1:
        raise ValueError(f"kappa_cov must be >= 1, got {kappa_cov}")
    if n < 2 or N < 1:
        raise DimensionError(f"need n >= 2 and N >= 1, got n={n}, N={N}")
    rng = np.random.default_rng(seed)
    Q = random_orthogonal(N, rng)
    lam = covariance_eigenvalues(N, kappa_cov)
    cov = (Q * lam) @ Q.T
    factor = Q * np.sqrt(lam)
    samples = rng.standard_normal((n, N)) @ factor.T
    return RewardMatrix(np.abs(samples), covariance=cov)


# ---------------------------------------------------------------------------
# mean-variance portfolio


class PortfolioProblem(CompositionalProblem):
    """Negated mean-variance portfolio objective.

    G_j(x) = (x, <r_j, x>) and F_i(y) = -y_N + (<r_i, y_{:N}> - y_N)^2, so
    f(x) = -(mean return - variance of returns).
    """

    def __init__(self, rewards: RewardMatrix):
        R = rewards.values if isinstance(rewards, RewardMatrix) else np.asarray(rewards, float)
        self.R = R
        self.m = self.n = R.shape[0]
        self.p = R.shape[1]
        self.q = self.p + 1
        self._check_dims()
        self._eye = np.eye(self.p)

    def inner_value(self, j, x):
        return np.append(x, self.R[j] @ x)

    def inner_jacobian(self, j, x):
        return np.vstack((self._eye, self.R[j]))

    def _delta(self, i, y):
        return self.R[i] @ y[: self.p] - y[self.p]

    def outer_value(self, i, y):
        return -y[self.p] + self._delta(i, y) ** 2

    def outer_gradient(self, i, y):
        d = self._delta(i, y)
        return np.append(2.0 * d * self.R[i], -1.0 - 2.0 * d)

    def direct_objective(self, x):
        returns = self.R @ x
        mean = math.fsum(returns) / len(returns)
        var = math.fsum((returns - mean) ** 2) / len(returns)
        return -(mean - var)


def make_portfolio(rewards: RewardMatrix) -> PortfolioProblem:
    return PortfolioProblem(rewards)


# ---------------------------------------------------------------------------
# smoothed LASSO


def pseudo_abs(w, eps):
    return np.sqrt(w * w + eps * eps) - eps


@dataclass
class LassoSpec:
    X: np.ndarray
    y: np.ndarray
    lam: float
    eps: float = 1e-4

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.eps <= 0:
            raise ValueError(f"smoothing eps must be > 0, got {self.eps}")
        if self.lam < 0:
            raise ValueError(f"penalty lam must be >= 0, got {self.lam}")
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise DimensionError(f"X {self.X.shape} and y {self.y.shape} disagree")


class LassoProblem(CompositionalProblem):
    """Least squares plus a smoothed l1 penalty, one inner map per coordinate.

    G_j(w) = (lam * s(w_j), d * w_j * e_j) in R^{1+d}, so the inner mean
    is (lam/d * sum_j s(w_j), w) and F_i(z) = (y_i - <x_i, z_{1:}>)^2 + d*z_0.
    """

    def __init__(self, spec: LassoSpec):
        self.spec = spec
        self.X, self.y = spec.X, spec.y
        self.lam, self.eps = float(spec.lam), float(spec.eps)
        self.n, d = self.X.shape
        self.m = self.p = d
        self.q = d + 1
        self._check_dims()

    def inner_value(self, j, w):
        out = np.zeros(self.q)
        out[0] = self.lam * pseudo_abs(w[j], self.eps)
        out[1 + j] = self.p * w[j]
        return out

    def inner_jacobian(self, j, w):
        J = np.zeros((self.q, self.p))
        J[0, j] = self.lam * w[j] / math.sqrt(w[j] ** 2 + self.eps**2)
        J[1 + j, j] = self.p
        return J

    def outer_value(self, i, z):
        r = self.y[i] - self.X[i] @ z[1:]
        return r * r + self.p * z[0]

    def outer_gradient(self, i, z):
        r = self.y[i] - self.X[i] @ z[1:]
        return np.concatenate(([float(self.p)], -2.0 * r * self.X[i]))

    def direct_objective(self, w):
        resid = self.y - self.X @ w
        return math.fsum(resid**2) / self.n + self.lam * math.fsum(pseudo_abs(w, self.eps))


def make_lasso(spec: LassoSpec) -> LassoProblem:
    return LassoProblem(spec)


def random_lasso(n: int, d: int, lam: float = 0.1, eps: float = 1e-4, seed: int = 0) -> LassoSpec:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w_true = rng.standard_normal(d) * (rng.random(d) < 0.5)
    y = X @ w_true + 0.1 * rng.standard_normal(n)
    return LassoSpec(X, y, lam, eps)


# ---------------------------------------------------------------------------
# policy evaluation


@dataclass
class MdpSpec:
    """Features, transition matrix and rewards of a fixed-policy MDP."""

    features: np.ndarray  # |S| x d
    transitions: np.ndarray  # |S| x |S|, rows are distributions
    rewards: np.ndarray  # |S| x |S|
    gamma: float

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        S = self.features.shape[0]
        if self.transitions.shape != (S, S) or self.rewards.shape != (S, S):
            raise DimensionError("transitions and rewards must be |S| x |S|")
        if np.any(self.transitions < 0):
            raise ValueError("transition probabilities must be non-negative")
        if np.any(np.abs(self.transitions.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition rows must sum to 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.gamma}")

    @property
    def num_states(self) -> int:
        return self.features.shape[0]


def random_mdp(num_states: int, d: int, gamma: float = 0.9, seed: int = 0) -> MdpSpec:
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((num_states, d))
    P = rng.random((num_states, num_states))
    P /= P.sum(axis=1, keepdims=True)
    # renormalise once more so every row sums to 1 within a few ulps
    P /= P.sum(axis=1, keepdims=True)
    rewards = rng.standard_normal((num_states, num_states))
    return MdpSpec(phi, P, rewards, gamma)


class PolicyEvalProblem(CompositionalProblem):
    """Bellman-residual minimisation with linear values, anchored at one state."""

    def __init__(self, spec: MdpSpec, anchor_state: int = 0):
        S = spec.num_states
        if not 0 <= anchor_state < S:
            raise ValueError(f"anchor_state must be in [0, {S}), got {anchor_state}")
        self.spec = spec
        self.anchor = int(anchor_state)
        self.phi = spec.features
        self.m = self.n = S
        self.p = spec.features.shape[1]
        self.q = self.p + 1
        self._check_dims()
        self._P = spec.transitions[self.anchor]
        self._r = spec.rewards[self.anchor]
        self._eye = np.eye(self.p)

    def inner_value(self, j, w):
        return np.append(w, self._P[j] * (self._r[j] + self.spec.gamma * (self.phi[j] @ w)))

    def inner_jacobian(self, j, w):
        return np.vstack((self._eye, self._P[j] * self.spec.gamma * self.phi[j]))

    def _delta(self, i, z):
        return self.phi[i] @ z[: self.p] - self.m * z[self.p]

    def outer_value(self, i, z):
        return self._delta(i, z) ** 2

    def outer_gradient(self, i, z):
        d = self._delta(i, z)
        return np.append(2.0 * d * self.phi[i], -2.0 * d * self.m)

    def bellman_target(self, w) -> float:
        return math.fsum(self._P * (self._r + self.spec.gamma * (self.phi @ w)))

    def direct_objective(self, w):
        resid = self.phi @ w - self.bellman_target(w)
        return math.fsum(resid**2) / self.n


def make_policy_eval(spec: MdpSpec, anchor_state: int = 0) -> PolicyEvalProblem:
    return PolicyEvalProblem(spec, anchor_state)


# ---------------------------------------------------------------------------
# strongly convex toy


class ToyQuadratic(CompositionalProblem):
    """Affine inner maps with diagonal quadratic outer functions.

    G_j(x) = A_j x + b_j,  F_i(y) = 1/2 sum_k D_ik (y_k - c_ik)^2 + mu/2 |y|^2.

    The composed objective is a strongly convex quadratic whenever the
    mean of the A_j has full column rank, so the minimiser and the
    constants mu_f, B_G and L_F are available in closed form.
    """

    def __init__(self, A, b, c, mu: float, curvature=None):
        if mu <= 0:
            raise ValueError(f"mu must be > 0, got {mu}")
        self.A = np.asarray(A, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.c = np.asarray(c, dtype=np.float64)
        self.mu = float(mu)
        self.m, self.q, self.p = self.A.shape
        self.n = self.c.shape[0]
        self.D = np.ones_like(self.c) if curvature is None else np.asarray(curvature, float)
        if self.b.shape != (self.m, self.q) or self.c.shape != (self.n, self.q):
            raise DimensionError("b must be m x q and c must be n x q")
        if self.D.shape != self.c.shape or np.any(self.D < 0):
            raise ValueError("curvature must be a non-negative n x q array")
        self._check_dims()

        self.A_mean = self.A.mean(axis=0)
        self.b_mean = self.b.mean(axis=0)
        self.h = self.D.mean(axis=0) + self.mu  # diagonal of the outer Hessian
        self.target = (self.D * self.c).mean(axis=0)
        H = self.A_mean.T @ (self.h[:, None] * self.A_mean)
        eig = np.linalg.eigvalsh(H)
        if eig[0] <= 1e-10 * max(eig[-1], 1.0):
            raise np.linalg.LinAlgError("composed Hessian is singular; try another seed")
        self.hessian = H
        self.mu_f = float(eig[0])
        self.L_f = float(eig[-1])
        self.B_G = float(max(np.linalg.norm(Aj, 2) for Aj in self.A))
        self.L_F = float(self.D.max() + self.mu)
        rhs = self.A_mean.T @ (self.target - self.h * self.b_mean)
        self.x_star = np.linalg.solve(H, rhs)
        self.f_star = self.direct_objective(self.x_star)

    def inner_value(self, j, x):
        return self.A[j] @ x + self.b[j]

    def inner_jacobian(self, j, x):
        return self.A[j].copy()

    def outer_value(self, i, y):
        r = y - self.c[i]
        return 0.5 * float(self.D[i] @ (r * r)) + 0.5 * self.mu * float(y @ y)

    def outer_gradient(self, i, y):
        return self.D[i] * (y - self.c[i]) + self.mu * y

    def direct_objective(self, x):
        x = check_point(self, x)
        y = self.A_mean @ x + self.b_mean
        r = y[None, :] - self.c
        return 0.5 * math.fsum((self.D * r * r).sum(axis=1)) / self.n + 0.5 * self.mu * float(y @ y)


def make_toy_quadratic(
    m: int,
    n: int,
    p: int,
    q: int,
    mu: float,
    seed: int,
    curvature_spread: float = 0.5,
    max_tries: int = 20,
) -> ToyQuadratic:
    """Random :class:`ToyQuadratic`; redraws when the composed Hessian is singular."""
    if q < p:
        raise DimensionError(f"need q >= p for a strongly convex composition, got q={q}, p={p}")
    if not 0 <= curvature_spread < 1:
        raise ValueError("curvature_spread must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        A = rng.standard_normal((m, q, p)) / math.sqrt(q) + np.eye(q, p)
        b = rng.standard_normal((m, q))
        c = rng.standard_normal((n, q))
        D = rng.uniform(1 - curvature_spread, 1 + curvature_spread, size=(n, q))
        try:
            return ToyQuadratic(A, b, c, mu, curvature=D)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(f"no well-posed toy problem after {max_tries} draws")
