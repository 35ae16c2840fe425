import numpy as np
import pytest

from csag.core import (
    CompositionalProblem,
    DimensionError,
    NonFiniteError,
    OracleTally,
    compose_objective,
    finite_difference_gradient,
    full_gradient,
    relative_error,
)
from csag.problems import ToyQuadratic


class Affine(CompositionalProblem):
    """G_j(x) = A_j x, F_i(y) = <b_i, y>, both given explicitly."""

    def __init__(self, A, B):
        self.A, self.B = np.asarray(A, float), np.asarray(B, float)
        self.m, self.q, self.p = self.A.shape
        self.n = self.B.shape[0]

    def inner_value(self, j, x):
        return self.A[j] @ x

    def inner_jacobian(self, j, x):
        return self.A[j]

    def outer_value(self, i, y):
        return float(self.B[i] @ y)

    def outer_gradient(self, i, y):
        return self.B[i]


class SquaredNorm(CompositionalProblem):
    m = n = 1
    p = q = 2

    def inner_value(self, j, x):
        return np.asarray(x, float)

    def inner_jacobian(self, j, x):
        return np.eye(2)

    def outer_value(self, i, y):
        return float(y @ y)

    def outer_gradient(self, i, y):
        return 2 * y


class Broken(SquaredNorm):
    def outer_gradient(self, i, y):
        return np.array([np.nan, 0.0])


def test_identity_composition_value():
    assert compose_objective(SquaredNorm(), np.array([3.0, 4.0])) == 25.0


def test_inner_averaging_is_forced():
    prob = Affine([[[1.0]], [[3.0]]], [[1.0]])
    assert compose_objective(prob, np.array([1.0])) == 2.0


def test_linear_composition_has_constant_gradient(rng):
    A = rng.standard_normal((3, 4, 5))
    B = rng.standard_normal((2, 4))
    prob = Affine(A, B)
    expected = A.mean(axis=0).T @ B.mean(axis=0)
    for _ in range(5):
        g = full_gradient(prob, rng.standard_normal(5))
        np.testing.assert_allclose(g, expected, rtol=1e-13, atol=1e-14)


def test_full_gradient_charges_m_m_n():
    prob = Affine(np.ones((3, 2, 2)), np.ones((5, 2)))
    tally = OracleTally()
    full_gradient(prob, np.zeros(2), tally)
    assert tally.snapshot() == (3, 3, 5)
    assert tally.total() == 11
    full_gradient(prob, np.zeros(2), tally)
    assert tally.snapshot() == (6, 6, 10)


def test_compose_objective_charges_only_inner_values():
    prob = Affine(np.ones((3, 2, 2)), np.ones((5, 2)))
    tally = OracleTally()
    compose_objective(prob, np.zeros(2), tally)
    assert tally.snapshot() == (0, 3, 0)


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        full_gradient(SquaredNorm(), np.zeros(3))
    with pytest.raises(DimensionError):
        compose_objective(SquaredNorm(), np.zeros(1))


def test_non_finite_oracle_raises():
    with pytest.raises(NonFiniteError):
        full_gradient(Broken(), np.ones(2))


def test_fd_on_squared_norm():
    fd = finite_difference_gradient(SquaredNorm(), np.array([1.0, 0.0]), h=1e-6)
    np.testing.assert_allclose(fd, [2.0, 0.0], atol=1e-6)


def test_fd_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_difference_gradient(SquaredNorm(), np.ones(2), h=0.0)


def test_fd_is_not_charged():
    # the measurement path never touches a caller's tally
    prob = SquaredNorm()
    tally = OracleTally()
    finite_difference_gradient(prob, np.ones(2))
    assert tally.total() == 0


def test_fd_and_gradient_vanish_at_minimiser(toy):
    assert np.linalg.norm(full_gradient(toy, toy.x_star)) <= 1e-10
    assert np.linalg.norm(finite_difference_gradient(toy, toy.x_star, 1e-5)) <= 1e-8


def test_toy_closed_form_identity_case():
    mu = 0.3
    prob = ToyQuadratic(np.eye(2)[None], np.zeros((1, 2)), np.zeros((1, 2)), mu)
    x = np.array([1.5, -2.0])
    assert compose_objective(prob, x) == pytest.approx((1 + mu) / 2 * (x @ x), rel=1e-14)
    np.testing.assert_allclose(prob.x_star, 0.0, atol=1e-15)


def test_fd_error_is_second_order(suite):
    # smoothed-LASSO objective is not polynomial, so truncation error is visible
    from csag.problems import make_lasso, random_lasso

    prob = make_lasso(random_lasso(30, 4, lam=1.0, eps=0.5, seed=11))
    x = np.array([0.3, -0.2, 0.5, 0.1])
    g = full_gradient(prob, x)
    errs = [np.linalg.norm(finite_difference_gradient(prob, x, h) - g) for h in (2e-2, 1e-2, 5e-3)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 < coarse / fine < 4.5


@pytest.mark.parametrize("kind", ["portfolio", "lasso", "policy", "toy"])
def test_chain_rule_matches_finite_differences(suite, kind):
    prob = suite[kind]
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal(prob.p)
        worst = max(worst, relative_error(full_gradient(prob, x), finite_difference_gradient(prob, x, 1e-5)))
    assert worst <= 1e-4


@pytest.mark.parametrize("kind", ["portfolio", "lasso", "policy", "toy"])
def test_composed_and_direct_objective_agree(suite, kind):
    prob = suite[kind]
    rng = np.random.default_rng(8)
    for _ in range(100):
        x = rng.standard_normal(prob.p)
        direct = prob.direct_objective(x)
        assert abs(compose_objective(prob, x) - direct) <= 1e-10 * (1 + abs(direct))


def test_relative_error_is_scale_free():
    a = np.array([1.0, 2.0])
    assert relative_error(a * 1e6, a * 1e6 * (1 + 1e-9)) == pytest.approx(1e-9, rel=1e-3)
