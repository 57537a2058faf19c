import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varfield.conditions import (
    as_matrix,
    biquadratic_eval,
    check_skew,
    det_form_tensor,
    det_skew,
    from_hessian,
    hadamard_legendre_check,
    identity_tensor,
    quadratic_eval,
    quadratic_min_full,
    rank1_grid_minimum,
    rank1_minimum,
    skew_addition,
)
from varfield.errors import DomainError


def random_form(rng, nu, n):
    a = rng.normal(size=(nu, nu, n, n))
    return 0.5 * (a + a.transpose(1, 0, 3, 2))


def random_skew(rng, nu, n):
    r = rng.normal(size=(nu, nu, n, n))
    return (r - r.transpose(1, 0, 2, 3) - r.transpose(0, 1, 3, 2) + r.transpose(1, 0, 3, 2)) / 4


def test_biquadratic_examples():
    a = identity_tensor(2, 3)
    rng = np.random.default_rng(0)
    xi, eta = rng.normal(size=3), rng.normal(size=2)
    assert biquadratic_eval(a, xi, eta) == pytest.approx((xi @ xi) * (eta @ eta))
    assert biquadratic_eval(a, np.zeros(3), eta) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_biquadratic_equals_rank1_quadratic(seed, nu, n):
    rng = np.random.default_rng(seed)
    a = random_form(rng, nu, n)
    xi, eta = rng.normal(size=nu), rng.normal(size=n)
    # q[i, alpha] layout: the rank-one matrix eta (x) xi
    q = np.outer(eta, xi)
    assert biquadratic_eval(a, xi, eta) == pytest.approx(quadratic_eval(a, q), abs=1e-12)
    full = np.einsum("abij,ia,jb->", a, q, q)
    assert quadratic_eval(a, q) == pytest.approx(full, abs=1e-12)


def test_hadamard_examples():
    strict = hadamard_legendre_check(identity_tensor(2, 2))
    assert strict.verdict == "strict" and strict.minimum == pytest.approx(1.0) and strict.epsilon == pytest.approx(1.0)
    fails = hadamard_legendre_check(identity_tensor(2, 2, -1.0))
    assert fails.verdict == "fails" and fails.minimum == pytest.approx(-1.0)
    det = hadamard_legendre_check(det_form_tensor())
    assert det.verdict == "marginal" and abs(det.minimum) <= 1e-9


def test_det_form_grid_and_eigen_oracles():
    a = det_form_tensor()
    assert rank1_grid_minimum(a, 20) == pytest.approx(0.0, abs=1e-12)
    M = as_matrix(a)
    assert np.linalg.eigvalsh(0.5 * (M + M.T))[0] == pytest.approx(-1.0)
    assert quadratic_min_full(a) == pytest.approx(-1.0)
    assert quadratic_min_full(identity_tensor(2, 2)) == pytest.approx(1.0)


def test_det_form_is_hessian_of_det():
    def hess(q):
        Hm = np.zeros((2, 2, 2, 2))
        Hm[0, 0, 1, 1] = Hm[1, 1, 0, 0] = 1.0
        Hm[0, 1, 1, 0] = Hm[1, 0, 0, 1] = -1.0
        return Hm

    a = from_hessian(hess(None))
    rng = np.random.default_rng(1)
    for _ in range(10):
        q = rng.normal(size=(2, 2))
        assert quadratic_eval(a, q) == pytest.approx(2 * np.linalg.det(q))
    assert np.allclose(a, det_form_tensor())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_rank1_minimum_not_below_full_minimum(seed, nu, n):
    rng = np.random.default_rng(seed)
    a = random_form(rng, nu, n)
    assert rank1_minimum(a, rng, restarts=16)[0] >= quadratic_min_full(a) - 1e-9


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_grid_minimum_agrees_with_alternating_iteration(seed):
    rng = np.random.default_rng(seed)
    a = random_form(rng, 2, 2)
    alt = rank1_minimum(a, rng)[0]
    grid = rank1_grid_minimum(a, 60, zoom=3)
    assert grid >= alt - 1e-9
    assert grid - alt <= 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(2, 3))
def test_skew_addition_invisible_on_rank1(seed, nu, n):
    rng = np.random.default_rng(seed)
    a = random_form(rng, nu, n)
    b = skew_addition(a, random_skew(rng, nu, n))
    for _ in range(20):
        xi, eta = rng.normal(size=nu), rng.normal(size=n)
        assert biquadratic_eval(b, xi, eta) == pytest.approx(biquadratic_eval(a, xi, eta), abs=1e-12)


def test_skew_addition_zero_and_validation():
    a = det_form_tensor()
    assert np.array_equal(skew_addition(a, np.zeros_like(a)), a)
    with pytest.raises(DomainError):
        check_skew(np.ones((2, 2, 2, 2)))
    with pytest.raises(DomainError):
        skew_addition(a, np.zeros((2, 2, 3, 3)))


def test_det_skew_shifts_full_minimum_only():
    a = det_form_tensor()
    assert np.allclose(skew_addition(a, det_skew(-0.5)), 0.0)
    b = skew_addition(a, det_skew(-0.25))
    assert quadratic_min_full(b) == pytest.approx(-0.5)
    assert quadratic_min_full(b) > quadratic_min_full(a)
    assert rank1_minimum(b)[0] == pytest.approx(rank1_minimum(a)[0], abs=1e-12)
