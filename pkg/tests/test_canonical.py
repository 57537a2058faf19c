import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varfield.canonical import (
    CanonicalField,
    action_plucker_identities,
    all_closedness_residuals,
    canonical_coords,
    canonical_from_actions,
    canonical_system_residual,
    closedness_residuals,
    field_momentum_residuals,
    invariant_form_expansion,
    invariant_form_S,
    omega_field,
    omega_from_qstar,
    omega_value,
    poincare_cartan_delta,
    potential_residuals,
)
from varfield.catalog import load_catalog
from varfield.errors import SingularTransformError
from varfield.fields import ActionFunctions, Lagrangian, SlopeField
from varfield.multilinear import ext_derivative, multi_indices, pullback_top


def linear_actions(a, B, c=None):
    n, nu = B.shape
    c = np.zeros(n) if c is None else c
    return ActionFunctions(n, nu, lambda t, x: a * t + B @ x + c, lambda t, x: (a * np.eye(n), B))


def general_linear_actions(T, B):
    n, nu = B.shape
    return ActionFunctions(n, nu, lambda t, x: T @ t + B @ x, lambda t, x: (T, B))


def smooth_actions(rng, n, nu):
    T = np.eye(n) + rng.uniform(-0.2, 0.2, (n, n))
    B = rng.uniform(-0.5, 0.5, (n, nu))
    C = rng.uniform(-0.3, 0.3, (n, nu))
    return ActionFunctions(n, nu, lambda t, x: T @ t + B @ x + C @ (x * x) + 0.1 * np.sin(t).sum())


def elementary_symmetric(M, k):
    eig = np.linalg.eigvals(M)
    return float(np.real(sum(np.prod(c) for c in itertools.combinations(eig, k))))


def test_invariant_form_examples():
    n, nu, k = 3, 2, 2
    S = linear_actions(1.0, np.zeros((n, nu)))
    pt = (np.zeros(n), np.zeros(nu))
    assert invariant_form_S(S, pt, np.ones((n, nu)), k) == pytest.approx(comb(n, k))
    T = np.random.default_rng(0).normal(size=(n, n))
    S = general_linear_actions(T, np.zeros((n, nu)))
    assert invariant_form_S(S, pt, np.zeros((n, nu)), n) == pytest.approx(np.linalg.det(T))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 1), (2, 2), (3, 1), (3, 2), (3, 3)]), st.integers(1, 3))
def test_invariant_form_eigen_oracle_and_expansion(seed, nk, nu):
    n, k = nk
    rng = np.random.default_rng(seed)
    T, B = rng.normal(size=(n, n)), rng.normal(size=(n, nu))
    S = general_linear_actions(T, B)
    xdot = rng.normal(size=(n, nu))
    pt = (rng.normal(size=n), rng.normal(size=nu))
    value = invariant_form_S(S, pt, xdot, k)
    assert value == pytest.approx(elementary_symmetric(T + B @ xdot.T, k), abs=1e-9)
    assert invariant_form_expansion(S, pt, xdot, k) == pytest.approx(value, abs=1e-10)


def test_poincare_cartan_examples():
    rng = np.random.default_rng(1)
    n, nu = 3, 2
    L = Lagrangian(n, nu, lambda t, x, q: 1.5 + np.sum(q**2) + 0.2 * np.sum(q**3), lambda t, x, q: 2 * q + 0.6 * q**2)
    G0 = rng.uniform(-0.5, 0.5, (n, nu))
    g = SlopeField(n, nu, lambda t, x: G0)
    pt = (np.zeros(n), np.zeros(nu))
    fhat, phat = L(*pt, G0), L.momentum(*pt, G0)
    assert poincare_cartan_delta(L, g, pt, G0, 2) == pytest.approx(fhat)
    q = G0 + rng.normal(size=(n, nu))
    assert poincare_cartan_delta(L, g, pt, q, 1) == pytest.approx(fhat + np.sum(phat * (q - G0)))
    for k in (2, 3):
        M = fhat * np.eye(n) + (n / k) * phat @ (q - G0).T
        blocks = sum(np.linalg.det(M[np.ix_(K, K)]) for K in multi_indices(n, k))
        assert poincare_cartan_delta(L, g, pt, q, k) == pytest.approx(blocks / (comb(n, k) * fhat ** (k - 1)), abs=1e-9)


def test_canonical_coords_examples():
    rng = np.random.default_rng(2)
    qs = rng.normal(size=(3, 2))
    assert np.allclose(canonical_coords(qs, 3 / 2, 2, 3), qs)
    H = 1.7
    Q = canonical_coords(qs, H, 2, 3)
    assert np.allclose(2 * H * Q / 3, qs)
    with pytest.raises(SingularTransformError):
        canonical_coords(qs, 0.0, 2, 3)


def test_omega_value_structure():
    n, nu, k = 3, 2, 2
    CF = CanonicalField(n, nu, k, lambda t, x: 1.3, lambda t, x: np.zeros((n, nu)))
    om = omega_value(CF, (np.zeros(n), np.zeros(nu)))
    nz = om.as_dict(1e-15)
    assert list(nz) == [(0, 1, 2)]
    assert nz[(0, 1, 2)] == pytest.approx(comb(n, k) * 1.3)
    Q = np.array([[0.4, -0.7]])
    CF1 = CanonicalField(1, 2, 1, lambda t, x: 2.0, lambda t, x: Q)
    om1 = omega_value(CF1, (np.zeros(1), np.zeros(2)))
    assert np.allclose(om1.coeffs, 2.0 * np.array([1.0, 0.4, -0.7]))


def test_omega_from_qstar_matches_omega_value():
    rng = np.random.default_rng(3)
    n, nu, k = 3, 2, 2
    qs, H = rng.normal(size=(n, nu)), 1.4
    CF = CanonicalField.from_qstar(n, nu, k, lambda t, x: H, lambda t, x: qs)
    pt = (np.zeros(n), np.zeros(nu))
    assert np.allclose(omega_value(CF, pt).coeffs, omega_from_qstar(qs, H, k).coeffs, atol=1e-12)
    assert np.allclose(CF.q_star(pt), qs)


@pytest.mark.parametrize("n,k,nu", [(2, 1, 2), (3, 2, 2), (2, 2, 3), (3, 3, 2)])
def test_omega_pullback_equals_invariant_form(n, k, nu):
    rng = np.random.default_rng(4 + n + k)
    # intermediate k needs a scalar time gradient, so S = t + f(x) there
    B = rng.uniform(-0.5, 0.5, (n, nu))
    C = rng.uniform(-0.3, 0.3, (n, nu))
    scalar_time = ActionFunctions(n, nu, lambda t, x: t + B @ x + C @ np.sin(x))
    cases = [scalar_time] + ([smooth_actions(rng, n, nu)] if k in (1, n) else [])
    for S in cases:
        CF = CanonicalField.from_actions(S, k)
        for _ in range(3):
            pt = (rng.uniform(-0.3, 0.3, n), rng.uniform(-0.3, 0.3, nu))
            xdot = rng.normal(size=(n, nu))
            jac = np.vstack([np.eye(n), xdot.T])
            pulled = pullback_top(omega_value(CF, pt), jac) / comb(n, k)
            assert pulled == pytest.approx(invariant_form_S(S, pt, xdot, k), abs=1e-8)


def test_closedness_constant_field_is_exact_zero():
    CF = CanonicalField(2, 3, 1, lambda t, x: 1.1, lambda t, x: np.full((2, 3), 0.3))
    res = all_closedness_residuals(CF, (np.zeros(2), np.zeros(3)))
    assert len(res) == sum(comb(2, s) * comb(3, s + 1) for s in range(0, 3))
    assert max(abs(v) for v in res.values()) == 0.0


def test_closedness_hamilton_jacobi_and_perturbed():
    prob = load_catalog("oscillator")
    pts = prob.grid(shrink=1e-3)
    assert max(max(abs(v) for v in all_closedness_residuals(prob.canonical, p).values()) for p in pts) <= 1e-5
    bumped = [max(abs(v) for v in all_closedness_residuals(prob.perturbed, p).values()) for p in pts]
    assert min(bumped) > 1e-3


@pytest.mark.parametrize("n,k,nu", [(1, 1, 2), (2, 1, 2), (2, 2, 3), (3, 2, 2)])
def test_closedness_matches_exterior_derivative(n, k, nu):
    rng = np.random.default_rng(10 + n * k * nu)
    c = rng.uniform(-0.5, 0.5, (n, nu, n + nu))
    h = rng.uniform(-0.3, 0.3, n + nu)
    H = lambda t, x: 1.5 + np.sin(h @ np.concatenate([t, x]))
    Q = lambda t, x: 0.3 + np.einsum("iac,c->ia", c, np.concatenate([t, x])) ** 2
    CF = CanonicalField(n, nu, k, H, Q)
    for _ in range(2):
        pt = (rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, nu))
        d = ext_derivative(omega_field(CF), np.concatenate(pt))
        checked = 0
        for (J, Xi), v in all_closedness_residuals(CF, pt).items():
            target = tuple([i for i in range(n) if i not in J] + [n + a for a in Xi])
            assert v == pytest.approx(d.coefficient(target), abs=1e-6)
            checked += 1
        assert checked > 0
    with pytest.raises(ValueError):
        closedness_residuals(CF, pt, (0,), (0,))


def test_canonical_system_examples():
    H = lambda t, x, qs: 0.5 * float(np.sum(qs * qs)) + 0.5 * float(x @ x)
    traj = lambda t: (np.array([np.cos(t[0])]), np.array([[np.sin(t[0])]]))
    for t in np.linspace(0, 3, 7):
        a, b = canonical_system_residual(H, traj, [t], 1, 1)
        assert np.abs(a).max() <= 1e-5 and np.abs(b).max() <= 1e-5
    const = lambda t: (np.array([0.3, 0.2]), np.array([[1.0, 2.0]]))
    a, b = canonical_system_residual(lambda t, x, qs: 4.0, const, [0.5], 1, 1)
    assert np.abs(a).max() == 0.0 and np.abs(b).max() == 0.0


def test_field_momentum_on_closed_field():
    prob = load_catalog("oscillator")
    for p in prob.grid(3, shrink=1e-3):
        weighted, plain = field_momentum_residuals(prob.canonical, p)
        assert np.abs(weighted).max() <= 1e-5
        assert np.abs(plain).max() <= 1e-5


def test_action_identity_examples():
    for n, k in [(2, 1), (3, 2), (4, 2), (3, 3)]:
        S = linear_actions(1.0, np.zeros((n, 2)))
        H, qs, Q = canonical_from_actions(S, (np.zeros(n), np.zeros(2)), k)
        assert H == pytest.approx(comb(n, k))
    rng = np.random.default_rng(5)
    B = rng.normal(size=(3, 2))
    S = linear_actions(1.0, B)
    H, qs, Q = canonical_from_actions(S, (np.zeros(3), np.zeros(2)), 2)
    # s = 1: C(n-1, k-1) counts the K containing i
    assert np.allclose(qs, comb(2, 1) * B)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_action_identities_linear_actions(seed):
    rng = np.random.default_rng(seed)
    n, k, nu = 3, 2, 2
    S = linear_actions(rng.uniform(0.5, 2.0), rng.normal(size=(n, nu)), rng.normal(size=n))
    CF = CanonicalField.from_actions(S, k)
    pt = (rng.normal(size=n), rng.normal(size=nu))
    for s in range(0, 3):
        for J in multi_indices(n, s):
            for Xi in multi_indices(nu, s):
                assert abs(action_plucker_identities(S, CF, pt, J, Xi)) <= 1e-8


def test_action_identity_needs_scalar_time_gradient():
    rng = np.random.default_rng(6)
    T = np.eye(3) + rng.uniform(-0.5, 0.5, (3, 3))
    S = general_linear_actions(T, rng.normal(size=(3, 2)))
    CF = CanonicalField.from_actions(S, 2)
    pt = (np.zeros(3), np.zeros(2))
    worst = max(abs(action_plucker_identities(S, CF, pt, J, (0, 1))) for J in multi_indices(3, 2))
    assert worst > 1e-3


def test_potential_residual_is_scaled_operator_identity():
    rng = np.random.default_rng(7)
    n, nu, k = 2, 3, 1
    c = rng.uniform(-0.5, 0.5, (n, nu, n + nu))
    H = lambda t, x: 1.2 + 0.3 * np.cos(np.sum(t) - np.sum(x))
    Q = lambda t, x: np.einsum("iac,c->ia", c, np.concatenate([t, x])) ** 2
    CF = CanonicalField(n, nu, k, H, Q)
    pt = (rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, nu))
    z0 = np.concatenate(pt)
    h = 1e-5

    def L(fn, mu):
        Qv = Q(*pt)
        grad = np.array([(fn(z0 + h * e) - fn(z0 - h * e)) / (2 * h) for e in np.eye(n + nu)])
        return grad[n + mu] - Qv[:, mu] @ grad[:n]

    got = potential_residuals(CF, pt)
    for l in range(n):
        for lam in range(nu):
            for mu in range(nu):
                hq = lambda a: (lambda z: H(z[:n], z[n:]) * Q(z[:n], z[n:])[l, a])
                want = (k / n) * (L(hq(mu), lam) - L(hq(lam), mu))
                assert got[l, lam, mu] == pytest.approx(want, abs=1e-6)
