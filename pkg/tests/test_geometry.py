import numpy as np
import pytest

from varfield.catalog import OSC_C, OSC_T0, load_catalog
from varfield.fields import ActionFunctions, Lagrangian
from varfield.geometry import (
    VariationalSolution,
    connection_from_V,
    covariant_derivative,
    curvature,
    random_polynomial_frame,
    riccati_residual,
    transversality_matrix,
    transversality_residual,
    variational_residual,
    w_from_actions,
)
from varfield.multilinear import jacobian

W0 = np.array([[0.5, 0.1], [0.1, 0.3]])


def quartic(n, nu):
    return Lagrangian(n, nu, lambda t, x, q: 2.0 + np.sum(q**2) + 0.1 * np.sum(x**2), lambda t, x, q: 2 * q)


def oscillator_closed_form(t, V0, U0):
    """V = V0 cos t + U0 sin t and U = U0 cos t - V0 sin t solve the oscillator's variational system."""
    c, s = np.cos(t), np.sin(t)
    return V0 * c + U0 * s, U0 * c - V0 * s


def oscillator_blocks(H, A0, B0):
    def blocks(t):
        t0 = np.ravel(t)[0]
        x = A0 * np.cos(t0) + B0 * np.sin(t0)
        return H.blocks(x, (B0 * np.cos(t0) - A0 * np.sin(t0))[None])
    return blocks


def test_transversality_zero_pair_and_classical_form():
    rng = np.random.default_rng(0)
    L = quartic(2, 2)
    B = rng.normal(size=(2, 2))
    surface = lambda t: B @ t
    zero = (lambda t, x: np.zeros(2), lambda t, x: np.zeros(2))
    assert np.all(transversality_residual(L, surface, zero, np.array([0.1, 0.2])) == 0.0)
    # one parameter: (f - p . x') T + p . X
    L1 = quartic(1, 2)
    curve = lambda t: np.array([np.sin(t[0]), t[0] ** 2])
    t = np.array([0.4])
    x, xd = curve(t), np.array([np.cos(0.4), 0.8])
    f, p = L1(t, x, xd[None]), L1.momentum(t, x, xd[None])[0]
    T, X = 0.7, np.array([0.3, -1.1])
    got = transversality_residual(L1, curve, (lambda t, x: [T], lambda t, x: X), t)
    assert got[0] == pytest.approx((f - p @ xd) * T + p @ X, abs=1e-8)


@pytest.mark.parametrize("n,nu", [(1, 2), (2, 2), (2, 3), (3, 2)])
def test_transversality_kernel_dimension(n, nu):
    rng = np.random.default_rng(n * 10 + nu)
    L = quartic(n, nu)
    B = rng.uniform(-0.5, 0.5, (nu, n))
    M = transversality_matrix(L, lambda t: B @ t, rng.uniform(-0.5, 0.5, n))
    assert M.shape == (n, n + nu)
    assert np.linalg.matrix_rank(M) == n
    _, _, vt = np.linalg.svd(M)
    assert np.abs(M @ vt[n:].T).max() <= 1e-12


def test_variational_solution_matches_closed_form():
    prob = load_catalog("oscillator")
    x0, q0 = prob.trajectory(np.array([0.0]))
    sol = VariationalSolution(prob.hamiltonian, np.ravel(x0), np.ravel(q0), np.eye(2), W0, 0.0, 1.0)
    for t in (0.0, 0.3, 0.77, 1.0):
        V, U = oscillator_closed_form(t, np.eye(2), W0)
        assert np.abs(sol.V([t]) - V).max() <= 1e-8
        assert np.abs(sol.U([t])[0] - U).max() <= 1e-8
        a, b = variational_residual(sol.blocks, sol.U, sol.V, [t])
        assert max(np.abs(a).max(), np.abs(b).max()) <= 1e-5


def test_variational_residual_closed_form_and_perturbed():
    prob = load_catalog("oscillator")
    blocks = oscillator_blocks(prob.hamiltonian, np.array([0.8, 0.5]), np.array([0.3, 0.9]))
    V = lambda t: oscillator_closed_form(t[0], np.eye(2), W0)[0]
    U = lambda t: oscillator_closed_form(t[0], np.eye(2), W0)[1][None]
    a, b = variational_residual(blocks, U, V, [0.4])
    assert max(np.abs(a).max(), np.abs(b).max()) <= 1e-6
    bent = lambda t: V(t) + 0.1 * t[0] ** 2 * np.eye(2)
    a, b = variational_residual(blocks, U, bent, [0.4])
    assert max(np.abs(a).max(), np.abs(b).max()) > 1e-3


def test_riccati_closed_form_oscillator():
    prob = load_catalog("oscillator")
    blocks = oscillator_blocks(prob.hamiltonian, np.array([0.8, 0.5]), np.array([0.3, 0.9]))

    def W(t):
        c, s = np.cos(t[0]), np.sin(t[0])
        return ((W0 * c - np.eye(2) * s) @ np.linalg.inv(np.eye(2) * c + W0 * s))[None]

    for t in (0.1, 0.5, 0.9):
        assert np.abs(riccati_residual(blocks, W, [t])).max() <= 1e-6
    assert np.abs(riccati_residual(blocks, lambda t: W0[None], [0.5])).max() > 0.1
    sol = VariationalSolution(prob.hamiltonian, np.array([0.8, 0.5]), np.array([0.3, 0.9]), np.eye(2), W0, 0.0, 1.0)
    for t in (0.2, 0.6):
        assert np.abs(sol.W([t]) - W([t])).max() <= 1e-8
        assert np.abs(riccati_residual(sol.blocks, sol.W, [t])).max() <= 1e-4


def test_w_from_actions_is_action_hessian():
    S = load_catalog("oscillator").actions
    surface = lambda t: np.array([0.9, 1.1]) + 0.2 * t[0]
    for t in (0.1, 0.6):
        W = w_from_actions(S, surface, [t], 1)[0]
        assert np.abs(W - np.tan(OSC_T0 - t) * np.eye(2)).max() <= 1e-6
    assert np.ravel(OSC_C).shape == (2,)


def test_w_from_actions_general_hessian():
    rng = np.random.default_rng(1)
    C = rng.normal(size=(2, 2))
    C = C + C.T
    S = ActionFunctions(1, 2, lambda t, x: np.array([t[0] + 0.5 * x @ C @ x + t[0] * x.sum()]))
    surface = lambda t: np.array([0.2, -0.1]) * t[0]
    W = w_from_actions(S, surface, [0.3], 1)[0]
    assert np.abs(W - C).max() <= 1e-5


def test_covariant_derivative_examples():
    section = lambda t: np.array([t[0] ** 2, t[0] * t[1]])
    zero = lambda t: np.zeros((2, 2, 2))
    t = np.array([0.5, -0.3])
    got = covariant_derivative(zero, section, np.array([1.0, 2.0]), t)
    assert np.allclose(got, [2 * 0.5, -0.3 + 2 * 0.5], atol=1e-8)
    rng = np.random.default_rng(2)
    V, dV = random_polynomial_frame(rng, 2, 2)
    y = connection_from_V(V, dV)
    c = rng.normal(size=2)
    horizontal = covariant_derivative(lambda s: -y(s), lambda s: V(s) @ c, rng.normal(size=2), t)
    assert np.abs(horizontal).max() <= 1e-7


def test_curvature_examples():
    A = np.diag([1.0, 2.0])
    const = lambda t: np.array([A, 3 * A])
    assert np.all(curvature(const, np.zeros(2), 0, 1) == 0.0)
    Y = np.array([[[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]])
    assert np.allclose(curvature(lambda t: Y, np.zeros(2), 0, 1), -np.diag([1.0, -1.0]))
    R = curvature(lambda t: np.array([[[t[1], 0.0], [0.0, 0.0]], np.zeros((2, 2))]), np.zeros(2), 0, 1)
    # d y_0 / d t^1 = E_00 and the other terms vanish
    assert np.allclose(R, [[1.0, 0.0], [0.0, 0.0]], atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_polynomial_frame_connection_is_flat(seed):
    rng = np.random.default_rng(seed)
    V, dV = random_polynomial_frame(rng, 2, 2)
    t = rng.uniform(-0.5, 0.5, 2)
    assert np.allclose(dV(t), np.moveaxis(jacobian(V, t), -1, 0), atol=1e-7)
    for y in (connection_from_V(V, dV), connection_from_V(V)):
        assert np.abs(curvature(y, t, 0, 1)).max() <= 1e-4
