"""Transversality, variational and Riccati equations, and the connection of a field of extremals.

Tensor index roles: U[m, mu, s] and W[m, rho, s] are
(n, nu, nu), V[lam, s] is (nu, nu), connection matrices y[i] are (n, nu, nu).
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .canonical import mixed_jacobian_sum
from .multilinear import jacobian, numeric_derivative


def _jet(surface, t):
    """Surface value x(t) and its jet q[j, a] = dx^a/dt^j."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.asarray(surface(t), dtype=float)
    return t, x, jacobian(lambda s: np.asarray(surface(s), float), t).T


def transversality_matrix(L, surface, t):
    """The n x (n + nu) linear map (T, X) -> residual, as [f I - p q^T | p]."""
    t, x, q = _jet(surface, t)
    f = L(t, x, q)
    p = L.momentum(t, x, q)
    return np.hstack([f * np.eye(len(t)) - p @ q.T, p])


def transversality_residual(L, surface, pair, t):
    """p X + (f I - p q^T) T at the surface point over t."""
    T, X = pair
    t, x, _ = _jet(surface, t)
    v = np.concatenate([np.asarray(T(t, x), float), np.asarray(X(t, x), float)])
    return transversality_matrix(L, surface, t) @ v


@dataclass(frozen=True)
class Hamiltonian:
    """Autonomous H(x, q_star) with q_star shaped (n, nu); derivatives default to finite differences."""

    n: int
    nu: int
    fn: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None

    def __call__(self, x, qs):
        return float(self.fn(np.asarray(x, float), np.asarray(qs, float).reshape(self.n, self.nu)))

    def _z(self, x, qs):
        return np.concatenate([np.ravel(x), np.ravel(qs)])

    def gradients(self, x, qs):
        """(dH/dx, dH/dq*) shaped (nu,) and (n, nu)."""
        if self.grad is not None:
            gx, gq = self.grad(np.asarray(x, float), np.asarray(qs, float).reshape(self.n, self.nu))
            return np.asarray(gx, float), np.asarray(gq, float).reshape(self.n, self.nu)
        nu = self.nu
        g = numeric_derivative(lambda z: self(z[:nu], z[nu:]), self._z(x, qs), 1)
        return g[:nu], g[nu:].reshape(self.n, nu)

    def blocks(self, x, qs):
        """Hxx (nu, nu), Hqx[m, mu, lam] and Hqq[m, mu, l, rho]."""
        n, nu = self.n, self.nu
        if self.hess is not None:
            Hm = np.asarray(self.hess(np.asarray(x, float), np.asarray(qs, float).reshape(n, nu)), float)
        else:
            Hm = numeric_derivative(lambda z: self(z[:nu], z[nu:]), self._z(x, qs), 2)
        Hxx = Hm[:nu, :nu]
        Hqx = Hm[nu:, :nu].reshape(n, nu, nu)
        Hqq = Hm[nu:, nu:].reshape(n, nu, n, nu)
        return Hxx, Hqx, Hqq


def _time_derivative(F, t):
    """Stack of dF/dt^m for array-valued F, m first."""
    d = jacobian(lambda s: np.asarray(F(s), float), np.atleast_1d(np.asarray(t, float)))
    return np.moveaxis(d, -1, 0)


def variational_residual(blocks, U, V, t):
    """Residuals of dV/dt^m = -Hqx^m V - sum_l Hqq^{ml} U^l and sum_m dU^m/dt^m = Hxx V + sum_m Hxq^m U^m.

    ``blocks(t)`` gives (Hxx, Hqx, Hqq) along the reference solution.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    Hxx, Hqx, Hqq = blocks(t)
    Ut, Vt = np.asarray(U(t), float), np.asarray(V(t), float)
    dV = _time_derivative(V, t)
    dU = _time_derivative(U, t)
    first = dV + np.einsum("mal,ls->mas", Hqx, Vt) + np.einsum("malr,lrs->mas", Hqq, Ut)
    div = sum(dU[m, m] for m in range(len(t)))
    second = div - Hxx @ Vt - np.einsum("mla,mas->ls", Hqx, Ut)
    return first, second


def riccati_rhs(blocks_t, W):
    Hxx, Hqx, Hqq = blocks_t
    return (
        Hxx
        + np.einsum("mla,mas->ls", Hqx, W)
        + np.einsum("mra,mal->rl", W, Hqx)
        + np.einsum("mra,malb,lbs->rs", W, Hqq, W)
    )


def riccati_residual(blocks, W, t):
    """sum_m dW^m/dt^m minus Hxx + Hxq W + W Hqx + W Hqq W (summed over m)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    dW = _time_derivative(W, t)
    div = sum(dW[m, m] for m in range(len(t)))
    return div - riccati_rhs(blocks(t), np.asarray(W(t), float))


def rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


class VariationalSolution:
    """Joint RK4 solution of the canonical system (n = 1) and its variational equations.

    State: reference x (nu), q* (nu), V (nu, nu), U (nu, nu). The canonical
    system is dx/dt = -dH/dq*, dq*/dt = dH/dx.
    """

    def __init__(self, H, x0, q0, V0, U0, t0, t1, h=1e-3):
        if H.n != 1:
            raise ValueError("ODE integration is for one-dimensional t")
        self.H, self.nu, self.h = H, H.nu, h
        self.t0, self.t1 = t0, t1
        y = np.concatenate([x0, q0, np.ravel(V0), np.ravel(U0)]).astype(float)
        steps = max(1, int(np.ceil((t1 - t0) / h)))
        self.ts = np.linspace(t0, t1, steps + 1)
        self.ys = [y]
        for a, b in zip(self.ts[:-1], self.ts[1:]):
            y = rk4_step(self._rhs, a, y, b - a)
            self.ys.append(y)
        self.ys = np.array(self.ys)

    def _unpack(self, y):
        nu = self.nu
        return y[:nu], y[nu:2 * nu], y[2 * nu:2 * nu + nu * nu].reshape(nu, nu), y[2 * nu + nu * nu:].reshape(nu, nu)

    def _rhs(self, t, y):
        x, q, V, U = self._unpack(y)
        gx, gq = self.H.gradients(x, q.reshape(1, -1))
        Hxx, Hqx, Hqq = self.H.blocks(x, q.reshape(1, -1))
        dV = -Hqx[0] @ V - Hqq[0, :, 0, :] @ U
        dU = Hxx @ V + Hqx[0].T @ U
        return np.concatenate([-gq.ravel(), gx, dV.ravel(), dU.ravel()])

    def state(self, t):
        """State at t, integrated from the nearest stored node (backwards if needed)."""
        t = float(np.ravel(t)[0])
        i = int(np.clip(np.rint((t - self.t0) / (self.ts[1] - self.ts[0])), 0, len(self.ts) - 1))
        y, s = self.ys[i], self.ts[i]
        while abs(t - s) > 1e-15:
            step = np.sign(t - s) * min(self.h, abs(t - s))
            y = rk4_step(self._rhs, s, y, step)
            s += step
        return self._unpack(y)

    def V(self, t):
        return self.state(t)[2]

    def U(self, t):
        return self.state(t)[3][None]

    def W(self, t):
        _, _, V, U = self.state(t)
        return (U @ np.linalg.inv(V))[None]

    def blocks(self, t):
        x, q, _, _ = self.state(t)
        return self.H.blocks(x, q.reshape(1, -1))

    def degenerate(self, t, tol=1e-6):
        V = self.V(t)
        return abs(np.linalg.det(V)) < tol * np.linalg.norm(V) ** self.nu


def w_from_actions(S, surface, t, k):
    """W[m, rho, s] = d/dx^rho of sum_{K contains m} |D S^K / D t^{K\\m} x^s| along the surface."""
    t, x, q = _jet(surface, t)
    n, nu = S.n, S.nu

    def qstar(xv):
        St, Sx = S.gradients(t, xv)
        F = St + Sx @ q.T
        return np.array([[mixed_jacobian_sum(F, Sx, (m,), (s,), k) for s in range(nu)] for m in range(n)])

    d = jacobian(qstar, x)
    return np.transpose(d, (0, 2, 1))


def covariant_derivative(y, section, v, t):
    """sum_i v^i (dx/dt^i - y_i x)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.asarray(section(t), float)
    dx = _time_derivative(section, t)
    Y = np.asarray(y(t), float)
    v = np.asarray(v, dtype=float)
    return np.einsum("i,ia->a", v, dx - Y @ x)


def curvature(y, t, i, j):
    """d y_i/dt^j - d y_j/dt^i - [y_i, y_j]."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    Y = np.asarray(y(t), float)
    dY = _time_derivative(y, t)
    return dY[j, i] - dY[i, j] - (Y[i] @ Y[j] - Y[j] @ Y[i])


def connection_from_V(V, dV=None):
    """y_i = -(dV/dt^i) V^{-1} as a connection field."""

    def y(t):
        Vt = np.asarray(V(t), float)
        D = np.asarray(dV(t), float) if dV is not None else _time_derivative(V, t)
        return -D @ np.linalg.inv(Vt)

    return y


def random_polynomial_frame(rng, n, nu, degree=3, scale=0.3):
    """Random V(t) = 2 I + sum of monomials of degree <= ``degree`` in t, with analytic dV.

    Coefficients are uniform in [-scale, scale]; near t = 0 the frame stays invertible.
    """
    exps = [e for e in np.ndindex(*([degree + 1] * n)) if 0 < sum(e) <= degree]
    coeffs = rng.uniform(-scale, scale, (len(exps), nu, nu))
    E = np.array(exps)

    def V(t):
        t = np.atleast_1d(np.asarray(t, float))
        mono = np.prod(t[None, :] ** E, axis=1)
        return 2.0 * np.eye(nu) + np.einsum("e,eab->ab", mono, coeffs)

    def dV(t):
        t = np.atleast_1d(np.asarray(t, float))
        out = np.zeros((n, nu, nu))
        for i in range(n):
            lower = E.copy()
            lower[:, i] -= 1
            mono = np.where(E[:, i] > 0, E[:, i] * np.prod(t[None, :] ** np.maximum(lower, 0), axis=1), 0.0)
            out[i] = np.einsum("e,eab->ab", mono, coeffs)
        return out

    return V, dV
