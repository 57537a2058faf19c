"""Field types shared by the analysis modules: Lagrangians, slope fields, action functions.

Points of the (t, x) chart are passed as separate arrays t (length n) and
x (length nu). Jet matrices q and momenta p are (n, nu) arrays with
q[i, a] = dx^a/dt^i and p[i, a] = df/dq[i, a].
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .multilinear import jacobian, numeric_derivative


@dataclass(frozen=True)
class Lagrangian:
    n: int
    nu: int
    fn: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    name: str = "lagrangian"

    def __call__(self, t, x, q):
        return float(self.fn(np.asarray(t, float), np.asarray(x, float), np.asarray(q, float)))

    def momentum(self, t, x, q):
        """df/dq in the (n, nu) layout."""
        if self.grad is not None:
            return np.asarray(self.grad(t, x, q), dtype=float)
        return numeric_derivative(lambda m: self(t, x, m), q, 1)

    def hessian(self, t, x, q):
        """d2f/dq dq as an (n, nu, n, nu) tensor."""
        if self.hess is not None:
            return np.asarray(self.hess(t, x, q), dtype=float)
        return numeric_derivative(lambda m: self(t, x, m), q, 2)


@dataclass(frozen=True)
class SlopeField:
    n: int
    nu: int
    fn: Callable
    name: str = "slope"

    def __call__(self, t, x):
        return np.asarray(self.fn(np.asarray(t, float), np.asarray(x, float)), dtype=float).reshape(self.n, self.nu)


@dataclass(frozen=True)
class ActionFunctions:
    """n scalar fields S^i(t, x) with optional analytic gradients (S_t, S_x)."""

    n: int
    nu: int
    fn: Callable
    grad: Optional[Callable] = None
    name: str = "actions"

    def __call__(self, t, x):
        return np.asarray(self.fn(np.asarray(t, float), np.asarray(x, float)), dtype=float)

    def gradients(self, t, x):
        """(dS/dt as (n, n), dS/dx as (n, nu)), row i belonging to S^i."""
        if self.grad is not None:
            St, Sx = self.grad(np.asarray(t, float), np.asarray(x, float))
            return np.asarray(St, float), np.asarray(Sx, float)
        z = np.concatenate([np.asarray(t, float), np.asarray(x, float)])
        J = jacobian(lambda z: self(z[: self.n], z[self.n:]), z)
        return J[:, : self.n], J[:, self.n:]


class Polynomial:
    """Sparse polynomial sum_k c_k z^{e_k} in a fixed number of variables."""

    def __init__(self, nvars, terms):
        self.nvars = nvars
        coefs, exps = [], []
        for c, e in terms:
            e = np.asarray(e, dtype=int)
            if e.shape != (nvars,) or np.any(e < 0):
                raise ValueError("exponent vector has the wrong shape or a negative entry")
            coefs.append(float(c))
            exps.append(e)
        self.coefs = np.array(coefs, dtype=float)
        self.exps = np.array(exps, dtype=int).reshape(len(coefs), nvars)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if not len(self.coefs):
            return 0.0
        return float(np.sum(self.coefs * np.prod(z ** self.exps, axis=1)))

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        g = np.zeros(self.nvars)
        for v in range(self.nvars):
            e = self.exps.copy()
            c = self.coefs * e[:, v]
            e[:, v] = np.maximum(e[:, v] - 1, 0)
            g[v] = float(np.sum(c * np.prod(z ** e, axis=1))) if len(c) else 0.0
        return g

    def hessian(self, z):
        z = np.asarray(z, dtype=float)
        Hm = np.zeros((self.nvars, self.nvars))
        for u in range(self.nvars):
            for v in range(self.nvars):
                e = self.exps.copy()
                c = self.coefs * e[:, u]
                e[:, u] = np.maximum(e[:, u] - 1, 0)
                c = c * e[:, v]
                e[:, v] = np.maximum(e[:, v] - 1, 0)
                Hm[u, v] = float(np.sum(c * np.prod(z ** e, axis=1))) if len(c) else 0.0
        return Hm


def polynomial_lagrangian(n, nu, poly, name="polynomial"):
    """Lagrangian from a polynomial in the variables (t, x, q row-major)."""
    off = n + nu

    def z_of(t, x, q):
        return np.concatenate([np.ravel(t), np.ravel(x), np.ravel(q)])

    return Lagrangian(
        n, nu,
        fn=lambda t, x, q: poly(z_of(t, x, q)),
        grad=lambda t, x, q: poly.grad(z_of(t, x, q))[off:].reshape(n, nu),
        hess=lambda t, x, q: poly.hessian(z_of(t, x, q))[off:, off:].reshape(n, nu, n, nu),
        name=name,
    )


def polynomial_slope_field(n, nu, polys, name="polynomial"):
    """Slope field whose entries g[i, a] are polynomials in (t, x); polys is row-major."""
    return SlopeField(n, nu, lambda t, x: [p(np.concatenate([t, x])) for p in polys], name)


def polynomial_actions(n, nu, polys, name="polynomial"):
    def grad(t, x):
        z = np.concatenate([t, x])
        G = np.array([p.grad(z) for p in polys])
        return G[:, :n], G[:, n:]

    return ActionFunctions(n, nu, lambda t, x: [p(np.concatenate([t, x])) for p in polys], grad, name)
