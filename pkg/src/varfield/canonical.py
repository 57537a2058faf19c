"""Canonical variables, the invariant forms and their closedness, and the action identities.

Chart coordinates are ordered (t^0..t^{n-1}, x^0..x^{nu-1}); forms live on
that (n + nu)-dimensional chart. Q and q* share the (n, nu) layout.
"""
from dataclasses import dataclass
from math import comb
from typing import Callable

import numpy as np

from .errors import SingularTransformError
from .multilinear import (
    STEP1,
    FormValue,
    exterior_power,
    jacobian,
    multi_indices,
    permutation_sign,
    principal_minor_sum,
    r_sign,
    wedge_all,
)


def _split(point):
    t, x = point
    return np.asarray(t, dtype=float), np.asarray(x, dtype=float)


def _det(M):
    return 1.0 if M.size == 0 else float(np.linalg.det(M))


def invariant_form_S(S, point, xdot, k):
    """Sum of principal k-minors of dS/dt + dS/dx xdot^T."""
    St, Sx = S.gradients(*_split(point))
    return principal_minor_sum(St + Sx @ np.asarray(xdot, float).T, k)


def invariant_form_expansion(S, point, xdot, k):
    """Same value via column expansion: Plucker minors of dS/dt, dS/dx and xdot."""
    St, Sx = S.gradients(*_split(point))
    xdot = np.asarray(xdot, dtype=float)
    n, nu = Sx.shape
    total = 0.0
    for K in multi_indices(n, k):
        for s in range(0, min(k, nu) + 1):
            for jpos in multi_indices(k, s):
                J = [K[a] for a in jpos]
                cJ = [K[a] for a in range(k) if a not in jpos]
                for rpos in multi_indices(k, s):
                    R = [K[a] for a in rpos]
                    cR = [K[a] for a in range(k) if a not in rpos]
                    sign = -1.0 if (sum(jpos) + sum(rpos)) % 2 else 1.0
                    rest = _det(St[np.ix_(cR, cJ)])
                    if s == 0:
                        total += rest
                        continue
                    for Xi in multi_indices(nu, s):
                        total += sign * rest * _det(Sx[np.ix_(R, Xi)]) * _det(xdot[np.ix_(J, Xi)])
    return total


def poincare_cartan_delta(L, g, point, q, k):
    """f^ + sum_s c_s f^^{1-s} sum_{J,Xi} det p^[J,Xi] det w[J,Xi], w = q - g.

    c_s = C(n-s, k-s) (n/k)^s / C(n, k), the exact regrouping of the block
    determinants (c_1 = 1).
    """
    t, x = _split(point)
    G = g(t, x)
    fhat = L(t, x, G)
    if k > 1 and abs(fhat) < 1e-12:
        raise SingularTransformError("f at the slope field vanishes with k > 1", abs(fhat))
    p = L.momentum(t, x, G)
    w = np.asarray(q, dtype=float) - G
    n, nu = w.shape
    total = fhat
    for s in range(1, min(k, nu) + 1):
        c = comb(n - s, k - s) * (n / k) ** s / comb(n, k)
        total += c * fhat ** (1 - s) * float(np.sum(exterior_power(p, s) * exterior_power(w, s)))
    return total


def canonical_coords(q_star, H, k, n):
    if abs(H) < 1e-12:
        raise SingularTransformError("H vanishes", abs(H))
    return n * np.asarray(q_star, dtype=float) / (k * H)


@dataclass(frozen=True)
class CanonicalField:
    """H(t, x) and Q(t, x) with q* = k H Q / n."""

    n: int
    nu: int
    k: int
    H: Callable
    Q: Callable

    def values(self, point):
        t, x = _split(point)
        return float(self.H(t, x)), np.asarray(self.Q(t, x), dtype=float).reshape(self.n, self.nu)

    def q_star(self, point):
        H, Q = self.values(point)
        return self.k * H * Q / self.n

    @classmethod
    def from_qstar(cls, n, nu, k, H, q_star):
        return cls(n, nu, k, H, lambda t, x: canonical_coords(q_star(t, x), H(t, x), k, n))

    @classmethod
    def from_actions(cls, S, k):
        def H(t, x):
            return canonical_from_actions(S, (t, x), k)[0]

        def Q(t, x):
            return canonical_from_actions(S, (t, x), k)[2]

        return cls(S.n, S.nu, k, H, Q)


def _omega(n, nu, H, Q, k):
    dim = n + nu
    theta = [FormValue.one_form(np.concatenate([np.eye(n)[i], Q[i]])) for i in range(n)]
    dt = [FormValue.basis(dim, (i,)) for i in range(n)]
    total = FormValue.zero(dim, n)
    for K in multi_indices(n, k):
        rest = [dt[i] for i in range(n) if i not in K]
        total = total + wedge_all([theta[i] for i in K] + rest) * r_sign(K)
    return total * H


def omega_value(CF, point):
    """H sum_K (-1)^{r(K)} prod_{i in K}(dt^i + Q^i dx) ^ dt^{I \\ K}."""
    H, Q = CF.values(point)
    if abs(H) < 1e-12:
        raise SingularTransformError("H vanishes", abs(H))
    return _omega(CF.n, CF.nu, H, Q, CF.k)


def omega_from_qstar(q_star, H, k):
    """The same form written with n q* / (k H) inline instead of Q."""
    q_star = np.asarray(q_star, dtype=float)
    n, nu = q_star.shape
    return _omega(n, nu, H, n * q_star / (k * H), k)


def omega_field(CF):
    """Omega as a form field on the flattened chart point z = (t, x)."""
    return lambda z: omega_value(CF, (z[: CF.n], z[CF.n:]))


def _coefficient_fn(CF, J, Xi):
    """z -> H C(n-s, k-s) det Q[J, Xi], the Omega coefficient on b(J, Xi)."""
    n, k = CF.n, CF.k
    s = len(J)
    weight = comb(n - s, k - s) if s <= k else 0

    def c(z):
        if not weight:
            return 0.0
        H, Q = CF.values((z[:n], z[n:]))
        return H * weight * _det(Q[np.ix_(list(J), list(Xi))])

    return c


def _b_indices(n, J, Xi):
    """Chart indices of b(J, Xi): dt^i in slot i, dx^{Xi} in the J slots."""
    xi = iter(Xi)
    return [n + next(xi) if i in J else i for i in range(n)]


def _partial(c, z, coord):
    h = STEP1 * max(1.0, abs(z[coord]))
    e = np.zeros_like(z)
    e[coord] = h
    return (c(z + e) - c(z - e)) / (2 * h)


def closedness_residuals(CF, point, J, Xi):
    """Coefficient of dt^{I \\ J} ^ dx^{Xi} in dOmega, |Xi| = |J| + 1.

    Assembled as sum over mu in Xi of +-d_mu(H C_s det Q[J, Xi \\ mu]) plus sum
    over m not in J of +-d_{t^m}(H C_{s+1} det Q[J + m, Xi]); for n = k = 1 and
    |J| = 0 this is dH/dx^mu - d(H Q_mu)/dt.
    """
    n = CF.n
    J, Xi = tuple(J), tuple(Xi)
    if len(Xi) != len(J) + 1:
        raise ValueError("need |Xi| = |J| + 1")
    z = np.concatenate(_split(point))
    target = [i for i in range(n) if i not in J] + [n + a for a in Xi]
    total = 0.0
    for mu in Xi:
        rest = tuple(a for a in Xi if a != mu)
        seq = [n + mu] + _b_indices(n, J, rest)
        sign = permutation_sign(seq) * permutation_sign(target)
        if sign and sorted(seq) == sorted(target):
            total += sign * _partial(_coefficient_fn(CF, J, rest), z, n + mu)
    for m in range(n):
        if m in J:
            continue
        Jm = tuple(sorted(J + (m,)))
        seq = [m] + _b_indices(n, Jm, Xi)
        sign = permutation_sign(seq) * permutation_sign(target)
        if sign and sorted(seq) == sorted(target):
            total += sign * _partial(_coefficient_fn(CF, Jm, Xi), z, m)
    return total


def all_closedness_residuals(CF, point):
    """Residuals for every admissible (J, Xi), keyed by (J, Xi)."""
    out = {}
    for s in range(0, min(CF.n, CF.nu - 1) + 1):
        for J in multi_indices(CF.n, s):
            for Xi in multi_indices(CF.nu, s + 1):
                out[(J, Xi)] = closedness_residuals(CF, point, J, Xi)
    return out


def field_momentum_residuals(CF, point):
    """(n/k) sum_m dq*[m, mu]/dt^m - dH/dx^mu, and the same without the n/k factor."""
    n, k = CF.n, CF.k
    z = np.concatenate(_split(point))
    dq = jacobian(lambda z: CF.q_star((z[:n], z[n:])), z)
    dH = jacobian(lambda z: np.array([CF.values((z[:n], z[n:]))[0]]), z)[0]
    div = np.array([sum(dq[m, mu, m] for m in range(n)) for mu in range(CF.nu)])
    return (n / k) * div - dH[n:], div - dH[n:]


def canonical_system_residual(H, trajectory, t, n, k):
    """Residuals of {(n/k) d q*[m,mu]/dt^m = dH/dx^mu ; dx^mu/dt^m = -dH/dq*[m,mu]}.

    ``H(t, x, q_star)`` is the Hamiltonian, ``trajectory(t) -> (x, q_star)``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x, qs = (np.asarray(v, dtype=float) for v in trajectory(t))
    nu = x.size
    qs = qs.reshape(n, nu)
    dx = jacobian(lambda s: np.asarray(trajectory(s)[0], float), t)
    dqs = jacobian(lambda s: np.asarray(trajectory(s)[1], float).reshape(n, nu), t)
    Hx = jacobian(lambda v: np.array([H(t, v, qs)]), x)[0]
    Hq = jacobian(lambda v: np.array([H(t, x, v.reshape(n, nu))]), qs.ravel())[0].reshape(n, nu)
    div = np.array([sum(dqs[m, mu, m] for m in range(n)) for mu in range(nu)])
    first = (n / k) * div - Hx
    second = dx.T + Hq
    return first, second


def mixed_jacobian_sum(St, Sx, J, Xi, k):
    """sum over K containing J of det(dS^K/dt^K with the J columns replaced by dS^K/dx^Xi)."""
    n = St.shape[0]
    J, Xi = tuple(J), tuple(Xi)
    total = 0.0
    for K in multi_indices(n, k):
        if not set(J) <= set(K):
            continue
        M = St[np.ix_(K, K)].copy()
        for col, a in zip([K.index(j) for j in J], Xi):
            M[:, col] = Sx[list(K), a]
        total += _det(M)
    return total


def canonical_from_actions(S, point, k):
    """(H, q*, Q) from the action gradients: H = sum_K |dS^K/dt^K|, q* the s=1 sums."""
    St, Sx = S.gradients(*_split(point))
    n, nu = Sx.shape
    H = principal_minor_sum(St, k)
    q_star = np.array([[mixed_jacobian_sum(St, Sx, (i,), (a,), k) for a in range(nu)] for i in range(n)])
    return H, q_star, canonical_coords(q_star, H, k, n)


def action_plucker_identities(S, CF, point, J, Xi):
    """sum_{K > J} |D S^K / D t^{K\\J} x^Xi| - (C(n-s,k-s)/C(n,k)) H det Q[J, Xi]."""
    St, Sx = S.gradients(*_split(point))
    H, Q = CF.values(point)
    n, k, s = CF.n, CF.k, len(J)
    lhs = mixed_jacobian_sum(St, Sx, J, Xi, k)
    rhs = comb(n - s, k - s) / comb(n, k) * H * _det(Q[np.ix_(list(J), list(Xi))])
    return lhs - rhs


def _L_operator(CF, fn, point, mu):
    """L_mu(fn) = d fn/dx^mu - Q[m, mu] d fn/dt^m for a scalar field fn(z)."""
    n = CF.n
    z = np.concatenate(_split(point))
    grad = jacobian(lambda v: np.array([fn(v)]), z)[0]
    _, Q = CF.values(point)
    return grad[n + mu] - float(Q[:, mu] @ grad[:n])


def potential_residuals(CF, point):
    """L_lam(q*[l, mu]) - L_mu(q*[l, lam]) for every l and lam < mu, shape (n, nu, nu)."""
    n, nu = CF.n, CF.nu
    out = np.zeros((n, nu, nu))

    def qs(l, a):
        return lambda z: CF.q_star((z[:n], z[n:]))[l, a]

    for l in range(n):
        for lam in range(nu):
            for mu in range(lam + 1, nu):
                r = _L_operator(CF, qs(l, mu), point, lam) - _L_operator(CF, qs(l, lam), point, mu)
                out[l, lam, mu], out[l, mu, lam] = r, -r
    return out
