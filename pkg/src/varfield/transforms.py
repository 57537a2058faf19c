"""Tangential transforms of contact quadruples: Legendre, Caratheodory and Z_k."""
from dataclasses import dataclass, replace
from math import comb
from typing import Optional

import numpy as np

from .errors import DomainError, SingularTransformError
from .multilinear import adjugate_entry, multi_indices, principal_minor_sum

CARATHEODORY = "caratheodory"
ZK = "zk"


@dataclass(frozen=True, eq=False)
class Quadruple:
    """(f, phi, q, p) with an explicit regime tag; q and p are (n, nu)."""

    f: float
    phi: float
    q: np.ndarray
    p: np.ndarray
    regime: str = CARATHEODORY
    k: Optional[int] = None

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape:
            raise DomainError(f"q {q.shape} and p {p.shape} must share the (n, nu) layout")
        if self.regime not in (CARATHEODORY, ZK):
            raise DomainError(f"unknown regime {self.regime!r}")
        if self.regime == ZK and not (self.k and 1 <= self.k <= q.shape[0]):
            raise DomainError("Z_k quadruples need 1 <= k <= n")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "f", float(self.f))
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def nu(self):
        return self.q.shape[1]

    def pq(self):
        """The n x n matrix p_a^i q_j^a."""
        return self.p @ self.q.T

    def binding_residual(self):
        if self.regime == CARATHEODORY:
            return self.f + self.phi - float(np.sum(self.p * self.q))
        return self.f + self.phi - zk_delta(self, self.k)

    def as_array(self):
        return np.concatenate([[self.f, self.phi], self.q.ravel(), self.p.ravel()])


@dataclass(frozen=True, eq=False)
class TransformResult:
    quadruple: Quadruple
    gamma: float
    A: np.ndarray
    delta_tilde: float
    H: float
    q_star: np.ndarray
    conditioning: float
    weyl_H: Optional[float] = None


def _require_regime(u, regime):
    if u.regime != regime:
        raise DomainError(f"expected a {regime} quadruple, got {u.regime}")


def legendre_swap(u):
    _require_regime(u, CARATHEODORY)
    return Quadruple(u.phi, u.f, u.p, u.q, CARATHEODORY)


def caratheodory_A(u):
    return u.f * np.eye(u.n) - u.pq()


def caratheodory_transform(u):
    _require_regime(u, CARATHEODORY)
    n = u.n
    A = caratheodory_A(u)
    det = float(np.linalg.det(A))
    if abs(u.f) < 1e-12 or abs(det) < 1e-8 * abs(u.f) ** n:
        raise SingularTransformError("A is singular or f vanishes", abs(det))
    gamma = u.f ** (n - 2) / det
    q_star = np.linalg.solve(A, u.p)
    p_star = gamma * A.T @ u.q
    out = Quadruple(gamma * u.f, gamma * u.phi, q_star, p_star, CARATHEODORY)
    return TransformResult(out, gamma, A, u.f + u.phi, out.f, q_star, abs(det))


def _delta(f, p, q, k):
    n = p.shape[0]
    if k > 1 and abs(f) < 1e-12:
        raise SingularTransformError("f vanishes with k > 1", abs(f))
    M = f * np.eye(n) + (n / k) * p @ q.T
    return principal_minor_sum(M, k) / (comb(n, k) * f ** (k - 1))


def zk_delta(u, k):
    """Invariant integrand: tr of the k-th compound of fI + (n/k) pq, normalized."""
    if not 1 <= k <= u.n:
        raise DomainError(f"k={k} outside 1..{u.n}")
    return _delta(u.f, u.p, u.q, k)


def zk_inverse_auxiliary(f, p, q, k):
    """A^{-1} assembled from cofactors of the principal K-blocks of fI + (n/k) pq."""
    n = p.shape[0]
    M = f * np.eye(n) + (n / k) * p @ q.T
    Ainv = np.zeros((n, n))
    for K in multi_indices(n, k):
        block = M[np.ix_(K, K)]
        for a, m in enumerate(K):
            for b, l in enumerate(K):
                Ainv[m, l] += adjugate_entry(block, (a,), (b,)) if k > 1 else float(a == b)
    return (n / k) * Ainv / (comb(n, k) * f ** (k - 1))


def zk_auxiliary(u, k):
    """(A, gamma) of the Z_k regime with gamma = f^{k-2} / det A."""
    if not 1 <= k <= u.n:
        raise DomainError(f"k={k} outside 1..{u.n}")
    if abs(u.f) < 1e-12:
        raise SingularTransformError("f vanishes", abs(u.f))
    Ainv = zk_inverse_auxiliary(u.f, u.p, u.q, k)
    dinv = float(np.linalg.det(Ainv))
    if abs(dinv) < 1e-12:
        raise SingularTransformError("A^{-1} is singular", abs(dinv))
    A = np.linalg.inv(Ainv)
    return A, u.f ** (k - 2) / float(np.linalg.det(A))


def zk_transform(u, k=None, convention="scaled"):
    """Generalized tangential transform of a Z_k quadruple.

    ``convention="scaled"`` sets f* = gamma f, phi* = gamma phi; ``"printed"``
    swaps the roles to f* = gamma phi, phi* = gamma f.
    """
    _require_regime(u, ZK)
    k = u.k if k is None else k
    if convention not in ("scaled", "printed"):
        raise DomainError(f"unknown convention {convention!r}")
    A, gamma = zk_auxiliary(u, k)
    det = float(np.linalg.det(A))
    if abs(det) < 1e-8:
        raise SingularTransformError("A is singular", abs(det))
    delta = zk_delta(u, k)
    q_star = np.linalg.solve(A.T, u.p)
    p_star = gamma * A @ u.q
    if convention == "scaled":
        f_star, phi_star = gamma * u.f, gamma * u.phi
    else:
        f_star, phi_star = gamma * u.phi, gamma * u.f
    out = Quadruple(f_star, phi_star, q_star, p_star, ZK, k)
    H = gamma * (delta - u.f)
    weyl = -u.f + float(np.sum(u.p * u.q))
    return TransformResult(out, gamma, A, delta, H, q_star, abs(det), weyl)


def _transform_of(u, k=None, convention="scaled"):
    if u.regime == CARATHEODORY:
        return caratheodory_transform(u).quadruple
    return zk_transform(u, k, convention).quadruple


def round_trip_error(u, convention="scaled"):
    """Max abs difference between u and the transform applied twice."""
    twice = _transform_of(_transform_of(u, convention=convention), convention=convention)
    return float(np.max(np.abs(twice.as_array() - u.as_array())))


def _on_curve(u, s, direction):
    df, dq, dp = direction
    f = u.f + s * df
    q = u.q + s * np.asarray(dq, float)
    p = u.p + s * np.asarray(dp, float)
    if u.regime == CARATHEODORY:
        return Quadruple(f, float(np.sum(p * q)) - f, q, p, CARATHEODORY)
    return Quadruple(f, _delta(f, p, q, u.k) - f, q, p, ZK, u.k)


def canonical_one_forms(u, direction, transform=None, step=1e-5):
    """Values of df - tr(p dq) and df* - tr(p* dq*) on a displacement.

    The curve is u + s*direction with phi reset by the binding; the starred
    differential is a central difference of ``transform`` along it.
    """
    transform = transform or _transform_of
    df, dq, dp = direction
    omega = df - float(np.sum(u.p * np.asarray(dq, float)))
    star0 = transform(u)
    plus = transform(_on_curve(u, step, direction))
    minus = transform(_on_curve(u, -step, direction))
    dfs = (plus.f - minus.f) / (2 * step)
    dqs = (plus.q - minus.q) / (2 * step)
    omega_star = dfs - float(np.sum(star0.p * dqs))
    return omega, omega_star, star0


def tangentiality_residual(u, direction, transform=None, step=1e-5, kind="caratheodory"):
    """f (df* - tr p* dq*) + f* (df - tr p dq) along a displacement.

    ``kind="legendre"`` evaluates the unweighted sum, the Legendre analogue
    where the proportionality factor is -1.
    """
    if kind == "legendre":
        omega, omega_star, _ = canonical_one_forms(u, direction, transform or legendre_swap, step)
        return omega_star + omega
    omega, omega_star, star = canonical_one_forms(u, direction, transform, step)
    return u.f * omega_star + star.f * omega


def random_quadruple(rng, n, nu, regime=CARATHEODORY, k=None, min_det=0.1, min_f=0.1):
    """Sample q, p in [-1, 1], f in [0.5, 2], phi from the binding; reject ill-conditioned draws."""
    while True:
        q = rng.uniform(-1, 1, (n, nu))
        p = rng.uniform(-1, 1, (n, nu))
        f = rng.uniform(0.5, 2.0)
        if regime == CARATHEODORY:
            u = Quadruple(f, float(np.sum(p * q)) - f, q, p, CARATHEODORY)
            if abs(np.linalg.det(caratheodory_A(u))) > min_det:
                return u
        else:
            u = Quadruple(f, _delta(f, p, q, k) - f, q, p, ZK, k)
            try:
                A, _ = zk_auxiliary(u, k)
            except SingularTransformError:
                continue
            if abs(np.linalg.det(A)) > min_det and abs(f) > min_f:
                return u


def with_regime(u, regime, k=None):
    """Re-tag a quadruple after recomputing phi from the target binding."""
    if regime == CARATHEODORY:
        return replace(u, phi=float(np.sum(u.p * u.q)) - u.f, regime=regime, k=None)
    return replace(u, phi=_delta(u.f, u.p, u.q, k) - u.f, regime=regime, k=k)
