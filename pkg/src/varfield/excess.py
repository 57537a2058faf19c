"""Generalized Weierstrass excess, its stationarity, corrected Hessian and geodesic test."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import SingularTransformError
from .multilinear import numeric_derivative
from .transforms import _delta, zk_inverse_auxiliary


def _frozen(L, g, point, k):
    t, x = (np.asarray(v, dtype=float) for v in point)
    G = g(t, x)
    fhat = L(t, x, G)
    if k > 1 and abs(fhat) < 1e-12:
        raise SingularTransformError("f at the slope field vanishes with k > 1", abs(fhat))
    return t, x, G, fhat, L.momentum(t, x, G)


def excess_value(L, g, point, q, k):
    """E = f(q) - sum_K det(f^ I + (n/k) p^ w^T)_K / (C(n,k) f^^{k-1}), w = q - g."""
    t, x, G, fhat, phat = _frozen(L, g, point, k)
    q = np.asarray(q, dtype=float)
    return L(t, x, q) - _delta(fhat, phat, q - G, k)


def excess_stationarity(L, g, point, k, q=None):
    """Finite-difference gradient of E in q, and the adjugate-assembled gradient residual.

    Both are evaluated at q (default: the slope field value, where they must vanish).
    """
    t, x, G, fhat, phat = _frozen(L, g, point, k)
    q = G if q is None else np.asarray(q, dtype=float)
    grad = numeric_derivative(lambda m: L(t, x, m) - _delta(fhat, phat, m - G, k), q, 1)
    assembled = L.momentum(t, x, q) - zk_inverse_auxiliary(fhat, phat, q - G, k).T @ phat
    return grad, assembled


def hessian_correction(p, fhat, n, k):
    """n(k-1)/(k(n-1) f^) (p[l,a] p[m,b] - p[l,b] p[m,a]) as an (n, nu, n, nu) tensor."""
    if k == 1:
        return np.zeros(p.shape + p.shape)
    c = n * (k - 1) / (k * (n - 1) * fhat)
    return c * (np.einsum("la,mb->lamb", p, p) - np.einsum("lb,ma->lamb", p, p))


def corrected_hessian(L, g, point, k):
    """Second derivative of E at q = g: Hessian of f minus the skew correction."""
    t, x, G, fhat, phat = _frozen(L, g, point, k)
    return L.hessian(t, x, G) - hessian_correction(phat, fhat, G.shape[0], k)


@dataclass(frozen=True)
class GeodesicVerdict:
    geodesic: bool
    worst: float
    witness_point: Optional[tuple] = None
    witness_q: Optional[np.ndarray] = None


def geodesic_field_check(L, g, points, k, mode="local", rng=None, starts=32, radius=5.0, tol=1e-8):
    """Local: corrected Hessian PSD at each point. Global: multistart minimum of E >= -tol."""
    worst, wp, wq = np.inf, None, None
    rng = np.random.default_rng(0) if rng is None else rng
    for point in points:
        if mode == "local":
            Hm = corrected_hessian(L, g, point, k)
            d = Hm.shape[0] * Hm.shape[1]
            M = Hm.reshape(d, d)
            val = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
            if val < worst:
                worst, wp, wq = val, point, None
            continue
        t, x = (np.asarray(v, float) for v in point)
        G = g(t, x)
        shape = G.shape
        lo, hi = (G - radius).ravel(), (G + radius).ravel()

        def E(v):
            return excess_value(L, g, point, v.reshape(shape), k)

        for _ in range(starts):
            d = rng.normal(size=G.size)
            d *= radius * rng.uniform() ** (1 / G.size) / np.linalg.norm(d)
            res = minimize(E, G.ravel() + d, method="L-BFGS-B", bounds=list(zip(lo, hi)))
            if res.fun < worst:
                worst, wp, wq = float(res.fun), point, res.x.reshape(shape)
    ok = worst >= -tol
    return GeodesicVerdict(ok, float(worst), None if ok else wp, None if ok else wq)
