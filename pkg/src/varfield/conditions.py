"""Rank-one convexity checks on fourth-order coefficient tensors.

A quadratic-form tensor a has shape (nu, nu, n, n) and index order
a[alpha, beta, i, j]; it acts on a jet matrix q (n, nu) as
sum a[al, be, i, j] q[i, al] q[j, be].
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def as_matrix(a):
    """The (n*nu) x (n*nu) symmetric matrix of the form, flattened as q.ravel()."""
    nu, _, n, _ = a.shape
    return np.transpose(a, (2, 0, 3, 1)).reshape(n * nu, n * nu)


def from_hessian(Hm):
    """Tensor of the quadratic form q -> q : Hm : q for a Hessian shaped (n, nu, n, nu)."""
    return np.transpose(np.asarray(Hm, dtype=float), (1, 3, 0, 2))


def quadratic_eval(a, q):
    return float(np.einsum("abij,ia,jb->", a, q, q))


def biquadratic_eval(a, xi, eta):
    return float(np.einsum("abij,a,b,i,j->", a, xi, xi, eta, eta))


def quadratic_min_full(a):
    """Smallest eigenvalue of the form on unit Frobenius-norm matrices."""
    M = as_matrix(a)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def _smallest(M):
    w, v = np.linalg.eigh(0.5 * (M + M.T))
    return w[0], v[:, 0]


def rank1_minimum(a, rng=None, restarts=64, iterations=200):
    """Minimum of the biquadratic form over unit xi, eta by alternating eigen-steps."""
    rng = np.random.default_rng(0) if rng is None else rng
    nu, _, n, _ = a.shape
    best, arg = np.inf, None
    for _ in range(restarts):
        eta = rng.normal(size=n)
        eta /= np.linalg.norm(eta)
        val = np.inf
        for _ in range(iterations):
            _, xi = _smallest(np.einsum("abij,i,j->ab", a, eta, eta))
            new, eta = _smallest(np.einsum("abij,a,b->ij", a, xi, xi))
            if abs(val - new) < 1e-15 * max(1.0, abs(new)):
                val = new
                break
            val = new
        if val < best:
            best, arg = float(val), (xi, eta)
    return best, arg


def _angle_axes(dim, m, center=None, width=None):
    """Angle grids for S^{dim-1}: polar angles in [0, pi], the last in [0, 2 pi)."""
    axes = []
    for c in range(dim - 1):
        last = c == dim - 2
        if center is None:
            axes.append(np.linspace(0, 2 * np.pi, 2 * m, endpoint=False) if last else np.linspace(0, np.pi, m))
        else:
            axes.append(np.linspace(center[c] - width[c], center[c] + width[c], m))
    return axes


def _from_angles(angles):
    """Points of the unit sphere from spherical angles, one row per angle vector."""
    angles = np.atleast_2d(angles)
    pts = np.ones((len(angles), angles.shape[1] + 1))
    for c in range(angles.shape[1]):
        pts[:, c] *= np.cos(angles[:, c])
        pts[:, c + 1:] *= np.sin(angles[:, c])[:, None]
    return pts


def _sphere_grid(dim, m, center=None, width=None):
    if dim == 1:
        return np.zeros((1, 0)), np.array([[1.0]])
    mesh = np.meshgrid(*_angle_axes(dim, m, center, width), indexing="ij")
    angles = np.stack([g.ravel() for g in mesh], axis=1)
    return angles, _from_angles(angles)


def _sphere_points(dim, m):
    """Grid over S^{dim-1} by spherical angles; m points per angle."""
    return _sphere_grid(dim, m)[1]


def rank1_grid_minimum(a, m=20, zoom=0):
    """Minimum over a product grid of the two spheres, optionally refined by zooming.

    Each zoom pass re-grids a box of two cells around the current best angles,
    so the search stays a pure grid search.
    """
    nu, _, n, _ = a.shape
    ang_x, XI = _sphere_grid(nu, m)
    ang_e, ETA = _sphere_grid(n, m)
    wx = np.full(max(nu - 1, 0), 2 * np.pi / m)
    we = np.full(max(n - 1, 0), 2 * np.pi / m)
    for level in range(zoom + 1):
        vals = np.einsum("abij,pa,pb,ri,rj->pr", a, XI, XI, ETA, ETA)
        p, r = np.unravel_index(np.argmin(vals), vals.shape)
        best = float(vals[p, r])
        if level == zoom:
            break
        cx, ce = ang_x[p], ang_e[r]
        ang_x, XI = _sphere_grid(nu, m, cx, wx) if nu > 1 else (ang_x, XI)
        ang_e, ETA = _sphere_grid(n, m, ce, we) if n > 1 else (ang_e, ETA)
        wx, we = wx * 4 / m, we * 4 / m
    return best


@dataclass(frozen=True)
class HadamardVerdict:
    minimum: float
    epsilon: float
    verdict: str
    xi: np.ndarray
    eta: np.ndarray


def hadamard_legendre_check(a, rng=None, tol=1e-8, restarts=64, iterations=200):
    """Verdict 'fails', 'marginal' or 'strict' for nonnegativity on rank-one matrices."""
    m, (xi, eta) = rank1_minimum(a, rng, restarts, iterations)
    if m < -tol:
        verdict = "fails"
    elif m <= tol:
        verdict = "marginal"
    else:
        verdict = "strict"
    return HadamardVerdict(m, m, verdict, xi, eta)


def check_skew(r, tol=1e-12):
    r = np.asarray(r, dtype=float)
    if np.max(np.abs(r + np.transpose(r, (0, 1, 3, 2))), initial=0) > tol or np.max(np.abs(r + np.transpose(r, (1, 0, 2, 3))), initial=0) > tol:
        raise DomainError("skew tensor must be antisymmetric in (i, j) and in (alpha, beta)")
    return r


def skew_addition(a, r):
    """Add r[al,be,i,j] (q_i^al q_j^be - q_i^be q_j^al), which equals 2 r as a form tensor."""
    r = check_skew(r)
    if r.shape != a.shape:
        raise DomainError("skew tensor shape must match the form")
    return a + 2.0 * r


def det_form_tensor():
    """Hessian of det(q) for 2 x 2 q, as a form tensor: 2 det on the full space."""
    a = np.zeros((2, 2, 2, 2))
    a[0, 1, 0, 1] = a[1, 0, 1, 0] = 1.0
    a[1, 0, 0, 1] = a[0, 1, 1, 0] = -1.0
    return a


def det_skew(c):
    """Skew tensor with r[0,1,0,1] = c; cancels the det form at c = -1/2."""
    r = np.zeros((2, 2, 2, 2))
    r[0, 1, 0, 1] = r[1, 0, 1, 0] = c
    r[1, 0, 0, 1] = r[0, 1, 1, 0] = -c
    return r


def identity_tensor(n, nu, sign=1.0):
    return sign * np.einsum("ab,ij->abij", np.eye(nu), np.eye(n))
