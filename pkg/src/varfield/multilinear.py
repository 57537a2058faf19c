"""Exterior algebra and finite-difference calculus.

Multi-indices are 0-based increasing tuples; compound matrices and form
coefficients use lexicographic order of those tuples throughout.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import DomainError, NumericError

EPS = np.finfo(float).eps
STEP1 = EPS ** (1.0 / 3.0)
STEP2 = EPS ** (1.0 / 4.0)


@lru_cache(maxsize=None)
def multi_indices(n, k):
    """All increasing k-tuples from range(n), lexicographic."""
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def _index_lookup(n, k):
    return {K: pos for pos, K in enumerate(multi_indices(n, k))}


def permutation_sign(seq):
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def r_sign(K):
    """(-1)^{r(K)} with r(K) = sum of 1-based indices minus k(k+1)/2."""
    k = len(K)
    r = sum(i + 1 for i in K) - k * (k + 1) // 2
    return -1 if r % 2 else 1


def exterior_power(M, k):
    """Compound matrix of k x k minors, blocks in lexicographic order."""
    M = np.asarray(M, dtype=float)
    rows, cols = M.shape
    if not 1 <= k <= min(rows, cols):
        raise DomainError(f"k={k} outside 1..{min(rows, cols)}")
    R = multi_indices(rows, k)
    C = multi_indices(cols, k)
    out = np.empty((len(R), len(C)))
    # exactly singular blocks are legitimate here; LAPACK's warning on them is noise
    with np.errstate(divide="ignore", invalid="ignore"):
        for a, I in enumerate(R):
            sub = M[list(I), :]
            for b, J in enumerate(C):
                out[a, b] = np.linalg.det(sub[:, list(J)])
    return out


def principal_minor_sum(C, k):
    """Sum of all principal k x k minors, i.e. e_k of the eigenvalues."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if C.shape != (n, n):
        raise DomainError("principal minors need a square matrix")
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    return float(sum(np.linalg.det(C[np.ix_(K, K)]) for K in multi_indices(n, k)))


def adjugate_entry(C, row_set, col_set):
    """Signed cofactor of the entry (or 2x2 minor) at ``row_set`` x ``col_set``."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    rows, cols = tuple(row_set), tuple(col_set)
    if len(rows) != len(cols) or len(rows) not in (1, 2):
        raise DomainError("row_set and col_set must both have 1 or 2 entries")
    for idx in (rows, cols):
        if list(idx) != sorted(set(idx)) or idx[0] < 0 or idx[-1] >= n:
            raise DomainError(f"invalid multi-index {idx} for n={n}")
    keep_r = [i for i in range(n) if i not in rows]
    keep_c = [j for j in range(n) if j not in cols]
    sign = -1 if (sum(rows) + sum(cols)) % 2 else 1
    if not keep_r:
        return float(sign)
    return float(sign * np.linalg.det(C[np.ix_(keep_r, keep_c)]))


def adjugate(C):
    """Classical adjugate, adj(C)[j, i] = cofactor(i, j); works for singular C."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if n == 1:
        return np.ones((1, 1))
    cof = np.array([[adjugate_entry(C, (i,), (j,)) for j in range(n)] for i in range(n)])
    return cof.T


def plucker_embed(q):
    """All l x l minors of q for l = 1..min(n, nu), grade by grade."""
    q = np.asarray(q, dtype=float)
    n, nu = q.shape
    parts = [exterior_power(q, l).ravel() for l in range(1, min(n, nu) + 1)]
    return np.concatenate(parts)


def plucker_length(n, nu):
    return sum(comb(n, l) * comb(nu, l) for l in range(1, min(n, nu) + 1))


@dataclass(frozen=True, eq=False)
class FormValue:
    """A differential form at a point: dense coefficients over increasing multi-indices."""

    dim: int
    grade: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.grade <= self.dim:
            raise DomainError(f"grade {self.grade} outside 0..{self.dim}")
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (comb(self.dim, self.grade),):
            raise DomainError("coefficient vector has the wrong length")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, dim, grade):
        return cls(dim, grade, np.zeros(comb(dim, grade)))

    @classmethod
    def scalar(cls, dim, value):
        return cls(dim, 0, np.array([float(value)]))

    @classmethod
    def one_form(cls, components):
        components = np.asarray(components, dtype=float)
        return cls(len(components), 1, components)

    @classmethod
    def basis(cls, dim, indices):
        """The wedge dx^{i1} ^ ... ^ dx^{ik} in the given (possibly unsorted) order."""
        out = cls.zero(dim, len(indices))
        sign = permutation_sign(indices)
        if sign:
            key = tuple(sorted(indices))
            out.coeffs[_index_lookup(dim, len(indices))[key]] = sign
        return out

    @property
    def indices(self):
        return multi_indices(self.dim, self.grade)

    def coefficient(self, indices):
        """Coefficient on dx^{indices}, with the sign of the reordering."""
        sign = permutation_sign(indices)
        if not sign:
            return 0.0
        key = tuple(sorted(indices))
        return sign * float(self.coeffs[_index_lookup(self.dim, self.grade)[key]])

    def wedge(self, other):
        if other.dim != self.dim:
            raise DomainError("wedge of forms on different charts")
        grade = self.grade + other.grade
        if grade > self.dim:
            raise DomainError(f"wedge grade {grade} exceeds dimension {self.dim}")
        out = np.zeros(comb(self.dim, grade))
        lookup = _index_lookup(self.dim, grade)
        ia = np.nonzero(self.coeffs)[0]
        ib = np.nonzero(other.coeffs)[0]
        A, B = self.indices, other.indices
        for a in ia:
            I = A[a]
            for b in ib:
                J = B[b]
                sign = permutation_sign(I + J)
                if sign:
                    out[lookup[tuple(sorted(I + J))]] += sign * self.coeffs[a] * other.coeffs[b]
        return FormValue(self.dim, grade, out)

    __xor__ = wedge

    def _check(self, other):
        if (other.dim, other.grade) != (self.dim, self.grade):
            raise DomainError("adding forms of different shape")

    def __add__(self, other):
        self._check(other)
        return FormValue(self.dim, self.grade, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return FormValue(self.dim, self.grade, self.coeffs - other.coeffs)

    def __mul__(self, s):
        return FormValue(self.dim, self.grade, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def norm(self):
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def as_dict(self, tol=0.0):
        return {K: float(c) for K, c in zip(self.indices, self.coeffs) if abs(c) > tol}


def wedge_all(forms, dim=None):
    """Ordered wedge product of a sequence of forms (scalar 1 if empty)."""
    forms = list(forms)
    if not forms:
        return FormValue.scalar(dim, 1.0)
    out = forms[0]
    for f in forms[1:]:
        out = out.wedge(f)
    return out


def det_rank1_update(phi, a, b):
    """Determinant of diag(phi) + a (x) b via the rank-one expansion.

    Scalars give a float. If phi and a are 1-forms the factors of each term are
    wedged in row order, which fixes the sign of the form-valued determinant.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    if len(phi) != n or len(a) != n:
        raise DomainError("phi, a, b must have equal length")
    if isinstance(phi[0], FormValue):
        total = wedge_all(phi)
        for j in range(n):
            if b[j] != 0.0:
                row = list(phi)
                row[j] = a[j]
                total = total + wedge_all(row) * b[j]
        return total
    phi = np.asarray(phi, dtype=float)
    a = np.asarray(a, dtype=float)
    total = float(np.prod(phi))
    for j in range(n):
        total += b[j] * a[j] * float(np.prod(np.delete(phi, j)))
    return total


def _steps(x, base):
    return base * np.maximum(1.0, np.abs(x))


def _finite(v):
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite value on finite-difference stencil")
    return v


def numeric_derivative(f, M, order=1, step=None):
    """Central-difference gradient (order 1) or Hessian (order 2) of a scalar f.

    The result has shape M.shape (gradient) or M.shape + M.shape (Hessian).
    Default steps are eps^(1/3) and eps^(1/4) scaled by max(1, |entry|).
    """
    M = np.asarray(M, dtype=float)
    flat = M.ravel()
    m = flat.size
    shape = M.shape

    def F(v):
        return float(_finite(np.asarray(f(v.reshape(shape)), dtype=float)))

    if order == 1:
        h = _steps(flat, STEP1 if step is None else step)
        g = np.empty(m)
        for i in range(m):
            e = np.zeros(m)
            e[i] = h[i]
            g[i] = (F(flat + e) - F(flat - e)) / (2 * h[i])
        return g.reshape(shape)
    if order != 2:
        raise DomainError("order must be 1 or 2")
    h = _steps(flat, STEP2 if step is None else step)
    f0 = F(flat)
    Hm = np.empty((m, m))
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h[i]
        Hm[i, i] = (F(flat + ei) - 2 * f0 + F(flat - ei)) / h[i] ** 2
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = h[j]
            v = (F(flat + ei + ej) - F(flat + ei - ej) - F(flat - ei + ej) + F(flat - ei - ej)) / (4 * h[i] * h[j])
            Hm[i, j] = Hm[j, i] = v
    return Hm.reshape(shape + shape)


def jacobian(F, x, step=None):
    """Central-difference Jacobian of an array-valued F at the vector x.

    The result has shape F(x).shape + (len(x),).
    """
    x = np.asarray(x, dtype=float)
    h = _steps(x, STEP1 if step is None else step)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        d = (_finite(np.asarray(F(x + e), dtype=float)) - _finite(np.asarray(F(x - e), dtype=float))) / (2 * h[i])
        cols.append(d)
    return np.stack(cols, axis=-1)


def ext_derivative(field, point, step=None):
    """Exterior derivative of a form field at ``point`` by central differences."""
    point = np.asarray(point, dtype=float)
    base = field(point)
    if base.grade >= base.dim:
        raise DomainError("grade must be below the chart dimension")
    partials = jacobian(lambda p: field(p).coeffs, point, step)
    out = FormValue.zero(base.dim, base.grade + 1)
    for c in range(base.dim):
        dc = FormValue(base.dim, base.grade, partials[:, c])
        out = out + FormValue.basis(base.dim, (c,)).wedge(dc)
    return out


def pullback_top(form, jac):
    """Coefficient of dt^1..dt^n after pulling a grade-n form back along a map.

    ``jac`` is the (dim, n) matrix of derivatives dz^c/dt^j of the chart
    coordinates along the map.
    """
    jac = np.asarray(jac, dtype=float)
    n = jac.shape[1]
    if form.grade != n:
        raise DomainError("pullback_top needs a form of grade n")
    return float(sum(c * np.linalg.det(jac[list(B), :]) for B, c in zip(form.indices, form.coeffs) if c))
