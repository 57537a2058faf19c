"""Hopf bundle examples: the S^3 transversality form and the S^7 volume integrand."""
import numpy as np

from .multilinear import FormValue, exterior_power, ext_derivative


def conformal_factor3(p):
    eta, z1, z2 = p
    return (1.0 + eta**2 + z1**2 + z2**2) ** -2


def hopf_X(p):
    eta, z1, z2 = p
    return np.array([1.0 + eta**2, -eta * z1 + z2, z1 + eta * z2])


def hopf_xi(p):
    """The 1-form (1 + eta^2) d eta + (-eta z1 + z2) d z1 + (z1 + eta z2) d z2."""
    return FormValue.one_form(hopf_X(p))


def hopf3_data(p):
    """(conformal factor, X, xi) at a chart point (eta, zeta1, zeta2)."""
    p = np.asarray(p, dtype=float)
    return conformal_factor3(p), hopf_X(p), hopf_xi(p)


def X_norms(p):
    """Squared length of X in the flat chart metric and in the conformal metric."""
    X = hopf_X(p)
    flat = float(X @ X)
    return flat, conformal_factor3(p) * flat


def projected_rotation(p, phi):
    """Normalized chart image of the fibre rotation of the point (1, eta, z1, z2) by angle phi."""
    eta, z1, z2 = p
    c, s = np.cos(phi), np.sin(phi)
    den = c + eta * s
    return np.array([(s - eta * c) / den, (z1 * c + z2 * s) / den, (z1 * s - z2 * c) / den])


def contact_obstruction(p, step=None):
    """Coefficient of d eta ^ d z1 ^ d z2 in xi ^ d xi, with d xi by finite differences."""
    p = np.asarray(p, dtype=float)
    xi = hopf_xi(p)
    dxi = ext_derivative(hopf_xi, p, step)
    return xi.wedge(dxi).coeffs[0]


def conformal_factor7(p):
    p = np.asarray(p, dtype=float)
    return (1.0 + float(p @ p)) ** -3


def minor_vector(q):
    """All 3 x 3 minors of a 3 x 7 Jacobian, lexicographic in the column triple."""
    return exterior_power(np.asarray(q, dtype=float), 3).ravel()


def s7_from_minors(p, m):
    return conformal_factor7(p) * float(np.linalg.norm(m))


def s7_integrand(p, q):
    """(1 + eta^2 + zeta^2)^-3 times the Euclidean norm of the grade-3 minors of q."""
    return s7_from_minors(p, minor_vector(q))


def midpoint_violations(fn, samples):
    """Count pairs with fn((a + b)/2) > (fn(a) + fn(b))/2 beyond rounding."""
    count = 0
    for a, b in samples:
        mid = fn(0.5 * (a + b))
        avg = 0.5 * (fn(a) + fn(b))
        if mid > avg + 1e-12 * max(1.0, abs(avg)):
            count += 1
    return count
