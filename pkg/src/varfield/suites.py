"""Verification suites: named checks over a catalog or user problem, assembled into a report."""
import os
import platform
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .canonical import (
    action_plucker_identities,
    all_closedness_residuals,
    canonical_system_residual,
    field_momentum_residuals,
    invariant_form_S,
    invariant_form_expansion,
    omega_field,
    omega_value,
    poincare_cartan_delta,
)
from .conditions import (
    from_hessian,
    quadratic_min_full,
    rank1_grid_minimum,
    rank1_minimum,
    skew_addition,
)
from .excess import (
    corrected_hessian,
    excess_stationarity,
    excess_value,
    geodesic_field_check,
    hessian_correction,
)
from .geometry import (
    VariationalSolution,
    connection_from_V,
    covariant_derivative,
    curvature,
    random_polynomial_frame,
    riccati_residual,
    transversality_matrix,
    variational_residual,
    w_from_actions,
)
from .hopf import (
    X_norms,
    conformal_factor3,
    contact_obstruction,
    hopf_X,
    midpoint_violations,
    minor_vector,
    projected_rotation,
    s7_from_minors,
    s7_integrand,
)
from .multilinear import (
    ext_derivative,
    jacobian,
    multi_indices,
    numeric_derivative,
    pullback_top,
)
from .transforms import (
    CARATHEODORY,
    ZK,
    caratheodory_transform,
    legendre_swap,
    random_quadruple,
    round_trip_error,
    tangentiality_residual,
    zk_delta,
    zk_transform,
)

SCHEMA_VERSION = "varfield.report/1"
SUITES = ("transforms", "excess", "conditions", "canonical", "geometry", "hopf")


@dataclass
class Outcome:
    """Result of one check. ``comparison`` is 'le' (residual <= tolerance) or 'ge'."""

    residual: float
    tolerance: float
    witness: dict = field(default_factory=dict)
    comparison: str = "le"
    passed: bool = None


@dataclass(frozen=True)
class Check:
    name: str
    equation: str
    fn: Callable


def _rng(seed, name):
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def _points(problem, rng, cap, shrink=0.0):
    pts = problem.grid(shrink=shrink)
    if len(pts) <= cap:
        return pts
    idx = np.sort(rng.choice(len(pts), cap, replace=False))
    return [pts[i] for i in idx]


def _pt(point):
    return {"t": np.asarray(point[0]).tolist(), "x": np.asarray(point[1]).tolist()}


def _worst(values):
    """(max |value|, index) over a list of arrays or scalars."""
    mags = [float(np.max(np.abs(v))) if np.size(v) else 0.0 for v in values]
    i = int(np.argmax(mags))
    return mags[i], i


# transforms

def _corpus(problem, rng, regime, k=None, size=100):
    return [random_quadruple(rng, problem.n, problem.nu, regime, k) for _ in range(size)]


def _quad_witness(u):
    return {"f": u.f, "q": u.q.tolist(), "p": u.p.tolist()}


def _carath_involution(problem, rng):
    us = _corpus(problem, rng, CARATHEODORY)
    r, i = _worst([round_trip_error(u) for u in us])
    return Outcome(r, 1e-8, {"corpus": len(us), "quadruple": _quad_witness(us[i])})


def _determinant_identity(problem, rng):
    us = _corpus(problem, rng, CARATHEODORY)
    errs = []
    for u in us:
        star = caratheodory_transform(u).quadruple
        lhs = np.linalg.det(np.eye(u.nu) + star.q.T @ u.q)
        errs.append(abs(lhs - u.f * star.f) / max(1.0, abs(u.f * star.f)))
    r, i = _worst(errs)
    return Outcome(r, 1e-9, {"corpus": len(us), "quadruple": _quad_witness(us[i])})


def _tangentiality(problem, rng):
    errs, scales = [], []
    us = _corpus(problem, rng, CARATHEODORY)
    for u in us:
        d = (rng.normal(), rng.normal(size=u.q.shape), rng.normal(size=u.p.shape))
        scale = max(1.0, abs(u.f)) * max(1.0, float(np.max(np.abs(caratheodory_transform(u).quadruple.as_array()))))
        errs.append(abs(tangentiality_residual(u, d)) / scale)
        scales.append(scale)
    r, i = _worst(errs)
    return Outcome(r, 1e-5, {"curves": len(us), "scale": scales[i], "quadruple": _quad_witness(us[i])})


def _legendre_involution(problem, rng):
    us = _corpus(problem, rng, CARATHEODORY)
    errs = []
    for u in us:
        twice = legendre_swap(legendre_swap(u))
        errs.append(float(np.max(np.abs(twice.as_array() - u.as_array()))))
    r, _ = _worst(errs)
    return Outcome(r, 1e-14, {"corpus": len(us)})


def _zk_round_trip(k):
    def run(problem, rng):
        us = _corpus(problem, rng, ZK, k)
        r, i = _worst([round_trip_error(u) for u in us])
        return Outcome(r, 1e-8, {"k": k, "corpus": len(us), "quadruple": _quad_witness(us[i])})

    return run


def _zk_scaling(k):
    def run(problem, rng):
        us = _corpus(problem, rng, ZK, k)
        errs = []
        for u in us:
            res = zk_transform(u, k)
            errs.append(abs(zk_delta(res.quadruple, k) - res.gamma * res.delta_tilde) / max(1.0, abs(res.gamma * res.delta_tilde)))
        r, i = _worst(errs)
        return Outcome(r, 1e-9, {"k": k, "corpus": len(us), "quadruple": _quad_witness(us[i])})

    return run


def _zk_gradient(k):
    def run(problem, rng):
        us = _corpus(problem, rng, ZK, k)
        errs = []
        for u in us:
            fd = numeric_derivative(lambda m: zk_delta(type(u)(u.f, 0.0, m, u.p, ZK, k), k), u.q, 1)
            errs.append(float(np.max(np.abs(fd - zk_transform(u, k).q_star))))
        r, i = _worst(errs)
        return Outcome(r, 1e-5, {"k": k, "corpus": len(us), "quadruple": _quad_witness(us[i])})

    return run


def _transform_checks(problem):
    out = [
        Check("transforms.caratheodory_involution", "Thm 2, Eq. 14", _carath_involution),
        Check("transforms.determinant_identity", "Eq. 10", _determinant_identity),
        Check("transforms.tangentiality", "Eq. 12", _tangentiality),
        Check("transforms.legendre_involution", "Eq. 1-2", _legendre_involution),
    ]
    for k in problem.ks:
        out += [
            Check(f"transforms.zk_round_trip_k{k}", "Thm 6, Eq. 40", _zk_round_trip(k)),
            Check(f"transforms.zk_delta_scaling_k{k}", "Eq. 39", _zk_scaling(k)),
            Check(f"transforms.zk_gradient_k{k}", "Eq. 31/33", _zk_gradient(k)),
        ]
    return out


# excess

def _excess_points(problem, rng):
    return _points(problem, rng, 32)


def _excess_value(k):
    def run(problem, rng):
        pts = _excess_points(problem, rng)
        vals = [excess_value(problem.lagrangian, problem.slope_field, p, problem.slope_field(*p), k) for p in pts]
        r, i = _worst(vals)
        return Outcome(r, 1e-10, {"k": k, "point": _pt(pts[i])})

    return run


def _excess_gradient(k):
    def run(problem, rng):
        pts = _excess_points(problem, rng)
        grads, assembled = zip(*(excess_stationarity(problem.lagrangian, problem.slope_field, p, k) for p in pts))
        norms = [float(np.linalg.norm(g)) for g in grads]
        r, i = _worst(norms)
        return Outcome(r, 1e-5, {"k": k, "point": _pt(pts[i]), "assembled_residual": _worst(assembled)[0]})

    return run


def _excess_hessian(k):
    def run(problem, rng):
        L, g = problem.lagrangian, problem.slope_field
        pts = _points(problem, rng, 12)
        errs, corr = [], 0.0
        for p in pts:
            G = g(*p)
            fd = numeric_derivative(lambda m: excess_value(L, g, p, m, k), G, 2)
            errs.append(np.max(np.abs(fd - corrected_hessian(L, g, p, k))))
            if k == 1:
                corr = max(corr, float(np.max(np.abs(hessian_correction(L.momentum(*p, G), L(*p, G), problem.n, 1)))))
        r, i = _worst(errs)
        out = Outcome(r, 1e-4, {"k": k, "point": _pt(pts[i]), "k1_correction_max": corr})
        if k == 1 and corr != 0.0:
            out.passed = False
        return out

    return run


def _poincare_cartan(k):
    def run(problem, rng):
        L, g = problem.lagrangian, problem.slope_field
        pts = _excess_points(problem, rng)
        errs = []
        for p in pts:
            q = g(*p) + rng.uniform(-0.5, 0.5, (problem.n, problem.nu))
            errs.append(abs(L(*p, q) - excess_value(L, g, p, q, k) - poincare_cartan_delta(L, g, p, q, k)))
        r, i = _worst(errs)
        return Outcome(r, 1e-10, {"k": k, "point": _pt(pts[i])})

    return run


def _geodesic(k, mode):
    def run(problem, rng):
        L, g = problem.lagrangian, problem.slope_field
        pts = _points(problem, rng, 32 if mode == "local" else 4)
        v = geodesic_field_check(L, g, pts, k, mode, rng, starts=8)
        expected = problem.expect_geodesic.get(k)
        wit = {"k": k, "mode": mode, "geodesic": v.geodesic, "expected": expected, "minimum": v.worst}
        if v.witness_point is not None:
            wit["point"] = _pt(v.witness_point)
        if v.witness_q is not None:
            wit["q"] = v.witness_q.tolist()
        want = True if expected is None else expected
        return Outcome(v.worst, -1e-8, wit, "ge", v.geodesic == want)

    return run


def _excess_checks(problem):
    if problem.lagrangian is None or problem.slope_field is None:
        return []
    out = []
    for k in problem.ks:
        out += [
            Check(f"excess.value_at_slope_k{k}", "Eq. 20", _excess_value(k)),
            Check(f"excess.stationarity_k{k}", "Eq. 20/21", _excess_gradient(k)),
            Check(f"excess.corrected_hessian_k{k}", "Eq. 24", _excess_hessian(k)),
            Check(f"excess.poincare_cartan_k{k}", "Eq. 44/45", _poincare_cartan(k)),
            Check(f"excess.geodesic_local_k{k}", "Def. 3, Eq. 24", _geodesic(k, "local")),
            Check(f"excess.geodesic_global_k{k}", "Def. 3, Eq. 19", _geodesic(k, "global")),
        ]
    return out


# conditions

def _tensors(problem, rng, cap=8):
    L, g = problem.lagrangian, problem.slope_field
    pts = _points(problem, rng, cap)
    out = []
    for p in pts:
        G = g(*p) if g is not None else np.zeros((problem.n, problem.nu))
        out.append((p, from_hessian(L.hessian(*p, G))))
    return out


def _rank1_vs_full(problem, rng):
    gaps = []
    data = _tensors(problem, rng)
    for _, a in data:
        gaps.append(max(0.0, quadratic_min_full(a) - rank1_minimum(a, rng)[0]))
    r, i = _worst(gaps)
    return Outcome(r, 1e-9, {"point": _pt(data[i][0])})


def _legendre_hadamard(problem, rng):
    data = _tensors(problem, rng)
    mins = [rank1_minimum(a, rng)[0] for _, a in data]
    i = int(np.argmin(mins))
    return Outcome(mins[i], -1e-8, {"point": _pt(data[i][0]), "full_minimum": quadratic_min_full(data[i][1])}, "ge")


def _grid_crosscheck(problem, rng):
    data = _tensors(problem, rng, 4)
    errs = []
    for _, a in data:
        grid = rank1_grid_minimum(a, 60, zoom=3)
        alt = rank1_minimum(a, rng)[0]
        errs.append(grid - alt if grid >= alt - 1e-9 else np.inf)
    r, i = _worst(errs)
    return Outcome(r, 1e-4, {"point": _pt(data[i][0]), "grid_base": 60, "zoom_passes": 3})


def _random_skew(rng, nu, n):
    r = rng.normal(size=(nu, nu, n, n))
    return (r - r.transpose(1, 0, 2, 3) - r.transpose(0, 1, 3, 2) + r.transpose(1, 0, 3, 2)) / 4


def _rank1_pairs(rng, nu, n, count):
    xi = rng.normal(size=(count, nu))
    eta = rng.normal(size=(count, n))
    return xi / np.linalg.norm(xi, axis=1)[:, None], eta / np.linalg.norm(eta, axis=1)[:, None]


def _skew_invariance(problem, rng):
    _, a = _tensors(problem, rng, 1)[0]
    b = skew_addition(a, _random_skew(rng, problem.nu, problem.n))
    xi, eta = _rank1_pairs(rng, problem.nu, problem.n, 10000)
    drift = np.abs(np.einsum("abij,pa,pb,pi,pj->p", b - a, xi, xi, eta, eta))
    return Outcome(float(drift.max()), 1e-12, {"pairs": len(xi), "full_minimum_shift": quadratic_min_full(b) - quadratic_min_full(a)})


def _det_gap(problem, rng):
    _, a = _tensors(problem, rng, 1)[0]
    rank1 = rank1_minimum(a, rng)[0]
    full = quadratic_min_full(a)
    return Outcome(abs(rank1), 1e-6, {"rank1_minimum": rank1, "full_minimum": full}, passed=abs(rank1) <= 1e-6 and full <= -0.5)


def _condition_checks(problem):
    if problem.lagrangian is None:
        return []
    out = [
        Check("conditions.rank1_not_below_full", "Thm 1", _rank1_vs_full),
        Check("conditions.legendre_hadamard", "Thm 1", _legendre_hadamard),
    ]
    if problem.n <= 2 and problem.nu <= 2:
        out.append(Check("conditions.grid_crosscheck", "Thm 1", _grid_crosscheck))
    if problem.n >= 2 and problem.nu >= 2:
        out.append(Check("conditions.skew_invariance", "Thm 1", _skew_invariance))
    if problem.gap_demo:
        out.append(Check("conditions.rank1_full_gap", "Thm 1", _det_gap))
    return out


# canonical

def _stencil(problem):
    return 1e-3 * max(hi - lo for lo, hi in problem.domain)


def _canon_points(problem, rng, cap=64):
    return _points(problem, rng, cap, shrink=_stencil(problem))


def _closedness(problem, rng):
    pts = _canon_points(problem, rng, 125)
    vals = [max(abs(v) for v in all_closedness_residuals(problem.canonical, p).values()) for p in pts]
    r, i = _worst(vals)
    return Outcome(r, 1e-5, {"point": _pt(pts[i]), "grid_points": len(pts)})


def _closedness_vs_exterior(problem, rng):
    CF = problem.canonical
    n = CF.n
    errs, pts = [], _canon_points(problem, rng, 6)
    for p in pts:
        z = np.concatenate(p)
        d = ext_derivative(omega_field(CF), z)
        for (J, Xi), v in all_closedness_residuals(CF, p).items():
            target = tuple([i for i in range(n) if i not in J] + [n + a for a in Xi])
            errs.append(abs(v - d.coefficient(target)))
    r, _ = _worst(errs)
    return Outcome(r, 1e-4, {"points": len(pts)})


def _perturbed(problem, rng):
    pts = _canon_points(problem, rng, 125)
    vals = np.array([max(abs(v) for v in all_closedness_residuals(problem.perturbed, p).values()) for p in pts])
    frac = float(np.mean(vals > 1e-3))
    return Outcome(frac, 0.9, {"threshold": 1e-3, "grid_points": len(pts), "smallest": float(vals.min())}, "ge")


def _plucker(problem, rng):
    CF, S = problem.canonical, problem.actions
    pts = _canon_points(problem, rng, 16)
    errs = []
    for p in pts:
        for s in range(0, min(CF.k, CF.nu) + 1):
            for J in multi_indices(CF.n, s):
                for Xi in multi_indices(CF.nu, s):
                    errs.append(abs(action_plucker_identities(S, CF, p, J, Xi)))
    r, _ = _worst(errs)
    return Outcome(r, 1e-8, {"points": len(pts)})


def _expansion(problem, rng):
    CF, S = problem.canonical, problem.actions
    pts = _canon_points(problem, rng, 16)
    errs = []
    for p in pts:
        xdot = rng.uniform(-1, 1, (CF.n, CF.nu))
        errs.append(abs(invariant_form_S(S, p, xdot, CF.k) - invariant_form_expansion(S, p, xdot, CF.k)))
    r, i = _worst(errs)
    return Outcome(r, 1e-10, {"point": _pt(pts[i])})


def _omega_pullback(problem, rng):
    CF, S = problem.canonical, problem.actions
    pts = _canon_points(problem, rng, 16)
    errs = []
    for p in pts:
        xdot = rng.uniform(-1, 1, (CF.n, CF.nu))
        jac = np.vstack([np.eye(CF.n), xdot.T])
        pulled = pullback_top(omega_value(CF, p), jac) / comb(CF.n, CF.k)
        errs.append(abs(pulled - invariant_form_S(S, p, xdot, CF.k)))
    r, i = _worst(errs)
    return Outcome(r, 1e-10, {"point": _pt(pts[i])})


def _field_momentum(problem, rng):
    pts = _canon_points(problem, rng, 16)
    with_factor, without = zip(*(field_momentum_residuals(problem.canonical, p) for p in pts))
    r, i = _worst(with_factor)
    return Outcome(r, 1e-5, {"point": _pt(pts[i]), "unweighted_residual": _worst(without)[0]})


def _canonical_system(problem, rng):
    H = problem.hamiltonian
    lo, hi = problem.domain[0]
    errs = []
    for t in np.linspace(lo, hi, 11):
        a, b = canonical_system_residual(lambda t, x, qs: H(x, qs), problem.trajectory, [t], problem.n, 1)
        errs.append(max(np.max(np.abs(a)), np.max(np.abs(b))))
    r, i = _worst(errs)
    return Outcome(r, 1e-5, {"t": float(np.linspace(lo, hi, 11)[i])})


def _canonical_checks(problem):
    if problem.canonical is None:
        return []
    out = [
        Check("canonical.closedness", "Thm 7, Eq. 64", _closedness),
        Check("canonical.closedness_vs_exterior_derivative", "Thm 7, Eq. 37", _closedness_vs_exterior),
        Check("canonical.field_momentum", "Eq. 49/50", _field_momentum),
    ]
    if problem.perturbed is not None:
        out.append(Check("canonical.perturbed_detection", "Thm 7, Eq. 64", _perturbed))
    if problem.actions is not None:
        out += [
            Check("canonical.plucker_identities", "Sec. 7", _plucker),
            Check("canonical.invariant_expansion", "Eq. 41/43", _expansion),
            Check("canonical.omega_pullback", "Eq. 37/41", _omega_pullback),
        ]
    if problem.hamiltonian is not None and problem.trajectory is not None and problem.n == 1:
        out.append(Check("canonical.canonical_system", "Eq. 51", _canonical_system))
    return out


# geometry

def _variational_solution(problem, rng):
    x0, q0 = problem.trajectory(np.array([problem.domain[0][0]]))
    W0 = np.array([[0.5, 0.1], [0.1, 0.3]]) if problem.nu == 2 else 0.3 * np.eye(problem.nu)
    lo, hi = problem.domain[0]
    return VariationalSolution(problem.hamiltonian, np.ravel(x0), np.ravel(q0), np.eye(problem.nu), W0, lo, hi)


def _sample_times(problem, count=9):
    lo, hi = problem.domain[0]
    pad = 0.02 * (hi - lo)
    return np.linspace(lo + pad, hi - pad, count)


def _variational(problem, rng):
    sol = _variational_solution(problem, rng)
    errs = []
    for t in _sample_times(problem):
        a, b = variational_residual(sol.blocks, sol.U, sol.V, [t])
        errs.append(max(np.max(np.abs(a)), np.max(np.abs(b))))
    r, _ = _worst(errs)
    return Outcome(r, 1e-5, {"samples": len(errs)})


def _riccati(problem, rng):
    sol = _variational_solution(problem, rng)
    errs, skipped = [], 0
    for t in _sample_times(problem):
        if sol.degenerate(t):
            skipped += 1
            continue
        errs.append(np.max(np.abs(riccati_residual(sol.blocks, sol.W, [t]))))
    r, _ = _worst(errs)
    return Outcome(r, 1e-4, {"samples": len(errs), "degenerate_skipped": skipped})


def _field_extremal(problem):
    t0 = np.array([problem.domain[0][0]])
    x0 = np.array([0.5 * (lo + hi) for lo, hi in problem.domain[problem.n:]])
    q0 = problem.actions.gradients(t0, x0)[1][0]
    return lambda t: x0 * np.cos(t[0] - t0[0]) + q0 * np.sin(t[0] - t0[0])


def _riccati_actions(problem, rng):
    surface = _field_extremal(problem)
    H = problem.hamiltonian

    def blocks(t):
        x = surface(t)
        qs = problem.actions.gradients(t, x)[1]
        return H.blocks(x, qs)

    W = lambda t: w_from_actions(problem.actions, surface, t, 1)
    errs = [np.max(np.abs(riccati_residual(blocks, W, [t]))) for t in _sample_times(problem)]
    r, _ = _worst(errs)
    return Outcome(r, 1e-4, {"samples": len(errs)})


def _corollary1(problem, rng):
    surface = _field_extremal(problem)
    errs = []
    for t in _sample_times(problem, 5):
        W = w_from_actions(problem.actions, surface, [t], 1)[0]
        x = surface([t])
        hess = jacobian(lambda v: problem.actions.gradients(np.array([t]), v)[1][0], x)
        errs.append(max(np.max(np.abs(W - hess)), np.max(np.abs(W - W.T))))
    r, _ = _worst(errs)
    return Outcome(r, 1e-6, {"samples": len(errs)})


def _transversality(problem, rng):
    n, nu = problem.n, problem.nu
    B = rng.uniform(-0.5, 0.5, (nu, n))
    c = np.array([0.5 * (lo + hi) for lo, hi in problem.domain[n:]])
    surface = lambda t: c + B @ t
    errs, ranks = [], []
    for _ in range(5):
        t = np.array([rng.uniform(lo, hi) for lo, hi in problem.domain[:n]])
        M = transversality_matrix(problem.lagrangian, surface, t)
        _, sv, vt = np.linalg.svd(M)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        ranks.append(rank)
        errs.append(np.max(np.abs(M @ vt[rank:].T)) if rank < M.shape[1] else 0.0)
    r, _ = _worst(errs)
    return Outcome(r, 1e-12, {"ranks": ranks, "kernel_dimension": [n + nu - k for k in ranks]}, passed=r <= 1e-12 and min(ranks) == n)


def _flatness(problem, rng):
    errs = []
    for _ in range(5):
        V, dV = random_polynomial_frame(rng, 2, 2)
        y = connection_from_V(V, dV)
        for _ in range(4):
            t = rng.uniform(-0.5, 0.5, 2)
            errs.append(np.max(np.abs(curvature(y, t, 0, 1))))
            c = rng.normal(size=2)
            errs.append(np.max(np.abs(covariant_derivative(lambda s: -y(s), lambda s: V(s) @ c, rng.normal(size=2), t))))
    r, _ = _worst(errs)
    return Outcome(r, 1e-4, {"frames": 5, "points_per_frame": 4})


def _control(problem, rng):
    Y = np.array([[[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]])
    R = curvature(lambda t: Y, np.zeros(2), 0, 1)
    return Outcome(float(np.linalg.norm(R)), 0.5, {"curvature": R.tolist()}, "ge")


def _geometry_checks(problem):
    out = [
        Check("geometry.flatness", "Thm 10, Eq. 74/75", _flatness),
        Check("geometry.curvature_control", "Eq. 74", _control),
    ]
    if problem.lagrangian is not None:
        out.append(Check("geometry.transversality_kernel", "Thm 5", _transversality))
    if problem.hamiltonian is not None and problem.trajectory is not None and problem.n == 1:
        out += [
            Check("geometry.variational", "Eq. 66", _variational),
            Check("geometry.riccati_integrated", "Eq. 67", _riccati),
        ]
        if problem.actions is not None:
            out += [
                Check("geometry.riccati_from_actions", "Eq. 67/68", _riccati_actions),
                Check("geometry.corollary1_hessian", "Cor. 1, Eq. 68", _corollary1),
            ]
    return out


# hopf

def _box_samples(problem, rng, count):
    lo = np.array([b[0] for b in problem.domain])
    hi = np.array([b[1] for b in problem.domain])
    return rng.uniform(lo, hi, (count, len(lo)))


def _obstruction_oracle(problem, rng):
    pts = [np.concatenate(p) for p in problem.grid(9)]
    errs = [abs(contact_obstruction(p) + p[1] ** 2 + p[2] ** 2) for p in pts]
    r, i = _worst(errs)
    return Outcome(r, 1e-6, {"grid_points": len(pts), "point": pts[i].tolist(), "unit_point_value": contact_obstruction([0.0, 1.0, 0.0])})


def _non_integrable(problem, rng):
    pts = _box_samples(problem, rng, 1000)
    vals = np.array([contact_obstruction(p) for p in pts])
    frac = float(np.mean(np.abs(vals) > 1e-6))
    note = "xi ^ d xi is nonzero: the transversal distribution is not integrable" if frac > 0 else "no obstruction found"
    return Outcome(frac, 0.99, {"samples": len(pts), "note": note}, "ge")


def _rotation_derivation(problem, rng):
    pts = _box_samples(problem, rng, 50)
    errs = []
    for p in pts:
        d = jacobian(lambda phi: projected_rotation(p, phi[0]), np.zeros(1))[:, 0]
        errs.append(np.max(np.abs(d - hopf_X(p))))
    r, i = _worst(errs)
    return Outcome(r, 1e-6, {"point": pts[i].tolist()})


def _metric_norm(problem, rng):
    pts = _box_samples(problem, rng, 200)
    errs, smallest = [], np.inf
    for p in pts:
        flat, metric = X_norms(p)
        errs.append(abs(metric - conformal_factor3(p) * flat))
        smallest = min(smallest, metric)
    r, _ = _worst(errs)
    return Outcome(r, 1e-14, {"smallest_metric_norm": float(smallest)}, passed=r <= 1e-14 and smallest > 0)


def _s7_unit(problem, rng):
    q = np.hstack([np.eye(3), np.zeros((3, 4))])
    v = s7_integrand(np.zeros(7), q)
    return Outcome(abs(v - 1.0), 1e-14, {"value": v})


def _s7_homogeneity(problem, rng):
    errs = []
    for _ in range(200):
        p, q, lam = rng.uniform(-1, 1, 7), rng.normal(size=(3, 7)), rng.uniform(-3, 3)
        f = s7_integrand(p, q)
        errs.append(abs(s7_integrand(p, lam * q) - abs(lam) ** 3 * f) / max(1.0, abs(lam) ** 3 * f))
    r, _ = _worst(errs)
    return Outcome(r, 1e-10, {"samples": len(errs)})


def _s7_pairs(rng, count):
    p = rng.uniform(-1, 1, 7)
    return p, [(rng.normal(size=(3, 7)), rng.normal(size=(3, 7))) for _ in range(count)]


def _s7_q_nonconvex(problem, rng):
    p, pairs = _s7_pairs(rng, 10000)
    v = midpoint_violations(lambda q: s7_integrand(p, q), pairs)
    return Outcome(float(v), 1.0, {"pairs": len(pairs), "violations": v}, "ge")


def _s7_minor_convex(problem, rng):
    p, pairs = _s7_pairs(rng, 10000)
    mpairs = [(minor_vector(a), minor_vector(b)) for a, b in pairs]
    v = midpoint_violations(lambda m: s7_from_minors(p, m), mpairs)
    return Outcome(float(v), 0.0, {"pairs": len(mpairs), "violations": v})


def _hopf_checks(problem):
    if problem.hopf == "s3":
        return [
            Check("hopf.obstruction_oracle", "Sec. 11", _obstruction_oracle),
            Check("hopf.non_integrability", "Sec. 11", _non_integrable),
            Check("hopf.rotation_derivation", "Sec. 11", _rotation_derivation),
            Check("hopf.metric_norm", "Sec. 11", _metric_norm),
        ]
    if problem.hopf == "s7":
        return [
            Check("hopf.s7_unit_minor", "Sec. 11", _s7_unit),
            Check("hopf.s7_homogeneity", "Sec. 11", _s7_homogeneity),
            Check("hopf.s7_nonconvex_in_q", "Sec. 11", _s7_q_nonconvex),
            Check("hopf.s7_convex_in_minors", "Sec. 11", _s7_minor_convex),
        ]
    return []


BUILDERS = {
    "transforms": _transform_checks,
    "excess": _excess_checks,
    "conditions": _condition_checks,
    "canonical": _canonical_checks,
    "geometry": _geometry_checks,
    "hopf": _hopf_checks,
}


def checks_for(problem, suites):
    return [c for s in suites for c in BUILDERS[s](problem)]


def _json_number(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_number(obj)
    return obj


def run_check(check, problem, seed, tol_scale=1.0):
    """Execute one check; exceptions become failed records."""
    try:
        out = check.fn(problem, _rng(seed, check.name))
    except Exception as exc:  # noqa: BLE001 - a numeric failure must not abort the suite
        return {
            "check": check.name,
            "equation": check.equation,
            "max_residual": None,
            "tolerance": None,
            "comparison": "le",
            "passed": False,
            "witness": {"error": f"{type(exc).__name__}: {exc}"},
        }
    tol = out.tolerance * tol_scale if out.comparison == "le" else out.tolerance
    res = float(out.residual)
    if out.passed is None:
        ok = res <= tol if out.comparison == "le" else res >= tol
    else:
        ok = bool(out.passed)
    return {
        "check": check.name,
        "equation": check.equation,
        "max_residual": _json_number(res),
        "tolerance": _json_number(tol),
        "comparison": out.comparison,
        "passed": bool(ok and np.isfinite(res)),
        "witness": _clean(out.witness),
    }


def thread_count():
    raw = os.environ.get("VARFIELD_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(4, os.cpu_count() or 1)


def run_suite(problem, suites, seed=0, tol_scale=1.0, threads=None):
    """Run the selected suites and return the report dictionary."""
    unknown = [s for s in suites if s not in BUILDERS]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    checks = checks_for(problem, suites)
    workers = threads or thread_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(lambda c: run_check(c, problem, seed, tol_scale), checks))
    records.sort(key=lambda r: r["check"])
    empty = [s for s in suites if not BUILDERS[s](problem)]
    return {
        "schema_version": SCHEMA_VERSION,
        "problem": {"name": problem.name, "n": problem.n, "nu": problem.nu, "k": list(problem.ks)},
        "suites": list(suites),
        "seed": seed,
        "tol_scale": tol_scale,
        "environment": {
            "varfield": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "checks": records,
        "not_applicable": empty,
        "passed": all(r["passed"] for r in records),
    }
