"""Problem catalog and JSON problem-file loader."""
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .canonical import CanonicalField
from .fields import (
    ActionFunctions,
    Lagrangian,
    Polynomial,
    SlopeField,
    polynomial_actions,
    polynomial_lagrangian,
    polynomial_slope_field,
)
from .geometry import Hamiltonian


@dataclass
class Problem:
    name: str
    description: str
    n: int
    nu: int
    ks: tuple
    domain: list
    density: int = 5
    seed: int = 0
    lagrangian: Optional[Lagrangian] = None
    slope_field: Optional[SlopeField] = None
    actions: Optional[ActionFunctions] = None
    canonical: Optional[CanonicalField] = None
    perturbed: Optional[CanonicalField] = None
    hamiltonian: Optional[Hamiltonian] = None
    trajectory: Optional[Callable] = None
    expect_geodesic: dict = field(default_factory=dict)
    gap_demo: bool = False
    hopf: Optional[str] = None

    def grid(self, density=None, shrink=0.0):
        """Lattice over the domain box, optionally pulled inwards by ``shrink`` per side."""
        m = density or self.density
        axes = [np.linspace(lo + shrink, hi - shrink, m) for lo, hi in self.domain]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        return [(p[: self.n], p[self.n:]) for p in pts]


def _dirichlet():
    n, nu = 2, 2
    L = Lagrangian(n, nu, lambda t, x, q: 0.5 * np.sum(q * q), lambda t, x, q: q,
                   lambda t, x, q: np.eye(n * nu).reshape(n, nu, n, nu), "dirichlet")
    g = SlopeField(n, nu, lambda t, x: 0.2 * np.outer(t, x) + np.array([[0.1, -0.2], [0.3, 0.0]]), "bilinear")
    B = np.array([[0.4, -0.3], [0.2, 0.5]])
    S = ActionFunctions(n, nu, lambda t, x: t + B @ x, lambda t, x: (np.eye(n), B), "affine")
    return Problem("dirichlet_k1", "Dirichlet integral 1/2|q|^2, n = nu = 2, k = 1, affine actions",
                   n, nu, (1,), [(-1.0, 1.0)] * 4, lagrangian=L, slope_field=g, actions=S,
                   canonical=CanonicalField.from_actions(S, 1), expect_geodesic={1: True})


def _det_form():
    n, nu = 2, 2

    def grad(t, x, q):
        return np.array([[q[1, 1], -q[1, 0]], [-q[0, 1], q[0, 0]]])

    def hess(t, x, q):
        Hm = np.zeros((2, 2, 2, 2))
        Hm[0, 0, 1, 1] = Hm[1, 1, 0, 0] = 1.0
        Hm[0, 1, 1, 0] = Hm[1, 0, 0, 1] = -1.0
        return Hm

    L = Lagrangian(n, nu, lambda t, x, q: np.linalg.det(q), grad, hess, "det")
    G0 = np.array([[1.2, 0.3], [-0.4, 0.9]])
    g = SlopeField(n, nu, lambda t, x: G0, "constant")
    return Problem("det_form_2x2", "Null Lagrangian det(q) for 2 x 2 jets; Hadamard gap demonstration",
                   n, nu, (1, 2), [(-1.0, 1.0)] * 4, lagrangian=L, slope_field=g,
                   expect_geodesic={1: False, 2: True}, gap_demo=True)


def _volume():
    n, nu = 2, 2

    def fn(t, x, q):
        return np.sqrt(np.linalg.det(np.eye(n) + q @ q.T))

    def grad(t, x, q):
        return fn(t, x, q) * np.linalg.solve(np.eye(n) + q @ q.T, q)

    L = Lagrangian(n, nu, fn, grad, None, "area")
    G0 = np.array([[0.3, -0.2], [0.1, 0.4]])
    g = SlopeField(n, nu, lambda t, x: G0, "constant")
    return Problem("volume_kn", "Graph area sqrt(det(I + q q^T)), n = nu = 2, k in {1, 2}, planar slope field",
                   n, nu, (1, 2), [(-1.0, 1.0)] * 4, lagrangian=L, slope_field=g,
                   expect_geodesic={1: True})


OSC_T0 = 0.5
OSC_C = np.array([0.4, 0.3])


def oscillator_actions():
    """Closed-form Hamilton-Jacobi solution of the isotropic oscillator (n = 1, nu = 2).

    S = tan(t0 - t)|x|^2/2 + c.x / cos(t0 - t) + |c|^2 tan(t0 - t)/2 solves
    S_t + |S_x|^2/2 + |x|^2/2 = 0.
    """
    t0, c = OSC_T0, OSC_C

    def parts(t):
        u = t0 - t[0]
        return np.tan(u), 1.0 / np.cos(u)

    def fn(t, x):
        a, sec = parts(t)
        return np.array([0.5 * a * x @ x + sec * c @ x + 0.5 * (c @ c) * a])

    def grad(t, x):
        a, sec = parts(t)
        Sx = a * x + sec * c
        St = -0.5 * (Sx @ Sx) - 0.5 * (x @ x)
        return np.array([[St]]), Sx[None, :]

    return ActionFunctions(1, 2, fn, grad, "hamilton-jacobi")


def _oscillator():
    n, nu = 1, 2
    S = oscillator_actions()
    L = Lagrangian(n, nu, lambda t, x, q: 0.5 * np.sum(q * q) - 0.5 * x @ x, lambda t, x, q: q,
                   lambda t, x, q: np.eye(nu).reshape(1, nu, 1, nu), "oscillator")
    g = SlopeField(n, nu, lambda t, x: S.gradients(t, x)[1], "hamilton-jacobi")
    H = Hamiltonian(n, nu, lambda x, q: -(0.5 * np.sum(q * q) + 0.5 * x @ x),
                    lambda x, q: (-x, -q),
                    lambda x, q: -np.eye(nu + n * nu))
    CF = CanonicalField.from_actions(S, 1)
    bumped = CanonicalField(n, nu, 1, CF.H, lambda t, x: CF.Q(t, x) + np.array([[0.1 * x[0] ** 2, 0.0]]))
    A0, B0 = np.array([0.8, 0.5]), np.array([0.3, 0.9])

    def trajectory(t):
        s = t[0]
        return A0 * np.cos(s) + B0 * np.sin(s), (-A0 * np.sin(s) + B0 * np.cos(s))[None, :]

    return Problem("oscillator", "Isotropic harmonic oscillator, n = k = 1, nu = 2, Hamilton-Jacobi field",
                   n, nu, (1,), [(0.0, 1.0), (0.5, 1.5), (0.5, 1.5)], lagrangian=L, slope_field=g,
                   actions=S, canonical=CF, perturbed=bumped, hamiltonian=H, trajectory=trajectory,
                   expect_geodesic={1: True})


def _hopf3():
    return Problem("hopf3", "Hopf fibration S^3 -> S^2: transversality form and its contact obstruction",
                   1, 2, (1,), [(-1.0, 1.0)] * 3, density=9, hopf="s3")


def _hopf7():
    return Problem("hopf7", "Hopf fibration S^7 -> S^4: volume integrand and convexity probes",
                   3, 4, (1, 2, 3), [(-1.0, 1.0)] * 7, density=3, hopf="s7")


BUILDERS = {
    "dirichlet_k1": _dirichlet,
    "det_form_2x2": _det_form,
    "volume_kn": _volume,
    "oscillator": _oscillator,
    "hopf3": _hopf3,
    "hopf7": _hopf7,
}


def catalog_names():
    return list(BUILDERS)


def load_catalog(name):
    return BUILDERS[name]()


class ProblemFileError(ValueError):
    """Malformed problem file; carries the 1-based line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path, self.line, self.message = path, line, message


def _line_of(text, key):
    needle = f'"{key}"'
    for i, row in enumerate(text.splitlines(), start=1):
        if needle in row:
            return i
    return 1


def _variables(n, nu, with_q):
    names = [f"t{i}" for i in range(n)] + [f"x{a}" for a in range(nu)]
    if with_q:
        names += [f"q{i}_{a}" for i in range(n) for a in range(nu)]
    return names


def _polynomial(obj, names, err, key):
    if not isinstance(obj, dict) or not isinstance(obj.get("terms"), list):
        raise err(key, "expected an object with a 'terms' list")
    index = {v: i for i, v in enumerate(names)}
    terms = []
    for term in obj["terms"]:
        if not isinstance(term, dict) or not isinstance(term.get("coef"), (int, float)):
            raise err(key, "each term needs a numeric 'coef'")
        e = np.zeros(len(names), dtype=int)
        for var, power in term.get("powers", {}).items():
            if var not in index:
                raise err(key, f"unknown variable {var!r}; expected one of {', '.join(names)}")
            if not isinstance(power, int) or power < 0:
                raise err(key, f"power of {var} must be a nonnegative integer")
            e[index[var]] = power
        terms.append((float(term["coef"]), e))
    return Polynomial(len(names), terms)


def parse_problem(text, path="<problem>"):
    """Build a Problem from JSON text; errors carry line numbers."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(path, exc.lineno, exc.msg) from None

    def err(key, message):
        return ProblemFileError(path, _line_of(text, key), f"{key}: {message}")

    if not isinstance(data, dict):
        raise ProblemFileError(path, 1, "top level must be an object")
    for key in ("name", "n", "nu", "k", "domain"):
        if key not in data:
            raise ProblemFileError(path, 1, f"missing required field {key!r}")
    n, nu = data["n"], data["nu"]
    if not (isinstance(n, int) and isinstance(nu, int) and n >= 1 and nu >= 1):
        raise err("n", "n and nu must be positive integers")
    ks = data["k"] if isinstance(data["k"], list) else [data["k"]]
    if not ks or not all(isinstance(k, int) and 1 <= k <= n for k in ks):
        raise err("k", f"every k must be an integer in 1..{n}")
    dom = data["domain"]
    if not (isinstance(dom, list) and len(dom) == n + nu and all(
            isinstance(b, list) and len(b) == 2 and all(isinstance(v, (int, float)) for v in b) and b[0] < b[1] for b in dom)):
        raise err("domain", f"expected {n + nu} [lo, hi] pairs with lo < hi")
    prob = Problem(str(data["name"]), str(data.get("description", "user problem")), n, nu, tuple(ks),
                   [tuple(map(float, b)) for b in dom], int(data.get("density", 5)), int(data.get("seed", 0)))
    if "lagrangian" in data:
        lag = data["lagrangian"]
        if isinstance(lag, str):
            if lag not in BUILDERS:
                raise err("lagrangian", f"unknown catalog key {lag!r}")
            ref = load_catalog(lag)
            if (ref.n, ref.nu) != (n, nu) or ref.lagrangian is None:
                raise err("lagrangian", f"catalog Lagrangian {lag!r} does not fit n={n}, nu={nu}")
            prob.lagrangian = ref.lagrangian
        else:
            prob.lagrangian = polynomial_lagrangian(n, nu, _polynomial(lag, _variables(n, nu, True), err, "lagrangian"))
    if "slope_field" in data:
        rows = data["slope_field"]
        if not (isinstance(rows, list) and len(rows) == n and all(isinstance(r, list) and len(r) == nu for r in rows)):
            raise err("slope_field", f"expected {n} rows of {nu} polynomials")
        names = _variables(n, nu, False)
        prob.slope_field = polynomial_slope_field(n, nu, [_polynomial(p, names, err, "slope_field") for r in rows for p in r])
    if "action_functions" in data:
        polys = data["action_functions"]
        if not (isinstance(polys, list) and len(polys) == n):
            raise err("action_functions", f"expected {n} polynomials")
        names = _variables(n, nu, False)
        prob.actions = polynomial_actions(n, nu, [_polynomial(p, names, err, "action_functions") for p in polys])
        prob.canonical = CanonicalField.from_actions(prob.actions, ks[0])
    if "expect_geodesic" in data:
        prob.expect_geodesic = {int(k): bool(v) for k, v in data["expect_geodesic"].items()}
    return prob


def load_problem(ref):
    """Catalog name or path to a JSON problem file."""
    if ref in BUILDERS:
        return load_catalog(ref)
    with open(ref, encoding="utf-8") as fh:
        return parse_problem(fh.read(), ref)


def describe():
    lines = ["Catalog problems:"]
    for name in BUILDERS:
        p = load_catalog(name)
        lines.append(f"  {name:<14} n={p.n} nu={p.nu} k={','.join(map(str, p.ks))}  {p.description}")
    lines += [
        "",
        "User problems: pass a JSON file path to --problem. Fields: name, n, nu, k (int or list),",
        "domain ([lo, hi] per t and x coordinate), optional density, seed, lagrangian (catalog key or",
        "{\"terms\": [{\"coef\": c, \"powers\": {\"q0_1\": 2, \"x0\": 1}}]}), slope_field (n rows of nu",
        "polynomials in t*, x*), action_functions (n polynomials in t*, x*), expect_geodesic ({k: bool}).",
    ]
    return "\n".join(lines)
