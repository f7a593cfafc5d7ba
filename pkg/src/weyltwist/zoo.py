"""Canonical scenarios with known verdicts.

Every builder writes a scenario document (the same JSON shape accepted by
:func:`weyltwist.exprconf.load_scenario`) and loads it, so a zoo scenario and
its serialized form are interchangeable.  Expected verdicts carry a
provenance tag: ``[PAPER]``, ``[TRIVIAL]`` or ``[DERIVED: oracle = ...]``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .errors import NotHarmonic, NotMonopole, SingularMetric
from .exprconf import compile_field, parse, to_string, variables
from .submersion import SubmersionScenario
from .weyl import WeylStructure, metric_jet

__all__ = [
    "Expectation", "Scenario", "probe", "to_json", "flat_projection", "warped_product",
    "heisenberg3", "heisenberg4", "holomorphic2d", "holomorphic4d", "complex_polynomial",
    "gibbons_hawking", "control_nonharmonic_gh", "control_wrong_higgs",
    "control_perturbed_target", "lee_difference_pair", "SUITES", "suite",
]

_TAGS = ("[PAPER", "[TRIVIAL", "[DERIVED")


@dataclass(frozen=True)
class Expectation:
    passes: bool
    provenance: str

    def __post_init__(self):
        if not self.provenance.startswith(_TAGS):
            raise ValueError(f"expected verdict lacks a provenance tag: {self.provenance!r}")


def P(tag):
    return Expectation(True, tag)


def F(tag):
    return Expectation(False, tag)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A runnable scenario: chart, source/target Weyl spaces, map and extras."""

    name: str
    chart: J.Chart
    source: WeylStructure
    target: WeylStructure
    phi: Callable
    k: Callable | None = None
    gauge: object = None
    tol: float = 1e-9
    checks: tuple | None = None
    expected: dict = field(default_factory=dict)
    doc: dict | None = None
    description: str = ""

    @property
    def m(self):
        return self.source.dim

    @property
    def n(self):
        return self.target.dim

    @property
    def submersion(self) -> SubmersionScenario:
        sub = self.__dict__.get("_submersion")
        if sub is None:
            sub = SubmersionScenario(self.source, self.target, self.phi, self.k, self.name)
            object.__setattr__(self, "_submersion", sub)
        return sub

    def with_expectations(self, expected: dict, **changes):
        return dataclasses.replace(self, expected=dict(expected),
                                   checks=tuple(expected), **changes)

    def sample(self, n, seed):
        return self.chart.sample(n, seed)


def _probe_axis(lo, hi):
    return (lo, 0.5 * (lo + hi), hi)


def probe(scenario: Scenario) -> None:
    """Validate symmetry and positivity of both metrics on a 3^m grid."""
    chart = scenario.chart
    axes = [_probe_axis(a, b) for a, b in chart.box]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, chart.dim)
    for x in grid:
        if not chart.admits(x):
            continue
        X = J.coordinates(x)
        _check_spd(metric_jet(scenario.source, X).val, "source", x)
        Y = scenario.phi(X).val
        _check_spd(metric_jet(scenario.target, J.coordinates(Y)).val, "target", x)


def _check_spd(g, which, x):
    scale = max(1.0, float(np.max(np.abs(g))))
    if not np.all(np.isfinite(g)) or np.max(np.abs(g - g.T)) > 1e-12 * scale:
        raise SingularMetric(f"{which} metric is not symmetric at {list(x)}")
    if np.linalg.eigvalsh(g)[0] <= 1e-10 * scale:
        raise SingularMetric(f"{which} metric is not positive-definite at {list(x)}")


def to_json(scenario: Scenario) -> dict:
    if scenario.doc is None:
        raise ValueError("scenario was not built from a document")
    return dict(scenario.doc)


def _from_doc(doc, expected, description=""):
    from .exprconf import scenario_from_json

    s = scenario_from_json(doc)
    return s.with_expectations(expected, description=description)


def _eye(n):
    return [["1" if i == j else "0" for j in range(n)] for i in range(n)]


_NAMES = ("x", "y", "z", "t")

# -- flat and product scenarios ----------------------------------------------

_ALWAYS = {
    "weyl_compatibility": P("[TRIVIAL]"),
    "bianchi": P("[TRIVIAL]"),
}


def flat_projection(m: int, n: int) -> Scenario:
    doc = {
        "name": f"flat{m}to{n}",
        "dims": [m, n],
        "metric": _eye(m),
        "map": list(_NAMES[:n]),
    }
    exp = dict(_ALWAYS)
    exp.update({"hwc": P("[TRIVIAL]"), "tension": P("[TRIVIAL]"),
                "harmonic_morphism": P("[TRIVIAL]"),
                "horizontal_minimality": P("[TRIVIAL]"),
                "canonical_traces": P("[TRIVIAL]"),
                "fundamental_equation": P("[TRIVIAL]")})
    if 3 in (m, n):
        exp["einstein_weyl"] = P("[TRIVIAL]")
    if m == 4:
        exp["asd_source"] = P("[TRIVIAL]")
    if m - n == 1:
        exp["horizontal_integrability"] = P("[TRIVIAL]")
    if (m, n) == (3, 2):
        exp.update({"check_3to2_frame": P("[TRIVIAL]"), "check_3to2_invariant": P("[TRIVIAL]")})
    if (m, n) == (4, 2):
        exp.update({"check_4to2_frame": P("[TRIVIAL]"), "check_4to2_invariant": P("[TRIVIAL]")})
    if (m, n) == (4, 3):
        doc["gauge"] = {"a": "1", "gamma": ["0", "0", "0"]}
        exp.update({"check_4to3_es": P("[TRIVIAL]"), "check_4to3_christoffel": P("[TRIVIAL]"),
                    "check_4to3_ahs": P("[TRIVIAL]"), "monopole": P("[TRIVIAL]"),
                    "asd_connection": P("[TRIVIAL]"),
                    "curvature_decomposition": P("[TRIVIAL]")})
    return _from_doc(doc, exp, "Euclidean projection onto the first coordinates")


def warped_product(m: int = 3) -> Scenario:
    """dz² (+ dt²) + e^{2z}(dx² + dy²) projected to (x, y): umbilic, non-minimal H."""
    if m not in (3, 4):
        raise ValueError("warped_product supports m = 3 or 4")
    metric = _eye(m)
    metric[0][0] = metric[1][1] = "exp(2*z)"
    doc = {"name": f"warped{m}to2", "dims": [m, 2], "metric": metric, "map": ["x", "y"],
           "box": [[-1, 1]] * m}
    oracle = "[DERIVED: oracle = trace B^H = -2 d/dz from the warping function]"
    exp = dict(_ALWAYS)
    exp.update({"hwc": P("[TRIVIAL]"), "tension": P("[DERIVED: oracle = geodesic fibres, n = 2]"),
                "horizontal_minimality": F(oracle), "canonical_traces": P("[TRIVIAL]"),
                "fundamental_equation": P("[TRIVIAL]")})
    if m == 3:
        exp.update({"horizontal_integrability": P("[TRIVIAL]"),
                    "check_3to2_frame": F(oracle), "check_3to2_invariant": F(oracle)})
    else:
        exp.update({"check_4to2_frame": F(oracle), "check_4to2_invariant": F(oracle)})
    return _from_doc(doc, exp, "warped product with totally umbilic, non-minimal leaves")


_HEIS = [["1", "0", "0"], ["0", "1+x^2", "-x"], ["0", "-x", "1"]]


def heisenberg3(k: float | None = -1.0) -> Scenario:
    """Nil metric dx² + dy² + (dz − x dy)² over (x, y); *I = −1 in this orientation."""
    doc = {"name": "heisenberg3" + ("" if k is None else f"_k{k:g}"), "dims": [3, 2],
           "metric": _HEIS, "map": ["x", "y"]}
    if k is not None:
        doc["k"] = repr(float(k))
    matched = k is not None and abs(float(k) + 1.0) < 1e-12
    oracle = "[DERIVED: oracle = integrability_form (*I = -1)]"
    exp = dict(_ALWAYS)
    exp.update({
        "hwc": P("[TRIVIAL]"), "tension": P("[DERIVED: oracle = Killing unit fibres]"),
        "harmonic_morphism": P("[DERIVED: oracle = Riemannian submersion, geodesic fibres]"),
        "horizontal_integrability": F(oracle),
        "horizontal_minimality": P("[DERIVED: oracle = left-invariant frame computation]"),
        "canonical_traces": P("[TRIVIAL]"), "fundamental_equation": P("[TRIVIAL]"),
        "einstein_weyl": F("[DERIVED: oracle = Nil Ricci eigenvalues (-1/2, -1/2, 1/2)]"),
        "check_3to2_frame": Expectation(matched, oracle),
        "check_3to2_invariant": Expectation(matched, oracle),
    })
    return _from_doc(doc, exp, "Heisenberg group fibred over the plane")


def heisenberg4() -> Scenario:
    metric = [row + ["0"] for row in _HEIS] + [["0", "0", "0", "1"]]
    doc = {"name": "heisenberg4", "dims": [4, 2], "metric": metric, "map": ["x", "y"]}
    oracle = "[DERIVED: oracle = trace B^H = 0 while *_H I != 0]"
    exp = dict(_ALWAYS)
    exp.update({"hwc": P("[TRIVIAL]"), "tension": P("[DERIVED: oracle = Killing unit fibres]"),
                "canonical_traces": P("[TRIVIAL]"), "fundamental_equation": P("[TRIVIAL]"),
                "check_4to2_frame": F(oracle), "check_4to2_invariant": F(oracle)})
    return _from_doc(doc, exp, "Heisenberg group times a line, fibred over the plane")


# -- holomorphic maps ------------------------------------------------------

def complex_polynomial(coeffs: Sequence[complex], u="x", v="y") -> tuple[str, str]:
    """Real and imaginary parts of sum c_k w^k with w = u + i v, as expressions."""
    re_terms, im_terms = [], []
    for deg, c in enumerate(coeffs):
        c = complex(c)
        if c == 0:
            continue
        for j in range(deg + 1):
            # binomial term C(deg, j) u^(deg-j) (i v)^j
            coef = math.comb(deg, j) * (1j ** j) * c
            mono = "*".join([f"{u}^{deg - j}"] * (deg > j) + [f"{v}^{j}"] * (j > 0)) or "1"
            if abs(coef.real) > 0:
                re_terms.append(f"{coef.real!r}*{mono}")
            if abs(coef.imag) > 0:
                im_terms.append(f"{coef.imag!r}*{mono}")
    tidy = lambda terms: to_string(parse("+".join(terms) if terms else "0"))
    return tidy(re_terms), tidy(im_terms)


def _cauchy_riemann(u, v, pairs, dim, points):
    fu, fv = compile_field(u, dim), compile_field(v, dim)
    worst = 0.0
    for p in points:
        X = J.coordinates(p)
        gu, gv = fu(X).grad, fv(X).grad
        for a, b in pairs:
            worst = max(worst, abs(gu[a] - gv[b]), abs(gu[b] + gv[a]))
    return worst


def _grid(box, n=4):
    axes = [np.linspace(a, b, n) for a, b in box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(box))


def _require_holomorphic(u, v, pairs, dim, box):
    res = _cauchy_riemann(u, v, pairs, dim, _grid(box))
    if res >= 1e-10:
        raise ValueError(f"map is not holomorphic (Cauchy-Riemann residual {res:.3g})")


def holomorphic2d(u, v=None, k: float = 0.0, box=None, name="holomorphic2d") -> Scenario:
    """Flat R³ → R², (x, y, z) ↦ f(x + iy), constant along z.

    ``u`` is either the real part (with ``v`` the imaginary part) or a list of
    complex polynomial coefficients, lowest degree first.
    """
    roots = []
    if v is None:
        coeffs = [complex(c) for c in u]
        deriv = [c * i for i, c in enumerate(coeffs)][1:]
        if len(deriv) > 1:
            roots = [[float(r.real), float(r.imag)] for r in np.roots(deriv[::-1])]
        u, v = complex_polynomial(coeffs)
    box = box or [[-1, 1]] * 3
    _require_holomorphic(u, v, [(0, 1)], 3, box)
    doc = {"name": name if k == 0 else f"{name}_k{k:g}", "dims": [3, 2], "metric": _eye(3),
           "map": [u, v], "box": box, "k": repr(float(k))}
    if roots:
        doc["excluded_radius"] = 0.15
        doc["singular_points"] = roots
    matched = abs(k) < 1e-15
    oracle = "[TRIVIAL: holomorphy; flat horizontal planes, *I = 0]"
    exp = dict(_ALWAYS)
    exp.update({"hwc": P(oracle), "tension": P(oracle), "harmonic_morphism": P(oracle),
                "horizontal_integrability": P(oracle), "horizontal_minimality": P(oracle),
                "canonical_traces": P("[TRIVIAL]"), "fundamental_equation": P("[TRIVIAL]"),
                "einstein_weyl": P("[TRIVIAL]"),
                "check_3to2_frame": Expectation(matched, oracle),
                "check_3to2_invariant": Expectation(matched, oracle)})
    return _from_doc(doc, exp, "holomorphic function of x + iy, extended trivially")


def holomorphic4d(u="x*z-y*t", v="x*t+y*z", orientation: int = 1, box=None,
                  name="holomorphic4d") -> Scenario:
    """Flat C² → C with complex coordinates (x + iy, z + it); default (w1, w2) ↦ w1 w2.

    The fibres are complex curves, so the map is twistorial exactly for the
    complex orientation (``orientation=1``).
    """
    box = box or [[-1, 1]] * 4
    _require_holomorphic(u, v, [(0, 1), (2, 3)], 4, box)
    doc = {"name": name + ("" if orientation == 1 else "_reversed"), "dims": [4, 2],
           "metric": _eye(4), "map": [u, v], "box": box, "excluded_radius": 0.3,
           "orientation": [orientation, 1]}
    oracle = "[DERIVED: oracle = complex fibres are twistorial for the complex orientation]"
    exp = dict(_ALWAYS)
    exp.update({"hwc": P("[TRIVIAL: holomorphy]"), "tension": P("[TRIVIAL: holomorphy]"),
                "harmonic_morphism": P("[TRIVIAL: holomorphy]"),
                "canonical_traces": P("[TRIVIAL]"), "fundamental_equation": P("[TRIVIAL]"),
                "asd_source": P("[TRIVIAL]"),
                "check_4to2_frame": Expectation(orientation == 1, oracle),
                "check_4to2_invariant": Expectation(orientation == 1, oracle)})
    return _from_doc(doc, exp, "holomorphic map from C^2 to C")


# -- Gibbons-Hawking ---------------------------------------------------------

def _gh_metric_exprs(V, omega):
    th = [parse(o) for o in omega] + [parse("1")]
    Vt = parse(V)
    rows = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i, 4):
            prod = _simplified_product(th[i], th[j])
            entry = None if prod is None else _div(prod, Vt)
            if i == j and i < 3:
                entry = Vt if entry is None else parse(f"{_s(Vt)}+{_s(entry)}")
            rows[i][j] = rows[j][i] = "0" if entry is None else _s(entry)
    return rows


def _s(tree):
    return to_string(tree)


def _is_zero(tree):
    return not variables(tree) and compile_field(tree, 4)(J.coordinates(np.zeros(4))).val == 0


def _simplified_product(a, b):
    if _is_zero(a) or _is_zero(b):
        return None
    return parse(f"({_s(a)})*({_s(b)})")


def _div(a, b):
    return parse(f"({_s(a)})/({_s(b)})")


def _laplacian_and_curl_defect(V, omega, box):
    fV = compile_field(V, 3)
    fo = [compile_field(o, 3) for o in omega]
    lap = curl = 0.0
    for p in _grid(box, 3):
        X = J.coordinates(p)
        Vj = fV(X)
        lap = max(lap, abs(float(np.trace(Vj.hess))))
        grad_o = np.array([f(X).grad for f in fo])  # [j, i] = ∂_i ω_j
        d_omega = grad_o.T - grad_o
        star_dV = J.hodge_star(np.eye(3), Vj.grad)
        curl = max(curl, float(np.max(np.abs(d_omega - star_dV))))
    return lap, curl


def gibbons_hawking(V="1+x", omega=("0", "0", "y"), box=None, gauge=None,
                    target_lee=None, verify=True, name=None) -> Scenario:
    """g = V(dx² + dy² + dz²) + V⁻¹(dt + ω)² projected to (x, y, z).

    ``omega`` is supplied in closed form and checked against dω = *dV; the
    default Higgs pair is (a, Γ) = (V − 1, ω).
    """
    omega = [str(o) for o in omega]
    box = box or [[-0.5, 1.0], [-1, 1], [-1, 1], [-1, 1]]
    if verify:
        lap, curl = _laplacian_and_curl_defect(V, omega, [b for b in box[:3]])
        if lap >= 1e-9:
            raise NotHarmonic(f"V is not harmonic on the box (|Laplacian| up to {lap:.3g})")
        if curl >= 1e-9:
            raise NotMonopole(f"d(omega) differs from *dV by {curl:.3g}")
    doc = {
        "name": name or "gibbons_hawking",
        "dims": [4, 3],
        "metric": _gh_metric_exprs(V, omega),
        "map": ["x", "y", "z"],
        "box": box,
        "k": "0",
        "gauge": gauge or {"a": f"{V}-1", "gamma": omega},
        "tol": 1e-7,
    }
    if target_lee is not None:
        doc["target"] = {"lee": list(target_lee)}
    constant_V = not variables(parse(V))
    published = "[PAPER: Gibbons-Hawking metrics give twistorial harmonic morphisms]"
    asd = "[DERIVED: oracle = closed-form cancellation for a = V - 1]"
    exp = dict(_ALWAYS)
    exp.update({
        "hwc": P(published), "tension": P(published), "harmonic_morphism": P(published),
        "asd_source": P("[DERIVED: oracle = hyperkaehler metric, anti-self-dual]"),
        "einstein_weyl": P("[TRIVIAL: flat target]"),
        "horizontal_integrability": Expectation(
            constant_V, "[DERIVED: oracle = d(dt + omega) restricted to H is *dV]"),
        "canonical_traces": P("[TRIVIAL]"), "fundamental_equation": P("[TRIVIAL]"),
        "check_4to3_es": P("[DERIVED: oracle = Lee-form clauses in the submersion gauge]"),
        "check_4to3_christoffel": P(published), "check_4to3_ahs": P(published),
        "monopole": P("[DERIVED: oracle = d omega = *dV]"), "asd_connection": P(asd),
        "curvature_decomposition": P("[DERIVED: oracle = unconditional identity]"),
    })
    return _from_doc(doc, exp, "Gibbons-Hawking metric over flat R^3")


# -- perturbed controls ----------------------------------------------------------

def _retag(s: Scenario, overrides: dict, name: str, description: str) -> Scenario:
    exp = {k: s.expected[k] for k in ("hwc", "check_4to3_ahs", "monopole", "asd_connection",
                                      "curvature_decomposition")}
    exp.update(overrides)
    doc = dict(s.doc, name=name)
    return dataclasses.replace(s, name=name, doc=doc, expected=exp, checks=tuple(exp),
                               description=description)


def control_nonharmonic_gh() -> Scenario:
    """V = 1 + x² with ω = y dz and the flat monopole (a, Γ) = (1 + x, y dz)."""
    s = gibbons_hawking("1+x^2", ["0", "0", "y"], gauge={"a": "1+x", "gamma": ["0", "0", "y"]},
                        box=[[-1, 1]] * 4, verify=False)
    oracle = "[DERIVED: oracle = two-of-three with a genuine monopole]"
    return _retag(s, {"check_4to3_ahs": F("[DERIVED: oracle = Laplacian of V is 2]"),
                      "asd_connection": F(oracle), "monopole": P("[TRIVIAL]")},
                  "control_nonharmonic_gh", "Gibbons-Hawking ansatz with non-harmonic V")


def control_wrong_higgs() -> Scenario:
    s = gibbons_hawking(gauge={"a": "2*x", "gamma": ["0", "0", "y"]})
    oracle = "[DERIVED: oracle = da = 2 dx while d(Gamma) = dy^dz]"
    return _retag(s, {"monopole": F(oracle), "asd_connection": F(oracle)},
                  "control_wrong_higgs", "Gibbons-Hawking with Higgs field 2(V - 1)")


def control_perturbed_target() -> Scenario:
    s = gibbons_hawking(target_lee=["1", "0", "0"])
    oracle = "[DERIVED: oracle = target Lee form dx breaks the partial-connection match]"
    return _retag(s, {"check_4to3_ahs": F(oracle),
                      "monopole": F("[DERIVED: oracle = extra term a dx in the Bogomolny equation]")},
                  "control_perturbed_target", "Gibbons-Hawking over R^3 with Lee form dx")


def lee_difference_pair(beta_dx: bool, curved: bool):
    """Abelian proxy of the induced pair for two target Weyl connections D′, D″.

    D′ is the flat Levi-Civita connection and D″ − D′ has Lee form β ∈ {0, dx};
    the Higgs field is a = |β| and the base connection is 2D″ − D′ (Lee form
    2β); Γ is 0 or y dz.  Returns (GaugePair, WeylStructure).
    """
    from .gauge import GaugePair

    beta = ["1", "0", "0"] if beta_dx else ["0", "0", "0"]
    pair = GaugePair.from_expressions("1" if beta_dx else "0",
                                      ["0", "0", "y"] if curved else ["0", "0", "0"])
    N = WeylStructure.from_expressions(_eye(3), [f"2*{b}" for b in beta])
    return pair, N


SUITES = {
    "flat": (lambda: flat_projection(3, 2), lambda: flat_projection(4, 2),
             lambda: flat_projection(4, 3)),
    "gh": (gibbons_hawking,),
    "heisenberg": (heisenberg3, lambda: heisenberg3(0.0), heisenberg4),
    "surfaces": (lambda: holomorphic2d([0, -1, 0, 1]), lambda: holomorphic2d([0, -1, 0, 1], k=1.0),
                 warped_product, lambda: warped_product(4), holomorphic4d,
                 lambda: holomorphic4d(orientation=-1)),
    "controls": (control_nonharmonic_gh, control_wrong_higgs, control_perturbed_target),
}


def suite(name: str) -> list[Scenario]:
    if name == "all":
        return [b() for key in SUITES for b in SUITES[key]]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return [b() for b in SUITES[name]]
