import numpy as np
import pytest

from weyltwist import jets as J
from weyltwist import runner, zoo
from weyltwist.errors import NotHarmonic, NotMonopole, SingularMetric

BUILDERS = [(f"{key}[{i}]", b) for key in zoo.SUITES for i, b in enumerate(zoo.SUITES[key])]


@pytest.mark.parametrize("label,build", BUILDERS, ids=[b[0] for b in BUILDERS])
def test_scenario_reproduces_expected_verdicts(label, build):
    s = build()
    assert s.expected, "every zoo scenario carries expectations"
    for entry in runner.evaluate_scenario(s, s.sample(12, 0)):
        if entry["expected"] is not None:
            assert entry["pass"] == (entry["expected"] == "pass"), entry


@pytest.mark.parametrize("label,build", BUILDERS, ids=[b[0] for b in BUILDERS])
def test_expectations_carry_provenance(label, build):
    for exp in build().expected.values():
        assert exp.provenance.startswith(("[PAPER", "[TRIVIAL", "[DERIVED"))


def test_untagged_expectation_rejected():
    with pytest.raises(ValueError):
        zoo.Expectation(True, "because")


def test_scenario_names_unique():
    names = [s.name for s in zoo.suite("all")]
    assert len(names) == len(set(names))


def test_unknown_suite():
    with pytest.raises(KeyError):
        zoo.suite("nope")


def test_non_harmonic_potential_rejected():
    with pytest.raises(NotHarmonic):
        zoo.gibbons_hawking("1+x^2", ["0", "0", "0"])


def test_wrong_connection_form_rejected():
    with pytest.raises(NotMonopole):
        zoo.gibbons_hawking("1+x", ["0", "0", "0"])


def test_constant_potential_is_flat():
    s = zoo.gibbons_hawking("1", ["0", "0", "0"])
    for entry in runner.evaluate_scenario(s, s.sample(4, 1)):
        assert entry["pass"], entry


def test_cauchy_riemann_rejection():
    with pytest.raises(ValueError):
        zoo.holomorphic2d("x^2+y^2", "x*y")
    with pytest.raises(ValueError):
        zoo.holomorphic4d("x*z+y*t", "x*t-y*z")


def test_complex_polynomial_expressions():
    u, v = zoo.complex_polynomial([1, 0, 2])  # 1 + 2 w^2
    s = zoo.holomorphic2d(u, v)
    y = s.phi(J.coordinates([0.3, 0.4, 0.0])).val
    w = 0.3 + 0.4j
    assert np.allclose(y, [(1 + 2 * w * w).real, (1 + 2 * w * w).imag])


def test_branch_points_are_excluded():
    s = zoo.holomorphic2d([0, -1, 0, 1])  # w^3 - w, critical where 3w^2 = 1
    pts = s.sample(200, 3)
    crit = 1 / np.sqrt(3)
    d = np.minimum(np.hypot(pts[:, 0] - crit, pts[:, 1]), np.hypot(pts[:, 0] + crit, pts[:, 1]))
    assert d.min() >= 0.15


def test_probe_rejects_indefinite_metric():
    from weyltwist.exprconf import scenario_from_json

    doc = {"name": "bad", "dims": [3, 2], "metric": [["x", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
           "map": ["x", "y"], "box": [[-1, 1]] * 3}
    with pytest.raises(SingularMetric):
        zoo.probe(scenario_from_json(doc))


def test_json_round_trip_reproduces_scenario():
    from weyltwist.exprconf import scenario_from_json

    s = zoo.gibbons_hawking()
    t = scenario_from_json(zoo.to_json(s))
    for p in s.sample(3, 2):
        a = runner._point_residuals(s.with_expectations({}), list(runner.CHECKS)[:4], p)
        b = runner._point_residuals(t, list(runner.CHECKS)[:4], p)
        assert a == b
