import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weyltwist import jets as J
from weyltwist import weyl as W
from weyltwist.errors import DimensionMismatch, SingularMetric

pt3 = st.lists(st.floats(-0.8, 0.8), min_size=3, max_size=3).map(np.array)
pt4 = st.lists(st.floats(-0.8, 0.8), min_size=4, max_size=4).map(np.array)
coef = st.floats(-1, 1)


def eye_exprs(d):
    return [["1" if i == j else "0" for j in range(d)] for i in range(d)]


def sphere(d):
    g = eye_exprs(d)
    s = "+".join(f"{v}^2" for v in "xyzt"[:d])
    for i in range(d):
        g[i][i] = f"4/(1+{s})^2"
    return W.WeylStructure.from_expressions(g, name=f"S{d}")


def generic3(lee=("y*z", "x^2", "x*y+z")):
    g = [["2+x*y", "0.1*z", "0"], ["0.1*z", "1+y^2", "0.2*x"], ["0", "0.2*x", "3"]]
    return W.WeylStructure.from_expressions(g, list(lee))


def test_flat_constant_lee_christoffels_by_hand():
    a = np.array([0.5, -1.0, 2.0])
    S = W.WeylStructure.flat(3, lee=lambda X: J.constant(a, X.dim))
    G = W.weyl_christoffels(S, [0.1, 0.2, 0.3])
    expected = (np.einsum("i,kj->kij", a, np.eye(3)) + np.einsum("j,ki->kij", a, np.eye(3))
                - np.einsum("ij,k->kij", np.eye(3), a))
    assert np.allclose(G, expected)


@given(pt3, coef, coef, coef)
def test_weyl_connection_is_compatible(p, a, b, c):
    S = generic3((f"{a}*y*z", f"{b}*x^2", f"{c}*x*y+z"))
    assert W.metric_compatibility_residual(S, p) < 1e-12


@given(pt3)
def test_first_bianchi_identity(p):
    assert W.bianchi_residual(W.curvature_pack(generic3(), p)) < 1e-12


@pytest.mark.parametrize("d", [3, 4])
def test_round_sphere_scalar_curvature(d):
    pack = W.curvature_pack(sphere(d), np.full(d, 0.2))
    assert pack.s == pytest.approx(d * (d - 1), abs=1e-10)
    assert np.max(np.abs(pack.ric_sym0)) < 1e-10


def test_skew_ricci_is_minus_n_times_faraday():
    for d in (3, 4):
        lee = ["y*z", "x^2", "x*y+z", "t*x"][:d]
        g = eye_exprs(d)
        g[0][0] = "2+x*y"
        S = W.WeylStructure.from_expressions(g, lee)
        pack = W.curvature_pack(S, np.array([0.3, 0.2, -0.4, 0.5][:d]))
        assert np.allclose(pack.ric - pack.ric.T, -d * pack.F_D, atol=1e-12)


quadratic = st.tuples(*[st.floats(-0.5, 0.5)] * 6)


def _quadratic_expr(c):
    return f"{c[0]}*x+{c[1]}*y+{c[2]}*z+{c[3]}*x*y+{c[4]}*z^2+{c[5]}*x*z"


@given(quadratic, pt3)
def test_christoffels_gauge_invariant(c, p):
    S = generic3()
    T = W.lee_gauge_transform(S, _quadratic_expr(c))
    assert np.max(np.abs(W.weyl_christoffels(S, p) - W.weyl_christoffels(T, p))) < 1e-10


@given(quadratic, pt3)
def test_metric_and_lee_transform_rules(c, p):
    S = generic3()
    f = _quadratic_expr(c)
    T = W.lee_gauge_transform(S, f)
    X = J.coordinates(p)
    from weyltwist.exprconf import compile_field
    fj = compile_field(f, 3)(X)
    assert np.allclose(W.metric_jet(T, X).val, math.exp(2 * fj.val) * W.metric_jet(S, X).val)
    assert np.allclose(W.lee_jet(T, X).val, W.lee_jet(S, X).val - fj.grad)


def test_weighted_scalar_transform():
    k = W.WeightedScalar(lambda X: X[0] + 2.0, -1)
    kt = k.gauge_transform("y")
    X = J.coordinates([1.0, 0.5])
    assert kt(X).val == pytest.approx(3.0 * math.exp(-0.5))


def test_einstein_weyl_flat_sphere_and_nil():
    assert W.einstein_weyl_residual(W.WeylStructure.flat(3), [0.1, 0.2, 0.3]) == 0
    assert W.einstein_weyl_residual(sphere(3), [0.1, 0.2, 0.3]) < 1e-10
    nil = W.WeylStructure.from_expressions([["1", "0", "0"], ["0", "1+x^2", "-x"], ["0", "-x", "1"]])
    # orthonormal-frame Ricci eigenvalues of Nil are (-1/2, -1/2, 1/2)
    r = W.einstein_weyl_residual(nil, [0.3, 0.1, 0.2])
    ev = np.array([-0.5, -0.5, 0.5])
    assert r == pytest.approx(np.linalg.norm(ev - ev.mean()), abs=1e-10)


def test_einstein_weyl_needs_three_dimensions():
    with pytest.raises(DimensionMismatch):
        W.einstein_weyl_residual(W.WeylStructure.flat(4), np.zeros(4))


@pytest.mark.parametrize("c0", [0.0, 0.3, -1.7, 2.5])
def test_special_einstein_weyl_scalar_clause(c0):
    scalar, form = W.ew_special_residual(W.WeylStructure.flat(3), c0, [0.2, -0.1, 0.4])
    assert abs(scalar - 1.5 * c0 ** 2) <= 1e-12
    assert form <= 1e-12


def test_special_einstein_weyl_round_sphere():
    # unit sphere: s = 6 = 3/2 k^2 with k = 2, and alpha = 0, dk = 0
    scalar, form = W.ew_special_residual(sphere(3), 2.0, [0.1, 0.3, -0.2])
    assert scalar < 1e-10 and form < 1e-12


def gh():
    th = ["0", "0", "y", "1"]
    g = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i, 4):
            v = f"({th[i]})*({th[j]})/(1+x)"
            g[i][j] = g[j][i] = f"1+x+{v}" if i == j and i < 3 else v
    return W.WeylStructure.from_expressions(g)


def s2_times_r2():
    return W.WeylStructure.from_expressions(
        [["4/(1+x^2+y^2)^2", "0", "0", "0"], ["0", "4/(1+x^2+y^2)^2", "0", "0"],
         ["0", "0", "1", "0"], ["0", "0", "0", "1"]])


@given(pt4)
def test_gibbons_hawking_is_anti_self_dual(p):
    p = p.copy()
    p[0] = abs(p[0])
    assert W.asd_residual(gh(), p) < 1e-9


def test_conformally_flat_sphere_has_zero_weyl_tensor():
    S = sphere(4)
    X = J.coordinates(np.full(4, 0.3))
    g = W.metric_jet(S, X)
    lc, _ = W.levi_civita_jet(g)
    Wt = W.weyl_tensor(g.val, W.curvature_from_christoffels(lc))
    assert np.max(np.abs(Wt)) < 1e-10


def test_kaehler_product_is_not_anti_self_dual_in_either_orientation():
    # |W+|^2 = s^2/24 on a Kaehler surface; S^2 x R^2 is Kaehler for both orientations
    S = s2_times_r2()
    for o in (1, -1):
        assert W.asd_residual(S, [0.1, 0.2, 0.0, 0.0], orientation=o) > 0.1


@given(quadratic)
def test_asd_residual_scales_under_rescaling(c):
    f = _quadratic_expr(c).replace("z", "t")
    S = s2_times_r2()
    T = W.lee_gauge_transform(S, f)
    p = np.array([0.1, 0.2, -0.3, 0.4])
    from weyltwist.exprconf import compile_field
    fv = compile_field(f, 4)(J.coordinates(p)).val
    assert W.asd_residual(T, p) == pytest.approx(math.exp(-2 * fv) * W.asd_residual(S, p), rel=1e-8)


def test_self_dual_projector_is_idempotent():
    P = W.self_dual_projector()
    assert np.allclose(P @ P, P) and np.trace(P) == pytest.approx(3)


def test_cross_product_orientation():
    C = W.cross_product(np.eye(3))
    assert np.allclose(C[:, 0, 1], [0, 0, 1])
    assert np.allclose(W.cross_product(np.eye(3), -1)[:, 0, 1], [0, 0, -1])


def test_associated_connection_adds_half_k_cross():
    S = W.WeylStructure.flat(3)
    G = W.assoc_connection(S, 2.0)([0.0, 0.0, 0.0])
    assert np.allclose(G, W.cross_product(np.eye(3)))


def test_singular_metric_detected():
    S = W.WeylStructure.from_expressions([["x", "0"], ["0", "1"]])
    with pytest.raises(SingularMetric):
        W.weyl_christoffels(S, [0.0, 0.3])
    with pytest.raises(SingularMetric):
        W.weyl_christoffels(S, [-1.0, 0.3])


def test_bad_orientation_rejected():
    with pytest.raises(ValueError):
        W.WeylStructure.flat(3, orientation=2)
