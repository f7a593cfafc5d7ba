import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weyltwist import jets as J
from weyltwist import submersion as SM
from weyltwist import weyl as W
from weyltwist import zoo
from weyltwist.errors import DimensionMismatch, NotHWC, RankDeficient

pt3 = st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3).map(np.array)
quad = st.tuples(*[st.floats(-0.4, 0.4)] * 5)


def proj(n):
    return lambda X: J.jarray([X[i] for i in range(n)])


def scen(source, target, phi, k=None):
    return SM.SubmersionScenario(source, target, phi, k)


FLAT32 = scen(W.WeylStructure.flat(3), W.WeylStructure.flat(2), proj(2))


def test_flat_projection_is_riemannian_harmonic():
    c = SM.context(FLAT32, [0.1, 0.2, 0.3])
    assert c.Lambda == pytest.approx(1.0) and c.hwc_residual == 0
    assert SM.harmonic_morphism_residual(FLAT32, [0.1, 0.2, 0.3]) == (0.0, 0.0)


def test_anisotropic_linear_map_not_conformal():
    S = scen(W.WeylStructure.flat(3), W.WeylStructure.flat(2),
             lambda X: J.jarray([X[0], X[1] * 2.0]))
    # A = diag(1, 4), Lambda = 5/2, A - Lambda I = diag(-3/2, 3/2)
    assert SM.hwc_residual(S, [0.0, 0.0, 0.0]) == pytest.approx(math.sqrt(4.5))
    with pytest.raises(NotHWC):
        SM.fundamental_equation_residual(S, [0.0, 0.0, 0.0])


def test_holomorphic_square_dilation_and_critical_point():
    S = scen(W.WeylStructure.flat(3), W.WeylStructure.flat(2),
             lambda X: J.jarray([X[0] * X[0] - X[1] * X[1], X[0] * X[1] * 2.0]))
    c = SM.context(S, [0.3, 0.4, 0.0])
    assert c.Lambda == pytest.approx(4 * 0.25) and c.hwc_residual < 1e-14
    assert c.tension_norm < 1e-14
    with pytest.raises(RankDeficient):
        SM.hwc_residual(S, [0.0, 0.0, 0.5])


def conformal_target_4to3():
    """Projection of flat R^4 to (R^3, e^{2z} delta): conformal, tension -d/dz."""
    N = W.WeylStructure.from_expressions([["exp(2*z)", "0", "0"], ["0", "exp(2*z)", "0"],
                                          ["0", "0", "exp(2*z)"]])
    return scen(W.WeylStructure.flat(4), N, proj(3))


def test_tension_of_conformal_target_by_hand():
    S = conformal_target_4to3()
    p = np.array([0.1, -0.2, 0.3, 0.4])
    assert np.allclose(SM.tension_field(S, p), [0, 0, -1.0], atol=1e-13)
    assert SM.context(S, p).tension_norm == pytest.approx(math.exp(0.3))
    assert SM.hwc_residual(S, p) < 1e-13


def test_split_is_orthonormal_and_horizontal_spans_lifts():
    s = zoo.gibbons_hawking()
    p = np.array([0.2, 0.1, -0.3, 0.5])
    sp = SM.split_at_point(s.submersion, p)
    g = SM.context(s.submersion, p).gv
    B = np.column_stack([sp.vertical, sp.horizontal])
    assert np.allclose(B.T @ g @ B, np.eye(4), atol=1e-12)
    dphi = SM.context(s.submersion, p).dphi.val
    assert np.allclose(dphi @ sp.vertical, 0, atol=1e-12)
    assert sp.Lambda == pytest.approx(1 / 1.2)


@given(pt3)
def test_gibbons_hawking_integrability_is_minus_dlogV(q):
    s = zoo.gibbons_hawking()
    p = np.array([abs(q[0]) * 0.5, q[1], q[2], 0.3])
    _, star = SM.integrability_form(s.submersion, p)
    assert np.allclose(star, [-1 / (1 + p[0]), 0, 0, 0], atol=1e-12)


def test_heisenberg_star_integrability_is_minus_one():
    s = zoo.heisenberg3()
    for p in s.sample(5, 1):
        assert SM.integrability_form(s.submersion, p)[1] == pytest.approx(-1.0, abs=1e-12)


def test_integrability_form_needs_codimension_one():
    with pytest.raises(DimensionMismatch):
        SM.integrability_form(zoo.flat_projection(4, 2).submersion, np.zeros(4))


def test_warped_horizontal_mean_curvature():
    s = zoo.warped_product()
    B, tr = SM.second_fund_H(s.submersion, [0.1, 0.2, 0.3])
    assert np.allclose(tr, [0, 0, -2.0], atol=1e-12)
    assert np.allclose(B, np.swapaxes(B, 0, 1))


SCENARIOS = [zoo.gibbons_hawking, zoo.heisenberg3, zoo.warped_product, zoo.holomorphic4d,
             lambda: zoo.holomorphic2d([0, -1, 0, 1])]


def _rescaled(s, c):
    f = f"{c[0]}*x+{c[1]}*y^2+{c[2]}*x*y+{c[3]}*x^2+{c[4]}"
    src = W.lee_gauge_transform(s.source, f)
    return SM.SubmersionScenario(src, s.target, s.phi, s.k)


@pytest.mark.parametrize("build", SCENARIOS)
@given(c=quad)
def test_canonical_connection_makes_both_distributions_minimal(build, c):
    s = build()
    S = _rescaled(s, c)
    for p in s.sample(2, 11):
        ctx = SM.context(S, p)
        G = ctx.canonical_christoffels
        assert ctx.norm(ctx.trace_B_H(G)) < 1e-9
        assert ctx.norm(ctx.trace_B_V(G)) < 1e-9


@pytest.mark.parametrize("build", SCENARIOS + [lambda: None])
@given(c=quad)
def test_fundamental_equation_is_an_identity(build, c):
    s = build()
    if s is None:
        S0 = conformal_target_4to3()
        pts = [np.array([0.1, 0.2, -0.3, 0.4]), np.array([-0.5, 0.1, 0.6, 0.0])]
    else:
        S0 = s.submersion
        pts = s.sample(2, 5)
    S = _rescaled(S0, c)
    for p in pts:
        assert SM.fundamental_equation_residual(S, p) < 1e-9


def test_canonical_weyl_has_value_only_lee():
    s = zoo.heisenberg3()
    D = SM.canonical_weyl_of_V(s.submersion)
    p = np.array([0.1, 0.2, 0.3])
    assert np.all(np.isfinite(W.weyl_christoffels(D, p)))
    with pytest.raises(ValueError):
        W.curvature_pack(D, p)


def test_partial_connection_against_lee_perturbed_target():
    s = zoo.flat_projection(4, 3)
    N = W.WeylStructure.flat(3, lee=lambda X: J.constant(np.array([1.0, 0, 0]), X.dim))
    r = SM.partial_connection_residual_over_H(s.submersion, None, N, np.zeros(4))
    assert r == pytest.approx(1.0)
    assert SM.partial_connection_residual_over_H(s.submersion, None, None, np.zeros(4)) == 0


# -- curves and surfaces ----------------------------------------------------

def test_straight_line_and_circle_curvature():
    flat = W.WeylStructure.flat(2)
    line = lambda T: J.jarray([T[0] * 2.0 + 1.0, T[0] * -1.0])
    assert SM.curve_geodesic_residual(flat, line, 0.3) < 1e-14
    R = 2.5
    circle = lambda T: J.jarray([J.cos(T[0]) * R, J.sin(T[0]) * R])
    assert SM.curve_geodesic_residual(flat, circle, 0.7) == pytest.approx(1 / R)


def test_great_circle_on_stereographic_sphere_is_geodesic():
    S2 = W.WeylStructure.from_expressions([["4/(1+x^2+y^2)^2", "0"], ["0", "4/(1+x^2+y^2)^2"]])
    meridian = lambda T: J.jarray([T[0], T[0] * 0.5])
    assert SM.curve_geodesic_residual(S2, meridian, 0.4) < 1e-12


def test_surface_checks_plane_and_sphere():
    flat = W.WeylStructure.flat(3)
    plane = lambda T: J.jarray([T[0], T[1], 0.0])
    assert SM.surface_checks(flat, plane, [0.2, 0.3]) == (0.0, 0.0)
    R = 1.5
    sph = lambda T: J.jarray([J.sin(T[0]) * J.cos(T[1]) * R, J.sin(T[0]) * J.sin(T[1]) * R,
                              J.cos(T[0]) * R])
    umb, tr = SM.surface_checks(flat, sph, [1.0, 0.4], k=0.5)
    assert umb < 1e-12 and tr == pytest.approx(2 / R + 0.5)
