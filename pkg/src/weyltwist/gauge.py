"""Abelian monopoles over three-dimensional Weyl spaces and their pull-backs.

The gauge group is the real line, so a connection is a 1-form ``Γ`` and the
Higgs field ``A`` is a weight −1 scalar with gauge value ``a``.  The
pull-back of ``A`` through a horizontally conformal submersion is the
vertical 1-form ``a λ θ̂`` where ``θ̂`` is the unit vertical covector (for
the vertical-first orientation) and ``λ`` the dilation; this combination is
independent of the representative metrics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import jets as J
from .errors import DimensionMismatch
from .submersion import PointContext, context, riemannian_gauge_lee
from .twistor import check_4to3_ahs
from .weyl import WeylStructure, lee_jet, metric_jet

__all__ = [
    "GaugePair", "PulledBackConnection", "monopole_residual", "pullback_connection",
    "asd_connection_residual", "curvature_decomposition_residual", "eq41_residual", "two_of_three", "exterior_d",
    "self_dual_norm",
]


@dataclass(frozen=True)
class GaugePair:
    """Connection 1-form ``gamma`` and Higgs field ``a`` on a 3D chart."""

    a: Callable
    gamma: Callable

    @classmethod
    def from_expressions(cls, a, gamma):
        from .exprconf import compile_array, compile_field

        return cls(compile_field(a, 3), compile_array(list(gamma), 3))


def exterior_d(one_form_jet):
    """Values of d of a 1-form jet: (dβ)_ij = ∂_i β_j − ∂_j β_i."""
    gr = one_form_jet.grad  # gr[j, i] = ∂_i β_j
    return gr.T - gr


def _point(Y):
    return Y if isinstance(Y, J.Jet) else J.coordinates(Y)


def monopole_residual(G: GaugePair, N: WeylStructure, y) -> float:
    """‖dΓ − *(da − a α_N)‖ at a target point."""
    if N.dim != 3:
        raise DimensionMismatch("monopoles live on 3-dimensional bases")
    Y = _point(y)
    h = metric_jet(N, Y).val
    aj = G.a(Y)
    a = float(aj.val)
    alpha = lee_jet(N, Y).val
    F = exterior_d(G.gamma(Y))
    star = J.hodge_star(h, aj.grad - a * alpha, N.orientation)
    return J.form_norm(h, F - star)


@dataclass(frozen=True)
class PulledBackConnection:
    """Γ̃ = φ*Γ + (a∘φ) λ θ̂ as a first-order jet at each source point."""

    scenario: object
    pair: GaugePair

    def at(self, x):
        c = context(self.scenario, x)
        return _tilde_gamma(c, self.pair)

    def horizontal_part(self, x):
        c = context(self.scenario, x)
        return J.contract("a,ai->i", self.pair.gamma(c.Phi), c.dphi)


def _nu(c: PointContext):
    """λ θ̂ as a first-order jet."""
    theta = J.contract("ij,j->i", c.g, c.U)
    return theta * J.sqrt(c.Lam)


def _tilde_gamma(c: PointContext, pair: GaugePair):
    c.require_hwc()
    pulled = J.contract("a,ai->i", pair.gamma(c.Phi), c.dphi)
    return pulled + _nu(c) * pair.a(c.Phi)


def pullback_connection(S, G: GaugePair) -> PulledBackConnection:
    if (S.m, S.n) != (4, 3):
        raise DimensionMismatch("pull-back connections are defined for maps from 4D to 3D")
    return PulledBackConnection(S, G)


def self_dual_norm(g, F, orientation=1) -> float:
    """‖P₊ F‖ with P₊ = (1 + *)/2."""
    plus = 0.5 * (F + J.hodge_star(g, F, orientation))
    return J.form_norm(g, plus)


def asd_connection_residual(T: PulledBackConnection, M: WeylStructure | None, x) -> float:
    c = context(T.scenario, x)
    M = T.scenario.source if M is None else M
    F = exterior_d(_tilde_gamma(c, T.pair))
    return self_dual_norm(c.gv, F, M.orientation)


def curvature_decomposition_residual(S, G: GaugePair, x) -> float:
    """Self-dual part of the curvature decomposition defect of Γ̃.

    ``dΓ̃ − φ*dΓ − (φ*da − a φ*α_N) ∧ ν − a δ ∧ ν`` with ``ν = λ θ̂`` and
    ``δ = φ*α^N − α₊|_H`` (Lee forms in the Riemannian-submersion gauge).
    """
    if (S.m, S.n) != (4, 3):
        raise DimensionMismatch("the curvature decomposition is for maps from 4D to 3D")
    c = context(S, x)
    F = exterior_d(_tilde_gamma(c, G))
    dphi = c.dphi.val
    dGamma = exterior_d(G.gamma(c.Y))
    pulled_R = dphi.T @ dGamma @ dphi
    aj = G.a(c.Y)
    a = float(aj.val)
    higgs = c.pullback(aj.grad - a * c.alpha_N)
    nu = _nu(c).val
    a_plus = riemannian_gauge_lee(c, c.alpha_can + c.star_I)
    delta = c.pullback(c.alpha_N) - c.horizontal_part(a_plus)
    defect = F - pulled_R - J.wedge(higgs, nu) - a * J.wedge(delta, nu)
    return self_dual_norm(c.gv, defect, S.source.orientation)


eq41_residual = curvature_decomposition_residual


@dataclass(frozen=True)
class TwoOfThreeReport:
    twistorial: float
    monopole: float
    asd: float
    tol: float
    kappa: float

    @property
    def flags(self):
        return (self.twistorial < self.tol, self.monopole < self.tol, self.asd < self.tol)

    @property
    def consistent(self) -> bool:
        vals = (self.twistorial, self.monopole, self.asd)
        for i in range(3):
            others = [vals[j] for j in range(3) if j != i]
            if all(v < self.tol for v in others) and not vals[i] < self.tol * self.kappa:
                return False
        return True


def two_of_three(S, G: GaugePair, points, tol=1e-7, kappa=10.0) -> TwoOfThreeReport:
    """Maxima of the three assertions over ``points`` and their consistency."""
    T = pullback_connection(S, G)
    tw = mono = asd = 0.0
    for p in points:
        c = context(S, p)
        tw = max(tw, check_4to3_ahs(S, c).worst)
        mono = max(mono, monopole_residual(G, S.target, c.y))
        asd = max(asd, asd_connection_residual(T, None, c))
    return TwoOfThreeReport(tw, mono, asd, tol, kappa)
