"""Map-level geometry of submersions between Weyl spaces.

Everything is evaluated pointwise from jets of the source metric, the map and
the target metric.  Basic horizontal lifts ``X_a`` of the target coordinate
fields are ``g^{-1} dφ^T (dφ g^{-1} dφ^T)^{-1} e_a``; they are first-order
jets, so brackets and covariant derivatives of them are exact at the point.

Orientation: the vertical unit ``U`` (codimension-one fibres) is chosen so
that ``(U, X_1, ..., X_n)`` has the sign of the source orientation times the
target orientation, i.e. vertical-first frames over positive target frames
are positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import jets as J
from .errors import (DegenerateCurve, DegenerateImmersion, DimensionMismatch, NotHWC,
                     RankDeficient)
from .weyl import WeylStructure, christoffel_jet, lee_jet, levi_civita_jet, metric_jet

__all__ = [
    "SubmersionScenario", "PointContext", "SplitAtPoint", "context", "split_at_point",
    "hwc_residual", "tension_field", "harmonic_morphism_residual", "integrability_form",
    "second_fund_H", "canonical_weyl_of_V", "d_plus", "partial_connection_residual_over_H",
    "fundamental_equation_residual", "curve_geodesic_residual", "surface_checks",
    "weyl_from_lc", "HWC_RTOL",
]

# relative tolerance for the horizontal-conformality precondition
HWC_RTOL = 1e-8


@dataclass(frozen=True)
class SubmersionScenario:
    """A chart map ``phi`` from a Weyl space of dimension m to one of dimension n < m.

    ``k`` is a weight −1 scalar field: on the source for maps to surfaces, on
    the target for maps from four to three dimensions.
    """

    source: WeylStructure
    target: WeylStructure
    phi: Callable
    k: Callable | None = None
    name: str = ""

    @property
    def m(self):
        return self.source.dim

    @property
    def n(self):
        return self.target.dim

    def __post_init__(self):
        if not self.n < self.m:
            raise DimensionMismatch("target dimension must be below source dimension")


def weyl_from_lc(lc, g, alpha):
    """Weyl Christoffel values from Levi-Civita values and a Lee covector."""
    d = g.shape[0]
    eye = np.eye(d)
    up = np.linalg.solve(g, alpha)
    return (lc + np.einsum("i,kj->kij", alpha, eye) + np.einsum("j,ki->kij", alpha, eye)
            - np.einsum("ij,k->kij", g, up))


def _eps_contract(eps, vecs):
    letters = "abcdefg"[: len(vecs)]
    spec = "j" + letters + "," + ",".join(letters) + "->j"
    return J.contract(spec, eps, *vecs)


def _normalize(v, g):
    n2 = J.contract("i,ij,j->", v, g, v)
    return v / J.sqrt(n2)


def _gram_schmidt_jets(vecs, g):
    out = []
    for v in vecs:
        for e in out:
            v = v - e * J.contract("i,ij,j->", e, g, v)
        out.append(_normalize(v, g))
    return out


def _covariant(G, A, B):
    """Values of ∇_A B for jet vector fields A, B and Christoffel values G."""
    return np.einsum("k,lk->l", A.val, B.grad) + np.einsum("lij,i,j->l", G, A.val, B.val)


def _bracket(A, B):
    return np.einsum("k,lk->l", A.val, B.grad) - np.einsum("k,lk->l", B.val, A.grad)


def _trace_second_fundamental(P_out, P_fields, Cinv, G):
    """P_out( C^{ij} ∇_{v_i} v_j ) with v_j the columns of ``P_fields``."""
    Pv, dP = P_fields.val, P_fields.grad  # dP[l, j, k] = ∂_k P[l, j]
    cov = (np.einsum("ij,ki,ljk->l", Cinv, Pv, dP)
           + np.einsum("ij,lab,ai,bj->l", Cinv, G, Pv, Pv))
    return P_out @ cov


class PointContext:
    """Lazily evaluated geometry of a scenario at one source point."""

    def __init__(self, S: SubmersionScenario, x):
        self.S = S
        self.x = np.asarray(x, dtype=float)
        if self.x.shape != (S.m,):
            raise DimensionMismatch(f"point must have {S.m} coordinates")
        self.X = J.coordinates(self.x)

    # -- raw jets ------------------------------------------------------
    @cached_property
    def g(self):
        return metric_jet(self.S.source, self.X)

    @cached_property
    def _lc(self):
        return levi_civita_jet(self.g)

    @cached_property
    def gi(self):
        return self._lc[1]

    @cached_property
    def lc(self):
        return self._lc[0].val

    @cached_property
    def gv(self):
        return self.g.val

    @cached_property
    def giv(self):
        return self.gi.val

    @cached_property
    def alpha(self):
        return lee_jet(self.S.source, self.X).val

    @cached_property
    def christoffels(self):
        return weyl_from_lc(self.lc, self.gv, self.alpha)

    @cached_property
    def weyl_jet(self):
        """Source Weyl Christoffels as a first-order jet (for curvature)."""
        return christoffel_jet(self.S.source, self.X, self.g, self._lc)

    @cached_property
    def lc_jet(self):
        return self._lc[0]

    @cached_property
    def Phi(self):
        P = self.S.phi(self.X)
        if P.shape != (self.S.n,):
            raise DimensionMismatch(f"map has {P.shape} components, expected {self.S.n}")
        return P

    @cached_property
    def y(self):
        return self.Phi.val

    @cached_property
    def dphi(self):
        return self.Phi.deriv()  # dphi[a, i] = ∂_i φ^a

    @cached_property
    def h(self):
        return metric_jet(self.S.target, self.Phi)

    @cached_property
    def hv(self):
        return self.h.val

    @cached_property
    def Y(self):
        return J.coordinates(self.y)

    @cached_property
    def target_christoffels(self):
        return christoffel_jet(self.S.target, self.Y).val

    @cached_property
    def alpha_N(self):
        return lee_jet(self.S.target, self.Y).val

    # -- conformality --------------------------------------------------
    @cached_property
    def A(self):
        return J.contract("ai,ij,bj->ab", self.dphi, self.gi, self.dphi)

    @cached_property
    def Lam(self):
        return J.contract("ab,ab->", self.h, self.A) * (1.0 / self.S.n)

    @cached_property
    def Lambda(self):
        return float(self.Lam.val)

    @cached_property
    def lam(self):
        return math.sqrt(self.Lambda)

    @cached_property
    def dlogLam(self):
        return self.Lam.grad / self.Lam.val

    def check_rank(self):
        ev = np.linalg.eigvals(self.A.val @ self.hv).real
        if not np.all(np.isfinite(ev)) or ev.min() <= 1e-16:
            raise RankDeficient(f"differential drops rank at {self.x.tolist()}")

    @cached_property
    def hwc_residual(self):
        self.check_rank()
        T = self.A.val - self.Lambda * np.linalg.inv(self.hv)
        hv = self.hv
        return float(math.sqrt(max(np.einsum("ac,bd,ab,cd->", hv, hv, T, T), 0.0)))

    def require_hwc(self):
        if self.hwc_residual > HWC_RTOL * max(1.0, self.Lambda):
            raise NotHWC(f"map is not horizontally conformal at {self.x.tolist()} "
                         f"(residual {self.hwc_residual:.3g})")

    # -- split ----------------------------------------------------------
    @cached_property
    def lifts(self):
        self.check_rank()
        return J.contract("ij,aj,ab->ib", self.gi, self.dphi, J.inv(self.A))

    @cached_property
    def lift_list(self):
        return [self.lifts[:, a] for a in range(self.S.n)]

    @cached_property
    def PH(self):
        return J.contract("ia,aj->ij", self.lifts, self.dphi)

    @cached_property
    def PV(self):
        return J.constant(np.eye(self.S.m), self.S.m, with_hess=False) - self.PH

    @cached_property
    def lift_gram(self):
        """g(X_a, X_b) on the basic lifts."""
        return np.einsum("ia,ij,jb->ab", self.lifts.val, self.gv, self.lifts.val)

    @cached_property
    def orientation_sign(self):
        return self.S.source.orientation * self.S.target.orientation

    @cached_property
    def U(self):
        """Unit vertical field (codimension one), vertical-first positive."""
        if self.S.m - self.S.n != 1:
            raise DimensionMismatch("a vertical unit field needs one-dimensional fibres")
        theta = _eps_contract(J.levi_civita_symbol(self.S.m), self.lift_list)
        up = J.contract("ij,j->i", self.gi, theta)
        return _normalize(up, self.g) * float(self.orientation_sign)

    @cached_property
    def horizontal_frame(self):
        """g-orthonormal horizontal jets E_a, positive for the target orientation."""
        E = _gram_schmidt_jets(self.lift_list, self.g)
        if self.S.target.orientation < 0:
            E[-1] = -E[-1]
        return E

    @cached_property
    def vertical_frame(self):
        """g-orthonormal vertical jets; (V..., E...) positive on the source."""
        r = self.S.m - self.S.n
        if r == 1:
            return [self.U]
        if r != 2 or self.S.m != 4:
            raise DimensionMismatch("vertical frames are implemented for fibres of dimension 1 or 2 in 4D")
        PVv = self.PV.val
        norms = np.einsum("ij,ik,kj->j", PVv, self.gv, PVv)
        j = int(np.argmax(norms))
        e = np.zeros(self.S.m)
        e[j] = 1.0
        V1 = _normalize(J.contract("ij,j->i", self.PV, e), self.g)
        E1, E2 = self.horizontal_frame
        theta = _eps_contract(J.levi_civita_symbol(4), [V1, E1, E2])
        up = J.contract("ij,j->i", self.gi, theta)
        V2 = _normalize(up, self.g) * float(-self.S.source.orientation)
        return [V1, V2]

    # -- Lee forms and second fundamental forms ------------------------
    def trace_B_H(self, G):
        """Trace of the second fundamental form of H for connection values G."""
        C = self.PH.val @ self.giv
        return _trace_second_fundamental(self.PV.val, self.PH, C, G)

    def trace_B_V(self, G):
        C = self.PV.val @ self.giv
        return _trace_second_fundamental(self.PH.val, self.PV, C, G)

    @cached_property
    def mu_V(self):
        return self.trace_B_V(self.lc)

    @cached_property
    def mu_H(self):
        return self.trace_B_H(self.lc)

    @cached_property
    def alpha_can(self):
        m, n = self.S.m, self.S.n
        return self.gv @ self.mu_V / (m - n) + self.gv @ self.mu_H / n

    @cached_property
    def canonical_christoffels(self):
        return weyl_from_lc(self.lc, self.gv, self.alpha_can)

    @cached_property
    def integrability(self):
        """I(X_a, X_b) = −V[X_a, X_b] on basic lifts, shape (n, n, m)."""
        n = self.S.n
        L = self.lift_list
        PVv = self.PV.val
        out = np.zeros((n, n, self.S.m))
        for a in range(n):
            for b in range(a + 1, n):
                v = -PVv @ _bracket(L[a], L[b])
                out[a, b], out[b, a] = v, -v
        return out

    @cached_property
    def iota(self):
        """g(U, I) as a 2-form on the lift basis (codimension one)."""
        return np.einsum("abi,ij,j->ab", self.integrability, self.gv, self.U.val)

    @cached_property
    def star_I(self):
        """*_H I^H: a horizontal covector (n=3) or a weight −1 scalar (n=2)."""
        n = self.S.n
        if self.S.m - n != 1:
            raise DimensionMismatch("*_H I^H as a form needs one-dimensional fibres")
        s = J.hodge_star(self.lift_gram, self.iota, self.S.target.orientation)
        if n == 1:
            return np.zeros(self.S.m)
        if n == 2:
            return float(s)
        return s @ self.dphi.val

    @cached_property
    def star_I_vertical(self):
        """I(E_1, E_2) for a positive orthonormal horizontal frame (4→2): vertical."""
        if (self.S.m, self.S.n) != (4, 2):
            raise DimensionMismatch("vertical-valued *_H I^H is defined for maps from 4D to 2D")
        E1, E2 = self.horizontal_frame
        return -self.PV.val @ _bracket(E1, E2)

    @cached_property
    def J_vertical(self):
        """Complex structure on V with J V1 = V2 (as a matrix acting on vectors)."""
        V1, V2 = (v.val for v in self.vertical_frame)
        g = self.gv
        return np.outer(V2, g @ V1) - np.outer(V1, g @ V2)

    # -- tension ----------------------------------------------------------
    def tension(self, G=None):
        G = self.christoffels if G is None else G
        dphi = self.dphi.val
        GN = self.target_christoffels
        hess = self.Phi.hess
        inner = (hess - np.einsum("kij,ck->cij", G, dphi)
                 + np.einsum("cab,ai,bj->cij", GN, dphi, dphi))
        return np.einsum("ij,cij->c", self.giv, inner)

    @cached_property
    def tau(self):
        self.check_rank()
        return self.tension()

    @cached_property
    def tension_norm(self):
        return float(math.sqrt(max(self.tau @ self.hv @ self.tau, 0.0)))

    # -- helpers --------------------------------------------------------------
    def norm(self, v):
        return float(math.sqrt(max(v @ self.gv @ v, 0.0)))

    def conorm(self, beta, scale=1.0):
        """g-norm of a covector; ``scale`` is the conformal factor of the gauge."""
        return float(math.sqrt(max(beta @ self.giv @ beta / scale, 0.0)))

    def horizontal_part(self, beta):
        return beta @ self.PH.val

    def pullback(self, beta_target):
        return beta_target @ self.dphi.val


def context(S, x) -> PointContext:
    if isinstance(x, PointContext):
        return x
    return PointContext(S, x)


@dataclass(frozen=True)
class SplitAtPoint:
    vertical: np.ndarray
    horizontal: np.ndarray
    lam: float
    Lambda: float


def split_at_point(S, x) -> SplitAtPoint:
    c = context(S, x)
    c.check_rank()
    gv = c.gv

    def orthonormalize(cols, count):
        out = []
        for v in cols:
            for e in out:
                v = v - (e @ gv @ v) * e
            nv = math.sqrt(max(v @ gv @ v, 0.0))
            if nv > 1e-8:
                out.append(v / nv)
            if len(out) == count:
                break
        return out

    horiz = np.array(orthonormalize(list(c.lifts.val.T), S.n)).T
    PV = c.PV.val
    order = np.argsort(-np.einsum("ij,ik,kj->j", PV, gv, PV))
    rest = orthonormalize([PV[:, j].copy() for j in order], S.m - S.n)
    return SplitAtPoint(np.array(rest).T, horiz, c.lam, c.Lambda)


def hwc_residual(S, x) -> float:
    return context(S, x).hwc_residual


def tension_field(S, x) -> np.ndarray:
    return context(S, x).tau


def harmonic_morphism_residual(S, x) -> tuple[float, float]:
    c = context(S, x)
    return c.tension_norm, c.hwc_residual


def integrability_form(S, x):
    c = context(S, x)
    if S.m - S.n != 1:
        raise DimensionMismatch("integrability_form needs one-dimensional fibres")
    return c.integrability, c.star_I


def _source_christoffels(c, D):
    if isinstance(D, np.ndarray):
        return D
    if D is None or D == "source":
        return c.christoffels
    if D == "canonical":
        return c.canonical_christoffels
    if D == "levi-civita":
        return c.lc
    if isinstance(D, WeylStructure):
        if D.metric is c.S.source.metric:
            return weyl_from_lc(c.lc, c.gv, lee_jet(D, c.X).val)
        return christoffel_jet(D, c.X).val
    raise ValueError(f"unknown connection selector {D!r}")


def second_fund_H(S, x, D=None):
    """(B^{H,D} on the lift basis, trace vector) for the chosen source connection."""
    c = context(S, x)
    G = _source_christoffels(c, D)
    L = c.lift_list
    n = S.n
    PVv = c.PV.val
    B = np.zeros((n, n, S.m))
    for a in range(n):
        for b in range(n):
            B[a, b] = PVv @ _covariant(G, L[a], L[b])
    B = 0.5 * (B + np.swapaxes(B, 0, 1))
    return B, c.trace_B_H(G)


def _value_only_lee(fn, m):
    def lee(X):
        v = fn(X.val)
        return J.Jet(v, np.full((m, X.dim), np.nan), None)

    return lee


def canonical_weyl_of_V(S) -> WeylStructure:
    """Weyl structure for which both V and H are minimal.

    The Lee form is only known pointwise (no derivatives), which suffices
    for connection-level checks but not for curvature.
    """
    lee = _value_only_lee(lambda p: PointContext(S, p).alpha_can, S.m)
    return S.source.with_lee(lee)


def d_plus(S) -> WeylStructure:
    if (S.m, S.n) != (4, 3):
        raise DimensionMismatch("D_+ is defined for maps from 4D to 3D")

    def fn(p):
        c = PointContext(S, p)
        return c.alpha_can + c.star_I

    return S.source.with_lee(_value_only_lee(fn, S.m))


def partial_connection_residual_over_H(S, D_a, D_b, x) -> float:
    """max over basic X, Y of ‖lift(D^b_{dφX} dφY) − H(D^a_X Y)‖_g."""
    c = context(S, x)
    c.require_hwc()
    G = _source_christoffels(c, D_a)
    if D_b is None or D_b == "target":
        GN = c.target_christoffels
    else:
        GN = christoffel_jet(D_b, c.Y).val
    L = c.lift_list
    lifts = c.lifts.val
    PH = c.PH.val
    worst = 0.0
    for a in range(S.n):
        for b in range(S.n):
            diff = lifts @ GN[:, a, b] - PH @ _covariant(G, L[a], L[b])
            worst = max(worst, c.norm(diff))
    return worst


def riemannian_gauge_lee(c, alpha):
    """Lee covector against Λ g (the gauge in which φ is a Riemannian submersion)."""
    return alpha - 0.5 * c.dlogLam


def fundamental_equation_residual(S, x) -> float:
    c = context(S, x)
    c.require_hwc()
    m, n = S.m, S.n
    aD = riemannian_gauge_lee(c, c.alpha_can)
    aM = riemannian_gauge_lee(c, c.alpha)
    tau = c.tau / c.Lambda
    tau_flat = c.hv @ tau @ c.dphi.val
    res = ((m - n) * c.horizontal_part(aD) + tau_flat
           - (m - 2) * c.horizontal_part(aM) + (n - 2) * c.pullback(c.alpha_N))
    return c.conorm(res, c.Lambda)


# -- curves and surfaces ---------------------------------------------------

def curve_geodesic_residual(W: WeylStructure, gamma: Callable, t: float) -> float:
    """Geodesic curvature ‖(D_γ' γ')^⊥‖ / ‖γ'‖² at parameter ``t``."""
    T = J.coordinates([float(t)])
    P = gamma(T)
    vel = P.grad[:, 0]
    acc = P.hess[:, 0, 0]
    X = J.coordinates(P.val)
    g = metric_jet(W, X).val
    G = christoffel_jet(W, X).val
    s2 = vel @ g @ vel
    if s2 < 1e-20:
        raise DegenerateCurve(f"curve is singular at t={t}")
    v = acc + np.einsum("kij,i,j->k", G, vel, vel)
    perp = v - (vel @ g @ v) / s2 * vel
    return float(math.sqrt(max(perp @ g @ perp, 0.0)) / s2)


def surface_checks(W: WeylStructure, surface: Callable, uv, k=None) -> tuple[float, float]:
    """(umbilicity residual, ‖trace B^D‖ + |k|) for a parametrized surface."""
    T = J.coordinates(np.asarray(uv, dtype=float))
    P = surface(T)
    F = P.grad  # F[:, a] tangent vectors
    Fab = P.hess
    X = J.coordinates(P.val)
    gj = metric_jet(W, X)
    g = gj.val
    I = F.T @ g @ F
    if np.linalg.det(I) < 1e-20:
        raise DegenerateImmersion(f"surface is not immersed at {list(uv)}")
    Ii = np.linalg.inv(I)
    proj_tan = F @ Ii @ F.T @ g

    def normal_part(G):
        v = Fab + np.einsum("kij,ia,jb->kab", G, F, F)
        return v - np.einsum("kl,lab->kab", proj_tan, v)

    lc, _ = levi_civita_jet(gj)
    B = normal_part(lc.val)
    trB = np.einsum("ab,kab->k", Ii, B)
    T0 = B - 0.5 * np.einsum("k,ab->kab", trB, I)
    umb = math.sqrt(max(np.einsum("ac,bd,kab,kl,lcd->", Ii, Ii, T0, g, T0), 0.0))
    BD = normal_part(christoffel_jet(W, X).val)
    trD = np.einsum("ab,kab->k", Ii, BD)
    kv = 0.0
    if k is not None:
        from .weyl import _k_field
        kv = abs(float(_k_field(k)(X).val))
    return float(umb), float(math.sqrt(max(trD @ g @ trD, 0.0)) + kv)
