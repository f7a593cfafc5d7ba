"""Weyl structures on charts.

Conventions (fixed once, used everywhere):

* ``D_X Y = ∇^g_X Y + α(X) Y + α(Y) X − g(X, Y) α^♯`` so that ``D g = −2 α ⊗ g``.
* Under a change of representative ``g → e^{2f} g`` the Lee form becomes
  ``α − df``; a weight-``w`` scalar picks up ``e^{w f}``.
* Christoffel arrays are stored as ``G[k, i, j] = Γ^k_{ij}`` with
  ``D_{∂_i} ∂_j = Γ^k_{ij} ∂_k``.
* ``R(∂_i, ∂_j) ∂_k = R^l_{kij} ∂_l`` stored as ``R[l, k, i, j]`` and
  ``ric(Y, Z) = trace(X ↦ R(X, Y) Z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets as J
from .errors import DimensionMismatch, SingularMetric

__all__ = [
    "WeylStructure", "WeightedScalar", "CurvaturePack", "metric_jet", "lee_jet",
    "christoffel_jet", "weyl_christoffels", "levi_civita_christoffels",
    "metric_compatibility_residual", "curvature_pack", "bianchi_residual",
    "einstein_weyl_residual", "ew_special_residual", "weyl_tensor", "asd_residual",
    "assoc_connection", "lee_gauge_transform", "cross_product",
]


@dataclass(frozen=True)
class WeylStructure:
    """Representative metric and Lee form on a ``dim``-dimensional chart.

    ``metric`` maps a coordinate jet ``X`` (shape ``(dim,)``) to a symmetric
    ``(dim, dim)`` jet of order two; ``lee`` maps it to a ``(dim,)`` jet of
    order at least one, or is ``None`` for the Levi-Civita connection.
    """

    dim: int
    metric: Callable
    lee: Callable | None = None
    orientation: int = 1
    name: str = ""

    def __post_init__(self):
        if self.dim not in (1, 2, 3, 4):
            raise DimensionMismatch(f"unsupported dimension {self.dim}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @classmethod
    def from_expressions(cls, metric, lee=None, orientation=1, name=""):
        """Build from nested lists of expression strings or trees."""
        from .exprconf import compile_array

        d = len(metric)
        g = compile_array(metric, d)
        a = None if lee is None else compile_array(list(lee), d)
        return cls(d, g, a, orientation, name)

    @classmethod
    def flat(cls, dim, lee=None, orientation=1):
        def g(X):
            return J.constant(np.eye(dim), X.dim, with_hess=X.hess is not None)

        return cls(dim, g, lee, orientation, name=f"flat{dim}")

    def with_lee(self, lee):
        return WeylStructure(self.dim, self.metric, lee, self.orientation, self.name)

    def with_orientation(self, orientation):
        return WeylStructure(self.dim, self.metric, self.lee, orientation, self.name)


@dataclass(frozen=True)
class WeightedScalar:
    """Section of ``L^weight`` given by its gauge value against a representative."""

    field: Callable
    weight: int

    def __call__(self, X):
        return self.field(X)

    def gauge_transform(self, f):
        f = _as_scalar_field(f)
        w = self.weight
        base = self.field

        def out(X):
            return base(X) * J.exp(f(X) * w)

        return WeightedScalar(out, w)


def _as_scalar_field(f, dim=None):
    if callable(f) and not isinstance(f, str):
        return f
    from .exprconf import compile_field, parse

    tree = parse(f) if isinstance(f, str) else f
    names = {"x": 1, "y": 2, "z": 3, "t": 4, "r": 3}
    from .exprconf import variables

    need = max([names[v] for v in variables(tree)] + [1])
    cache = {}

    def field(X):
        d = X.dim
        if d not in cache:
            if d < need:
                raise DimensionMismatch("scalar field uses coordinates beyond the chart")
            cache[d] = compile_field(tree, d)
        return cache[d](X)

    return field


def _k_field(k):
    if k is None:
        return None
    if isinstance(k, WeightedScalar):
        return k.field
    if isinstance(k, (int, float)):
        c = float(k)
        return lambda X: J.constant(c, X.dim, with_hess=X.hess is not None)
    return _as_scalar_field(k)


def _point_jet(x):
    return x if isinstance(x, J.Jet) else J.coordinates(x)


def metric_jet(W: WeylStructure, X):
    g = W.metric(X)
    if g.shape != (W.dim, W.dim):
        raise DimensionMismatch(f"metric has shape {g.shape}, expected {(W.dim, W.dim)}")
    return g


def lee_jet(W: WeylStructure, X):
    if W.lee is None:
        return J.constant(np.zeros(W.dim), X.dim)
    a = W.lee(X)
    if a.shape != (W.dim,):
        raise DimensionMismatch(f"Lee form has shape {a.shape}, expected {(W.dim,)}")
    return a


def _check_metric(gval):
    w = np.linalg.eigvalsh(0.5 * (gval + gval.T))
    if not np.all(np.isfinite(w)) or w[0] <= 1e-10:
        raise SingularMetric("metric is not positive-definite")


def levi_civita_jet(g):
    """First-order jet of the Levi-Civita Christoffels of a metric jet."""
    _check_metric(g.val)
    gi = J.inv(g.first_order())  # first order suffices for Christoffels and their gradient
    dg = g.deriv()  # dg[a, b, c] = ∂_c g_ab
    low = (J.contract("lji->lij", dg) + dg - J.contract("ijl->lij", dg)) * 0.5
    return J.contract("kl,lij->kij", gi, low), gi


def christoffel_jet(W: WeylStructure, X, g=None, lc=None):
    """Weyl Christoffels ``G[k, i, j]`` as a first-order jet.

    ``lc`` may carry a precomputed ``levi_civita_jet(g)`` pair.
    """
    if g is None:
        g = metric_jet(W, X)
    lc, gi = levi_civita_jet(g) if lc is None else lc
    if W.lee is None:
        return lc
    a = lee_jet(W, X)
    d = W.dim
    eye = np.eye(d)
    up = J.contract("kl,l->k", gi, a)
    extra = (J.contract("i,kj->kij", a, eye) + J.contract("j,ki->kij", a, eye)
             - J.contract("ij,k->kij", g, up))
    return lc + extra


def weyl_christoffels(W: WeylStructure, x) -> np.ndarray:
    return christoffel_jet(W, _point_jet(x)).val


def levi_civita_christoffels(g_field: Callable, x) -> np.ndarray:
    return levi_civita_jet(g_field(_point_jet(x)))[0].val


def metric_compatibility_residual(W: WeylStructure, x, g=None, G=None) -> float:
    """max |∂_i g_jk − Γ^l_ij g_lk − Γ^l_ik g_jl + 2 α_i g_jk|."""
    X = _point_jet(x)
    g = metric_jet(W, X) if g is None else g
    G = (christoffel_jet(W, X, g) if G is None else G).val
    a = lee_jet(W, X).val
    gv = g.val
    dg = np.moveaxis(g.grad, -1, 0)  # dg[i, j, k] = ∂_i g_jk
    res = (dg - np.einsum("lij,lk->ijk", G, gv) - np.einsum("lik,jl->ijk", G, gv)
           + 2 * np.einsum("i,jk->ijk", a, gv))
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class CurvaturePack:
    R: np.ndarray
    ric: np.ndarray
    ric_sym0: np.ndarray
    s: float
    F_D: np.ndarray
    g: np.ndarray
    christoffels: np.ndarray = field(repr=False, default=None)


def curvature_from_christoffels(G):
    """Curvature tensor ``R[l, k, i, j]`` from a first-order Christoffel jet."""
    dG = G.grad  # dG[k, i, j, m] = ∂_m Γ^k_ij
    if not np.all(np.isfinite(dG)):
        raise ValueError("curvature needs first derivatives of the connection")
    Gv = G.val
    return (np.einsum("ljki->lkij", dG) - np.einsum("likj->lkij", dG)
            + np.einsum("lim,mjk->lkij", Gv, Gv) - np.einsum("ljm,mik->lkij", Gv, Gv))


def curvature_pack(W: WeylStructure, x, g=None, G=None) -> CurvaturePack:
    """Curvature data; ``g`` and ``G`` may be supplied when already computed at ``x``."""
    X = _point_jet(x)
    g = metric_jet(W, X) if g is None else g
    G = christoffel_jet(W, X, g) if G is None else G
    R = curvature_from_christoffels(G)
    ric = np.einsum("ikij->jk", R)
    gv = g.val
    gi = np.linalg.inv(gv)
    sym = 0.5 * (ric + ric.T)
    s = float(np.einsum("jk,jk->", gi, sym))
    a = lee_jet(W, X)
    da = a.grad  # da[j, i] = ∂_i α_j
    F = da.T - da
    return CurvaturePack(R, ric, sym - s / W.dim * gv, s, F, gv, G.val)


def bianchi_residual(pack: CurvaturePack) -> float:
    R = pack.R
    cyc = R + np.einsum("lijk->lkij", R) + np.einsum("ljki->lkij", R)
    return float(np.max(np.abs(cyc)))


def _tensor_norm(g, T):
    gi = np.linalg.inv(g)
    return float(math.sqrt(max(np.einsum("ac,bd,ab,cd->", gi, gi, T, T), 0.0)))


def einstein_weyl_residual(W: WeylStructure, x, pack: CurvaturePack | None = None) -> float:
    if W.dim != 3:
        raise DimensionMismatch("Einstein-Weyl residual is defined on 3-dimensional charts")
    pack = curvature_pack(W, x) if pack is None else pack
    return _tensor_norm(pack.g, pack.ric_sym0)


def ew_special_residual(W: WeylStructure, k, x) -> tuple[float, float]:
    """(|s − 3/2 k²|, ‖*(dk − kα) − dα‖) in the gauge of ``W``'s metric."""
    if W.dim != 3:
        raise DimensionMismatch("the special Einstein-Weyl clause needs a 3-dimensional chart")
    X = _point_jet(x)
    pack = curvature_pack(W, X)
    kj = _k_field(k)(X)
    kv = float(kj.val)
    a = lee_jet(W, X).val
    one = kj.grad - kv * a
    star = J.hodge_star(pack.g, one, W.orientation)
    return abs(pack.s - 1.5 * kv * kv), J.form_norm(pack.g, star - pack.F_D)


def weyl_tensor(g, R):
    """Conformal Weyl tensor W_{ijkl} = Rm − P ⊙ g with Rm_{ijkl} = g(R(∂i,∂j)∂k, ∂l)."""
    d = g.shape[0]
    Rm = np.einsum("lm,mkij->ijkl", g, R)
    ric = np.einsum("ikij->jk", R)
    ric = 0.5 * (ric + ric.T)
    s = np.einsum("jk,jk->", np.linalg.inv(g), ric)
    P = (ric - s / (2 * (d - 1)) * g) / (d - 2)
    kn = (np.einsum("il,jk->ijkl", P, g) + np.einsum("jk,il->ijkl", P, g)
          - np.einsum("ik,jl->ijkl", P, g) - np.einsum("jl,ik->ijkl", P, g))
    return Rm - kn


_PAIRS4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _star_on_pairs():
    eps = J.levi_civita_symbol(4)
    S = np.zeros((6, 6))
    for a, (i, j) in enumerate(_PAIRS4):
        for b, (k, l) in enumerate(_PAIRS4):
            S[b, a] = eps[i, j, k, l]
    return S


_STAR6 = _star_on_pairs()


def self_dual_projector():
    return 0.5 * (np.eye(6) + _STAR6)


def frame_two_form_matrix(T, E):
    """Matrix of a pair-symmetric 4-tensor on 2-forms in the frame ``E``."""
    Tf = T
    for _ in range(4):
        # contract the leading index and cycle it to the back
        Tf = np.tensordot(Tf, E, axes=([0], [0]))
    M = np.zeros((6, 6))
    for a, (i, j) in enumerate(_PAIRS4):
        for b, (k, l) in enumerate(_PAIRS4):
            M[a, b] = Tf[i, j, k, l]
    return M


def asd_residual(W: WeylStructure, x, orientation=None, g=None, lc=None) -> float:
    """Spectral norm of P₊ W P₊ for the conformal Weyl tensor of the representative."""
    if W.dim != 4:
        raise DimensionMismatch("anti-self-duality needs a 4-dimensional chart")
    o = W.orientation if orientation is None else orientation
    X = _point_jet(x)
    g = metric_jet(W, X) if g is None else g
    lc = levi_civita_jet(g)[0] if lc is None else lc
    R = curvature_from_christoffels(lc)
    Wt = weyl_tensor(g.val, R)
    E = J.gram_schmidt_frame(g.val, orientation=o).vectors
    M = frame_two_form_matrix(Wt, E)
    P = self_dual_projector()
    return float(np.linalg.norm(P @ M @ P, 2))


def cross_product(g, orientation=1):
    """Array C[l, i, j] with (∂_i × ∂_j)^l for the metric ``g`` (3 dimensions)."""
    g = np.asarray(g, dtype=float)
    vol = math.sqrt(np.linalg.det(g)) * orientation
    return np.einsum("lm,mij->lij", np.linalg.inv(g), J.levi_civita_symbol(3)) * vol


def assoc_connection(W: WeylStructure, k) -> Callable:
    """Coefficients of ∇ = D + ½ k X×Y, as a function of the point."""
    if W.dim != 3:
        raise DimensionMismatch("the associated connection needs a 3-dimensional chart")
    kf = _k_field(k)

    def coefficients(x):
        X = _point_jet(x)
        g = metric_jet(W, X)
        G = christoffel_jet(W, X, g).val
        if kf is None:
            return G
        kv = float(kf(X).val)
        return G + 0.5 * kv * cross_product(g.val, W.orientation)

    return coefficients


def lee_gauge_transform(W: WeylStructure, f) -> WeylStructure:
    """Same Weyl connection against the representative ``e^{2f} g``."""
    ff = _as_scalar_field(f)
    metric, lee, d = W.metric, W.lee, W.dim

    def g(X):
        return J.exp(ff(X) * 2.0) * metric(X)

    def a(X):
        df = ff(X).deriv()
        if lee is None:
            return -df
        return lee(X) - df

    return WeylStructure(d, g, a, W.orientation, W.name)
