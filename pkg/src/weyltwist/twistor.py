"""Frame-level twistoriality criteria and their invariant counterparts.

The twistor bundles themselves are never built.  Each criterion is the
pointwise frame condition its holomorphicity reduces to, evaluated with
complex null frames assembled from real orthonormal jets:

* maps 3 → 2: ``U`` vertical unit, ``Y = (E1 + i E2)/√2`` with ``(E1, E2)``
  positive for the target orientation;
* maps 4 → 2: ``U = (V1 + i V2)/√2``, ``Y = (E1 + i E2)/√2`` with
  ``(V1, V2, E1, E2)`` positive on the source.

Christoffel symbols in a frame follow ``D_{X_k} X_j = Γ^i_{jk} X_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .errors import DegenerateSpan, DimensionMismatch
from .submersion import (PointContext, _covariant, _gram_schmidt_jets, context,
                         partial_connection_residual_over_H, riemannian_gauge_lee, weyl_from_lc)
from .weyl import WeylStructure, _k_field, christoffel_jet, cross_product, lee_jet

__all__ = [
    "CheckVerdict", "NullFrame", "autoparallel_residual", "null_frame_3d", "null_frame_4d",
    "check_3to2_frame", "check_3to2_invariant", "check_4to2_frame", "check_4to2_invariant",
    "check_4to3_es", "check_4to3_christoffel", "check_4to3_ahs", "frame_christoffels",
    "christoffel_identity_residual", "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-9
_R2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CheckVerdict:
    """Named residuals at one point; passes when every residual is below ``tol``."""

    name: str
    residuals: dict
    tol: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    @property
    def worst(self) -> float:
        return max(self.residuals.values())

    def __bool__(self):
        return self.passed


@dataclass(frozen=True)
class NullFrame:
    """Complex frame vectors stored as complex arrays of chart components."""

    U: np.ndarray
    Y: np.ndarray
    kind: str

    def gram_errors(self, g):
        def b(a, c):
            return a @ g @ c

        U, Y = self.U, self.Y
        if self.kind == "3d":
            return max(abs(b(U, U) - 1), abs(b(Y, Y)), abs(b(U, Y)), abs(b(Y, Y.conj()) - 1))
        return max(abs(b(U, U)), abs(b(Y, Y)), abs(b(U, Y)), abs(b(U, Y.conj())),
                   abs(b(U, U.conj()) - 1), abs(b(Y, Y.conj()) - 1))


def _complex_pair(A, B):
    return (A.val + 1j * B.val) / _R2


def null_frame_3d(S, x) -> NullFrame:
    c = context(S, x)
    E1, E2 = c.horizontal_frame
    return NullFrame(c.U.val.astype(complex), _complex_pair(E1, E2), "3d")


def null_frame_4d(S, x) -> NullFrame:
    c = context(S, x)
    V1, V2 = c.vertical_frame
    E1, E2 = c.horizontal_frame
    return NullFrame(_complex_pair(V1, V2), _complex_pair(E1, E2), "4d")


def _cov(G, A, B):
    return _covariant(G, A, B)


def _pair(v, g, A, B):
    """g(v, (A + iB)/√2) for a complex vector v."""
    return (v @ g @ A.val + 1j * (v @ g @ B.val)) / _R2


def autoparallel_residual(span: Sequence[Callable], connection, X, x, metric=None) -> float:
    """Largest component of ∇_X s_i leaving span(s_j(x)).

    ``span`` are vector fields (point jet -> (d,) jet), ``connection`` maps a
    point to Christoffel values ``G[k, i, j]`` (``∇_{∂i} ∂j = G[k, i, j] ∂k``).
    """
    x = np.asarray(x, dtype=float)
    P = J.coordinates(x)
    fields = [s(P) for s in span]
    S = np.column_stack([f.val for f in fields])
    gm = np.eye(len(x)) if metric is None else np.asarray(metric(x) if callable(metric) else metric)
    sv = np.linalg.svd(S, compute_uv=False)
    if sv.min() < 1e-10:
        raise DegenerateSpan("spanning fields are linearly dependent")
    G = connection(x)
    Xv = np.asarray(X, dtype=float)
    proj = S @ np.linalg.solve(S.T @ gm @ S, S.T @ gm)
    worst = 0.0
    for f in fields:
        v = f.grad @ Xv + np.einsum("kij,i,j->k", G, Xv, f.val)
        r = v - proj @ v
        worst = max(worst, float(math.sqrt(max(r @ gm @ r, 0.0))))
    return worst


# -- maps to surfaces -------------------------------------------------------

def _require_dims(S, m, n):
    if (S.m, S.n) != (m, n):
        raise DimensionMismatch(f"check needs a map from {m}D to {n}D, got {S.m}D to {S.n}D")


def _source_k(c):
    kf = _k_field(c.S.k)
    return 0.0 if kf is None else float(kf(c.X).val)


def check_3to2_frame(S, x, tol=DEFAULT_TOL) -> CheckVerdict:
    _require_dims(S, 3, 2)
    c = context(S, x)
    c.check_rank()
    g = c.gv
    G = c.christoffels + 0.5 * _source_k(c) * cross_product(g, S.source.orientation)
    U = c.U
    E1, E2 = c.horizontal_frame
    r1 = abs(_pair(_cov(G, U, U), g, E1, E2))
    nabla_ybar_u = (_cov(G, E1, U) - 1j * _cov(G, E2, U)) / _R2
    r2 = abs(_pair(nabla_ybar_u, g, E1, E2))
    return CheckVerdict("check_3to2_frame",
                        {"g(D_U U, Y)": float(r1), "g(D_Ybar U, Y)": float(r2),
                         "hwc": c.hwc_residual}, tol)


def check_3to2_invariant(S, x, tol=DEFAULT_TOL) -> CheckVerdict:
    _require_dims(S, 3, 2)
    c = context(S, x)
    trB = c.trace_B_H(c.christoffels)
    return CheckVerdict("check_3to2_invariant",
                        {"tension": c.tension_norm, "hwc": c.hwc_residual,
                         "*I - k": abs(c.star_I - _source_k(c)),
                         "trace B^H": c.norm(trB)}, tol)


def check_4to2_frame(S, x, tol=DEFAULT_TOL) -> CheckVerdict:
    _require_dims(S, 4, 2)
    c = context(S, x)
    c.check_rank()
    g = c.gv
    G = c.christoffels
    V1, V2 = c.vertical_frame
    E1, E2 = c.horizontal_frame
    d_ubar_u = 0.5 * (_cov(G, V1, V1) + _cov(G, V2, V2)
                      + 1j * (_cov(G, V1, V2) - _cov(G, V2, V1)))
    d_ybar_y = 0.5 * (_cov(G, E1, E1) + _cov(G, E2, E2)
                      + 1j * (_cov(G, E1, E2) - _cov(G, E2, E1)))
    r1 = abs(_pair(d_ubar_u, g, E1, E2))
    r2 = abs(_pair(d_ybar_y, g, V1, V2))
    return CheckVerdict("check_4to2_frame",
                        {"g(D_Ubar U, Y)": float(r1), "g(D_Ybar Y, U)": float(r2),
                         "hwc": c.hwc_residual}, tol)


def check_4to2_invariant(S, x, tol=DEFAULT_TOL) -> CheckVerdict:
    _require_dims(S, 4, 2)
    c = context(S, x)
    trB = c.trace_B_H(c.christoffels)
    defect = trB - c.J_vertical @ c.star_I_vertical
    return CheckVerdict("check_4to2_invariant",
                        {"tension": c.tension_norm, "hwc": c.hwc_residual,
                         "trace B^H - J(*I)": c.norm(defect)}, tol)


# -- maps from four to three dimensions -----------------------------------------

def _target_k(c):
    kf = _k_field(c.S.k)
    return 0.0 if kf is None else float(kf(c.Phi).val)


def check_4to3_es(S, x, tol=DEFAULT_TOL) -> CheckVerdict:
    """Lee-form clauses, in the gauge where φ is a Riemannian submersion."""
    _require_dims(S, 4, 3)
    c = context(S, x)
    c.require_hwc()
    aM = riemannian_gauge_lee(c, c.alpha)
    U1 = c.U.val / c.lam
    vertical = abs(aM @ U1 - 0.5 * _target_k(c))
    horiz = c.pullback(c.alpha_N) - c.horizontal_part(aM) - 0.5 * c.star_I
    return CheckVerdict("check_4to3_es",
                        {"hwc": c.hwc_residual, "alpha^M(U) - k/2": float(vertical),
                         "alpha^N - alpha^M|H - *I/2": c.conorm(horiz, c.Lambda)}, tol)


def _target_frame(c):
    n = c.S.n
    basis = [J.constant(np.eye(n)[a], c.X.dim) for a in range(n)]
    f = _gram_schmidt_jets(basis, c.h)
    if c.S.target.orientation < 0:
        f[-1] = -f[-1]
    return f


def adapted_frame(S, x):
    """(X1, ..., X4): X1 vertical, the rest basic lifts of an orthonormal target frame.

    The frame is orthonormal for Λ g; returns the jets and the target frame values.
    """
    c = context(S, x)
    cached = c.__dict__.get("_adapted_frame")
    if cached is not None:
        return cached
    c.require_hwc()
    f = _target_frame(c)
    lam = J.sqrt(c.Lam)
    X1 = c.U / lam
    rest = [J.contract("ib,b->i", c.lifts, fa) for fa in f]
    out = ([X1] + rest, np.column_stack([fa.val for fa in f]))
    c.__dict__["_adapted_frame"] = out
    return out


def frame_christoffels(S, x, G=None):
    """Γ^i_{jk} = g'(X_i, D_{X_k} X_j) in the adapted frame (g' = Λ g)."""
    c = context(S, x)
    G = c.christoffels if G is None else G
    frame, _ = adapted_frame(S, c)
    gp = c.Lambda * c.gv
    d = len(frame)
    out = np.zeros((d, d, d))
    for j in range(d):
        for k in range(d):
            v = _cov(G, frame[k], frame[j])
            for i in range(d):
                out[i, j, k] = frame[i].val @ gp @ v
    return out


def _christoffel_combos(Gm):
    return np.array([Gm[0, 1, 0] + Gm[2, 3, 0],
                     Gm[0, 2, 0] - Gm[1, 3, 0],
                     Gm[0, 3, 0] + Gm[1, 2, 0]])


def christoffel_identity_residual(S, x) -> float:
    """Frame identity Γ-combinations = (α^M − α − ½ *I)(X_a) (always zero)."""
    c = context(S, x)
    combos = _christoffel_combos(frame_christoffels(S, c))
    frame, _ = adapted_frame(S, c)
    aM = riemannian_gauge_lee(c, c.alpha)
    aD = riemannian_gauge_lee(c, c.alpha_can)
    beta = aM - aD - 0.5 * c.star_I
    rhs = np.array([beta @ X.val for X in frame[1:]])
    return float(np.max(np.abs(combos - rhs)))


def _lee_value(W, Y):
    return lee_jet(W, Y).val


def check_4to3_christoffel(S, x, D_prime=None, D_second=None, tol=DEFAULT_TOL) -> CheckVerdict:
    """Γ-relations against the Lee difference of two target Weyl connections.

    ``D_prime`` and ``D_second`` are Weyl structures on the target sharing its
    representative metric (default: the scenario's target for both).
    """
    _require_dims(S, 4, 3)
    c = context(S, x)
    Dp = S.target if D_prime is None else D_prime
    Ds = S.target if D_second is None else D_second
    diff = _lee_value(Dp, c.Y) - _lee_value(Ds, c.Y)
    combos = _christoffel_combos(frame_christoffels(S, c))
    _, fvals = adapted_frame(S, c)
    rhs = diff @ fvals
    r = np.abs(combos - rhs)
    return CheckVerdict("check_4to3_christoffel",
                        {"hwc": c.hwc_residual, "X2 relation": float(r[0]),
                         "X3 relation": float(r[1]), "X4 relation": float(r[2])}, tol)


def d_plus_christoffels(c: PointContext):
    return weyl_from_lc(c.lc, c.gv, c.alpha_can + c.star_I)


def check_4to3_ahs(S, x, tol=DEFAULT_TOL) -> CheckVerdict:
    _require_dims(S, 4, 3)
    c = context(S, x)
    c.require_hwc()
    r = partial_connection_residual_over_H(S, d_plus_christoffels(c), None, c)
    return CheckVerdict("check_4to3_ahs", {"hwc": c.hwc_residual, "partial connection": r}, tol)
