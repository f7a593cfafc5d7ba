"""Second-order jets, charts, frames and Hodge duality.

A :class:`Jet` carries an array-valued quantity together with its first and
second partial derivatives with respect to the chart coordinates.  Arrays of
any shape are supported; derivative axes are always appended last, so a
``(3, 3)`` metric jet on a 4-dimensional chart has ``grad.shape == (3, 3, 4)``
and ``hess.shape == (3, 3, 4, 4)``.

Quantities obtained by differentiating a jet (``Jet.deriv``) only know their
first derivatives; for those ``hess`` is ``None`` and any operation that
would need the missing second derivatives propagates ``None`` instead of
inventing values.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, SingularMetric

__all__ = [
    "Jet", "Chart", "Frame", "coordinates", "constant", "jarray", "contract",
    "inv", "exp", "log", "sin", "cos", "sqrt", "power", "value_of",
    "gram_schmidt_frame", "hodge_star", "levi_civita_symbol", "form_norm",
    "wedge", "finite_difference",
]


def _sym(h):
    return 0.5 * (h + np.swapaxes(h, -1, -2))


class Jet:
    """Value, gradient and (optionally) Hessian of an array-valued field."""

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, val, grad, hess=None, symmetrize=True):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        if hess is not None:
            hess = np.asarray(hess, dtype=float)
            if symmetrize:
                hess = _sym(hess)
        self.hess = hess

    # -- structure -------------------------------------------------------
    @property
    def dim(self):
        return self.grad.shape[-1]

    @property
    def shape(self):
        return self.val.shape

    @property
    def order(self):
        return 1 if self.hess is None else 2

    def __repr__(self):
        return f"Jet(val={self.val!r}, grad={self.grad!r}, order={self.order})"

    def __getitem__(self, key):
        h = None if self.hess is None else self.hess[key]
        return Jet(self.val[key], self.grad[key], h, symmetrize=False)

    def __len__(self):
        return len(self.val)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def T(self):
        return self.swapaxes(0, 1)

    def swapaxes(self, a, b):
        h = None if self.hess is None else np.swapaxes(self.hess, a, b)
        return Jet(np.swapaxes(self.val, a, b), np.swapaxes(self.grad, a, b), h,
                   symmetrize=False)

    def reshape(self, *shape):
        d = self.dim
        h = None if self.hess is None else self.hess.reshape(*shape, d, d)
        return Jet(self.val.reshape(*shape), self.grad.reshape(*shape, d), h,
                   symmetrize=False)

    def sum(self, axis=None):
        if axis is None:
            axes = tuple(range(self.val.ndim))
        else:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
        h = None if self.hess is None else self.hess.sum(axis=axes)
        return Jet(self.val.sum(axis=axes), self.grad.sum(axis=axes), h,
                   symmetrize=False)

    def deriv(self):
        """First-order jet of the gradient; derivative index appended last."""
        if self.hess is None:
            raise ValueError("cannot differentiate a first-order jet")
        return Jet(self.grad, self.hess, None)

    def first_order(self):
        return Jet(self.val, self.grad, None)

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return constant(other, self.dim, with_hess=self.hess is not None)

    def __add__(self, other):
        o = self._coerce(other)
        h = None if (self.hess is None or o.hess is None) else self.hess + o.hess
        return Jet(self.val + o.val, self.grad + o.grad, h, symmetrize=False)

    __radd__ = __add__

    def __neg__(self):
        h = None if self.hess is None else -self.hess
        return Jet(-self.val, -self.grad, h, symmetrize=False)

    def __sub__(self, other):
        o = self._coerce(other)
        h = None if (self.hess is None or o.hess is None) else self.hess - o.hess
        return Jet(self.val - o.val, self.grad - o.grad, h, symmetrize=False)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            h = None if self.hess is None else self.hess * c[..., None, None]
            return Jet(self.val * c, self.grad * c[..., None], h, symmetrize=False)
        a, b = self, other
        val = a.val * b.val
        grad = a.val[..., None] * b.grad + b.val[..., None] * a.grad
        h = None
        if a.hess is not None and b.hess is not None:
            cross = a.grad[..., :, None] * b.grad[..., None, :]
            h = (a.val[..., None, None] * b.hess + b.val[..., None, None] * a.hess
                 + cross + np.swapaxes(cross, -1, -2))
        return Jet(val, grad, h, symmetrize=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            if np.any(c == 0):
                raise DomainError("division by zero")
            h = None if self.hess is None else self.hess / c[..., None, None]
            return Jet(self.val / c, self.grad / c[..., None], h, symmetrize=False)
        b = other
        if np.any(b.val == 0) or not np.all(np.isfinite(b.val)):
            raise DomainError("division by a jet whose value is zero")
        a = self
        q = a.val / b.val
        grad = (a.grad - q[..., None] * b.grad) / b.val[..., None]
        h = None
        if a.hess is not None and b.hess is not None:
            # (a - q b) = 0  =>  b q'' = a'' - q b'' - b' q'^T - q' b'^T
            cross = b.grad[..., :, None] * grad[..., None, :]
            h = (a.hess - q[..., None, None] * b.hess - cross
                 - np.swapaxes(cross, -1, -2)) / b.val[..., None, None]
        return Jet(q, grad, h)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        return power(self, p)

    def __rpow__(self, base):
        return power(self._coerce(base), self)


def constant(value, dim, with_hess=True):
    value = np.asarray(value, dtype=float)
    h = np.zeros(value.shape + (dim, dim)) if with_hess else None
    return Jet(value, np.zeros(value.shape + (dim,)), h, symmetrize=False)


def coordinates(point):
    """Identity jet of the chart coordinates at ``point``."""
    x = np.asarray(point, dtype=float)
    d = x.shape[0]
    return Jet(x, np.eye(d), np.zeros((d, d, d)), symmetrize=False)


def value_of(x):
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)


def _dim_of(items):
    for it in items:
        if isinstance(it, Jet):
            return it.dim, it.hess is not None
        if isinstance(it, (list, tuple)):
            r = _dim_of(it)
            if r is not None:
                return r
    return None


def jarray(nested, dim=None, with_hess=None):
    """Stack a (possibly nested) list of jets and numbers into one jet."""
    info = _dim_of([nested])
    if info is None:
        if dim is None:
            raise ValueError("cannot infer jet dimension from constants only")
        info = (dim, True if with_hess is None else with_hess)
    d, hh = info
    if with_hess is not None:
        hh = hh and with_hess

    def lift(item):
        if isinstance(item, (list, tuple)):
            return [lift(i) for i in item]
        if isinstance(item, Jet):
            return item
        return constant(item, d, with_hess=hh)

    def stack(item):
        if isinstance(item, Jet):
            return item
        parts = [stack(i) for i in item]
        has_h = all(p.hess is not None for p in parts)
        h = np.stack([p.hess for p in parts]) if has_h else None
        return Jet(np.stack([p.val for p in parts]), np.stack([p.grad for p in parts]),
                   h, symmetrize=False)

    return stack(lift(nested))


def _einsum(sub, args):
    return np.einsum(sub, *args)


@functools.lru_cache(maxsize=None)
def _contract_plan(spec, jets, with_hess):
    """Subscripts for the value, gradient and Hessian terms of a contraction."""
    ins, out = spec.replace(" ", "").split("->")
    ins = ins.split(",")
    grad_terms, hess_terms = [], []
    for k in jets:
        sub = list(ins)
        sub[k] = ins[k] + "Y"
        grad_terms.append((",".join(sub) + "->" + out + "Y", ((k, 1),)))
    if with_hess:
        for k in jets:
            sub = list(ins)
            sub[k] = ins[k] + "YZ"
            hess_terms.append((",".join(sub) + "->" + out + "YZ", ((k, 2),)))
        for k, l in itertools.permutations(jets, 2):
            sub = list(ins)
            sub[k] = ins[k] + "Y"
            sub[l] = ins[l] + "Z"
            hess_terms.append((",".join(sub) + "->" + out + "YZ", ((k, 1), (l, 1))))
    return len(ins), tuple(grad_terms), tuple(hess_terms)


def contract(spec, *ops):
    """Einstein summation over jets and plain arrays with the Leibniz rule."""
    jets = tuple(i for i, o in enumerate(ops) if isinstance(o, Jet))
    with_hess = bool(jets) and all(ops[k].hess is not None for k in jets)
    n_in, grad_terms, hess_terms = _contract_plan(spec, jets, with_hess)
    if n_in != len(ops):
        raise ValueError("operand count does not match subscripts")
    vals = [o.val if isinstance(o, Jet) else np.asarray(o, dtype=float) for o in ops]
    val = _einsum(spec, vals)
    if not jets:
        return val

    def term(sub, slots):
        args = list(vals)
        for k, order in slots:
            args[k] = ops[k].grad if order == 1 else ops[k].hess
        return _einsum(sub, args)

    grad = sum(term(sub, slots) for sub, slots in grad_terms)
    hess = sum(term(sub, slots) for sub, slots in hess_terms) if with_hess else None
    return Jet(val, grad, hess)


def inv(m):
    """Matrix inverse of a square jet (or plain array)."""
    if not isinstance(m, Jet):
        return np.linalg.inv(m)
    try:
        mi = np.linalg.inv(m.val)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("singular matrix") from exc
    dm = np.einsum("ij,jkY,kl->ilY", mi, m.grad, mi)
    grad = -dm
    hess = None
    if m.hess is not None:
        t = np.einsum("ijY,jkZ,kl->ilYZ", dm, m.grad, mi)
        hess = t + np.swapaxes(t, -1, -2) - np.einsum("ij,jkYZ,kl->ilYZ", mi, m.hess, mi)
    return Jet(mi, grad, hess)


def _compose(u, f0, f1, f2):
    """Chain rule for an elementwise function with values f, f', f''."""
    grad = f1[..., None] * u.grad
    h = None
    if u.hess is not None:
        outer = u.grad[..., :, None] * u.grad[..., None, :]
        h = f2[..., None, None] * outer + f1[..., None, None] * u.hess
    return Jet(f0, grad, h, symmetrize=False)


def exp(u):
    if not isinstance(u, Jet):
        return np.exp(u)
    e = np.exp(u.val)
    return _compose(u, e, e, e)


def log(u):
    if not isinstance(u, Jet):
        if np.any(np.asarray(u) <= 0):
            raise DomainError("log of a non-positive value")
        return np.log(u)
    if np.any(u.val <= 0):
        raise DomainError("log of a non-positive value")
    return _compose(u, np.log(u.val), 1.0 / u.val, -1.0 / u.val ** 2)


def sin(u):
    if not isinstance(u, Jet):
        return np.sin(u)
    s, c = np.sin(u.val), np.cos(u.val)
    return _compose(u, s, c, -s)


def cos(u):
    if not isinstance(u, Jet):
        return np.cos(u)
    s, c = np.sin(u.val), np.cos(u.val)
    return _compose(u, c, -s, -c)


def sqrt(u):
    if not isinstance(u, Jet):
        if np.any(np.asarray(u) < 0):
            raise DomainError("sqrt of a negative value")
        return np.sqrt(u)
    if np.any(u.val <= 0):
        raise DomainError("sqrt at or below its branch point")
    r = np.sqrt(u.val)
    return _compose(u, r, 0.5 / r, -0.25 / (r * u.val))


def power(u, p):
    """``u ** p``; integer exponents accept negative bases."""
    if isinstance(p, Jet):
        if not isinstance(u, Jet):
            u = constant(u, p.dim, with_hess=p.hess is not None)
        if np.any(u.val <= 0):
            raise DomainError("jet exponent requires a positive base")
        out = exp(p * log(u))
        out.val = np.power(u.val, p.val)
        return out
    p = float(p)
    integral = p.is_integer()
    if not isinstance(u, Jet):
        base = np.asarray(u, dtype=float)
        if not integral and np.any(base < 0):
            raise DomainError("fractional power of a negative value")
        if p < 0 and np.any(base == 0):
            raise DomainError("negative power of zero")
        return np.power(base, p)
    if not integral and np.any(u.val <= 0):
        raise DomainError("fractional power at or below zero")
    if p < 0 and np.any(u.val == 0):
        raise DomainError("negative power of zero")
    if p == 0:
        return constant(np.ones_like(u.val), u.dim, with_hess=u.hess is not None)
    f0 = np.power(u.val, p)
    f1 = p * np.power(u.val, p - 1) if p != 1 else np.ones_like(u.val)
    if p in (1.0, 2.0):
        f2 = np.full_like(u.val, p * (p - 1))
    else:
        f2 = p * (p - 1) * np.power(u.val, p - 2)
    return _compose(u, f0, f1, f2)


def finite_difference(f, point, step=1e-5):
    """Central finite-difference gradient and Hessian of a scalar function.

    Independent oracle for jet propagation; not used by the library itself.
    """
    x = np.asarray(point, dtype=float)
    d = len(x)
    f0 = float(f(x))
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    e = np.eye(d) * step
    for i in range(d):
        fp, fm = float(f(x + e[i])), float(f(x - e[i]))
        grad[i] = (fp - fm) / (2 * step)
        hess[i, i] = (fp - 2 * f0 + fm) / step ** 2
        for j in range(i):
            v = (f(x + e[i] + e[j]) - f(x + e[i] - e[j])
                 - f(x - e[i] + e[j]) + f(x - e[i] - e[j])) / (4 * step ** 2)
            hess[i, j] = hess[j, i] = v
    return f0, grad, hess


# -- charts and frames ----------------------------------------------------

CHART_VARIABLES = {1: ("x",), 2: ("x", "y"), 3: ("x", "y", "z"), 4: ("x", "y", "z", "t")}


@dataclass(frozen=True)
class Chart:
    """Coordinate box; points near ``singular_points`` are excluded.

    A singular point with fewer coordinates than the chart excludes a
    cylinder: distance is measured on the leading coordinates only.
    """

    dim: int
    box: tuple
    excluded_radius: float | None = None
    singular_points: tuple = ()

    def __post_init__(self):
        if self.dim not in (1, 2, 3, 4):
            raise ValueError(f"chart dimension must be 1..4, got {self.dim}")
        box = tuple((float(a), float(b)) for a, b in self.box)
        if len(box) != self.dim:
            raise ValueError("box must have one interval per axis")
        if any(not a <= b for a, b in box):
            raise ValueError("empty box interval")
        object.__setattr__(self, "box", box)
        pts = tuple(tuple(float(c) for c in p) for p in self.singular_points)
        if self.excluded_radius is not None and not pts:
            pts = ((0.0,) * self.dim,)
        object.__setattr__(self, "singular_points", pts)

    @property
    def variables(self):
        return CHART_VARIABLES[self.dim]

    def admits(self, x):
        x = np.asarray(x, dtype=float)
        if any(not a <= xi <= b for xi, (a, b) in zip(x, self.box)):
            return False
        if self.excluded_radius is not None:
            for p in self.singular_points:
                if np.linalg.norm(x[: len(p)] - np.asarray(p)) <= self.excluded_radius:
                    return False
        return True

    def sample(self, n, seed):
        """``n`` admissible points from a counter-based (Philox) stream."""
        rng = np.random.Generator(np.random.Philox(key=int(seed) & (2 ** 64 - 1)))
        lo = np.array([a for a, _ in self.box])
        hi = np.array([b for _, b in self.box])
        pts = []
        tries = 0
        while len(pts) < n:
            x = lo + (hi - lo) * rng.random(self.dim)
            tries += 1
            if self.admits(x):
                pts.append(x)
            if tries > 1000 * max(n, 1):
                raise ValueError("exclusion radius leaves no admissible points")
        return np.array(pts)


@dataclass(frozen=True)
class Frame:
    """Tangent frame at a point; ``vectors[:, i]`` is the i-th leg."""

    vectors: np.ndarray
    orthonormal: bool = False
    oriented: bool = False

    def __post_init__(self):
        object.__setattr__(self, "vectors", np.asarray(self.vectors, dtype=float))

    def __len__(self):
        return self.vectors.shape[1]

    def __getitem__(self, i):
        return self.vectors[:, i]

    def gram(self, g):
        return self.vectors.T @ np.asarray(g) @ self.vectors


def gram_schmidt_frame(g, seed_basis=None, orientation=1):
    """g-orthonormal frame whose first leg is parallel to the first seed.

    The result is positively oriented for ``orientation`` (+1 means the
    coordinate order is positive); the last leg is flipped when needed.
    """
    g = np.asarray(value_of(g), dtype=float)
    d = g.shape[0]
    if np.min(np.linalg.eigvalsh(0.5 * (g + g.T))) <= 1e-10:
        raise SingularMetric("metric is not positive-definite")
    seeds = np.eye(d) if seed_basis is None else np.asarray(seed_basis, dtype=float)
    legs = []
    for i in range(d):
        v = seeds[:, i].copy()
        for _ in range(2):
            for e in legs:
                v = v - (e @ g @ v) * e
        n2 = v @ g @ v
        if n2 <= 1e-24:
            raise SingularMetric("seed basis is degenerate")
        legs.append(v / math.sqrt(n2))
    vecs = np.array(legs).T
    if orientation * np.linalg.det(vecs) < 0:
        vecs[:, -1] = -vecs[:, -1]
    return Frame(vecs, orthonormal=True, oriented=True)


# -- exterior algebra -----------------------------------------------------

def levi_civita_symbol(d):
    eps = np.zeros((d,) * d)
    for perm in itertools.permutations(range(d)):
        inversions = sum(1 for i in range(d) for j in range(i + 1, d) if perm[i] > perm[j])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


_EPS = {d: levi_civita_symbol(d) for d in (1, 2, 3, 4)}


def _raise_all(form, ginv):
    out = form
    for axis in range(form.ndim):
        out = np.moveaxis(np.tensordot(ginv, out, axes=([1], [axis])), 0, axis)
    return out


def hodge_star(g, form, orientation=1):
    """Metric Hodge dual of a p-form given as an antisymmetric array.

    ``form`` has p axes of length d (a 0-form is a 0-d array).
    ``*(e^1 ∧ ... ∧ e^p) = e^{p+1} ∧ ... ∧ e^d`` for a positive orthonormal
    coframe.
    """
    g = np.asarray(value_of(g), dtype=float)
    form = np.asarray(value_of(form), dtype=float)
    d = g.shape[0]
    p = form.ndim
    if p > d:
        raise ValueError("form degree exceeds dimension")
    det = np.linalg.det(g)
    if det <= 0:
        raise SingularMetric("metric is not positive-definite")
    ginv = np.linalg.inv(g)
    up = _raise_all(form, ginv)
    eps = _EPS[d] * math.sqrt(det) * orientation
    letters = "abcdefgh"
    src = letters[:p]
    rest = letters[p:d]
    out = np.einsum(f"{src},{src}{rest}->{rest}", up, eps) / math.factorial(p)
    return out


def wedge(a, b):
    """Wedge product of antisymmetric arrays (degrees p and q)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p, q = a.ndim, b.ndim
    if p == 0 or q == 0:
        return a * b
    prod = np.multiply.outer(a, b)
    n = p + q
    out = np.zeros_like(prod)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        sign = -1.0 if inversions % 2 else 1.0
        out = out + sign * np.transpose(prod, perm)
    return out / (math.factorial(p) * math.factorial(q))


def form_norm(g, form):
    """Pointwise norm of a p-form, |e^1∧...∧e^p| = 1 for orthonormal coframes."""
    g = np.asarray(value_of(g), dtype=float)
    form = np.asarray(value_of(form), dtype=float)
    p = form.ndim
    if p == 0:
        return float(abs(form))
    up = _raise_all(form, np.linalg.inv(g))
    return float(math.sqrt(max(np.sum(up * form) / math.factorial(p), 0.0)))


def exterior_derivative(jet_form):
    """d of a p-form jet (p axes + derivative axis); returns value only."""
    g = jet_form.grad
    p = jet_form.val.ndim
    # (dβ)_{i0 i1..ip} = Σ_k (-1)^k ∂_{ik} β_{i0..îk..ip}
    moved = np.moveaxis(g, -1, 0)
    return wedge_antisym(moved, p)


def wedge_antisym(arr, p):
    """Antisymmetrize ∂_{i0} β_{i1..ip} into a (p+1)-form with unit weight."""
    n = p + 1
    out = np.zeros_like(arr)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        sign = -1.0 if inversions % 2 else 1.0
        out = out + sign * np.transpose(arr, perm)
    return out / math.factorial(p)
