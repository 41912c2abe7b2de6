"""Truncated Taylor jets, frame-tagged component arrays and SPD inversion.

A :class:`Jet` carries an array value together with every partial
derivative of that value up to order three with respect to a fixed set of
``nvars`` seed variables.  Derivative arrays are stored with the derivative
axes *leading*::

    derivs[0].shape == (nvars,) + value.shape
    derivs[1].shape == (nvars, nvars) + value.shape
    derivs[2].shape == (nvars, nvars, nvars) + value.shape

Arithmetic propagates derivatives with the Leibniz and Faa di Bruno rules,
so results are exact up to floating point rounding.  Mixed partials are
stored canonically (every permutation of a multi-index reads the entry of
the sorted multi-index), which makes them symmetric bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .exceptions import DomainViolation, FrameMismatchError

MAX_ORDER = 3

_DERIV_LETTERS = "ABC"


@lru_cache(maxsize=None)
def _canonical_index(nvars: int, k: int):
    grids = np.array(list(product(range(nvars), repeat=k))).reshape((nvars,) * k + (k,))
    srt = np.sort(grids, axis=-1)
    return tuple(srt[..., a] for a in range(k))


def _canon(d: np.ndarray, k: int) -> np.ndarray:
    if k < 2:
        return d
    return d[_canonical_index(d.shape[0], k)]


def _bcast(d: np.ndarray, k: int, shape: tuple) -> np.ndarray:
    """Broadcast an array with ``k`` leading derivative axes to value ``shape``."""
    lead, vshape = d.shape[:k], d.shape[k:]
    pad = len(shape) - len(vshape)
    if pad < 0:
        raise ValueError("cannot broadcast to a lower-rank shape")
    return np.broadcast_to(d.reshape(lead + (1,) * pad + vshape), lead + tuple(shape))


def _sym21(y: np.ndarray) -> np.ndarray:
    # y[i,j,k] = a2[i,j] * b1[k]; sum over the three splits {ij|k}, {ik|j}, {jk|i}
    return y + y.swapaxes(1, 2) + np.moveaxis(y, 2, 0)


def _sym12(z: np.ndarray) -> np.ndarray:
    # z[i,j,k] = a1[i] * b2[j,k]
    return z + z.swapaxes(0, 1) + np.moveaxis(z, 0, 2)


class Jet:
    """Array value with exact partial derivatives up to a fixed order.

    Parameters
    ----------
    value : array_like
        The value of the field.
    derivs : sequence of ndarray
        Derivative arrays of increasing order (see module docstring).
        An empty sequence gives an order-0 jet.
    """

    __array_ufunc__ = None
    __slots__ = ("value", "derivs")

    def __init__(self, value, derivs: Sequence[np.ndarray] = (), canonical: bool = False):
        self.value = np.asarray(value, dtype=float)
        ds = [np.asarray(d, dtype=float) for d in derivs]
        if len(ds) > MAX_ORDER:
            raise ValueError(f"jets are limited to order {MAX_ORDER}")
        if not canonical:
            ds = [_canon(d, k + 1) for k, d in enumerate(ds)]
        self.derivs = tuple(ds)

    # -- construction -------------------------------------------------
    @classmethod
    def variables(cls, point, order: int) -> "Jet":
        """Seed jet for the coordinate functions themselves at ``point``."""
        x = np.asarray(point, dtype=float)
        if x.ndim != 1:
            raise ValueError("point must be a 1-d coordinate vector")
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in 0..{MAX_ORDER}")
        m = x.shape[0]
        ds = [np.eye(m)] + [np.zeros((m,) * (k + 1) + (m,)) for k in range(1, order)]
        return cls(x, ds[:order], canonical=True)

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        v = np.asarray(value, dtype=float)
        return cls(v, [np.zeros((nvars,) * (k + 1) + v.shape) for k in range(order)], canonical=True)

    # -- basic properties ---------------------------------------------
    @property
    def order(self) -> int:
        return len(self.derivs)

    @property
    def nvars(self) -> int:
        return self.derivs[0].shape[0] if self.derivs else 0

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def gradient(self) -> np.ndarray:
        """First partials with the derivative axis last."""
        return np.moveaxis(self.derivs[0], 0, -1)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, nvars={self.nvars})"

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.value, self.derivs[:order], canonical=True)

    def partial(self, i: int) -> "Jet":
        """Partial derivative along seed variable ``i`` (order drops by one)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.derivs[0][i], [d[i] for d in self.derivs[1:]], canonical=True)

    def grad(self) -> "Jet":
        """All first partials as a jet with a new trailing axis of length ``nvars``."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        v = np.moveaxis(self.derivs[0], 0, -1)
        ds = [np.moveaxis(d, k + 1, -1) for k, d in enumerate(self.derivs[1:])]
        return Jet(v, ds, canonical=True)

    # -- shape manipulation -------------------------------------------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(
            self.value[idx],
            [d[(slice(None),) * (k + 1) + idx] for k, d in enumerate(self.derivs)],
            canonical=True,
        )

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return Jet(
            self.value.transpose(axes),
            [d.transpose(tuple(range(k + 1)) + tuple(a + k + 1 for a in axes))
             for k, d in enumerate(self.derivs)],
            canonical=True,
        )

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        v = self.value.reshape(shape)
        return Jet(v, [d.reshape(d.shape[:k + 1] + v.shape) for k, d in enumerate(self.derivs)],
                   canonical=True)

    def sum(self, axis=None) -> "Jet":
        nd = self.ndim
        if axis is None:
            axes = tuple(range(nd))
        elif isinstance(axis, int):
            axes = (axis % nd,)
        else:
            axes = tuple(a % nd for a in axis)
        return Jet(
            self.value.sum(axis=axes),
            [d.sum(axis=tuple(a + k + 1 for a in axes)) for k, d in enumerate(self.derivs)],
            canonical=True,
        )

    # -- arithmetic ---------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(-self.value, [-d for d in self.derivs], canonical=True)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            shape = np.broadcast_shapes(self.shape, other.shape)
            ds = []
            for k in range(order):
                ds.append(_bcast(self.derivs[k], k + 1, shape) + _bcast(other.derivs[k], k + 1, shape))
            return Jet(self.value + other.value, ds, canonical=True)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        ds = [_bcast(d, k + 1, shape).copy() for k, d in enumerate(self.derivs)]
        return Jet(self.value + other, ds, canonical=True)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return _leibniz(self, other, _elementwise_product)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        return Jet(self.value * other, [_bcast(d, k + 1, shape) * other for k, d in enumerate(self.derivs)],
                   canonical=True)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise DomainViolation("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, exponent) -> "Jet":
        if isinstance(exponent, Jet):
            raise TypeError("jet exponents are not supported")
        r = float(exponent)
        if r == 0:
            return Jet.constant(np.ones(self.shape), self.nvars, self.order)
        if r == 1:
            return self
        if r == 2:
            return self * self
        u = self.value
        if r < 0 and np.any(u == 0):
            raise DomainViolation("zero raised to a negative power")
        if not r.is_integer() and np.any(u <= 0):
            raise DomainViolation("non-positive base raised to a fractional power")
        coeffs = [u ** r, r * u ** (r - 1), r * (r - 1) * u ** (r - 2), r * (r - 1) * (r - 2) * u ** (r - 3)]
        return self.compose(coeffs)

    def reciprocal(self) -> "Jet":
        u = self.value
        if np.any(u == 0):
            raise DomainViolation("division by zero")
        inv = 1.0 / u
        return self.compose([inv, -inv ** 2, 2 * inv ** 3, -6 * inv ** 4])

    def sqrt(self) -> "Jet":
        return self ** 0.5

    def compose(self, coeffs: Sequence[np.ndarray]) -> "Jet":
        """Apply an elementwise univariate function given its derivatives.

        ``coeffs[k]`` is the k-th derivative of the function evaluated at
        ``self.value``; at least ``order + 1`` entries are required.
        """
        f = [np.asarray(c, dtype=float) for c in coeffs]
        ds = []
        if self.order >= 1:
            u1 = self.derivs[0]
            ds.append(f[1] * u1)
        if self.order >= 2:
            u2 = self.derivs[1]
            u11 = u1[:, None] * u1[None, :]
            ds.append(f[2] * u11 + f[1] * u2)
        if self.order >= 3:
            u3 = self.derivs[2]
            u111 = u11[:, :, None] * u1[None, None, :]
            u21 = u2[:, :, None] * u1[None, None, :]
            ds.append(f[3] * u111 + f[2] * _sym21(u21) + f[1] * u3)
        return Jet(f[0], ds)


# -- bilinear propagation ---------------------------------------------------

def _elementwise_product(x, y, kx, ky, shape):
    x = _bcast(x, kx, shape)
    y = _bcast(y, ky, shape)
    x = x.reshape(x.shape[:kx] + (1,) * ky + shape)
    y = y.reshape((1,) * kx + y.shape)
    return x * y


def _leibniz(a, b, bilinear, shape=None):
    """Derivatives of ``bilinear(a, b)`` for jets or plain arrays ``a``, ``b``."""
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    av = a.value if ja else np.asarray(a, dtype=float)
    bv = b.value if jb else np.asarray(b, dtype=float)
    ad = a.derivs if ja else ()
    bd = b.derivs if jb else ()
    if ja and jb:
        order = min(a.order, b.order)
    else:
        order = a.order if ja else (b.order if jb else 0)
    if shape is None:
        shape = np.broadcast_shapes(av.shape, bv.shape)

    def B(x, y, kx, ky):
        return bilinear(x, y, kx, ky, shape)

    value = B(av, bv, 0, 0)
    ds = []
    for k in range(1, order + 1):
        terms = []
        if ja:
            terms.append(B(ad[k - 1], bv, k, 0))
        if jb:
            terms.append(B(av, bd[k - 1], 0, k))
        if ja and jb:
            if k == 2:
                x = B(ad[0], bd[0], 1, 1)
                terms.append(x + x.swapaxes(0, 1))
            elif k == 3:
                terms.append(_sym21(B(ad[1], bd[0], 2, 1)))
                terms.append(_sym12(B(ad[0], bd[1], 1, 2)))
        ds.append(sum(terms[1:], terms[0]))
    return Jet(value, ds)


def einsum(subscripts: str, *operands):
    """``numpy.einsum`` for one or two operands, any of which may be a jet.

    Subscripts must be explicit (``->`` present), lowercase, and free of
    ellipses.
    """
    if "->" not in subscripts or "." in subscripts or any(ch.isupper() for ch in subscripts):
        raise ValueError("einsum subscripts must be explicit, lowercase, without ellipsis")
    ins, out = subscripts.replace(" ", "").split("->")
    ins = ins.split(",")
    if len(ins) != len(operands):
        raise ValueError("subscript count does not match operand count")
    if not any(isinstance(o, Jet) for o in operands):
        return np.einsum(subscripts, *operands)
    if len(operands) == 1:
        (a,) = operands
        L = _DERIV_LETTERS
        return Jet(
            np.einsum(subscripts, a.value),
            [np.einsum(f"{L[:k + 1]}{ins[0]}->{L[:k + 1]}{out}", d) for k, d in enumerate(a.derivs)],
        )
    if len(operands) != 2:
        raise ValueError("jet einsum supports one or two operands; chain the calls")
    sa, sb = ins

    def bilinear(x, y, kx, ky, shape):
        L = _DERIV_LETTERS
        lx, ly = L[:kx], L[kx:kx + ky]
        return np.einsum(f"{lx}{sa},{ly}{sb}->{lx}{ly}{out}", x, y)

    return _leibniz(operands[0], operands[1], bilinear, shape=())


def matmul(a, b):
    """Matrix product of 2-d jets/arrays."""
    return einsum("ij,jk->ik", a, b)


def stack(items: Sequence, axis: int = 0) -> Jet:
    """Stack jets (and plain arrays, treated as constants) along a new axis."""
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        return np.stack([np.asarray(x, dtype=float) for x in items], axis=axis)
    order = min(j.order for j in jets)
    nvars = jets[0].nvars
    full = [x.truncate(order) if isinstance(x, Jet) else Jet.constant(x, nvars, order) for x in items]
    shape = np.broadcast_shapes(*(j.shape for j in full))
    ax = axis % (len(shape) + 1)
    value = np.stack([np.broadcast_to(j.value, shape) for j in full], axis=ax)
    ds = []
    for k in range(order):
        ds.append(np.stack([_bcast(j.derivs[k], k + 1, shape) for j in full], axis=ax + k + 1))
    return Jet(value, ds, canonical=True)


def block(rows: Sequence[Sequence]) -> Jet:
    """Assemble a 2-d jet from a grid of 2-d blocks (like ``numpy.block``)."""
    return _vcat([_hcat(r) for r in rows])


def embed(x, shape: tuple, idx) -> Jet:
    """Zero jet/array of ``shape`` with ``x`` written into ``[idx]``."""
    if not isinstance(x, Jet):
        out = np.zeros(shape)
        out[idx] = x
        return out
    if not isinstance(idx, tuple):
        idx = (idx,)
    value = np.zeros(shape)
    value[idx] = x.value
    ds = []
    for k, d in enumerate(x.derivs):
        lead = d.shape[:k + 1]
        full = np.zeros(lead + tuple(shape))
        full[(slice(None),) * (k + 1) + idx] = d
        ds.append(full)
    return Jet(value, ds, canonical=True)


def _concat(items, axis):
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        return np.concatenate([np.asarray(x, dtype=float) for x in items], axis=axis)
    order = min(j.order for j in jets)
    nvars = jets[0].nvars
    full = [x.truncate(order) if isinstance(x, Jet) else Jet.constant(x, nvars, order) for x in items]
    value = np.concatenate([j.value for j in full], axis=axis)
    ds = [np.concatenate([j.derivs[k] for j in full], axis=axis + k + 1) for k in range(order)]
    return Jet(value, ds, canonical=True)


def _hcat(items):
    return _concat(items, 1)


def _vcat(items):
    return _concat(items, 0)


def inv(m, spd: bool = False):
    """Inverse of a square matrix jet, derivatives included.

    With ``spd=True`` the value is factorized by Cholesky and a
    :class:`DomainViolation` is raised when a pivot is not positive.
    """
    mv = m.value if isinstance(m, Jet) else np.asarray(m, dtype=float)
    if spd:
        try:
            factor = linalg.cho_factor(mv, lower=True, check_finite=True)
        except linalg.LinAlgError as exc:
            raise DomainViolation("matrix is not positive definite") from exc
        n = linalg.cho_solve(factor, np.eye(mv.shape[0]))
        n = 0.5 * (n + n.T)
    else:
        try:
            n = np.linalg.inv(mv)
        except np.linalg.LinAlgError as exc:
            raise DomainViolation("matrix is singular") from exc
    if not isinstance(m, Jet) or m.order == 0:
        return Jet(n) if isinstance(m, Jet) else n
    ds = []
    m1 = m.derivs[0]
    n1 = -n @ m1 @ n
    ds.append(n1)
    if m.order >= 2:
        m2 = m.derivs[1]
        x = m1[:, None] @ n1[None, :]
        n2 = -n @ (m2 @ n + x + x.swapaxes(0, 1))
        ds.append(n2)
    if m.order >= 3:
        m3 = m.derivs[2]
        n2c = _canon(n2, 2)
        y = m2[:, :, None] @ n1[None, None, :]
        z = m1[:, None, None] @ n2c[None, :, :]
        n3 = -n @ (m3 @ n + _sym21(y) + _sym12(z))
        ds.append(n3)
    return Jet(n, ds)


# -- tensor operations ------------------------------------------------

def jet_eval(field: Callable, point, order: int) -> Jet:
    """Evaluate ``field`` at ``point`` carrying all partials up to ``order``.

    ``field`` receives a jet whose value is the coordinate vector and must
    be built from jet-aware arithmetic (``+ - * /``, powers, :func:`einsum`).
    Division by zero raises :class:`DomainViolation`.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}")
    x = Jet.variables(point, order)
    out = field(x)
    if not isinstance(out, Jet):
        out = Jet.constant(out, x.nvars, order)
    return out


def fd_gradient(field: Callable, point, step: float) -> np.ndarray:
    """Central-difference gradient; truncation error is O(step**2)."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(point, dtype=float)
    grads = []
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        fp = np.asarray(field(x + e), dtype=float)
        fm = np.asarray(field(x - e), dtype=float)
        grads.append((fp - fm) / (2 * step))
    return np.moveaxis(np.array(grads), 0, -1)


FRAME_TAGS = ("coordinate", "adapted")


@dataclass(frozen=True)
class FrameTensor:
    """Dense components of a tensor of type (r, s) in a tagged frame.

    Contravariant indices come first in ``components``.
    """

    rank: tuple[int, int]
    components: np.ndarray
    frame_tag: str = "coordinate"

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", comps)
        r, s = self.rank
        if r < 0 or s < 0:
            raise ValueError("rank entries must be non-negative")
        if self.frame_tag not in FRAME_TAGS:
            raise ValueError(f"frame_tag must be one of {FRAME_TAGS}")
        if comps.ndim != r + s or len(set(comps.shape)) > 1:
            raise ValueError(f"components must have shape (dims,)*{r + s}, got {comps.shape}")

    @property
    def dims(self) -> int:
        return self.components.shape[0] if self.components.ndim else 1

    def _check(self, other: "FrameTensor"):
        if not isinstance(other, FrameTensor):
            return NotImplemented
        if other.frame_tag != self.frame_tag:
            raise FrameMismatchError(f"cannot combine {self.frame_tag} and {other.frame_tag} components")
        if other.rank != self.rank or other.components.shape != self.components.shape:
            raise ValueError("rank or dimension mismatch")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FrameTensor(self.rank, self.components + other.components, self.frame_tag)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FrameTensor(self.rank, self.components - other.components, self.frame_tag)

    def __mul__(self, scalar):
        if isinstance(scalar, FrameTensor):
            return NotImplemented
        return FrameTensor(self.rank, self.components * float(scalar), self.frame_tag)

    __rmul__ = __mul__

    def __neg__(self):
        return FrameTensor(self.rank, -self.components, self.frame_tag)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0


def invert_spd(m: FrameTensor, sym_tol: float = 1e-12) -> FrameTensor:
    """Inverse of a symmetric positive definite (0, 2) tensor as a (2, 0) tensor."""
    if m.rank != (0, 2):
        raise ValueError("invert_spd expects a (0, 2) tensor")
    a = m.components
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    return FrameTensor((2, 0), inv(a, spd=True), m.frame_tag)


def check_positive_definite(m) -> bool:
    """True iff the symmetric matrix admits a Cholesky factorization."""
    a = m.components if isinstance(m, FrameTensor) else np.asarray(m, dtype=float)
    try:
        linalg.cholesky(a, lower=True)
    except linalg.LinAlgError:
        return False
    return True
