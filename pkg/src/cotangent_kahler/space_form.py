"""Conformal chart models of the constant-curvature base manifold.

One chart formula serves every sign of the curvature ``c``::

    g_ij(x) = delta_ij / (1 + (c/4) |x|^2)^2

For ``c < 0`` this is the Poincare ball of radius ``2/sqrt(-c)``; for
``c > 0`` it is stereographic projection of the sphere (all points but
one); ``c = 0`` is Euclidean space.

Curvature convention: ``R(d_i, d_j) d_k = R^h_kij d_h`` with
``R^h_kij = d_i Gamma^h_jk - d_j Gamma^h_ik + Gamma^h_il Gamma^l_jk
- Gamma^h_jl Gamma^l_ik``, stored as ``riemann[h, k, i, j]``.  In this
convention a space form satisfies
``R^h_kij = c (delta^h_i g_jk - delta^h_j g_ik)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor_calculus as tc
from .exceptions import DomainViolation
from .tensor_calculus import FrameTensor, Jet


@dataclass(frozen=True)
class SpaceFormModel:
    """Base manifold of dimension ``n`` and constant sectional curvature ``c``."""

    n: int
    c: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not 2 <= self.n <= 4:
            raise ValueError("dimension n must be an integer in 2..4")
        if not math.isfinite(self.c):
            raise ValueError("curvature c must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", float(self.c))

    @property
    def chart_radius(self) -> float:
        """Bound on ``|x|`` for chart points (``inf`` unless ``c < 0``)."""
        if self.c >= 0:
            return math.inf
        return 2.0 / math.sqrt(-self.c)

    def contains(self, x) -> bool:
        x = np.asarray(x.value if isinstance(x, Jet) else x, dtype=float)
        if x.shape != (self.n,):
            return False
        if self.c >= 0:
            return bool(np.all(np.isfinite(x)))
        return bool(x @ x < 4.0 / -self.c)

    def _check(self, x):
        if not self.contains(x):
            raise DomainViolation(f"point outside the chart domain of {self}")

    def conformal_factor(self, x):
        """``1 / (1 + c|x|^2/4)^2``; works on arrays and jets alike."""
        self._check(x)
        s = (x * x).sum()
        return (1.0 + 0.25 * self.c * s) ** -2

    def metric_field(self, x):
        """Metric matrix ``g_ij`` at ``x`` (array or jet)."""
        return self.conformal_factor(x) * np.eye(self.n)


@dataclass(frozen=True)
class BaseGeometry:
    """Metric, inverse, Christoffel symbols and curvature at one chart point."""

    metric: FrameTensor
    inverse_metric: FrameTensor
    christoffel: FrameTensor
    riemann: FrameTensor


# -- jet level ---------------------------------------------------------------

@dataclass(frozen=True)
class BaseJets:
    """Base quantities as jets in the seed variables of ``q``.

    Orders drop with each differentiation: if ``g`` has order k then
    ``gamma`` has order k-1 and ``riemann`` order k-2.
    """

    g: Jet
    ginv: Jet
    gamma: Jet
    riemann: Jet


def base_jets(model: SpaceFormModel, q: Jet, qvars: slice | None = None) -> BaseJets:
    """Compute base geometry jets from a jet-valued chart point ``q``.

    ``qvars`` selects which seed variables are the chart coordinates
    (defaults to all of them).
    """
    if q.order < 2:
        raise ValueError("need an order >= 2 jet to reach curvature")
    sel = qvars if qvars is not None else slice(None)
    g = model.metric_field(q)
    ginv = tc.inv(g, spd=True)
    # dg[a, b, l] = d_l g_ab
    dg = g.grad()[:, :, sel]
    lower = 0.5 * (tc.einsum("jli->ijl", dg) + tc.einsum("ilj->ijl", dg) - dg)
    gamma = tc.einsum("kl,ijl->kij", ginv, lower)
    # dgam[k, j, h, i] = d_i Gamma^k_jh
    dgam = gamma.grad()[:, :, :, sel]
    riem = (
        tc.einsum("kjhi->khij", dgam)
        - tc.einsum("kihj->khij", dgam)
        + tc.einsum("kil,ljh->khij", gamma, gamma)
        - tc.einsum("kjl,lih->khij", gamma, gamma)
    )
    return BaseJets(g, ginv, gamma, riem)


def _base_at(model: SpaceFormModel, x) -> BaseJets:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"chart point must have length {model.n}")
    model._check(x)
    return base_jets(model, Jet.variables(x, 2))


# -- public operations -------------------------------------------------------

def chart_metric(model: SpaceFormModel, x) -> FrameTensor:
    x = np.asarray(x, dtype=float)
    return FrameTensor((0, 2), model.metric_field(x))


def christoffel(model: SpaceFormModel, x) -> FrameTensor:
    """Christoffel symbols ``Gamma^k_ij`` as ``components[k, i, j]``."""
    return FrameTensor((1, 2), _base_at(model, x).gamma.value)


def riemann(model: SpaceFormModel, x) -> FrameTensor:
    """Curvature components ``R^h_kij`` as ``components[h, k, i, j]``."""
    return FrameTensor((1, 3), _base_at(model, x).riemann.value)


def base_geometry(model: SpaceFormModel, x) -> BaseGeometry:
    b = _base_at(model, x)
    return BaseGeometry(
        metric=FrameTensor((0, 2), b.g.value),
        inverse_metric=FrameTensor((2, 0), b.ginv.value),
        christoffel=FrameTensor((1, 2), b.gamma.value),
        riemann=FrameTensor((1, 3), b.riemann.value),
    )


def space_form_riemann(c: float, g: np.ndarray) -> np.ndarray:
    """``c (delta^h_i g_jk - delta^h_j g_ik)`` laid out as ``[h, k, i, j]``."""
    n = g.shape[0]
    d = np.eye(n)
    return c * (np.einsum("hi,jk->hkij", d, g) - np.einsum("hj,ik->hkij", d, g))


def space_form_residual(model: SpaceFormModel, x) -> float:
    b = _base_at(model, x)
    return float(np.max(np.abs(b.riemann.value - space_form_riemann(model.c, b.g.value))))


def bianchi_residual(model: SpaceFormModel, x) -> float:
    """Max of ``R^h_kij + R^h_ijk + R^h_jki`` over all index values."""
    r = _base_at(model, x).riemann.value
    cyc = r + np.einsum("hijk->hkij", r) + np.einsum("hjki->hkij", r)
    return float(np.max(np.abs(cyc)))


def metric_compatibility_residual(model: SpaceFormModel, x) -> float:
    """Max of ``d_i g_jk - Gamma^l_ij g_lk - Gamma^l_ik g_jl``."""
    b = _base_at(model, x)
    dg = np.moveaxis(b.g.derivs[0], 0, -1)  # [j, k, i]
    gam, g = b.gamma.value, b.g.value
    res = (np.einsum("jki->ijk", dg)
           - np.einsum("lij,lk->ijk", gam, g)
           - np.einsum("lik,jl->ijk", gam, g))
    return float(np.max(np.abs(res)))
