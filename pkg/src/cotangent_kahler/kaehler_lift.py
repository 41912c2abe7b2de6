"""The lifted metric G, almost complex structure J and their integrability.

The metric is block diagonal in the adapted frame::

    G(delta_i, delta_j) = G_ij = A g_ij + v p_i p_j
    G(d/dp_i, d/dp_j)   = H^ij = g^ij / A + w g0^i g0^j,   w = -v / (A (A + 2 t v))

with ``g0^i = p_h g^hi``.  ``J`` maps ``delta_i -> G_ik d/dp_k`` and
``d/dp_i -> -H^ik delta_k``; as a matrix acting on frame components it is
``[[0, -H], [G, 0]]``.  ``v`` is a constant: either the integrable value
``-c/A`` or an explicit override used for negative controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from . import tensor_calculus as tc
from .adapted_frame import (
    CotangentPoint,
    FrameJets,
    frame_jets,
    to_frame,
    vector_field_bracket,
)
from .exceptions import DomainViolation
from .space_form import SpaceFormModel
from .tensor_calculus import Jet


@dataclass(frozen=True)
class LiftParameters:
    """Constant ``A > 0`` and an optional override for ``v``.

    With ``v=None`` the integrable choice ``v = -c/A`` is used.
    """

    A: float
    v: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.A) and self.A > 0):
            raise ValueError("A must be a finite positive number")
        object.__setattr__(self, "A", float(self.A))
        if self.v is not None:
            if not math.isfinite(self.v):
                raise ValueError("v override must be finite")
            object.__setattr__(self, "v", float(self.v))

    def v_for(self, model: SpaceFormModel) -> float:
        return -model.c / self.A if self.v is None else self.v

    def is_integrable(self, model: SpaceFormModel) -> bool:
        return self.v is None or self.v * self.A + model.c == 0


@dataclass(frozen=True)
class LiftedMetric:
    G: np.ndarray
    H: np.ndarray
    w: float
    t: float
    v: float


@dataclass(frozen=True)
class LiftJets:
    """Lifted-structure jets on top of :class:`FrameJets` (G, H of seed order)."""

    frame: FrameJets
    A: float
    v: float
    w: Jet
    G: Jet
    H: Jet
    metric: Jet
    J: Jet

    @property
    def n(self) -> int:
        return self.frame.n


def domain_value(model: SpaceFormModel, params: LiftParameters, t: float) -> float:
    """``A + 2 t v``; the lifted metric is positive definite iff this is positive."""
    return params.A + 2.0 * t * params.v_for(model)


def lift_jets_from_frame(model: SpaceFormModel, params: LiftParameters, fj: FrameJets) -> LiftJets:
    A, v = params.A, params.v_for(model)
    n = model.n
    t = fj.t
    denom = A + 2.0 * t * v
    if params.v is None:
        # same expression as tube_check, so both agree exactly at the boundary
        if not A * A - 2.0 * model.c * float(t.value) > 0:
            raise DomainViolation(f"2ct = {2.0 * model.c * float(t.value):.6g} >= A^2: outside the tube")
    elif not denom.value > 0:
        raise DomainViolation(f"A + 2tv = {float(denom.value):.6g} <= 0: outside the domain of G")
    p = fj.p
    ginv = fj.base.ginv
    g0 = tc.einsum("h,hi->i", p, ginv)
    w = -v * (A * denom).reciprocal()
    G = A * fj.base.g + v * tc.einsum("i,j->ij", p, p)
    H = ginv * (1.0 / A) + w * tc.einsum("i,j->ij", g0, g0)
    zero = np.zeros((n, n))
    metric = tc.block([[G, zero], [zero, H]])
    J = tc.block([[zero, -H], [G, zero]])
    return LiftJets(fj, A, v, w, G, H, metric, J)


@lru_cache(maxsize=64)
def lift_jets(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> LiftJets:
    return lift_jets_from_frame(model, params, frame_jets(model, pt))


# -- metric, J, fundamental form ----------------------------------------------

def lifted_metric_components(model: SpaceFormModel, params: LiftParameters,
                             pt: CotangentPoint) -> LiftedMetric:
    lj = lift_jets(model, params, pt)
    return LiftedMetric(lj.G.value.copy(), lj.H.value.copy(), float(lj.w.value),
                        float(lj.frame.t.value), lj.v)


def integrable_inverse_closed_form(model: SpaceFormModel, params: LiftParameters,
                                   pt: CotangentPoint) -> np.ndarray:
    """``H^ij = g^ij / A + c / (A (A^2 - 2ct)) g0^i g0^j`` (integrable ``v`` only)."""
    lj = lift_jets(model, params, pt)
    A, c = params.A, model.c
    ginv = lj.frame.base.ginv.value
    t = float(lj.frame.t.value)
    g0 = np.array(pt.p) @ ginv
    return ginv / A + c / (A * (A * A - 2 * c * t)) * np.outer(g0, g0)


def metric_G(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> np.ndarray:
    """2n x 2n matrix of G in the adapted frame."""
    return lift_jets(model, params, pt).metric.value.copy()


def almost_complex_J(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> np.ndarray:
    """Matrix of J acting on adapted-frame components (column b is ``J E_b``)."""
    return lift_jets(model, params, pt).J.value.copy()


def j_squared_residual(model, params, pt) -> float:
    J = almost_complex_J(model, params, pt)
    return float(np.max(np.abs(J @ J + np.eye(J.shape[0]))))


def hermitian_residual(model, params, pt, vectors: Optional[np.ndarray] = None) -> float:
    """Max of ``|G(JX, JY) - G(X, Y)|`` over frame pairs and optional extra vectors."""
    G = metric_G(model, params, pt)
    J = almost_complex_J(model, params, pt)
    res = float(np.max(np.abs(J.T @ G @ J - G)))
    if vectors is not None:
        X = np.atleast_2d(vectors)
        JX = X @ J.T
        res = max(res, float(np.max(np.abs(JX @ G @ JX.T - X @ G @ X.T))))
    return res


def inverse_residual(model, params, pt) -> float:
    """``G_ij H^jk - delta^k_i``."""
    lm = lifted_metric_components(model, params, pt)
    return float(np.max(np.abs(lm.G @ lm.H - np.eye(model.n))))


def _fundamental_form_jets(lj: LiftJets) -> tuple[Jet, Jet]:
    phi = tc.matmul(lj.metric, lj.J)
    theta = lj.frame.coframe
    coord = tc.einsum("am,an->mn", theta, tc.einsum("ab,bn->an", phi, theta))
    return phi, coord


def fundamental_form(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint,
                     frame: str = "adapted") -> np.ndarray:
    """``phi(X, Y) = G(X, JY)`` as a matrix in the adapted or coordinate frame."""
    phi, coord = _fundamental_form_jets(lift_jets(model, params, pt))
    if frame == "adapted":
        return phi.value.copy()
    if frame == "coordinate":
        return coord.value.copy()
    raise ValueError("frame must be 'adapted' or 'coordinate'")


def canonical_symplectic(n: int) -> np.ndarray:
    """Coordinate matrix of ``dp_i ^ dq^i``."""
    out = np.zeros((2 * n, 2 * n))
    out[n:, :n] = np.eye(n)
    out[:n, n:] = -np.eye(n)
    return out


def dphi_residual(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> float:
    """Max component of the exterior derivative of phi in coordinates."""
    _, coord = _fundamental_form_jets(lift_jets(model, params, pt))
    d = coord.grad().value  # d[m, n, l] = d_l phi_mn
    dphi = d + np.einsum("nlm->mnl", d) + np.einsum("lmn->mnl", d)
    return float(np.max(np.abs(dphi)))


def phi_constancy_residual(model, params, pt) -> float:
    """Max deviation of phi's coordinate components (and their gradients) from ``dp ^ dq``."""
    _, coord = _fundamental_form_jets(lift_jets(model, params, pt))
    dev = np.max(np.abs(coord.value - canonical_symplectic(model.n)))
    return float(max(dev, np.max(np.abs(coord.derivs[0]))))


# -- base-connection identities used in the integrability argument ------------

def horizontal_covariant_residuals(model, params, pt) -> tuple[float, float, float]:
    """Max of ``delta t``, ``nabla_i G_jk`` and ``nabla_i H^jk`` over horizontal indices."""
    lj = lift_jets(model, params, pt)
    fj = lj.frame
    n = model.n
    E = fj.frame.value[:n]
    gam = fj.base.gamma.value
    dt = E @ fj.t.derivs[0]
    dG = np.einsum("im,mjk->ijk", E, lj.G.derivs[0])
    dH = np.einsum("im,mjk->ijk", E, lj.H.derivs[0])
    G, H = lj.G.value, lj.H.value
    nG = dG - np.einsum("lij,lk->ijk", gam, G) - np.einsum("lik,lj->ijk", gam, G)
    nH = dH + np.einsum("jil,lk->ijk", gam, H) + np.einsum("kil,lj->ijk", gam, H)
    return float(np.max(np.abs(dt))), float(np.max(np.abs(nG))), float(np.max(np.abs(nH)))


# -- Nijenhuis tensor --------------------------------------------------------

class NijenhuisBlocks(NamedTuple):
    """``N(E_a, E_b) = full[a, b, c] E_c`` split by argument type.

    ``hh[i, j]`` is ``N(delta_i, delta_j)``, ``hv[i, j]`` is
    ``N(delta_i, d/dp_j)`` and ``vv[i, j]`` is ``N(d/dp_i, d/dp_j)``; the
    last axis always holds all 2n frame components.
    """

    hh: np.ndarray
    hv: np.ndarray
    vv: np.ndarray
    full: np.ndarray

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.full)))


def _blocks(full: np.ndarray, n: int) -> NijenhuisBlocks:
    return NijenhuisBlocks(full[:n, :n].copy(), full[:n, n:].copy(), full[n:, n:].copy(), full)


def nijenhuis_closed_form(model: SpaceFormModel, params: LiftParameters,
                          pt: CotangentPoint) -> NijenhuisBlocks:
    lj = lift_jets(model, params, pt)
    fj = lj.frame
    n = model.n
    A, v = params.A, lj.v
    g = fj.base.g.value
    R = fj.base.riemann.value
    H = lj.H.value
    p = np.array(pt.p)
    d = np.eye(n)
    # B[h, k, i, j] = A v (delta^h_i g_jk - delta^h_j g_ik) + R^h_kij, then contracted with p_h
    B = A * v * (np.einsum("hi,jk->hkij", d, g) - np.einsum("hj,ik->hkij", d, g)) + R
    Bp = np.einsum("h,hkij->kij", p, B)
    hh = -np.einsum("kij->ijk", Bp)
    # N(delta_i, d/dp_j) = -H^kl H^jr Bp[l, i, r] delta_k
    hv = -np.einsum("kl,jr,lir->ijk", H, H, Bp)
    # N(d/dp_i, d/dp_j) = -H^ir H^jl Bp[k, l, r] d/dp_k
    vv = -np.einsum("ir,jl,klr->ijk", H, H, Bp)
    N = 2 * n
    full = np.zeros((N, N, N))
    full[:n, :n, n:] = hh
    full[:n, n:, :n] = hv
    full[n:, :n, :n] = -hv.transpose(1, 0, 2)
    full[n:, n:, n:] = vv
    return _blocks(full, n)


def nijenhuis_definition(model: SpaceFormModel, params: LiftParameters,
                         pt: CotangentPoint) -> NijenhuisBlocks:
    """``[JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]`` on frame fields, by differentiation."""
    lj = lift_jets(model, params, pt)
    fj = lj.frame
    E = fj.frame
    J = lj.J.truncate(E.order)
    # coordinate components of J E_a: sum_c J[c, a] E[c, mu]
    JE = tc.einsum("ca,cm->am", J, E)
    theta = fj.coframe
    b_jj = to_frame(vector_field_bracket(JE, JE), theta).value
    b_jx = to_frame(vector_field_bracket(JE, E), theta).value
    b_xj = to_frame(vector_field_bracket(E, JE), theta).value
    b_xx = to_frame(vector_field_bracket(E, E), theta).value
    Jv = lj.J.value
    full = b_jj - np.einsum("dc,abc->abd", Jv, b_jx + b_xj) - b_xx
    return _blocks(full, model.n)


def tube_check(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> bool:
    """Whether ``pt`` lies in the tube ``|p|^2 < A^2 / c`` (always true for ``c <= 0``)."""
    if model.c <= 0:
        return True
    t = float(frame_jets(model, pt).t.value)
    return params.A * params.A - 2.0 * model.c * t > 0
