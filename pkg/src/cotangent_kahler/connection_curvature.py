"""Levi-Civita connection and curvature of the lifted metric.

Connection coefficients are stored as ``C[a, b, c]`` with
``nabla_{E_a} E_b = C[a, b, c] E_c`` and curvature as ``K[a, b, c, d]``
with ``K(E_a, E_b) E_c = K[a, b, c, d] E_d``.

Two independent routes are provided for each object:

* the Koszul formula on frame fields (connection) and the defining
  formula ``nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]`` applied to the
  Koszul coefficients (curvature), both by jet differentiation;
* the closed-form M-tensor expressions for ``Q``, ``P``, ``S`` and the six
  curvature families.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import tensor_calculus as tc
from .adapted_frame import CotangentPoint
from .exceptions import PreconditionError
from .kaehler_lift import LiftJets, LiftParameters, lift_jets
from .space_form import SpaceFormModel
from .tensor_calculus import Jet


@dataclass(frozen=True)
class AdaptedConnection:
    coefficients: np.ndarray

    def blocks(self, n: int) -> dict:
        """``Q[i, j, h]``, ``P[h, i, j]`` and ``S[h, i, j]`` read off the coefficients."""
        C = self.coefficients
        return {
            "Q": C[n:, n:, n:].copy(),
            "P": np.einsum("ijh->hij", C[n:, :n, :n]),
            "S": np.einsum("ijh->hij", C[:n, :n, n:]),
        }


@dataclass(frozen=True)
class CurvatureData:
    K: np.ndarray
    ricci: np.ndarray
    einstein_factor: float


@dataclass(frozen=True)
class ReadingReport:
    """Residuals of the simplified Q, P, S expressions against the general ones.

    ``*_free`` compares the momentum-free readings
    ``Q^ij_h = (c/A) H^ij`` and ``P^hi_j = -(c/A) H^hi``;
    ``*_corrected`` the readings carrying ``p_h`` and ``p_j`` respectively.
    """

    s_residual: float
    q_free: float
    q_corrected: float
    p_free: float
    p_corrected: float

    @staticmethod
    def _pick(free: float, corrected: float, tol: float) -> str:
        if corrected < tol and not free < tol:
            return "momentum_corrected"
        if free < tol and not corrected < tol:
            return "momentum_free"
        if free < tol and corrected < tol:
            return "both"
        return "none"

    def q_match(self, tol: float) -> str:
        return self._pick(self.q_free, self.q_corrected, tol)

    def p_match(self, tol: float) -> str:
        return self._pick(self.p_free, self.p_corrected, tol)

    def merge(self, other: "ReadingReport") -> "ReadingReport":
        return ReadingReport(*(max(a, b) for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self) -> tuple:
        return (self.s_residual, self.q_free, self.q_corrected, self.p_free, self.p_corrected)


def _require_integrable(model: SpaceFormModel, params: LiftParameters, what: str):
    if not params.is_integrable(model):
        raise PreconditionError(f"{what} presumes the integrable choice v = -c/A")


# -- connection ----------------------------------------------------------------

def _koszul_jet(lj: LiftJets) -> Jet:
    fj = lj.frame
    f = fj.structure()
    E = fj.frame.truncate(f.order + 1)
    Gm = lj.metric.truncate(E.order + 1)
    # dG[a, b, c] = E_a(G_bc)
    dG = tc.einsum("am,bcm->abc", E, Gm.grad())
    fG = tc.einsum("abe,ec->abc", f, Gm)  # G([E_a, E_b], E_c)
    koszul = (dG + tc.einsum("bac->abc", dG) - tc.einsum("cab->abc", dG)
              + fG - tc.einsum("acb->abc", fG) - tc.einsum("bca->abc", fG))
    Ginv = tc.inv(Gm.truncate(koszul.order), spd=True)
    return 0.5 * tc.einsum("abc,cd->abd", koszul, Ginv)


def _closed_blocks(lj: LiftJets) -> tuple[Jet, Jet, Jet]:
    fj = lj.frame
    n = lj.n
    r0 = fj.r0
    G = lj.G.truncate(r0.order + 1)
    H = lj.H.truncate(r0.order + 1)
    # vertical partials: dH[i, j, k] = d/dp_k H^ij
    dH = H.grad()[:, :, n:]
    dG = G.grad()[:, :, n:]
    G0, H0 = G.truncate(r0.order), H.truncate(r0.order)
    # Q^ij_h = 1/2 G_hk (d^i H^jk + d^j H^ik - d^k H^ij), stored [i, j, h]
    inner_q = tc.einsum("jki->ijk", dH) + tc.einsum("ikj->ijk", dH) - dH
    Q = 0.5 * tc.einsum("hk,ijk->ijh", G0, inner_q)
    # P^hi_j = 1/2 H^hk (d^i G_jk - H^il R0_ljk), stored [h, i, j]
    inner_p = tc.einsum("jki->ijk", dG) - tc.einsum("il,ljk->ijk", H0, r0)
    P = 0.5 * tc.einsum("hk,ijk->hij", H0, inner_p)
    # S_hij = -1/2 G_hk d^k G_ij + 1/2 R0_hij
    S = -0.5 * tc.einsum("hk,ijk->hij", G0, dG) + 0.5 * r0
    return Q, P, S


def _closed_connection_jet(lj: LiftJets) -> Jet:
    n = lj.n
    N = 2 * n
    Q, P, S = _closed_blocks(lj)
    gam = lj.frame.base.gamma.truncate(Q.order)
    shape = (N, N, N)
    H_, V_ = slice(0, n), slice(n, N)
    parts = [
        tc.embed(Q, shape, (V_, V_, V_)),                                   # nabla_{dp_i} dp_j = Q^ij_h dp_h
        tc.embed(-tc.einsum("jih->ijh", gam), shape, (H_, V_, V_)),         # nabla_{d_i} dp_j = -Gamma^j_ih dp_h
        tc.embed(tc.einsum("hji->ijh", P), shape, (H_, V_, H_)),            #                 + P^hj_i d_h
        tc.embed(tc.einsum("hij->ijh", P), shape, (V_, H_, H_)),            # nabla_{dp_i} d_j = P^hi_j d_h
        tc.embed(tc.einsum("hij->ijh", gam), shape, (H_, H_, H_)),          # nabla_{d_i} d_j = Gamma^h_ij d_h
        tc.embed(tc.einsum("hij->ijh", S), shape, (H_, H_, V_)),            #                 + S_hij dp_h
    ]
    return sum(parts[1:], parts[0])


@lru_cache(maxsize=64)
def _koszul_cached(model, params, pt) -> Jet:
    return _koszul_jet(lift_jets(model, params, pt))


@lru_cache(maxsize=64)
def _closed_cached(model, params, pt) -> Jet:
    return _closed_connection_jet(lift_jets(model, params, pt))


def koszul_connection(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> AdaptedConnection:
    """Connection coefficients from the Koszul formula (independent oracle)."""
    return AdaptedConnection(_koszul_cached(model, params, pt).value.copy())


def connection_closed_form(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> AdaptedConnection:
    """Connection coefficients assembled from the general Q, P, S expressions."""
    return AdaptedConnection(_closed_cached(model, params, pt).value.copy())


def connection_blocks(model, params, pt) -> dict:
    Q, P, S = _closed_blocks(lift_jets(model, params, pt))
    return {"Q": Q.value.copy(), "P": P.value.copy(), "S": S.value.copy()}


def connection_axiom_residuals(model, params, pt, connection: Optional[AdaptedConnection] = None
                               ) -> tuple[float, float]:
    """Torsion and metricity residuals ``(torsion, nabla G)`` of a connection."""
    lj = lift_jets(model, params, pt)
    C = (connection or connection_closed_form(model, params, pt)).coefficients
    f = lj.frame.structure().value
    torsion = C - C.transpose(1, 0, 2) - f
    E = lj.frame.frame.value
    Gm = lj.metric
    dG = np.einsum("am,bcm->abc", E, Gm.grad().value)
    G = Gm.value
    metricity = dG - np.einsum("abd,dc->abc", C, G) - np.einsum("acd,bd->abc", C, G)
    return float(np.max(np.abs(torsion))), float(np.max(np.abs(metricity)))


def reading_consistency(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> ReadingReport:
    _require_integrable(model, params, "reading_consistency")
    lj = lift_jets(model, params, pt)
    blocks = connection_blocks(model, params, pt)
    Q, P, S = blocks["Q"], blocks["P"], blocks["S"]
    k = model.c / params.A
    G, H = lj.G.value, lj.H.value
    p = np.array(pt.p)
    n = model.n
    q_free = k * np.broadcast_to(H[:, :, None], (n, n, n))
    q_corrected = k * np.einsum("ij,h->ijh", H, p)
    p_free = -k * np.broadcast_to(H[:, :, None], (n, n, n))
    p_corrected = -k * np.einsum("hi,j->hij", H, p)
    s_expected = k * np.einsum("hj,i->hij", G, p)

    def r(a, b):
        return float(np.max(np.abs(a - b)))

    return ReadingReport(r(S, s_expected), r(Q, q_free), r(Q, q_corrected), r(P, p_free), r(P, p_corrected))


# -- curvature -----------------------------------------------------------------

def _curvature_from_connection(C: Jet, E: np.ndarray, f: np.ndarray) -> np.ndarray:
    # K[a,b,c,d] = E_a(C[b,c,d]) - E_b(C[a,c,d]) + C[b,c,e] C[a,e,d] - C[a,c,e] C[b,e,d] - f[a,b,e] C[e,c,d]
    dC = np.einsum("am,bcdm->abcd", E, C.grad().value)
    Cv = C.value
    return (dC - dC.transpose(1, 0, 2, 3)
            + np.einsum("bce,aed->abcd", Cv, Cv)
            - np.einsum("ace,bed->abcd", Cv, Cv)
            - np.einsum("abe,ecd->abcd", f, Cv))


def _closed_curvature_jet(lj: LiftJets, model: SpaceFormModel) -> Jet:
    n = lj.n
    N = 2 * n
    k = model.c / lj.A
    G, H = lj.G, lj.H
    d = np.eye(n)
    shape = (N, N, N, N)
    H_, V_ = slice(0, n), slice(n, N)
    # family arrays laid out [i, j, k, h] (K(X_i, Y_j) Z_k = ... W_h)
    hhh = k * (tc.einsum("hi,jk->ijkh", d, G) - tc.einsum("hj,ik->ijkh", d, G))
    hhv = k * (tc.einsum("kj,hi->ijkh", d, G) - tc.einsum("ki,hj->ijkh", d, G))
    vvh = k * (tc.einsum("jk,hi->ijkh", d, H) - tc.einsum("ik,hj->ijkh", d, H))
    vvv = k * (tc.einsum("ih,jk->ijkh", d, H) - tc.einsum("jh,ik->ijkh", d, H))
    vhh = k * tc.einsum("ij,hk->ijkh", d, G)
    vhv = -k * tc.einsum("ij,hk->ijkh", d, H)
    parts = [
        tc.embed(hhh, shape, (H_, H_, H_, H_)),
        tc.embed(hhv, shape, (H_, H_, V_, V_)),
        tc.embed(vvh, shape, (V_, V_, H_, H_)),
        tc.embed(vvv, shape, (V_, V_, V_, V_)),
        tc.embed(vhh, shape, (V_, H_, H_, V_)),
        tc.embed(vhv, shape, (V_, H_, V_, H_)),
        tc.embed(-tc.einsum("ijkh->jikh", vhh), shape, (H_, V_, H_, V_)),
        tc.embed(-tc.einsum("ijkh->jikh", vhv), shape, (H_, V_, V_, H_)),
    ]
    return sum(parts[1:], parts[0])


def _ricci(K: np.ndarray) -> np.ndarray:
    return np.einsum("abca->bc", K)


def _curvature_data(K: np.ndarray, G: np.ndarray) -> CurvatureData:
    ric = _ricci(K)
    factor = float(np.sum(ric * G) / np.sum(G * G))
    return CurvatureData(K, ric, factor)


@lru_cache(maxsize=64)
def _closed_curvature_cached(model, params, pt) -> Jet:
    return _closed_curvature_jet(lift_jets(model, params, pt), model)


def curvature_closed_form(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> CurvatureData:
    _require_integrable(model, params, "curvature_closed_form")
    K = _closed_curvature_cached(model, params, pt).value.copy()
    return _curvature_data(K, metric_value(model, params, pt))


def curvature_numeric(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> CurvatureData:
    """Curvature from the Koszul connection by the defining formula."""
    lj = lift_jets(model, params, pt)
    C = _koszul_cached(model, params, pt)
    K = _curvature_from_connection(C, lj.frame.frame.value, lj.frame.structure().value)
    return _curvature_data(K, lj.metric.value)


def metric_value(model, params, pt) -> np.ndarray:
    return lift_jets(model, params, pt).metric.value


def ricci_and_einstein(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint
                       ) -> tuple[CurvatureData, float]:
    """Ricci tensor (trace over the first slot) and ``max |Ric - (cn/A) G|``."""
    data = curvature_closed_form(model, params, pt)
    G = metric_value(model, params, pt)
    target = model.c * model.n / params.A
    return data, float(np.max(np.abs(data.ricci - target * G)))


def covariant_derivative_K(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint) -> float:
    """Max component of ``nabla K`` over all frame slot combinations."""
    _require_integrable(model, params, "covariant_derivative_K")
    lj = lift_jets(model, params, pt)
    Kj = _closed_curvature_cached(model, params, pt)
    K = Kj.value
    E = lj.frame.frame.value
    C = _closed_cached(model, params, pt).value
    # nabla[a, b, c, e, d] = (nabla_{E_a} K)(E_b, E_c) E_e, component d
    dK = np.einsum("am,bcedm->abced", E, Kj.grad().value)
    nab = (dK
           + np.einsum("bceh,ahd->abced", K, C)
           - np.einsum("abh,hced->abced", C, K)
           - np.einsum("ach,bhed->abced", C, K)
           - np.einsum("aeh,bchd->abced", C, K))
    return float(np.max(np.abs(nab)))


def covariant_derivative_J(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint,
                           connection: Optional[AdaptedConnection] = None) -> float:
    """Max component of ``nabla J``; uses the Koszul connection unless one is given."""
    lj = lift_jets(model, params, pt)
    C = (connection or koszul_connection(model, params, pt)).coefficients
    E = lj.frame.frame.value
    J = lj.J
    # J[d, b]: component d of J E_b ; (nabla_a J) E_b = nabla_a (J E_b) - J (nabla_a E_b)
    dJ = np.einsum("am,dbm->abd", E, J.grad().value)
    Jv = J.value
    nab = dJ + np.einsum("eb,aed->abd", Jv, C) - np.einsum("abe,de->abd", C, Jv)
    return float(np.max(np.abs(nab)))


def holomorphic_sectional_curvature(model: SpaceFormModel, params: LiftParameters, pt: CotangentPoint,
                                    X) -> float:
    """``G(K(X, JX) JX, X) / G(X, X)^2`` for a frame-component vector ``X``."""
    _require_integrable(model, params, "holomorphic_sectional_curvature")
    X = np.asarray(X, dtype=float)
    N = 2 * model.n
    if X.shape != (N,):
        raise ValueError(f"X must have length {N}")
    if not np.any(X):
        raise ValueError("X must be non-zero")
    lj = lift_jets(model, params, pt)
    K = _closed_curvature_cached(model, params, pt).value
    G, J = lj.metric.value, lj.J.value
    JX = J @ X
    KX = np.einsum("a,b,c,abcd->d", X, JX, JX, K)
    return float((KX @ G @ X) / (X @ G @ X) ** 2)
