"""Points of the cotangent bundle and the frame adapted to the base connection.

Indices ``0..n-1`` of the total space denote the horizontal fields
``delta/delta q^i = d/dq^i + Gamma0_ih d/dp_h`` and ``n..2n-1`` the
vertical fields ``d/dp_i``, both here and in every 2n x 2n array the
package returns.

Frame arrays use the layout ``frame[a, mu]``: coordinate component ``mu``
of frame vector ``a`` (coordinates ordered ``q^1..q^n, p_1..p_n``).  The
coframe ``coframe[e, mu]`` holds the components of ``dq^i`` and
``Dp_i = dp_i - Gamma0_ij dq^j``, so ``coframe @ frame.T`` is the
identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import tensor_calculus as tc
from .exceptions import DomainViolation
from .space_form import BaseJets, SpaceFormModel, base_jets
from .tensor_calculus import Jet


@dataclass(frozen=True)
class CotangentPoint:
    """A covector ``p_i dx^i`` at the chart point ``q``."""

    q: tuple
    p: tuple

    def __post_init__(self):
        q = tuple(float(x) for x in np.asarray(self.q, dtype=float).ravel())
        p = tuple(float(x) for x in np.asarray(self.p, dtype=float).ravel())
        if len(q) != len(p):
            raise ValueError("q and p must have the same length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.q + self.p)

    def validate(self, model: SpaceFormModel) -> None:
        if self.n != model.n:
            raise ValueError(f"point dimension {self.n} does not match model dimension {model.n}")
        if not model.contains(np.array(self.q)):
            raise DomainViolation("base point outside the chart domain")


@dataclass(frozen=True)
class AdaptedFrame:
    frame: np.ndarray
    coframe: np.ndarray
    gamma0: np.ndarray


@dataclass(frozen=True)
class FrameJets:
    """Frame-level jets in the 2n seed variables ``(q, p)``.

    With a seed of order 3: ``frame``/``coframe``/``gamma0`` have order 2,
    ``r0`` and the closed-form ``structure`` coefficients have order 1.
    """

    n: int
    z: Jet
    base: BaseJets
    t: Jet
    gamma0: Jet
    r0: Jet
    frame: Jet
    coframe: Jet

    @property
    def p(self) -> Jet:
        return self.z[self.n:]

    def structure(self) -> Jet:
        """Closed-form bracket coefficients ``[E_a, E_b] = f[a, b, e] E_e``."""
        n = self.n
        N = 2 * n
        shape = (N, N, N)
        gam = self.base.gamma.truncate(self.r0.order)
        # [d/dp_i, delta_j] = Gamma^i_jk d/dp_k ; [delta_i, delta_j] = R0_kij d/dp_k
        vh = tc.embed(gam, shape, (slice(n, N), slice(0, n), slice(n, N)))
        hv = tc.embed(-tc.einsum("ijk->jik", gam), shape, (slice(0, n), slice(n, N), slice(n, N)))
        hh = tc.embed(tc.einsum("kij->ijk", self.r0), shape, (slice(0, n), slice(0, n), slice(n, N)))
        return vh + hv + hh


def seed(pt: CotangentPoint, order: int = 3) -> Jet:
    return Jet.variables(pt.coords, order)


def frame_jets_from_seed(model: SpaceFormModel, z: Jet) -> FrameJets:
    n = model.n
    N = 2 * n
    q, p = z[:n], z[n:]
    base = base_jets(model, q, qvars=slice(0, n))
    ginv = base.ginv
    t = 0.5 * tc.einsum("i,i->", p, tc.einsum("ik,k->i", ginv, p))
    gamma0 = tc.einsum("k,kih->ih", p, base.gamma)
    r0 = tc.einsum("h,hkij->kij", p, base.riemann)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    frame = tc.block([[eye, gamma0], [zero, eye]])
    coframe = tc.block([[eye, zero], [-gamma0, eye]])
    assert frame.shape == (N, N)
    return FrameJets(n, z, base, t, gamma0, r0, frame, coframe)


@lru_cache(maxsize=64)
def frame_jets(model: SpaceFormModel, pt: CotangentPoint, order: int = 3) -> FrameJets:
    pt.validate(model)
    return frame_jets_from_seed(model, seed(pt, order))


def vector_field_bracket(u: Jet, v: Jet) -> Jet:
    """Lie brackets of coordinate-component fields ``u[a, mu]`` and ``v[b, mu]``.

    Returns ``w[a, b, mu]``, the coordinate components of ``[U_a, V_b]``.
    """
    du = u.grad()  # [a, mu, nu] = d_nu U_a^mu
    dv = v.grad()
    return tc.einsum("an,bmn->abm", u, dv) - tc.einsum("bn,amn->abm", v, du)


def to_frame(coord_vectors, coframe):
    """Frame components of vectors given by coordinate components on the last axis."""
    nd = coord_vectors.ndim
    letters = "abcd"[: nd - 1]
    return tc.einsum(f"{letters}m,em->{letters}e", coord_vectors, coframe)


def numeric_structure(fj: FrameJets) -> Jet:
    """Bracket coefficients computed by differentiating the frame components."""
    return to_frame(vector_field_bracket(fj.frame, fj.frame), fj.coframe)


# -- public operations -------------------------------------------------------

def energy_density(model: SpaceFormModel, pt: CotangentPoint) -> float:
    """``t = g^ik p_i p_k / 2`` at ``pt``."""
    return float(frame_jets(model, pt).t.value)


def adapted_frame(model: SpaceFormModel, pt: CotangentPoint) -> AdaptedFrame:
    fj = frame_jets(model, pt)
    return AdaptedFrame(fj.frame.value.copy(), fj.coframe.value.copy(), fj.gamma0.value.copy())


def frame_directional_derivative(model: SpaceFormModel, pt: CotangentPoint,
                                 field: Callable, frame_index: int) -> float:
    """Derivative of a scalar field of ``(q, p)`` along frame vector ``frame_index``.

    ``field`` receives the coordinate vector ``(q^1..q^n, p_1..p_n)`` as a
    jet.  Indices are 0-based: ``0..n-1`` horizontal, ``n..2n-1`` vertical.
    """
    N = 2 * model.n
    if not 0 <= frame_index < N:
        raise IndexError(f"frame_index must be in 0..{N - 1}")
    fj = frame_jets(model, pt)
    f = tc.jet_eval(field, pt.coords, 1)
    return float(fj.frame.value[frame_index] @ f.derivs[0])


def bracket_coefficients(model: SpaceFormModel, pt: CotangentPoint, method: str = "closed") -> np.ndarray:
    """Structure coefficients ``f[a, b, e]`` with ``[E_a, E_b] = f[a, b, e] E_e``."""
    fj = frame_jets(model, pt)
    if method == "closed":
        return fj.structure().value
    if method == "numeric":
        return numeric_structure(fj).value
    raise ValueError("method must be 'closed' or 'numeric'")


def bracket_residual(model: SpaceFormModel, pt: CotangentPoint) -> float:
    """Max difference between differentiated frame brackets and their closed forms."""
    fj = frame_jets(model, pt)
    return float(np.max(np.abs(numeric_structure(fj).value - fj.structure().value)))


def coframe_residual(model: SpaceFormModel, pt: CotangentPoint) -> float:
    fr = adapted_frame(model, pt)
    N = 2 * model.n
    return float(np.max(np.abs(fr.coframe @ fr.frame.T - np.eye(N))))
