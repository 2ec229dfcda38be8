"""Quantum channels, instruments and the concrete families used throughout.

Kraus operators are the source of truth for a :class:`Channel`. The Choi
operator is derived on demand with the unnormalized convention

    J(Phi) = sum_ij E_ij (x) Phi(E_ij),

input factor first, so ``Tr J = dim_in`` for trace-preserving maps. Maps that
are not completely positive (differences of channels) are held as
:class:`LinearMap` objects carrying only their Choi operator.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import linalg
from .linalg import dagger

PROJECTION_TOL = 1e-10
TP_TOL = 1e-10


def superop_to_choi(S: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Column-stacking superoperator to Choi matrix."""
    S4 = np.asarray(S).reshape(d_out, d_out, d_in, d_in)
    return S4.transpose(3, 1, 2, 0).reshape(d_in * d_out, d_in * d_out)


def choi_to_superop(J: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    J4 = np.asarray(J).reshape(d_in, d_out, d_in, d_out)
    return J4.transpose(3, 1, 2, 0).reshape(d_out * d_out, d_in * d_in)


def choi_to_kraus(J, d_in: int, d_out: int, clamp: float = 1e-10,
                  reject: float = 1e-8) -> list[np.ndarray]:
    """Kraus operators from a Choi matrix by eigendecomposition.

    Eigenvalues in ``[-reject, clamp]`` (scaled by the largest eigenvalue) are
    treated as numerical noise and dropped; anything more negative means the
    map is not completely positive and raises ``ValueError``.
    """
    w, V = linalg.hermitian_eig(J)
    scale = max(1.0, abs(float(w[-1])))
    if w[0] < -reject * scale:
        raise ValueError(f"Choi matrix has eigenvalue {w[0]:.3e}; map is not CP")
    kraus = []
    for lam, v in zip(w, V.T):
        if lam <= clamp * scale:
            continue
        kraus.append(np.sqrt(lam) * v.reshape(d_in, d_out).T)
    if not kraus:
        kraus.append(np.zeros((d_out, d_in), dtype=complex))
    return kraus


class LinearMap:
    """A linear map on matrices held by its Choi operator.

    Used for Hermiticity-preserving maps that need not be CP, such as the
    difference of two channels.
    """

    def __init__(self, choi, dim_in: int, dim_out: int):
        J = linalg.as_matrix(choi)
        if J.shape != (dim_in * dim_out, dim_in * dim_out):
            raise ValueError(f"Choi shape {J.shape} does not match dims ({dim_in}, {dim_out})")
        self.choi = J
        self.dim_in = dim_in
        self.dim_out = dim_out

    def apply(self, rho) -> np.ndarray:
        R = linalg.as_matrix(rho)
        if R.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"input shape {R.shape} does not match dim_in={self.dim_in}")
        J4 = self.choi.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)
        return np.einsum("ij,iojp->op", R, J4)

    __call__ = apply

    def _check_compatible(self, other: "LinearMap"):
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise ValueError("maps have different dimensions")

    def __add__(self, other):
        other = as_linear_map(other)
        self._check_compatible(other)
        return LinearMap(self.choi + other.choi, self.dim_in, self.dim_out)

    def __sub__(self, other):
        other = as_linear_map(other)
        self._check_compatible(other)
        return LinearMap(self.choi - other.choi, self.dim_in, self.dim_out)

    def __rmul__(self, c):
        return LinearMap(c * self.choi, self.dim_in, self.dim_out)

    def __repr__(self):
        return f"LinearMap(dim_in={self.dim_in}, dim_out={self.dim_out})"


class Channel:
    """Completely positive map in Kraus form (``dim_out x dim_in`` operators).

    Instances are treated as immutable; the Choi and superoperator forms are
    cached on first use.
    """

    def __init__(self, kraus: Sequence, dim_in: int | None = None, dim_out: int | None = None):
        ops = tuple(linalg.as_matrix(K) for K in kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d_out, d_in = ops[0].shape
        if dim_in is not None and dim_in != d_in or dim_out is not None and dim_out != d_out:
            raise ValueError(f"Kraus shape {ops[0].shape} disagrees with ({dim_out}, {dim_in})")
        for K in ops:
            if K.shape != (d_out, d_in):
                raise ValueError("Kraus operators have inconsistent shapes")
        self.kraus = ops
        self.dim_in = d_in
        self.dim_out = d_out

    def apply(self, rho) -> np.ndarray:
        R = linalg.as_matrix(rho)
        if R.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"input shape {R.shape} does not match dim_in={self.dim_in}")
        out = np.zeros((self.dim_out, self.dim_out), dtype=complex)
        for K in self.kraus:
            out += K @ R @ dagger(K)
        return out

    __call__ = apply

    @cached_property
    def choi(self) -> np.ndarray:
        J = np.zeros((self.dim_in * self.dim_out,) * 2, dtype=complex)
        for K in self.kraus:
            v = K.T.reshape(-1)
            J += np.outer(v, v.conj())
        return J

    @cached_property
    def superop(self) -> np.ndarray:
        """Column-stacking matrix ``S`` with ``vec(Phi(rho)) = S vec(rho)``."""
        return sum(np.kron(K.conj(), K) for K in self.kraus)

    def kraus_gram(self) -> np.ndarray:
        return sum(dagger(K) @ K for K in self.kraus)

    def as_map(self) -> LinearMap:
        return LinearMap(self.choi, self.dim_in, self.dim_out)

    def __sub__(self, other):
        return self.as_map() - other

    def __add__(self, other):
        return self.as_map() + other

    def __rmul__(self, c):
        return c * self.as_map()

    def __repr__(self):
        return f"Channel(dim_in={self.dim_in}, dim_out={self.dim_out}, n_kraus={len(self.kraus)})"


def as_linear_map(obj) -> LinearMap:
    if isinstance(obj, LinearMap):
        return obj
    if isinstance(obj, Channel):
        return obj.as_map()
    raise TypeError(f"cannot interpret {type(obj).__name__} as a linear map")


def choi(phi) -> np.ndarray:
    return phi.choi


def apply(phi, rho) -> np.ndarray:
    return phi.apply(rho)


def channel_from_choi(J, dim_in: int, dim_out: int) -> Channel:
    return Channel(choi_to_kraus(J, dim_in, dim_out), dim_in, dim_out)


def channel_from_superop(S, dim_in: int, dim_out: int) -> Channel:
    return channel_from_choi(superop_to_choi(S, dim_in, dim_out), dim_in, dim_out)


def compose_serial(second: Channel, first: Channel) -> Channel:
    """``second o first``: apply ``first``, then ``second``."""
    if second.dim_in != first.dim_out:
        raise ValueError(
            f"cannot chain: first maps to dim {first.dim_out}, second expects {second.dim_in}"
        )
    return Channel([B @ A for B in second.kraus for A in first.kraus])


def compose_parallel(phi_a: Channel, phi_b: Channel) -> Channel:
    return Channel([np.kron(A, B) for A in phi_a.kraus for B in phi_b.kraus])


def power(phi: Channel, n: int) -> Channel:
    """``phi`` iterated ``n`` times, evaluated through the superoperator."""
    if phi.dim_in != phi.dim_out:
        raise ValueError("only endomorphic channels can be iterated")
    if n < 0:
        raise ValueError("n must be nonnegative")
    S = np.linalg.matrix_power(phi.superop, n)
    return channel_from_superop(S, phi.dim_in, phi.dim_out)


# ---------------------------------------------------------------- families

def identity(d: int) -> Channel:
    return Channel([np.eye(d, dtype=complex)])


def unitary_channel(U) -> Channel:
    return Channel([linalg.as_matrix(U)])


def _nonzero(ops):
    kept = [K for K in ops if np.any(K != 0)]
    return kept or ops[:1]


def dephasing(p: float, d: int) -> Channel:
    """``rho -> (1 - p) rho + p diag(rho)`` in the computational basis."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dephasing strength must lie in [0, 1], got {p}")
    ops = [np.sqrt(1.0 - p) * np.eye(d, dtype=complex)]
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = np.sqrt(p)
        ops.append(E)
    return Channel(_nonzero(ops))


def depolarizing(lam: float, d: int) -> Channel:
    """``rho -> (1 - lam) rho + lam Tr[rho] I/d``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"depolarizing strength must lie in [0, 1], got {lam}")
    ops = [np.sqrt(1.0 - lam) * np.eye(d, dtype=complex)]
    amp = np.sqrt(lam / d)
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = amp
            ops.append(E)
    return Channel(_nonzero(ops))


def replacement(tau) -> Channel:
    """Rank-one map ``rho -> Tr[rho] tau`` (the Doeblin seed for a fixed state)."""
    T = linalg.ensure_hermitian(tau, tol=1e-10)
    d = T.shape[0]
    w, V = linalg.hermitian_eig(T)
    if w[0] < -1e-10:
        raise ValueError("tau must be positive semidefinite")
    ops = []
    for lam, v in zip(w, V.T):
        if lam <= 1e-15:
            continue
        for j in range(d):
            ops.append(np.sqrt(lam) * np.outer(v, linalg.ket(j, d)))
    if not ops:
        raise ValueError("tau must be nonzero")
    return Channel(ops)


def diagonal_projection(d: int) -> Channel:
    """The map that deletes off-diagonal entries (``dephasing(1, d)``)."""
    return dephasing(1.0, d)


def zz_coupling(gamma: float) -> Channel:
    """Two-qubit unitary channel ``exp(-i gamma/2 Z (x) Z)``."""
    phases = np.exp(-0.5j * gamma * np.array([1.0, -1.0, -1.0, 1.0]))
    return Channel([np.diag(phases)])


def swap(d: int = 2) -> Channel:
    S = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            S[j * d + i, i * d + j] = 1.0
    return Channel([S])


# ------------------------------------------------------------- diagnostics

@dataclass(frozen=True)
class CPTPReport:
    ok: bool
    completely_positive: bool
    trace_preserving: bool
    min_choi_eigenvalue: float
    tp_defect: float
    tol: float

    def __bool__(self):
        return self.ok


def is_cptp(phi, tol: float = 1e-10) -> CPTPReport:
    """Check Choi positivity (within ``-tol``) and trace preservation (within ``tol``)."""
    m = as_linear_map(phi)
    J = m.choi
    min_eig = float(linalg.eigvalsh(0.5 * (J + dagger(J)))[0]) if linalg.is_hermitian(J, 1e-10) \
        else -np.inf
    marginal = linalg.partial_trace(J, "B", m.dim_in, m.dim_out)
    tp_defect = float(np.max(np.abs(marginal - np.eye(m.dim_in))))
    if isinstance(phi, Channel):
        tp_defect = max(tp_defect, float(np.max(np.abs(phi.kraus_gram() - np.eye(phi.dim_in)))))
    cp = min_eig >= -tol
    tp = tp_defect <= tol
    return CPTPReport(cp and tp, cp, tp, min_eig, tp_defect, tol)


def is_trace_nonincreasing(phi: Channel, tol: float = 1e-10) -> bool:
    G = phi.kraus_gram()
    return float(linalg.eigvalsh(np.eye(phi.dim_in) - G)[0]) >= -tol


# ------------------------------------------------------------- instruments

class Instrument:
    """Outcome-labelled CP maps whose sum is a channel."""

    def __init__(self, outcomes: Sequence, elements: Sequence[Channel], tol: float = TP_TOL):
        outcomes = tuple(outcomes)
        elements = tuple(elements)
        if len(outcomes) != len(elements) or not elements:
            raise ValueError("need one element per outcome label")
        d_in = elements[0].dim_in
        if any(e.dim_in != d_in for e in elements):
            raise ValueError("instrument elements must share the input dimension")
        gram = sum(e.kraus_gram() for e in elements)
        defect = float(np.max(np.abs(gram - np.eye(d_in))))
        if defect > tol:
            raise ValueError(f"instrument elements do not sum to a channel (defect {defect:.2e})")
        self.outcomes = outcomes
        self.elements = elements

    @property
    def dim_in(self) -> int:
        return self.elements[0].dim_in

    def total(self) -> Channel:
        return Channel([K for e in self.elements for K in e.kraus])

    def probabilities(self, rho) -> np.ndarray:
        return np.array([np.trace(e.apply(rho)).real for e in self.elements])

    def after(self, channel: Channel) -> "Instrument":
        """The instrument obtained by running ``channel`` first."""
        return Instrument(self.outcomes, [compose_serial(e, channel) for e in self.elements])


def lueders_instrument(projections: Sequence, labels: Sequence | None = None) -> Instrument:
    """Lueders instrument ``rho -> P_i rho P_i`` for a complete projective family."""
    Ps = [linalg.as_matrix(P) for P in projections]
    if not Ps:
        raise ValueError("need at least one projection")
    d = Ps[0].shape[0]
    for k, P in enumerate(Ps):
        if P.shape != (d, d):
            raise ValueError("projections must share one square shape")
        if not linalg.allclose(P, dagger(P), PROJECTION_TOL) or \
                not linalg.allclose(P @ P, P, PROJECTION_TOL):
            raise ValueError(f"element {k} is not an orthogonal projection")
    if not linalg.allclose(sum(Ps), np.eye(d), PROJECTION_TOL):
        raise ValueError("projections do not sum to the identity")
    labels = list(range(len(Ps))) if labels is None else list(labels)
    return Instrument(labels, [Channel([P]) for P in Ps])
