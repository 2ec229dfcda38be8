"""GKLS generators, their semigroups, and a CPTP look-return discretization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .certify import rate_from_epsilon
from .channels import Channel, channel_from_superop, is_cptp, replacement, superop_to_choi
from .doeblin import doeblin_constant
from .linalg import PAULI_X, PAULI_Y, PAULI_Z, dagger

SWEEP_TOL = 1e-13


@dataclass(frozen=True)
class GKLSGenerator:
    """``L(rho) = -i[H, rho] + sum_k (L_k rho L_k^H - {L_k^H L_k, rho}/2)``."""

    H: np.ndarray
    jumps: tuple = field(default=())

    def __post_init__(self):
        H = linalg.ensure_hermitian(self.H)
        jumps = tuple(linalg.as_matrix(L) for L in self.jumps)
        for L in jumps:
            if L.shape != H.shape:
                raise ValueError(f"jump operator shape {L.shape} does not match H {H.shape}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def apply(self, rho) -> np.ndarray:
        rho = linalg.as_matrix(rho)
        out = -1j * (self.H @ rho - rho @ self.H)
        for L in self.jumps:
            LdL = dagger(L) @ L
            out += L @ rho @ dagger(L) - 0.5 * (LdL @ rho + rho @ LdL)
        return out


def depolarizing_generator(kappa: float) -> GKLSGenerator:
    """Qubit generator ``kappa (Tr[rho] I/2 - rho)`` via Pauli jumps of weight ``kappa/4``."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    amp = math.sqrt(kappa / 4.0)
    return GKLSGenerator(np.zeros((2, 2)), tuple(amp * P for P in (PAULI_X, PAULI_Y, PAULI_Z)))


def dephasing_generator(kappa: float, omega: float = 0.0) -> GKLSGenerator:
    """Qubit pure dephasing at rate ``kappa`` with optional ``omega Z / 2`` Hamiltonian."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return GKLSGenerator(0.5 * omega * PAULI_Z, (math.sqrt(kappa / 2.0) * PAULI_Z,))


def amplitude_damping_generator(kappa: float) -> GKLSGenerator:
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    return GKLSGenerator(np.zeros((2, 2)), (math.sqrt(kappa) * lower,))


def generator_superop(G: GKLSGenerator) -> np.ndarray:
    """Column-stacking matrix of the generator, ``vec(L(rho)) = S vec(rho)``."""
    d = G.dim
    eye = np.eye(d)
    S = -1j * (np.kron(eye, G.H) - np.kron(G.H.T, eye))
    for L in G.jumps:
        LdL = dagger(L) @ L
        S += np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return S


def semigroup(G: GKLSGenerator, t: float) -> Channel:
    """The channel ``exp(t L)`` in Kraus form."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    S = linalg.matrix_exp(t * generator_superop(G))
    try:
        channel = channel_from_superop(S, G.dim, G.dim)
    except ValueError as exc:
        raise ValueError(f"exp(tL) is not CP; invalid generator ({exc})") from None
    report = is_cptp(channel, 1e-9)
    if not report:
        raise ValueError(f"exp(tL) failed the CPTP check: {report}")
    return channel


def first_order_step(G: GKLSGenerator, dt: float) -> Channel:
    """One look-return cycle ``{K0, sqrt(dt) L_k}`` that is exactly trace preserving.

    ``K0 = exp(-i H dt) sqrt(I - dt sum_k L_k^H L_k)``, so
    ``K0^H K0 + dt sum_k L_k^H L_k = I`` by construction.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = G.dim
    jump_load = sum((dagger(L) @ L for L in G.jumps), np.zeros((d, d), dtype=complex))
    residual = np.eye(d) - dt * jump_load
    if linalg.min_eigenvalue(residual) < 0.0:
        raise ValueError(f"dt={dt} is too large: I - dt * sum L^H L is not positive")
    K0 = linalg.matrix_exp(-1j * dt * G.H) @ linalg.psd_sqrt(residual)
    return Channel([K0] + [math.sqrt(dt) * L for L in G.jumps])


def stationary_state(G: GKLSGenerator) -> np.ndarray:
    """The unique state annihilated by the generator.

    Raises ``ValueError`` when the kernel of the generator is not
    one-dimensional.
    """
    d = G.dim
    S = generator_superop(G)
    sv = np.linalg.svd(S, compute_uv=False)
    kernel_dim = int(np.sum(sv <= 1e-10 * max(1.0, sv[0])))
    if kernel_dim != 1:
        raise ValueError(f"generator has a {kernel_dim}-dimensional kernel; no unique stationary state")
    trace_row = np.eye(d).reshape(1, -1)  # vec(I)^T picks out the trace
    A = np.vstack([S, trace_row])
    b = np.zeros(d * d + 1, dtype=complex)
    b[-1] = 1.0
    vec, *_ = np.linalg.lstsq(A, b, rcond=None)
    rho = vec.reshape(d, d, order="F")
    return 0.5 * (rho + dagger(rho))


def choi_distance(A: Channel, B: Channel) -> float:
    """Trace norm of the difference of unnormalized Choi operators."""
    return linalg.trace_norm(A.choi - B.choi)


@dataclass(frozen=True)
class LimitSweepRow:
    dt: float
    epsilon: float
    gamma: float
    embed_error: float


def limit_sweep(G: GKLSGenerator, seed, dt_list: Sequence[float], t_horizon: float,
                mode: str = "first-order", tol: float = SWEEP_TOL) -> list[LimitSweepRow]:
    """Doeblin constant, rate and embedding error as the time step shrinks.

    ``mode="first-order"`` uses :func:`first_order_step` for the discrete
    cycle; ``mode="exact"`` uses ``semigroup(G, dt)`` itself. ``seed`` defaults
    (when ``None``) to the rank-one map onto the stationary state.
    """
    dts = [float(x) for x in dt_list]
    if not dts or any(x <= 0 for x in dts):
        raise ValueError("dt list must be nonempty with positive entries")
    if t_horizon <= max(dts):
        raise ValueError("t_horizon must exceed every dt")
    if mode not in ("first-order", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        seed = replacement(stationary_state(G))
    S_gen = generator_superop(G)
    rows = []
    for dt in dts:
        step = first_order_step(G, dt) if mode == "first-order" else semigroup(G, dt)
        eps = doeblin_constant(step, seed, tol).epsilon
        gamma = rate_from_epsilon(eps, dt)
        n = int(math.floor(t_horizon / dt + 1e-9))
        S_disc = np.linalg.matrix_power(step.superop, n)
        S_exact = linalg.matrix_exp(n * dt * S_gen)
        diff = superop_to_choi(S_disc - S_exact, G.dim, G.dim)
        rows.append(LimitSweepRow(dt, eps, gamma, linalg.trace_norm(diff)))
    return rows


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
