"""Seeded random matrices, states and channels for property checks."""
from __future__ import annotations

import numpy as np

from .linalg import dagger


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def ginibre(rows: int, cols: int, rng=None) -> np.ndarray:
    g = _rng(rng)
    return (g.standard_normal((rows, cols)) + 1j * g.standard_normal((rows, cols))) / np.sqrt(2)


def random_hermitian(d: int, rng=None) -> np.ndarray:
    G = ginibre(d, d, rng)
    return 0.5 * (G + dagger(G))


def random_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary via QR with the phase fix."""
    Q, R = np.linalg.qr(ginibre(d, d, rng))
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_state(d: int, rng=None, rank: int | None = None) -> np.ndarray:
    G = ginibre(d, rank or d, rng)
    rho = G @ dagger(G)
    return rho / np.trace(rho).real


def random_pure_state(d: int, rng=None) -> np.ndarray:
    v = ginibre(d, 1, rng).reshape(-1)
    return v / np.linalg.norm(v)


def random_traceless_hermitian(d: int, rng=None) -> np.ndarray:
    X = random_hermitian(d, rng)
    return X - np.trace(X).real / d * np.eye(d)


def random_kraus(d_in: int, d_out: int, n_kraus: int, rng=None) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map from a random isometry."""
    V, _ = np.linalg.qr(ginibre(d_out * n_kraus, d_in, rng))
    return [V[k * d_out:(k + 1) * d_out, :] for k in range(n_kraus)]
