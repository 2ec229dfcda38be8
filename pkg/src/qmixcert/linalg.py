"""Dense complex linear algebra kernels.

Matrices are plain ``numpy`` complex arrays. Every routine here is a pure
function of its inputs and validates shapes up front, raising ``ValueError``
with a short diagnostic on bad input.
"""
from __future__ import annotations

import math

import numpy as np

DEFAULT_TOL = 1e-10
HERMITIAN_TOL = 1e-12
_SV_CLAMP = 1e-14


def as_matrix(M) -> np.ndarray:
    """Coerce ``M`` to a 2-D complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    return A


def _square(M, what: str = "matrix") -> np.ndarray:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{what} must be square, got shape {A.shape}")
    return A


def dagger(M) -> np.ndarray:
    return np.conj(np.asarray(M)).T


def allclose(A, B, tol: float = DEFAULT_TOL) -> bool:
    """Absolute entrywise comparison with an explicit tolerance."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        return False
    return bool(np.max(np.abs(A - B), initial=0.0) <= tol)


def hermiticity_defect(M) -> float:
    A = _square(M)
    return float(np.max(np.abs(A - dagger(A)), initial=0.0))


def is_hermitian(M, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_defect(M) <= tol * max(1.0, float(np.max(np.abs(M))))


def ensure_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return the Hermitian part of ``M`` after checking it is Hermitian within ``tol``."""
    A = _square(M)
    scale = max(1.0, float(np.max(np.abs(A))))
    defect = hermiticity_defect(A)
    if defect > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: max |M - M^H| = {defect:.3e} exceeds {tol * scale:.1e}"
        )
    return 0.5 * (A + dagger(A))


def jacobi_eigh(M, tol: float = 1e-15, max_sweeps: int = 60):
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Each pivot ``(p, q)`` is first made real by a diagonal phase and then
    annihilated by a plane rotation with ``|angle| <= pi/4``. Sweeps stop when
    the off-diagonal Frobenius mass drops below ``tol`` times the total norm.

    Returns ascending eigenvalues and the unitary whose columns are the
    matching eigenvectors.
    """
    A = ensure_hermitian(M).copy()
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    total = np.linalg.norm(A)
    if total == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = A[p, q]
                mag = abs(b)
                if mag <= 1e-300:
                    continue
                phase = b / mag
                a_pp = A[p, p].real
                a_qq = A[q, q].real
                diff = a_qq - a_pp
                if diff == 0.0:
                    theta = math.pi / 4
                else:
                    theta = 0.5 * math.atan(2.0 * mag / diff)
                c = math.cos(theta)
                s = math.sin(theta)
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                G = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ G
                A[idx, :] = dagger(G) @ A[idx, :]
                A[q, p] = 0.0
                A[p, q] = 0.0
                V[:, idx] = V[:, idx] @ G
    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def hermitian_eig(M, method: str = "lapack"):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    M : array_like
        Hermitian matrix (checked to 1e-12 relative to its largest entry).
    method : {"lapack", "jacobi"}
        ``"lapack"`` delegates to ``numpy.linalg.eigh``; ``"jacobi"`` uses the
        in-house cyclic Jacobi solver. Both return the same contract.

    Returns
    -------
    eigenvalues : ndarray
        Real, ascending.
    eigenvectors : ndarray
        Orthonormal columns, ``M = V diag(w) V^H``.
    """
    A = ensure_hermitian(M)
    if method == "jacobi":
        return jacobi_eigh(A)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    w, V = np.linalg.eigh(A)
    return w, V


def eigvalsh(M) -> np.ndarray:
    return np.linalg.eigvalsh(ensure_hermitian(M))


def min_eigenvalue(M) -> float:
    return float(eigvalsh(M)[0])


def singular_values(M) -> np.ndarray:
    """Singular values (descending) through the eigenvalues of ``M^H M``."""
    A = as_matrix(M)
    w = np.linalg.eigvalsh(dagger(A) @ A)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    w = np.where(w < _SV_CLAMP * scale, 0.0, w)
    return np.sqrt(w)[::-1]


def trace_norm(M) -> float:
    """Sum of singular values; Hermitian input goes through ``sum |eig|``."""
    A = _square(M)
    if hermiticity_defect(A) <= HERMITIAN_TOL * max(1.0, float(np.max(np.abs(A)))):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (A + dagger(A))))))
    return float(np.sum(singular_values(A)))


def operator_norm(M) -> float:
    A = _square(M)
    if hermiticity_defect(A) <= HERMITIAN_TOL * max(1.0, float(np.max(np.abs(A)))):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (A + dagger(A))))))
    return float(singular_values(A)[0])


def trace_distance(rho, sigma) -> float:
    """``||rho - sigma||_1`` (no factor 1/2)."""
    return trace_norm(as_matrix(rho) - as_matrix(sigma))


def matrix_exp(M, terms: int = 18) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor core.

    ``M`` is scaled by ``2**-k`` until its induced 1-norm is at most 1/2, the
    truncated series is summed with Horner's rule, and the result is squared
    ``k`` times.
    """
    A = _square(M)
    n = A.shape[0]
    norm1 = float(np.max(np.sum(np.abs(A), axis=0)))
    k = 0
    if norm1 > 0.5:
        k = int(math.ceil(math.log2(norm1 / 0.5)))
    B = A / (2.0**k)
    eye = np.eye(n, dtype=complex)
    E = eye.copy()
    for j in range(terms, 0, -1):
        E = eye + (B @ E) / j
    for _ in range(k):
        E = E @ E
    return E


def kron(*factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for F in factors:
        out = np.kron(out, as_matrix(F))
    return out


def partial_trace(M, factor: str, dA: int, dB: int) -> np.ndarray:
    """Trace out subsystem ``"A"`` or ``"B"`` of an operator on ``C^dA (x) C^dB``."""
    A = _square(M)
    if dA < 1 or dB < 1 or A.shape[0] != dA * dB:
        raise ValueError(f"shape {A.shape} does not match dims ({dA}, {dB})")
    T = A.reshape(dA, dB, dA, dB)
    if factor == "A":
        return np.einsum("ijik->jk", T)
    if factor == "B":
        return np.einsum("ijkj->ik", T)
    raise ValueError(f"factor must be 'A' or 'B', got {factor!r}")


def direct_sum(A, B) -> np.ndarray:
    A = as_matrix(A)
    B = as_matrix(B)
    out = np.zeros((A.shape[0] + B.shape[0], A.shape[1] + B.shape[1]), dtype=complex)
    out[: A.shape[0], : A.shape[1]] = A
    out[A.shape[0]:, A.shape[1]:] = B
    return out


def psd_sqrt(M) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix."""
    w, V = hermitian_eig(M)
    if w[0] < -1e-10 * max(1.0, abs(w[-1])):
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ dagger(V)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
