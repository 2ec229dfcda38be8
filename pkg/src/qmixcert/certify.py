"""From outcome counts to a certified Doeblin constant and mixing rate.

The lower confidence bound for each binomial cell is the exact one-sided
Clopper-Pearson bound, i.e. the ``alpha``-quantile of ``Beta(X, N - X + 1)``.
The regularized incomplete beta function is evaluated with a continued
fraction (modified Lentz) and inverted by bisection.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

_FPMIN = 1e-300
_CF_EPS = 1e-16
QUANTILE_TOL = 1e-13


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    max_iter = 200 + int(20 * math.sqrt(max(a, b)))
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # continued fraction converges fast on this side; use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def beta_quantile(q: float, a: float, b: float, tol: float = QUANTILE_TOL) -> float:
    """``x`` with ``I_x(a, b) = q``, by bisection to absolute width ``tol``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if betainc(a, b, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=65536)
def clopper_pearson_lower(X: int, N: int, alpha: float) -> float:
    """One-sided exact lower confidence bound for a binomial proportion.

    Returns 0 for ``X == 0`` and otherwise the ``alpha``-quantile of
    ``Beta(X, N - X + 1)``, so that ``P[p >= bound] >= 1 - alpha``.
    """
    if isinstance(X, bool) or isinstance(N, bool) or int(X) != X or int(N) != N:
        raise ValueError("X and N must be integers")
    X, N = int(X), int(N)
    if N < 1 or not 0 <= X <= N:
        raise ValueError(f"need 0 <= X <= N and N >= 1, got X={X}, N={N}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if X == 0:
        return 0.0
    return beta_quantile(alpha, X, N - X + 1)


# ------------------------------------------------------------------ counts

@dataclass(frozen=True)
class CountTable:
    """Successes ``X[i, j]`` for outcome ``i`` under stencil ``j`` out of ``N[j]`` trials."""

    outcomes: tuple
    stencils: tuple
    X: np.ndarray
    N: np.ndarray
    exclusive: bool = True

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.int64)
        N = np.asarray(self.N, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "stencils", tuple(self.stencils))
        if X.ndim != 2 or X.shape != (len(self.outcomes), len(self.stencils)):
            raise ValueError("X must be an outcomes x stencils matrix")
        if X.size == 0:
            raise ValueError("count table is empty")
        if N.shape != (len(self.stencils),):
            raise ValueError("N needs one trial count per stencil")
        if np.any(N < 1):
            raise ValueError("every stencil needs at least one trial")
        if np.any(X < 0) or np.any(X > N[None, :]):
            raise ValueError("successes must satisfy 0 <= X_ij <= N_j")
        if self.exclusive and np.any(X.sum(axis=0) > N):
            raise ValueError("outcome counts for a stencil exceed its trials")

    @property
    def m(self) -> int:
        return len(self.outcomes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "stencil", "successes", "trials"])
        for i, o in enumerate(self.outcomes):
            for j, s in enumerate(self.stencils):
                w.writerow([o, s, int(self.X[i, j]), int(self.N[j])])
        return buf.getvalue()


def _label_key(labels):
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


def parse_counts_csv(text: str, exclusive: bool = True) -> CountTable:
    """Parse ``outcome,stencil,successes,trials`` rows into a :class:`CountTable`."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["outcome", "stencil", "successes", "trials"]:
        raise ValueError("counts CSV must start with header outcome,stencil,successes,trials")
    cells: dict[tuple[str, str], int] = {}
    trials: dict[str, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
        o, s = row[0].strip(), row[1].strip()
        try:
            x, n = int(row[2]), int(row[3])
        except ValueError:
            raise ValueError(f"line {lineno}: successes and trials must be integers") from None
        if (o, s) in cells:
            raise ValueError(f"line {lineno}: duplicate row for outcome {o!r}, stencil {s!r}")
        if s in trials and trials[s] != n:
            raise ValueError(f"line {lineno}: stencil {s!r} has inconsistent trial counts")
        cells[(o, s)] = x
        trials[s] = n
    if not cells:
        raise ValueError("counts CSV has no data rows")
    outcomes = _label_key({o for o, _ in cells})
    stencils = _label_key(set(trials))
    X = np.zeros((len(outcomes), len(stencils)), dtype=np.int64)
    for i, o in enumerate(outcomes):
        for j, s in enumerate(stencils):
            if (o, s) not in cells:
                raise ValueError(f"missing row for outcome {o!r}, stencil {s!r}")
            X[i, j] = cells[(o, s)]
    N = np.array([trials[s] for s in stencils], dtype=np.int64)
    return CountTable(tuple(outcomes), tuple(stencils), X, N, exclusive)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


# ------------------------------------------------------------- certificate

@dataclass
class MixingCertificate:
    epsilon_hat: float
    alpha: float
    alpha_prime: float
    per_outcome_lower: list
    provenance: str = ""
    gamma_hat: float | None = None
    dt: float | None = None
    vacuous: bool = False
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "epsilon_hat": self.epsilon_hat,
            "alpha": self.alpha,
            "alpha_prime": self.alpha_prime,
            "per_outcome_lower": list(self.per_outcome_lower),
        }
        if self.gamma_hat is not None:
            out["gamma_hat"] = self.gamma_hat
            out["dt"] = self.dt
        out["input_sha"] = self.provenance
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def epsilon_hat(counts: CountTable, alpha: float, provenance: str | None = None) -> MixingCertificate:
    """Conservative Doeblin estimate ``sum_i min_j p^-_ij`` at level ``alpha / m``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    m = counts.m
    alpha_prime = alpha / m
    lowers = []
    for i in range(m):
        lowers.append(min(clopper_pearson_lower(int(counts.X[i, j]), int(counts.N[j]), alpha_prime)
                          for j in range(len(counts.stencils))))
    total = float(sum(lowers))
    notes = []
    if total > 1.0:
        msg = f"sum of per-outcome lower bounds {total:.6g} exceeds 1; clamped (inconsistent table)"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
        total = 1.0
    vacuous = total == 0.0
    if vacuous:
        notes.append("epsilon_hat is 0: the certificate is vacuous")
    if provenance is None:
        provenance = sha256_hex(counts.to_csv())
    return MixingCertificate(total, alpha, alpha_prime, lowers, provenance,
                             vacuous=vacuous, warnings=notes)


def _eps(cert) -> float:
    return cert.epsilon_hat if isinstance(cert, MixingCertificate) else float(cert)


def mixing_bound(cert, n: int, initial_distance: float) -> float:
    """``(1 - eps)^n * initial_distance``."""
    if n < 0 or initial_distance < 0:
        raise ValueError("n and initial_distance must be nonnegative")
    return (1.0 - _eps(cert)) ** n * initial_distance


def step_bound(cert, target: float, initial_distance: float) -> int | None:
    """Smallest ``k`` with ``(1 - eps)^k d0 <= target``; ``None`` when ``eps == 0``."""
    eps = _eps(cert)
    if not 0.0 < target < initial_distance:
        raise ValueError("need 0 < target < initial_distance")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if eps == 0.0:
        return None
    if eps == 1.0:
        return 1
    k = max(1, math.ceil(math.log(target / initial_distance) / math.log1p(-eps)))
    # guard the ceiling against rounding in the log ratio
    while k > 1 and (1.0 - eps) ** (k - 1) * initial_distance <= target:
        k -= 1
    while (1.0 - eps) ** k * initial_distance > target:
        k += 1
    return k


def rate_from_epsilon(epsilon: float, dt: float) -> float:
    """``-log(1 - eps) / dt``; infinite for ``eps == 1``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon == 1.0:
        return math.inf
    return -math.log1p(-epsilon) / dt


def attach_rate(cert: MixingCertificate, dt: float) -> MixingCertificate:
    cert.gamma_hat = rate_from_epsilon(cert.epsilon_hat, dt)
    cert.dt = dt
    return cert


def composed_epsilon(epsilons: Sequence[float]) -> float:
    """Product lower bound for the Doeblin constant of a parallel composite."""
    return float(np.prod([float(e) for e in epsilons]))


# -------------------------------------------------------------- simulation

def simulate_counts(instrument, stencils: Sequence, shots_per_stencil: int,
                    rng_seed: int = 0, stencil_labels: Sequence | None = None) -> CountTable:
    """Sample outcome counts for each stencil state.

    Stencil ``j`` draws its shots from a Philox stream keyed by
    ``(rng_seed, j)``, so shot ``k`` of stencil ``j`` depends only on those
    three integers.
    """
    if shots_per_stencil < 1:
        raise ValueError("shots_per_stencil must be at least 1")
    m = len(instrument.elements)
    X = np.zeros((m, len(stencils)), dtype=np.int64)
    for j, rho in enumerate(stencils):
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        probs = np.clip(instrument.probabilities(rho), 0.0, None)
        if abs(probs.sum() - 1.0) > 1e-8:
            raise ValueError(f"stencil {j}: outcome probabilities sum to {probs.sum():.10f}")
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        gen = np.random.Generator(np.random.Philox(key=[int(rng_seed) & (2**64 - 1), j]))
        u = gen.random(shots_per_stencil)
        idx = np.searchsorted(cdf, u, side="right")
        X[:, j] = np.bincount(np.minimum(idx, m - 1), minlength=m)
    N = np.full(len(stencils), shots_per_stencil, dtype=np.int64)
    labels = list(stencil_labels) if stencil_labels is not None else list(range(len(stencils)))
    return CountTable(tuple(instrument.outcomes), tuple(labels), X, N)
