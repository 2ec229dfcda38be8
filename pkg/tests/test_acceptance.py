"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import hashlib
import math
import time

import numpy as np
import pytest

from qmixcert import certify, channels, cli, doeblin, linalg, lindblad, order, randmat
from qmixcert.channels import Channel, compose_parallel, identity


def _report(number: int, title: str, ok: bool, detail: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"


def _csv_rows(path):
    lines = path.read_text().splitlines()
    return lines[0], [[float(v) for v in l.split(",")] for l in lines[1:]]


# ------------------------------------------------------------- criteria

def criterion_1(tmp):
    out = tmp / "table.csv"
    t0 = time.perf_counter()
    code = cli.main(["doeblin-table", "--pairs", "0.2:0.5,0.3:0.3,0.4:0.7", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    # full-precision values from the same computation the file is written from
    D = channels.diagonal_projection(3)
    worst = 0.0
    expected = [(0.2, 0.5, 0.10), (0.3, 0.3, 0.09), (0.4, 0.7, 0.28)]
    for p, q, pq in expected:
        res = doeblin.product_bound_check(channels.dephasing(p, 3), channels.dephasing(q, 3), D, D)
        worst = max(worst, abs(res.delta_A - p), abs(res.delta_B - q), abs(res.delta_AB - pq))
    _, rows = _csv_rows(out)
    file_ok = all(abs(a - b) <= 1e-6 for row, (p, q, pq) in zip(rows, expected)
                  for a, b in zip(row, (p, q, p, q, pq)))
    ok = code == 0 and worst <= 1e-6 and file_ok and len(rows) == 3 and elapsed < 10
    return ok, f"max deviation {worst:.2e}, runtime {elapsed:.2f}s"


def criterion_2(tmp):
    t0 = time.perf_counter()
    thetas = [k * (math.pi / 2) / 101 for k in range(1, 101)]
    worst_value = worst_angle = 0.0
    for theta in thetas:
        value, psi = order.equality_window_scan(theta, 400, rng_seed=0)
        worst_value = max(worst_value, abs(value - 0.5 * abs(math.sin(2 * theta))))
        worst_angle = max(worst_angle, order.window_angular_distance(psi))
    zero_value, _ = order.equality_window_scan(0.0, 400)
    elapsed = time.perf_counter() - t0
    ok = worst_value <= 1e-6 and worst_angle <= 1e-3 and zero_value <= 1e-12 and elapsed < 30
    return ok, (f"max value gap {worst_value:.2e}, max angle {worst_angle:.2e}, "
                f"theta=0 max {zero_value:.1e}, runtime {elapsed:.2f}s")


def _random_channel(d, n, rng):
    return Channel(randmat.random_kraus(d, d, n, rng))


def _mixture(weight, seed: Channel, other: Channel) -> Channel:
    J = weight * seed.choi + (1 - weight) * other.choi
    return channels.channel_from_choi(J, seed.dim_in, seed.dim_out)


def criterion_3(tmp):
    rng = np.random.default_rng(3)
    violations = 0
    worst = math.inf
    nontrivial = 0
    for k in range(200):
        seeds = []
        maps = []
        for _ in range(2):
            if k % 2:
                seed = channels.replacement(randmat.random_state(2, rng))
            else:
                seed = _random_channel(2, int(rng.integers(1, 4)), rng)
            phi = _mixture(rng.uniform(0.1, 0.9), seed, _random_channel(2, int(rng.integers(1, 5)), rng))
            seeds.append(seed)
            maps.append(phi)
        res = doeblin.product_bound_check(maps[0], maps[1], seeds[0], seeds[1])
        margin = res.delta_AB - res.delta_A * res.delta_B
        worst = min(worst, margin)
        nontrivial += res.delta_A * res.delta_B > 0
        if margin < -1e-7:
            violations += 1
    return violations == 0, f"{violations} violations, min margin {worst:.2e}, {nontrivial} nontrivial pairs"


def criterion_4(tmp):
    worst_dep = 0.0
    for lam in (0.1, 0.3, 0.7):
        res = doeblin.traceless_contraction_factor(channels.depolarizing(lam, 2), lam, 100)
        worst_dep = max(worst_dep, abs(res.max_ratio - (1 - lam)))
    rng = np.random.default_rng(4)
    failures = 0
    for k in range(100):
        d = 2 if k % 2 else 3
        seed = channels.replacement(randmat.random_state(d, rng))
        phi = _mixture(rng.uniform(0.05, 0.95), seed, _random_channel(d, int(rng.integers(1, 4)), rng))
        delta = doeblin.doeblin_constant(phi, seed).epsilon
        for _ in range(100):
            X = randmat.random_traceless_hermitian(d, rng)
            if linalg.trace_norm(phi.apply(X)) > (1 - delta) * linalg.trace_norm(X) + 1e-9:
                failures += 1
    ok = worst_dep <= 1e-8 and failures == 0
    return ok, f"depolarizing ratio error {worst_dep:.1e}, {failures} contraction failures"


def criterion_5(tmp):
    t0 = time.perf_counter()
    closed = 0.0
    for N in (1, 5, 10, 50, 200):
        closed = max(closed, abs(certify.clopper_pearson_lower(0, N, 0.05)))
        closed = max(closed, abs(certify.clopper_pearson_lower(N, N, 0.05) - 0.05 ** (1 / N)))
    p, N, alpha = 0.3, 50, 0.05
    draws = np.random.default_rng(5).binomial(N, p, size=2000)
    covered = sum(certify.clopper_pearson_lower(int(x), N, alpha) <= p for x in draws)
    coverage = covered / len(draws)
    elapsed = time.perf_counter() - t0
    ok = closed <= 1e-10 and coverage >= 0.94 and elapsed < 20
    return ok, f"closed-form error {closed:.1e}, coverage {coverage:.4f}, runtime {elapsed:.2f}s"


def criterion_6(tmp):
    lam = 0.3
    inst = channels.lueders_instrument([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    inst = inst.after(channels.depolarizing(lam, 2))
    loop = inst.total()
    stencils = [np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                np.array([1.0, 1.0]) / math.sqrt(2), np.array([1.0, 1j]) / math.sqrt(2)]
    rho0 = np.diag([1.0, 0.0])
    tau = np.eye(2) / 2
    traj = doeblin.mixing_trajectory(loop, rho0, tau, 50)
    d0 = traj[0][1]
    # exact contraction of this loop: (1 - lam)^n from |0><0|
    exact_ok = all(abs(dist - (1 - lam) ** n * d0) <= 1e-12 for n, dist in traj)
    dominated = 0
    eps_values = []
    for run in range(200):
        counts = certify.simulate_counts(inst, stencils, 2000, rng_seed=run)
        cert = certify.epsilon_hat(counts, 0.05)
        eps_values.append(cert.epsilon_hat)
        if all(certify.mixing_bound(cert, n, d0) >= dist - 1e-12 for n, dist in traj):
            dominated += 1
    rate = dominated / 200
    ok = exact_ok and rate >= 0.95
    return ok, (f"bound dominates in {rate:.1%} of runs, mean epsilon_hat "
                f"{np.mean(eps_values):.4f} (true {lam})")


def criterion_7(tmp):
    t0 = time.perf_counter()
    dts = [0.2, 0.1, 0.05, 0.025]
    kappa = 1.0
    G = lindblad.depolarizing_generator(kappa)
    exact = lindblad.limit_sweep(G, None, dts, 1.0, "exact")
    gamma_err = max(abs(r.gamma - kappa) for r in exact)
    first = lindblad.limit_sweep(G, None, dts, 1.0, "first-order")
    slope = lindblad.loglog_slope(dts, [r.embed_error for r in first])
    out = tmp / "sweep.csv"
    code = cli.main(["lindblad-sweep", "--family", "depolarizing", "--kappa", "1.0",
                     "--dts", "0.2,0.1,0.05,0.025", "--t", "1.0", "--mode", "exact", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    ok = gamma_err <= 1e-9 and 0.8 <= slope <= 1.2 and code == 0 and elapsed < 30
    return ok, f"exact-step gamma error {gamma_err:.1e}, first-order slope {slope:.4f}, runtime {elapsed:.2f}s"


def criterion_8(tmp):
    a, b = tmp / "fig_a.csv", tmp / "fig_b.csv"
    args = ["order-sweep", "--gamma-steps", "16", "--ab-steps", "12", "--seed", "1"]
    codes = [cli.main(args + ["--out", str(a)]), cli.main(args + ["--out", str(b)])]
    header, rows = _csv_rows(a)
    means = [r[1] for r in rows]
    zero_row = a.read_text().splitlines()[1] == "0.000000,0.000000,0.000000,0.000000"
    monotone = all(y >= x for x, y in zip(means, means[1:]))
    same = hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()
    ok = codes == [0, 0] and header == "gamma,mean,min,max" and len(rows) == 16 \
        and means[0] == 0.0 and zero_row and monotone and same
    return ok, f"{len(rows)} rows, mean(0)={means[0]}, nondecreasing={monotone}, byte-identical={same}"


def _extended_oracle(Phi_A, Phi_B, Psi, psi):
    # (Theta (x) id)(|psi><psi|) from Kraus actions, one ancilla block at a time
    dA, dB = Phi_A.dim_in, Phi_B.dim_in
    d = dA * dB
    LA = compose_parallel(Phi_A, identity(dB))
    LB = compose_parallel(identity(dA), Phi_B)
    M = np.asarray(psi).reshape(d, d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            X = np.outer(M[:, a], M[:, b].conj())
            blk = LB.apply(Psi.apply(LA.apply(X))) - LA.apply(Psi.apply(LB.apply(X)))
            E = np.zeros((d, d))
            E[a, b] = 1
            out += np.kron(blk, E)
    return out


def criterion_9(tmp):
    D = channels.diagonal_projection(2)
    ident = doeblin.diamond_theorem_check(channels.dephasing(0.2, 2), channels.dephasing(0.5, 2),
                                          identity(4), D, D, restarts=32, rng_seed=1)
    ident_ok = ident.lower == 0 and ident.verdict == "holds"
    R = channels.replacement(np.diag([1.0, 0.0]))
    swap = doeblin.diamond_theorem_check(R, R, channels.swap(2), R, R, restarts=32, rng_seed=1)
    witness_value = linalg.trace_norm(_extended_oracle(R, R, channels.swap(2), swap.witness))
    swap_ok = (swap.verdict == "violated" and swap.theorem_rhs == 0.0 and witness_value > 1e-3
               and abs(np.linalg.norm(swap.witness) - 1) < 1e-12)
    rng = np.random.default_rng(9)
    order_violations = 0
    verdicts: dict[str, int] = {}
    for _ in range(50):
        p, q = rng.uniform(0, 1, size=2)
        Psi = channels.unitary_channel(randmat.random_unitary(4, rng))
        rep = doeblin.diamond_theorem_check(channels.dephasing(p, 2), channels.dephasing(q, 2), Psi,
                                            D, D, restarts=32, rng_seed=int(rng.integers(2**31)))
        order_violations += rep.lower > rep.upper + 1e-9
        verdicts[rep.verdict] = verdicts.get(rep.verdict, 0) + 1
    ok = ident_ok and swap_ok and order_violations == 0
    return ok, (f"identity lower={ident.lower} ({ident.verdict}), swap witness norm "
                f"{witness_value:.4f} vs rhs {swap.theorem_rhs} ({swap.verdict}), "
                f"random instances lower>upper: {order_violations}, verdicts {verdicts}")


def criterion_10(tmp):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    failures = []
    count = 0
    for k in range(150):
        d = int(rng.integers(1, 9))
        H = randmat.random_hermitian(d, rng)
        w, V = linalg.hermitian_eig(H, method="jacobi" if k % 2 else "lapack")
        count += 1
        if not linalg.allclose(V @ np.diag(w) @ V.conj().T, H, 1e-10):
            failures.append(("eig", k))
    for k in range(150):
        dims = rng.integers(1, 4, size=4)
        A = randmat.ginibre(dims[0], dims[1], rng)
        C = randmat.ginibre(dims[1], dims[2], rng)
        B = randmat.ginibre(dims[3], dims[0], rng)
        Dm = randmat.ginibre(dims[0], dims[3], rng)
        count += 1
        if not linalg.allclose(linalg.kron(A, B) @ linalg.kron(C, Dm), linalg.kron(A @ C, B @ Dm), 1e-12):
            failures.append(("kron", k))
    for k in range(100):
        d = int(rng.integers(2, 4))
        G = lindblad.GKLSGenerator(randmat.random_hermitian(d, rng),
                                   tuple(0.5 * randmat.ginibre(d, d, rng) for _ in range(2)))
        s, t = rng.uniform(0.05, 1.0, size=2)
        lhs = channels.compose_serial(lindblad.semigroup(G, s), lindblad.semigroup(G, t))
        count += 1
        if not linalg.allclose(lhs.choi, lindblad.semigroup(G, s + t).choi, 1e-10):
            failures.append(("semigroup", k))
    for k in range(100):
        d = int(rng.integers(2, 4))
        phi = Channel(randmat.random_kraus(d, d, int(rng.integers(1, 5)), rng))
        count += 1
        if not channels.is_cptp(phi, 1e-10):
            failures.append(("cptp", k))
        # transpose after phi: still TP, but not CP for generic phi
        J = phi.choi.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)
        if linalg.min_eigenvalue(J) < -1e-10 and channels.is_cptp(channels.LinearMap(J, d, d), 1e-10):
            failures.append(("non-cp", k))
    elapsed = time.perf_counter() - t0
    ok = not failures and count == 500 and elapsed < 60
    return ok, f"{count} instances, {len(failures)} failures, runtime {elapsed:.2f}s"


CRITERIA = [
    (1, "product Doeblin table", criterion_1),
    (2, "equality window", criterion_2),
    (3, "product bound property suite", criterion_3),
    (4, "traceless contraction", criterion_4),
    (5, "Clopper-Pearson", criterion_5),
    (6, "end-to-end certificate soundness", criterion_6),
    (7, "monitored limit", criterion_7),
    (8, "order-sweep trend and determinism", criterion_8),
    (9, "diamond harness", criterion_9),
    (10, "numerics floor", criterion_10),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, check, tmp_path, capsys):
    ok, detail = check(tmp_path)
    with capsys.disabled():
        print("\n" + _report(number, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for number, title, check in CRITERIA:
            ok, detail = check(Path(tmp))
            failed += not ok
            print(_report(number, title, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
