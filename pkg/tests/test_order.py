import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from qmixcert import channels, linalg, order, randmat


def random_projection(d, rank, rng):
    U = randmat.random_unitary(d, rng)[:, :rank]
    return U @ U.conj().T


def test_halmos_block_commutator_is_scaled_J():
    for theta in (0.1, 0.7, 1.3):
        b = order.halmos_block(theta)
        want = math.sin(theta) * math.cos(theta) * order.J_CANONICAL
        assert np.allclose(b.commutator, want)


def test_halmos_block_rejects_out_of_range():
    with pytest.raises(ValueError):
        order.halmos_block(-0.1)
    with pytest.raises(ValueError):
        order.halmos_block(2.0)


def test_principal_angles_against_scipy(rng):
    for _ in range(10):
        P = random_projection(5, 2, rng)
        Q = random_projection(5, 2, rng)
        ours = order.principal_angles(P, Q)
        UP = np.linalg.eigh(P)[1][:, -2:]
        UQ = np.linalg.eigh(Q)[1][:, -2:]
        ref = sorted(scipy.linalg.subspace_angles(UP, UQ))
        assert np.allclose(ours, ref, atol=1e-7)


def test_principal_angle_of_halmos_block():
    b = order.halmos_block(0.4)
    assert np.allclose(order.principal_angles(b.P, b.Q), [0.4])
    assert order.principal_angles(np.diag([1.0, 0]), np.diag([0, 1.0])) == [math.pi / 2]


def test_commutator_functional_bound_and_equality():
    for theta in np.linspace(0.05, 1.5, 7):
        b = order.halmos_block(theta)
        bound = 0.5 * abs(math.sin(2 * theta))
        for sign in (1, -1):
            psi = np.array([1, sign * 1j]) / math.sqrt(2)
            assert math.isclose(order.commutator_functional(b.P, b.Q, psi), bound, abs_tol=1e-14)
        real_psi = np.array([math.cos(0.3), math.sin(0.3)])
        assert order.commutator_functional(b.P, b.Q, real_psi) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.floats(0, math.pi / 2), st.integers(0, 2**31 - 1))
def test_commutator_functional_never_exceeds_bound(theta, seed):
    b = order.halmos_block(theta)
    psi = randmat.random_pure_state(2, seed)
    assert order.commutator_functional(b.P, b.Q, psi) <= 0.5 * abs(math.sin(2 * theta)) + 1e-12


def test_sequential_deviation_against_outcome_probabilities(rng):
    P = random_projection(3, 1, rng)
    Q = random_projection(3, 2, rng)
    psi = randmat.random_pure_state(3, rng)
    # yes-yes probabilities of the two measurement orders
    p_then_q = np.linalg.norm(Q @ P @ psi) ** 2
    q_then_p = np.linalg.norm(P @ Q @ psi) ** 2
    assert math.isclose(order.sequential_deviation(P, Q, psi), p_then_q - q_then_p, abs_tol=1e-12)
    rho = np.outer(psi, psi.conj())
    assert math.isclose(order.sequential_deviation(P, Q, rho), p_then_q - q_then_p, abs_tol=1e-12)


def test_functional_and_deviation_are_different_quantities():
    b = order.halmos_block(0.6)
    psi = np.array([1, 1j]) / math.sqrt(2)
    assert order.commutator_functional(b.P, b.Q, psi) > 0.4
    assert abs(order.sequential_deviation(b.P, b.Q, psi)) < 1e-15


def test_equality_window_scan_small_grid():
    for theta in (0.2, math.pi / 4, 1.2):
        value, psi = order.equality_window_scan(theta, 100, rng_seed=3)
        assert math.isclose(value, 0.5 * abs(math.sin(2 * theta)), abs_tol=1e-9)
        assert order.window_angular_distance(psi) < 1e-3
    value, _ = order.equality_window_scan(0.0)
    assert value == 0.0
    with pytest.raises(ValueError):
        order.equality_window_scan(0.5, n_samples=10)


def test_window_angular_distance():
    assert order.window_angular_distance(np.array([1, -1j]) / math.sqrt(2)) < 1e-7
    assert math.isclose(order.window_angular_distance(np.array([1.0, 0.0])), math.pi / 4)


def test_order_residual_bound(rng):
    for _ in range(20):
        P = random_projection(4, 2, rng)
        Q = random_projection(4, 1, rng)
        R, holds = order.order_residual(P, Q)
        assert holds
        assert np.allclose(R, P @ Q @ P - Q @ P @ Q)


def test_conjugating_both_projections_preserves_commutation(rng):
    # both sides dressed by the same unitary: residual vanishes identically
    P = np.kron(order.bloch_projection(0.8), np.eye(2))
    Q = np.kron(np.eye(2), order.bloch_projection(1.1))
    U = channels.zz_coupling(1.0).kraus[0]
    R, holds = order.order_residual(U.conj().T @ P @ U, U.conj().T @ Q @ U)
    assert holds and np.max(np.abs(R)) < 1e-14


def test_coupled_pair_trivial_coupling_commutes():
    Pt, Qt = order.coupled_pair(order.bloch_projection(0.5), order.bloch_projection(1.0),
                                np.eye(4))
    assert np.max(np.abs(order.commutator(Pt, Qt))) < 1e-15
    with pytest.raises(ValueError):
        order.coupled_pair(np.eye(2), np.eye(2), np.eye(3))


def test_split_bound_triangle(rng):
    for _ in range(20):
        PA = (random_projection(2, 1, rng), random_projection(2, 1, rng))
        QB = (random_projection(2, 1, rng), random_projection(2, 1, rng))
        U = randmat.random_unitary(4, rng)
        pair = order.coupled_pair(random_projection(2, 1, rng), random_projection(2, 1, rng), U)
        rho = randmat.random_state(4, rng)
        res = order.split_bound_check(PA, QB, pair, rho)
        assert res.holds
        assert math.isclose(res.delta_AB, res.delta_loc + res.delta_nonloc, abs_tol=1e-12)


def test_split_bound_local_terms_vanish_on_product_commuting():
    Z0 = np.diag([1.0, 0])
    res = order.split_bound_check((Z0, Z0), None, (np.eye(4), np.eye(4)), np.eye(4) / 4)
    assert res.delta_A == 0 and res.delta_B == 0 and res.delta_AB == 0


def zz_oracle(gamma, a, b):
    # explicit exponential and explicit Heisenberg-picture Q
    ZZ = np.kron(np.diag([1, -1]), np.diag([1, -1])).astype(complex)
    U = scipy.linalg.expm(-0.5j * gamma * ZZ)
    P = np.kron(order.bloch_projection(a), np.eye(2))
    Q = U.conj().T @ np.kron(np.eye(2), order.bloch_projection(b)) @ U
    psi = np.full(4, 0.5)
    return abs(psi @ (P @ Q @ P - Q @ P @ Q) @ psi)


def test_zz_sweep_rows_against_oracle():
    grid = [0.0, 0.5, math.pi / 2]
    angles = order.instrument_angle_grid(3)
    rows = order.zz_order_sweep(grid, ab_steps=3)
    for row, g in zip(rows, grid):
        vals = [zz_oracle(g, a, b) for a in angles for b in angles]
        assert math.isclose(row.mean, np.mean(vals), abs_tol=1e-13)
        assert math.isclose(row.max, np.max(vals), abs_tol=1e-13)
        assert math.isclose(row.min, np.min(vals), abs_tol=1e-13)


def test_zz_sweep_worker_invariance():
    grid = order.default_gamma_grid(8)
    assert order.zz_order_sweep(grid, 5, workers=1) == order.zz_order_sweep(grid, 5, workers=4)


def test_zz_sweep_validation():
    with pytest.raises(ValueError):
        order.zz_order_sweep([])
    with pytest.raises(ValueError):
        order.zz_order_sweep([2.0])
    with pytest.raises(ValueError):
        order.zz_order_sweep([0.1], ab_steps=0)
    with pytest.raises(ValueError):
        order.zz_order_sweep([0.1], psi0="bogus")
