import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonsmooth_mbs.contact import (
    ContactSolverError,
    SolveContext,
    apply_impulse,
    build_context,
    build_impulse_context,
    prox_interval,
    prox_nonneg,
    solve_contact_forces,
    solve_impulses,
)

from oracles import enumerate_contact_solution, random_contact_problem

finite = st.floats(-1e8, 1e8, allow_nan=False)


def test_prox_nonneg_examples():
    assert prox_nonneg(-3.0) == 0.0
    assert prox_nonneg(0.0) == 0.0
    assert prox_nonneg(2.5) == 2.5


def test_prox_interval_examples():
    assert prox_interval(0.5, 0.2) == pytest.approx(0.2)
    assert prox_interval(-0.05, 0.2) == pytest.approx(-0.05)
    assert prox_interval(123.4, 0.0) == 0.0
    assert prox_interval(-123.4, 0.0) == 0.0
    with pytest.raises(ValueError):
        prox_interval(1.0, -0.1)


@given(finite)
def test_prox_nonneg_idempotent(x):
    assert prox_nonneg(prox_nonneg(x)) == prox_nonneg(x)


@given(finite, st.floats(0, 1e8, allow_nan=False))
def test_prox_interval_idempotent(x, bound):
    assert prox_interval(prox_interval(x, bound), bound) == prox_interval(x, bound)


def _scalar_context(G, F, mu=0.0, scale=1.0, r=0.1):
    one = np.array([[G]])
    zero = np.zeros((1, 1))
    return SolveContext(
        G_NN=one, G_NT=zero, G_TN=zero, G_TT=zero,
        F_N=np.array([F]), F_T=np.zeros(1), scale=scale, r=r,
        active=np.array([0]), n_contacts=1, mu=np.array([mu]),
    )


def test_single_contact_approaching():
    # gdot = -1 + lam -> lam = 1 closes the gap velocity exactly
    forces = solve_contact_forces(_scalar_context(1.0, -1.0))
    assert forces.lambda_N[0] == pytest.approx(1.0, abs=1e-10)
    gdot = -1.0 + forces.lambda_N[0]
    assert abs(gdot) < 1e-10


def test_single_contact_separating():
    forces = solve_contact_forces(_scalar_context(1.0, +1.0))
    assert forces.lambda_N[0] == 0.0


def test_build_context_single_mass():
    # M = m I, W_N = e_j -> G_NN = 1/m
    m = 2.5
    W = np.zeros((3, 1))
    W[1, 0] = 1.0
    ctx = build_context(W, np.zeros((3, 1)), m * np.eye(3), np.zeros(3), 1.0, 0.1,
                        np.array([0]), 1, np.array([0.0]))
    assert ctx.G_NN[0, 0] == pytest.approx(1.0 / m, rel=1e-14)


def test_build_context_disjoint_contacts():
    W_N = np.zeros((4, 2))
    W_N[0, 0] = 1.0
    W_N[2, 1] = 1.0
    W_T = np.zeros((4, 2))
    W_T[1, 0] = 1.0
    W_T[3, 1] = 1.0
    M = np.diag([1.0, 2.0, 3.0, 4.0])
    ctx = build_context(W_N, W_T, M, np.zeros(4), 1.0, 0.1, np.array([0, 1]), 2, np.zeros(2))
    assert abs(ctx.G_NN[0, 1]) == 0.0
    assert np.abs(ctx.G_NT).max() == 0.0


def test_build_context_matches_dense_factorization():
    rng = np.random.default_rng(0)
    n, m = 7, 3
    A = rng.standard_normal((n, n))
    M_hat = A @ A.T + n * np.eye(n)
    W_N = rng.standard_normal((n, m))
    W_T = rng.standard_normal((n, m))
    rhs = rng.standard_normal(n)
    act = np.arange(m)
    ctx = build_context(W_N, W_T, M_hat, rhs, 2.0, 0.1, act, m, np.zeros(m))
    X = np.linalg.solve(M_hat, np.hstack([W_N, W_T]))
    np.testing.assert_allclose(ctx.G_NN, W_N.T @ X[:, :m], rtol=1e-12)
    np.testing.assert_allclose(ctx.G_TT, W_T.T @ X[:, m:], rtol=1e-12)
    np.testing.assert_allclose(ctx.F_N, 2.0 * W_N.T @ np.linalg.solve(M_hat, rhs), rtol=1e-12)


def test_force_solver_matches_enumeration_oracle():
    rng = np.random.default_rng(1234)
    matched = 0
    for _ in range(120):
        m = int(rng.integers(1, 5))
        G_NN, G_NT, G_TN, G_TT, F_N, F_T, mu = random_contact_problem(rng, m)
        oracle = enumerate_contact_solution(G_NN, G_NT, G_TN, G_TT, F_N, F_T, mu)
        if oracle is None:
            continue
        ctx = SolveContext(G_NN, G_NT, G_TN, G_TT, F_N, F_T, 1.0, 0.1,
                           np.arange(m), m, mu)
        forces = solve_contact_forces(ctx, tol=1e-13)
        np.testing.assert_allclose(forces.lambda_N, oracle[0], atol=1e-8)
        np.testing.assert_allclose(forces.lambda_T, oracle[1], atol=1e-8)
        matched += 1
    assert matched > 100


def test_complementarity_at_convergence():
    rng = np.random.default_rng(77)
    for _ in range(40):
        m = int(rng.integers(1, 5))
        G_NN, G_NT, G_TN, G_TT, F_N, F_T, mu = random_contact_problem(rng, m)
        ctx = SolveContext(G_NN, G_NT, G_TN, G_TT, F_N, F_T, 1.0, 0.1, np.arange(m), m, mu)
        forces = solve_contact_forces(ctx, tol=1e-12)
        gdot_N, _ = ctx.gap_velocities(forces.lambda_N, forces.lambda_T)
        for k in range(m):
            assert forces.lambda_N[k] >= -1e-10
            assert abs(forces.lambda_T[k]) <= mu[k] * forces.lambda_N[k] + 1e-10
            assert min(forces.lambda_N[k], max(gdot_N[k], 0.0)) <= 1e-11
            if forces.lambda_N[k] > 1e-12:
                assert abs(forces.lambda_N[k] * gdot_N[k]) <= 1e-8 * max(1.0, forces.lambda_N[k])


def test_impulse_wall_example():
    # 1-DOF wall impact: m=1, gdot- = -1, eps=0.4 -> Lambda = 1.4, gdot+ = 0.4
    M = np.eye(1)
    W_N = np.eye(1)
    W_T = np.zeros((1, 1))
    ctx = build_impulse_context(M, W_N, W_T, np.array([-1.0]), np.array([0.4]),
                                np.zeros(1), np.zeros(1), np.array([0]), r=0.1 * 1e-3)
    imp = solve_impulses(ctx)
    assert imp.Lambda_N[0] == pytest.approx(1.4, abs=1e-10)
    v_plus = apply_impulse(M, np.array([-1.0]), W_N, W_T, imp.Lambda_N, imp.Lambda_T)
    assert v_plus[0] == pytest.approx(0.4, abs=1e-10)


def test_impulse_separating_contact():
    M = np.eye(1)
    ctx = build_impulse_context(M, np.eye(1), np.zeros((1, 1)), np.array([+1.0]),
                                np.array([0.4]), np.zeros(1), np.zeros(1), np.array([0]), r=1e-4)
    imp = solve_impulses(ctx)
    assert imp.Lambda_N[0] == 0.0


def test_impulse_solver_matches_enumeration_oracle():
    rng = np.random.default_rng(4321)
    matched = 0
    for _ in range(120):
        m = int(rng.integers(1, 5))
        G_NN, G_NT, G_TN, G_TT, F_N, F_T, mu = random_contact_problem(rng, m, impulse=True)
        oracle = enumerate_contact_solution(G_NN, G_NT, G_TN, G_TT, F_N, F_T, mu)
        if oracle is None:
            continue
        # multiplier accuracy scales like tol / r, so the oracle comparison
        # runs the solver tighter than the simulation default
        ctx = SolveContext(G_NN, G_NT, G_TN, G_TT, F_N, F_T, 1.0, 0.1 * 1e-3,
                           np.arange(m), m, mu)
        imp = solve_impulses(ctx, tol=1e-13)
        np.testing.assert_allclose(imp.Lambda_N, oracle[0], atol=1e-8)
        np.testing.assert_allclose(imp.Lambda_T, oracle[1], atol=1e-8)
        matched += 1
    assert matched > 100


def test_newton_impact_law_post_condition():
    rng = np.random.default_rng(5)
    for _ in range(30):
        m = int(rng.integers(1, 4))
        n = m + 2
        W_N = rng.standard_normal((n, m))
        W_T = np.zeros((n, m))
        A = rng.standard_normal((n, n))
        M = A @ A.T + n * np.eye(n)
        v_minus = rng.standard_normal(n)
        eps_N = rng.uniform(0, 1, m)
        ctx = build_impulse_context(M, W_N, W_T, v_minus, eps_N, np.zeros(m),
                                    np.zeros(m), np.arange(m), r=1e-4)
        imp = solve_impulses(ctx, tol=1e-12)
        v_plus = apply_impulse(M, v_minus, W_N, W_T, imp.Lambda_N, imp.Lambda_T)
        g_plus = W_N.T @ v_plus
        g_minus = W_N.T @ v_minus
        for k in range(m):
            bar = g_plus[k] + eps_N[k] * g_minus[k]
            if imp.Lambda_N[k] > 1e-12:
                assert abs(bar) <= 1e-10
            else:
                assert bar >= -1e-10


def test_impulse_energy_balance():
    rng = np.random.default_rng(9)
    n, m = 5, 3
    W_N = rng.standard_normal((n, m))
    A = rng.standard_normal((n, n))
    M = A @ A.T + n * np.eye(n)
    v_minus = rng.standard_normal(n)
    # eps = 1, mu = 0: kinetic energy conserved
    ctx = build_impulse_context(M, W_N, np.zeros((n, m)), v_minus, np.ones(m),
                                np.zeros(m), np.zeros(m), np.arange(m), r=1e-4)
    imp = solve_impulses(ctx, tol=1e-13)
    v_plus = apply_impulse(M, v_minus, W_N, np.zeros((n, m)), imp.Lambda_N, imp.Lambda_T)
    T_minus = 0.5 * v_minus @ M @ v_minus
    T_plus = 0.5 * v_plus @ M @ v_plus
    assert abs(T_plus - T_minus) <= 1e-9 * T_minus
    # eps < 1: non-increasing
    ctx = build_impulse_context(M, W_N, np.zeros((n, m)), v_minus, 0.3 * np.ones(m),
                                np.zeros(m), np.zeros(m), np.arange(m), r=1e-4)
    imp = solve_impulses(ctx, tol=1e-13)
    v_plus = apply_impulse(M, v_minus, W_N, np.zeros((n, m)), imp.Lambda_N, imp.Lambda_T)
    assert 0.5 * v_plus @ M @ v_plus <= T_minus * (1.0 + 1e-12)


def test_tangential_restitution_supported():
    # no published value exercises eps_T != 0; the contract still honors the
    # tangential Newton law when sticking is feasible (normal along x,
    # tangential along y, friction bound far from active)
    M2 = np.eye(2)
    W_N2 = np.array([[1.0], [0.0]])
    W_T2 = np.array([[0.0], [1.0]])
    v2 = np.array([-1.0, -2.0])
    ctx = build_impulse_context(M2, W_N2, W_T2, v2, np.array([0.0]), np.array([0.5]),
                                np.array([10.0]), np.array([0]), r=1e-3)
    imp = solve_impulses(ctx, tol=1e-13)
    v_plus = apply_impulse(M2, v2, W_N2, W_T2, imp.Lambda_N, imp.Lambda_T)
    assert v_plus[0] == pytest.approx(0.0, abs=1e-10)          # eps_N = 0
    assert v_plus[1] == pytest.approx(-0.5 * v2[1], abs=1e-10)  # eps_T = 0.5


def test_apply_impulse_identity_on_zero():
    M = np.diag([2.0, 3.0])
    v = np.array([0.1, -0.2])
    W = np.zeros((2, 1))
    out = apply_impulse(M, v, W, W, np.zeros(1), np.zeros(1))
    assert out is v  # bit-for-bit


def test_apply_impulse_momentum_residual():
    rng = np.random.default_rng(11)
    n, m = 6, 2
    A = rng.standard_normal((n, n))
    M = A @ A.T + n * np.eye(n)
    W_N = rng.standard_normal((n, m))
    W_T = rng.standard_normal((n, m))
    L_N = rng.uniform(0, 1, m)
    L_T = rng.standard_normal(m) * 0.1
    v = rng.standard_normal(n)
    v_plus = apply_impulse(M, v, W_N, W_T, L_N, L_T)
    residual = M @ (v_plus - v) - W_N @ L_N - W_T @ L_T
    assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(W_N @ L_N + W_T @ L_T)


def test_dependent_contacts_need_pseudoinverse():
    # two opposed rows of a bilateral pair: singular Delassus, solvable via pinv
    G = np.array([[1.0, -1.0], [-1.0, 1.0]])
    Z = np.zeros((2, 2))
    ctx = SolveContext(G, Z, Z, Z, np.array([-1.0, 1.0]), np.zeros(2), 1.0, 0.1,
                       np.array([0, 1]), 2, np.zeros(2))
    forces = solve_contact_forces(ctx)
    gdot_N, _ = ctx.gap_velocities(forces.lambda_N, forces.lambda_T)
    assert gdot_N[0] >= -1e-10
    assert forces.lambda_N[0] >= 1.0 - 1e-8  # must push at least the approach velocity away


def test_solver_error_reports_residual():
    # infeasible-by-construction: negative definite "Delassus" makes the map repulsive
    G = np.array([[-1.0]])
    Z = np.zeros((1, 1))
    ctx = SolveContext(G, Z, Z, Z, np.array([-1.0]), np.zeros(1), 1.0, 0.1,
                       np.array([0]), 1, np.zeros(1))
    with pytest.raises(ContactSolverError) as exc:
        solve_contact_forces(ctx, tol=1e-12, max_iter=20)
    assert exc.value.residual > 0


def test_delassus_blocks_symmetric_for_symmetric_effective_matrix():
    rng = np.random.default_rng(17)
    n, m = 6, 3
    A = rng.standard_normal((n, n))
    M_hat = A @ A.T + n * np.eye(n)
    W_N = rng.standard_normal((n, m))
    W_T = rng.standard_normal((n, m))
    ctx = build_context(W_N, W_T, M_hat, np.zeros(n), 1.0, 0.1, np.arange(m), m, np.zeros(m))
    assert np.abs(ctx.G_NN - ctx.G_NN.T).max() <= 1e-10 * np.abs(ctx.G_NN).max()
    assert np.abs(ctx.G_TT - ctx.G_TT.T).max() <= 1e-10 * np.abs(ctx.G_TT).max()
    assert np.abs(ctx.G_NT - ctx.G_TN.T).max() <= 1e-10 * np.abs(ctx.G_NT).max()


def test_multipliers_zero_off_the_active_set():
    G = np.array([[1.0]])
    Z = np.zeros((1, 1))
    # contact index 2 of 4 is active; all others must stay exactly zero
    ctx = SolveContext(G, Z, Z, Z, np.array([-1.0]), np.zeros(1), 1.0, 0.1,
                       np.array([2]), 4, np.array([0.3]))
    forces = solve_contact_forces(ctx)
    assert forces.lambda_N[2] > 0
    mask = np.ones(4, dtype=bool)
    mask[2] = False
    assert np.all(forces.lambda_N[mask] == 0.0)
    assert np.all(forces.lambda_T[mask] == 0.0)
