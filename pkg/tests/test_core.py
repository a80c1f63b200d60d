import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonsmooth_mbs.core import (
    GeneralizedState,
    ModelError,
    SystemEvaluation,
    active_set,
    initial_acceleration,
    make_initial_state,
    newly_closed,
)
from nonsmooth_mbs.scenarios import MassSpringModel

gaps = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8)


def test_active_set_examples():
    assert active_set(np.array([0.5, -0.001, 0.0, 0.2])).tolist() == [1, 2]
    assert active_set(np.array([0.1, 0.2])).size == 0
    assert active_set(np.zeros(3)).tolist() == [0, 1, 2]


def test_newly_closed_examples():
    assert newly_closed(np.array([0.001]), np.array([-0.0001])).tolist() == [0]
    assert newly_closed(np.array([-0.1]), np.array([-0.2])).size == 0
    assert newly_closed(np.array([0.1, 0.1]), np.array([0.1, 0.0])).tolist() == [1]
    with pytest.raises(ModelError):
        newly_closed(np.zeros(2), np.zeros(3))


@given(gaps, st.integers(0, 7), st.floats(0.001, 5.0))
def test_active_set_monotone_in_gaps(g, idx, dec):
    g = np.array(g)
    idx = idx % g.size
    before = set(active_set(g).tolist())
    g2 = g.copy()
    g2[idx] -= dec
    after = set(active_set(g2).tolist())
    assert before <= after


@given(gaps, gaps)
def test_newly_closed_set_relations(prev, nxt):
    n = min(len(prev), len(nxt))
    prev = np.array(prev[:n])
    nxt = np.array(nxt[:n])
    fresh = set(newly_closed(prev, nxt).tolist())
    assert fresh <= set(active_set(nxt).tolist())
    assert not (fresh & set(active_set(prev).tolist()))


def test_state_dimension_check():
    with pytest.raises(ModelError):
        GeneralizedState(0.0, np.zeros(3), np.zeros(2), np.zeros(3), np.zeros(3), np.zeros(3))


def test_evaluation_validation():
    M = np.eye(2)
    Z = np.zeros((2, 2))
    ok = SystemEvaluation(M, Z, Z, np.zeros(2), np.zeros((2, 0)), np.zeros((2, 0)), np.zeros(0), np.zeros(0))
    assert ok.n_dof == 2 and ok.n_contacts == 0
    bad_sym = M.copy()
    bad_sym[0, 1] = 1e-3
    with pytest.raises(ModelError):
        SystemEvaluation(bad_sym, Z, Z, np.zeros(2), np.zeros((2, 0)), np.zeros((2, 0)), np.zeros(0), np.zeros(0))
    with pytest.raises(ModelError):
        SystemEvaluation(-M, Z, Z, np.zeros(2), np.zeros((2, 0)), np.zeros((2, 0)), np.zeros(0), np.zeros(0))


class OneDof:
    """m = 1 point mass under a constant force, no contacts."""

    n_dof = 1
    n_contacts = 0
    eps_N = np.zeros(0)
    eps_T = np.zeros(0)
    mu = np.zeros(0)
    dof_names = ["x"]

    def evaluate(self, q, v):
        Z = np.zeros((1, 1))
        return SystemEvaluation(
            np.eye(1), Z, Z, np.array([-9.81]), np.zeros((1, 0)), np.zeros((1, 0)), np.zeros(0), np.zeros(0)
        )


def test_initial_acceleration_free_mass():
    a0 = initial_acceleration(OneDof(), np.zeros(1), np.zeros(1))
    assert a0 == pytest.approx(-9.81, abs=1e-14)


def test_initial_acceleration_mass_spring_a():
    model = MassSpringModel("stiff_spring")
    a0 = initial_acceleration(model, np.zeros(3), np.zeros(3))
    np.testing.assert_allclose(a0, [9.81, 9.81, 9.81], atol=1e-13)


def test_initial_acceleration_residual_random_stiffness():
    # beam-like SPD system: a0 must solve M a0 = h - K q - C v to near roundoff
    rng = np.random.default_rng(7)
    n = 9

    class Dense:
        n_dof = n
        n_contacts = 0
        eps_N = np.zeros(0)
        eps_T = np.zeros(0)
        mu = np.zeros(0)
        dof_names = [f"x{i}" for i in range(n)]

        def __init__(self):
            A = rng.standard_normal((n, n))
            self.M = A @ A.T + n * np.eye(n)
            B = rng.standard_normal((n, n))
            self.K = B @ B.T
            self.C = np.zeros((n, n))
            self.h = rng.standard_normal(n)

        def evaluate(self, q, v):
            return SystemEvaluation(
                self.M, self.C, self.K, self.h, np.zeros((n, 0)), np.zeros((n, 0)), np.zeros(0), np.zeros(0)
            )

    model = Dense()
    q0 = rng.standard_normal(n)
    v0 = rng.standard_normal(n)
    a0 = initial_acceleration(model, q0, v0)
    rhs = model.h - model.K @ q0
    assert np.linalg.norm(model.M @ a0 - rhs) <= 1e-10 * np.linalg.norm(rhs)
    # independent dense-solve oracle
    np.testing.assert_allclose(a0, np.linalg.solve(model.M, rhs), rtol=1e-12)


def test_initial_state_with_closed_contacts():
    model = MassSpringModel("bilateral")
    state = make_initial_state(model, np.zeros(3), np.zeros(3))
    # constraint force holds mass 3: zero initial acceleration there
    np.testing.assert_allclose(state.a[:2], [9.81, 9.81], atol=1e-12)
    assert abs(state.a[2]) < 1e-10
    strict = make_initial_state(model, np.zeros(3), np.zeros(3), include_contact_forces=False)
    assert strict.a[2] == pytest.approx(9.81, abs=1e-13)


def test_initial_state_velocity_aliasing():
    model = MassSpringModel("stiff_spring")
    st0 = make_initial_state(model, np.zeros(3), np.zeros(3))
    assert st0.v_minus is not st0.v_plus
    np.testing.assert_array_equal(st0.v_minus, st0.v_plus)
