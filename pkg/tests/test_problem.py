import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogbeam.channel import normalized_gaussian_vector, realize_network
from cogbeam.errors import UnsupportedDimensionError, ZeroSignalError
from cogbeam.extraction import solve_beamformer
from cogbeam.problem import (InterferenceSpec, QcqpProblem, Scenario, build_qcqp, chance_factor, f_cdf,
                             incomplete_beta_sum, interference_power, objective_matrix, phi_matrix,
                             q_scenario1, q_scenario2, q_scenario3, scenario3_solve, secondary_mmse_receiver,
                             secondary_sinr)
from cogbeam.rng import SeededStream

from conftest import empty_network, random_hermitian


def _identity_secondary(d_SS=10.0):
    real = realize_network(empty_network(d_SS=d_SS), SeededStream(0))
    real.H_SS = np.eye(4, dtype=complex)
    return real


# -- interference-plus-noise and objective ---------------------------------------------------------

def test_phi_without_primaries_is_noise():
    real = realize_network(empty_network(N0=2.5), SeededStream(0))
    np.testing.assert_array_equal(phi_matrix(real), 2.5 * np.eye(4))


def test_phi_interference_scales_quadratically(k2_real):
    real = copy.deepcopy(k2_real)
    real.primaries = real.primaries[:1]
    base = phi_matrix(real) - real.N0 * np.eye(4)
    real.primaries[0].t = 3.0 * real.primaries[0].t
    np.testing.assert_allclose(phi_matrix(real) - real.N0 * np.eye(4), 9.0 * base, rtol=1e-12)


def test_phi_eigenvalues_at_least_noise(k2_real):
    assert np.linalg.eigvalsh(phi_matrix(k2_real))[0] >= k2_real.N0 * (1 - 1e-12)


def test_mmse_receiver_aligns_with_transmit_when_white(rng):
    real = _identity_secondary()
    t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    r = secondary_mmse_receiver(real, t)
    assert abs(np.vdot(r, t)) / np.linalg.norm(t) == pytest.approx(1.0, abs=1e-12)


def test_mmse_receiver_beats_random_receivers(k2_real, rng):
    t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    best = secondary_sinr(k2_real, t, secondary_mmse_receiver(k2_real, t))
    others = normalized_gaussian_vector(rng, 4, (100,))
    assert all(secondary_sinr(k2_real, t, r) <= best * (1 + 1e-12) for r in others)


def test_mmse_receiver_scale_invariant(k2_real, rng):
    t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    np.testing.assert_allclose(secondary_mmse_receiver(k2_real, t), secondary_mmse_receiver(k2_real, 7.5 * t))


def test_mmse_receiver_zero_signal(k2_real):
    with pytest.raises(ZeroSignalError):
        secondary_mmse_receiver(k2_real, np.zeros(4))


def test_objective_matrix_identity_case():
    real = _identity_secondary(d_SS=1.0)
    np.testing.assert_allclose(objective_matrix(real), np.eye(4), atol=1e-15)


def test_objective_matrix_is_psd(k4_real):
    A = objective_matrix(k4_real)
    w = np.linalg.eigvalsh(A)
    assert w[0] >= -1e-10 * np.linalg.norm(A, 2)


def test_objective_matches_sinr_at_mmse_receiver(k4_real, rng):
    A = objective_matrix(k4_real)
    for _ in range(20):
        t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        direct = secondary_sinr(k4_real, t, secondary_mmse_receiver(k4_real, t))
        assert np.real(t.conj() @ A @ t) == pytest.approx(direct, rel=1e-9)


# -- scenario 1 ---------------------------------------------------------------------------------

def test_scenario1_identity_channel(k2_real):
    real = copy.deepcopy(k2_real)
    real.H_kS[0] = np.eye(4, dtype=complex)
    real.primaries[0].r = np.eye(4, dtype=complex)[0]
    spec = InterferenceSpec(Scenario.S1, real.alpha_kS, [0.01, 0.01])
    Q = q_scenario1(real, spec)[0]
    expected = np.zeros((4, 4)); expected[0, 0] = 1.0
    np.testing.assert_allclose(Q, expected, atol=1e-15)


def test_scenario1_matrices_are_rank_one(k4_real):
    spec = InterferenceSpec.from_db("S1", 5.0, 0.01, 1.0, 4)
    for Q in q_scenario1(k4_real, spec):
        w = np.linalg.eigvalsh(Q)
        assert w[-2] <= 1e-10 * np.trace(Q).real


def test_scenario1_constraint_equals_interference(k4_real, rng):
    spec = InterferenceSpec.from_db("S1", 5.0, 0.01, 1.0, 4)
    Qs = q_scenario1(k4_real, spec)
    for _ in range(10):
        t = 100 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        for k, Q in enumerate(Qs):
            level = np.real(t.conj() @ Q @ t)
            power = interference_power(k4_real, t, k)
            assert level == pytest.approx(power / spec.epsilon[k], rel=1e-12)
            assert (power <= spec.epsilon[k]) == (level <= 1.0)


# -- chance-constraint calculus -----------------------------------------------------------------

def test_chance_factor_values():
    assert chance_factor(2, 0.5) == pytest.approx(2.0, rel=1e-14)
    assert chance_factor(4, 0.01) == pytest.approx(1 / (1 - 0.01 ** (1 / 3)), rel=1e-14)
    assert chance_factor(4, 0.01) == pytest.approx(1.2745, abs=2e-4)
    assert chance_factor(4, 0.0) == 1.0


def test_chance_factor_single_antenna_rejected():
    with pytest.raises(UnsupportedDimensionError):
        chance_factor(1, 0.1)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 16), st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
def test_chance_factor_grows_with_delta(n, d1, d2):
    lo, hi = sorted((d1, d2))
    assert chance_factor(n, lo) <= chance_factor(n, hi) * (1 + 1e-12)


def test_f_cdf_values():
    assert f_cdf(0.0, 4) == 0.0
    assert f_cdf(1.0, 2) == pytest.approx(0.5)
    assert f_cdf(2.0, 4) == pytest.approx((6 / 7) ** 3, rel=1e-14)
    assert f_cdf(2.0, 4) == pytest.approx(0.6297, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.floats(1e-3, 50.0))
def test_f_cdf_equals_incomplete_beta(n, x):
    y = (n - 1) * x / ((n - 1) * x + 1)
    assert f_cdf(x, n) == pytest.approx(incomplete_beta_sum(y, n - 1, 1), rel=1e-12)


def test_incomplete_beta_matches_scipy():
    from scipy.special import betainc
    for a, b, x in [(3, 1, 0.4), (2, 5, 0.3), (4, 4, 0.77)]:
        assert incomplete_beta_sum(x, a, b) == pytest.approx(betainc(a, b, x), rel=1e-12)


def test_boundary_vector_outage_monte_carlo():
    n, delta, N = 4, 0.01, 1_000_000
    rng = np.random.default_rng(77)
    u = math.sqrt(chance_factor(n, delta)) * normalized_gaussian_vector(rng, n)
    r = normalized_gaussian_vector(rng, n, (N,))
    p_ok = np.mean(np.abs(r @ u.conj()) ** 2 <= 1.0)
    assert abs(p_ok - 0.99) <= 3 * math.sqrt(0.99 * 0.01 / N)


# -- scenario 2 ---------------------------------------------------------------------------------

def test_scenario2_zero_delta_is_worst_case(k2_real):
    spec = InterferenceSpec.from_db("S2", 5.0, 0.0, 1.0, 2)
    for k, Q in enumerate(q_scenario2(k2_real, spec)):
        H = k2_real.H_kS[k]
        np.testing.assert_allclose(Q, k2_real.alpha_kS[k] / spec.epsilon[k] * H.conj().T @ H, rtol=1e-13)


def test_scenario2_identity_channel(k2_real):
    real = copy.deepcopy(k2_real)
    real.H_kS[0] = np.eye(4, dtype=complex)
    spec = InterferenceSpec(Scenario.S2, real.alpha_kS, [0.01, 0.01])
    Q = q_scenario2(real, spec)[0]
    np.testing.assert_allclose(Q, (1 - 0.01 ** (1 / 3)) * np.eye(4), atol=1e-15)
    assert Q[0, 0].real == pytest.approx(0.7846, abs=1e-4)


# -- scenario 3 ---------------------------------------------------------------------------------

def test_scenario3_power_bound_at_unit_log():
    spec = InterferenceSpec(Scenario.S3, [2.0], [math.exp(-1)])
    _, lam, infeasible = q_scenario3(spec, [2.0], 10.0, 4)
    assert lam == pytest.approx(1.0) and not infeasible


def test_scenario3_bound_vanishes_as_delta_tends_to_one():
    spec = InterferenceSpec(Scenario.S3, [1.0], [1 - 1e-12])
    _, lam, _ = q_scenario3(spec, [1.0], 10.0, 4)
    assert lam == 10.0


def test_scenario3_zero_delta_is_infeasible():
    spec = InterferenceSpec(Scenario.S3, [1.0], [0.0])
    _, lam, infeasible = q_scenario3(spec, [1.0], 10.0, 4)
    assert infeasible and lam == 0.0


def test_scenario3_closed_form_diagonal():
    sol = scenario3_solve(np.diag([3.0, 1.0]).astype(complex), 2.0)
    np.testing.assert_allclose(sol.t_star, [math.sqrt(2), 0.0], atol=1e-14)
    assert sol.objective == pytest.approx(6.0)


def test_scenario3_closed_form_tie_break():
    sol = scenario3_solve(np.eye(3, dtype=complex), 5.0)
    assert sol.tie and sol.objective == pytest.approx(5.0)
    np.testing.assert_allclose(sol.t_star, [math.sqrt(5), 0, 0], atol=1e-14)


def test_scenario3_closed_form_matches_sdp(rng):
    from cogbeam.sdp import SdpInstance, solve_sdp
    for _ in range(10):
        B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        A = B @ B.conj().T
        lam = float(rng.uniform(0.5, 5))
        sol = scenario3_solve(A, lam)
        sdp = solve_sdp(SdpInstance(A, [np.eye(4)], [lam]))
        assert sol.objective == pytest.approx(sdp.primal_value, rel=1e-6)


# -- assembly -----------------------------------------------------------------------------------

def test_build_scenario1(k2, k2_real):
    p = build_qcqp(k2_real, k2.with_interference("S1"))
    assert p.K == 2 and p.P_max == k2.network.P_S_max and p.closed_form is None
    assert all(np.linalg.matrix_rank(q, tol=1e-10 * np.trace(q).real) == 1 for q in p.Q)


def test_build_scenario2_zero_delta(k2, k2_real):
    spec = k2.with_interference("S2", delta=0.0)
    p = build_qcqp(k2_real, spec)
    for k, q in enumerate(p.Q):
        H = k2_real.H_kS[k]
        np.testing.assert_allclose(q, k2_real.alpha_kS[k] / spec.epsilon[k] * H.conj().T @ H, rtol=1e-13)


def test_build_scenario3_consistent_with_sdp_path(k2, k2_real):
    p = build_qcqp(k2_real, k2.with_interference("S3"))
    assert p.closed_form is not None
    closed = solve_beamformer(p)
    via_sdp = solve_beamformer(QcqpProblem(p.A, p.Q, p.P_max))
    assert closed.objective == pytest.approx(via_sdp.objective, rel=1e-6)


def test_build_rejects_mismatched_spec(k2_real):
    with pytest.raises(ValueError):
        build_qcqp(k2_real, InterferenceSpec.from_db("S1", 5.0, 0.01, 1.0, 3))


def test_spec_validation():
    with pytest.raises(ValueError):
        InterferenceSpec("S1", [-1.0], [0.1])
    with pytest.raises(ValueError):
        InterferenceSpec("S2", [1.0], [1.0])


def test_constraint_values(rng):
    A = random_hermitian(rng, 3)
    p = QcqpProblem(A, [np.eye(3) * 2.0], 4.0)
    v = p.constraint_values(np.array([1.0, 0, 0]))
    np.testing.assert_allclose(v, [2.0, 0.25])
