import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cogbeam.channel import (Receiver, normalized_gaussian_vector, path_loss_gain, primary_rx_beamformer,
                             primary_tx_beamformer, realize_network, receiver_weight_matrix,
                             sample_gaussian_matrix, sample_primary_receivers)
from cogbeam.errors import DegenerateReceiverError, GeometryError, SingularityError
from cogbeam.rng import SeededStream

from conftest import empty_network


# -- random streams -----------------------------------------------------------------------------

def test_same_stream_gives_identical_draws():
    a = sample_gaussian_matrix(SeededStream(5, 1).substream(3), 4, 4)
    b = sample_gaussian_matrix(SeededStream(5, 1).substream(3), 4, 4)
    np.testing.assert_array_equal(a, b)


def test_substreams_differ():
    a = sample_gaussian_matrix(SeededStream(5).substream(0), 3, 3)
    b = sample_gaussian_matrix(SeededStream(5).substream(1), 3, 3)
    assert not np.allclose(a, b)


def test_negative_substream_index_rejected():
    with pytest.raises(ValueError):
        SeededStream(0).substream(-1)


# -- Gaussian draws -----------------------------------------------------------------------------

def test_gaussian_entries_have_unit_power():
    H = sample_gaussian_matrix(SeededStream(42), 2, 2, (25_000,))
    assert 0.99 <= np.mean(np.abs(H) ** 2) <= 1.01


def test_scalar_draw_has_normal_real_and_imaginary_parts():
    z = sample_gaussian_matrix(SeededStream(3), 1, 1, (100_000,))[..., 0, 0]
    for part in (z.real, z.imag):
        assert stats.kstest(part, "norm", args=(0, np.sqrt(0.5))).pvalue > 1e-3


def test_one_dimensional_unit_vector_has_uniform_phase():
    v = normalized_gaussian_vector(SeededStream(4), 1, (50_000,))[:, 0]
    np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-14)
    assert stats.kstest((np.angle(v) + np.pi) / (2 * np.pi), "uniform").pvalue > 1e-3


def test_unit_vector_first_coordinate_mean():
    n, N = 4, 100_000
    v = normalized_gaussian_vector(SeededStream(5), n, (N,))
    x = np.abs(v[:, 0]) ** 2
    se = np.sqrt((n - 1) / (n * n * (n + 1)) / N)   # Beta(1, n-1) variance
    assert abs(x.mean() - 1 / n) <= 3 * se


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_unit_vectors_are_normalized(n, seed):
    v = normalized_gaussian_vector(SeededStream(seed), n, (5,))
    np.testing.assert_allclose(np.linalg.norm(v, axis=-1), 1.0, atol=1e-14)


# -- path loss ----------------------------------------------------------------------------------

@pytest.mark.parametrize("d, expected", [(1.0, 1.0), (10.0, 1e-4), (13.0, 13.0 ** -4)])
def test_path_loss(d, expected):
    assert path_loss_gain(d, 4) == pytest.approx(expected, rel=1e-14)


def test_path_loss_13m_value():
    assert path_loss_gain(13.0, 4) == pytest.approx(3.501e-5, rel=1e-3)


@pytest.mark.parametrize("d", [0.0, -1.0, np.inf])
def test_path_loss_rejects_bad_distance(d):
    with pytest.raises(GeometryError):
        path_loss_gain(d, 4)


# -- primary transmitters -----------------------------------------------------------------------

def test_tx_beamformer_diagonal_channel():
    t = primary_tx_beamformer(np.diag([2.0, 1.0]).astype(complex), 1.0)
    np.testing.assert_allclose(t, [1.0, 0.0], atol=1e-14)


def test_tx_beamformer_tie_break_is_first_basis_vector():
    t, tie = primary_tx_beamformer(np.eye(2, dtype=complex), 4.0, return_tie=True)
    assert tie
    np.testing.assert_allclose(t, [2.0, 0.0], atol=1e-14)


def test_tx_beamformer_achieves_top_singular_value(rng):
    H = sample_gaussian_matrix(rng, 4, 4)
    t = primary_tx_beamformer(H, 3.0)
    assert np.linalg.norm(t) ** 2 == pytest.approx(3.0, rel=1e-12)
    gain = np.linalg.norm(H @ t) / np.linalg.norm(t)
    assert gain == pytest.approx(np.linalg.svd(H, compute_uv=False)[0], rel=1e-10)


def test_tx_beamformer_zero_channel():
    with pytest.raises(SingularityError):
        primary_tx_beamformer(np.zeros((2, 2), complex), 1.0)


# -- primary receivers --------------------------------------------------------------------------

def test_mf_weight_is_identity(rng):
    W = receiver_weight_matrix("MF", sample_gaussian_matrix(rng, 4, 2), 1.0)
    np.testing.assert_array_equal(W, np.eye(4))


def test_zf_weight_is_orthogonal_projector(rng):
    h = sample_gaussian_matrix(rng, 4, 1)
    W = receiver_weight_matrix(Receiver.ZF, h, 1.0)
    assert np.linalg.norm(W @ h) <= 1e-10
    assert np.linalg.norm(W @ W - W) <= 1e-10


def test_zf_rank_deficient_interference_raises():
    col = np.ones((4, 1), complex)
    with pytest.raises(SingularityError):
        receiver_weight_matrix("ZF", np.hstack([col, 2 * col]), 1.0)


def test_mmse_without_interference_power():
    W = receiver_weight_matrix("MMSE", np.zeros((4, 2), complex), 2.0)
    np.testing.assert_allclose(W, 0.5 * np.eye(4), atol=1e-15)


def test_rx_beamformer_normalizes():
    r = primary_rx_beamformer(np.eye(2, dtype=complex), np.array([3.0, 4.0], complex))
    np.testing.assert_allclose(r, [0.6, 0.8], atol=1e-15)


def test_rx_beamformer_degenerate():
    h = np.array([1.0, 0.0], complex)
    W = np.diag([0.0, 1.0]).astype(complex)
    with pytest.raises(DegenerateReceiverError):
        primary_rx_beamformer(W, h, link=0)


def test_mmse_receiver_first_coordinate_mean(k4):
    n = 100_000
    r = sample_primary_receivers(k4.network, 1, n, SeededStream(9))
    x = np.abs(r[:, 0]) ** 2
    N = 4
    se = np.sqrt((N - 1) / (N * N * (N + 1)) / n)
    assert abs(x.mean() - 1 / N) <= 3 * se


# -- realizations -------------------------------------------------------------------------------

def test_empty_network_samples_only_secondary_channel():
    real = realize_network(empty_network(), SeededStream(1))
    assert real.K == 0 and real.primaries == [] and real.H_SS.shape == (4, 4)


def test_k2_preset_shapes_and_gains(k2, k2_real):
    assert k2_real.K == 2
    for M in [k2_real.H_SS, *k2_real.H_kS, *k2_real.H_Sk, *sum(k2_real.H_kj, [])]:
        assert M.shape == (4, 4)
    np.testing.assert_allclose(k2_real.alpha_kS, path_loss_gain(np.array([15.0, 13.0]), 4))
    np.testing.assert_allclose(k2_real.alpha_Sk, path_loss_gain(np.array([12.4, 12.7]), 4))
    assert k2_real.alpha_SS == pytest.approx(1e-4)
    for p in k2_real.primaries:
        assert np.linalg.norm(p.r) == pytest.approx(1.0)
        assert np.linalg.norm(p.t) ** 2 == pytest.approx(p.P)


def test_realization_is_deterministic(k2):
    a = realize_network(k2.network, SeededStream(11))
    b = realize_network(k2.network, SeededStream(11))
    np.testing.assert_array_equal(a.H_SS, b.H_SS)
    for x, y in zip(a.primaries, b.primaries):
        np.testing.assert_array_equal(x.r, y.r)


def test_grid_placement_draws_secondary_position():
    from cogbeam.config import load_config
    exp = load_config("grid9_paper")
    real = realize_network(exp.network, SeededStream(2))
    assert real.K == 9
    stx, srx = real.positions["secondary_tx"], real.positions["secondary_rx"]
    assert 0 <= stx[0] <= 70 and 0 <= stx[1] <= 40
    assert np.linalg.norm(srx - stx) == pytest.approx(10.0)
