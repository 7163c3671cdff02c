"""Block diagonalization and spectral-efficiency scoring."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gobsim import (
    block_diagonalize,
    effective_throughput,
    quantize_feedback,
    se_bd,
    se_general,
    tdd_benchmark,
)
from gobsim.errors import InfeasibleAssignmentError


def _random_h_bars(rng, k_users, m_ue, m_bs):
    return [
        rng.standard_normal((m_ue, m_bs)) + 1j * rng.standard_normal((m_ue, m_bs))
        for _ in range(k_users)
    ]


def test_bd_nulls_every_cross_link():
    rng = np.random.default_rng(31)
    h_bars = _random_h_bars(rng, 3, 2, 7)
    bd = block_diagonalize(h_bars)
    for k in range(3):
        for j in range(3):
            if j != k:
                res = np.linalg.norm(h_bars[j] @ bd.v_bars[k]) / np.linalg.norm(h_bars[j])
                assert res < 1e-10


def test_bd_beamformers_are_orthonormal_with_descending_gains():
    rng = np.random.default_rng(32)
    bd = block_diagonalize(_random_h_bars(rng, 2, 2, 6))
    for k in range(2):
        v, w, s = bd.v_bars[k], bd.w_bars[k], np.asarray(bd.sv[k])
        assert_allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-10)
        assert_allclose(w.conj().T @ w, np.eye(w.shape[1]), atol=1e-10)
        assert (s[:-1] >= s[1:] - 1e-12).all() and (s > 0).all()
        assert bd.ranks[k] == min(2, 6 - 2)


def test_bd_raises_when_null_space_is_gone():
    rng = np.random.default_rng(33)
    h_bars = _random_h_bars(rng, 3, 2, 4)
    with pytest.raises(InfeasibleAssignmentError) as exc:
        block_diagonalize(h_bars)
    assert exc.value.ue_index == 0


def test_single_user_bd_is_plain_svd():
    rng = np.random.default_rng(34)
    h = _random_h_bars(rng, 1, 2, 5)[0]
    bd = block_diagonalize([h])
    sv = np.linalg.svd(h, compute_uv=False)
    assert_allclose(np.asarray(bd.sv[0]), sv[:2], atol=1e-10)


def test_se_general_equals_spectral_form_at_bd_solution():
    rng = np.random.default_rng(35)
    k_users, m_ue, m_bs = 2, 2, 6
    h_bars = _random_h_bars(rng, k_users, m_ue, m_bs)
    bd = block_diagonalize(h_bars)
    w_blocks = [np.linalg.qr(rng.standard_normal((4, m_ue))
                             + 1j * rng.standard_normal((4, m_ue)))[0]
                for _ in range(k_users)]
    for kappa in (0.1, 1.0, 10.0, 100.0):
        direct = se_bd(bd, kappa)
        general = se_general(h_bars, w_blocks, bd.v_bars, bd.w_bars, kappa, 1.0)
        assert_allclose(general, direct, atol=1e-9)


def test_se_general_penalizes_mismatched_precoders():
    rng = np.random.default_rng(36)
    h_bars = _random_h_bars(rng, 2, 2, 6)
    other = _random_h_bars(rng, 2, 2, 6)
    bd_true = block_diagonalize(h_bars)
    bd_wrong = block_diagonalize(other)
    w_blocks = [np.eye(2, dtype=complex) for _ in range(2)]
    kappa = 100.0
    se_true = sum(se_general(h_bars, w_blocks, bd_true.v_bars, bd_true.w_bars, kappa, 1.0))
    se_wrong = sum(se_general(h_bars, w_blocks, bd_wrong.v_bars, bd_wrong.w_bars, kappa, 1.0))
    assert se_wrong < se_true


def test_effective_throughput_prelog():
    rep = effective_throughput((2.0, 3.0), 0.25)
    assert rep.throughput == pytest.approx(3.75)
    assert rep.se_per_ue == (2.0, 3.0)
    with pytest.raises(ValueError):
        effective_throughput((1.0,), 1.5)


def test_tdd_benchmark_has_zero_overhead():
    rng = np.random.default_rng(37)
    h_full = _random_h_bars(rng, 2, 3, 12)
    rep = tdd_benchmark(h_full, kappa=10.0, noise_var=1.0)
    assert rep.omega == 0.0
    assert rep.throughput == pytest.approx(sum(rep.se_per_ue))
    assert len(rep.se_per_ue) == 2


def test_tdd_benchmark_dimension_guard():
    rng = np.random.default_rng(38)
    with pytest.raises(InfeasibleAssignmentError):
        tdd_benchmark(_random_h_bars(rng, 3, 2, 4), kappa=1.0, noise_var=1.0)


def test_quantized_tdd_approaches_perfect_csi():
    rng = np.random.default_rng(39)
    h_full = _random_h_bars(rng, 2, 2, 8)
    perfect = tdd_benchmark(h_full, kappa=10.0, noise_var=1.0).throughput
    fine = tdd_benchmark(h_full, kappa=10.0, noise_var=1.0, q_bits=12).throughput
    coarse = tdd_benchmark(h_full, kappa=10.0, noise_var=1.0, q_bits=1).throughput
    assert abs(fine - perfect) / perfect < 0.01
    assert coarse < perfect


def test_quantizer_feeds_bd_consistently():
    rng = np.random.default_rng(40)
    h = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    q = quantize_feedback(h, 10)
    assert np.abs(q - h).max() < 0.05
