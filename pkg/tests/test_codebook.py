"""DFT codebook construction and precoder/combiner assembly."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from gobsim import BeamAssignment, assemble_block_combiner, assemble_combiner, assemble_precoder, dft_codebook


@given(n=st.integers(1, 32))
def test_square_dft_grid_is_orthonormal(n):
    cb = dft_codebook(n)
    assert cb.b == n
    assert_allclose(cb.beams.conj().T @ cb.beams, np.eye(n), atol=1e-12)


@given(n=st.integers(1, 16), b=st.integers(1, 24))
def test_beams_have_unit_norm(n, b):
    cb = dft_codebook(n, b)
    assert_allclose(np.linalg.norm(cb.beams, axis=0), np.ones(b), atol=1e-12)


def test_oversampled_grid_keeps_dft_phases():
    cb = dft_codebook(4, 6)
    p, m = 2, 5
    expected = np.exp(2j * np.pi * p * m / 6) / 2.0
    assert abs(cb.beams[p, m] - expected) < 1e-12


def test_dft_codebook_rejects_bad_sizes():
    with pytest.raises(ValueError):
        dft_codebook(0)
    with pytest.raises(ValueError):
        dft_codebook(4, 0)


def test_assemble_keeps_index_order():
    cb = dft_codebook(6, 6)
    v = assemble_precoder(cb, [4, 1, 3])
    assert v.shape == (6, 3)
    assert_allclose(v[:, 0], cb.beams[:, 4])
    assert_allclose(v[:, 2], cb.beams[:, 3])


@pytest.mark.parametrize("idx", [[], [0, 0], [-1], [6]])
def test_assemble_rejects_bad_indices(idx):
    cb = dft_codebook(6, 6)
    with pytest.raises(ValueError):
        assemble_precoder(cb, idx)


def test_block_combiner_is_block_diagonal():
    cb = dft_codebook(4, 4, side="ue")
    blocks = [[0, 1], [2, 3]]
    w = assemble_block_combiner(cb, blocks)
    assert w.shape == (8, 4)
    assert_allclose(w[:4, :2], assemble_combiner(cb, blocks[0]))
    assert_allclose(w[4:, 2:], assemble_combiner(cb, blocks[1]))
    assert not w[:4, 2:].any() and not w[4:, :2].any()


def test_block_combiner_needs_equal_stream_counts():
    cb = dft_codebook(4, 4, side="ue")
    with pytest.raises(ValueError):
        assemble_block_combiner(cb, [[0, 1], [2]])


def test_assignment_checks_union_and_padding():
    pmi = (((0, 0), (2, 1)), ((2, 0), (5, 1)))
    a = BeamAssignment(ue_beams=((0, 1), (0, 2)), bs_beams=(0, 2, 5), pmi=pmi)
    assert a.m_bs == 3 and a.n_users == 2 and a.m_ue == 2
    padded = a.with_extra_beams((1, 4))
    assert padded.all_bs_beams == (0, 1, 2, 4, 5)
    assert padded.m_bs == 5
    with pytest.raises(ValueError):
        BeamAssignment(ue_beams=((0, 1),), bs_beams=(0, 1), pmi=(((0, 0),),))
    with pytest.raises(ValueError):
        a.with_extra_beams((2,))


def test_assignment_feasibility_flag():
    pmi = (((0, 0),), ((1, 0),))
    a = BeamAssignment(ue_beams=((0,), (1,)), bs_beams=(0, 1), pmi=pmi)
    assert a.feasible
    b = BeamAssignment(ue_beams=((0,), (1,)), bs_beams=(0,), pmi=(((0, 0),), ((0, 0),)))
    assert not b.feasible
