"""DFT grid-of-beams codebooks and GoB precoder/combiner assembly.

A codebook is an ordered list of unit-norm beamforming columns. Beam index
order is the DFT column order; every tie-break elsewhere in the package
refers back to this order.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Codebook",
    "BeamAssignment",
    "dft_codebook",
    "assemble_precoder",
    "assemble_combiner",
    "assemble_block_combiner",
]


@dataclass(frozen=True)
class Codebook:
    """Ordered set of unit-norm beamforming vectors for one link end.

    beams is n x b with one beam per column. With b == n the columns are
    orthonormal; b > n gives an oversampled (non-orthogonal) grid.
    """

    beams: np.ndarray
    side: str = "bs"

    @property
    def n(self) -> int:
        return self.beams.shape[0]

    @property
    def b(self) -> int:
        return self.beams.shape[1]


def dft_codebook(n: int, b: int | None = None, side: str = "bs") -> Codebook:
    """Build a DFT grid of b beams over n antenna elements.

    Beam m has elements exp(j*2*pi*p*m/b)/sqrt(n) for element p, so the
    grid is orthonormal exactly when b == n.
    """
    if n < 1:
        raise ValueError(f"antenna count must be >= 1, got {n}")
    if b is None:
        b = n
    if b < 1:
        raise ValueError(f"beam count must be >= 1, got {b}")
    p = np.arange(n)[:, None]
    m = np.arange(b)[None, :]
    beams = np.exp(2j * np.pi * p * m / b) / np.sqrt(n)
    return Codebook(beams=beams, side=side)


def _check_indices(idx, b: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=int)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("beam index list must be non-empty and 1-D")
    if len(set(idx.tolist())) != idx.size:
        raise ValueError(f"duplicate beam indices in {idx.tolist()}")
    if idx.min() < 0 or idx.max() >= b:
        raise ValueError(f"beam index out of range [0, {b}) in {idx.tolist()}")
    return idx


def assemble_precoder(cb: Codebook, idx) -> np.ndarray:
    """Stack the selected beams as precoder columns, in the given index order."""
    idx = _check_indices(idx, cb.b)
    return cb.beams[:, idx].copy()


def assemble_combiner(cb: Codebook, idx) -> np.ndarray:
    """Per-UE GoB combiner W_k: selected beams as columns."""
    return assemble_precoder(cb, idx)


def assemble_block_combiner(cb: Codebook, per_ue_idx) -> np.ndarray:
    """Block-diagonal combiner for all UEs: block k is UE k's W_k, off-blocks zero."""
    blocks = [assemble_combiner(cb, idx) for idx in per_ue_idx]
    m_ue = blocks[0].shape[1]
    if any(blk.shape[1] != m_ue for blk in blocks):
        raise ValueError("all UEs must select the same number of combiner beams")
    k = len(blocks)
    out = np.zeros((k * cb.n, k * m_ue), dtype=complex)
    for i, blk in enumerate(blocks):
        out[i * cb.n : (i + 1) * cb.n, i * m_ue : (i + 1) * m_ue] = blk
    return out


@dataclass(frozen=True)
class BeamAssignment:
    """Outcome of a beam selection round.

    ue_beams holds each UE's combiner beam indices (into the UE codebook).
    pmi holds each UE's reported beam pairs (v, w); bs_beams is the sorted
    union of the v-indices appearing in the PMIs. extra_beams lists BS beams
    activated on top of that union so that BD precoding stays feasible
    (they belong to no PMI).
    """

    ue_beams: tuple
    bs_beams: tuple
    pmi: tuple
    extra_beams: tuple = field(default=())

    def __post_init__(self):
        union = sorted({v for pairs in self.pmi for (v, _) in pairs})
        if list(self.bs_beams) != union:
            raise ValueError(
                f"bs_beams {list(self.bs_beams)} is not the PMI v-union {union}"
            )
        if set(self.extra_beams) & set(self.bs_beams):
            raise ValueError("extra_beams must be disjoint from bs_beams")

    @property
    def n_users(self) -> int:
        return len(self.ue_beams)

    @property
    def m_ue(self) -> int:
        return len(self.ue_beams[0])

    @property
    def all_bs_beams(self) -> tuple:
        """Every activated BS beam: PMI union plus feasibility padding, sorted."""
        return tuple(sorted(set(self.bs_beams) | set(self.extra_beams)))

    @property
    def m_bs(self) -> int:
        return len(self.all_bs_beams)

    @property
    def feasible(self) -> bool:
        """Whether the BD null-space condition (K-1)*M_UE < M_BS holds."""
        return (self.n_users - 1) * self.m_ue < self.m_bs

    def with_extra_beams(self, extra) -> "BeamAssignment":
        return BeamAssignment(
            ue_beams=self.ue_beams,
            bs_beams=self.bs_beams,
            pmi=self.pmi,
            extra_beams=tuple(sorted(extra)),
        )
