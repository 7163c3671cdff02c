"""Block-diagonalization precoding over effective channels and SE scoring.

BD sends each UE's data precoder into the null space of the other UEs'
stacked effective channels, then matches the remaining subspace with an
SVD. Power is split uniformly (no water-filling); spectral efficiency
comes either from the BD singular values directly or from the general
interference-aware determinant formula, which also handles mismatched
CSI (beamformers from estimates applied to the true channel).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleAssignmentError, NumericalDomainError

__all__ = [
    "BdSolution",
    "ThroughputReport",
    "block_diagonalize",
    "se_bd",
    "se_general",
    "effective_throughput",
    "tdd_benchmark",
]


@dataclass(frozen=True)
class BdSolution:
    """Per-UE data precoders/combiners, singular values, and stream counts."""

    v_bars: tuple
    w_bars: tuple
    sv: tuple
    ranks: tuple


@dataclass(frozen=True)
class ThroughputReport:
    """Per-UE SE, training overhead, and the resulting effective throughput."""

    se_per_ue: tuple
    omega: float
    throughput: float


def _numerical_rank(s: np.ndarray, rank_tol: float) -> int:
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def block_diagonalize(h_bars, rank_tol: float = 1e-9) -> BdSolution:
    """Zero-interference BD beamformers for K effective channels.

    For each UE the stacked interference matrix is SVD'd; singular values
    below rank_tol relative to the largest count as zero, and the right
    singular vectors past the numerical rank span the protected subspace.
    An empty null space raises with the offending UE index.
    """
    k_users = len(h_bars)
    if k_users < 1:
        raise ValueError("need at least one effective channel")
    m_bs = h_bars[0].shape[1]
    v_bars, w_bars, svs, ranks = [], [], [], []
    for k in range(k_users):
        if k_users == 1:
            m0 = np.eye(m_bs, dtype=complex)
        else:
            others = np.vstack([h_bars[j] for j in range(k_users) if j != k])
            _, s, vh = np.linalg.svd(others, full_matrices=True)
            r = _numerical_rank(s, rank_tol)
            if r >= m_bs:
                raise InfeasibleAssignmentError(
                    f"no null space left for UE {k}: rank(H_others) = {r} of {m_bs}",
                    ue_index=k,
                )
            m0 = vh[r:].conj().T
        g = h_bars[k] @ m0
        u, s, vh = np.linalg.svd(g, full_matrices=False)
        l_k = _numerical_rank(s, rank_tol)
        v_bars.append(m0 @ vh[:l_k].conj().T)
        w_bars.append(u[:, :l_k])
        svs.append(s[:l_k].copy())
        ranks.append(l_k)
    return BdSolution(
        v_bars=tuple(v_bars), w_bars=tuple(w_bars), sv=tuple(svs), ranks=tuple(ranks)
    )


def se_bd(bd: BdSolution, kappa: float) -> np.ndarray:
    """Per-UE SE after interference-free BD: sum_m log2(1 + kappa s_m^2)."""
    return np.array(
        [float(np.sum(np.log2(1.0 + kappa * s**2))) for s in bd.sv]
    )


def se_general(
    h_bars, w_gob_blocks, v_bars, w_bars, kappa: float, noise_var: float
) -> np.ndarray:
    """Per-UE SE with explicit interference-plus-noise whitening.

    R_k = log2 det(I + rho^2 Kbar^{-1} (Wb^H Hb Vb)(.)^H) with Kbar built
    from the residual interference rho^2 sum_{j!=k} (Wb^H Hb Vb_j)(.)^H and
    the filtered noise noise_var Wb^H W^H W Wb. Beamformers may come from
    estimated channels while h_bars holds the true ones.
    """
    k_users = len(h_bars)
    rho2 = kappa * noise_var
    out = np.zeros(k_users)
    for k in range(k_users):
        l_k = v_bars[k].shape[1]
        if l_k == 0:
            continue
        wb = w_bars[k]
        sig = wb.conj().T @ h_bars[k] @ v_bars[k]
        gob_gram = w_gob_blocks[k].conj().T @ w_gob_blocks[k]
        kbar = noise_var * (wb.conj().T @ gob_gram @ wb)
        for j in range(k_users):
            if j == k or v_bars[j].shape[1] == 0:
                continue
            cross = wb.conj().T @ h_bars[k] @ v_bars[j]
            kbar = kbar + rho2 * (cross @ cross.conj().T)
        kbar = 0.5 * (kbar + kbar.conj().T)
        try:
            lc = np.linalg.cholesky(kbar)
        except np.linalg.LinAlgError as exc:
            raise NumericalDomainError(
                f"singular interference-plus-noise covariance for UE {k}"
            ) from exc
        white = np.linalg.solve(lc, sig)
        x = np.eye(l_k) + rho2 * (white @ white.conj().T)
        out[k] = float(np.sum(np.log2(np.linalg.eigvalsh(x))))
    return out


def effective_throughput(se_per_ue, omega: float) -> ThroughputReport:
    """Apply the training pre-log: R = (1 - omega) * sum_k SE_k."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    se = tuple(float(x) for x in se_per_ue)
    return ThroughputReport(
        se_per_ue=se, omega=float(omega), throughput=(1.0 - omega) * sum(se)
    )


def tdd_benchmark(
    h_full, kappa: float, noise_var: float, q_bits: int = 0, rank_tol: float = 1e-9
) -> ThroughputReport:
    """Reciprocity baseline: BD over the full K*N_UE x N_BS channel, zero DL overhead.

    With q_bits > 0 the BD beamformers are computed on element-wise
    quantized channels and scored against the true ones; q_bits = 0 is the
    perfect-CSI benchmark.
    """
    from .training import quantize_feedback

    k_users = len(h_full)
    n_ue = h_full[0].shape[0]
    n_bs = h_full[0].shape[1]
    if (k_users - 1) * n_ue >= n_bs:
        raise InfeasibleAssignmentError(
            f"full-channel BD needs (K-1)*N_UE < N_BS, got {(k_users - 1) * n_ue} >= {n_bs}"
        )
    if q_bits > 0:
        csi = [quantize_feedback(h, q_bits) for h in h_full]
        bd = block_diagonalize(csi, rank_tol=rank_tol)
        eye_blocks = [np.eye(n_ue, dtype=complex)] * k_users
        se = se_general(h_full, eye_blocks, bd.v_bars, bd.w_bars, kappa, noise_var)
    else:
        bd = block_diagonalize(list(h_full), rank_tol=rank_tol)
        se = se_bd(bd, kappa)
    return effective_throughput(se, 0.0)
