"""Monte-Carlo campaign driver.

One drop is one beam-coherence block: draw a network geometry, build per-UE
covariances, run every policy's beam selection once, then for each
channel-coherence frame realize channels, train, estimate, feed back, BD on
the estimates, and score against the true effective channels. Drops are
seeded by (campaign seed, drop index) so any worker count reproduces the
same numbers drop for drop.
"""

import functools
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from ..beamsel import (
    beam_pair_gain_table,
    beam_space_covariance,
    effective_cov_from_beamspace,
    ensure_bd_feasible,
    gcmd,
    overhead_v,
    select_hierarchical,
    select_uncoordinated,
)
from ..channel import covariance_from_clusters, draw_cluster_pool, draw_clusters, place_users, realize_channel
from ..codebook import assemble_combiner, assemble_precoder
from ..precoding import block_diagonalize, se_general, tdd_benchmark
from ..training import TrainingConfig, lmmse_estimate, pilot_matrix, quantize_feedback, received_training, unvec
from .config import ScenarioConfig

__all__ = ["CellStats", "CampaignResult", "run_drop", "run_campaign", "cell_keys"]

TDD_LABEL = "TDD"


@dataclass(frozen=True)
class CellStats:
    """Aggregated metrics of one (policy, snr, t_coh, q_bits) sweep cell."""

    policy: str
    snr_db: float
    t_coh_ms: float
    q_bits: int
    k_users: int
    mean_throughput: float
    stderr_throughput: float
    mean_m_bs: float
    mean_omega: float
    mean_gcmd: float | None
    n: int
    mean_se: float


@dataclass(frozen=True)
class CampaignResult:
    config: ScenarioConfig
    cells: tuple
    drops: dict | None = None

    def cell(self, policy: str, snr_db: float, t_coh_ms: float, q_bits: int) -> CellStats:
        for c in self.cells:
            if (c.policy, c.snr_db, c.t_coh_ms, c.q_bits) == (policy, snr_db, t_coh_ms, q_bits):
                return c
        raise KeyError((policy, snr_db, t_coh_ms, q_bits))


def cell_keys(cfg: ScenarioConfig) -> list:
    """Canonical cell order: policies (then TDD), snr, t_coh, q_bits."""
    labels = list(cfg.policies) + ([TDD_LABEL] if cfg.include_tdd else [])
    return [
        (label, snr, t_coh, q)
        for label in labels
        for snr in cfg.snr_db
        for t_coh in cfg.t_coh_ms
        for q in cfg.q_bits
    ]


@functools.lru_cache(maxsize=8)
def _cached_setup(cfg: ScenarioConfig):
    return (
        cfg.bs_codebook(),
        cfg.ue_codebook(),
        cfg.bs_geometry(),
        cfg.ue_geometry(),
        cfg.cluster_config(),
    )


def _evaluate_assignment(padded, stats, beam_covs, channels, noises, bs_cb, ue_cb, tcfg, cfg):
    """Train, estimate, BD, and score one activated-beam assignment.

    Returns the activated beam count, the mean GCMD over the UEs'
    effective covariances, and the per-q_bits sum SE averaged over frames.
    """
    k_users = padded.n_users
    v_idx = list(padded.all_bs_beams)
    m_bs = len(v_idx)
    v_mat = assemble_precoder(bs_cb, v_idx)
    w_mats = [assemble_combiner(ue_cb, padded.ue_beams[k]) for k in range(k_users)]
    sigma_bars = [
        effective_cov_from_beamspace(beam_covs[k], v_idx, list(padded.ue_beams[k]), ue_cb.b)
        for k in range(k_users)
    ]
    if k_users >= 2:
        gcmd_mean = float(np.mean([gcmd(sigma_bars, k) for k in range(k_users)]))
    else:
        gcmd_mean = None

    s = pilot_matrix(m_bs, cfg.tau)
    sum_se = {q: 0.0 for q in cfg.q_bits}
    n_frames = len(channels)
    for frame in range(n_frames):
        h_bars_true = []
        h_hats = []
        for k in range(k_users):
            h = channels[frame][k].h
            h_bars_true.append(w_mats[k].conj().T @ h @ v_mat)
            y = received_training(h, v_mat, w_mats[k], s, tcfg, noise=noises[frame][k])
            est = lmmse_estimate(y, sigma_bars[k], s, w_mats[k], tcfg)
            h_hats.append(unvec(est, cfg.m_ue, m_bs))
        for q in cfg.q_bits:
            fed_back = h_hats if q == 0 else [quantize_feedback(hh, q) for hh in h_hats]
            bd = block_diagonalize(fed_back)
            se = se_general(h_bars_true, w_mats, bd.v_bars, bd.w_bars, tcfg.kappa, tcfg.noise_var)
            sum_se[q] += float(np.sum(se))
    return m_bs, gcmd_mean, {q: v / n_frames for q, v in sum_se.items()}


def run_drop(cfg: ScenarioConfig, drop_index: int) -> dict:
    """One beam-coherence block; returns {cell key: (throughput, sum_se, m_bs, omega, gcmd)}."""
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, drop_index)))
    bs_cb, ue_cb, bs_geom, ue_geom, ccfg = _cached_setup(cfg)

    geometry = place_users(cfg.scenario, cfg.k_users, cfg.cell_radius, cfg.cluster_radius,
                           rng, sector_deg=cfg.sector_deg)
    pool = draw_cluster_pool(geometry, ccfg, rng)
    stats = [
        covariance_from_clusters(draw_clusters(geometry, k, ccfg, rng, pool), bs_geom, ue_geom)
        for k in range(cfg.k_users)
    ]
    beam_covs = [beam_space_covariance(st, bs_cb, ue_cb) for st in stats]
    tables = [beam_pair_gain_table(st, bs_cb, ue_cb) for st in stats]
    order = [int(u) for u in rng.permutation(cfg.k_users)]

    channels = [
        [realize_channel(st, rng) for st in stats] for _ in range(cfg.frames_per_drop)
    ]
    noises = [
        [
            np.sqrt(0.5) * (rng.standard_normal((cfg.n_ue, cfg.tau))
                            + 1j * rng.standard_normal((cfg.n_ue, cfg.tau)))
            for _ in range(cfg.k_users)
        ]
        for _ in range(cfg.frames_per_drop)
    ]

    t_ref = max(cfg.t_total(t) for t in cfg.t_coh_ms)
    record = {}
    for snr in cfg.snr_db:
        tcfg = TrainingConfig.for_snr(snr, cfg.tau, t_ref)
        kappa = tcfg.kappa

        selections = {}
        for policy in cfg.policies:
            if policy == "P1":
                sel = select_uncoordinated(
                    stats, bs_cb, ue_cb, cfg.m_ue, cfg.pmi_cap, kappa, tables=tables
                )
                for t_coh in cfg.t_coh_ms:
                    selections[(policy, t_coh)] = sel
            elif policy == "P2":
                sel = select_hierarchical(
                    policy, order, stats, bs_cb, ue_cb, cfg.m_ue, cfg.pmi_cap,
                    kappa, cfg.tau, t_ref, count_pairs=cfg.count_pairs, beam_covs=beam_covs,
                )
                for t_coh in cfg.t_coh_ms:
                    selections[(policy, t_coh)] = sel
            else:
                for t_coh in cfg.t_coh_ms:
                    selections[(policy, t_coh)] = select_hierarchical(
                        policy, order, stats, bs_cb, ue_cb, cfg.m_ue, cfg.pmi_cap,
                        kappa, cfg.tau, cfg.t_total(t_coh),
                        count_pairs=cfg.count_pairs, beam_covs=beam_covs,
                    )

        evaluated = {}
        for (policy, t_coh), sel in selections.items():
            padded = ensure_bd_feasible(sel, tables, cfg.min_m_bs)
            key = (padded.ue_beams, padded.all_bs_beams)
            if key not in evaluated:
                evaluated[key] = _evaluate_assignment(
                    padded, stats, beam_covs, channels, noises, bs_cb, ue_cb, tcfg, cfg
                )
            m_bs, gcmd_mean, sum_se = evaluated[key]
            omega = overhead_v(m_bs, cfg.tau, cfg.t_total(t_coh))
            for q in cfg.q_bits:
                record[(policy, snr, t_coh, q)] = (
                    (1.0 - omega) * sum_se[q], sum_se[q], float(m_bs), omega, gcmd_mean
                )

        if cfg.include_tdd:
            tdd_sum = 0.0
            for frame in range(cfg.frames_per_drop):
                rep = tdd_benchmark([c.h for c in channels[frame]], kappa, tcfg.noise_var)
                tdd_sum += rep.throughput
            tdd_sum /= cfg.frames_per_drop
            for t_coh in cfg.t_coh_ms:
                for q in cfg.q_bits:
                    record[(TDD_LABEL, snr, t_coh, q)] = (
                        tdd_sum, tdd_sum, float(cfg.n_bs), 0.0, None
                    )
    return record


def _run_drop_safe(cfg: ScenarioConfig, drop_index: int):
    return drop_index, run_drop(cfg, drop_index)


def run_campaign(
    cfg: ScenarioConfig, workers: int = 1, keep_drops: bool = False, progress: bool = False
) -> CampaignResult:
    """Run all drops and aggregate per-cell means and standard errors.

    Aggregation always walks drops in index order, so the output is
    byte-identical for any worker count.
    """
    n = cfg.iterations
    drops = [None] * n
    if workers <= 1:
        for i in range(n):
            try:
                drops[i] = run_drop(cfg, i)
            except Exception as exc:
                raise RuntimeError(f"drop {i} failed: {exc}") from exc
            if progress and (i + 1) % max(1, n // 20) == 0:
                print(f"  drop {i + 1}/{n}", flush=True)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_drop_safe, cfg, i): i for i in range(n)}
            done = 0
            for fut in as_completed(futures):
                i = futures[fut]
                try:
                    _, drops[i] = fut.result()
                except Exception as exc:
                    raise RuntimeError(f"drop {i} failed: {exc}") from exc
                done += 1
                if progress and done % max(1, n // 20) == 0:
                    print(f"  drop {done}/{n}", flush=True)

    cells = []
    kept = {}
    for key in cell_keys(cfg):
        rows = np.array([drops[i][key][:4] for i in range(n)], dtype=float)
        gcmds = [drops[i][key][4] for i in range(n)]
        thr = rows[:, 0]
        stderr = float(np.std(thr, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        mean_gcmd = None if any(g is None for g in gcmds) else float(np.mean(gcmds))
        policy, snr, t_coh, q = key
        cells.append(CellStats(
            policy=policy,
            snr_db=snr,
            t_coh_ms=t_coh,
            q_bits=q,
            k_users=cfg.k_users,
            mean_throughput=float(np.mean(thr)),
            stderr_throughput=stderr,
            mean_m_bs=float(np.mean(rows[:, 2])),
            mean_omega=float(np.mean(rows[:, 3])),
            mean_gcmd=mean_gcmd,
            n=n,
            mean_se=float(np.mean(rows[:, 1])),
        ))
        if keep_drops:
            kept[key] = rows
    return CampaignResult(config=cfg, cells=tuple(cells), drops=kept if keep_drops else None)
