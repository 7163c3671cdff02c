"""Acceptance suite: one test per headline behavior of the simulator.

Criteria 1-5 are self-contained algebra and search checks. Criteria 6-10
read the three session-scoped 500-drop campaign fixtures from conftest, so
their assertions are paired per-drop comparisons at a fixed seed. Criterion
11 drives the CLI end to end. Each criterion is one test function, so
`pytest -v` shows one pass/fail line per criterion.
"""

import numpy as np
import pytest

from gobsim import (
    ArrayGeometry,
    ChannelStats,
    ClusterConfig,
    TrainingConfig,
    assemble_combiner,
    assemble_precoder,
    beam_pair_gain_table,
    block_diagonalize,
    brute_force_central,
    central_objective,
    covariance_from_clusters,
    dft_codebook,
    draw_clusters,
    effective_covariance,
    lmmse_error_covariance,
    lmmse_estimate,
    pilot_matrix,
    place_users,
    se_bd,
    se_general,
    se_upper_bound,
    select_hierarchical,
    unvec,
)
from gobsim.harness.campaign import TDD_LABEL
from gobsim.harness.cli import main
from helpers import paired_diff, random_psd

SNR = 11.0
POLICIES = ("P1", "P2", "P3", "P4")


def _crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _vec(m):
    return m.reshape(-1, order="F")


def _orth(rng, rows, cols):
    return np.linalg.qr(_crandn(rng, (rows, cols)))[0]


def test_criterion_01_algebraic_identities_hold_on_random_instances():
    rng = np.random.default_rng(11)

    # Effective-channel vectorization and the closed-form effective covariance
    # are the same Kronecker congruence.
    for _ in range(100):
        n_ue, n_bs = int(rng.integers(2, 4)), int(rng.integers(4, 9))
        m_ue, m_bs = int(rng.integers(1, n_ue + 1)), int(rng.integers(2, 5))
        h = _crandn(rng, (n_ue, n_bs))
        v = _crandn(rng, (n_bs, m_bs))
        w = _crandn(rng, (n_ue, m_ue))
        t = np.kron(v.T, w.conj().T)
        assert np.allclose(_vec(w.conj().T @ h @ v), t @ _vec(h), atol=1e-10)
        sigma = random_psd(rng, n_ue * n_bs)
        stats = ChannelStats.from_sigma(sigma, n_ue, n_bs)
        assert np.allclose(
            effective_covariance(stats, v, w), t @ sigma @ t.conj().T, atol=1e-10
        )

    # The reduced LMMSE solve and its error covariance equal the direct
    # tau*M_UE-dimensional forms (push-through / matrix-inversion lemma).
    for _ in range(100):
        m_ue, m_bs = int(rng.integers(1, 3)), int(rng.integers(2, 4))
        n_ue = m_ue + int(rng.integers(0, 2))
        tau = int(rng.integers(m_bs, m_bs + 4))
        d = m_ue * m_bs
        sigma_bar = random_psd(rng, d)
        w = _crandn(rng, (n_ue, m_ue))
        s = pilot_matrix(m_bs, tau)
        cfg = TrainingConfig.for_snr(float(rng.uniform(-5.0, 20.0)), tau, 2000)
        a = np.kron(s.s.T, np.eye(m_ue))
        gamma = np.kron(np.eye(tau), w.conj().T)
        mid = cfg.rho**2 * (a @ sigma_bar @ a.conj().T) + cfg.noise_var * (
            gamma @ gamma.conj().T
        )
        h_bar = unvec(np.linalg.cholesky(sigma_bar) @ _crandn(rng, d) / np.sqrt(2), m_ue, m_bs)
        noise = _crandn(rng, (n_ue, tau)) * np.sqrt(cfg.noise_var / 2.0)
        y = cfg.rho * h_bar @ s.s + w.conj().T @ noise
        est = lmmse_estimate(y, sigma_bar, s, w, cfg)
        direct = cfg.rho * sigma_bar @ a.conj().T @ np.linalg.solve(mid, _vec(y))
        assert np.allclose(est, direct, rtol=1e-8, atol=1e-10)
        err = lmmse_error_covariance(sigma_bar, s, w, cfg.kappa)
        direct_err = sigma_bar - cfg.rho**2 * sigma_bar @ a.conj().T @ np.linalg.solve(
            mid, a @ sigma_bar
        )
        assert np.allclose(err, direct_err, rtol=1e-7, atol=1e-10)

    # At the BD beamformers the interference-aware SE reduces to the
    # singular-value form, for any noise variance and orthonormal combiners.
    for _ in range(100):
        k = int(rng.integers(2, 4))
        m_ue = int(rng.integers(1, 3))
        m_bs = k * m_ue + int(rng.integers(0, 3))
        h_bars = [_crandn(rng, (m_ue, m_bs)) for _ in range(k)]
        bd = block_diagonalize(h_bars)
        kappa = float(10.0 ** rng.uniform(-1.0, 2.0))
        noise_var = float(rng.uniform(0.5, 2.0))
        w_gob = [_orth(rng, m_ue + 2, m_ue) for _ in range(k)]
        assert np.allclose(
            se_general(h_bars, w_gob, bd.v_bars, bd.w_bars, kappa, noise_var),
            se_bd(bd, kappa),
            rtol=1e-8,
            atol=1e-10,
        )

    # The closed-form effective covariance matches the sample covariance of
    # projected channel draws to 2% at 1e5 samples.
    n_samples = 100_000
    for _ in range(100):
        n_ue, n_bs = 2, 6
        m_ue, m_bs = int(rng.integers(1, 3)), int(rng.integers(2, 4))
        sigma = random_psd(rng, n_ue * n_bs)
        stats = ChannelStats.from_sigma(sigma, n_ue, n_bs)
        v = _orth(rng, n_bs, m_bs)
        w = _orth(rng, n_ue, m_ue)
        closed = effective_covariance(stats, v, w)
        m = np.kron(v.T, w.conj().T) @ np.linalg.cholesky(sigma)
        z = _crandn(rng, (n_samples, n_ue * n_bs)) / np.sqrt(2)
        samples = z @ m.T
        emp = samples.T @ samples.conj() / n_samples
        rel = np.linalg.norm(emp - closed) / np.linalg.norm(closed)
        assert rel < 0.02


def test_criterion_02_bd_nulls_every_cross_link():
    rng = np.random.default_rng(2)
    combos = 0
    for k in (2, 3):
        for m_ue in (1, 2):
            for m_bs in range(3, 9):
                if (k - 1) * m_ue >= m_bs:
                    continue  # no null space left: infeasible combination
                for _ in range(5):
                    h_bars = [_crandn(rng, (m_ue, m_bs)) for _ in range(k)]
                    bd = block_diagonalize(h_bars)
                    for j in range(k):
                        for kk in range(k):
                            if j == kk:
                                continue
                            leak = np.linalg.norm(h_bars[j] @ bd.v_bars[kk])
                            assert leak / np.linalg.norm(h_bars[j]) < 1e-8
                combos += 1
    assert combos == 22


def test_criterion_03_lmmse_error_matches_predicted_covariance():
    rng = np.random.default_rng(3)
    n_draws = 10_000
    for _ in range(10):
        n_ue, n_bs = int(rng.integers(2, 4)), int(rng.integers(5, 9))
        m_ue = int(rng.integers(1, n_ue + 1))
        m_bs = int(rng.integers(2, 5))
        tau = int(rng.integers(m_bs, m_bs + 5))
        sigma = random_psd(rng, n_ue * n_bs)
        stats = ChannelStats.from_sigma(sigma, n_ue, n_bs)
        v = _orth(rng, n_bs, m_bs)
        w = _orth(rng, n_ue, m_ue)
        sigma_bar = effective_covariance(stats, v, w)
        s = pilot_matrix(m_bs, tau)
        cfg = TrainingConfig.for_snr(float(rng.uniform(0.0, 15.0)), tau, 2000)
        pred = np.diag(lmmse_error_covariance(sigma_bar, s, w, cfg.kappa)).real

        l_full = np.linalg.cholesky(sigma)
        t = np.kron(v.T, w.conj().T)
        sq_err = np.zeros(m_ue * m_bs)
        for _ in range(n_draws):
            vec_h = l_full @ _crandn(rng, n_ue * n_bs) / np.sqrt(2)
            noise = _crandn(rng, (n_ue, tau)) * np.sqrt(cfg.noise_var / 2.0)
            y = cfg.rho * unvec(t @ vec_h, m_ue, m_bs) @ s.s + w.conj().T @ noise
            est = lmmse_estimate(y, sigma_bar, s, w, cfg)
            sq_err += np.abs(est - t @ vec_h) ** 2
        emp = sq_err / n_draws
        assert np.linalg.norm(emp - pred) / np.linalg.norm(pred) < 0.05


def test_criterion_04_rate_bound_dominates_monte_carlo():
    rng = np.random.default_rng(4)
    n_bs, n_ue, m_bs, m_ue = 64, 4, 5, 3
    bs_cb = dft_codebook(n_bs)
    ue_cb = dft_codebook(n_ue, side="ue")
    bs_geom, ue_geom = ArrayGeometry(n_bs), ArrayGeometry(n_ue)
    ccfg = ClusterConfig(
        n_clusters=20,
        paths_per_cluster=6,
        angle_spread_deg=4.0,
        cluster_power_decay_db=0.0,
        aod_spread_deg=20.0,
    )
    snrs = (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    n_drops, n_real = 20, 500
    bounds = {s: [] for s in snrs}
    mc = {s: [] for s in snrs}
    for _ in range(n_drops):
        geom = place_users("random", 1, 250.0, 30.0, rng)
        stats = covariance_from_clusters(draw_clusters(geom, 0, ccfg, rng), bs_geom, ue_geom)
        table = beam_pair_gain_table(stats, bs_cb, ue_cb)
        w_idx = sorted(int(i) for i in np.argsort(table.gains.sum(axis=0))[-m_ue:])
        v_idx = sorted(int(i) for i in np.argsort(table.gains[:, w_idx].sum(axis=1))[-m_bs:])
        v = assemble_precoder(bs_cb, v_idx)
        w = assemble_combiner(ue_cb, w_idx)
        sigma_bar = effective_covariance(stats, v, w)

        evals, evecs = np.linalg.eigh(sigma_bar)
        l_eff = evecs * np.sqrt(np.clip(evals, 0.0, None))
        z = _crandn(rng, (n_real, m_ue * m_bs)) / np.sqrt(2)
        h_bars = (z @ l_eff.T).reshape(n_real, m_bs, m_ue).transpose(0, 2, 1)
        sv = np.linalg.svd(h_bars, compute_uv=False)
        for snr in snrs:
            kappa = 10.0 ** (snr / 10.0)
            bounds[snr].append(se_upper_bound(sigma_bar, kappa, m_ue))
            mc[snr].append(float(np.log2(1.0 + kappa * sv**2).sum(axis=1).mean()))

    for snr in snrs:
        assert np.mean(mc[snr]) <= np.mean(bounds[snr])
    gap = np.mean(bounds[10.0]) - np.mean(mc[10.0])
    assert gap <= 0.15 * np.mean(bounds[10.0])


def test_criterion_05_hierarchical_tracks_the_exhaustive_search():
    rng = np.random.default_rng(7)
    ratios = {p: [] for p in ("P2", "P3", "P4")}
    for _ in range(200):
        b_bs = int(rng.integers(4, 7))
        b_ue = int(rng.integers(2, 4))
        bs_cb = dft_codebook(8, b_bs)
        ue_cb = dft_codebook(3, b_ue, side="ue")
        geom = place_users("random", 2, 200.0, 30.0, rng)
        ccfg = ClusterConfig(n_clusters=3, paths_per_cluster=8)
        stats = [
            covariance_from_clusters(draw_clusters(geom, k, ccfg, rng),
                                     ArrayGeometry(8), ArrayGeometry(3))
            for k in range(2)
        ]
        kappa = float(10 ** (rng.choice([0.0, 11.0]) / 10))
        tau, t_total = 3, int(rng.integers(60, 600))
        for policy in ratios:
            hier = select_hierarchical(policy, [0, 1], stats, bs_cb, ue_cb,
                                       1, 2, kappa, tau, t_total)
            brute = brute_force_central(policy, stats, bs_cb, ue_cb,
                                        1, 2, kappa, tau, t_total)
            hv = central_objective(policy, hier.ue_beams, stats, bs_cb, ue_cb,
                                   2, kappa, tau, t_total)
            bv = central_objective(policy, brute.ue_beams, stats, bs_cb, ue_cb,
                                   2, kappa, tau, t_total)
            assert hv <= bv + 1e-9  # stepwise never beats the exhaustive optimum
            ratios[policy].append(hv / bv if bv > 0 else 1.0)
    for policy, r in ratios.items():
        assert float(np.mean(r)) >= 0.85, f"{policy} mean ratio {np.mean(r):.4f}"


def test_criterion_06_coordination_pays_once_coherence_allows(random_campaign):
    _, _, z = paired_diff(random_campaign, "P3", "P1", SNR, 15.0)
    assert z >= 3.0, f"P3 vs P1 at 15 ms: z = {z:.2f}"
    _, _, z = paired_diff(random_campaign, "P4", "P1", SNR, 15.0)
    assert z >= 3.0, f"P4 vs P1 at 15 ms: z = {z:.2f}"
    _, _, z = paired_diff(random_campaign, "P2", "P1", SNR, 15.0)
    assert z <= -3.0, f"P2 vs P1 at 15 ms: z = {z:.2f}"
    gain_15 = paired_diff(random_campaign, "P3", "P1", SNR, 15.0)[0]
    for t_coh in (50.0, 100.0):
        _, _, z = paired_diff(random_campaign, "P2", "P1", SNR, t_coh)
        assert z >= 3.0, f"P2 vs P1 at {t_coh} ms: z = {z:.2f}"
        gain_t = paired_diff(random_campaign, "P3", "P1", SNR, t_coh)[0]
        assert gain_t < gain_15


def test_criterion_07_orthogonalization_activates_more_beams(random_campaign):
    for t_coh in (15.0, 50.0, 100.0):
        p2 = random_campaign.cell("P2", SNR, t_coh, 0).mean_m_bs
        p3 = random_campaign.cell("P3", SNR, t_coh, 0).mean_m_bs
        assert p2 > p3, f"at {t_coh} ms: P2 {p2:.2f} vs P3 {p3:.2f}"


def test_criterion_08_colocated_users_reward_orthogonalization(closely_located_campaign):
    _, _, z = paired_diff(closely_located_campaign, "P2", "P1", SNR, 15.0)
    assert z >= 3.0, f"P2 vs P1 at 15 ms: z = {z:.2f}"
    p4 = closely_located_campaign.cell("P4", SNR, 15.0, 0).mean_throughput
    p3 = closely_located_campaign.cell("P3", SNR, 15.0, 0).mean_throughput
    assert p4 >= p3


def test_criterion_09_feedback_quantization_degrades_gracefully(quantization_campaign):
    for policy in POLICIES:
        thr = {
            q: quantization_campaign.cell(policy, SNR, 15.0, q).mean_throughput
            for q in (0, 16, 8, 4, 2)
        }
        assert abs(thr[16] - thr[0]) <= 0.02 * thr[0]
        assert thr[16] >= thr[8] >= thr[4] >= thr[2], f"{policy}: {thr}"


def test_criterion_10_reciprocity_benchmark_upper_bounds_fdd(random_campaign):
    for t_coh in (15.0, 50.0, 100.0):
        tdd = random_campaign.cell(TDD_LABEL, SNR, t_coh, 0).mean_throughput
        for policy in POLICIES:
            fdd = random_campaign.cell(policy, SNR, t_coh, 0).mean_throughput
            assert tdd >= fdd, f"{policy} at {t_coh} ms: {fdd:.2f} vs TDD {tdd:.2f}"


WORKER_CFG = """
n_bs = 8
n_ue = 4
b_bs = 6
b_ue = 4
k_users = 2
m_ue = 1
pmi_cap = 2
snr_db = 10.0
t_coh_ms = 15.0
tau = 13
iterations = 6
seed = 42
n_clusters = 2
paths_per_cluster = 6
"""


def test_criterion_11_output_is_worker_count_invariant(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(WORKER_CFG)
    emitted = []
    for workers in (1, 3):
        out = tmp_path / f"cells_w{workers}.csv"
        rc = main(["run", "--config", str(cfg), "--out", str(out),
                   "--workers", str(workers), "--quiet"])
        assert rc == 0
        emitted.append(out.read_bytes())
    assert emitted[0] == emitted[1]
