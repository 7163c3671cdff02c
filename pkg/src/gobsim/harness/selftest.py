"""Fast invariant suite behind `gobsim selftest`.

Every check is deterministic (fixed seeds), prints one PASS/FAIL line, and
the whole suite stays in the seconds range. The heavyweight statistical
validation lives in the test suite; this is the smoke layer.
"""

import numpy as np

from ..beamsel import (
    beam_pair_gain,
    beam_pair_gain_table,
    beam_space_covariance,
    brute_force_central,
    central_objective,
    effective_cov_from_beamspace,
    gcmd,
    objective_fk,
    overhead_v,
    overhead_w,
    se_upper_bound,
    select_hierarchical,
    SelectionState,
)
from ..channel import (
    ArrayGeometry,
    ChannelStats,
    ClusterConfig,
    covariance_from_clusters,
    draw_clusters,
    place_users,
    realize_channel,
)
from ..codebook import assemble_combiner, assemble_precoder, dft_codebook
from ..precoding import block_diagonalize, se_bd, se_general
from ..training import (
    TrainingConfig,
    lmmse_error_covariance,
    lmmse_estimate,
    pilot_matrix,
    quantize_feedback,
    received_training,
    unvec,
)
from .campaign import run_drop
from .config import ScenarioConfig

__all__ = ["run_selftest", "main"]


def _random_psd(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return a @ a.conj().T / dim


def _random_stats(rng, n_bs=6, n_ue=3):
    geom = place_users("random", 1, 200.0, 30.0, rng)
    cfg = ClusterConfig(n_clusters=3, paths_per_cluster=8)
    cs = draw_clusters(geom, 0, cfg, rng)
    return covariance_from_clusters(cs, ArrayGeometry(n_bs), ArrayGeometry(n_ue))


def check_vec_kron_identity():
    rng = np.random.default_rng(7)
    h = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    lhs = (np.kron(v.conj(), w)).conj() @ h.reshape(-1, order="F")
    rhs = w.conj() @ h @ v
    return abs(lhs - rhs) < 1e-12, f"|diff| = {abs(lhs - rhs):.2e}"


def check_pilot_orthogonality():
    worst = 0.0
    for m_bs, tau in ((3, 5), (4, 8), (7, 13), (28, 593)):
        s = pilot_matrix(m_bs, tau).s
        worst = max(worst, float(np.abs(s @ s.conj().T - np.eye(m_bs)).max()))
    return worst < 1e-10, f"max |S S^H - I| = {worst:.2e}"


def check_covariance_psd():
    rng = np.random.default_rng(11)
    stats = _random_stats(rng)
    eig = np.linalg.eigvalsh(stats.sigma)
    tr = float(np.real(np.trace(stats.sigma)))
    ok = eig.min() > -1e-10 * eig.max() and abs(tr - 1.0) < 1e-9
    return ok, f"min eig = {eig.min():.2e}, trace = {tr:.6f}"


def check_effective_cov_consistency():
    rng = np.random.default_rng(13)
    stats = _random_stats(rng, n_bs=8, n_ue=4)
    bs_cb = dft_codebook(8, 6)
    ue_cb = dft_codebook(4, 4, side="ue")
    g = beam_space_covariance(stats, bs_cb, ue_cb)
    v_idx, w_idx = [1, 3, 4], [0, 2]
    sub = effective_cov_from_beamspace(g, v_idx, w_idx, ue_cb.b)
    from ..codebook import assemble_combiner as ac, assemble_precoder as ap
    from ..beamsel import effective_covariance
    direct = effective_covariance(stats, ap(bs_cb, v_idx), ac(ue_cb, w_idx))
    err = float(np.abs(sub - direct).max())
    gains = beam_pair_gain_table(stats, bs_cb, ue_cb).gains
    gerr = abs(gains[2, 1] - beam_pair_gain(stats, bs_cb.beams[:, 2], ue_cb.beams[:, 1]))
    return err < 1e-10 and gerr < 1e-10, f"submatrix err {err:.2e}, gain err {gerr:.2e}"


def check_lmmse_reduced_equals_direct():
    rng = np.random.default_rng(17)
    m_bs, m_ue, tau, n_ue = 3, 2, 5, 4
    tcfg = TrainingConfig.for_snr(8.0, tau, 200)
    sig = _random_psd(rng, m_bs * m_ue)
    pilots = pilot_matrix(m_bs, tau)
    s = pilots.s
    w = dft_codebook(n_ue, 4, side="ue").beams[:, [0, 2]]
    y = rng.standard_normal((m_ue, tau)) + 1j * rng.standard_normal((m_ue, tau))
    est = lmmse_estimate(y, sig, pilots, w, tcfg)

    a = np.kron(s.T, np.eye(m_ue))
    gamma = np.kron(np.eye(tau), w.conj().T)
    cyy = tcfg.rho**2 * a @ sig @ a.conj().T + tcfg.noise_var * gamma @ gamma.conj().T
    direct = tcfg.rho * sig @ a.conj().T @ np.linalg.solve(cyy, y.reshape(-1, order="F"))
    err = float(np.abs(est - direct).max() / np.abs(direct).max())
    return err < 1e-8, f"rel err = {err:.2e}"


def check_error_covariance_forms():
    rng = np.random.default_rng(19)
    m_bs, m_ue, tau, n_ue = 3, 2, 5, 4
    tcfg = TrainingConfig.for_snr(5.0, tau, 200)
    sig = _random_psd(rng, m_bs * m_ue) + 0.1 * np.eye(m_bs * m_ue)
    pilots = pilot_matrix(m_bs, tau)
    s = pilots.s
    w = dft_codebook(n_ue, 4, side="ue").beams[:, [1, 3]]
    err_cov = lmmse_error_covariance(sig, pilots, w, tcfg.kappa)
    a = np.kron(s.T, np.eye(m_ue))
    gamma = np.kron(np.eye(tau), w.conj().T)
    gg_inv = np.linalg.inv(gamma @ gamma.conj().T)
    direct = np.linalg.inv(np.linalg.inv(sig) + tcfg.kappa * a.conj().T @ gg_inv @ a)
    err = float(np.abs(err_cov - direct).max() / np.abs(direct).max())
    return err < 1e-6, f"rel err vs pre-Woodbury form = {err:.2e}"


def check_bd_nulls_interference():
    rng = np.random.default_rng(23)
    h_bars = [rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6)) for _ in range(3)]
    bd = block_diagonalize(h_bars)
    worst = 0.0
    for k in range(3):
        for j in range(3):
            if j != k:
                res = np.linalg.norm(h_bars[j] @ bd.v_bars[k]) / np.linalg.norm(h_bars[j])
                worst = max(worst, res)
    return worst < 1e-8, f"max relative residual = {worst:.2e}"


def check_bd_se_forms_agree():
    rng = np.random.default_rng(29)
    n_ue, m_ue, m_bs, k_users = 4, 2, 6, 2
    ue_cb = dft_codebook(n_ue, n_ue, side="ue")
    w_mats = [ue_cb.beams[:, :m_ue], ue_cb.beams[:, m_ue:2 * m_ue]]
    h_bars = [rng.standard_normal((m_ue, m_bs)) + 1j * rng.standard_normal((m_ue, m_bs))
              for _ in range(k_users)]
    bd = block_diagonalize(h_bars)
    kappa = 10.0
    direct = sum(se_bd(bd, kappa))
    general = sum(se_general(h_bars, w_mats, bd.v_bars, bd.w_bars, kappa, 1.0))
    return abs(direct - general) < 1e-9, f"|se_bd - se_general| = {abs(direct - general):.2e}"


def check_jensen_bound():
    rng = np.random.default_rng(31)
    stats = _random_stats(rng, n_bs=8, n_ue=4)
    bs_cb = dft_codebook(8, 8)
    ue_cb = dft_codebook(4, 4, side="ue")
    table = beam_pair_gain_table(stats, bs_cb, ue_cb)
    w_idx = list(np.argsort(table.gains.sum(axis=0))[-2:])
    v_idx = list(np.argsort(table.gains[:, w_idx].sum(axis=1))[-3:])
    g = beam_space_covariance(stats, bs_cb, ue_cb)
    sig = effective_cov_from_beamspace(g, sorted(v_idx), sorted(w_idx), ue_cb.b)
    kappa = 10.0
    bound = se_upper_bound(sig, kappa, 2)
    v = assemble_precoder(bs_cb, sorted(v_idx))
    w = assemble_combiner(ue_cb, sorted(w_idx))
    acc = 0.0
    n_draws = 600
    for _ in range(n_draws):
        h = realize_channel(stats, rng).h
        sv = np.linalg.svd(w.conj().T @ h @ v, compute_uv=False)
        acc += float(np.sum(np.log2(1.0 + kappa * sv**2)))
    mean_se = acc / n_draws
    return mean_se <= bound, f"MC mean {mean_se:.4f} vs bound {bound:.4f}"


def check_gcmd_values():
    s1 = np.diag([1.0, 0.0]).astype(complex)
    s2 = np.diag([0.0, 1.0]).astype(complex)
    s3 = np.eye(2, dtype=complex)
    d3 = gcmd([s1, s2, s3], 2)
    prop = gcmd([s3, 2.5 * s3], 0)
    orth = gcmd([s1, s2], 0)
    ok = abs(d3 - (1 - 1 / np.sqrt(2))) < 1e-12 and abs(prop) < 1e-12 and abs(orth - 1) < 1e-12
    return ok, f"delta3 = {d3:.6f}, proportional = {prop:.2e}, orthogonal = {orth:.6f}"


def check_overhead_consistency():
    pmis = [((0, 0), (2, 1)), ((0, 1), (3, 0), (4, 1))]
    by_pmi = overhead_w(pmis, 2, 4200)
    by_count = overhead_v(4, 2, 4200)
    pair = overhead_w(pmis, 2, 4200, count_pairs=True)
    ok = abs(by_pmi - by_count) < 1e-15 and abs(pair - overhead_v(5, 2, 4200)) < 1e-15
    return ok, f"omega(beams) = {by_pmi:.6f}, omega(pairs) = {pair:.6f}"


def check_objective_conventions():
    rng = np.random.default_rng(37)
    stats = _random_stats(rng, n_bs=6, n_ue=3)
    bs_cb = dft_codebook(6, 5)
    ue_cb = dft_codebook(3, 3, side="ue")
    state = SelectionState(bs_cb=bs_cb, ue_cb=ue_cb, m_ue=2, pmi_cap=3)
    cand = (0, 2)
    vals = {p: objective_fk(p, state, cand, stats, None, 5.0, 2, 10**6) for p in
            ("P1", "P2", "P3", "P4")}
    ok = abs(vals["P2"] - vals["P1"]) < 1e-12
    ok = ok and vals["P3"] <= vals["P1"] and abs(vals["P4"] - vals["P3"]) < 1e-12
    state2 = SelectionState(bs_cb=bs_cb, ue_cb=ue_cb, m_ue=2, pmi_cap=3)
    big_t = 10**9
    a = objective_fk("P3", state2, cand, stats, None, 5.0, 1, big_t)
    b = objective_fk("P1", state2, cand, stats, None, 5.0, 1, big_t)
    ok = ok and abs(a - b) < 1e-6 * max(1.0, abs(b))
    return ok, f"first-UE values {vals['P1']:.4f}/{vals['P2']:.4f}/{vals['P3']:.4f}"


def check_hierarchical_vs_brute():
    rng = np.random.default_rng(41)
    stats = [_random_stats(rng, n_bs=5, n_ue=2) for _ in range(2)]
    bs_cb = dft_codebook(5, 4)
    ue_cb = dft_codebook(2, 2, side="ue")
    args = dict(m_ue=1, pmi_cap=2, kappa=4.0, tau=3, t_total=500)
    detail = []
    ok = True
    for policy in ("P2", "P3", "P4"):
        hier = select_hierarchical(policy, [0, 1], stats, bs_cb, ue_cb,
                                   args["m_ue"], args["pmi_cap"], args["kappa"],
                                   args["tau"], args["t_total"])
        brute = brute_force_central(policy, stats, bs_cb, ue_cb,
                                    args["m_ue"], args["pmi_cap"], args["kappa"],
                                    args["tau"], args["t_total"])
        hv = central_objective(policy, hier.ue_beams, stats, bs_cb, ue_cb,
                               args["pmi_cap"], args["kappa"], args["tau"], args["t_total"])
        bv = central_objective(policy, brute.ue_beams, stats, bs_cb, ue_cb,
                               args["pmi_cap"], args["kappa"], args["tau"], args["t_total"])
        ok = ok and hv <= bv + 1e-12
        detail.append(f"{policy}: {hv:.4f} <= {bv:.4f}")
    return ok, "; ".join(detail)


def check_quantizer():
    x = np.array([[0.3 + 0.7j, -0.9 - 0.1j]])
    q = quantize_feedback(x, 1)
    ok = np.allclose(np.abs(q.real), 0.45) and np.allclose(np.abs(q.imag), 0.45)
    z = quantize_feedback(np.zeros((2, 2), complex), 3)
    ok = ok and not z.any()
    fine = quantize_feedback(x, 12)
    ok = ok and float(np.abs(fine - x).max()) < 1e-3
    levels = sorted(set(np.round(q.real.ravel(), 3)))
    return ok, f"1-bit levels {levels}"


def check_drop_determinism():
    cfg = ScenarioConfig(
        n_bs=8, n_ue=4, b_bs=6, b_ue=4, k_users=2, m_ue=1, pmi_cap=2,
        snr_db=(10.0,), t_coh_ms=(15.0,), q_bits=(0,), tau=13,
        iterations=1, seed=99, n_clusters=2, paths_per_cluster=6,
    )
    a = run_drop(cfg, 0)
    b = run_drop(cfg, 0)
    c = run_drop(cfg, 1)
    ok = a == b and a != c
    return ok, "repeat identical, next drop differs"


CHECKS = [
    ("vec/kron identity", check_vec_kron_identity),
    ("pilot orthogonality", check_pilot_orthogonality),
    ("cluster covariance PSD, unit trace", check_covariance_psd),
    ("effective covariance consistency", check_effective_cov_consistency),
    ("LMMSE reduced form equals direct form", check_lmmse_reduced_equals_direct),
    ("error covariance Woodbury forms agree", check_error_covariance_forms),
    ("BD nulls cross-interference", check_bd_nulls_interference),
    ("BD spectral form equals general SE", check_bd_se_forms_agree),
    ("trace bound dominates sampled SVD SE", check_jensen_bound),
    ("GCMD reference values", check_gcmd_values),
    ("overhead counting consistency", check_overhead_consistency),
    ("stepwise objective conventions", check_objective_conventions),
    ("hierarchical never beats exhaustive", check_hierarchical_vs_brute),
    ("feedback quantizer levels", check_quantizer),
    ("drop determinism", check_drop_determinism),
]


def run_selftest() -> int:
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        tag = "PASS" if ok else "FAIL"
        print(f"{tag}  {name}  ({detail})")
        if not ok:
            failures += 1
    print(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return failures


def main() -> int:
    return 2 if run_selftest() else 0
