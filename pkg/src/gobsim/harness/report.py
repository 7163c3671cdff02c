"""Figure rendering from aggregated campaign cells.

Everything is derived from the emitted schema, so a saved JSON is enough
to redraw every figure without rerunning drops.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .campaign import TDD_LABEL, CampaignResult

__all__ = ["render_figures"]

_STYLE = {
    "P1": dict(color="tab:blue", marker="o"),
    "P2": dict(color="tab:orange", marker="s"),
    "P3": dict(color="tab:green", marker="^"),
    "P4": dict(color="tab:red", marker="d"),
    TDD_LABEL: dict(color="black", marker="x", linestyle="--"),
}


def _labels(result: CampaignResult) -> list:
    seen = []
    for c in result.cells:
        if c.policy not in seen:
            seen.append(c.policy)
    return seen


def _grid(result, policy, snr, q):
    cells = [
        c for c in result.cells
        if c.policy == policy and c.snr_db == snr and c.q_bits == q
    ]
    return sorted(cells, key=lambda c: c.t_coh_ms)


def _save(fig, out_dir, name, paths):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)


def render_figures(result: CampaignResult, out_dir: str) -> list:
    """Render the standard figure set to out_dir; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    snr0 = cfg.snr_db[0]
    q0 = cfg.q_bits[0]
    labels = _labels(result)
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label in labels:
        cells = _grid(result, label, snr0, q0)
        t = [c.t_coh_ms for c in cells]
        y = [c.mean_throughput for c in cells]
        err = [3 * c.stderr_throughput for c in cells]
        ax.errorbar(t, y, yerr=err, label=label, capsize=2, **_STYLE.get(label, {}))
    ax.set_xlabel("channel coherence time [ms]")
    ax.set_ylabel("mean effective throughput [bit/s/Hz]")
    ax.set_title(f"K={cfg.k_users}, SNR={snr0:g} dB, {cfg.scenario}")
    ax.set_xscale("log")
    ax.grid(True, alpha=0.4)
    ax.legend()
    _save(fig, out_dir, "throughput_vs_tcoh.png", paths)

    if "P1" in labels:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        base = {c.t_coh_ms: c.mean_throughput for c in _grid(result, "P1", snr0, q0)}
        for label in labels:
            if label in ("P1", TDD_LABEL):
                continue
            cells = _grid(result, label, snr0, q0)
            t = [c.t_coh_ms for c in cells]
            y = [c.mean_throughput / base[c.t_coh_ms] for c in cells if base.get(c.t_coh_ms)]
            ax.plot(t, y, label=f"{label} / P1", **_STYLE.get(label, {}))
        ax.axhline(1.0, color="gray", linewidth=0.8)
        ax.set_xlabel("channel coherence time [ms]")
        ax.set_ylabel("throughput gain over uncoordinated")
        ax.set_xscale("log")
        ax.grid(True, alpha=0.4)
        ax.legend()
        _save(fig, out_dir, "gain_over_p1.png", paths)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label in labels:
        if label == TDD_LABEL:
            continue
        cells = _grid(result, label, snr0, q0)
        t = [c.t_coh_ms for c in cells]
        y = [c.mean_m_bs for c in cells]
        ax.plot(t, y, label=label, **_STYLE.get(label, {}))
    ax.set_xlabel("channel coherence time [ms]")
    ax.set_ylabel("mean activated BS beams")
    ax.set_xscale("log")
    ax.grid(True, alpha=0.4)
    ax.legend()
    _save(fig, out_dir, "beam_count_vs_tcoh.png", paths)

    if len(cfg.snr_db) > 1:
        t0 = cfg.t_coh_ms[0]
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for label in labels:
            cells = sorted(
                [c for c in result.cells
                 if c.policy == label and c.t_coh_ms == t0 and c.q_bits == q0],
                key=lambda c: c.snr_db,
            )
            ax.plot([c.snr_db for c in cells], [c.mean_throughput for c in cells],
                    label=label, **_STYLE.get(label, {}))
        ax.set_xlabel("SNR [dB]")
        ax.set_ylabel("mean effective throughput [bit/s/Hz]")
        ax.grid(True, alpha=0.4)
        ax.legend()
        _save(fig, out_dir, "throughput_vs_snr.png", paths)

    if len(cfg.q_bits) > 1:
        t0 = cfg.t_coh_ms[0]
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for label in labels:
            if label == TDD_LABEL:
                continue
            cells = sorted(
                [c for c in result.cells
                 if c.policy == label and c.t_coh_ms == t0 and c.snr_db == snr0
                 and c.q_bits > 0],
                key=lambda c: c.q_bits,
            )
            ax.plot([c.q_bits for c in cells], [c.mean_throughput for c in cells],
                    label=label, **_STYLE.get(label, {}))
            ref = [c for c in result.cells
                   if c.policy == label and c.t_coh_ms == t0 and c.snr_db == snr0
                   and c.q_bits == 0]
            if ref:
                ax.axhline(ref[0].mean_throughput, linewidth=0.8, alpha=0.6,
                           color=_STYLE.get(label, {}).get("color", "gray"))
        ax.set_xlabel("feedback quantizer bits per component")
        ax.set_ylabel("mean effective throughput [bit/s/Hz]")
        ax.grid(True, alpha=0.4)
        ax.legend()
        _save(fig, out_dir, "throughput_vs_qbits.png", paths)

    return paths
