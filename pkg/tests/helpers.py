"""Small builders shared by the test modules."""

import numpy as np

from gobsim import ArrayGeometry, ClusterConfig, covariance_from_clusters, draw_clusters, place_users


def random_psd(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return a @ a.conj().T / dim


def random_stats(rng, n_bs=6, n_ue=3, n_clusters=3, paths_per_cluster=8):
    geom = place_users("random", 1, 200.0, 30.0, rng)
    cfg = ClusterConfig(n_clusters=n_clusters, paths_per_cluster=paths_per_cluster)
    cs = draw_clusters(geom, 0, cfg, rng)
    return covariance_from_clusters(cs, ArrayGeometry(n_bs), ArrayGeometry(n_ue))


def paired_diff(result, pol_a, pol_b, snr, t_coh, q=0):
    """Per-drop paired throughput difference: mean, stderr, z score."""
    a = result.drops[(pol_a, snr, t_coh, q)][:, 0]
    b = result.drops[(pol_b, snr, t_coh, q)][:, 0]
    d = a - b
    se = float(d.std(ddof=1) / np.sqrt(len(d)))
    mean = float(d.mean())
    return mean, se, mean / se if se > 0 else np.inf
