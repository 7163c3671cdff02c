"""Cluster-based spatial channel statistics and Gaussian channel realizations.

User drops and cluster draws live on the slow (beam coherence) timescale;
channel realizations live on the fast (channel coherence) timescale. All
randomness flows through explicit numpy Generator streams, so identical
seeds reproduce identical drops bit for bit.

Conventions: half-wavelength ULAs at both ends, steering vectors normalized
to unit norm, and per-UE total path power normalized to 1, so the SNR knob
kappa carries the whole link budget. vec() stacks matrix columns, hence
vec(H)[p_bs * N_UE + p_ue] = H[p_ue, p_bs] and a single path g * a_ue a_bs^H
contributes g * (conj(a_bs) kron a_ue) to vec(H).
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NumericalDomainError

__all__ = [
    "ArrayGeometry",
    "ClusterConfig",
    "ClusterSet",
    "ChannelStats",
    "ChannelRealization",
    "DropGeometry",
    "steering_vector",
    "place_users",
    "draw_cluster_pool",
    "draw_clusters",
    "covariance_from_clusters",
    "realize_channel",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: element count and spacing in wavelengths."""

    n_elements: int
    element_spacing: float = 0.5

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError(f"n_elements must be >= 1, got {self.n_elements}")
        if self.element_spacing <= 0:
            raise ValueError(f"element_spacing must be > 0, got {self.element_spacing}")


def steering_vector(geom: ArrayGeometry, angle: float) -> np.ndarray:
    """Unit-norm ULA steering vector for a plane wave at the given angle (rad)."""
    p = np.arange(geom.n_elements)
    phase = 2 * np.pi * geom.element_spacing * p * np.sin(angle)
    return np.exp(1j * phase) / math.sqrt(geom.n_elements)


@dataclass(frozen=True)
class ClusterConfig:
    """Knobs of the generic geometric cluster model."""

    n_clusters: int = 4
    paths_per_cluster: int = 20
    angle_spread_deg: float = 5.0
    shared_cluster_probability: float = 0.0
    n_shared_clusters: int = 6
    cluster_power_decay_db: float = 3.0
    aod_spread_deg: float = 12.0
    aoa_sector_deg: float = 360.0
    k_factor: float = 0.0

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.n_shared_clusters < 1:
            raise ValueError("n_shared_clusters must be >= 1")
        if self.paths_per_cluster < 1:
            raise ValueError("paths_per_cluster must be >= 1")
        if self.angle_spread_deg < 0:
            raise ValueError("angle_spread_deg must be >= 0")
        if not 0.0 <= self.shared_cluster_probability <= 1.0:
            raise ValueError("shared_cluster_probability must be in [0, 1]")
        if self.aod_spread_deg < 0:
            raise ValueError("aod_spread_deg must be >= 0")
        if not 0.0 < self.aoa_sector_deg <= 360.0:
            raise ValueError("aoa_sector_deg must be in (0, 360]")
        if self.k_factor < 0:
            raise ValueError("k_factor must be >= 0")


@dataclass(frozen=True)
class ClusterSet:
    """Per-path angles and mean powers for one UE; powers sum to 1."""

    aod: np.ndarray
    aoa: np.ndarray
    power: np.ndarray
    los: bool = False
    k_factor: float = 0.0

    def __post_init__(self):
        if self.aod.size == 0:
            raise ValueError("a ClusterSet needs at least one path")
        if abs(self.power.sum() - 1.0) > 1e-9:
            raise ValueError(f"path powers must sum to 1, got {self.power.sum()}")

    @property
    def n_paths(self) -> int:
        return self.aod.size


@dataclass(frozen=True)
class DropGeometry:
    """BS and UE positions (meters) for one drop.

    sector_deg is the served wedge around the array boresight; scatterer
    cluster centers are drawn inside it so AoDs stay in the visible region
    of the beam grid.
    """

    ue_positions: np.ndarray
    bs_position: np.ndarray
    scenario: str
    sector_deg: float = 120.0

    @property
    def n_users(self) -> int:
        return self.ue_positions.shape[0]


@dataclass(frozen=True)
class ChannelStats:
    """Covariance of vec(H_k) plus its generating cluster geometry.

    When built from a ClusterSet, the per-path steering factors are kept so
    that beam-domain projections and channel sampling run at per-path cost
    instead of dense N_BS*N_UE algebra; sigma = path_factor @ path_factor^H
    exactly.
    """

    sigma: np.ndarray
    n_ue: int
    n_bs: int
    clusters: ClusterSet | None = None
    bs_steer: np.ndarray | None = None
    ue_steer: np.ndarray | None = None
    path_power: np.ndarray | None = None

    @classmethod
    def from_sigma(cls, sigma: np.ndarray, n_ue: int, n_bs: int) -> "ChannelStats":
        """Wrap an explicit covariance, checking it is Hermitian PSD."""
        sigma = np.asarray(sigma, dtype=complex)
        if sigma.shape != (n_ue * n_bs, n_ue * n_bs):
            raise ValueError(f"sigma must be {n_ue * n_bs} square, got {sigma.shape}")
        nrm = np.linalg.norm(sigma)
        if nrm > 0 and np.linalg.norm(sigma - sigma.conj().T) > 1e-12 * nrm:
            raise ValueError("sigma is not Hermitian within tolerance")
        sigma = 0.5 * (sigma + sigma.conj().T)
        w = np.linalg.eigvalsh(sigma) if sigma.size else np.array([0.0])
        if w.size and w[0] < -1e-10 * max(w[-1], 0.0) and w[0] < -1e-15:
            raise ValueError(f"sigma has negative eigenvalue {w[0]}")
        return cls(sigma=sigma, n_ue=n_ue, n_bs=n_bs)

    @property
    def dim(self) -> int:
        return self.n_ue * self.n_bs

    @cached_property
    def path_factor(self) -> np.ndarray | None:
        """Factor F with sigma = F F^H, column i = sqrt(p_i) conj(a_bs_i) kron a_ue_i."""
        if self.bs_steer is None:
            return None
        f = np.einsum("bp,up->bup", self.bs_steer.conj(), self.ue_steer)
        f = f.reshape(self.dim, -1)
        return f * np.sqrt(self.path_power)[None, :]

    @cached_property
    def sqrt_factor(self) -> np.ndarray:
        """Eigendecomposition square root with negative eigenvalues clipped at 0."""
        w, u = np.linalg.eigh(self.sigma)
        if w.size and w[0] < -1e-10 * max(w[-1], 0.0) and w[0] < -1e-15:
            raise NumericalDomainError(
                f"covariance is not PSD within tolerance (min eig {w[0]})"
            )
        return u * np.sqrt(np.clip(w, 0.0, None))[None, :]


@dataclass(frozen=True)
class ChannelRealization:
    """One narrowband channel matrix H_k, N_UE x N_BS."""

    h: np.ndarray


def _uniform_wedge(
    center: np.ndarray, radius: float, n: int, rng, sector_deg: float, axis: float = 0.0
) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    half = math.radians(sector_deg) / 2.0
    theta = axis + (2.0 * rng.random(n) - 1.0) * half
    return center[None, :] + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def place_users(
    scenario: str, k: int, cell_radius: float, cluster_radius: float, rng,
    sector_deg: float = 120.0,
) -> DropGeometry:
    """Drop K UEs in the served sector: uniform in the wedge, or packed around an anchor."""
    if k < 1:
        raise ValueError(f"need at least one UE, got K={k}")
    if cell_radius <= 0 or cluster_radius <= 0:
        raise ValueError("radii must be > 0")
    if not 0.0 < sector_deg <= 360.0:
        raise ValueError("sector_deg must be in (0, 360]")
    bs = np.zeros(2)
    if scenario == "random":
        pos = _uniform_wedge(bs, cell_radius, k, rng, sector_deg)
    elif scenario == "closely_located":
        anchor_radius = max(cell_radius - cluster_radius, 0.0)
        anchor = _uniform_wedge(bs, anchor_radius, 1, rng, sector_deg)[0]
        pos = _uniform_disc(anchor, cluster_radius, k, rng)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    return DropGeometry(ue_positions=pos, bs_position=bs, scenario=scenario,
                        sector_deg=sector_deg)


def _uniform_disc(center: np.ndarray, radius: float, n: int, rng) -> np.ndarray:
    return _uniform_wedge(center, radius, n, rng, 360.0)


def draw_cluster_pool(geometry: DropGeometry, cfg: ClusterConfig, rng) -> np.ndarray:
    """Scatterer cluster centers shared by the whole drop, uniform in the sector.

    The pool is deliberately small (n_shared_clusters): several of a UE's
    clusters, and several UEs, land on the same far scatterer, which is what
    makes the shared slots strong instead of diffuse.
    """
    radius = float(np.max(np.linalg.norm(geometry.ue_positions - geometry.bs_position, axis=1)))
    radius = max(radius, 1.0)
    return _uniform_wedge(geometry.bs_position, radius, cfg.n_shared_clusters, rng,
                          geometry.sector_deg)


def draw_clusters(
    geometry: DropGeometry,
    ue_index: int,
    cfg: ClusterConfig,
    rng,
    pool: np.ndarray | None = None,
) -> ClusterSet:
    """Draw one UE's multi-path cluster set.

    Each of the n_clusters clusters is taken from the shared drop pool with
    probability shared_cluster_probability (UEs reusing a pool slot see the
    same far scatterer, hence the same AoD at the BS), otherwise a private
    cluster is drawn in the angle domain: its AoD uniform within
    aod_spread_deg of the UE bearing, its AoA with the arrival sine uniform
    over the sine support of aoa_sector_deg. Sine-uniform arrivals give a
    cosine-shaped angular spectrum at the UE, which loads the receive beam
    grid evenly instead of piling power onto the endfire beams the way an
    angle-uniform draw does; the AoD spread confines each UE to a
    neighborhood of the BS grid. Per-path angles spread around the cluster
    center with a Laplacian profile; per-path powers get exponential
    weights under an exponentially decaying cluster profile, normalized to
    total power 1.
    """
    ue_pos = geometry.ue_positions[ue_index]
    bs_pos = geometry.bs_position
    if pool is None:
        pool_radius = max(float(np.linalg.norm(ue_pos - bs_pos)), 1.0)
        pool = _uniform_wedge(bs_pos, pool_radius, cfg.n_shared_clusters, rng,
                              geometry.sector_deg)

    laplace_scale = math.radians(cfg.angle_spread_deg) / math.sqrt(2.0)
    n_p = cfg.paths_per_cluster
    ue_bearing = math.atan2(*(ue_pos - bs_pos)[::-1])
    aod_half = math.radians(cfg.aod_spread_deg)
    aoa_half = math.radians(cfg.aoa_sector_deg) / 2.0
    sine_lim = math.sin(min(aoa_half, math.pi / 2.0))
    aod, aoa, power = [], [], []
    for c in range(cfg.n_clusters):
        if rng.random() < cfg.shared_cluster_probability:
            center = pool[c % len(pool)]
            aod_c = math.atan2(*(center - bs_pos)[::-1])
            aoa_c = math.atan2(*(center - ue_pos)[::-1])
        else:
            aod_c = ue_bearing + (2.0 * rng.random() - 1.0) * aod_half
            aoa_c = math.asin(sine_lim * (2.0 * rng.random() - 1.0))
        cluster_gain = 10.0 ** (-cfg.cluster_power_decay_db * c / 10.0)
        aod.append(aod_c + rng.laplace(0.0, laplace_scale, n_p))
        aoa.append(aoa_c + rng.laplace(0.0, laplace_scale, n_p))
        power.append(cluster_gain * rng.exponential(1.0, n_p))
    aod = np.concatenate(aod)
    aoa = np.concatenate(aoa)
    power = np.concatenate(power)

    los = cfg.k_factor > 0
    if los:
        # direct path takes k_factor/(1+k_factor) of the total power
        power = power / power.sum() / (1.0 + cfg.k_factor)
        aod = np.append(aod, math.atan2(*(ue_pos - bs_pos)[::-1]))
        aoa = np.append(aoa, math.atan2(*(bs_pos - ue_pos)[::-1]))
        power = np.append(power, cfg.k_factor / (1.0 + cfg.k_factor))
    else:
        power = power / power.sum()
    return ClusterSet(aod=aod, aoa=aoa, power=power, los=los, k_factor=cfg.k_factor)


def covariance_from_clusters(
    cs: ClusterSet, bs: ArrayGeometry, ue: ArrayGeometry
) -> ChannelStats:
    """Exact covariance of vec(H) for a cluster set: sum of per-path outer products.

    Sigma = sum_i p_i (conj(a_bs(aod_i)) kron a_ue(aoa_i)) (.)^H with unit-norm
    steering vectors, so trace(Sigma) equals the total path power (= 1).
    """
    p_bs = np.arange(bs.n_elements)[:, None]
    p_ue = np.arange(ue.n_elements)[:, None]
    a_bs = np.exp(2j * np.pi * bs.element_spacing * p_bs * np.sin(cs.aod)[None, :])
    a_bs /= math.sqrt(bs.n_elements)
    a_ue = np.exp(2j * np.pi * ue.element_spacing * p_ue * np.sin(cs.aoa)[None, :])
    a_ue /= math.sqrt(ue.n_elements)

    factor = np.einsum("bp,up->bup", a_bs.conj(), a_ue).reshape(-1, cs.n_paths)
    factor = factor * np.sqrt(cs.power)[None, :]
    sigma = factor @ factor.conj().T
    sigma = 0.5 * (sigma + sigma.conj().T)
    return ChannelStats(
        sigma=sigma,
        n_ue=ue.n_elements,
        n_bs=bs.n_elements,
        clusters=cs,
        bs_steer=a_bs,
        ue_steer=a_ue,
        path_power=cs.power,
    )


def realize_channel(stats: ChannelStats, rng) -> ChannelRealization:
    """Draw H with vec(H) ~ CN(0, Sigma).

    Cluster-built stats use the stored per-path factor F (Sigma = F F^H
    exactly), which costs O(paths) draws; explicit-covariance stats fall
    back to the eigendecomposition square root with negative eigenvalues
    clipped at 0. Both produce the exact target distribution.
    """
    factor = stats.path_factor
    if factor is None:
        factor = stats.sqrt_factor
    r = factor.shape[1]
    z = (rng.standard_normal(r) + 1j * rng.standard_normal(r)) / math.sqrt(2.0)
    vec = factor @ z
    return ChannelRealization(h=vec.reshape(stats.n_ue, stats.n_bs, order="F"))
