"""Campaign configuration: one flat key-value file drives everything.

The config format is deliberately plain: `key = value` lines, `#` comments,
comma-separated lists for the sweep axes. CLI flags override file values.
"""

import dataclasses
from dataclasses import dataclass

from ..channel import ArrayGeometry, ClusterConfig
from ..codebook import Codebook, dft_codebook

__all__ = ["ScenarioConfig", "load_config", "parse_config_text", "POLICIES"]

POLICIES = ("P1", "P2", "P3", "P4")

# 14 OFDM symbols x 300 subcarriers per millisecond of coherence budget
RE_PER_MS = 4200.0


def _next_prime(n: int) -> int:
    def is_prime(m):
        if m < 2:
            return False
        f = 2
        while f * f <= m:
            if m % f == 0:
                return False
            f += 1
        return True

    while not is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one Monte-Carlo campaign.

    Sweep axes (snr_db, t_coh_ms, q_bits) are tuples; everything else is a
    scalar shared by every cell. q_bits = 0 means unquantized feedback and
    tau = 0 asks for the smallest prime covering a full-codebook sounding.
    """

    n_bs: int = 96
    n_ue: int = 4
    b_bs: int = 96
    b_ue: int = 4
    k_users: int = 7
    m_ue: int = 3
    pmi_cap: int = 4
    snr_db: tuple = (11.0,)
    t_coh_ms: tuple = (15.0, 50.0, 100.0)
    q_bits: tuple = (0,)
    tau: int = 2200
    iterations: int = 500
    seed: int = 1234
    scenario: str = "random"
    policies: tuple = POLICIES
    include_tdd: bool = True
    frames_per_drop: int = 1
    count_pairs: bool = False
    search_cap: int = 10**6
    cell_radius: float = 250.0
    cluster_radius: float = 30.0
    sector_deg: float = 120.0
    n_clusters: int = 20
    paths_per_cluster: int = 6
    angle_spread_deg: float = 4.0
    shared_cluster_probability: float = 0.25
    n_shared_clusters: int = 6
    cluster_power_decay_db: float = 0.0
    aod_spread_deg: float = 20.0
    aoa_sector_deg: float = 360.0
    k_factor: float = 0.0

    def __post_init__(self):
        if self.tau == 0:
            object.__setattr__(self, "tau", _next_prime(self.b_bs))
        self.validate()

    def validate(self) -> None:
        for name in ("n_bs", "n_ue", "b_bs", "b_ue", "k_users", "m_ue",
                     "pmi_cap", "tau", "iterations", "frames_per_drop"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.m_ue > self.b_ue:
            raise ValueError(f"m_ue = {self.m_ue} exceeds b_ue = {self.b_ue}")
        if (self.k_users - 1) * self.m_ue >= self.b_bs:
            raise ValueError(
                f"(K-1)*m_ue = {(self.k_users - 1) * self.m_ue} must stay below "
                f"b_bs = {self.b_bs}; BD has no null space left"
            )
        if self.scenario not in ("random", "closely_located"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        for p in self.policies:
            if p not in POLICIES:
                raise ValueError(f"unknown policy {p!r}")
        if not self.policies:
            raise ValueError("at least one policy is required")
        for axis in ("snr_db", "t_coh_ms", "q_bits"):
            if len(getattr(self, axis)) == 0:
                raise ValueError(f"{axis} sweep must not be empty")
        if any(q < 0 for q in self.q_bits):
            raise ValueError("q_bits entries must be >= 0")
        if any(t <= 0 for t in self.t_coh_ms):
            raise ValueError("t_coh_ms entries must be > 0")
        if not 0.0 < self.sector_deg <= 360.0:
            raise ValueError("sector_deg must be in (0, 360]")
        if self.include_tdd and self.k_users * self.n_ue > self.n_bs:
            raise ValueError(
                f"TDD benchmark needs K*n_ue <= n_bs, got "
                f"{self.k_users * self.n_ue} > {self.n_bs}; disable include_tdd"
            )
        max_beams = min(self.b_bs, self.k_users * max(self.pmi_cap, self.m_ue))
        t_min = min(self.t_total(t) for t in self.t_coh_ms)
        if self.tau * max_beams > t_min:
            raise ValueError(
                f"tau * max activated beams = {self.tau * max_beams} exceeds the "
                f"shortest coherence budget T = {t_min}"
            )

    def t_total(self, t_coh_ms: float) -> int:
        return int(round(RE_PER_MS * t_coh_ms))

    @property
    def min_m_bs(self) -> int:
        """Activated-beam floor that keeps BD full-stream for all UEs."""
        return min(self.b_bs, self.k_users * self.m_ue)

    def bs_codebook(self) -> Codebook:
        return dft_codebook(self.n_bs, self.b_bs, side="bs")

    def ue_codebook(self) -> Codebook:
        return dft_codebook(self.n_ue, self.b_ue, side="ue")

    def bs_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_bs)

    def ue_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_ue)

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(
            n_clusters=self.n_clusters,
            paths_per_cluster=self.paths_per_cluster,
            angle_spread_deg=self.angle_spread_deg,
            shared_cluster_probability=self.shared_cluster_probability,
            n_shared_clusters=self.n_shared_clusters,
            cluster_power_decay_db=self.cluster_power_decay_db,
            aod_spread_deg=self.aod_spread_deg,
            aoa_sector_deg=self.aoa_sector_deg,
            k_factor=self.k_factor,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
_TUPLE_FLOAT = ("snr_db", "t_coh_ms")
_TUPLE_INT = ("q_bits",)
_TUPLE_STR = ("policies",)
_BOOL = ("include_tdd", "count_pairs")


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _TUPLE_FLOAT:
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if key in _TUPLE_INT:
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if key in _TUPLE_STR:
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if key in _BOOL:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if key == "scenario":
        return raw
    ftype = _FIELD_TYPES.get(key)
    if ftype in ("int", int):
        return int(raw)
    return float(raw)


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse `key = value` lines into a validated ScenarioConfig."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    return ScenarioConfig(**values)


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
