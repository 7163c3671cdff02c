"""Statistical beam selection in the beam (codebook) domain.

Everything here runs on second-order statistics only. Per UE, the beam-space
covariance G = D^H Sigma D (D = conj(all BS beams) kron all UE beams, column
index v*B_UE + w) is the one object all selection math reads from: the beam
pair gain table is its real diagonal, and the effective covariance for any
selected (V, W) is the submatrix over the selected index grid.

PMIs are plain sorted tuples of (v, w) index pairs, capped at pmi_cap per
UE. Every tie-break follows ascending lexicographic beam-index order so
selections are reproducible.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .codebook import BeamAssignment, Codebook
from .channel import ChannelStats
from .errors import InfeasibleAssignmentError, SearchSpaceError

__all__ = [
    "BeamPairGainTable",
    "SelectionState",
    "beam_pair_gain",
    "beam_pair_gain_table",
    "beam_space_covariance",
    "bs_side_covariance",
    "effective_covariance",
    "effective_cov_from_beamspace",
    "relevant_components",
    "pmi_for_combiner",
    "se_upper_bound",
    "gcmd",
    "overhead_v",
    "overhead_w",
    "objective_fk",
    "select_uncoordinated",
    "select_hierarchical",
    "brute_force_central",
    "central_objective",
    "ensure_bd_feasible",
]


@dataclass(frozen=True)
class BeamPairGainTable:
    """Average effective gain per beam pair: gains[v, w] = b_vw^H Sigma b_vw."""

    gains: np.ndarray

    def __post_init__(self):
        g = self.gains
        if g.min(initial=0.0) < -1e-10 * max(1.0, g.max(initial=0.0)):
            raise ValueError(f"gain table has a negative entry: {g.min()}")

    @property
    def b_bs(self) -> int:
        return self.gains.shape[0]

    @property
    def b_ue(self) -> int:
        return self.gains.shape[1]


def beam_pair_gain(stats: ChannelStats, v_beam: np.ndarray, w_beam: np.ndarray) -> float:
    """E|w^H H v|^2 = b^H Sigma b with b = conj(v) kron w."""
    b = np.kron(v_beam.conj(), w_beam)
    val = complex(b.conj() @ stats.sigma @ b)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"quadratic form is not real: imag={val.imag}")
    return val.real


def beam_space_covariance(
    stats: ChannelStats, bs_cb: Codebook, ue_cb: Codebook
) -> np.ndarray:
    """Covariance of the all-beams effective channel, B_BS*B_UE square.

    Cluster-built stats go through their per-path factor (cost O(paths)
    small projections); explicit covariances take the dense D^H Sigma D
    route. Row/column index is v * B_UE + w.
    """
    if stats.bs_steer is not None:
        c_bs = bs_cb.beams.conj().T @ stats.bs_steer
        c_ue = ue_cb.beams.conj().T @ stats.ue_steer
        fac = np.einsum("vp,up->vup", c_bs.conj(), c_ue).reshape(-1, c_bs.shape[1])
        fac = fac * np.sqrt(stats.path_power)[None, :]
        g = fac @ fac.conj().T
    else:
        d = np.kron(bs_cb.beams.conj(), ue_cb.beams)
        g = d.conj().T @ stats.sigma @ d
    return 0.5 * (g + g.conj().T)


def beam_pair_gain_table(
    stats: ChannelStats, bs_cb: Codebook, ue_cb: Codebook
) -> BeamPairGainTable:
    """All pairwise average gains at once (the diagonal of the beam-space covariance)."""
    if stats.bs_steer is not None:
        c_bs = np.abs(bs_cb.beams.conj().T @ stats.bs_steer) ** 2
        c_ue = np.abs(ue_cb.beams.conj().T @ stats.ue_steer) ** 2
        gains = (c_bs * stats.path_power[None, :]) @ c_ue.T
    else:
        g = beam_space_covariance(stats, bs_cb, ue_cb)
        diag = np.diagonal(g)
        if np.abs(diag.imag).max(initial=0.0) > 1e-10 * max(1.0, np.abs(diag.real).max(initial=0.0)):
            raise ValueError("beam-space covariance diagonal is not real")
        gains = diag.real.reshape(bs_cb.b, ue_cb.b)
    return BeamPairGainTable(gains=gains)


def effective_covariance(stats: ChannelStats, v: np.ndarray, w_k: np.ndarray) -> np.ndarray:
    """Sigma_bar = B^H Sigma B with B = conj(V) kron W_k, for explicit beam matrices."""
    b = np.kron(v.conj(), w_k)
    out = b.conj().T @ stats.sigma @ b
    return 0.5 * (out + out.conj().T)


def _index_grid(v_list, w_list, b_ue: int) -> list:
    return [v * b_ue + w for v in v_list for w in w_list]


def effective_cov_from_beamspace(g: np.ndarray, v_list, w_list, b_ue: int) -> np.ndarray:
    """Slice Sigma_bar for selected beams out of the all-beams covariance.

    v_list order defines the column-block order of the implied V, so keep
    it sorted when several UEs must share one coordinate frame.
    """
    rows = _index_grid(v_list, w_list, b_ue)
    return g[np.ix_(rows, rows)]


def bs_side_covariance(g: np.ndarray, v_list, w_list, b_ue: int) -> np.ndarray:
    """BS-side effective covariance: partial trace of Sigma_bar over the combiner index.

    R[v, v'] = sum_w g[(v, w), (v', w)] over the selected combiner beams.
    Spatial overlap between UEs lives on the BS side, so this is the
    matrix the separation measure compares: two UEs reusing a BS beam
    correlate here even when their combiner beams differ.
    """
    v = np.asarray(list(v_list), dtype=int)
    out = np.zeros((len(v), len(v)), dtype=complex)
    for w in w_list:
        rows = v * b_ue + int(w)
        out += g[np.ix_(rows, rows)]
    return out


def relevant_components(
    table: BeamPairGainTable, threshold: float | None = None, top_n: int | None = None
) -> tuple:
    """Beam pairs above a power threshold, or the N strongest pairs.

    Exactly one rule applies. Ties in the top_n rule break toward the
    lexicographically smaller (v, w).
    """
    if (threshold is None) == (top_n is None):
        raise ValueError("give exactly one of threshold or top_n")
    pairs = [
        (v, w) for v in range(table.b_bs) for w in range(table.b_ue)
    ]
    if threshold is not None:
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        return tuple((v, w) for (v, w) in pairs if table.gains[v, w] >= threshold)
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    ranked = sorted(pairs, key=lambda vw: (-table.gains[vw[0], vw[1]], vw[0], vw[1]))
    return tuple(sorted(ranked[:top_n]))


def pmi_for_combiner(table: BeamPairGainTable, w_indices, pmi_cap: int) -> tuple:
    """PMI for a given combiner: strongest pairs restricted to w in W_k, capped.

    Returns the pairs sorted lexicographically; gain ties during the cap
    break toward the smaller (v, w).
    """
    if pmi_cap < 1:
        raise ValueError("pmi_cap must be >= 1")
    pairs = [(v, w) for v in range(table.b_bs) for w in w_indices]
    ranked = sorted(pairs, key=lambda vw: (-table.gains[vw[0], vw[1]], vw[0], vw[1]))
    return tuple(sorted(ranked[:pmi_cap]))


def _bound_from_trace(tr: float, kappa: float, m_ue: int) -> float:
    if tr <= 0.0:
        return 0.0
    return m_ue * math.log2(1.0 + kappa * tr / m_ue)


def se_upper_bound(sigma_bar: np.ndarray, kappa: float, m_ue: int) -> float:
    """Jensen bound on the average SVD SE: M_UE log2(1 + kappa tr(Sigma_bar)/M_UE)."""
    tr = float(np.real(np.trace(sigma_bar)))
    if tr < 0 and tr > -1e-10:
        tr = 0.0
    if tr < 0:
        raise ValueError(f"negative trace {tr}")
    return _bound_from_trace(tr, kappa, m_ue)


def gcmd(sigma_bars, k: int) -> float:
    """Generalized correlation matrix distance of covariance k from the rest.

    1 - mean_j Tr(Sigma_k Sigma_j) / (||Sigma_k||_F ||Sigma_j||_F): zero for
    proportional covariances, one under trace orthogonality.
    """
    k_users = len(sigma_bars)
    if k_users < 2:
        raise ValueError("GCMD needs at least two covariances")
    norms = [float(np.linalg.norm(s)) for s in sigma_bars]
    if norms[k] == 0.0:
        raise ValueError(f"covariance {k} is zero; GCMD is undefined")
    acc = 0.0
    for j in range(k_users):
        if j == k:
            continue
        if norms[j] == 0.0:
            raise ValueError(f"covariance {j} is zero; GCMD is undefined")
        acc += float(np.vdot(sigma_bars[j], sigma_bars[k]).real) / (norms[k] * norms[j])
    return 1.0 - acc / (k_users - 1)


def _lenient_delta(sigma_k: np.ndarray, fixed_sigmas) -> float:
    """Partial GCMD used inside objectives: zero-norm partners count as orthogonal."""
    if not fixed_sigmas:
        return 1.0
    n_k = float(np.linalg.norm(sigma_k))
    if n_k == 0.0:
        return 1.0
    acc = 0.0
    for sig in fixed_sigmas:
        n_j = float(np.linalg.norm(sig))
        if n_j > 0.0:
            acc += float(np.vdot(sig, sigma_k).real) / (n_k * n_j)
    return max(1.0 - acc / len(fixed_sigmas), 0.0)


def overhead_v(m_bs: int, tau: int, t_total: int) -> float:
    """Training overhead of an activated-beam count: (tau / T) * m_bs."""
    if m_bs < 0:
        raise ValueError("beam count must be >= 0")
    if tau * m_bs > t_total:
        raise ValueError(
            f"pilot budget exceeded: tau*m_bs = {tau * m_bs} > T = {t_total}"
        )
    return tau * m_bs / t_total


def overhead_w(pmis, tau: int, t_total: int, count_pairs: bool = False) -> float:
    """Training overhead implied by the reported PMIs.

    Counts the distinct BS beams in the PMI union (what the BS must
    radiate); count_pairs switches to counting distinct pairs instead.
    """
    union = set().union(*[set(p) for p in pmis]) if pmis else set()
    card = len(union) if count_pairs else len({v for (v, _) in union})
    return overhead_v(card, tau, t_total)


@dataclass
class SelectionState:
    """What UEs 1..k-1 already fixed, as seen by the k-th UE in the hierarchy.

    decided_covs holds each decided UE's all-beams covariance so that its
    effective covariance over any later beam union is a submatrix slice.
    """

    bs_cb: Codebook
    ue_cb: Codebook
    m_ue: int
    pmi_cap: int
    count_pairs: bool = False
    decided_ues: list = field(default_factory=list)
    decided_combiners: list = field(default_factory=list)
    decided_pmis: list = field(default_factory=list)
    decided_covs: list = field(default_factory=list)

    @property
    def fixed_pairs(self) -> set:
        return set().union(*[set(p) for p in self.decided_pmis]) if self.decided_pmis else set()

    @property
    def fixed_v(self) -> set:
        return {v for (v, _) in self.fixed_pairs}

    def push(self, ue: int, combiner, pmi, beam_cov: np.ndarray) -> None:
        self.decided_ues.append(ue)
        self.decided_combiners.append(tuple(combiner))
        self.decided_pmis.append(tuple(pmi))
        self.decided_covs.append(beam_cov)


def _as_beamspace(sigma, bs_cb: Codebook, ue_cb: Codebook) -> np.ndarray:
    if isinstance(sigma, ChannelStats):
        return beam_space_covariance(sigma, bs_cb, ue_cb)
    return sigma


def _score_candidate(
    policy: str,
    state: SelectionState,
    candidate,
    g_k: np.ndarray,
    candidate_pmi,
    v_union,
    kappa: float,
    tau: int,
    t_total: int,
) -> float:
    """Stepwise selection objective for one candidate combiner."""
    b_ue = state.ue_cb.b
    gains = np.real(np.diagonal(g_k)).reshape(state.bs_cb.b, b_ue)
    tr = float(gains[np.ix_(v_union, list(candidate))].sum())
    if policy in ("P2", "P4") and tr > 0.0 and state.decided_covs:
        sig_k = bs_side_covariance(g_k, v_union, list(candidate), b_ue)
        fixed = [
            bs_side_covariance(g_j, v_union, list(w_j), b_ue)
            for g_j, w_j in zip(state.decided_covs, state.decided_combiners)
        ]
        delta = _lenient_delta(sig_k, fixed)
    else:
        delta = 1.0
    if policy in ("P3", "P4"):
        if state.count_pairs:
            card = len(state.fixed_pairs | set(candidate_pmi))
        else:
            card = len(v_union)
        omega = overhead_v(card, tau, t_total)
        prelog = 1.0 - omega
    else:
        prelog = 1.0
    if policy in ("P2", "P4"):
        tr = tr * delta
    return prelog * _bound_from_trace(tr, kappa, state.m_ue)


def objective_fk(
    policy: str,
    state: SelectionState,
    candidate,
    sigma,
    v_union,
    kappa: float,
    tau: int,
    t_total: int,
) -> float:
    """Stepwise decision objective f_k for one UE given the fixed predecessors.

    P1 is the trace bound alone; P2 multiplies the trace by the partial
    GCMD inside the log; P3 applies the (1 - omega) pre-log; P4 does both.
    The partial GCMD over an empty predecessor set is 1 by convention.
    sigma may be a ChannelStats or a precomputed all-beams covariance;
    v_union is the BS beam union of the candidate's PMI and the fixed set
    (pass None to derive it).
    """
    if policy not in ("P1", "P2", "P3", "P4"):
        raise ValueError(f"unknown policy {policy!r}")
    candidate = tuple(candidate)
    if len(set(candidate)) != state.m_ue:
        raise ValueError(f"candidate must hold {state.m_ue} distinct beams")
    g_k = _as_beamspace(sigma, state.bs_cb, state.ue_cb)
    gains = np.real(np.diagonal(g_k)).reshape(state.bs_cb.b, state.ue_cb.b)
    pmi = pmi_for_combiner(BeamPairGainTable(gains=gains), candidate, state.pmi_cap)
    if v_union is None:
        v_union = sorted(state.fixed_v | {v for (v, _) in pmi})
    return _score_candidate(
        policy, state, candidate, g_k, pmi, sorted(v_union), kappa, tau, t_total
    )


def _assignment_from(per_ue_combiners, per_ue_pmis) -> BeamAssignment:
    bs_beams = sorted({v for pmi in per_ue_pmis for (v, _) in pmi})
    return BeamAssignment(
        ue_beams=tuple(tuple(c) for c in per_ue_combiners),
        bs_beams=tuple(bs_beams),
        pmi=tuple(tuple(p) for p in per_ue_pmis),
    )


def select_uncoordinated(
    sigmas,
    bs_cb: Codebook,
    ue_cb: Codebook,
    m_ue: int,
    pmi_cap: int,
    kappa: float,
    tables=None,
) -> BeamAssignment:
    """Per-UE selfish selection: each UE maximizes its own trace bound.

    Every UE scans all C(B_UE, M_UE) combiner subsets, reports the capped
    PMI of the winner, and the BS activates the union of the reported
    v-indices. Ties go to the lexicographically smallest subset.
    """
    if tables is None:
        tables = [beam_pair_gain_table(s, bs_cb, ue_cb) for s in sigmas]
    combiners, pmis = [], []
    for table in tables:
        best = None
        for cand in itertools.combinations(range(ue_cb.b), m_ue):
            pmi = pmi_for_combiner(table, cand, pmi_cap)
            v_k = sorted({v for (v, _) in pmi})
            tr = float(table.gains[np.ix_(v_k, list(cand))].sum())
            val = _bound_from_trace(tr, kappa, m_ue)
            if best is None or val > best[0]:
                best = (val, cand, pmi)
        combiners.append(best[1])
        pmis.append(best[2])
    return _assignment_from(combiners, pmis)


def select_hierarchical(
    policy: str,
    order,
    sigmas,
    bs_cb: Codebook,
    ue_cb: Codebook,
    m_ue: int,
    pmi_cap: int,
    kappa: float,
    tau: int,
    t_total: int,
    m_bs_constraint: int | None = None,
    count_pairs: bool = False,
    beam_covs=None,
) -> BeamAssignment:
    """Decentralized hierarchical selection: UEs decide one after the other.

    UE k scores every C(B_UE, M_UE) combiner subset with objective f_k
    conditioned on the predecessors' combiners, PMIs, and covariances, and
    keeps the argmax (ties toward the lexicographically smallest subset).
    An optional m_bs_constraint caps the final activated-beam union by
    dropping beams in ascending order of their best pair gain across UEs
    (PMIs lose the dropped pairs so the union stays consistent).
    """
    k_users = len(sigmas)
    if m_bs_constraint is not None and m_bs_constraint < k_users:
        raise InfeasibleAssignmentError(
            f"beam budget {m_bs_constraint} cannot serve {k_users} UEs"
        )
    if beam_covs is None:
        beam_covs = [_as_beamspace(s, bs_cb, ue_cb) for s in sigmas]
    state = SelectionState(
        bs_cb=bs_cb, ue_cb=ue_cb, m_ue=m_ue, pmi_cap=pmi_cap, count_pairs=count_pairs
    )
    for ue in order:
        g_k = beam_covs[ue]
        gains = np.real(np.diagonal(g_k)).reshape(bs_cb.b, ue_cb.b)
        table = BeamPairGainTable(gains=gains)
        fixed_v = state.fixed_v
        best = None
        for cand in itertools.combinations(range(ue_cb.b), m_ue):
            pmi = pmi_for_combiner(table, cand, pmi_cap)
            v_union = sorted(fixed_v | {v for (v, _) in pmi})
            val = _score_candidate(
                policy, state, cand, g_k, pmi, v_union, kappa, tau, t_total
            )
            if best is None or val > best[0]:
                best = (val, cand, pmi)
        state.push(ue, best[1], best[2], g_k)

    by_ue = {ue: i for i, ue in enumerate(state.decided_ues)}
    combiners = [state.decided_combiners[by_ue[ue]] for ue in range(k_users)]
    pmis = [list(state.decided_pmis[by_ue[ue]]) for ue in range(k_users)]

    if m_bs_constraint is not None:
        tables = [np.real(np.diagonal(g)).reshape(bs_cb.b, ue_cb.b) for g in beam_covs]
        while True:
            union = sorted({v for pmi in pmis for (v, _) in pmi})
            if len(union) <= m_bs_constraint:
                break
            score = {
                v: max(
                    tables[k][v, w]
                    for k in range(k_users)
                    for w in combiners[k]
                )
                for v in union
            }
            drop = min(union, key=lambda v: (score[v], v))
            pmis = [[(v, w) for (v, w) in pmi if v != drop] for pmi in pmis]
    return _assignment_from(combiners, pmis)


def central_objective(
    policy: str,
    per_ue_combiners,
    sigmas,
    bs_cb: Codebook,
    ue_cb: Codebook,
    pmi_cap: int,
    kappa: float,
    tau: int,
    t_total: int,
    count_pairs: bool = False,
    beam_covs=None,
) -> float:
    """Full centralized objective of a joint combiner assignment.

    P1 sums the trace bounds; P2 weighs each trace by the full-K GCMD
    inside the log; P3 multiplies the P1 sum by (1 - omega); P4 combines
    both. PMIs are derived from each UE's own gain table, matching what
    the decentralized protocol would report for the same combiners.
    """
    if policy not in ("P1", "P2", "P3", "P4"):
        raise ValueError(f"unknown policy {policy!r}")
    k_users = len(sigmas)
    if beam_covs is None:
        beam_covs = [_as_beamspace(s, bs_cb, ue_cb) for s in sigmas]
    m_ue = len(per_ue_combiners[0])
    pmis = []
    for k in range(k_users):
        gains = np.real(np.diagonal(beam_covs[k])).reshape(bs_cb.b, ue_cb.b)
        pmis.append(pmi_for_combiner(BeamPairGainTable(gains=gains), per_ue_combiners[k], pmi_cap))
    v_union = sorted({v for pmi in pmis for (v, _) in pmi})

    traces, sig_bars = [], []
    for k in range(k_users):
        gains = np.real(np.diagonal(beam_covs[k])).reshape(bs_cb.b, ue_cb.b)
        traces.append(float(gains[np.ix_(v_union, list(per_ue_combiners[k]))].sum()))
        if policy in ("P2", "P4"):
            sig_bars.append(
                effective_cov_from_beamspace(
                    beam_covs[k], v_union, list(per_ue_combiners[k]), ue_cb.b
                )
            )

    total = 0.0
    for k in range(k_users):
        tr = traces[k]
        if policy in ("P2", "P4") and k_users > 1 and tr > 0.0:
            tr = tr * _lenient_delta(sig_bars[k], [s for j, s in enumerate(sig_bars) if j != k])
        total += _bound_from_trace(tr, kappa, m_ue)
    if policy in ("P3", "P4"):
        card = len(set().union(*pmis)) if count_pairs else len(v_union)
        total *= 1.0 - overhead_v(card, tau, t_total)
    return total


def brute_force_central(
    policy: str,
    sigmas,
    bs_cb: Codebook,
    ue_cb: Codebook,
    m_ue: int,
    pmi_cap: int,
    kappa: float,
    tau: int,
    t_total: int,
    count_pairs: bool = False,
    search_cap: int = 10**6,
    beam_covs=None,
) -> BeamAssignment:
    """Exhaustive joint maximizer of the centralized policy objective.

    Enumerates every per-UE combination of combiner subsets; first-found
    wins on ties, and itertools.product order makes that the
    lexicographically smallest assignment.
    """
    k_users = len(sigmas)
    per_ue = list(itertools.combinations(range(ue_cb.b), m_ue))
    if len(per_ue) ** k_users > search_cap:
        raise SearchSpaceError(
            f"{len(per_ue)}^{k_users} joint assignments exceed the cap {search_cap}"
        )
    if beam_covs is None:
        beam_covs = [_as_beamspace(s, bs_cb, ue_cb) for s in sigmas]
    best = None
    for assignment in itertools.product(per_ue, repeat=k_users):
        val = central_objective(
            policy,
            assignment,
            sigmas,
            bs_cb,
            ue_cb,
            pmi_cap,
            kappa,
            tau,
            t_total,
            count_pairs=count_pairs,
            beam_covs=beam_covs,
        )
        if best is None or val > best[0]:
            best = (val, assignment)
    combiners = best[1]
    pmis = []
    for k in range(k_users):
        gains = np.real(np.diagonal(beam_covs[k])).reshape(bs_cb.b, ue_cb.b)
        pmis.append(pmi_for_combiner(BeamPairGainTable(gains=gains), combiners[k], pmi_cap))
    return _assignment_from(combiners, pmis)


def ensure_bd_feasible(
    assignment: BeamAssignment, tables, min_m_bs: int
) -> BeamAssignment:
    """Pad the activated beam set until it can carry BD for all UEs.

    The BS tops up the PMI union with extra beams, strongest first by
    their best pair gain across UEs and their selected combiners (ties to
    the smaller beam index), until min_m_bs beams are active.
    """
    b_bs = tables[0].b_bs
    if min_m_bs > b_bs:
        raise ValueError(f"cannot activate {min_m_bs} of {b_bs} beams")
    active = set(assignment.all_bs_beams)
    if len(active) >= min_m_bs:
        return assignment
    spare = [v for v in range(b_bs) if v not in active]
    score = {
        v: max(
            tables[k].gains[v, w]
            for k in range(assignment.n_users)
            for w in assignment.ue_beams[k]
        )
        for v in spare
    }
    spare.sort(key=lambda v: (-score[v], v))
    need = min_m_bs - len(active)
    extra = tuple(sorted(list(assignment.extra_beams) + spare[:need]))
    return assignment.with_extra_beams(extra)
