"""gobsim: grid-of-beams beam selection for FDD multi-user massive MIMO.

Statistical beam selection (uncoordinated and hierarchically coordinated),
GoB training with LMMSE estimation and quantized feedback, block
diagonalization on the estimated effective channels, and a Monte-Carlo
harness that scores effective throughput under training overhead.
"""

from .beamsel import (
    BeamPairGainTable,
    SelectionState,
    beam_pair_gain,
    beam_pair_gain_table,
    beam_space_covariance,
    brute_force_central,
    bs_side_covariance,
    central_objective,
    effective_cov_from_beamspace,
    effective_covariance,
    ensure_bd_feasible,
    gcmd,
    objective_fk,
    overhead_v,
    overhead_w,
    pmi_for_combiner,
    relevant_components,
    se_upper_bound,
    select_hierarchical,
    select_uncoordinated,
)
from .channel import (
    ArrayGeometry,
    ChannelRealization,
    ChannelStats,
    ClusterConfig,
    ClusterSet,
    DropGeometry,
    covariance_from_clusters,
    draw_cluster_pool,
    draw_clusters,
    place_users,
    realize_channel,
    steering_vector,
)
from .codebook import (
    BeamAssignment,
    Codebook,
    assemble_block_combiner,
    assemble_combiner,
    assemble_precoder,
    dft_codebook,
)
from .errors import InfeasibleAssignmentError, NumericalDomainError, SearchSpaceError
from .precoding import (
    BdSolution,
    ThroughputReport,
    block_diagonalize,
    effective_throughput,
    se_bd,
    se_general,
    tdd_benchmark,
)
from .training import (
    EffectiveChannel,
    PilotMatrix,
    TrainingConfig,
    lmmse_error_covariance,
    lmmse_estimate,
    pilot_matrix,
    quantize_feedback,
    received_training,
    unvec,
)

__version__ = "0.1.0"
