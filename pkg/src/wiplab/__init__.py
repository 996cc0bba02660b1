"""wiplab: a wheeled-inverted-pendulum control laboratory.

Nonlinear plant simulation, LQR synthesis, an ensemble of soft actor-critic
policies, precision-weighted fusion of learned and feedback torques, and a
benchmark harness over tasks and plant perturbations.
"""

from .bench import (
    BenchmarkCase,
    CaseResult,
    HybridController,
    LqrController,
    RunMetrics,
    TABLE_CASES,
    ZeroController,
    case_by_name,
    emit_markdown,
    emit_table,
    rmse,
    rollout,
    run_case,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import Config
from .dynamics import (
    DEFAULT_PARAMS,
    PlantState,
    WipParams,
    accelerations,
    apply_case,
    simulate,
    step_rk4,
    total_energy,
)
from .errors import (
    CheckpointError,
    DataError,
    DivergenceError,
    ParameterError,
    SynthesisError,
    WiplabError,
)
from .fusion import (
    Ensemble,
    EpochConfig,
    EpochStats,
    FusedAction,
    composite,
    hybrid_action,
    mixture_moments,
    train_epoch,
)
from .lqr import (
    DEFAULT_GAINS,
    LinearModel,
    LqrGains,
    closed_loop_matrix,
    feedback_row,
    linearize,
    lqr_action,
    riccati_residual,
    solve_care,
)
from .nets import (
    AdamState,
    GaussianAction,
    Mlp,
    actor_head,
    adam_step,
    sample_squashed,
    squashed_log_prob,
)
from .sac import ReplayBuffer, SacAgent, Transition
from .tasks import (
    OBS_DIM,
    AugmentedState,
    RewardConfig,
    TrajectoryProfile,
    WipEnv,
    build_reference,
    load_trace,
    quintic,
    reward,
)

__version__ = "0.1.0"
