"""anchorvote: streaming anchor-vector classifier, 18-bit fixed-point layer,
and a cycle-accurate simulator of the parallel-subspace datapath."""

__version__ = "0.1.0"

from .config import ModelConfig, RunConfig, parse_config_file, parse_config_text
from .core import (
    AnchorBank,
    Prediction,
    classify_part,
    join,
    learn_one,
    load_bank,
    parallel_vote,
    predict,
    predict_group,
    save_bank,
    select_anchor,
    sequential_vote,
    split,
    train_stream,
)
from .dataset import Dataset, load_dataset, save_dataset
from .errors import (
    AnchorVoteError,
    CapacityError,
    ConfigurationError,
    DivisionDomainError,
    NumericError,
    ProtocolError,
    UntrainedModelError,
    UsageError,
)
from .experiment import ExperimentResult, run_experiment, train_bank, train_machine
from .fixedpoint import (
    Fixed,
    QFormat,
    ReciprocalTable,
    StageFormats,
    fx_add,
    fx_div_by_counter,
    fx_mul,
    quantize,
)
from .hwsim import (
    CycleReport,
    ResourceReport,
    SimMachine,
    load_snapshot,
    resource_report,
    save_snapshot,
    sim_classify,
    sim_learn,
    timing_report,
)
from .replay import ReplayReport, TrainingLog, replay_verify
from .reporting import render_report
from .synthetic import SyntheticSpec, generate_datasets, nearest_centroid_accuracy
