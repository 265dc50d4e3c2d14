"""Decision-focused training of BLP cost predictors via subcone alignment."""

from .cones import ConeMembership, Provenance, SubconeGenerators, cone_contains, extract_generators
from .datagen import DataSample, Dataset, GenConfig, generate_dataset, load_dataset, save_dataset
from .evaluation import (
    ExperimentConfig,
    ExperimentReport,
    MethodCell,
    normalized_regret,
    regret,
    run_experiment,
    write_report,
)
from .losses import (
    CaveVariant,
    LossOutput,
    SolverCalls,
    cave_loss,
    make_loss,
    mse_loss,
    pfyl_grad,
    spo_plus_grad,
)
from .problems import DenseBlp, GridSpProblem, InvalidSolutionError, TspProblem, make_problem
from .projection import (
    ProjectionResult,
    QpSettings,
    nnls_ipm,
    project_exact,
    project_heuristic,
    project_inner,
)
from .training import EpochRow, LinearPredictor, TrainConfig, TrainingDivergedError, train, write_log

__version__ = "0.1.0"
