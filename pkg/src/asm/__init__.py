"""Active sample mining: switchable human-annotation / self-labeling
selection around a closed-form per-sample min-max assignment."""

from .core import (UNDEFINED, DEFAULT_LAMBDA0, Decision, Hyperparameters,
                   Pool, REJECT, SampleRecord, SampleStatus, all_negative,
                   enumerate_label_candidates, is_undefined, positive_index,
                   single_positive)
from .curriculum import ConflictingAnnotationError, CurriculumState
from .engine import (EngineConfig, MiningEngine, Mode, OracleAnnotationSource,
                     QueueItem, RunMetrics, StopReason, Strategy)
from .labeling import assign_labels, detect_ambiguous
from .learner import (ModelParameters, SgdConfig, SgdOptimizer,
                      TrainingDivergedError, class_loss, classify,
                      init_linear, init_mlp, load_checkpoint,
                      overall_accuracy, predict, save_checkpoint,
                      validation_accuracy, weighted_objective)
from .oracle import (BUDGET_EXHAUSTED, SimulatedAnnotator, SyntheticData,
                     initial_annotations, inject_label_noise,
                     make_synthetic_pool, read_pool_csv, write_pool_csv)
from .solver import (LatentAssignment, Membership, brute_force_oracle,
                     compute_epsilon, iterate_fixed_point, solve_batch,
                     solve_sample)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
