"""Conformal novelty detection with FDR control and decision-based
adversarial stress tests of that control.

The package splits into layers, re-exported here for convenience:

- :mod:`fdrbench.stats` — conformal p-values, the Benjamini-Hochberg step-up
  rule, FDP/power metrics, and the post-attack FDR upper-bound estimate.
- :mod:`fdrbench.learners` — the two score-function families (random forest,
  small feed-forward network) behind a shared train/score/decide interface.
- :mod:`fdrbench.detector` — the novelty detector: train-on-nulls PU
  learning, conformal calibration, and BH selection.
- :mod:`fdrbench.attacks` — decision-based perturbation searches
  (HopSkipJump and a boundary random walk) with exact query accounting.
- :mod:`fdrbench.schemes` — the three attacker threat models (oracle,
  surrogate, direct) built on the attack primitives.
- :mod:`fdrbench.datagen` — synthetic data families and CSV dataset loading,
  plus bundled dataset excerpts.
- :mod:`fdrbench.harness` — replicated, seeded experiments with JSON / CSV /
  markdown reports; the ``bench`` CLI lives in :mod:`fdrbench.cli`.
"""

from .attacks import (
    ALGORITHMS,
    AttackOutcome,
    AttackParams,
    BoundaryParams,
    CallableDecision,
    CountingOracle,
    HsjaParams,
    attack_point,
)
from .datagen import (
    BUNDLED_DATASETS,
    FAMILIES,
    RealDatasetSpec,
    SyntheticSpec,
    bundled_dataset_spec,
    generate_split,
    load_real_split,
)
from .detector import (
    DataSplit,
    DetectionResult,
    DetectorConfig,
    DetectorService,
    adadetect,
    ground_truth_mask,
    query_labels,
    run_detector,
)
from .errors import (
    AttackInitializationError,
    DatasetFormatError,
    DatasetSizeError,
    DegenerateSurrogateError,
    DegenerateTrainingError,
    InvalidInputError,
    UsageError,
)
from .harness import (
    DESK_SIZES,
    EXPERIMENT_SCHEMES,
    PAPER_SIZES,
    PRESETS,
    REPORT_FORMATS,
    ExperimentConfig,
    ExperimentReport,
    ReplicateRecord,
    bound_respected,
    config_from_dict,
    config_to_dict,
    derive_seed,
    emit_report,
    preset_config,
    report_from_json,
    run_experiment,
    with_paper_scale,
)
from .learners import (
    MODEL_KINDS,
    LearnerConfig,
    NeuralNetHyper,
    RandomForestHyper,
    ScoreModel,
    train_from_config,
    train_score_function,
)
from .schemes import (
    SCHEMES,
    SELECTION_RULES,
    SchemeResult,
    SizeRule,
    run_direct_scheme,
    run_oracle_scheme,
    run_surrogate_scheme,
)
from .stats import (
    benjamini_hochberg,
    confusion_counts,
    conformal_pvalue,
    conformal_pvalues,
    estimate_fdr_upper_bound,
    fdp_and_power,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # stats
    "conformal_pvalue", "conformal_pvalues", "benjamini_hochberg",
    "fdp_and_power", "confusion_counts", "estimate_fdr_upper_bound",
    # learners
    "MODEL_KINDS", "LearnerConfig", "RandomForestHyper", "NeuralNetHyper",
    "ScoreModel", "train_score_function", "train_from_config",
    # detector
    "DataSplit", "DetectionResult", "DetectorConfig", "DetectorService",
    "adadetect", "run_detector", "query_labels", "ground_truth_mask",
    # attacks
    "ALGORITHMS", "AttackParams", "HsjaParams", "BoundaryParams",
    "AttackOutcome", "CallableDecision", "CountingOracle", "attack_point",
    # schemes
    "SCHEMES", "SELECTION_RULES", "SizeRule", "SchemeResult",
    "run_oracle_scheme", "run_surrogate_scheme", "run_direct_scheme",
    # datagen
    "FAMILIES", "BUNDLED_DATASETS", "SyntheticSpec", "RealDatasetSpec",
    "generate_split", "load_real_split", "bundled_dataset_spec",
    # harness
    "EXPERIMENT_SCHEMES", "REPORT_FORMATS", "PRESETS", "DESK_SIZES",
    "PAPER_SIZES", "ExperimentConfig", "ExperimentReport", "ReplicateRecord",
    "derive_seed", "run_experiment", "emit_report", "report_from_json",
    "config_to_dict", "config_from_dict", "preset_config", "with_paper_scale",
    "bound_respected",
    # errors
    "InvalidInputError", "DegenerateTrainingError", "DegenerateSurrogateError",
    "AttackInitializationError", "DatasetFormatError", "DatasetSizeError",
    "UsageError",
]
