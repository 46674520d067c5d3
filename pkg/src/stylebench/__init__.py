"""Desk-scale workbench for studying how training-data composition —
photographs, paintings, and style-transferred hybrids — shapes classifier
robustness to image corruptions and distribution shift.
"""

from .corruptions import (
    CATEGORIES,
    CATEGORY_MEMBERS,
    CORRUPTION_NAMES,
    CorruptedSet,
    CorruptionSpec,
    all_specs,
    apply_corruption,
    corrupt_dataset,
)
from .datamodel import (
    BudgetSplit,
    DataError,
    DomainDataset,
    ImageSample,
    ManifestError,
    balance_classes,
    dataset_hash,
    extract_patches,
    load_manifest,
    make_budget_split,
    save_manifest,
)
from .estimators import (
    CorruptionTransformer,
    LowPassTransformer,
    MomentMatchingTransformer,
    SchemeClassifier,
)
from .evaluation import (
    EvalReport,
    RunAggregate,
    accuracy,
    aggregate_runs,
    combined_mean,
    evaluate,
    mean_corruption_accuracy,
)
from .frequency import LowPassSpec, RadialSpectrum, compute_spectrum, filter_dataset, lowpass_filter
from .gram import gram_distance, gram_matrix, mean_pair_distance
from .seeding import derive_seed, rng_for
from .stylization import (
    StylePolicy,
    Stylizer,
    moment_match_stylize,
    stylize_dataset,
)
from .synthetic import make_synthetic_dataset
from .training import (
    TrainedModel,
    TrainingConfig,
    predict,
    predict_batch,
    train_scheme,
)

__version__ = "0.1.0"
