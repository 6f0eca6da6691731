"""Zero-shot anomaly detection trained on randomly augmented prompts.

The package turns a pair of state words ("a" / "a damaged") into a large
set of random-word prompt pairs, trains a small feed-forward detector on
their text embeddings, and scores image embeddings with a fused
prompt-guided + detector (+ optional reference) score. Embeddings come
from files, so any encoder that writes the ``EMB1`` format can feed it.
"""

from __future__ import annotations

from .embeddings import (
    EmbeddingMatrix,
    PairedEmbeddingSet,
    l2_normalize,
    read_embeddings,
    write_embeddings,
)
from .errors import (
    ConfigError,
    CorruptionError,
    DataError,
    FormatError,
    ManifestError,
    MetricError,
    RandpromptError,
    StateError,
    TrainingError,
)
from .harness import (
    ExperimentConfig,
    ExperimentPaths,
    SweepSpec,
    prompt_guided_scores,
    reference_scores,
    run_few_shot,
    run_sweep,
    run_zero_shot,
    select_reference_rows,
)
from .manifest import (
    DatasetManifest,
    ManifestEntry,
    load_manifest,
    save_manifest,
)
from .metrics import (
    EvalReport,
    LabeledScores,
    auroc,
    aupr,
    evaluate_scores,
    f1_max,
    seed_statistics,
)
from .mlp import (
    MlpArchitecture,
    MlpParams,
    TrainConfig,
    TrainResult,
    load_checkpoint,
    save_checkpoint,
    score_fnn,
    train,
)
from .prompts import (
    DEFAULT_WORD_PAIR,
    PromptPair,
    RandomWordConfig,
    WordPair,
    generate_prompt_set,
    guide_prompt_set,
    read_prompt_file,
    word_pair_grid,
    write_prompt_file,
)
from .rng import SplitMix64
from .scoring import (
    ScoreVector,
    fuse,
    score_prompt_guided,
    score_reference,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CorruptionError",
    "DataError",
    "DatasetManifest",
    "DEFAULT_WORD_PAIR",
    "EmbeddingMatrix",
    "EvalReport",
    "ExperimentConfig",
    "ExperimentPaths",
    "FormatError",
    "LabeledScores",
    "ManifestEntry",
    "ManifestError",
    "MetricError",
    "MlpArchitecture",
    "MlpParams",
    "PairedEmbeddingSet",
    "PromptPair",
    "RandomWordConfig",
    "RandpromptError",
    "ScoreVector",
    "SplitMix64",
    "StateError",
    "SweepSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "WordPair",
    "auroc",
    "aupr",
    "evaluate_scores",
    "f1_max",
    "fuse",
    "generate_prompt_set",
    "guide_prompt_set",
    "l2_normalize",
    "load_checkpoint",
    "load_manifest",
    "prompt_guided_scores",
    "read_embeddings",
    "read_prompt_file",
    "reference_scores",
    "run_few_shot",
    "run_sweep",
    "run_zero_shot",
    "save_checkpoint",
    "save_manifest",
    "score_fnn",
    "score_prompt_guided",
    "score_reference",
    "seed_statistics",
    "select_reference_rows",
    "train",
    "word_pair_grid",
    "write_embeddings",
    "write_prompt_file",
    "__version__",
]
