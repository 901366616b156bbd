"""Utterance-level classification heads over precomputed layer-wise frame features.

Pooling operators (mean, mean-std, correlation, attentive correlation)
with hand-derived gradients, a small training harness with leave-one-
session-out cross-validation, and the LSF1 feature-file plumbing.
"""

from .attention import (
    AttentionParams,
    attention_weights,
    attention_weights_equiv,
    head_scores,
    init_attention_params,
)
from .config import POOLING_METHODS, TrainConfig
from .data import (
    CLASSES,
    DISCARD,
    Fold,
    Manifest,
    SynthConfig,
    UtteranceRecord,
    flip_labels,
    generate_synth,
    load_feature_file,
    load_features,
    load_manifest,
    map_label,
    read_header,
    save_manifest,
    split_folds,
    write_feature_file,
    write_synth,
)
from .errors import (
    ConfigurationError,
    CorrPoolError,
    FormatError,
    InputError,
    MetricError,
    TrainingError,
)
from .grad import (
    AdamState,
    backward,
    batch_loss,
    clip_gradients,
    init_adam,
    loss_and_grads,
    optimizer_step,
    utterance_backward,
    utterance_forward,
)
from .harness import (
    CellResult,
    CVResult,
    FoldData,
    FoldResult,
    SweepResult,
    aggregate_folds,
    confusion_matrix,
    cross_validate,
    evaluate,
    make_fold_data,
    single_fold,
    sweep,
    train_fold,
    unweighted_accuracy,
    write_confusions,
    write_cv_csv,
    write_json,
    write_sweep_csv,
)
from .head import (
    HeadParams,
    ce_loss,
    ce_loss_grad,
    channel_dropout,
    classify,
    init_head_params,
    load_params,
    predict,
    project,
    save_params,
    smooth_label_index,
    smooth_labels,
)
from .pooling import (
    DEFAULT_EPS,
    attentive_corr_pool,
    corr_pool,
    correlation,
    embedding_dim,
    layer_gammas,
    layer_pool,
    mean_pool,
    mean_std_pool,
    vectorize_upper,
    weighted_stats,
)

__version__ = "0.1.0"
