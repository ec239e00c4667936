from .config import DEFAULT_CHECKPOINTS, DEFAULT_EMBEDDINGS, ConfigError, ModelKind, TrainConfig, Variant
from .core import (
    PROBE_TEXTS,
    DataError,
    DivergenceError,
    EpochRecord,
    ModelHandle,
    Prediction,
    TrainedModel,
    TrainingLog,
    build_model,
    decide,
    fit,
    labels_from_probs,
    predict_labels,
    predict_proba,
    probe_outputs,
    state_dict_sha256,
    train,
    vocab_from_split,
)
from .networks import BiLSTMClassifier, TransformerClassifier
from .persistence import ArtifactError, check_probes, load_model, save_model
