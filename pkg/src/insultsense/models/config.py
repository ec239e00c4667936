"""Model kinds and training hyperparameters."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, fields, replace


class ConfigError(ValueError):
    pass


class Variant(str, enum.Enum):
    BERT_BASE = "bert_base"
    HATE_BERT = "hate_bert"
    ROBERTA = "roberta"
    BILSTM = "bilstm"

    @property
    def is_transformer(self) -> bool:
        return self is not Variant.BILSTM


DEFAULT_CHECKPOINTS = {
    Variant.BERT_BASE: "bert-base-uncased",
    Variant.HATE_BERT: "GroNLP/hateBERT",
    Variant.ROBERTA: "roberta-base",
}
DEFAULT_EMBEDDINGS = "fasttext-crawl-300d-2M"


@dataclass(frozen=True)
class ModelKind:
    """Which classifier recipe to build.

    ``checkpoint_id`` names the pretrained encoder for transformer variants.
    For a BiLSTM with pretrained embeddings it names the word-vector asset.
    """

    variant: Variant
    use_pretrained_embeddings: bool = False
    checkpoint_id: str = ""

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if self.use_pretrained_embeddings and variant.is_transformer:
            raise ConfigError("use_pretrained_embeddings only applies to the BiLSTM variant")
        if not self.checkpoint_id:
            if variant.is_transformer:
                object.__setattr__(self, "checkpoint_id", DEFAULT_CHECKPOINTS[variant])
            elif self.use_pretrained_embeddings:
                object.__setattr__(self, "checkpoint_id", DEFAULT_EMBEDDINGS)

    @property
    def model_id(self) -> str:
        names = {Variant.BERT_BASE: "BERT", Variant.HATE_BERT: "HateBERT", Variant.ROBERTA: "RoBERTa"}
        if self.variant.is_transformer:
            return names[self.variant]
        return "BiLSTM+FastText" if self.use_pretrained_embeddings else "BiLSTM"

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "use_pretrained_embeddings": self.use_pretrained_embeddings,
            "checkpoint_id": self.checkpoint_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ModelKind:
        return cls(Variant(d["variant"]), bool(d.get("use_pretrained_embeddings", False)), d.get("checkpoint_id", ""))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 20
    seed: int = 42
    max_len: int = 128
    weight_decay: float = 0.01
    early_stop_metric: str = "val_macro_f1"
    patience: int = 3
    decision_threshold: float = 0.5
    # BiLSTM architecture and vocabulary
    hidden_size: int = 128
    dropout: float = 0.5
    embedding_dim: int = 300
    min_freq: int = 2
    # transformer inputs normally keep stopwords
    transformer_stopwords: bool = False
    max_grad_norm: float = 1.0

    def __post_init__(self):
        checks = [
            (self.learning_rate > 0, "learning_rate must be positive"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.max_epochs >= 1, "max_epochs must be >= 1"),
            (self.max_len >= 1, "max_len must be >= 1"),
            (self.weight_decay >= 0, "weight_decay must be non-negative"),
            (self.early_stop_metric == "val_macro_f1", "early_stop_metric must be 'val_macro_f1'"),
            (self.patience >= 1, "patience must be >= 1"),
            (0 < self.decision_threshold < 1, "decision_threshold must lie in (0, 1)"),
            (self.hidden_size >= 1, "hidden_size must be >= 1"),
            (0 <= self.dropout < 1, "dropout must lie in [0, 1)"),
            (self.embedding_dim >= 1, "embedding_dim must be >= 1"),
            (self.min_freq >= 1, "min_freq must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def for_variant(cls, variant: Variant | str, **overrides) -> TrainConfig:
        """Defaults for a variant, with keyword overrides."""
        base = cls()
        if Variant(variant).is_transformer:
            base = replace(base, learning_rate=2e-5, batch_size=16, max_epochs=4, patience=2)
        return replace(base, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown TrainConfig field(s): {unknown}")
        return cls(**d)
