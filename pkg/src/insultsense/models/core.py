"""Building, training and running the four classifier recipes."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .. import __version__
from ..assets import AssetError, AssetLocator
from ..corpus import Label, SplitBundle, corpus_digest
from ..evaluation import report
from ..textprep import (
    CleanOptions,
    EmbeddingTable,
    StopwordList,
    SubwordEncoder,
    Vocabulary,
    WordPipeline,
    build_vocab,
    load_embedding_file,
)
from .config import ConfigError, ModelKind, TrainConfig, Variant
from .networks import BiLSTMClassifier, TransformerClassifier

log = logging.getLogger(__name__)

PREDICT_BATCH = 64

PROBE_TEXTS = (
    "You are a complete idiot and everyone knows it.",
    "Thanks for sharing, this was really helpful.",
    "shut up you moron",
    "I disagree with the article but it makes fair points.",
    "What a pathetic loser, go away.",
    "The game last night was amazing!",
    "",
    "@someone check http://example.com for details",
    "You're dumb as a rock lol",
    "Could you post the source for that claim?",
    "nobody cares about your stupid opinion",
    "Happy birthday, hope you have a great day",
    "ugh.",
    "this comment section is full of trolls and idiots",
    "I think the mayor is doing a decent job overall.",
    "go back to school, you illiterate clown",
)


class DataError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class Prediction:
    probs: tuple[float, float]

    @property
    def insult(self) -> float:
        return self.probs[1]

    @property
    def neutral(self) -> float:
        return self.probs[0]


@dataclass
class EpochRecord:
    train_loss: float
    val_accuracy: float
    val_macro_f1: float


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1

    def __len__(self):
        return len(self.epochs)

    def to_dict(self) -> dict:
        return {"best_epoch": self.best_epoch, "epochs": [vars(e) for e in self.epochs]}


@dataclass
class ModelHandle:
    """An untrained (or training) model: network plus its input encoder."""

    kind: ModelKind
    config: TrainConfig
    network: nn.Module
    encoder: WordPipeline | SubwordEncoder
    asset_hashes: dict = field(default_factory=dict)


@dataclass
class TrainedModel:
    kind: ModelKind
    config: TrainConfig
    network: nn.Module
    encoder: WordPipeline | SubwordEncoder
    manifest: dict = field(default_factory=dict)
    weights_ref: str | None = None

    @property
    def model_id(self) -> str:
        return self.kind.model_id

    @property
    def model_version(self) -> str:
        return self.manifest.get("model_version", self.kind.model_id)

    def predict_proba(self, texts: Sequence[str]) -> list[Prediction]:
        return predict_proba(self, texts)


def _seed_everything(seed: int):
    torch.manual_seed(seed)
    np.random.seed(seed % (2**32))


def preprocessing_profile(kind: ModelKind, config: TrainConfig, stopwords: StopwordList) -> dict:
    if kind.variant.is_transformer:
        clean = CleanOptions.light()
        sw = stopwords.source_id if config.transformer_stopwords else None
    else:
        clean = CleanOptions.full()
        sw = stopwords.source_id
    return {"clean": vars(clean), "stopwords": sw, "max_len": config.max_len}


def vocab_from_split(data: SplitBundle, config: TrainConfig, stopwords: StopwordList | None = None) -> Vocabulary:
    """Word vocabulary from the training part only (val/test tokens never leak in)."""
    stopwords = stopwords or StopwordList.default()
    clean = CleanOptions.full()
    return build_vocab((WordPipeline.tokens(t, stopwords, clean) for t in data.train.texts), config.min_freq)


def build_model(
    kind: ModelKind,
    config: TrainConfig,
    assets: AssetLocator | None = None,
    vocab: Vocabulary | None = None,
    embeddings: EmbeddingTable | None = None,
    stopwords: StopwordList | None = None,
) -> ModelHandle:
    """Construct an untrained classifier.

    Transformer variants load the pretrained encoder named by
    ``kind.checkpoint_id`` and attach a freshly seeded 2-class head.  The
    BiLSTM needs the training vocabulary; with ``use_pretrained_embeddings``
    its embedding layer starts from the word-vector table.
    """
    assets = assets or AssetLocator.from_env()
    stopwords = stopwords or StopwordList.default()
    hashes = {}
    if kind.variant is Variant.BILSTM:
        if vocab is None:
            raise ConfigError("the BiLSTM variant needs a vocabulary built from the training split")
        if kind.use_pretrained_embeddings and embeddings is None:
            path = assets.resolve(kind.checkpoint_id)
            embeddings = load_embedding_file(path, vocab, config.embedding_dim, seed=config.seed)
            hashes[kind.checkpoint_id] = assets.sha256(kind.checkpoint_id)
        if embeddings is not None:
            if embeddings.dim != config.embedding_dim:
                raise ConfigError(f"embedding table dim {embeddings.dim} != configured embedding_dim {config.embedding_dim}")
            if embeddings.rows.shape[0] != len(vocab):
                raise ConfigError(f"embedding table has {embeddings.rows.shape[0]} rows for a vocabulary of {len(vocab)}")
        _seed_everything(config.seed)
        net = BiLSTMClassifier(len(vocab), config.embedding_dim, config.hidden_size, config.dropout)
        if embeddings is not None:
            with torch.no_grad():
                net.embedding.weight.copy_(torch.from_numpy(embeddings.rows))
        encoder = WordPipeline(vocab, stopwords, CleanOptions.full(), config.max_len)
        return ModelHandle(kind, config, net, encoder, hashes)

    from transformers import AutoModelForSequenceClassification
    from transformers.utils import logging as hf_logging

    path = assets.resolve(kind.checkpoint_id)
    hashes[kind.checkpoint_id] = assets.sha256(kind.checkpoint_id)
    encoder = SubwordEncoder(
        kind.checkpoint_id, path, config.max_len, CleanOptions.light(),
        stopwords if config.transformer_stopwords else None,
    )
    _seed_everything(config.seed)
    verbosity = hf_logging.get_verbosity()
    # the missing-head load report is expected here
    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()
    try:
        hf = AutoModelForSequenceClassification.from_pretrained(str(path), num_labels=2)
    except (OSError, ValueError) as exc:
        raise AssetError(kind.checkpoint_id, f"cannot load model weights from {path}: {exc}") from exc
    finally:
        hf_logging.set_verbosity(verbosity)
    return ModelHandle(kind, config, TransformerClassifier(hf), encoder, hashes)


def _encode(encoder, texts: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
    enc = encoder.batch(list(texts))
    return enc["input_ids"], enc["attention_mask"]


@torch.no_grad()
def _logits(network: nn.Module, ids: torch.Tensor, mask: torch.Tensor, batch: int = PREDICT_BATCH) -> torch.Tensor:
    network.eval()
    out = [network(ids[i : i + batch], mask[i : i + batch]) for i in range(0, len(ids), batch)]
    return torch.cat(out) if out else torch.empty(0, 2)


def _probs(logits: torch.Tensor) -> np.ndarray:
    return torch.softmax(logits.double(), dim=1).numpy()


def _evaluate(network, ids, mask, labels: Sequence[int], threshold: float):
    probs = _probs(_logits(network, ids, mask))
    pred = [int(p[1] >= threshold) for p in probs]
    return report("val", labels, pred)


def train(model: ModelHandle, data: SplitBundle, config: TrainConfig | None = None) -> tuple[TrainedModel, TrainingLog]:
    """Fine-tune with AdamW + cross-entropy, keeping the best epoch by validation macro-F1."""
    config = config or model.config
    if len(data.train) == 0:
        raise DataError("training split is empty")
    if len(data.val) == 0:
        raise DataError("validation split is empty")
    _seed_everything(config.seed)
    net = model.network
    ids, mask = _encode(model.encoder, data.train.texts)
    y = torch.tensor(data.train.labels, dtype=torch.long)
    val_ids, val_mask = _encode(model.encoder, data.val.texts)
    val_labels = data.val.labels

    optimizer = torch.optim.AdamW(net.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
    gen = torch.Generator().manual_seed(config.seed)
    tlog = TrainingLog()
    best_f1, best_state, stale = -math.inf, None, 0
    n = len(y)
    for epoch in range(config.max_epochs):
        net.train()
        order = torch.randperm(n, generator=gen)
        total, seen = 0.0, 0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            loss = F.cross_entropy(net(ids[idx], mask[idx]), y[idx])
            if not torch.isfinite(loss):
                raise DivergenceError(epoch, b, loss.item())
            optimizer.zero_grad()
            loss.backward()
            if config.max_grad_norm:
                nn.utils.clip_grad_norm_(net.parameters(), config.max_grad_norm)
            optimizer.step()
            total += loss.item() * len(idx)
            seen += len(idx)
        rep = _evaluate(net, val_ids, val_mask, val_labels, config.decision_threshold)
        tlog.epochs.append(EpochRecord(total / seen, rep.accuracy, rep.macro_f1))
        log.info("epoch %d loss %.4f val acc %.4f val macro-F1 %.4f", epoch, total / seen, rep.accuracy, rep.macro_f1)
        if rep.macro_f1 > best_f1:
            best_f1, stale = rep.macro_f1, 0
            best_state = copy.deepcopy(net.state_dict())
            tlog.best_epoch = epoch
        else:
            stale += 1
            if stale >= config.patience:
                break
    net.load_state_dict(best_state)
    net.eval()

    best = tlog.epochs[tlog.best_epoch]
    trained = TrainedModel(model.kind, config, net, model.encoder)
    trained.manifest = {
        "kind": model.kind.to_dict(),
        "model_id": model.kind.model_id,
        "config": config.to_dict(),
        "preprocessing": preprocessing_profile(model.kind, config, _stopwords_of(model.encoder)),
        "data": {name: {"sha256": corpus_digest(part), "size": len(part)} for name, part in data.parts().items()},
        "split": {"ratios": list(data.spec.ratios), "seed": data.spec.seed, "stratified": data.spec.stratified},
        "assets": model.asset_hashes,
        "epochs_run": len(tlog),
        "best_epoch": tlog.best_epoch,
        "best_val": {"macro_f1": best.val_macro_f1, "accuracy": best.val_accuracy},
        "training_log": tlog.to_dict(),
        "tool_version": __version__,
    }
    trained.manifest["probe"] = probe_outputs(trained)
    return trained, tlog


def _stopwords_of(encoder) -> StopwordList:
    sw = getattr(encoder, "stopwords", None)
    return sw if sw is not None else StopwordList.empty()


def fit(kind: ModelKind, data: SplitBundle, config: TrainConfig | None = None, assets: AssetLocator | None = None,
        stopwords: StopwordList | None = None) -> tuple[TrainedModel, TrainingLog]:
    """build_model + train, building the BiLSTM vocabulary from ``data.train``."""
    config = config or TrainConfig.for_variant(kind.variant)
    stopwords = stopwords or StopwordList.default()
    vocab = vocab_from_split(data, config, stopwords) if kind.variant is Variant.BILSTM else None
    handle = build_model(kind, config, assets, vocab=vocab, stopwords=stopwords)
    return train(handle, data, config)


def predict_proba(model: TrainedModel, texts: Sequence[str]) -> list[Prediction]:
    texts = list(texts)
    if not texts:
        return []
    ids, mask = _encode(model.encoder, texts)
    probs = _probs(_logits(model.network, ids, mask))
    return [Prediction((float(1.0 - p[1]), float(p[1]))) for p in probs]


def decide(prob_insult: float, threshold: float) -> Label:
    return Label.INSULTING if prob_insult >= threshold else Label.NEUTRAL


def _check_threshold(threshold: float):
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")


def predict_labels(model: TrainedModel, texts: Sequence[str], threshold: float | None = None) -> list[Label]:
    threshold = model.config.decision_threshold if threshold is None else threshold
    _check_threshold(threshold)
    return [decide(p.insult, threshold) for p in predict_proba(model, texts)]


def labels_from_probs(preds: Sequence[Prediction], threshold: float) -> list[Label]:
    _check_threshold(threshold)
    return [decide(p.insult, threshold) for p in preds]


def state_dict_sha256(module: nn.Module) -> str:
    """Hash of a module's parameters and buffers (names, dtypes, shapes, bytes)."""
    import hashlib

    h = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        t = tensor.detach().cpu().contiguous()
        h.update(f"{name}|{t.dtype}|{tuple(t.shape)}".encode())
        h.update(t.numpy().tobytes())
    return h.hexdigest()


def probe_outputs(model: TrainedModel) -> list[list[float]]:
    return [list(p.probs) for p in predict_proba(model, PROBE_TEXTS)]
