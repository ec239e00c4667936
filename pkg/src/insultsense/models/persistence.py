"""Model artifact directories: ``manifest.json``, ``weights.bin`` and ``encoder/``."""

from __future__ import annotations

import json
from pathlib import Path

import torch

from ..assets import content_sha256
from ..textprep import CleanOptions, StopwordList, SubwordEncoder, Vocabulary, WordPipeline
from .config import ModelKind, TrainConfig, Variant
from .core import TrainedModel, probe_outputs
from .networks import BiLSTMClassifier, TransformerClassifier

MANIFEST, WEIGHTS, ENCODER = "manifest.json", "weights.bin", "encoder"


class ArtifactError(Exception):
    def __init__(self, directory, missing):
        missing = list(missing)
        super().__init__(f"{directory}: incomplete or corrupt model artifact ({', '.join(missing)})")
        self.missing = missing


def save_model(model: TrainedModel, directory) -> Path:
    directory = Path(directory)
    enc_dir = directory / ENCODER
    enc_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.network.state_dict(), directory / WEIGHTS)
    if isinstance(model.encoder, WordPipeline):
        model.encoder.vocab.save(enc_dir / "vocab.txt")
        sw = model.encoder.stopwords
        (enc_dir / "stopwords.txt").write_text("\n".join(sorted(sw.words)) + "\n", encoding="utf-8")
    else:
        model.encoder.save(enc_dir)
        model.network.hf.config.save_pretrained(str(enc_dir))
        if model.encoder.stopwords is not None:
            sw = model.encoder.stopwords
            (enc_dir / "stopwords.txt").write_text("\n".join(sorted(sw.words)) + "\n", encoding="utf-8")
    weights_sha = content_sha256(directory / WEIGHTS)
    manifest = dict(model.manifest)
    manifest.setdefault("kind", model.kind.to_dict())
    manifest.setdefault("config", model.config.to_dict())
    manifest["weights_sha256"] = weights_sha
    manifest["model_version"] = f"{model.kind.model_id}-{weights_sha[:12]}"
    if "probe" not in manifest:
        manifest["probe"] = probe_outputs(model)
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    model.manifest = manifest
    model.weights_ref = str(directory / WEIGHTS)
    return directory


def _read_stopwords(enc_dir: Path, source_id) -> StopwordList | None:
    path = enc_dir / "stopwords.txt"
    if not path.exists():
        return None
    return StopwordList.from_file(path, source_id=source_id or "artifact")


def load_model(directory) -> TrainedModel:
    directory = Path(directory)
    missing = [name for name in (MANIFEST, WEIGHTS, ENCODER) if not (directory / name).exists()]
    if missing:
        raise ArtifactError(directory, missing)
    try:
        manifest = json.loads((directory / MANIFEST).read_text())
        kind = ModelKind.from_dict(manifest["kind"])
        config = TrainConfig.from_dict(manifest["config"])
    except (ValueError, KeyError) as exc:
        raise ArtifactError(directory, [f"{MANIFEST} ({exc})"]) from exc
    enc_dir = directory / ENCODER
    sw_id = manifest.get("preprocessing", {}).get("stopwords")

    if kind.variant is Variant.BILSTM:
        if not (enc_dir / "vocab.txt").exists():
            raise ArtifactError(directory, [f"{ENCODER}/vocab.txt"])
        vocab = Vocabulary.load(enc_dir / "vocab.txt")
        stopwords = _read_stopwords(enc_dir, sw_id) or StopwordList.empty()
        encoder = WordPipeline(vocab, stopwords, CleanOptions.full(), config.max_len)
        network = BiLSTMClassifier(len(vocab), config.embedding_dim, config.hidden_size, config.dropout)
    else:
        from transformers import AutoConfig, AutoModelForSequenceClassification

        try:
            hf_config = AutoConfig.from_pretrained(str(enc_dir))
        except (OSError, ValueError) as exc:
            raise ArtifactError(directory, [f"{ENCODER}/config.json"]) from exc
        encoder = SubwordEncoder(kind.checkpoint_id, enc_dir, config.max_len, CleanOptions.light(),
                                 _read_stopwords(enc_dir, sw_id))
        network = TransformerClassifier(AutoModelForSequenceClassification.from_config(hf_config))

    try:
        state = torch.load(directory / WEIGHTS, map_location="cpu", weights_only=True)
        network.load_state_dict(state)
    except Exception as exc:  # torch raises a variety of types for corrupt pickles
        raise ArtifactError(directory, [f"{WEIGHTS} ({type(exc).__name__}: {exc})"]) from exc
    network.eval()
    return TrainedModel(kind, config, network, encoder, manifest, str(directory / WEIGHTS))


def check_probes(model: TrainedModel) -> bool:
    """True when the model reproduces the probe outputs stored in its manifest exactly."""
    return probe_outputs(model) == model.manifest.get("probe")
