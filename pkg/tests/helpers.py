"""Test helpers: Kaggle-format fixture files, a synthetic comment corpus and
tiny locally-built transformer checkpoints standing in for the real ones."""

from __future__ import annotations

import csv
import random
from pathlib import Path

from insultsense.assets import AssetLocator
from insultsense.corpus import Corpus, Label, LabeledComment, Origin

INSULT_WORDS = ["idiot", "moron", "loser", "clown", "stupid", "pathetic", "dumb", "ignorant", "fool", "troll"]
NEUTRAL_WORDS = ["article", "game", "weather", "mayor", "recipe", "movie", "season", "team", "report", "city"]
FILLER = ["really", "just", "today", "again", "honestly", "maybe", "still", "always", "here", "there"]


def synthetic_texts(n: int, seed: int = 0) -> tuple[list[str], list[int]]:
    rng = random.Random(seed)
    texts, labels = [], []
    for i in range(n):
        insult = rng.random() < 0.3
        if insult:
            w1, w2 = rng.sample(INSULT_WORDS, 2)
            t = f"you are {rng.choice(FILLER)} a {w1} {w2}"
        else:
            w1, w2 = rng.sample(NEUTRAL_WORDS, 2)
            t = f"the {w1} was {rng.choice(FILLER)} good like the {w2}"
        if rng.random() < 0.5:
            t = t.capitalize() + rng.choice(["!", ".", "!!", " lol"])
        texts.append(t)
        labels.append(int(insult))
    return texts, labels


def make_corpus(texts, labels, name="toy", origin=Origin.TRAIN_FILE) -> Corpus:
    return Corpus(
        [LabeledComment(i, None, t, Label(y), origin) for i, (t, y) in enumerate(zip(texts, labels))], name=name
    )


def synthetic_corpus(n: int, seed: int = 0) -> Corpus:
    return make_corpus(*synthetic_texts(n, seed), name=f"synthetic{n}")


MEMORIZATION_TEXTS = [
    "you are an idiot",
    "what a pathetic loser",
    "shut up moron",
    "go away you clown",
    "you stupid fool",
    "thanks for the article",
    "the game was great",
    "lovely weather today",
    "the mayor spoke well",
    "nice recipe thank you",
]
MEMORIZATION_LABELS = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]


def write_kaggle_csv(path: Path, rows, usage: bool = False) -> Path:
    """rows: (label, date, raw_comment_field) with the comment already escaped/quoted."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Insult", "Date", "Comment"] + (["Usage"] if usage else []))
        for label, date, comment in rows:
            w.writerow([label, date, comment] + (["PrivateTest"] if usage else []))
    return Path(path)


# -- tiny checkpoints ---------------------------------------------------------------

TINY_DIMS = dict(hidden_size=32, num_hidden_layers=2, num_attention_heads=2, intermediate_size=64)


def _training_text() -> list[str]:
    texts, _ = synthetic_texts(400, seed=123)
    return texts + MEMORIZATION_TEXTS + ["hello world", "check http example com for details"]


def build_tiny_bert(directory: Path, seed: int = 0) -> Path:
    import torch
    from tokenizers import BertWordPieceTokenizer
    from transformers import BertConfig, BertModel, BertTokenizer

    directory.mkdir(parents=True, exist_ok=True)
    wp = BertWordPieceTokenizer(lowercase=True)
    wp.train_from_iterator(_training_text(), vocab_size=400, min_frequency=1)
    wp.save_model(str(directory))
    tok = BertTokenizer(vocab=str(directory / "vocab.txt"), do_lower_case=True)
    tok.save_pretrained(str(directory))
    torch.manual_seed(seed)
    cfg = BertConfig(vocab_size=len(tok), max_position_embeddings=160, **TINY_DIMS)
    BertModel(cfg).save_pretrained(str(directory))
    return directory


def build_tiny_roberta(directory: Path, seed: int = 0) -> Path:
    import torch
    from tokenizers import ByteLevelBPETokenizer
    from transformers import RobertaConfig, RobertaModel, RobertaTokenizer

    directory.mkdir(parents=True, exist_ok=True)
    bpe = ByteLevelBPETokenizer()
    bpe.train_from_iterator(_training_text(), vocab_size=400, min_frequency=1,
                            special_tokens=["<s>", "<pad>", "</s>", "<unk>", "<mask>"])
    bpe.save_model(str(directory))
    tok = RobertaTokenizer(vocab=str(directory / "vocab.json"), merges=str(directory / "merges.txt"))
    tok.save_pretrained(str(directory))
    torch.manual_seed(seed)
    cfg = RobertaConfig(vocab_size=len(tok), max_position_embeddings=162, pad_token_id=1, bos_token_id=0,
                        eos_token_id=2, type_vocab_size=1, **TINY_DIMS)
    RobertaModel(cfg).save_pretrained(str(directory))
    return directory


def write_tiny_vectors(path: Path, words, dim: int = 300, seed: int = 0) -> Path:
    rng = random.Random(seed)
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {dim}\n")
        for w in words:
            fh.write(w + " " + " ".join(f"{rng.uniform(-1, 1):.5f}" for _ in range(dim)) + "\n")
    return Path(path)


TINY_IDS = {
    "bert_base": "tiny/bert-base",
    "hate_bert": "tiny/hateBERT",
    "roberta": "tiny/roberta",
    "vectors": "tiny/vectors-300d",
}


def build_tiny_assets(root: Path) -> AssetLocator:
    """A locator with tiny stand-ins for BERT, hateBERT, RoBERTa and fastText vectors."""
    from transformers.utils import logging as hf_logging

    hf_logging.disable_progress_bar()
    root.mkdir(parents=True, exist_ok=True)
    locator = AssetLocator(root=root)
    locator.register(TINY_IDS["bert_base"], build_tiny_bert(root / "bert", seed=1))
    locator.register(TINY_IDS["hate_bert"], build_tiny_bert(root / "hatebert", seed=2))
    locator.register(TINY_IDS["roberta"], build_tiny_roberta(root / "roberta", seed=3))
    words = sorted({w for t in _training_text() for w in t.lower().split()})
    locator.register(TINY_IDS["vectors"], write_tiny_vectors(root / "vectors.vec", words[: len(words) // 2]))
    locator.save(root / "assets.json")
    return locator
