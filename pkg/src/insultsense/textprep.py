"""Text preprocessing: cleaning, stopword/single-letter removal, vocabularies,
padding, pretrained word vectors and the subword-encoder wrapper."""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1
DEFAULT_MAX_LEN = 128
STOPWORDS_SOURCE_ID = "sklearn-english-stop-words-318"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_HANDLE_RE = re.compile(r"@\w+")
_NON_WORD_RE = re.compile(r"[^\w\s]|_")


class EmbeddingFormatError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class CleanOptions:
    lowercase: bool
    strip_urls: bool
    strip_user_handles: bool
    strip_punctuation: bool
    collapse_whitespace: bool

    @classmethod
    def full(cls) -> CleanOptions:
        """Word-level profile used by the BiLSTM path."""
        return cls(lowercase=True, strip_urls=True, strip_user_handles=True, strip_punctuation=True,
                   collapse_whitespace=True)

    @classmethod
    def light(cls) -> CleanOptions:
        """Transformer profile: leave casing and punctuation to the subword tokenizer."""
        return cls(lowercase=False, strip_urls=True, strip_user_handles=True, strip_punctuation=False,
                   collapse_whitespace=True)


def clean_text(text: str, options: CleanOptions) -> str:
    if options.strip_urls:
        text = _URL_RE.sub(" ", text)
    if options.strip_user_handles:
        text = _HANDLE_RE.sub(" ", text)
    if options.lowercase:
        text = text.lower()
    if options.strip_punctuation:
        text = _NON_WORD_RE.sub(" ", text)
    if options.collapse_whitespace:
        text = " ".join(text.split())
    return text


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]
    source_id: str

    def __post_init__(self):
        for w in self.words:
            if not w or w != w.lower() or len(w.split()) != 1:
                raise ValueError(f"invalid stopword entry {w!r}")
        object.__setattr__(self, "words", frozenset(self.words))

    def __contains__(self, token):
        return token in self.words

    @classmethod
    def from_file(cls, path, source_id: str | None = None) -> StopwordList:
        path = Path(path)
        words = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
        return cls(frozenset(w for w in words if w), source_id or path.name)

    @classmethod
    def default(cls) -> StopwordList:
        text = resources.files("insultsense").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
        return cls(frozenset(w.strip() for w in text.splitlines() if w.strip()), STOPWORDS_SOURCE_ID)

    @classmethod
    def empty(cls) -> StopwordList:
        return cls(frozenset(), "empty")


def word_tokenize(text: str) -> list[str]:
    return text.split()


def remove_stop_and_single(tokens: Iterable[str], stopwords: StopwordList) -> list[str]:
    return [t for t in tokens if len(t) > 1 and t not in stopwords]


@dataclass
class Vocabulary:
    """Token ↔ id map; ids 0 and 1 are reserved for padding and unknown tokens."""

    tokens: list[str]
    min_freq: int = 1
    token_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.tokens[:2] != [PAD, UNK]:
            raise ValueError("vocabulary must start with the reserved PAD and UNK entries")
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.token_to_id

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(f"# min_freq={self.min_freq}\n" + "\n".join(self.tokens) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> Vocabulary:
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        min_freq = 1
        if lines and lines[0].startswith("# min_freq="):
            min_freq = int(lines[0].split("=", 1)[1])
            lines = lines[1:]
        if lines and lines[-1] == "":
            lines = lines[:-1]
        return cls(lines, min_freq=min_freq)


def build_vocab(corpora_tokens: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Most frequent tokens first, ties broken lexicographically."""
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    freq = Counter(tok for toks in corpora_tokens for tok in toks)
    for reserved in (PAD, UNK):
        freq.pop(reserved, None)
    kept = sorted((t for t, c in freq.items() if c >= min_freq), key=lambda t: (-freq[t], t))
    return Vocabulary([PAD, UNK, *kept], min_freq=min_freq)


def encode_words(tokens: Iterable[str], vocab: Vocabulary) -> list[int]:
    lookup = vocab.token_to_id
    # a literal "<pad>" in the text is just an unknown word
    return [UNK_ID if t == PAD else lookup.get(t, UNK_ID) for t in tokens]


@dataclass(frozen=True)
class EncodedSequence:
    ids: tuple[int, ...]
    mask: tuple[int, ...]
    truncated: bool
    original_length: int


def pad_truncate(ids: Sequence[int], max_len: int, pad_id: int = PAD_ID) -> EncodedSequence:
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    n = len(ids)
    kept = list(ids[:max_len])
    n_real = len(kept)
    kept.extend([pad_id] * (max_len - n_real))
    return EncodedSequence(
        ids=tuple(kept),
        mask=tuple([1] * n_real + [0] * (max_len - n_real)),
        truncated=n > max_len,
        original_length=n,
    )


@dataclass
class WordPipeline:
    """The word-level chain used by the BiLSTM: clean, split, drop stopwords, map to ids."""

    vocab: Vocabulary
    stopwords: StopwordList
    clean: CleanOptions = field(default_factory=CleanOptions.full)
    max_len: int = DEFAULT_MAX_LEN

    @staticmethod
    def tokens(text: str, stopwords: StopwordList, clean: CleanOptions) -> list[str]:
        return remove_stop_and_single(word_tokenize(clean_text(text, clean)), stopwords)

    def encode(self, text: str) -> EncodedSequence:
        toks = self.tokens(text, self.stopwords, self.clean)
        return pad_truncate(encode_words(toks, self.vocab), self.max_len, PAD_ID)

    def batch(self, texts: Sequence[str]) -> dict:
        import torch

        seqs = [self.encode(t) for t in texts]
        return {
            "input_ids": torch.tensor([s.ids for s in seqs], dtype=torch.long).reshape(len(seqs), self.max_len),
            "attention_mask": torch.tensor([s.mask for s in seqs], dtype=torch.long).reshape(len(seqs), self.max_len),
        }


# -- pretrained word vectors -----------------------------------------------------


@dataclass
class EmbeddingTable:
    dim: int
    rows: np.ndarray
    coverage: float


def load_embedding_file(path, vocab: Vocabulary, expected_dim: int, seed: int = 0) -> EmbeddingTable:
    """Align a text word-vector file (fastText ``.vec`` style) to ``vocab``.

    Only vectors for vocabulary words are kept, so multi-gigabyte files are
    streamed once.  Vocabulary words missing from the file get a seeded
    uniform(-0.25, 0.25) vector; the padding row is zero.
    """
    path = Path(path)
    rows = np.random.default_rng(seed).uniform(-0.25, 0.25, size=(len(vocab), expected_dim)).astype(np.float32)
    rows[PAD_ID] = 0.0
    found = set()
    lookup = vocab.token_to_id
    with path.open(encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                if int(parts[1]) != expected_dim:
                    raise EmbeddingFormatError(path, lineno, f"header dim {parts[1]} != expected {expected_dim}")
                continue
            if not parts or parts == [""]:
                continue
            if len(parts) < 2:
                raise EmbeddingFormatError(path, lineno, "expected a token followed by vector components")
            if len(parts) - 1 != expected_dim:
                raise EmbeddingFormatError(path, lineno, f"vector has {len(parts) - 1} components, expected {expected_dim}")
            idx = lookup.get(parts[0])
            if idx is None or idx in (PAD_ID, UNK_ID):
                continue
            try:
                rows[idx] = np.asarray(parts[1:], dtype=np.float32)
            except ValueError:
                raise EmbeddingFormatError(path, lineno, "non-numeric vector component") from None
            found.add(idx)
    n_real = len(vocab) - 2
    coverage = len(found) / n_real if n_real else 0.0
    log.info("embedding coverage %.3f (%d/%d) from %s", coverage, len(found), n_real, path)
    return EmbeddingTable(dim=expected_dim, rows=rows, coverage=coverage)


# -- subword encoder ---------------------------------------------------------------


class SubwordEncoder:
    """Deterministic wrapper around a pretrained checkpoint's own tokenizer."""

    def __init__(self, checkpoint_id: str, path, max_length: int = DEFAULT_MAX_LEN, clean: CleanOptions | None = None,
                 stopwords: StopwordList | None = None):
        from transformers import AutoTokenizer

        from .assets import AssetError

        self.checkpoint_id = checkpoint_id
        self.path = Path(path)
        self.max_length = max_length
        self.clean = clean or CleanOptions.light()
        self.stopwords = stopwords
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(str(self.path), use_fast=True)
        except (OSError, ValueError) as exc:
            raise AssetError(checkpoint_id, f"cannot load tokenizer from {self.path}: {exc}") from exc
        self.special_count = len(self.tokenizer("")["input_ids"])

    def prepare(self, text: str) -> str:
        text = clean_text(text, self.clean)
        if self.stopwords is not None:
            text = " ".join(remove_stop_and_single(text.lower().split(), self.stopwords))
        return text

    def batch(self, texts: Sequence[str]):
        """Tokenize to fixed-length tensors (always padded to ``max_length``)."""
        return self.tokenizer(
            [self.prepare(t) for t in texts],
            padding="max_length",
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )

    def encode(self, text: str) -> EncodedSequence:
        full = self.tokenizer(self.prepare(text), add_special_tokens=True, truncation=False)["input_ids"]
        enc = self.tokenizer(self.prepare(text), padding="max_length", truncation=True, max_length=self.max_length)
        return EncodedSequence(
            ids=tuple(enc["input_ids"]),
            mask=tuple(enc["attention_mask"]),
            truncated=len(full) > self.max_length,
            original_length=len(full),
        )

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.tokenizer.save_pretrained(str(directory))
        return directory


def subword_encode(encoder: SubwordEncoder, text: str) -> EncodedSequence:
    return encoder.encode(text)
