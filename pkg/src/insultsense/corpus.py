"""Insult-comment corpus: CSV ingestion, merging, class statistics and seeded splits.

The source files store each comment as a double-quoted, backslash-escaped
string (``"You are a \\"moron\\"\\n"``).  Escapes are resolved once at load
time so that everything downstream sees real unicode text.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("Insult", "Date", "Comment")
DATE_FORMAT = "%Y%m%d%H%M%SZ"
MERGED_FILENAME = "train_merged.csv"


class CorpusError(Exception):
    """Base class for corpus loading and splitting failures."""


class SchemaError(CorpusError):
    def __init__(self, path, column):
        super().__init__(f"{path}: missing required column {column!r}")
        self.column = column


class RowError(CorpusError):
    def __init__(self, path, row, message):
        super().__init__(f"{path}: row {row}: {message}")
        self.row = row


class StratificationError(CorpusError):
    pass


class Label(enum.IntEnum):
    NEUTRAL = 0
    INSULTING = 1


class Origin(str, enum.Enum):
    TRAIN_FILE = "train_file"
    TEST_FILE = "test_file"


@dataclass(frozen=True)
class LabeledComment:
    id: int
    date: datetime | None
    text: str
    label: Label
    origin: Origin


@dataclass(frozen=True)
class Corpus:
    records: tuple[LabeledComment, ...]
    name: str = "corpus"
    counts: dict = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "counts", _count(self.records))

    def __len__(self):
        return len(self.records)

    @property
    def texts(self) -> list[str]:
        return [r.text for r in self.records]

    @property
    def labels(self) -> list[int]:
        return [int(r.label) for r in self.records]

    @property
    def ids(self) -> list[int]:
        return [r.id for r in self.records]


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        if len(ratios) != 3:
            raise ValueError(f"expected 3 ratios (train, val, test), got {len(ratios)}")
        if any(r <= 0 for r in ratios):
            raise ValueError(f"every ratio must be positive, got {ratios}")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1.0, got {sum(ratios)!r}")
        object.__setattr__(self, "ratios", ratios)

    def sizes(self, n: int) -> tuple[int, int, int]:
        """Part sizes for ``n`` records: round train and val, test takes the rest."""
        n_train = _round_half_up(self.ratios[0] * n)
        n_val = _round_half_up(self.ratios[1] * n)
        return n_train, n_val, n - n_train - n_val


@dataclass(frozen=True)
class SplitBundle:
    train: Corpus
    val: Corpus
    test: Corpus
    spec: SplitSpec

    def parts(self) -> dict[str, Corpus]:
        return {"train": self.train, "val": self.val, "test": self.test}

    def manifest(self, source: str | None = None, source_sha256: str | None = None) -> dict:
        out = {
            "seed": self.spec.seed,
            "ratios": list(self.spec.ratios),
            "stratified": self.spec.stratified,
            "ids": {name: part.ids for name, part in self.parts().items()},
        }
        if source is not None:
            out["source"] = source
        if source_sha256 is not None:
            out["source_sha256"] = source_sha256
        return out


# -- escapes -----------------------------------------------------------------

_ESCAPE_RE = re.compile(r"((?:\\x[0-9a-fA-F]{2})+)|\\u([0-9a-fA-F]{4})|\\(.)", re.DOTALL)
_SIMPLE_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "'": "'", "\\": "\\"}


def _decode_escape(m: re.Match) -> str:
    if m.group(1):
        raw = bytes(int(h, 16) for h in m.group(1).split("\\x")[1:])
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            return raw.decode("latin-1")
    if m.group(2):
        return chr(int(m.group(2), 16))
    ch = m.group(3)
    return _SIMPLE_ESCAPES.get(ch, "\\" + ch)


def unescape_comment(raw: str) -> str:
    """Strip the surrounding double quotes and resolve backslash escapes once."""
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        raw = raw[1:-1]
    text = _ESCAPE_RE.sub(_decode_escape, raw)
    try:
        # \ud83d\ude00 style surrogate pairs
        text = text.encode("utf-16", "surrogatepass").decode("utf-16")
    except UnicodeDecodeError:
        pass
    return text


def escape_comment(text: str) -> str:
    """Inverse of :func:`unescape_comment` (used when writing the merged file)."""
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ch.isprintable() or ch == " ":
            out.append(ch)
        elif ord(ch) <= 0xFFFF:
            out.append(f"\\u{ord(ch):04x}")
        else:
            hi, lo = divmod(ord(ch) - 0x10000, 0x400)
            out.append(f"\\u{0xD800 + hi:04x}\\u{0xDC00 + lo:04x}")
    return '"' + "".join(out) + '"'


def parse_date(value: str) -> datetime | None:
    value = value.strip()
    if not value:
        return None
    try:
        return datetime.strptime(value, DATE_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError:
        log.warning("unparseable date %r treated as absent", value)
        return None


def format_date(value: datetime | None) -> str:
    return "" if value is None else value.astimezone(timezone.utc).strftime(DATE_FORMAT)


# -- loading / merging -----------------------------------------------------------


def load_source_csv(path, origin: Origin = Origin.TRAIN_FILE) -> Corpus:
    """Read one source file (``Insult,Date,Comment[,Usage]``) into a Corpus."""
    path = Path(path)
    origin = Origin(origin)
    records = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(path, col)
        for row in reader:
            lineno = reader.line_num
            raw_label = (row["Insult"] or "").strip()
            if raw_label not in ("0", "1"):
                raise RowError(path, lineno, f"label must be 0 or 1, got {raw_label!r}")
            text = unescape_comment(row["Comment"] or "")
            if not text:
                raise RowError(path, lineno, "empty comment")
            records.append(
                LabeledComment(
                    id=len(records),
                    date=parse_date(row["Date"] or ""),
                    text=text,
                    label=Label(int(raw_label)),
                    origin=origin,
                )
            )
    return Corpus(records, name=path.stem)


def merge(parts: Sequence[Corpus], name: str = "train_merged") -> Corpus:
    if not parts:
        raise ValueError("merge() needs at least one corpus")
    records = []
    for part in parts:
        for rec in part.records:
            records.append(
                LabeledComment(id=len(records), date=rec.date, text=rec.text, label=rec.label, origin=rec.origin)
            )
    return Corpus(records, name=name)


def write_csv(corpus: Corpus, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REQUIRED_COLUMNS)
        for rec in corpus.records:
            writer.writerow([int(rec.label), format_date(rec.date), escape_comment(rec.text)])
    return path


# -- statistics --------------------------------------------------------------------


def _count(records: Iterable[LabeledComment]) -> dict:
    counts = {"total": 0, "insulting": 0, "neutral": 0}
    for rec in records:
        counts["total"] += 1
        counts["insulting" if rec.label == Label.INSULTING else "neutral"] += 1
    return counts


def stats(corpus: Corpus) -> dict:
    return _count(corpus.records)


def corpus_digest(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for rec in corpus.records:
        h.update(json.dumps([rec.id, int(rec.label), rec.text], ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- splitting ---------------------------------------------------------------------


def _round_half_up(x: float) -> int:
    # Python's round() is banker's rounding; sizes must not depend on parity.
    return int(math.floor(x + 0.5 + 1e-9))


def _allocate(n: int, targets: Sequence[float]) -> list[int]:
    """Largest-remainder allocation of ``n`` items over parts with ideal ``targets``."""
    base = [int(math.floor(t)) for t in targets]
    short = n - sum(base)
    order = sorted(range(len(targets)), key=lambda i: (-(targets[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def _stratified_sizes(class_sizes: Sequence[int], part_sizes: Sequence[int]) -> list[list[int]]:
    n = sum(class_sizes)
    table = []
    remaining = list(part_sizes)
    for k, n_c in enumerate(class_sizes):
        if k == len(class_sizes) - 1:
            table.append(remaining)
            break
        ideal = [n_c * s / n for s in part_sizes]
        row = _allocate(n_c, ideal)
        table.append(row)
        remaining = [r - x for r, x in zip(remaining, row)]
    return table


def split(corpus: Corpus, spec: SplitSpec | None = None) -> SplitBundle:
    """Seeded train/val/test partition of ``corpus``.

    Part sizes follow :meth:`SplitSpec.sizes`.  With ``stratified=True`` every
    class is spread over the parts so that its count in each part is within one
    record of its corpus-wide share.
    """
    spec = spec or SplitSpec()
    n = len(corpus)
    if n < 5:
        raise ValueError(f"need at least 5 records to split, got {n}")
    sizes = spec.sizes(n)
    if min(sizes) < 1:
        raise ValueError(f"ratios {spec.ratios} leave an empty part for {n} records")
    rng = np.random.default_rng(spec.seed)
    records = corpus.records

    if spec.stratified:
        by_label: dict[int, list[int]] = {}
        for i, rec in enumerate(records):
            by_label.setdefault(int(rec.label), []).append(i)
        labels = sorted(by_label)
        for lab in labels:
            if len(by_label[lab]) < len(sizes):
                raise StratificationError(
                    f"class {Label(lab).name} has {len(by_label[lab])} records, fewer than {len(sizes)} parts"
                )
        table = _stratified_sizes([len(by_label[lab]) for lab in labels], sizes)
        chosen: list[list[int]] = [[] for _ in sizes]
        for lab, row in zip(labels, table):
            idx = rng.permutation(by_label[lab])
            start = 0
            for p, cnt in enumerate(row):
                chosen[p].extend(idx[start : start + cnt].tolist())
                start += cnt
        chosen = [rng.permutation(part).tolist() for part in chosen]
    else:
        idx = rng.permutation(n).tolist()
        a, b = sizes[0], sizes[0] + sizes[1]
        chosen = [idx[:a], idx[a:b], idx[b:]]

    names = ("train", "val", "test")
    parts = [Corpus([records[i] for i in part], name=f"{corpus.name}.{nm}") for nm, part in zip(names, chosen)]
    return SplitBundle(*parts, spec=spec)


def apply_split_manifest(corpus: Corpus, manifest: dict) -> SplitBundle:
    """Rebuild a SplitBundle from a persisted split manifest."""
    by_id = {rec.id: rec for rec in corpus.records}
    missing = [i for ids in manifest["ids"].values() for i in ids if i not in by_id]
    if missing:
        raise CorpusError(f"split manifest references {len(missing)} ids absent from {corpus.name}")
    spec = SplitSpec(tuple(manifest["ratios"]), int(manifest["seed"]), bool(manifest["stratified"]))
    parts = [
        Corpus([by_id[i] for i in manifest["ids"][nm]], name=f"{corpus.name}.{nm}") for nm in ("train", "val", "test")
    ]
    return SplitBundle(*parts, spec=spec)


def write_split_manifest(bundle: SplitBundle, path, source=None, source_sha256=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bundle.manifest(source, source_sha256), indent=2) + "\n")
    return path
