"""Classification metrics, per-model reports, model comparison and charts."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .corpus import Label

CLASS_NAMES = {Label.NEUTRAL: "neutral", Label.INSULTING: "insulting"}


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts with Insulting as the positive class."""

    tn: int = 0
    fp: int = 0
    fn: int = 0
    tp: int = 0

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def to_dict(self) -> dict:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp}


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self, digits: int | None = 4) -> dict:
        r = (lambda x: round(x, digits)) if digits is not None else (lambda x: x)
        return {"precision": r(self.precision), "recall": r(self.recall), "f1": r(self.f1), "support": self.support}

    @classmethod
    def from_dict(cls, d: dict) -> ClassMetrics:
        return cls(float(d["precision"]), float(d["recall"]), float(d["f1"]), int(d.get("support", 0)))


def _check_labels(labels: Sequence[int], name: str):
    bad = [x for x in labels if x not in (0, 1)]
    if bad:
        raise ValueError(f"{name} contains labels outside {{0, 1}}: {bad[:5]}")


def confusion(gold: Sequence[int], pred: Sequence[int]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise ValueError(f"gold and pred lengths differ ({len(gold)} vs {len(pred)})")
    gold, pred = [int(g) for g in gold], [int(p) for p in pred]
    _check_labels(gold, "gold")
    _check_labels(pred, "pred")
    counts = {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 0}
    for g, p in zip(gold, pred):
        counts[(g, p)] += 1
    return ConfusionMatrix(tn=counts[(0, 0)], fp=counts[(0, 1)], fn=counts[(1, 0)], tp=counts[(1, 1)])


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    return _safe_div(2 * precision * recall, precision + recall)


def prf(cm: ConfusionMatrix, positive: Label = Label.INSULTING) -> ClassMetrics:
    """Precision/recall/F1 of one class; empty denominators give 0.0."""
    if Label(positive) == Label.INSULTING:
        tp, fp, fn = cm.tp, cm.fp, cm.fn
    else:
        tp, fp, fn = cm.tn, cm.fn, cm.fp
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    return ClassMetrics(precision, recall, f1_score(precision, recall), tp + fn)


def macro_f1(f1_neutral: float, f1_insult: float) -> float:
    return (f1_neutral + f1_insult) / 2


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy is undefined for an empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


@dataclass(frozen=True)
class ClassificationReport:
    model_id: str
    neutral: ClassMetrics
    insulting: ClassMetrics
    macro_f1: float
    accuracy: float
    cm: ConfusionMatrix

    def to_dict(self, digits: int | None = 4) -> dict:
        r = (lambda x: round(x, digits)) if digits is not None else (lambda x: x)
        return {
            "model_id": self.model_id,
            "classes": {"neutral": self.neutral.to_dict(digits), "insulting": self.insulting.to_dict(digits)},
            "macro_f1": r(self.macro_f1),
            "accuracy": r(self.accuracy),
            "confusion": self.cm.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ClassificationReport:
        return cls(
            model_id=d["model_id"],
            neutral=ClassMetrics.from_dict(d["classes"]["neutral"]),
            insulting=ClassMetrics.from_dict(d["classes"]["insulting"]),
            macro_f1=float(d["macro_f1"]),
            accuracy=float(d["accuracy"]),
            cm=ConfusionMatrix(**d["confusion"]),
        )

    @classmethod
    def load(cls, path) -> ClassificationReport:
        return cls.from_dict(json.loads(Path(path).read_text()))


def report(model_id: str, gold: Sequence[int], pred: Sequence[int]) -> ClassificationReport:
    cm = confusion(gold, pred)
    neutral = prf(cm, Label.NEUTRAL)
    insulting = prf(cm, Label.INSULTING)
    return ClassificationReport(
        model_id=model_id,
        neutral=neutral,
        insulting=insulting,
        macro_f1=macro_f1(neutral.f1, insulting.f1),
        accuracy=accuracy(cm),
        cm=cm,
    )


# -- comparison -------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    model_id: str
    neutral: ClassMetrics
    insulting: ClassMetrics
    macro_f1: float
    accuracy: float

    @classmethod
    def from_report(cls, rep: ClassificationReport | ComparisonRow) -> ComparisonRow:
        return cls(rep.model_id, rep.neutral, rep.insulting, rep.macro_f1, rep.accuracy)

    @classmethod
    def from_dict(cls, d: dict) -> ComparisonRow:
        return cls(
            model_id=d["model_id"],
            neutral=ClassMetrics.from_dict(d["classes"]["neutral"]),
            insulting=ClassMetrics.from_dict(d["classes"]["insulting"]),
            macro_f1=float(d["macro_f1"]),
            accuracy=float(d["accuracy"]),
        )


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    baseline: ComparisonRow | None = None

    @property
    def all_rows(self) -> list[ComparisonRow]:
        return list(self.rows) + ([self.baseline] if self.baseline else [])

    @property
    def best(self) -> ComparisonRow:
        return self.rows[0]

    def to_csv(self, path, digits: int = 2) -> Path:
        """Display table (Table-1 layout): metrics to ``digits`` places, accuracy in percent."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "label", "precision", "recall", "f1", "macro_f1", "accuracy_pct"])
            for row in self.all_rows:
                for i, (name, m) in enumerate((("Neutral", row.neutral), ("Insulting", row.insulting))):
                    w.writerow([
                        row.model_id if i == 0 else "",
                        name,
                        f"{m.precision:.{digits}f}",
                        f"{m.recall:.{digits}f}",
                        f"{m.f1:.{digits}f}",
                        f"{row.macro_f1:.{digits}f}" if i == 0 else "",
                        f"{100 * row.accuracy:.2f}" if i == 0 else "",
                    ])
        return path

    def to_markdown(self, digits: int = 2) -> str:
        lines = [
            "| Model | Label | Precision | Recall | F1 | Macro F1 | Accuracy |",
            "|---|---|---|---|---|---|---|",
        ]
        for row in self.all_rows:
            lines.append(
                f"| {row.model_id} | Neutral | {row.neutral.precision:.{digits}f} | {row.neutral.recall:.{digits}f} "
                f"| {row.neutral.f1:.{digits}f} | {row.macro_f1:.{digits}f} | {100 * row.accuracy:.2f}% |"
            )
            lines.append(
                f"| | Insulting | {row.insulting.precision:.{digits}f} | {row.insulting.recall:.{digits}f} "
                f"| {row.insulting.f1:.{digits}f} | | |"
            )
        return "\n".join(lines) + "\n"


def compare(reports: Sequence[ClassificationReport | ComparisonRow], baseline: ComparisonRow | None = None) -> ComparisonTable:
    if not reports:
        raise ValueError("compare() needs at least one report")
    ids = [r.model_id for r in reports]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ValueError(f"duplicate model_id(s): {dupes}")
    rows = sorted((ComparisonRow.from_report(r) for r in reports), key=lambda r: -r.accuracy)
    return ComparisonTable(tuple(rows), baseline)


def load_baseline(path=None) -> ComparisonRow:
    """Baseline row from a fixture file (defaults to the bundled BiLSTM baseline)."""
    if path is None:
        text = resources.files("insultsense").joinpath("data/baseline.json").read_text()
    else:
        text = Path(path).read_text()
    return ComparisonRow.from_dict(json.loads(text))


# -- charts -------------------------------------------------------------------------


def _write_rows(path: Path, header: list[str], rows: list[list]) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def render_charts(table: ComparisonTable, out_dir, fmt: str = "png") -> list[Path]:
    """Write the three comparison charts, each with a CSV of the plotted numbers."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    models = [r.model_id for r in table.rows]

    # per-class precision / recall / F1
    series = []
    for cls_name in ("neutral", "insulting"):
        for metric in ("precision", "recall", "f1"):
            series.append((f"{cls_name} {metric}", [getattr(getattr(r, cls_name), metric) for r in table.rows]))
    written.append(_write_rows(
        out_dir / "classification_report.csv",
        ["model"] + [name.replace(" ", "_") for name, _ in series],
        [[m] + [repr(vals[i]) for _, vals in series] for i, m in enumerate(models)],
    ))
    fig, ax = plt.subplots(figsize=(max(8, 2 * len(models)), 5))
    x = np.arange(len(models))
    width = 0.8 / len(series)
    for k, (name, vals) in enumerate(series):
        ax.bar(x + (k - (len(series) - 1) / 2) * width, vals, width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(models, rotation=15)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Classification report")
    ax.legend(fontsize=8, ncol=2)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    written.append(out_dir / f"classification_report.{fmt}")
    fig.savefig(written[-1], dpi=120, metadata=_fig_metadata(fmt))
    plt.close(fig)

    # accuracy per model
    acc = [r.accuracy for r in table.rows]
    written.append(_write_rows(out_dir / "accuracy.csv", ["model", "accuracy"], [[m, repr(a)] for m, a in zip(models, acc)]))
    written.append(_bar_chart(plt, out_dir / f"accuracy.{fmt}", models, acc, "Classifiers accuracy", fmt))

    # best model vs baseline
    pair = [table.best] + ([table.baseline] if table.baseline else [])
    names = [r.model_id for r in pair]
    written.append(_write_rows(
        out_dir / "baseline_comparison.csv",
        ["model", "accuracy", "macro_f1"],
        [[r.model_id, repr(r.accuracy), repr(r.macro_f1)] for r in pair],
    ))
    fig, ax = plt.subplots(figsize=(7, 5))
    x = np.arange(len(pair))
    ax.bar(x - 0.2, [r.accuracy for r in pair], 0.4, label="accuracy")
    ax.bar(x + 0.2, [r.macro_f1 for r in pair], 0.4, label="macro F1")
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.set_ylim(0, 1.05)
    ax.set_title("Best model vs baseline")
    ax.legend()
    fig.tight_layout()
    written.append(out_dir / f"baseline_comparison.{fmt}")
    fig.savefig(written[-1], dpi=120, metadata=_fig_metadata(fmt))
    plt.close(fig)
    return written


def _fig_metadata(fmt: str) -> dict:
    if fmt == "png":
        return {"Software": None}
    if fmt == "svg":
        return {"Date": None}
    return {}


def _bar_chart(plt, path: Path, labels, values, title, fmt) -> Path:
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(labels)), 5))
    bars = ax.bar(labels, [100 * v for v in values], color="#4a90d9", edgecolor="black")
    for bar, v in zip(bars, values):
        ax.annotate(f"{100 * v:.2f}%", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    xytext=(0, 3), textcoords="offset points", ha="center", fontsize=8)
    ax.set_ylim(0, 105)
    ax.set_ylabel("accuracy (%)")
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=15)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_fig_metadata(fmt))
    plt.close(fig)
    return path
