"""Brute-force classification metrics with exact rational arithmetic.

Deliberately shares nothing with insultsense.evaluation: counts are taken per
class straight from the label pairs and F1 uses the 2TP / (2TP + FP + FN) form.
"""

from fractions import Fraction


def class_metrics(gold, pred, cls):
    tp = sum(1 for g, p in zip(gold, pred) if g == cls and p == cls)
    fp = sum(1 for g, p in zip(gold, pred) if g != cls and p == cls)
    fn = sum(1 for g, p in zip(gold, pred) if g == cls and p != cls)
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = Fraction(2 * tp, 2 * tp + fp + fn) if tp else Fraction(0)
    return {"precision": precision, "recall": recall, "f1": f1, "support": tp + fn}


def oracle_report(gold, pred):
    neutral = class_metrics(gold, pred, 0)
    insulting = class_metrics(gold, pred, 1)
    correct = sum(1 for g, p in zip(gold, pred) if g == p)
    return {
        "neutral": neutral,
        "insulting": insulting,
        "macro_f1": (neutral["f1"] + insulting["f1"]) / 2,
        "accuracy": Fraction(correct, len(gold)),
        "tn": sum(1 for g, p in zip(gold, pred) if (g, p) == (0, 0)),
        "fp": sum(1 for g, p in zip(gold, pred) if (g, p) == (0, 1)),
        "fn": sum(1 for g, p in zip(gold, pred) if (g, p) == (1, 0)),
        "tp": sum(1 for g, p in zip(gold, pred) if (g, p) == (1, 1)),
    }


def assert_matches_oracle(rep, gold, pred, tol=1e-9):
    o = oracle_report(gold, pred)
    for cls in ("neutral", "insulting"):
        mine = getattr(rep, cls)
        for key in ("precision", "recall", "f1"):
            assert abs(getattr(mine, key) - float(o[cls][key])) <= tol, (cls, key)
        assert mine.support == o[cls]["support"]
    assert abs(rep.macro_f1 - float(o["macro_f1"])) <= tol
    assert abs(rep.accuracy - float(o["accuracy"])) <= tol
    assert (rep.cm.tn, rep.cm.fp, rep.cm.fn, rep.cm.tp) == (o["tn"], o["fp"], o["fn"], o["tp"])
