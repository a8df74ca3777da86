"""Confusion-matrix metrics, threshold curves, multi-seed averaging and paired t-tests.

Private is the positive class throughout. "Overall" metrics are
support-weighted averages of the per-class values.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class EvalError(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def _to_sign(v):
    if isinstance(v, str):
        return 1 if v == "private" else -1
    return 1 if v > 0 else -1


def confusion(predictions, labels):
    """Exact counts; inputs are +/-1 or "private"/"public" strings."""
    if len(predictions) != len(labels):
        raise EvalError("predictions/labels length mismatch")
    if len(labels) == 0:
        raise EvalError("empty inputs")
    tp = fp = tn = fn = 0
    for p, l in zip(predictions, labels):
        p, l = _to_sign(p), _to_sign(l)
        if p > 0 and l > 0:
            tp += 1
        elif p > 0:
            fp += 1
        elif l > 0:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def _prf(tp, fp, fn):
    flags = []
    if tp + fp == 0:
        prec = 0.0
        flags.append("zero_precision_denominator")
    else:
        prec = tp / (tp + fp)
    if tp + fn == 0:
        rec = 0.0
        flags.append("zero_recall_denominator")
    else:
        rec = tp / (tp + fn)
    f1 = 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)
    return prec, rec, f1, flags


@dataclass
class MetricsReport:
    accuracy: float
    per_class: dict   # label -> {"precision", "recall", "f1", "support"}
    overall: dict     # support-weighted means of the per-class values
    flags: list = field(default_factory=list)

    def as_row(self):
        """Flat row mirroring the reporting layout: Acc, Overall F1/P/R, per class F1/P/R."""
        row = {"accuracy": self.accuracy,
               "overall_f1": self.overall["f1"],
               "overall_precision": self.overall["precision"],
               "overall_recall": self.overall["recall"]}
        for cls in ("private", "public"):
            for m in ("f1", "precision", "recall"):
                row["%s_%s" % (cls, m)] = self.per_class[cls][m]
        return row


def metrics(cm):
    if cm.total <= 0:
        raise EvalError("empty confusion matrix")
    p_prec, p_rec, p_f1, f1flags = _prf(cm.tp, cm.fp, cm.fn)
    # public class: swap positives/negatives
    q_prec, q_rec, q_f1, f2flags = _prf(cm.tn, cm.fn, cm.fp)
    sup_priv = cm.tp + cm.fn
    sup_pub = cm.tn + cm.fp
    n = cm.total
    per_class = {
        "private": {"precision": p_prec, "recall": p_rec, "f1": p_f1, "support": sup_priv},
        "public": {"precision": q_prec, "recall": q_rec, "f1": q_f1, "support": sup_pub},
    }
    overall = {
        m: (sup_priv * per_class["private"][m] + sup_pub * per_class["public"][m]) / n
        for m in ("precision", "recall", "f1")
    }
    return MetricsReport(
        accuracy=(cm.tp + cm.tn) / n,
        per_class=per_class,
        overall=overall,
        flags=f1flags + ["public_" + f for f in f2flags],
    )


@dataclass
class CurvePoint:
    threshold: float
    precision: float
    recall: float
    f1: float
    fpr: float
    fnr: float


def score_curves(scores, labels):
    """Threshold sweep over sorted unique scores plus {0, 0.5, 1}.

    At each threshold t an item is predicted private iff score >= t; the
    private-class precision/recall/F1 and FPR/FNR are recorded. The 0.5 row
    therefore reproduces metrics() of the default classification rule.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if np.any((scores < 0) | (scores > 1)):
        raise EvalError("scores must lie in [0, 1]")
    y = np.array([_to_sign(l) for l in labels])
    thresholds = sorted(set(scores.tolist()) | {0.0, 0.5, 1.0})
    points = []
    n_pos = int((y > 0).sum())
    n_neg = len(y) - n_pos
    for t in thresholds:
        pred = scores >= t
        tp = int((pred & (y > 0)).sum())
        fp = int((pred & (y < 0)).sum())
        fn = n_pos - tp
        prec, rec, f1, _ = _prf(tp, fp, fn)
        fpr = fp / n_neg if n_neg else 0.0
        fnr = fn / n_pos if n_pos else 0.0
        points.append(CurvePoint(t, prec, rec, f1, fpr, fnr))
    return points


def breakeven(curve):
    """Point minimizing |precision - recall|; ties go to the lower threshold."""
    if not curve:
        raise EvalError("empty curve")
    best = min(curve, key=lambda p: (abs(p.precision - p.recall), p.threshold))
    return best.threshold, (best.precision + best.recall) / 2.0


def average_over_seeds(reports):
    """Arithmetic mean per field across per-seed reports; inputs are retained
    by the caller for t-tests and box plots."""
    if not reports:
        raise EvalError("need at least one report")
    per_class = {}
    for cls in ("private", "public"):
        per_class[cls] = {
            m: float(np.mean([r.per_class[cls][m] for r in reports]))
            for m in ("precision", "recall", "f1", "support")
        }
    overall = {m: float(np.mean([r.overall[m] for r in reports]))
               for m in ("precision", "recall", "f1")}
    return MetricsReport(
        accuracy=float(np.mean([r.accuracy for r in reports])),
        per_class=per_class,
        overall=overall,
    )


# two-sided 5% critical values of Student's t, df = 1..30
_T_CRIT_05 = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
    2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
    2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
]


@dataclass
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    significant_at_05: bool
    degenerate: bool = False


def paired_ttest(a, b):
    """Two-sided paired t-test at the 0.05 level via critical-value lookup."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) != len(b) or len(a) < 2:
        raise EvalError("need equal-length samples with n >= 2")
    d = b - a
    n = len(d)
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return TTestResult(0.0, n - 1, False, degenerate=True)
    t = float(np.mean(d) / (sd / math.sqrt(n)))
    df = n - 1
    crit = _T_CRIT_05[df - 1] if df <= 30 else 1.96
    return TTestResult(t, df, abs(t) > crit)


def write_report_table(rows, path, delimiter="\t"):
    """Rows of {name: MetricsReport-as_row-dict}; columns follow the paper-style layout."""
    cols = ["name", "accuracy", "overall_f1", "overall_precision", "overall_recall",
            "private_f1", "private_precision", "private_recall",
            "public_f1", "public_precision", "public_recall"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(cols) + "\n")
        for name, row in rows:
            fh.write(delimiter.join([name] + ["%.6f" % row[c] for c in cols[1:]]) + "\n")


def write_curve_table(curve, path, delimiter="\t"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(["threshold", "precision", "recall", "f1", "fpr", "fnr"]) + "\n")
        for p in curve:
            fh.write(delimiter.join("%.6f" % v for v in
                                    (p.threshold, p.precision, p.recall, p.f1, p.fpr, p.fnr)) + "\n")
