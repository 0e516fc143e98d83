"""Binary and aggregated evaluation metrics.

Every ratio here defines 0/0 as 0 rather than raising or returning NaN, so
degenerate classes (never predicted, never present) read as zeros in reports.
The convention matters for rare codes whose test folds can miss a class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def confusion(
    predictions: Sequence[float],
    labels: Sequence[int],
    decision_threshold: float = 0.5,
) -> Confusion:
    """Count tp/fp/fn/tn, thresholding probabilistic predictions.

    Hard 0/1 predictions pass through the default threshold unchanged.  A
    prediction exactly on the threshold counts as negative, mirroring the
    tie-goes-to-rest rule used for weight-sum categorization.
    """
    if len(predictions) != len(labels):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels"
        )
    if not labels:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    tp = fp = fn = tn = 0
    for p, t in zip(predictions, labels):
        if t not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {t!r}")
        hard = 1 if p > decision_threshold else 0
        if t == 1:
            tp += hard
            fn += 1 - hard
        else:
            fp += hard
            tn += 1 - hard
    return Confusion(tp=tp, fp=fp, fn=fn, tn=tn)


def precision(c: Confusion) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: Confusion) -> float:
    return _ratio(c.tp, c.tp + c.fn)


def f1(c: Confusion) -> float:
    p, r = precision(c), recall(c)
    return _ratio(2 * p * r, p + r)


def prf1(c: Confusion) -> tuple[float, float, float]:
    return precision(c), recall(c), f1(c)


def tpr_tnr(c: Confusion) -> tuple[float, float]:
    """Sensitivity and specificity."""
    return _ratio(c.tp, c.tp + c.fn), _ratio(c.tn, c.tn + c.fp)


def pooled(confusions: Mapping[str, Confusion]) -> Confusion:
    return Confusion(
        tp=sum(c.tp for c in confusions.values()),
        fp=sum(c.fp for c in confusions.values()),
        fn=sum(c.fn for c in confusions.values()),
        tn=sum(c.tn for c in confusions.values()),
    )


def micro_f1(confusions: Mapping[str, Confusion]) -> float:
    """F1 over the pooled counts of all classes."""
    return f1(pooled(confusions))


def macro_f1(confusions: Mapping[str, Confusion]) -> float:
    """Unweighted mean of per-class F1; rare classes count as much as common."""
    if not confusions:
        raise ValueError("need at least one class")
    return sum(f1(c) for c in confusions.values()) / len(confusions)


def micro_macro_f1(confusions: Mapping[str, Confusion]) -> tuple[float, float]:
    if not confusions:
        raise ValueError("need at least one class")
    return micro_f1(confusions), macro_f1(confusions)
