"""Ranking metrics: P@k, nDCG@k, and their propensity-scored variants.

Formulas follow the conventions used across the extreme-classification
literature: nDCG discounts by log2(rank+1) and normalizes by the ideal
ranking truncated at min(k, |gold|); the propensity-scored variants
weight each hit by the label's inverse propensity and divide the total
achieved weight by the best attainable one (so rewarding tail labels and
self-normalizing to <= 1 in the aggregate). Examples with an empty gold
set cannot be scored and are excluded from every mean, counted in the
report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _check_paired(pred, gold):
    if len(pred) != len(gold):
        raise ValueError(f"got {len(pred)} predictions for {len(gold)} gold sets")


def _as_label_list(p):
    # accept [label, ...] or [(label, score), ...]
    if len(p) and isinstance(p[0], (tuple, list)):
        return [int(l) for l, _ in p]
    return [int(l) for l in p]


def precision_at_k(pred, gold, k: int) -> float:
    """Mean fraction of the top-k predicted labels that are true."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_paired(pred, gold)
    total, n = 0.0, 0
    for p, g in zip(pred, gold):
        g = set(g)
        if not g:
            continue
        hits = sum(1 for lbl in _as_label_list(p)[:k] if lbl in g)
        total += hits / k
        n += 1
    return total / n if n else 0.0


def _dcg(labels, gold, k):
    return sum(1.0 / math.log2(r + 2) for r, lbl in enumerate(labels[:k]) if lbl in gold)


def ndcg_at_k(pred, gold, k: int) -> float:
    """Mean log-discounted gain against the ideal ranking at k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_paired(pred, gold)
    total, n = 0.0, 0
    for p, g in zip(pred, gold):
        g = set(g)
        if not g:
            continue
        ideal = sum(1.0 / math.log2(r + 2) for r in range(min(k, len(g))))
        total += _dcg(_as_label_list(p), g, k) / ideal
        n += 1
    return total / n if n else 0.0


def inverse_propensities(label_counts, n: int, a: float = 0.55, b: float = 1.5) -> np.ndarray:
    """Inverse propensity per label from training-set label counts.

    1/p_l = 1 + C * (N_l + b)^(-a) with C = (ln n - 1) * (b + 1)^a; rare
    labels get larger weights, and every value is >= 1.
    """
    if n <= math.e:
        raise ValueError("training size must exceed e for a positive scale factor")
    counts = np.asarray(label_counts, dtype=np.float64)
    if (counts < 0).any():
        raise ValueError("label counts must be non-negative")
    c = (math.log(n) - 1.0) * (b + 1.0) ** a
    return 1.0 + c * (counts + b) ** (-a)


def load_inverse_propensities(path: str, k: int) -> np.ndarray:
    """Read one inverse propensity per line, label id = line number."""
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                vals.append(float(line))
    if len(vals) != k:
        raise ValueError(f"expected {k} propensity values, got {len(vals)}")
    arr = np.asarray(vals, dtype=np.float64)
    if (arr < 1.0).any():
        raise ValueError("inverse propensities must be >= 1")
    return arr


def psp_at_k(pred, gold, k: int, prop: np.ndarray) -> float:
    """Propensity-scored precision: achieved inverse-propensity mass in
    the top k over the best attainable mass, aggregated over examples."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_paired(pred, gold)
    prop = np.asarray(prop, dtype=np.float64)
    num, den = 0.0, 0.0
    for p, g in zip(pred, gold):
        g = set(g)
        if not g:
            continue
        num += sum(prop[lbl] for lbl in _as_label_list(p)[:k] if lbl in g) / k
        best = sorted((prop[lbl] for lbl in g), reverse=True)[:k]
        den += sum(best) / k
    return num / den if den else 0.0


def psn_at_k(pred, gold, k: int, prop: np.ndarray) -> float:
    """Propensity-scored nDCG, aggregated like psp_at_k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_paired(pred, gold)
    prop = np.asarray(prop, dtype=np.float64)
    num, den = 0.0, 0.0
    for p, g in zip(pred, gold):
        g = set(g)
        if not g:
            continue
        labels = _as_label_list(p)[:k]
        num += sum(prop[lbl] / math.log2(r + 2) for r, lbl in enumerate(labels) if lbl in g)
        best = sorted((prop[lbl] for lbl in g), reverse=True)[: min(k, len(g))]
        den += sum(v / math.log2(r + 2) for r, v in enumerate(best))
    return num / den if den else 0.0


def count_empty_gold(gold) -> int:
    return sum(1 for g in gold if len(g) == 0)


@dataclass
class EvalReport:
    """Metric values keyed by (metric name, k), plus bookkeeping."""

    values: dict[tuple[str, int], float] = field(default_factory=dict)
    n_examples: int = 0
    n_empty_gold: int = 0
    predict_seconds: float = 0.0

    def to_csv(self) -> str:
        lines = ["metric,k,value"]
        for (name, k), v in sorted(self.values.items()):
            lines.append(f"{name},{k},{v:.6f}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        parts = [f"{name}@{k}={v * 100:.2f}" for (name, k), v in sorted(self.values.items())]
        return " ".join(parts)


def evaluate(pred, gold, ks=(1, 3, 5), prop: np.ndarray | None = None) -> EvalReport:
    """Compute the full metric battery for ranked predictions."""
    report = EvalReport(n_examples=len(gold), n_empty_gold=count_empty_gold(gold))
    for k in ks:
        report.values[("P", k)] = precision_at_k(pred, gold, k)
        report.values[("nDCG", k)] = ndcg_at_k(pred, gold, k)
        if prop is not None:
            report.values[("PSP", k)] = psp_at_k(pred, gold, k, prop)
            report.values[("PSN", k)] = psn_at_k(pred, gold, k, prop)
    return report
