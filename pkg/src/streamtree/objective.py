"""Node-splitting objective and split-quality measures.

A node with m direction regressors is scored by

    J = B - lambda1 * CI + lambda2 * MWP

where, over child pairs (j, l):

    B   = sum |P_j - P_l|                      (balancing term)
    CI  = sum_i pi_i * sum |P_j^i - P_l^i|     (class integrity term)
    MWP = |sum_j P_j - 1|                      (multi-way penalty)

P_j is the marginal probability that an example is sent to child j,
P_j^i the same conditional on the example carrying label i, and
pi_i the fraction of label-occurrence mass owned by label i. Lower J is
better: the minimum -lambda1*(m-1) is attained exactly when the split is
perfectly balanced (all P_j equal) and perfectly pure (each label sent to
exactly one child).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ObjectiveParams:
    m: int = 2
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two directions")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be non-negative")
        if self.lambda1 > 0:
            ratio = self.lambda2 / self.lambda1
        else:
            ratio = math.inf if self.lambda2 > 0 else 0.0
        if self.m - 3 >= ratio:
            warnings.warn(
                f"m={self.m} with lambda2/lambda1={ratio:g} leaves the objective "
                "minimum unattached from perfectly pure splits (needs m-3 < "
                "lambda2/lambda1)",
                stacklevel=2,
            )


@dataclass
class NodeStats:
    """Running split statistics of one node.

    c_v counts label occurrences (one per label per example per epoch),
    l_v is the per-label share of c_v, p the marginal direction
    probabilities and p_cond the per-label direction probabilities.
    """

    m: int
    c_v: float = 0.0
    l_v: dict[int, float] = field(default_factory=dict)
    p: np.ndarray = None
    p_cond: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.p is None:
            self.p = np.zeros(self.m, dtype=np.float64)
        else:
            self.p = np.asarray(self.p, dtype=np.float64)
        self.p_cond = {k: np.asarray(v, dtype=np.float64) for k, v in self.p_cond.items()}

    def pi(self, label: int) -> float:
        return self.l_v.get(label, 0.0) / self.c_v

    def bump_counts(self, labels) -> None:
        """Add an example's labels to the occurrence counters."""
        for k in labels:
            self.c_v += 1.0
            self.l_v[k] = self.l_v.get(k, 0.0) + 1.0

    def fold_directions(self, labels, direction_p) -> None:
        """Fold per-direction send values (hard 0/1 or soft margins) into
        the probabilities. Counters must already include this example.
        """
        direction_p = np.asarray(direction_p, dtype=np.float64)
        ylen = float(len(labels))
        for j in range(self.m):
            self.p[j] = ((self.c_v - ylen) * self.p[j] + ylen * direction_p[j]) / self.c_v
        for k in labels:
            lk = self.l_v[k]
            pc = self.p_cond.setdefault(k, np.zeros(self.m, dtype=np.float64))
            for j in range(self.m):
                pc[j] = ((lk - 1.0) * pc[j] + direction_p[j]) / lk

    def observe(self, labels, direction_p) -> None:
        """bump_counts then fold_directions, the training-loop ordering."""
        labels = list(labels)
        self.bump_counts(labels)
        self.fold_directions(labels, direction_p)

    def check(self, tol_pi: float = 1e-9, tol_law: float = 1e-6) -> None:
        """Assert internal consistency; raises AssertionError on failure."""
        if self.c_v <= 0:
            return
        assert (self.p >= 0).all() and (self.p <= 1).all(), "marginals out of [0,1]"
        pi_sum = sum(self.l_v.values()) / self.c_v
        assert abs(pi_sum - 1.0) <= tol_pi, f"pi does not sum to 1: {pi_sum}"
        mix = np.zeros(self.m)
        for k, pc in self.p_cond.items():
            assert (pc >= 0).all() and (pc <= 1).all(), "conditionals out of [0,1]"
            mix += self.pi(k) * pc
        assert np.abs(mix - self.p).max() <= tol_law, (
            f"total-law mismatch: {np.abs(mix - self.p).max()}"
        )


class EmptyNodeError(ValueError):
    pass


def _pairwise_abs_sum(v: np.ndarray) -> float:
    total = 0.0
    for j in range(len(v)):
        for l in range(j + 1, len(v)):
            total += abs(v[j] - v[l])
    return total


def objective_terms(stats: NodeStats) -> tuple[float, float, float]:
    """(B, CI, MWP) evaluated over all labels present in the stats."""
    if stats.c_v <= 0:
        raise EmptyNodeError("node has no label mass")
    b = _pairwise_abs_sum(stats.p)
    mwp = abs(float(stats.p.sum()) - 1.0)
    ci = 0.0
    for k, pc in stats.p_cond.items():
        ci += stats.pi(k) * _pairwise_abs_sum(pc)
    return b, ci, mwp


def compute_objective(stats: NodeStats, params: ObjectiveParams) -> float:
    b, ci, mwp = objective_terms(stats)
    return b - params.lambda1 * ci + params.lambda2 * mwp


@dataclass(frozen=True)
class DirectionMask:
    """Nonzero m-bit pattern; bit j set sends the example to child j."""

    bits: int
    m: int

    def __post_init__(self):
        if not 1 <= self.bits < (1 << self.m):
            raise ValueError(f"mask {self.bits} out of range for m={self.m}")

    def directions(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.m) if (self.bits >> j) & 1)


def best_direction_subset(
    stats: NodeStats,
    example_labels,
    example_label_count: int,
    params: ObjectiveParams,
) -> DirectionMask:
    """Search all nonzero direction subsets for the one minimizing J.

    ``stats`` must already include the example's counter increments. For
    each candidate subset the marginals and the example's own label
    conditionals are hypothetically updated; labels outside the example
    shift J by the same constant for every subset, so the class-integrity
    sum is restricted to the example's labels. Ties break toward the
    smallest mask.
    """
    labels = list(example_labels)
    if not labels:
        raise EmptyNodeError("example has no labels; skip zero-label examples")
    m = params.m
    ylen = float(example_label_count)
    c_v = stats.c_v
    best_mask, best_j = 1, math.inf
    for s in range(1, 1 << m):
        bits = np.array([(s >> j) & 1 for j in range(m)], dtype=np.float64)
        hyp_p = ((c_v - ylen) * stats.p + ylen * bits) / c_v
        b = _pairwise_abs_sum(hyp_p)
        mwp = abs(float(hyp_p.sum()) - 1.0)
        ci = 0.0
        for k in labels:
            lk = stats.l_v[k]
            pc = stats.p_cond.get(k)
            if pc is None:
                pc = np.zeros(m, dtype=np.float64)
            hyp_c = ((lk - 1.0) * pc + bits) / lk
            ci += (lk / c_v) * _pairwise_abs_sum(hyp_c)
        J = b - params.lambda1 * ci + params.lambda2 * mwp
        if J < best_j:
            best_j = J
            best_mask = s
    return DirectionMask(best_mask, m)


def balancedness(stats: NodeStats) -> float:
    """Largest deviation of any marginal from their mean; 0 iff balanced."""
    return float(np.abs(stats.p - stats.p.mean()).max())


def purity(stats: NodeStats) -> float:
    """Mass of labels split across children; 0 iff each label goes one way."""
    total = 0.0
    for k, pc in stats.p_cond.items():
        s = float(pc.sum())
        total += stats.pi(k) * float(np.minimum(pc, s - pc).sum())
    return total / stats.m
