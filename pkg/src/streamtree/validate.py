"""Empirical self-checks of the split objective's advertised properties.

Every testable claim behind the design gets a runnable assertion here:
the objective's range and where its minimum sits, the balance/purity
inequalities, the measurable split-advantage quantities, leaf-weight and
leaf-entropy behavior, the entropy upper bound on the training error,
and the monotone decrease of the error as a separable dataset is split.
The ``validate`` CLI subcommand runs the whole battery and fails loudly
on any violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import precision_at_k
from .objective import NodeStats
from .sparse import Dataset
from .synth import orthogonal_classes
from .tree import Tree, TreeParams, build_tree

TOL_CLOSED_FORM = 1e-9
TOL_STREAMING = 1e-6

# Both regularizer weights are drawn from this grid in all experiments;
# the binary-range property needs lambda1 + lambda2 >= 1, which the grid
# guarantees.
LAMBDA_GRID = (0.5, 1.0, 1.5, 2.0, 4.0)


def lambda_pairs(m: int) -> list[tuple[float, float]]:
    """Grid pairs on which the m-ary objective range is actually valid.

    Two conditions: m-3 < lambda2/lambda1 (keeps the minimum at perfectly
    pure splits) and lambda1 + lambda2/(m-1) >= 1 (keeps the maximum at
    the all-to-all split). Without the second, a profile sending every
    example to the same m-1 children scores (1-lambda1)(m-1) + lambda2(m-2),
    which overshoots lambda2*(m-1); see range_bound_gap(). For m=2 the
    second condition is lambda1 + lambda2 >= 1, which the whole grid
    satisfies.
    """
    pairs = [(l1, l2) for l1 in LAMBDA_GRID for l2 in LAMBDA_GRID]
    return [(l1, l2) for l1, l2 in pairs
            if m - 3 < l2 / l1 and l1 + l2 / (m - 1) >= 1.0]


def range_bound_gap() -> dict:
    """Counterexample to the m-ary range outside the lambda_pairs regime:
    every example sent to the same three children of an m=4 node."""
    m, l1, l2 = 4, 0.5, 1.0
    n_lab = 4
    p_cond = np.zeros((n_lab, m))
    p_cond[:, :3] = 1.0
    lv = np.full(n_lab, 5.0)
    s = SplitSample(m=m, c_v=float(lv.sum()), lv=lv, p=p_cond[0].copy(), p_cond=p_cond)
    return {
        "J": objective_value(s, l1, l2),
        "claimed_max": l2 * (m - 1),
        "lambda": [l1, l2],
        "precondition_l2_over_l1": l2 / l1,
    }


@dataclass
class SplitSample:
    """Direction statistics of one simulated node split."""

    m: int
    c_v: float
    lv: np.ndarray  # (n_labels,) occurrence counts
    p: np.ndarray  # (m,) marginal direction probabilities
    p_cond: np.ndarray  # (n_labels, m)
    kind: str = "hard"

    @property
    def pi(self) -> np.ndarray:
        return self.lv / self.c_v

    def to_node_stats(self) -> NodeStats:
        return NodeStats(
            m=self.m,
            c_v=self.c_v,
            l_v={i: float(c) for i, c in enumerate(self.lv)},
            p=self.p.copy(),
            p_cond={i: self.p_cond[i].copy() for i in range(len(self.lv))},
        )


def sample_split(rng: np.random.Generator, m: int, kind: str = "hard") -> SplitSample:
    """Simulate a node: random multi-label examples, each sent with hard
    one-hot directions ("hard"), random nonzero masks ("multi"), or soft
    per-direction margins in (0, 1) ("soft")."""
    n_ex = int(rng.integers(2, 50))
    n_lab = int(rng.integers(1, 10))
    ylen = rng.integers(1, min(3, n_lab) + 1, size=n_ex)
    ex_of_occ = np.repeat(np.arange(n_ex), ylen)
    # distinct labels per example via per-row random permutations
    perms = rng.random((n_ex, n_lab)).argsort(axis=1)
    lab_of_occ = perms[np.arange(n_lab) < ylen[:, None]]
    if kind == "hard":
        preds = np.zeros((n_ex, m))
        preds[np.arange(n_ex), rng.integers(0, m, size=n_ex)] = 1.0
    elif kind == "multi":
        masks = rng.integers(1, 1 << m, size=n_ex)
        preds = ((masks[:, None] >> np.arange(m)) & 1).astype(np.float64)
    elif kind == "soft":
        preds = rng.uniform(0.0, 1.0, size=(n_ex, m))
    else:
        raise ValueError(f"unknown sample kind {kind!r}")

    present, occ_loc = np.unique(lab_of_occ, return_inverse=True)
    lv = np.bincount(occ_loc).astype(np.float64)
    c_v = float(lv.sum())
    p = (ylen[:, None] * preds).sum(axis=0) / c_v
    sums = np.zeros((len(present), m))
    np.add.at(sums, occ_loc, preds[ex_of_occ])
    p_cond = sums / lv[:, None]
    return SplitSample(m=m, c_v=c_v, lv=lv, p=p, p_cond=p_cond, kind=kind)


def perfect_split(m: int, labels_per_child: int = 2) -> SplitSample:
    """Each label owned by exactly one child, children equally loaded:
    the objective's unique minimizer."""
    n_lab = m * labels_per_child
    p_cond = np.zeros((n_lab, m))
    p_cond[np.arange(n_lab), np.arange(n_lab) % m] = 1.0
    lv = np.full(n_lab, 5.0)
    pi = lv / lv.sum()
    return SplitSample(m=m, c_v=float(lv.sum()), lv=lv, p=pi @ p_cond, p_cond=p_cond)


def all_to_all_split(m: int, n_lab: int = 4) -> SplitSample:
    """Every example sent to every child: the objective's maximizer."""
    p_cond = np.ones((n_lab, m))
    lv = np.full(n_lab, 5.0)
    return SplitSample(m=m, c_v=float(lv.sum()), lv=lv, p=np.ones(m), p_cond=p_cond)


def objective_terms_arrays(p, p_cond, pi) -> tuple[float, float, float]:
    m = len(p)
    b = 0.0
    ci = 0.0
    for j in range(m):
        for l in range(j + 1, m):
            b += abs(p[j] - p[l])
            ci += float(pi @ np.abs(p_cond[:, j] - p_cond[:, l]))
    return b, ci, abs(float(p.sum()) - 1.0)


def objective_value(sample: SplitSample, lambda1: float, lambda2: float) -> float:
    b, ci, mwp = objective_terms_arrays(sample.p, sample.p_cond, sample.pi)
    return b - lambda1 * ci + lambda2 * mwp


def balancedness_arrays(p: np.ndarray) -> float:
    return float(np.abs(p - p.mean()).max())


def purity_arrays(pi: np.ndarray, p_cond: np.ndarray) -> float:
    s = p_cond.sum(axis=1, keepdims=True)
    return float((pi @ np.minimum(p_cond, s - p_cond).sum(axis=1)) / p_cond.shape[1])


@dataclass
class CheckResult:
    name: str
    n_samples: int
    n_qualifying: int
    n_violations: int
    detail: str = ""
    first_violation: dict | None = None

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def check_objective_range(n_samples: int, m: int, seed: int = 0,
                          kinds=("hard", "multi", "soft")) -> CheckResult:
    """J stays within [-lambda1*(m-1), lambda2*(m-1)] on random splits and
    hits the endpoints exactly on the constructed extreme splits."""
    rng = np.random.default_rng(seed)
    pairs = lambda_pairs(m)
    lo_margin = math.inf
    hi_margin = math.inf
    violations = 0
    first = None
    for i in range(n_samples):
        sample = sample_split(rng, m, kinds[i % len(kinds)])
        l1, l2 = pairs[i % len(pairs)]
        j = objective_value(sample, l1, l2)
        lo, hi = -l1 * (m - 1), l2 * (m - 1)
        lo_margin = min(lo_margin, j - lo)
        hi_margin = min(hi_margin, hi - j)
        if j < lo - TOL_CLOSED_FORM or j > hi + TOL_CLOSED_FORM:
            violations += 1
            if first is None:
                first = {"J": j, "range": [lo, hi], "lambda": [l1, l2],
                         "kind": sample.kind, "p": sample.p.tolist(),
                         "p_cond": sample.p_cond.tolist(), "lv": sample.lv.tolist()}
    for l1, l2 in pairs:
        j_min = objective_value(perfect_split(m), l1, l2)
        if abs(j_min - (-l1 * (m - 1))) > TOL_CLOSED_FORM:
            violations += 1
            first = first or {"perfect_split_J": j_min, "lambda": [l1, l2]}
        j_max = objective_value(all_to_all_split(m), l1, l2)
        if abs(j_max - l2 * (m - 1)) > TOL_CLOSED_FORM:
            violations += 1
            first = first or {"all_to_all_J": j_max, "lambda": [l1, l2]}
    return CheckResult(
        name=f"objective_range_m{m}",
        n_samples=n_samples,
        n_qualifying=n_samples,
        n_violations=violations,
        detail=f"min slack above lower bound {lo_margin:.3g}, below upper {hi_margin:.3g}",
        first_violation=first,
    )


def purity_bound(b: float, j: float, l1: float, l2: float, m: int,
                 form: str = "provable") -> float | None:
    """Upper bound on the purity factor implied by the objective, or None
    when the sample does not qualify.

    form="stated": alpha <= (J - B + lambda2) * 2 / (m * (2*lambda2 -
    lambda1*(m-1))) when lambda1*(m-1) + B >= lambda2 > lambda1*(m-1)/2.
    This is the advertised inequality, but its derivation silently uses
    sum_{j<l} |a_j - a_l| <= (m-1)/2 * sum_j a_j, which fails for
    concentrated direction profiles (a one-hot row already gives
    1 > 1/2); a split sending every label to exactly half the children
    violates the bound at every lambda for m > 2. See purity_bound_gap().

    form="provable": alpha <= (J - B + lambda2) / (m * (lambda2 -
    lambda1*(m-1))) when lambda2 > lambda1*(m-1). Derivation: per label
    sum_{j<l} |a_j - a_l| <= (m-1)*max_j a_j <= (m-1)*S, the penalty term
    satisfies lambda2*(MWP + 1) >= lambda2 * sum_i pi_i S_i, and
    m*alpha <= sum_i pi_i S_i.

    form="stated_binary": the stated formula restricted to m == 2 with
    the strengthened precondition lambda2 >= lambda1, where it does hold.
    """
    if form == "provable":
        if l2 <= l1 * (m - 1):
            return None
        return (j - b + l2) / (m * (l2 - l1 * (m - 1)))
    denom = 2.0 * l2 - l1 * (m - 1)
    if not (l1 * (m - 1) + b >= l2 and denom > 0):
        return None
    if form == "stated_binary" and (m != 2 or l2 < l1):
        return None
    return (j - b + l2) * 2.0 / (m * denom)


def purity_bound_gap() -> dict:
    """The constructed counterexample to the stated purity bound: every
    label sent to exactly half the children of an m=4 node."""
    m, l1, l2 = 4, 1.0, 4.0
    p_cond = np.zeros((4, m))
    p_cond[:, :2] = 1.0
    lv = np.full(4, 5.0)
    s = SplitSample(m=m, c_v=float(lv.sum()), lv=lv, p=p_cond[0].copy(), p_cond=p_cond)
    b, ci, mwp = objective_terms_arrays(s.p, s.p_cond, s.pi)
    j = b - l1 * ci + l2 * mwp
    alpha = purity_arrays(s.pi, s.p_cond)
    return {
        "alpha": alpha,
        "stated_bound": purity_bound(b, j, l1, l2, m, form="stated"),
        "provable_bound": purity_bound(b, j, l1, l2, m, form="provable"),
        "lambda": [l1, l2],
    }


def check_balance_purity_bounds(n_samples: int, m: int, seed: int = 0,
                                form: str = "provable") -> CheckResult:
    """Two bounds per sample: the balance factor never exceeds the
    balancing term (beta <= J - J_purity, unconditional), and on samples
    qualifying for ``form`` the purity factor stays below purity_bound.
    The regularizer pairs are drawn from the part of the grid that can
    qualify for ``form``, so nearly every sample exercises both bounds."""
    rng = np.random.default_rng(seed)
    pairs = [(l1, l2) for l1 in LAMBDA_GRID for l2 in LAMBDA_GRID]
    if form == "provable":
        pairs = [(l1, l2) for l1, l2 in pairs if l2 > l1 * (m - 1)]
    elif form == "stated_binary":
        pairs = [(l1, l2) for l1, l2 in pairs
                 if l2 >= l1 and 2.0 * l2 - l1 * (m - 1) > 0]
    elif form == "stated":
        pairs = [(l1, l2) for l1, l2 in pairs if 2.0 * l2 - l1 * (m - 1) > 0]
    violations = 0
    qualifying = 0
    first = None
    for i in range(n_samples):
        sample = sample_split(rng, m, ("hard", "multi", "soft")[i % 3])
        l1, l2 = pairs[i % len(pairs)]
        b, ci, mwp = objective_terms_arrays(sample.p, sample.p_cond, sample.pi)
        j = b - l1 * ci + l2 * mwp
        beta = balancedness_arrays(sample.p)
        if beta > b + TOL_CLOSED_FORM:
            violations += 1
            first = first or {"beta": beta, "balancing_term": b, "kind": sample.kind}
        bound = purity_bound(b, j, l1, l2, m, form=form)
        if bound is not None:
            qualifying += 1
            alpha = purity_arrays(sample.pi, sample.p_cond)
            if alpha > bound + TOL_CLOSED_FORM:
                violations += 1
                first = first or {"alpha": alpha, "bound": bound,
                                  "lambda": [l1, l2], "kind": sample.kind}
    return CheckResult(
        name=f"balance_purity_bounds_m{m}",
        n_samples=n_samples,
        n_qualifying=qualifying,
        n_violations=violations,
        detail=f"{qualifying} samples met the {form} purity-bound precondition",
        first_violation=first,
    )


def split_advantage(sample_or_stats) -> tuple[float, float]:
    """(gamma_hat, b_hat): the label-separation mass the split achieved
    and the multi-way send mass. For binary splits gamma_hat is
    sum_i pi_i |P_R^i - P_L^i| and both lie in [0, 1]; for wider nodes the
    separation sum runs over all ordered child pairs."""
    if isinstance(sample_or_stats, NodeStats):
        stats = sample_or_stats
        labels = sorted(stats.p_cond)
        p_cond = np.array([stats.p_cond[k] for k in labels])
        pi = np.array([stats.pi(k) for k in labels])
        p = stats.p
        m = stats.m
    else:
        p_cond, pi, p, m = (sample_or_stats.p_cond, sample_or_stats.pi,
                            sample_or_stats.p, sample_or_stats.m)
    if m == 2:
        gamma = float(pi @ np.abs(p_cond[:, 0] - p_cond[:, 1]))
    else:
        gamma = 0.0
        for j in range(m):
            for l in range(m):
                gamma += float(pi @ np.abs(p_cond[:, j] - p_cond[:, l]))
    b_hat = abs(float(p.sum()) - 1.0)
    return gamma, b_hat


def reached_leaf_set(tree: Tree, i: int, dataset: Dataset) -> tuple[int, ...]:
    """Leaves example i descends to (multi-path), sorted."""
    from .sparse import SparseVector

    idx, val = dataset.features_of(i)
    x = SparseVector(idx, val)
    leaves = []
    stack = [0]
    while stack:
        v = stack.pop()
        if tree.is_leaf[v]:
            leaves.append(v)
            continue
        for j in tree.route_example(v, x):
            stack.append(int(tree.children[v, j]))
    return tuple(sorted(leaves))


def max_leaf_weight(tree: Tree, dataset: Dataset) -> float:
    """Empirical leaf-weight constant: (heaviest leaf's example share)
    scaled by (internal node count + 1)."""
    counts: dict[int, int] = {}
    for i in range(dataset.n):
        for leaf in reached_leaf_set(tree, i, dataset):
            counts[leaf] = counts.get(leaf, 0) + 1
    t = tree.n_internal
    w_max = max(counts.values()) / dataset.n if counts else 0.0
    return w_max * (t + 1)


@dataclass
class LeafSubsetProfile:
    """Examples grouped by the exact set of leaves they reach."""

    entries: list[tuple[tuple[int, ...], float, dict[int, float]]]
    n_examples: int
    n_excluded: int = 0

    def weights_sum(self) -> float:
        return sum(w for _, w, _ in self.entries)


def leaf_subset_profile(tree: Tree, dataset: Dataset,
                        min_labels: int = 0) -> LeafSubsetProfile:
    """Group examples by reached-leaf set; weight = group share, label
    distribution = per-label frequency within the group. Only groupings
    that actually occur are enumerated."""
    groups: dict[tuple[int, ...], list] = {}
    counted = 0
    excluded = 0
    for i in range(dataset.n):
        labels = dataset.labels_of(i)
        if len(labels) < min_labels or len(labels) == 0:
            excluded += 1
            continue
        counted += 1
        key = reached_leaf_set(tree, i, dataset)
        bucket = groups.setdefault(key, [0, {}])
        bucket[0] += 1
        for lab in labels:
            lab = int(lab)
            bucket[1][lab] = bucket[1].get(lab, 0) + 1
    entries = []
    for key in sorted(groups):
        count, label_counts = groups[key]
        w = count / counted
        rho = {lab: c / count for lab, c in sorted(label_counts.items())}
        entries.append((key, w, rho))
    return LeafSubsetProfile(entries=entries, n_examples=counted, n_excluded=excluded)


def tree_entropy(profile: LeafSubsetProfile) -> float:
    """G = sum over groups of w * sum_i rho_i ln(1/rho_i)."""
    g = 0.0
    for _, w, rho in profile.entries:
        g += w * sum(r * math.log(1.0 / r) for r in rho.values() if r > 0.0)
    return g


@dataclass
class EntropyBoundReport:
    error: float
    entropy: float
    bound: float
    n_examples: int
    n_excluded: int

    @property
    def passed(self) -> bool:
        return self.error <= self.bound + TOL_CLOSED_FORM


def check_error_entropy_bound(tree: Tree, dataset: Dataset, r: int = 1) -> EntropyBoundReport:
    """Training error at r is at most G / (r ln 2), with predictions taken
    as the top-r labels of each group's own label distribution (the
    predictor the bound is stated for). Examples with fewer than r labels
    are excluded and counted."""
    profile = leaf_subset_profile(tree, dataset, min_labels=r)
    g = tree_entropy(profile)
    total_hits = 0.0
    n = 0
    top_of: dict[tuple[int, ...], list[int]] = {}
    for key, _, rho in profile.entries:
        ranked = sorted(rho.items(), key=lambda kv: (-kv[1], kv[0]))
        top_of[key] = [lab for lab, _ in ranked[:r]]
    for i in range(dataset.n):
        labels = set(int(l) for l in dataset.labels_of(i))
        if len(labels) < r or not labels:
            continue
        key = reached_leaf_set(tree, i, dataset)
        hits = sum(1 for lab in top_of[key] if lab in labels)
        total_hits += hits / r
        n += 1
    error = 1.0 - (total_hits / n if n else 0.0)
    return EntropyBoundReport(
        error=error,
        entropy=g,
        bound=g / (r * math.log(2.0)),
        n_examples=n,
        n_excluded=profile.n_excluded,
    )


def monotone_error_trace(dataset: Dataset, params: TreeParams,
                         n_splits: int | None = None) -> list[float]:
    """Training error at r=1 before any expansion and after each one."""
    if n_splits is not None:
        params = replace(params, t_max=1 + params.m * n_splits)
    golds = [dataset.labels_of(i) for i in range(dataset.n)]

    # baseline: a single leaf predicting the overall top label for everyone
    counts = dataset.label_counts()
    top = int(np.lexsort((np.arange(dataset.k), -counts))[0])
    trace = [1.0 - precision_at_k([[top]] * dataset.n, golds, 1)]

    def record(snapshot: Tree, _node: int) -> None:
        preds = []
        for i in range(dataset.n):
            idx, val = dataset.features_of(i)
            from .sparse import SparseVector

            preds.append(snapshot.predict(SparseVector(idx, val), r=1))
        trace.append(1.0 - precision_at_k(preds, golds, 1))

    build_tree(dataset, params, on_expand=record)
    return trace


def is_non_increasing(trace, tol: float = 1e-12) -> bool:
    return all(trace[i + 1] <= trace[i] + tol for i in range(len(trace) - 1))


def pi_normalization_divergence(dataset: Dataset) -> dict:
    """Two readings of the label-share normalizer, compared at the root.

    Variant A divides each label's occurrence count by the total
    occurrence count. Variant B scales each label's example share by the
    inverse of the mean label-set size among that label's examples, then
    renormalizes. Both are reported; they coincide when every example
    carries the same number of labels.
    """
    lens = np.diff(dataset.l_indptr).astype(np.float64)
    n_i = np.bincount(dataset.l_labels, minlength=dataset.k).astype(np.float64)
    sum_len = np.zeros(dataset.k)
    np.add.at(sum_len, dataset.l_labels, np.repeat(lens, lens.astype(np.int64)))
    present = n_i > 0
    pi_a = np.zeros(dataset.k)
    pi_a[present] = n_i[present] / lens.sum()
    raw = np.zeros(dataset.k)
    raw[present] = (n_i[present] / dataset.n) * (n_i[present] / sum_len[present])
    pi_b = raw / raw.sum() if raw.sum() > 0 else raw
    return {
        "max_abs_diff": float(np.abs(pi_a - pi_b).max()),
        "constant_label_count": bool(len(np.unique(lens[lens > 0])) <= 1),
    }


@dataclass
class ValidationRow:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationSuite:
    rows: list[ValidationRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.rows.append(ValidationRow(name, passed, detail))

    def to_csv(self) -> str:
        lines = ["check,passed,detail"]
        for r in self.rows:
            detail = r.detail.replace(",", ";")
            lines.append(f"{r.name},{str(r.passed).lower()},{detail}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        width = max(len(r.name) for r in self.rows) if self.rows else 0
        out = []
        for r in self.rows:
            flag = "PASS" if r.passed else "FAIL"
            out.append(f"{r.name:<{width}}  {flag}  {r.detail}")
        return "\n".join(out)


def run_validation(seed: int = 0, n_samples: int = 10_000,
                   trained_trees: int = 3) -> ValidationSuite:
    """The full battery at the given sampling effort."""
    from .synth import clustered_multilabel, fixed_label_count_dataset

    suite = ValidationSuite()

    for m in (2, 4):
        res = check_objective_range(n_samples, m, seed=seed)
        suite.add(res.name, res.passed,
                  f"{res.n_samples} samples, {res.n_violations} violations; {res.detail}")
        res = check_balance_purity_bounds(n_samples, m, seed=seed + 1)
        suite.add(res.name, res.passed,
                  f"{res.n_samples} samples, {res.n_violations} violations; {res.detail}")
    res = check_balance_purity_bounds(n_samples, 2, seed=seed + 1, form="stated_binary")
    suite.add("purity_bound_stated_binary", res.passed,
              f"{res.n_samples} samples, {res.n_violations} violations; {res.detail}")

    gap = purity_bound_gap()
    suite.add(
        "purity_bound_stated_gap",
        gap["alpha"] > gap["stated_bound"] + 1e-9 and gap["alpha"] <= gap["provable_bound"] + 1e-9,
        f"half-and-half m=4 split: alpha={gap['alpha']:.2f} exceeds the advertised "
        f"bound {gap['stated_bound']:.2f} but obeys the corrected one {gap['provable_bound']:.2f}",
    )
    rgap = range_bound_gap()
    suite.add(
        "objective_range_gap",
        rgap["J"] > rgap["claimed_max"] + 1e-9,
        f"m=4 all-to-three split at lambda={rgap['lambda']}: J={rgap['J']:.2f} exceeds "
        f"the advertised maximum {rgap['claimed_max']:.2f}; range checks therefore "
        "require lambda1 + lambda2/(m-1) >= 1",
    )

    rng = np.random.default_rng(seed + 2)
    gb_ok = True
    worst = ""
    for i in range(200):
        s = sample_split(rng, 2, ("hard", "multi", "soft")[i % 3])
        gamma, b_hat = split_advantage(s)
        if not (0.0 - 1e-12 <= gamma <= 1.0 + 1e-12 and 0.0 - 1e-12 <= b_hat <= 1.0 + 1e-12):
            gb_ok = False
            worst = f"gamma={gamma} b={b_hat}"
    g_perf, b_perf = split_advantage(perfect_split(2))
    g_all, b_all = split_advantage(all_to_all_split(2))
    gb_ok = gb_ok and abs(g_perf - 1) < 1e-12 and abs(b_perf) < 1e-12
    gb_ok = gb_ok and abs(g_all) < 1e-12 and abs(b_all - 1) < 1e-12
    suite.add("split_advantage_range", gb_ok,
              worst or f"perfect split ({g_perf:.0f},{b_perf:.0f}), all-to-all ({g_all:.0f},{b_all:.0f})")

    sep = orthogonal_classes(16, 32)
    params = TreeParams(m=2, t_max=127, epochs=5, lambda1=1.0, lambda2=1.0, seed=seed)
    trace = monotone_error_trace(sep, params)
    suite.add("monotone_error_trace", is_non_increasing(trace) and trace[-1] == 0.0,
              f"{len(trace)} splits, error {trace[0]:.3f} -> {trace[-1]:.3f}")

    tree = build_tree(sep, params)
    c_hat = max_leaf_weight(tree, sep)
    suite.add("leaf_weight_constant", c_hat > 0.0, f"c_hat={c_hat:.3f}")

    bound_ok = True
    details = []
    for i in range(trained_trees):
        ds = fixed_label_count_dataset(300, 40, 12, r=1, seed=seed + i)
        p = TreeParams(m=2, t_max=63, epochs=4, lambda1=1.0, lambda2=1.0, seed=seed + i)
        rep = check_error_entropy_bound(build_tree(ds, p), ds, r=1)
        bound_ok = bound_ok and rep.passed
        details.append(f"err={rep.error:.3f}<=bound={rep.bound:.3f}")
    suite.add("error_entropy_bound", bound_ok, "; ".join(details))

    div = pi_normalization_divergence(clustered_multilabel(500, 40, 12, seed=seed))
    suite.add("pi_normalization_divergence", True,
              f"max diff {div['max_abs_diff']:.4f} (informational)")
    return suite
