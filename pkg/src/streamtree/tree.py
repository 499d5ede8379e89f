"""Streaming top-down tree construction and multi-path prediction.

Nodes are expanded one at a time in priority order (label-histogram mass
minus its largest bin, so nodes rich in distinct labels go first). A
node's regressors are trained over several passes through the examples
that reached it; examples are then routed to every child whose raw score
is positive (highest score if none) and the node's example list is
dropped. Nothing is ever revisited, so peak memory tracks the frontier,
not the tree.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .objective import NodeStats
from .regressor import LinearRegressor, OptimizerConfig
from .sparse import Dataset, SparseVector

WEIGHT_INIT_SCALE = 0.01


@dataclass(frozen=True)
class TreeParams:
    m: int = 2
    t_max: int = 1023
    epochs: int = 10
    lambda1: float = 1.0
    lambda2: float = 1.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    min_split_examples: int = 2
    top_r_default: int = 5

    def __post_init__(self):
        if not 2 <= self.m <= 8:
            raise ValueError("m must be in [2, 8] (direction subsets grow as 2^m)")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if self.t_max < 1 + self.m:
            warnings.warn(f"t_max={self.t_max} < 1+m: the tree cannot expand", stacklevel=2)
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.min_split_examples < 2:
            raise ValueError("min_split_examples must be at least 2")


@dataclass
class TreeNode:
    """Read-only view of one stored node."""

    id: int
    depth: int
    n_examples: int
    is_leaf: bool
    children: tuple[int, ...] | None
    lhist: dict[int, float]
    regressors: list[LinearRegressor] | None
    stats: NodeStats | None


@dataclass
class NodeTrainRecord:
    node_id: int
    depth: int
    n_examples: int
    epoch_mean_objective: np.ndarray


def node_priority(hist_counts) -> float:
    """Histogram mass minus the largest bin; 0 for <= 1 distinct label."""
    counts = np.asarray(hist_counts, dtype=np.float64)
    if counts.size == 0:
        return 0.0
    return float(counts.sum() - counts.max())


class Tree:
    """A built tree: flat node arrays plus the training parameters."""

    def __init__(self, params: TreeParams, d: int, k: int, children, is_leaf,
                 depth_arr, n_examples, hist_indptr, hist_labels, hist_vals,
                 wrow, weights, p_marg, train_trace=None, stats=None):
        self.params = params
        self.d = d
        self.k = k
        self.children = children
        self.is_leaf = is_leaf
        self.depth_arr = depth_arr
        self.n_examples = n_examples
        self.hist_indptr = hist_indptr
        self.hist_labels = hist_labels
        self.hist_vals = hist_vals
        cs = np.concatenate(([0.0], np.cumsum(hist_vals)))
        self.hist_mass = cs[hist_indptr[1:]] - cs[hist_indptr[:-1]]
        self.wrow = wrow
        self.weights = weights  # (n_internal, m, d+1)
        self.p_marg = p_marg  # (n_internal, m)
        self.train_trace = train_trace or []
        self.stats = stats or {}

    @property
    def n_nodes(self) -> int:
        return len(self.is_leaf)

    @property
    def n_internal(self) -> int:
        return int((~self.is_leaf.astype(bool)).sum())

    @property
    def depth(self) -> int:
        return int(self.depth_arr.max())

    def node(self, v: int) -> TreeNode:
        hs, he = self.hist_indptr[v], self.hist_indptr[v + 1]
        lhist = {int(l): float(c) for l, c in zip(self.hist_labels[hs:he], self.hist_vals[hs:he])}
        leaf = bool(self.is_leaf[v])
        regs = None
        if self.wrow[v] >= 0:
            regs = [LinearRegressor(self.d, weights=self.weights[self.wrow[v], j])
                    for j in range(self.params.m)]
        return TreeNode(
            id=v,
            depth=int(self.depth_arr[v]),
            n_examples=int(self.n_examples[v]),
            is_leaf=leaf,
            children=None if leaf else tuple(int(c) for c in self.children[v]),
            lhist=lhist,
            regressors=regs,
            stats=self.stats.get(v),
        )

    def leaves(self) -> np.ndarray:
        return np.nonzero(self.is_leaf)[0]

    def route_example(self, v: int, x: SparseVector) -> set[int]:
        """Child slots x is sent to from node v: every direction with a
        positive raw score, else just the highest-scoring one."""
        row = self.wrow[v]
        if row < 0:
            raise ValueError(f"node {v} is untrained")
        scores = [kernels.dot_bias(x.indices, x.values, self.weights[row, j])
                  for j in range(self.params.m)]
        sent = {j for j, s in enumerate(scores) if s > 0.0}
        if not sent:
            sent = {int(np.argmax(scores))}
        return sent

    def _scratch(self):
        return _PredictScratch(self.k, self.n_nodes)

    def accumulate(self, x: SparseVector, scratch: "_PredictScratch") -> int:
        """Add this tree's normalized leaf histogram mix for x into the
        scratch accumulator; returns the number of leaves reached."""
        scratch.n_touched, n_leaves = kernels.descend(
            self.children, self.is_leaf, self.wrow, self.weights,
            self.hist_indptr, self.hist_labels, self.hist_vals, self.hist_mass,
            self.depth_arr, x.indices, x.values, scratch.acc, scratch.touched,
            scratch.n_touched, scratch.stack_node, scratch.stack_fb,
        )
        return n_leaves

    def predict_scored(self, x: SparseVector, r: int | None = None):
        """Top-r (label, score) pairs, scores descending, ties to the
        smaller label id."""
        r = self.params.top_r_default if r is None else r
        scratch = self._scratch()
        self.accumulate(x, scratch)
        return scratch.top_r(r)

    def predict(self, x: SparseVector, r: int | None = None) -> list[int]:
        return [lbl for lbl, _ in self.predict_scored(x, r)]


class _PredictScratch:
    """Reusable descent buffers; one per thread."""

    def __init__(self, k: int, max_nodes: int):
        self.acc = np.zeros(k, dtype=np.float64)
        self.touched = np.zeros(k, dtype=np.int32)
        self.n_touched = 0
        self.stack_node = np.zeros(max_nodes + 1, dtype=np.int32)
        self.stack_fb = np.zeros(max_nodes + 1, dtype=np.int32)

    def ensure_capacity(self, max_nodes: int):
        if len(self.stack_node) < max_nodes + 1:
            self.stack_node = np.zeros(max_nodes + 1, dtype=np.int32)
            self.stack_fb = np.zeros(max_nodes + 1, dtype=np.int32)

    def top_r(self, r: int) -> list[tuple[int, float]]:
        labels = self.touched[: self.n_touched].copy()
        scores = self.acc[labels]
        order = np.lexsort((labels, -scores))[:r]
        out = [(int(labels[i]), float(scores[i])) for i in order]
        self.reset()
        return out

    def reset(self):
        self.acc[self.touched[: self.n_touched]] = 0.0
        self.n_touched = 0


def tree_depth(tree: Tree) -> int:
    return tree.depth


def _gather_csr(indptr, data, ids):
    """Concatenate CSR rows ``ids`` of ``data`` without a Python loop."""
    if len(ids) == 0:
        return data[:0]
    starts = indptr[ids]
    lens = (indptr[ids + 1] - starts).astype(np.int64)
    total = int(lens.sum())
    if total == 0:
        return data[:0]
    pos = np.arange(total, dtype=np.int64)
    pos += np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return data[pos]


class _Builder:
    def __init__(self, dataset: Dataset, params: TreeParams, retain_stats: bool):
        self.ds = dataset
        self.params = params
        self.retain_stats = retain_stats
        self.rng = np.random.default_rng(np.random.PCG64(params.seed))
        self.children: list[np.ndarray | None] = []
        self.depth: list[int] = []
        self.n_ex: list[int] = []
        self.hists: list[tuple[np.ndarray, np.ndarray]] = []
        self.weights: list[np.ndarray] = []
        self.p_rows: list[np.ndarray] = []
        self.wrow: list[int] = []
        self.trace: list[NodeTrainRecord] = []
        self.stats: dict[int, NodeStats] = {}
        self.loc = np.full(dataset.k, -1, dtype=np.int32)

    def new_node(self, depth: int, ex_ids: np.ndarray) -> int:
        labels = _gather_csr(self.ds.l_indptr, self.ds.l_labels, ex_ids)
        hist_labels, hist_counts = np.unique(labels, return_counts=True)
        v = len(self.depth)
        self.children.append(None)
        self.depth.append(depth)
        self.n_ex.append(len(ex_ids))
        self.hists.append((hist_labels.astype(np.int32), hist_counts.astype(np.float64)))
        self.wrow.append(-1)
        return v

    def train(self, v: int, ex_ids: np.ndarray) -> None:
        p = self.params
        m, d1 = p.m, self.ds.d + 1
        weights = self.rng.uniform(-WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, (m, d1))
        nag = p.optimizer.kind == "nag"
        vel = np.zeros((m, d1)) if nag else np.zeros((m, 1))
        last = np.zeros((m, d1), dtype=np.int64) if nag else np.zeros((m, 1), dtype=np.int64)
        node_labels = self.hists[v][0]
        self.loc[node_labels] = np.arange(len(node_labels), dtype=np.int32)
        p_marg = np.zeros(m)
        p_cond = np.zeros((len(node_labels), m))
        lv = np.zeros(len(node_labels))
        epoch_j = np.zeros(p.epochs)
        c_v = kernels.train_node(
            self.ds.f_indptr, self.ds.f_indices, self.ds.f_values,
            self.ds.l_indptr, self.ds.l_labels, ex_ids, self.loc,
            weights, vel, last, p_marg, p_cond, lv,
            p.epochs, p.lambda1, p.lambda2,
            p.optimizer.opt_code, p.optimizer.step_size, p.optimizer.momentum,
            epoch_j,
        )
        self.loc[node_labels] = -1
        self.wrow[v] = len(self.weights)
        self.weights.append(weights)
        self.p_rows.append(p_marg)
        self.trace.append(NodeTrainRecord(v, self.depth[v], len(ex_ids), epoch_j))
        if self.retain_stats:
            self.stats[v] = NodeStats(
                m=m,
                c_v=c_v,
                l_v={int(l): float(c) for l, c in zip(node_labels, lv)},
                p=p_marg.copy(),
                p_cond={int(l): p_cond[i].copy() for i, l in enumerate(node_labels)},
            )

    def snapshot(self) -> Tree:
        n = len(self.depth)
        m = self.params.m
        children = np.full((n, m), -1, dtype=np.int32)
        is_leaf = np.ones(n, dtype=np.uint8)
        for v, ch in enumerate(self.children):
            if ch is not None:
                children[v] = ch
                is_leaf[v] = 0
        hist_indptr = np.zeros(n + 1, dtype=np.int64)
        for v, (hl, _) in enumerate(self.hists):
            hist_indptr[v + 1] = hist_indptr[v] + len(hl)
        hist_labels = (np.concatenate([h[0] for h in self.hists])
                       if n else np.empty(0, dtype=np.int32))
        hist_vals = (np.concatenate([h[1] for h in self.hists])
                     if n else np.empty(0, dtype=np.float64))
        d1 = self.ds.d + 1
        weights = (np.stack(self.weights) if self.weights
                   else np.zeros((0, m, d1)))
        p_marg = np.stack(self.p_rows) if self.p_rows else np.zeros((0, m))
        return Tree(
            self.params, self.ds.d, self.ds.k, children, is_leaf,
            np.asarray(self.depth, dtype=np.int32),
            np.asarray(self.n_ex, dtype=np.int64),
            hist_indptr, hist_labels.astype(np.int32), hist_vals.astype(np.float64),
            np.asarray(self.wrow, dtype=np.int32), np.ascontiguousarray(weights),
            p_marg, train_trace=self.trace, stats=self.stats,
        )


def build_tree(dataset: Dataset, params: TreeParams, on_expand=None,
               retain_stats: bool = False) -> Tree:
    """Grow and train one tree over the dataset's labeled examples.

    ``on_expand(partial_tree, node_id)`` fires after each expansion with a
    usable snapshot, which is how per-split error traces are collected.
    """
    ids = dataset.trainable_ids()
    if len(ids) == 0:
        raise ValueError("no labeled examples to train on")
    b = _Builder(dataset, params, retain_stats)
    root = b.new_node(0, ids)

    heap: list[tuple[float, int, int]] = []
    pending: dict[int, np.ndarray] = {root: ids}
    push_counter = 0
    # The root is enqueued unconditionally: with an otherwise empty queue
    # it is always the first node expanded, whatever its priority.
    heapq.heappush(heap, (-node_priority(b.hists[root][1]), push_counter, root))

    t = 1
    while heap and t < params.t_max:
        _, _, v = heapq.heappop(heap)
        ex_ids = pending.pop(v)
        b.train(v, ex_ids)
        masks = kernels.route_examples(
            dataset.f_indptr, dataset.f_indices, dataset.f_values, ex_ids,
            b.weights[b.wrow[v]],
        )
        child_ids = np.empty(params.m, dtype=np.int32)
        for j in range(params.m):
            sel = ex_ids[(masks >> j) & 1 == 1]
            c = b.new_node(b.depth[v] + 1, sel)
            child_ids[j] = c
            prio = node_priority(b.hists[c][1])
            if prio > 0.0 and len(sel) >= params.min_split_examples:
                push_counter += 1
                heapq.heappush(heap, (-prio, push_counter, c))
                pending[c] = sel
        b.children[v] = child_ids
        t += params.m
        if on_expand is not None:
            on_expand(b.snapshot(), v)
    return b.snapshot()
