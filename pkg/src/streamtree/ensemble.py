"""Ensembles of independently seeded trees.

Trees differ only in their weight-initialization stream (seed = base
seed + tree index). Prediction sums each tree's accumulated normalized
leaf histograms; the sum is never divided by the tree count since top-r
selection only sees ranks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .sparse import Dataset, SparseVector
from .tree import Tree, TreeParams, build_tree


@dataclass
class Ensemble:
    trees: list[Tree]
    params: TreeParams
    base_seed: int

    def __post_init__(self):
        if not self.trees:
            raise ValueError("ensemble needs at least one tree")

    @property
    def d(self) -> int:
        return self.trees[0].d

    @property
    def k(self) -> int:
        return self.trees[0].k


def train_ensemble(dataset: Dataset, params: TreeParams, n_trees: int,
                   base_seed: int | None = None, threads: int = 1) -> Ensemble:
    """Train ``n_trees`` trees with seeds base_seed, base_seed+1, ...

    Trees are independent, so the result does not depend on training
    order or the number of worker threads.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if base_seed is None:
        base_seed = params.seed
    seeds = [base_seed + i for i in range(n_trees)]

    def one(seed: int) -> Tree:
        return build_tree(dataset, replace(params, seed=seed))

    if threads > 1 and n_trees > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(one, seeds))
    else:
        trees = [one(s) for s in seeds]
    return Ensemble(trees=trees, params=params, base_seed=base_seed)


def predict_ensemble_scored(ensemble: Ensemble, x: SparseVector,
                            r: int | None = None) -> list[tuple[int, float]]:
    r = ensemble.params.top_r_default if r is None else r
    scratch = ensemble.trees[0]._scratch()
    for tree in ensemble.trees:
        scratch.ensure_capacity(tree.n_nodes)
        tree.accumulate(x, scratch)
    return scratch.top_r(r)


def predict_ensemble(ensemble: Ensemble, x: SparseVector, r: int | None = None) -> list[int]:
    return [lbl for lbl, _ in predict_ensemble_scored(ensemble, x, r)]


def predict_dataset(trees, dataset: Dataset, r: int,
                    threads: int = 1) -> list[list[tuple[int, float]]]:
    """Ensemble predictions for every example, tree-major: ``trees`` may
    be any iterable (e.g. lazily loaded models), consumed once, so only
    one tree needs to be resident at a time."""
    acc: list[dict[int, float]] = [{} for _ in range(dataset.n)]

    for tree in trees:
        def run(lo: int, hi: int) -> None:
            scratch = tree._scratch()
            for i in range(lo, hi):
                idx, val = dataset.features_of(i)
                tree.accumulate(SparseVector(idx, val), scratch)
                bucket = acc[i]
                for lbl in scratch.touched[: scratch.n_touched]:
                    lbl = int(lbl)
                    bucket[lbl] = bucket.get(lbl, 0.0) + float(scratch.acc[lbl])
                scratch.reset()

        if threads > 1 and dataset.n > 1:
            spans = _spans(dataset.n, threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(lambda s: run(*s), spans))
        else:
            run(0, dataset.n)

    out = []
    for i in range(dataset.n):
        items = sorted(acc[i].items(), key=lambda kv: (-kv[1], kv[0]))[:r]
        out.append(items)
    return out


def _spans(n: int, parts: int) -> list[tuple[int, int]]:
    size = (n + parts - 1) // parts
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]
