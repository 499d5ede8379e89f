"""Synthetic dataset generators for tests and the validation suite."""

from __future__ import annotations

import numpy as np

from .sparse import Dataset


def dataset_from_examples(examples, d: int, k: int) -> Dataset:
    """Build a Dataset from [(labels, [(feature, value), ...]), ...]."""
    n = len(examples)
    f_indptr = np.zeros(n + 1, dtype=np.int64)
    l_indptr = np.zeros(n + 1, dtype=np.int64)
    f_idx, f_val, l_lab = [], [], []
    for i, (labels, feats) in enumerate(examples):
        feats = sorted(feats)
        labels = sorted(set(int(l) for l in labels))
        f_idx.append(np.asarray([f for f, _ in feats], dtype=np.int32))
        f_val.append(np.asarray([v for _, v in feats], dtype=np.float64))
        l_lab.append(np.asarray(labels, dtype=np.int32))
        f_indptr[i + 1] = f_indptr[i] + len(feats)
        l_indptr[i + 1] = l_indptr[i] + len(labels)
    return Dataset(
        n=n, d=d, k=k,
        f_indptr=f_indptr,
        f_indices=np.concatenate(f_idx) if f_idx else np.empty(0, dtype=np.int32),
        f_values=np.concatenate(f_val) if f_val else np.empty(0, dtype=np.float64),
        l_indptr=l_indptr,
        l_labels=np.concatenate(l_lab) if l_lab else np.empty(0, dtype=np.int32),
    )


def orthogonal_classes(n_classes: int, per_class: int, shuffle_seed: int | None = 0) -> Dataset:
    """Disjoint single-label classes with indicator features: class c's
    examples are exactly the unit vector e_c with label {c}. Linearly
    separable in every direction, so a tree can drive the error to zero.
    """
    examples = [([c], [(c, 1.0)]) for c in range(n_classes) for _ in range(per_class)]
    if shuffle_seed is not None:
        rng = np.random.default_rng(shuffle_seed)
        order = rng.permutation(len(examples))
        examples = [examples[i] for i in order]
    return dataset_from_examples(examples, d=n_classes, k=n_classes)


def clustered_multilabel(
    n: int,
    d: int,
    k: int,
    seed: int = 0,
    labels_per_example: tuple[int, int] = (1, 3),
    feats_per_label: int = 4,
    noise_feats: int = 1,
) -> Dataset:
    """Multi-label data with learnable structure: each label owns a few
    prototype features; an example's features are the union of its
    labels' prototypes plus noise."""
    rng = np.random.default_rng(seed)
    proto = [rng.choice(d, size=feats_per_label, replace=False) for _ in range(k)]
    examples = []
    lo, hi = labels_per_example
    for _ in range(n):
        nl = int(rng.integers(lo, hi + 1))
        labels = rng.choice(k, size=nl, replace=False)
        feats: dict[int, float] = {}
        for lab in labels:
            for f in proto[lab]:
                feats[int(f)] = feats.get(int(f), 0.0) + 1.0
        for f in rng.choice(d, size=noise_feats, replace=False):
            feats[int(f)] = feats.get(int(f), 0.0) + float(rng.uniform(0.2, 1.0))
        examples.append((list(labels), list(feats.items())))
    return dataset_from_examples(examples, d=d, k=k)


def fixed_label_count_dataset(n: int, d: int, k: int, r: int, seed: int = 0,
                              feats_per_label: int = 4) -> Dataset:
    """Like clustered_multilabel but every example has exactly r labels."""
    return clustered_multilabel(n, d, k, seed=seed, labels_per_example=(r, r),
                                feats_per_label=feats_per_label, noise_feats=0)
