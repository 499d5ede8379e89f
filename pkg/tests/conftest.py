import io
import os

import numpy as np
import pytest

from streamtree.sparse import SparseVector, parse_dataset


@pytest.fixture
def tiny_text():
    return b"2 3 4\n1,3 0:0.5 2:1.0\n 0:1.0\n"


@pytest.fixture
def tiny_dataset(tiny_text):
    return parse_dataset(io.BytesIO(tiny_text))


def sv(pairs) -> SparseVector:
    pairs = sorted(pairs)
    return SparseVector(
        np.asarray([i for i, _ in pairs], dtype=np.int32),
        np.asarray([v for _, v in pairs], dtype=np.float64),
    )


def dataset_dir():
    """Directory with the public benchmark datasets, if present."""
    return os.environ.get("STREAMTREE_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "data"))


def find_dataset(name: str):
    """(train_path, test_path) for a benchmark dataset, or None.

    Looks for <dir>/<name>_train.txt and <name>_test.txt (case-insensitive
    directory variants tolerated).
    """
    base = dataset_dir()
    if not os.path.isdir(base):
        return None
    candidates = [base, os.path.join(base, name), os.path.join(base, name.capitalize()),
                  os.path.join(base, name.lower())]
    for root in candidates:
        for stem in (name, name.lower(), name.capitalize()):
            tr = os.path.join(root, f"{stem}_train.txt")
            te = os.path.join(root, f"{stem}_test.txt")
            if os.path.exists(tr) and os.path.exists(te):
                return tr, te
    return None
