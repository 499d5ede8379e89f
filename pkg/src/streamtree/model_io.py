"""Versioned binary model container.

Layout (all integers little-endian):

    bytes 0-3   magic b"STRE"
    bytes 4-7   format version (u32)
    bytes 8-15  manifest length in bytes (u64)
    manifest    canonical JSON (sorted keys, no whitespace)
    payload     raw C-order array bytes, 16-byte aligned, zero padded

The manifest lists every array (name, dtype, shape, offset into the
payload, byte count) plus the training parameters, so files are
self-describing. Weights and histogram counts are stored as raw float64,
making round-trips bit-exact. An ensemble file embeds one complete tree
blob per member, so single trees can be loaded lazily by offset.

Writing is fully deterministic: identical models produce identical bytes.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct

import numpy as np

from .ensemble import Ensemble
from .regressor import OptimizerConfig
from .tree import Tree, TreeParams

MAGIC = b"STRE"
FORMAT_VERSION = 1
_ALIGN = 16


class ModelFormatError(ValueError):
    pass


def _params_to_dict(params: TreeParams) -> dict:
    return {
        "m": params.m,
        "t_max": params.t_max,
        "epochs": params.epochs,
        "lambda1": params.lambda1,
        "lambda2": params.lambda2,
        "optimizer": {
            "kind": params.optimizer.kind,
            "step_size": params.optimizer.step_size,
            "momentum": params.optimizer.momentum,
        },
        "seed": params.seed,
        "min_split_examples": params.min_split_examples,
        "top_r_default": params.top_r_default,
    }


def _params_from_dict(d: dict) -> TreeParams:
    opt = d["optimizer"]
    return TreeParams(
        m=d["m"],
        t_max=d["t_max"],
        epochs=d["epochs"],
        lambda1=d["lambda1"],
        lambda2=d["lambda2"],
        optimizer=OptimizerConfig(
            kind=opt["kind"], step_size=opt["step_size"], momentum=opt["momentum"]
        ),
        seed=d["seed"],
        min_split_examples=d["min_split_examples"],
        top_r_default=d["top_r_default"],
    )


def params_hash(params: TreeParams, d: int, k: int) -> str:
    blob = json.dumps({"params": _params_to_dict(params), "d": d, "k": k},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _pack(meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    entries = []
    payload = io.BytesIO()
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder not in ("=", "<", "|"):
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        pad = (-payload.tell()) % _ALIGN
        payload.write(b"\x00" * pad)
        offset = payload.tell()
        raw = arr.tobytes()
        payload.write(raw)
        entries.append({
            "name": name,
            "dtype": arr.dtype.str.lstrip("=<|"),
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
    manifest = dict(meta)
    manifest["arrays"] = entries
    manifest["byteorder"] = "little"
    mbytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    head = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(mbytes))
    return head + mbytes + payload.getvalue()


def _unpack(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if blob[:4] != MAGIC:
        raise ModelFormatError("not a streamtree model file")
    version, mlen = struct.unpack("<IQ", blob[4:16])
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    manifest = json.loads(blob[16 : 16 + mlen].decode())
    payload = blob[16 + mlen :]
    arrays = {}
    for ent in manifest["arrays"]:
        dt = np.dtype(ent["dtype"]).newbyteorder("<")
        arr = np.frombuffer(payload, dtype=dt, count=int(np.prod(ent["shape"], dtype=np.int64)),
                            offset=ent["offset"]).reshape(ent["shape"])
        arrays[ent["name"]] = np.ascontiguousarray(arr)
    return manifest, arrays


def tree_to_bytes(tree: Tree) -> bytes:
    meta = {
        "kind": "tree",
        "float_width": 64,
        "params": _params_to_dict(tree.params),
        "d": tree.d,
        "k": tree.k,
        "n_nodes": tree.n_nodes,
    }
    arrays = {
        "children": tree.children,
        "is_leaf": tree.is_leaf,
        "depth": tree.depth_arr,
        "n_examples": tree.n_examples,
        "hist_indptr": tree.hist_indptr,
        "hist_labels": tree.hist_labels,
        "hist_vals": tree.hist_vals,
        "wrow": tree.wrow,
        "weights": tree.weights,
        "p_marg": tree.p_marg,
    }
    return _pack(meta, arrays)


def tree_from_bytes(blob: bytes) -> Tree:
    manifest, arrays = _unpack(blob)
    if manifest.get("kind") != "tree":
        raise ModelFormatError(f"expected a tree blob, got {manifest.get('kind')!r}")
    return Tree(
        _params_from_dict(manifest["params"]),
        manifest["d"],
        manifest["k"],
        arrays["children"],
        arrays["is_leaf"],
        arrays["depth"],
        arrays["n_examples"],
        arrays["hist_indptr"],
        arrays["hist_labels"],
        arrays["hist_vals"],
        arrays["wrow"],
        arrays["weights"],
        arrays["p_marg"],
    )


def save_tree(tree: Tree, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(tree_to_bytes(tree))


def load_tree(path: str) -> Tree:
    with open(path, "rb") as fh:
        return tree_from_bytes(fh.read())


def save_ensemble(ensemble: Ensemble, path: str) -> None:
    blobs = [tree_to_bytes(t) for t in ensemble.trees]
    offsets = []
    pos = 0
    for b in blobs:
        offsets.append({"offset": pos, "nbytes": len(b)})
        pos += len(b)
    meta = {
        "kind": "ensemble",
        "float_width": 64,
        "n_trees": len(blobs),
        "base_seed": ensemble.base_seed,
        "params": _params_to_dict(ensemble.params),
        "params_hash": params_hash(ensemble.params, ensemble.d, ensemble.k),
        "d": ensemble.d,
        "k": ensemble.k,
        "trees": offsets,
    }
    mbytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(mbytes)))
        fh.write(mbytes)
        for b in blobs:
            fh.write(b)


def _read_manifest(path: str) -> tuple[dict, int]:
    """Manifest plus the file offset where the payload starts."""
    with open(path, "rb") as fh:
        head = fh.read(16)
        if head[:4] != MAGIC:
            raise ModelFormatError("not a streamtree model file")
        version, mlen = struct.unpack("<IQ", head[4:16])
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported format version {version}")
        return json.loads(fh.read(mlen).decode()), 16 + mlen


def read_model_manifest(path: str) -> dict:
    return _read_manifest(path)[0]


def iter_model_trees(path: str):
    """Yield trees one at a time; works for both tree and ensemble files."""
    manifest, base = _read_manifest(path)
    if manifest["kind"] == "tree":
        yield load_tree(path)
        return
    with open(path, "rb") as fh:
        for ent in manifest["trees"]:
            fh.seek(base + ent["offset"])
            yield tree_from_bytes(fh.read(ent["nbytes"]))


def load_ensemble(path: str) -> Ensemble:
    manifest = read_model_manifest(path)
    trees = list(iter_model_trees(path))
    if manifest["kind"] == "tree":
        return Ensemble(trees=trees, params=trees[0].params, base_seed=trees[0].params.seed)
    return Ensemble(trees=trees, params=_params_from_dict(manifest["params"]),
                    base_seed=manifest["base_seed"])
