"""Command-line interface: train, predict, eval, validate, inspect.

Option precedence is flags > config file > defaults. Config files are
plain ``key=value`` lines (same names as the long flags, dashes or
underscores) so runs are easy to audit and reproduce.

Exit codes: 0 success, 1 usage error, 2 data error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings

import numpy as np

from . import model_io
from ._backend import backend_name
from .ensemble import Ensemble, predict_dataset, train_ensemble
from .metrics import (
    evaluate,
    inverse_propensities,
    load_inverse_propensities,
)
from .regressor import OptimizerConfig
from .sparse import DataError, SparseVector, parse_dataset
from .tree import TreeParams
from .validate import run_validation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VALIDATION = 3

LAMBDA_GRID = (0.5, 1.0, 1.5, 2.0, 4.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _build_parser() -> _Parser:
    p = _Parser(prog="streamtree", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="key=value config file (flags win)")
        sp.add_argument("--threads", type=int, default=1)

    tr = sub.add_parser("train", help="train a tree ensemble")
    add_common(tr)
    tr.add_argument("--data", required=True, help="training data file")
    tr.add_argument("--model", required=True, help="output model path")
    tr.add_argument("--trees", type=int, default=1)
    tr.add_argument("--arity", type=int, default=2, help="children per node (m)")
    tr.add_argument("--t-max", type=int, default=1023, help="node budget per tree")
    tr.add_argument("--epochs", type=int, default=10)
    tr.add_argument("--lambda1", type=float, default=1.0)
    tr.add_argument("--lambda2", type=float, default=1.0)
    tr.add_argument("--optimizer", choices=["sgd", "nag"], default="nag")
    tr.add_argument("--step-size", type=float, default=0.1)
    tr.add_argument("--momentum", type=float, default=0.9)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--min-split-examples", type=int, default=2)
    tr.add_argument("--top-r", type=int, default=5)
    tr.add_argument("--normalize", action="store_true",
                    help="L2-normalize each example's features")
    tr.add_argument("--trace", help="write per-node objective trace CSV here")

    pr = sub.add_parser("predict", help="write ranked label predictions")
    add_common(pr)
    pr.add_argument("--data", required=True)
    pr.add_argument("--model", required=True)
    pr.add_argument("--output", required=True)
    pr.add_argument("--top-r", type=int, default=None)
    pr.add_argument("--normalize", action="store_true")

    ev = sub.add_parser("eval", help="score predictions against gold labels")
    add_common(ev)
    ev.add_argument("--data", required=True, help="gold data file")
    ev.add_argument("--predictions", help="prediction file (from `predict`)")
    ev.add_argument("--model", help="model to predict with, if no prediction file")
    ev.add_argument("--output", help="report CSV path (default: stdout)")
    ev.add_argument("--ks", default="1,3,5")
    ev.add_argument("--top-r", type=int, default=None)
    ev.add_argument("--normalize", action="store_true")
    ev.add_argument("--propensities", help="file with one inverse propensity per line")
    ev.add_argument("--train-data", help="derive propensities from this training file")
    ev.add_argument("--prop-a", type=float, default=0.55)
    ev.add_argument("--prop-b", type=float, default=1.5)

    va = sub.add_parser("validate", help="run the theory self-check battery")
    add_common(va)
    va.add_argument("--samples", type=int, default=10_000)
    va.add_argument("--seed", type=int, default=0)
    va.add_argument("--output", help="write the pass/fail table as CSV here")

    ins = sub.add_parser("inspect", help="report tree statistics")
    add_common(ins)
    ins.add_argument("--model", required=True)
    ins.add_argument("--data", help="dataset for leaves-per-example statistics")
    ins.add_argument("--output", help="per-node CSV path")
    ins.add_argument("--normalize", action="store_true")
    return p


def _subparser_for(parser: _Parser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _apply_config_defaults(parser: _Parser, argv: list[str]) -> argparse.Namespace:
    """Two-phase parse: a config file fills defaults, flags override."""
    if not argv:
        parser.error("a subcommand is required")
    config_path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
    if config_path:
        sub = _subparser_for(parser, argv[0])
        cfg = _read_config_file(config_path)
        known = {a.dest: a for a in sub._actions}
        unknown = set(cfg) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        typed = {}
        for key, val in cfg.items():
            action = known[key]
            if action.type is int:
                typed[key] = int(val)
            elif action.type is float:
                typed[key] = float(val)
            elif isinstance(action, argparse._StoreTrueAction):
                typed[key] = val.lower() in ("1", "true", "yes")
            else:
                typed[key] = val
            action.required = False
        sub.set_defaults(**typed)
    return parser.parse_args(argv)


def _warn_outside_grid(args) -> None:
    for name in ("lambda1", "lambda2"):
        if getattr(args, name) not in LAMBDA_GRID:
            warnings.warn(f"{name}={getattr(args, name)} is outside the usual grid "
                          f"{LAMBDA_GRID}")
    if args.arity not in (2, 4):
        warnings.warn(f"arity={args.arity} is outside the usual choices (2, 4)")
    if args.epochs > 20:
        warnings.warn(f"epochs={args.epochs} exceeds the usual maximum of 20")


def _load_data(path: str, normalize: bool):
    ds = parse_dataset(path)
    return ds.l2_normalized() if normalize else ds


def _params_from_args(args) -> TreeParams:
    return TreeParams(
        m=args.arity,
        t_max=args.t_max,
        epochs=args.epochs,
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        optimizer=OptimizerConfig(kind=args.optimizer, step_size=args.step_size,
                                  momentum=args.momentum),
        seed=args.seed,
        min_split_examples=args.min_split_examples,
        top_r_default=args.top_r,
    )


def cmd_train(args) -> int:
    _warn_outside_grid(args)
    ds = _load_data(args.data, args.normalize)
    params = _params_from_args(args)
    t0 = time.perf_counter()
    ensemble = train_ensemble(ds, params, args.trees, base_seed=args.seed,
                              threads=args.threads)
    wall = time.perf_counter() - t0
    model_io.save_ensemble(ensemble, args.model)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("tree,node,depth,n_examples,epoch,mean_objective\n")
            for ti, tree in enumerate(ensemble.trees):
                for rec in tree.train_trace:
                    for e, j in enumerate(rec.epoch_mean_objective):
                        fh.write(f"{ti},{rec.node_id},{rec.depth},"
                                 f"{rec.n_examples},{e},{j:.6f}\n")
    nodes = sum(t.n_nodes for t in ensemble.trees)
    depth = max(t.depth for t in ensemble.trees)
    print(f"trained {args.trees} tree(s) [{backend_name()} backend] in {wall:.2f}s: "
          f"{nodes} nodes, deepest {depth}")
    print(f"model written to {args.model}")
    return EXIT_OK


def _predictions_for(args, ds, r):
    trees = model_io.iter_model_trees(args.model)
    return predict_dataset(trees, ds, r=r, threads=args.threads)


def cmd_predict(args) -> int:
    manifest = model_io.read_model_manifest(args.model)
    ds = _load_data(args.data, args.normalize)
    if ds.d != manifest["d"]:
        raise DataError(f"data has {ds.d} features, model expects {manifest['d']}")
    r = args.top_r or manifest["params"]["top_r_default"]
    t0 = time.perf_counter()
    preds = _predictions_for(args, ds, r)
    wall = time.perf_counter() - t0
    with open(args.output, "w") as fh:
        for ranked in preds:
            fh.write(" ".join(f"{lbl}:{score:.6f}" for lbl, score in ranked))
            fh.write("\n")
    print(f"predicted {ds.n} examples in {wall:.3f}s "
          f"({1000.0 * wall / max(ds.n, 1):.4f} ms/example)")
    return EXIT_OK


def _read_predictions(path: str) -> list[list[tuple[int, float]]]:
    out = []
    with open(path) as fh:
        for raw in fh:
            ranked = []
            for tok in raw.split():
                lbl, _, score = tok.partition(":")
                ranked.append((int(lbl), float(score) if score else 0.0))
            out.append(ranked)
    return out


def cmd_eval(args) -> int:
    ds = _load_data(args.data, args.normalize)
    golds = [ds.labels_of(i) for i in range(ds.n)]
    ks = tuple(int(k) for k in args.ks.split(","))
    t0 = time.perf_counter()
    if args.predictions:
        preds = _read_predictions(args.predictions)
    elif args.model:
        preds = _predictions_for(args, ds, r=args.top_r or max(ks))
    else:
        raise ValueError("eval needs --predictions or --model")
    wall = time.perf_counter() - t0
    if len(preds) != ds.n:
        raise DataError(f"{len(preds)} predictions for {ds.n} examples")

    prop = None
    if args.propensities:
        prop = load_inverse_propensities(args.propensities, ds.k)
    elif args.train_data:
        train = parse_dataset(args.train_data)
        prop = inverse_propensities(train.label_counts(), train.n,
                                    a=args.prop_a, b=args.prop_b)
    report = evaluate(preds, golds, ks=ks, prop=prop)
    report.predict_seconds = wall
    csv = report.to_csv()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    print(f"# {report}  ({report.n_empty_gold} empty-gold example(s) excluded)",
          file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    suite = run_validation(seed=args.seed, n_samples=args.samples)
    print(suite)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(suite.to_csv())
    return EXIT_OK if suite.passed else EXIT_VALIDATION


def cmd_inspect(args) -> int:
    manifest = model_io.read_model_manifest(args.model)
    trees = list(model_io.iter_model_trees(args.model))
    print(f"model kind: {manifest['kind']}  trees: {len(trees)}  "
          f"d={manifest['d']} k={manifest['k']}")
    rows = []
    for ti, tree in enumerate(trees):
        for v in range(tree.n_nodes):
            row = tree.wrow[v]
            if row < 0:
                continue
            p = tree.p_marg[row]
            balance = float(np.abs(p - p.mean()).max())
            rows.append((ti, v, int(tree.depth_arr[v]), int(tree.n_examples[v]), balance))
        print(f"tree {ti}: nodes={tree.n_nodes} internal={tree.n_internal} "
              f"depth={tree.depth}")
    if args.data:
        ds = _load_data(args.data, args.normalize)
        total_leaves = 0
        for tree in trees:
            scratch = tree._scratch()
            for i in range(ds.n):
                idx, val = ds.features_of(i)
                total_leaves += tree.accumulate(SparseVector(idx, val), scratch)
                scratch.reset()
        r_hat = total_leaves / (ds.n * len(trees))
        print(f"avg leaves reached per example (r_hat): {r_hat:.3f}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("tree,node,depth,n_examples,balance\n")
            for r in rows:
                fh.write(",".join(str(x) for x in r[:4]) + f",{r[4]:.6f}\n")
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = _build_parser()
    try:
        args = _apply_config_defaults(parser, argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {
        "train": cmd_train,
        "predict": cmd_predict,
        "eval": cmd_eval,
        "validate": cmd_validate,
        "inspect": cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, model_io.ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
