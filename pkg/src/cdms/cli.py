"""Command-line interface: ``cdms {segment,pretrain,synth,eval,sweep}``.

Exit codes: 0 success, 1 usage/input/config error, 2 solver divergence.
"""

import argparse
import itertools
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from cdms.admm import make_problem, solve, write_residual_log
from cdms.exceptions import ConfigError, DivergenceError, LoadError
from cdms.metrics import evaluate
from cdms.pretrain import pretrain_stack
from cdms.synthetic import generate_transfer_instance, load_synth_spec, segment_target
from cdms.tensor_io import (
    SolverConfig,
    load_config,
    load_feature_matrix,
    load_labels,
    parse_config_values,
    parse_int_list,
    save_labels,
    save_matrix,
)

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2

# flag dest -> config key
_OVERRIDES = {
    "alpha": "alpha",
    "beta": "beta",
    "gamma": "gamma",
    "tau": "tau",
    "layer_dims": "layer_dims",
    "max_iters": "max_iters",
    "pretrain_iters": "pretrain_iters",
    "seed": "seed",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Fail(Exception):
    pass


def _fail(msg):
    raise _Fail(msg)


def _resolve_config(args):
    base = load_config(args.config) if getattr(args, "config", None) else SolverConfig()
    raw = {}
    for dest, key in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            raw[key] = value
    return parse_config_values(raw, base) if raw else base


def _load_inputs(args):
    X_s = load_feature_matrix(args.source, args.orientation)
    X_t = load_feature_matrix(args.target, args.orientation)
    y_s = load_labels(args.source_labels)
    if y_s.size != X_s.shape[1]:
        _fail(f"{y_s.size} source labels for {X_s.shape[1]} source frames")
    return X_s, y_s, X_t


def _segment(X_s, y_s, X_t, k, config):
    problem = make_problem(X_s, X_t, y_s, config)
    out = solve(problem)
    A, labels, _ = segment_target(out, problem.n_s, k, config.seed)
    return out, A, labels


def cmd_segment(args):
    config = _resolve_config(args)
    X_s, y_s, X_t = _load_inputs(args)
    if not 2 <= args.clusters <= X_t.shape[1]:
        _fail(f"--clusters must lie in [2, {X_t.shape[1]}], got {args.clusters}")
    try:
        out, A, labels = _segment(X_s, y_s, X_t, args.clusters, config)
    except ValueError as exc:
        _fail(str(exc))
    os.makedirs(args.out, exist_ok=True)
    save_labels(os.path.join(args.out, "labels.txt"), labels)
    save_matrix(os.path.join(args.out, "affinity.csv"), A)
    write_residual_log(os.path.join(args.out, "residuals.csv"), out.residual_log)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"converged = {str(out.converged).lower()}\n")
        fh.write(f"iters = {out.iters_run}\n")
        fh.write(f"objective = {out.objective:.17g}\n")
    print(f"converged={str(out.converged).lower()} iters={out.iters_run}")
    return EXIT_OK


def cmd_synth(args):
    spec = load_synth_spec(args.spec)
    X_s, y_s, X_t, y_t = generate_transfer_instance(spec)
    os.makedirs(args.out, exist_ok=True)
    save_matrix(os.path.join(args.out, "source.csv"), X_s)
    save_labels(os.path.join(args.out, "source_labels.txt"), y_s)
    save_matrix(os.path.join(args.out, "target.csv"), X_t)
    save_labels(os.path.join(args.out, "target_labels.txt"), y_t)
    return EXIT_OK


def _fmt(v):
    return format(v, ".6g")


def cmd_eval(args):
    pred = load_labels(args.pred)
    truth = load_labels(args.truth)
    if pred.size != truth.size:
        _fail(f"length mismatch: {pred.size} predicted vs {truth.size} true labels")
    report = evaluate(truth, pred)
    print(f"nmi={_fmt(report.nmi)} acc={_fmt(report.acc)}")
    return EXIT_OK


def _float_grid(text, name):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        _fail(f"{name}: expected comma-separated numbers, got {text!r}")
    if not values:
        _fail(f"{name} is empty")
    return values


def _sweep_point(payload):
    X_s, y_s, X_t, y_t, k, config = payload
    try:
        out, _, labels = _segment(X_s, y_s, X_t, k, config)
    except (DivergenceError, ArithmeticError, ValueError, np.linalg.LinAlgError):
        return math.nan, math.nan, -1
    report = evaluate(y_t, labels)
    return report.nmi, report.acc, out.iters_run


def cmd_sweep(args):
    base = _resolve_config(args)
    X_s, y_s, X_t = _load_inputs(args)
    y_t = load_labels(args.target_labels)
    if y_t.size != X_t.shape[1]:
        _fail(f"{y_t.size} target labels for {X_t.shape[1]} target frames")
    if args.jobs < 1:
        _fail(f"--jobs must be positive, got {args.jobs}")
    grid = list(
        itertools.product(
            _float_grid(args.alpha_grid, "--alpha-grid"),
            _float_grid(args.beta_grid, "--beta-grid"),
            _float_grid(args.gamma_grid, "--gamma-grid"),
        )
    )
    payloads = [
        (X_s, y_s, X_t, y_t, args.clusters, base.replace(alpha=a, beta=b, gamma=g))
        for a, b, g in grid
    ]
    if args.jobs == 1:
        results = [_sweep_point(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, payloads))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("alpha,beta,gamma,nmi,acc,iters\n")
        for (a, b, g), (nmi_v, acc_v, iters) in zip(grid, results):
            fh.write(f"{a:.17g},{b:.17g},{g:.17g},{nmi_v:.17g},{acc_v:.17g},{iters}\n")
    return EXIT_OK


def cmd_pretrain(args):
    try:
        dims = tuple(parse_int_list(args.dims))
    except ValueError as exc:
        _fail(f"--dims: {exc}")
    SolverConfig(layer_dims=dims)  # same rules as the solver
    X = load_feature_matrix(args.input, args.orientation)
    if dims[0] > min(X.shape):
        _fail(f"first dimension {dims[0]} exceeds min(d, n) = {min(X.shape)}")
    stack = pretrain_stack(X, dims, args.iters, args.seed)
    os.makedirs(args.out, exist_ok=True)
    for l in range(stack.n_layers):
        save_matrix(os.path.join(args.out, f"D{l + 1}.csv"), stack.D[l])
        save_matrix(os.path.join(args.out, f"H{l + 1}.csv"), stack.H[l])
    err = np.linalg.norm(X - stack.reconstruct()) / max(np.linalg.norm(X), 1e-300)
    print(f"reconstruction_error={err:.6g}")
    return EXIT_OK


def _add_solver_flags(p):
    p.add_argument("--config", help="key = value solver configuration file")
    p.add_argument("--alpha", type=str)
    p.add_argument("--beta", type=str)
    p.add_argument("--gamma", type=str)
    p.add_argument("--tau", type=str)
    p.add_argument("--layer-dims", dest="layer_dims", type=str)
    p.add_argument("--max-iters", dest="max_iters", type=str)
    p.add_argument("--pretrain-iters", dest="pretrain_iters", type=str)
    p.add_argument("--seed", type=str)


def _add_orientation(p):
    p.add_argument(
        "--orientation",
        choices=("rows-are-features", "rows-are-frames"),
        default="rows-are-features",
    )


def build_parser():
    parser = _Parser(prog="cdms", description="Cross-domain temporal motion segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", help="segment a target sequence using a labeled source")
    p.add_argument("--source", required=True)
    p.add_argument("--source-labels", dest="source_labels", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--out", default=".")
    _add_orientation(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("synth", help="generate a synthetic source/target instance")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid search over alpha, beta, gamma")
    p.add_argument("--source", required=True)
    p.add_argument("--source-labels", dest="source_labels", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--target-labels", dest="target_labels", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--alpha-grid", dest="alpha_grid", required=True)
    p.add_argument("--beta-grid", dest="beta_grid", required=True)
    p.add_argument("--gamma-grid", dest="gamma_grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_orientation(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pretrain", help="layer-wise deep NMF of one matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--dims", required=True)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_orientation(p)
    p.set_defaults(func=cmd_pretrain)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"cdms: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (_Fail, ConfigError, LoadError, OSError) as exc:
        print(f"cdms: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
