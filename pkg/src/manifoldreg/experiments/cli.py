"""Command-line entry point.

Exit codes: 0 success, 1 configuration or usage error, 2 numeric failure
(a flat direction or degenerate frame where a full-rank answer is required).
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from ..exceptions import ConfigError, DegenerateFrame, FlatDirection
from ..frames import generalized_frenet, nonlinear_quantities
from ..regression import RegressionSolution, evaluate, solve_from_data
from .config import NAMES, make_config, read_config_file
from .results import _jsonable, write_csv
from .runners import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with the
    # numeric-failure code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=default(None), help="TOML or JSON config file")
    parser.add_argument("--seed", type=int, default=default(None), help="unsigned 64-bit seed")
    parser.add_argument("--out", default=default(None), help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default=default("csv"))
    parser.add_argument("--plot", action="store_true", default=default(False),
                        help="also write SVG figures (needs --out)")


def build_parser():
    parser = _Parser(prog="manifoldreg",
                     description="Local linear regression on curved data manifolds.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in NAMES:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        _global_flags(sp, suppress=True)

    sp = sub.add_parser("frenet", help="generalized Frenet frame of a parametric curve")
    _global_flags(sp, suppress=True)
    sp.add_argument("--curve", required=True,
                    help="comma-separated components in t, e.g. 'cos(t), sin(t), t'")
    sp.add_argument("--t", type=float, default=0.0, help="parameter value")

    sp = sub.add_parser("fit", help="least-squares affine fit of a CSV data file")
    _global_flags(sp, suppress=True)
    sp.add_argument("--data", required=True, help="CSV with a header row")
    sp.add_argument("--target", default=None, help="target column (default: last)")
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp.add_argument("--require-full-rank", action="store_true",
                    help="exit with code 2 if the design is rank deficient")

    sp = sub.add_parser("predict", help="evaluate a fitted model on a CSV data file")
    _global_flags(sp, suppress=True)
    sp.add_argument("--model", required=True, help="fit output (.json or .csv)")
    sp.add_argument("--data", required=True, help="CSV with the model's feature columns")
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _read_table(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ConfigError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: rows do not match the header")
    return header, data


def _emit(columns, rows, args, stem):
    """Write a table to ``--out`` or print it to stdout."""
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"{stem}.{args.format}")
        if args.format == "csv":
            write_csv(path, columns, rows)
        else:
            with open(path, "w") as fh:
                json.dump(_jsonable([dict(zip(columns, r)) for r in rows]), fh, indent=2)
                fh.write("\n")
        print(path)
    elif args.format == "csv":
        buf = io.StringIO()
        write_csv_stream(buf, columns, rows)
        sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps(_jsonable([dict(zip(columns, r)) for r in rows]), indent=2))


def write_csv_stream(fh, columns, rows):
    from .results import format_value

    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(v) for v in r])


def _load_model(path):
    try:
        if path.endswith(".json"):
            with open(path) as fh:
                d = json.load(fh)
            if isinstance(d, list):  # table form written with --format json
                w = [r["w"] for r in d if r["label"] != "bias"]
                b = [r["w"] for r in d if r["label"] == "bias"][0]
                return np.array(w, dtype=float), float(b)
            return np.array(d["w"], dtype=float), float(d["b"])
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        w = [float(r["w"]) for r in rows if r["label"] != "bias"]
        b = [float(r["w"]) for r in rows if r["label"] == "bias"][0]
        return np.array(w), b
    except (OSError, KeyError, IndexError, ValueError) as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_experiment(args):
    data = read_config_file(args.config) if args.config else None
    config = make_config(args.command, data, args.seed)
    file_opts = data or {}
    out = args.out or file_opts.get("out")
    fmt = args.format if args.format != "csv" else file_opts.get("format", "csv")
    plot = args.plot or bool(file_opts.get("plot", False))
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    if plot and not out:
        raise ConfigError("--plot needs an output directory (--out)")
    result = run_experiment(config, out, fmt, plot)
    if out:
        print(f"wrote {result.name} results to {out}")
    else:
        args.format = fmt
        _emit(result.columns, result.rows, args, result.name)
    if result.summary:
        print(json.dumps(_jsonable(result.summary), indent=2), file=sys.stderr)
    return EXIT_OK


def _cmd_frenet(args):
    import sympy

    t = sympy.Symbol("t")
    try:
        comps = [sympy.sympify(c.replace("^", "**"), locals={"t": t})
                 for c in args.curve.split(",")]
    except (sympy.SympifyError, TypeError) as exc:
        raise ConfigError(f"cannot parse curve {args.curve!r}: {exc}") from exc
    d = len(comps)
    if d < 2:
        raise ConfigError("a curve needs at least two components")
    derivs = []
    for k in range(1, d + 1):
        try:
            derivs.append([float(sympy.diff(c, t, k).subs(t, args.t)) for c in comps])
        except TypeError as exc:
            raise ConfigError(f"curve does not evaluate to real numbers: {exc}") from exc
    frame = generalized_frenet(np.array(derivs))
    alphas = np.concatenate([[1.0], frame.alphas])
    ks = np.concatenate([[1.0], nonlinear_quantities(frame.alphas)])
    cols = ["index", "alpha", "k"] + [f"v_{j + 1}" for j in range(d)]
    rows = [[i + 1, alphas[i], ks[i], *frame.basis_V[i]] for i in range(d)]
    _emit(cols, rows, args, "frenet")
    return EXIT_OK


def _cmd_fit(args):
    header, data = _read_table(args.data)
    target = args.target or header[-1]
    if target not in header:
        raise ConfigError(f"no column {target!r} in {args.data}")
    j = header.index(target)
    feats = [h for i, h in enumerate(header) if i != j]
    X = np.delete(data, j, axis=1)
    sol = solve_from_data(X, data[:, j], rtol=args.rtol)
    sol = RegressionSolution(sol.w, sol.b, sol.rank, sol.singular_values, sol.min_norm_applied,
                             sol.residual_rms, sol.null_space, tuple(feats))
    if args.require_full_rank and sol.min_norm_applied:
        raise FlatDirection(
            f"design has rank {sol.rank} of {X.shape[1] + 1}; solution is not unique"
        )
    if args.format == "json" and args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "fit.json")
        with open(path, "w") as fh:
            fh.write(sol.to_json() + "\n")
        print(path)
    elif args.format == "json":
        print(sol.to_json())
    else:
        rows = [[i + 1, lab, w] for i, (lab, w) in enumerate(zip(feats, sol.w))]
        rows.append([len(feats) + 1, "bias", sol.b])
        _emit(["index", "label", "w"], rows, args, "fit")
    print(json.dumps(sol.summary()), file=sys.stderr)
    return EXIT_OK


def _cmd_predict(args):
    w, b = _load_model(args.model)
    header, X = _read_table(args.data)
    if X.shape[1] == w.size + 1:  # a trailing target column is ignored
        X = X[:, : w.size]
    if X.shape[1] != w.size:
        raise ConfigError(f"model has {w.size} features, data has {X.shape[1]} columns")
    sol = RegressionSolution(w, b, w.size + 1, np.zeros(0), False, float("nan"))
    pred = evaluate(sol, X)
    _emit(["index", "prediction"], [[i + 1, v] for i, v in enumerate(pred)], args, "predict")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.command in NAMES:
            return _cmd_experiment(args)
        return {"frenet": _cmd_frenet, "fit": _cmd_fit, "predict": _cmd_predict}[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FlatDirection, DegenerateFrame) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
