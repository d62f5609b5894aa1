"""Command-line front end.

Subcommands: stats, validate, train, evaluate, predict, compare, sweep,
synth. Exit codes: 0 success, 2 usage or validation failure, 3 runtime or
numeric failure. Every randomized subcommand takes --seed (default 0, the
effective value is printed), never the wall clock.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataset import (
    DEFAULT_FEATURES,
    FIELDS,
    DatasetFormatError,
    correlation_matrix,
    correlation_to_csv,
    feature_matrix,
    fit_normalizer,
    parse_dataset,
    records_to_csv,
    split,
    summary_stats,
    summary_to_csv,
    validate_ranges,
)
from .experiment import (
    ExperimentConfig,
    SweepSpec,
    model_seed,
    parametric_sweep,
    run_experiment,
    synth_dataset,
)
from .metrics import report_from_pairs
from .neuralnet import (
    BackpropConfig,
    NetworkTopology,
    TrainedModel,
    load_model,
    save_model,
    train_backprop,
)
from .optimizers import BaConfig, GwoConfig, PsoConfig, trace_csv, train_hybrid

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

TRAIN_MODELS = ("ann", "pso", "gwo", "ba")
_SWARM_CONFIGS = {"pso": PsoConfig, "gwo": GwoConfig, "ba": BaConfig}


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _effective_seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON in {path}: {exc}") from None


def _parse_kv(text: str) -> dict[str, float]:
    """Parse 'name=value,name=value' input pairs."""
    values: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"expected name=value, got {part!r}")
        name, _, raw = part.partition("=")
        name = name.strip()
        if name not in FIELDS and name != "eps_h_rup":
            raise ValueError(f"unknown input {name!r}; known names: {', '.join(FIELDS)}, eps_h_rup")
        try:
            values[name] = float(raw)
        except ValueError:
            raise ValueError(f"could not parse number from {raw!r} for {name!r}") from None
    if not values:
        raise ValueError("no input values given")
    return values


def cmd_stats(args) -> int:
    records = parse_dataset(args.dataset)
    _say(args, f"parsed {len(records)} records from {args.dataset}")
    summary = summary_stats(records)
    corr = correlation_matrix(records)
    if args.format == "json":
        payload = {
            "summary": summary.to_dict(),
            "correlation": {"fields": list(FIELDS), "matrix": [[float(v) for v in row] for row in corr]},
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "csv":
        print(summary_to_csv(summary), end="")
        print(correlation_to_csv(corr), end="")
    else:
        _print_summary(summary)
        _print_correlation(corr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
        (out / "summary.csv").write_text(summary_to_csv(summary))
        (out / "correlation.csv").write_text(correlation_to_csv(corr))
        _say(args, f"wrote summary.json, summary.csv, correlation.csv to {out}")
    return EXIT_OK


def _print_summary(summary) -> None:
    cols = ("min", "max", "range", "mean", "median", "stdev", "cov")
    print(f"{'field':>6}" + "".join(f"{c:>12}" for c in cols))
    for name, s in summary.fields.items():
        values = (s.min, s.max, s.range, s.mean, s.median, s.stdev, s.cov)
        print(f"{name:>6}" + "".join(f"{v:>12.4g}" for v in values))


def _print_correlation(corr) -> None:
    print("correlation:")
    print(f"{'':>6}" + "".join(f"{f:>8}" for f in FIELDS))
    for name, row in zip(FIELDS, corr):
        print(f"{name:>6}" + "".join(f"{v:>8.3f}" for v in row))


def cmd_validate(args) -> int:
    records = parse_dataset(args.dataset)
    report = validate_ranges(records)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(f"{report.n_records} records, {len(report.flags)} warning flag(s)")
        for f in report.flags:
            if f.kind == "fcc_below_fco":
                print(f"  record {f.index}: fcc={f.value:g} below fco={f.bound:g}")
            else:
                word = "below min" if f.kind == "below_min" else "above max"
                print(f"  record {f.index}: {f.field}={f.value:g} {word} {f.bound:g}")
    return EXIT_OK


def _train_config(args):
    """Defaults, then the config file, then command-line flags."""
    data = _load_json(args.config) if args.config else {}
    if args.model == "ann":
        if args.iterations is not None:
            data["epochs"] = args.iterations
        if args.seed is not None:
            data["seed"] = args.seed
        data.setdefault("seed", 0)
        return BackpropConfig.from_dict(data)
    if args.iterations is not None:
        data["iterations"] = args.iterations
    if args.population is not None:
        data["population"] = args.population
    if args.seed is not None:
        data["seed"] = args.seed
    data.setdefault("seed", 0)
    return _SWARM_CONFIGS[args.model].from_dict(data)


def cmd_train(args) -> int:
    records = parse_dataset(args.dataset)
    cfg = _train_config(args)
    _say(args, f"training {args.model} on {len(records)} records (seed {cfg.seed})")
    if args.train_fraction < 1.0:
        train, _ = split(records, args.train_fraction, seed=model_seed(cfg.seed, "split"))
        _say(args, f"using {len(train)} of {len(records)} records for training")
    else:
        train = records
    norm = fit_normalizer(train)
    topology = NetworkTopology(input_size=len(DEFAULT_FEATURES), hidden_sizes=(args.neurons,))
    X = feature_matrix(train, DEFAULT_FEATURES, norm)
    y = norm.normalize("fcc", np.array([r.fcc for r in train], dtype=float))
    if args.model == "ann":
        weights, history = train_backprop(topology, X, y, cfg)
        provenance = {"optimizer": "ann", "seed": cfg.seed, "iterations": cfg.epochs,
                      "learning_rate": cfg.learning_rate}
    else:
        weights, trace = train_hybrid(args.model, topology, X, y, cfg)
        history = [float(v) for v in trace.best_fitness]
        provenance = {"optimizer": args.model, "seed": cfg.seed,
                      "iterations": cfg.iterations, "population": cfg.population}
    model = TrainedModel(topology=topology, weights=weights, normalization=norm,
                         features=DEFAULT_FEATURES, provenance=provenance)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / f"model_{args.model}.json"
    trace_path = out / f"trace_{args.model}.csv"
    save_model(model, model_path)
    trace_path.write_text(trace_csv(history))
    _say(args, f"final training objective: {history[-1]:.6g}")
    _say(args, f"wrote {model_path} and {trace_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    records = parse_dataset(args.dataset)
    for f in model.features:
        if f not in FIELDS:
            raise ValueError(f"model feature {f!r} not present in the dataset schema")
    if model.target not in FIELDS:
        raise ValueError(f"model target {model.target!r} not present in the dataset schema")
    targets = np.array([getattr(r, model.target) for r in records], dtype=float)
    predictions = model.predict_records(records)
    report = report_from_pairs(targets, predictions, model.normalization,
                               target_field=model.target)
    if args.format == "json":
        payload = report.to_dict()
        payload["provenance"] = model.provenance
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"n = {report.n}")
        print(f"provenance: {model.provenance}")
        if report.accuracy_percent is not None:
            print(f"accuracy = {report.accuracy_percent:.4f} % (r_squared {report.r_squared:.6f})")
        else:
            print("accuracy = n/a (" + "; ".join(report.notes) + ")")
        print(f"mse = {report.mse_mpa:.6g} MPa^2, mae = {report.mae_mpa:.6g} MPa")
        print(f"mse = {report.mse_pct:.6g} %, mae = {report.mae_pct:.6g} % (normalized scale)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "evaluation.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        (out / "predictions.csv").write_text(report.pairs_csv())
        _say(args, f"wrote evaluation.json and predictions.csv to {out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    values = _parse_kv(args.input)
    fcc, warnings = model.predict_values(values)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps({"fcc_mpa": fcc}, sort_keys=True))
    else:
        print(f"fcc = {fcc:.4f} MPa")
    return EXIT_OK


def cmd_compare(args) -> int:
    data = _load_json(args.config)
    if args.out is not None:
        data["out_dir"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    config = ExperimentConfig.from_dict(data)
    _say(args, f"running comparison with master seed {config.seed}")
    result = run_experiment(config)
    if args.format == "json":
        print(json.dumps(result.comparison.to_dict(), indent=2, sort_keys=True))
    elif args.format == "csv":
        print(result.comparison.to_csv(), end="")
    else:
        print(f"split: {result.n_train} train / {result.n_test} test")
        print(f"{'model':>10}{'accuracy %':>12}{'mse %':>12}{'mae %':>12}{'mse MPa':>12}{'mae MPa':>12}")
        for r in result.comparison.rows:
            acc = f"{r.accuracy_percent:.2f}" if r.accuracy_percent is not None else "n/a"
            print(f"{r.model:>10}{acc:>12}{r.mse_pct:>12.4g}{r.mae_pct:>12.4g}"
                  f"{r.mse_mpa:>12.4g}{r.mae_mpa:>12.4g}")
        for name, message in result.comparison.errors.items():
            print(f"{name:>10}  FAILED: {message}")
    if config.out_dir:
        _say(args, f"wrote report files to {config.out_dir}")
    return EXIT_OK if result.comparison.rows else EXIT_RUNTIME


def cmd_sweep(args) -> int:
    model = load_model(args.model)
    if args.var not in model.features:
        raise ValueError(f"model does not use feature {args.var!r}")
    if not args.stop > args.start:
        raise ValueError(f"--from must be strictly less than --to, got {args.start} and {args.stop}")
    # unswept features default to the midpoint of their training ranges
    fixed = {}
    for name in model.features:
        if name == args.var:
            continue
        r = model.normalization.ranges[name]
        fixed[name] = 0.5 * (r.x_min + r.x_max)
    if args.fix:
        fixed.update(_parse_kv(args.fix))
    spec = SweepSpec(var=args.var, start=args.start, stop=args.stop,
                     steps=args.steps, fixed=fixed)
    grid = parametric_sweep(model, spec)
    for w in grid.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps(grid.to_dict(), indent=2, sort_keys=True))
    else:
        print(f"sweep {grid.var} from {args.start:g} to {args.stop:g} ({args.steps} points)")
        for v, p in zip(grid.values, grid.predictions):
            print(f"  {grid.var} = {v:10.4g}  ->  fcc = {p:.4f} MPa")
        print(f"endpoint change: {grid.percent_change:+.2f} %")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"sweep_{grid.var}.csv"
        path.write_text(grid.to_csv())
        _say(args, f"wrote {path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = _effective_seed(args)
    records = synth_dataset(args.n, seed, args.noise)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "synth.csv"
    path.write_text(records_to_csv(records))
    _say(args, f"wrote {len(records)} records to {path} (seed {seed}, noise {args.noise:g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="random seed (non-negative; default 0)")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text",
                        help="stdout format")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="directory for report files")
    common.add_argument("--quiet", action="store_true", help="suppress informational output")

    parser = argparse.ArgumentParser(
        prog="cfrpnet",
        description="Predict the axial strength of CFRP-confined concrete cylinders.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common],
                       help="summary statistics and correlation matrix of a dataset")
    p.add_argument("dataset", help="CSV dataset path")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("validate", parents=[common],
                       help="flag records outside the reference ranges")
    p.add_argument("dataset")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("train", parents=[common], help="train one prediction model")
    p.add_argument("dataset")
    p.add_argument("--model", choices=TRAIN_MODELS, required=True)
    p.add_argument("--config", help="JSON file with optimizer/trainer settings")
    p.add_argument("--iterations", type=int, default=None,
                   help="override iteration (epoch) count")
    p.add_argument("--population", type=int, default=None,
                   help="override swarm population size")
    p.add_argument("--neurons", type=int, default=50, help="hidden layer width")
    p.add_argument("--train-fraction", type=float, default=1.0,
                   help="fraction of the file used for training (default: all of it)")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a trained model against a dataset")
    p.add_argument("model", help="model JSON path")
    p.add_argument("dataset")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("predict", parents=[common],
                       help="single-specimen prediction from a trained model")
    p.add_argument("model", help="model JSON path")
    p.add_argument("--input", required=True,
                   help='comma-separated name=value pairs, e.g. "d=150,h=300,nt=0.334,'
                        'ef=231,fco=16.5,eco=0.2,ecc=1.1"')
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("compare", parents=[common],
                       help="train and score a whole model roster on one shared split")
    p.add_argument("--config", required=True, help="experiment config JSON path")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("sweep", parents=[common],
                       help="predict over a grid in one input variable")
    p.add_argument("model", help="model JSON path")
    p.add_argument("--var", choices=("fco", "d", "ef", "nt"), required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--fix", help="fixed values as name=value pairs (default: range midpoints)")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic dataset with known ground truth")
    p.add_argument("--n", type=int, default=708)
    p.add_argument("--noise", type=float, default=0.02,
                   help="multiplicative label noise fraction")
    p.set_defaults(handler=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else EXIT_OK
    try:
        return args.handler(args)
    except DatasetFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
