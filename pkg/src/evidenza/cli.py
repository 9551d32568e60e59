"""Command-line entry point.

Subcommands::

    evidenza estimate     one run, printed as JSON
    evidenza replicate    r replicates as CSV or JSON, with mean/rmse/mape rows
    evidenza convergence  RMSE over an n-grid and the fitted log-log slope
    evidenza lorenz       simulated Lorenz-curve ladder (s_k, L_k)

Settings resolve as: built-in defaults, then ``$EVIDENZA_SEED``, then the
``--config`` JSON file, then explicit flags.  Exit status is 0 on success,
2 on a usage error and 3 when an estimator fails at run time.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import fields

from . import bench
from . import estimators as est
from .config import ESTIMATORS, OUTPUT_FORMATS, ExperimentConfig
from .errors import ConfigError, EvidenzaError
from .models import MODELS, get_model
from .rng import SeededStream

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
SEED_ENV = "EVIDENZA_SEED"

REPLICATE_COLUMNS = [
    "replicate_index", "estimator", "model", "m", "n", "seed", "z_hat", "log_z_hat", "abs_rel_err",
]


def fmt(x):
    """17 significant digits: every double round-trips exactly."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _grid(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None
    if len(values) < 3:
        raise argparse.ArgumentTypeError("need at least 3 grid entries")
    if any(b <= a for a, b in zip(values, values[1:])) or values[0] < 1:
        raise argparse.ArgumentTypeError("grid must be strictly increasing positive integers")
    return values


# Flag -> ExperimentConfig field.
_FLAG_FIELDS = {
    "model": "model_id",
    "estimator": "estimator_id",
    "m": "m",
    "n": "n",
    "live": "n_live",
    "q": "q",
    "eps": "epsilon",
    "reps": "replicates",
    "seed": "seed",
    "format": "output_format",
    "out": "output_path",
    "levels": "levels",
    "max_iter": "max_iter",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("experiment")
    # Every default is None so we can tell which flags were given.
    g.add_argument("--config", help="JSON file with ExperimentConfig fields")
    g.add_argument("--model", choices=sorted(MODELS))
    g.add_argument("--estimator", choices=sorted(ESTIMATORS))
    g.add_argument("--m", type=_positive_int, help="prior draws (qis) or draws per level (vertical)")
    g.add_argument("--n", type=_positive_int, help="grid points or plain sample count")
    g.add_argument("--live", type=_positive_int, help="nested-sampling live points")
    g.add_argument("--q", type=_probability, help="geometric ladder ratio")
    g.add_argument("--eps", type=float, help="nested-sampling stopping threshold")
    g.add_argument("--max-iter", dest="max_iter", type=_positive_int)
    g.add_argument("--levels", type=_positive_int, help="ladder levels (vertical, lorenz)")
    g.add_argument("--seed", type=_seed, help=f"master seed (default ${SEED_ENV} or 0)")
    g.add_argument("--format", choices=OUTPUT_FORMATS)
    g.add_argument("--out", help="output file (default: standard output)")
    g.add_argument("--workers", type=_positive_int, default=1, help="processes for replication")

    parser = argparse.ArgumentParser(
        prog="evidenza", description="Bayesian evidence estimators and benchmark harness."
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("estimate", parents=[common], help="run one estimate and print it as JSON")
    p = sub.add_parser("replicate", parents=[common], help="replicate an estimator and summarize")
    p.add_argument("--reps", type=_positive_int)
    p = sub.add_parser("convergence", parents=[common], help="RMSE slope over an n-grid")
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--ngrid", type=_grid, required=True, help='e.g. "16,32,64,128,256"')
    sub.add_parser("lorenz", parents=[common], help="simulate the likelihood Lorenz ladder")
    return parser


def resolve_config(args, environ=None):
    """Merge defaults, environment, config file and flags into a config."""
    environ = os.environ if environ is None else environ
    data = {}
    if environ.get(SEED_ENV):
        try:
            data["seed"] = _seed(environ[SEED_ENV])
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"${SEED_ENV}: {exc}") from None
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        ExperimentConfig.from_dict(raw)  # rejects unknown fields and bad values
        # Only keys present in the file override; absent keys keep lower layers.
        data.update(raw)
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[name] = value
    if "model_id" not in data:
        raise ConfigError("--model is required (or model_id in --config)")
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in data.items() if k in known})


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _grid_columns(config):
    # What the m and n columns mean depends on the estimator family.
    e = config.estimator_id
    if e.startswith("nested"):
        return config.m, config.n_live
    if e.startswith("vertical"):
        return config.m, config.levels
    return config.m, config.n


def cmd_estimate(config):
    model = get_model(config.model_id)
    e = bench.run_estimator(config, model, SeededStream(config.seed, 0))
    record = {"model": config.model_id, **e.to_dict()}
    record["budget"] = {**bench._budget(config), **e.budget}
    _emit(json.dumps(record, indent=2) + "\n", config.output_path)


def replicate_csv(config, report):
    m_col, n_col = _grid_columns(config)
    errs = report.abs_rel_err
    rows = []
    for j in range(report.replicates):
        rows.append([
            j, report.estimator, report.model, m_col, n_col, config.seed,
            fmt(report.z[j]), fmt(report.log_z[j]), "" if errs is None else fmt(errs[j]),
        ])
    for label, value in (("mean", report.mean_z), ("rmse", report.rmse), ("mape", report.mape)):
        rows.append([label, report.estimator, report.model, m_col, n_col, config.seed, fmt(value), "", ""])
    return _csv_text(REPLICATE_COLUMNS, rows)


def cmd_replicate(config, workers=1):
    report = bench.replicate(config, workers=workers)
    if config.output_format == "csv":
        text = replicate_csv(config, report)
    else:
        text = json.dumps({"config": config.to_dict(), **report.to_dict()}, indent=2) + "\n"
    _emit(text, config.output_path)


def cmd_convergence(config, n_grid, workers=1):
    fit = bench.slope_fit(config, n_grid, workers=workers)
    sys.stdout.write(json.dumps(fit.to_dict(), indent=2) + "\n")
    if config.output_path:
        if config.output_format == "csv":
            rows = [[n, fmt(r), fmt(a)] for n, r, a in zip(fit.n_grid, fit.rmse, fit.mape)]
            text = _csv_text(["n", "rmse", "mape"], rows)
        else:
            text = json.dumps(fit.to_dict(), indent=2) + "\n"
        _emit(text, config.output_path)


def cmd_lorenz(config):
    model = get_model(config.model_id)
    simple, asym, trace = est.vertical_geometric(
        model, config.q, config.levels, config.m, SeededStream(config.seed, 0)
    )
    if config.output_format == "json":
        payload = {
            "model": config.model_id,
            "q": config.q,
            "m_per_level": config.m,
            "level": trace.levels.tolist(),
            "s": trace.s.tolist(),
            "log_L": trace.log_l.tolist(),
            "Z_N": simple.z,
            "Z_inf": asym.z,
            "log_Z_N": simple.log_z,
            "log_Z_inf": asym.log_z,
        }
        _emit(json.dumps(payload, indent=2) + "\n", config.output_path)
        return
    rows = [
        [int(k), fmt(s), fmt(math.exp(ll)), fmt(ll)]
        for k, s, ll in zip(trace.levels, trace.s, trace.log_l)
    ]
    rows.append(["Z_N", "", fmt(simple.z), fmt(simple.log_z)])
    rows.append(["Z_inf", "", fmt(asym.z), fmt(asym.log_z)])
    _emit(_csv_text(["level", "s", "L_k", "log_L_k"], rows), config.output_path)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"evidenza: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "estimate":
            cmd_estimate(config)
        elif args.command == "replicate":
            cmd_replicate(config, workers=args.workers)
        elif args.command == "convergence":
            cmd_convergence(config, args.ngrid, workers=args.workers)
        elif args.command == "lorenz":
            cmd_lorenz(config)
    except ConfigError as exc:
        print(f"evidenza: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvidenzaError, ArithmeticError, ValueError) as exc:
        print(f"evidenza: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
