"""
Command-line interface.

Exit codes:

- 0: success
- 1: usage error
- 2: data or model-file error
- 3: numerical failure
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from .errors import ConvergenceError, DegenerateDataError, ParameterError, StructureError, \
    TrainingDivergenceError
from .evaluation import loglik_per_instance, relative_loglik, tau_matrix_distance
from .greedy import fit_greedy
from .marginals import fit_marginals, to_uniform
from .persist import DataFileError, FittedModel, load_model, read_csv, save_model, write_csv
from .rl import RlTrainConfig, fit_rl
from .sampling import sample
from .vector import VectorTrainConfig, fit_vector
from .vine import count_structures, validate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonneg_int(text):
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return val


def build_parser():
    p = _Parser(prog="vinelearn", description="Learn regular-vine copulas and sample from them.")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit a vine to a CSV table")
    f.add_argument("data", help="CSV with a header row and numeric columns")
    f.add_argument("-o", "--output", required=True, help="model JSON to write")
    f.add_argument("--method", choices=("greedy", "vector", "rl"), default="greedy")
    f.add_argument("--truncate", type=int, default=None, metavar="K",
                   help="fit only the first K trees")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--epochs", type=int, default=50)
    f.add_argument("--lr", type=float, default=None, help="learning rate")
    f.add_argument("--batch-size", type=int, default=None)
    f.add_argument("--lam", type=float, default=None,
                   help="penalty weight (vector: cycles, default d; rl: edges, default 0.1)")
    f.add_argument("--mu", type=float, default=1.0, help="vector sparsity weight")
    f.add_argument("--samples", type=int, default=16, help="vector: vectors per step")
    f.add_argument("--gamma", type=float, default=0.95, help="rl: discount")
    f.add_argument("--rollouts", type=int, default=16, help="rl: episodes per batch")
    f.add_argument("--threads", type=int, default=None,
                   help="accepted for compatibility; fitting runs in one thread")

    s = sub.add_parser("sample", help="draw synthetic rows from a model")
    s.add_argument("--model", required=True)
    s.add_argument("-n", type=_nonneg_int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)

    e = sub.add_parser("evaluate", help="score a model against data")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--synthetic", help="synthetic CSV for the tau-matrix distance")
    e.add_argument("--true-model", help="reference model for the relative log-likelihood")

    v = sub.add_parser("validate", help="check a model file's vine structure")
    v.add_argument("model")

    c = sub.add_parser("count-structures", help="number of regular vines on d variables")
    c.add_argument("d", type=int)
    return p


def _fit(args, out):
    names, data = read_csv(args.data)
    n, d = data.shape
    if d < 2:
        raise DataFileError(f"{args.data}: need at least 2 columns, got {d}")
    if n < 10:
        raise DataFileError(f"{args.data}: need at least 10 rows, got {n}")
    t0 = time.perf_counter()
    marginals = fit_marginals(data)
    u = to_uniform(marginals, data)
    if args.method == "greedy":
        structure = fit_greedy(u, truncation=args.truncate)
    elif args.method == "vector":
        cfg = VectorTrainConfig(lam=args.lam, mu=args.mu, samples=args.samples,
                                epochs=args.epochs, truncation=args.truncate, seed=args.seed)
        if args.lr is not None:
            cfg.lr = args.lr
        if args.batch_size is not None:
            cfg.batch_size = args.batch_size
        structure = fit_vector(u, cfg)
    else:
        cfg = RlTrainConfig(lam=0.1 if args.lam is None else args.lam, gamma=args.gamma,
                            rollouts=args.rollouts, epochs=args.epochs,
                            truncation=args.truncate, seed=args.seed)
        if args.lr is not None:
            cfg.lr = args.lr
        if args.batch_size is not None:
            cfg.batch_size = args.batch_size
        structure = fit_rl(u, cfg)
    elapsed = time.perf_counter() - t0
    model = FittedModel(structure, marginals, names)
    save_model(model, args.output)
    print(f"method: {args.method}", file=out)
    print(f"edges: {structure.n_edges}", file=out)
    print(f"loglik_per_instance: {loglik_per_instance(structure, marginals, data):.6f}", file=out)
    print(f"wall_time_s: {elapsed:.3f}", file=out)


def _sample(args, out):
    model = load_model(args.model)
    rows = sample(model.structure, model.marginals, args.n, seed=args.seed) if args.n else \
        np.empty((0, model.d))
    write_csv(args.output, model.column_names, rows)
    print(f"wrote {args.n} rows to {args.output}", file=out)


def _evaluate(args, out):
    model = load_model(args.model)
    _, data = read_csv(args.data)
    print(f"loglik_per_instance: {loglik_per_instance(model.structure, model.marginals, data):.6f}",
          file=out)
    if args.true_model:
        truth = load_model(args.true_model)
        # both models scored on the copula scale of the evaluated model
        u = to_uniform(model.marginals, data)
        print(f"relative_loglik_pct: {relative_loglik(model.structure, truth.structure, u):.4f}",
              file=out)
    if args.synthetic:
        _, syn = read_csv(args.synthetic)
        print(f"tau_matrix_distance: {tau_matrix_distance(data, syn):.6f}", file=out)


def _validate(args, out):
    model = load_model(args.model)
    problems = validate(model.structure)
    for msg in problems:
        print(msg, file=out)
    if problems:
        return EXIT_DATA
    print(f"valid: d={model.d}, truncation={model.structure.truncation}, "
          f"edges={model.structure.n_edges}", file=out)
    return EXIT_OK


def _count(args, out):
    if args.d < 2:
        raise ValueError("d must be >= 2")
    print(count_structures(args.d), file=out)


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"fit": _fit, "sample": _sample, "evaluate": _evaluate,
                "validate": _validate, "count-structures": _count}
    try:
        code = handlers[args.command](args, out)
    except (OSError, DataFileError, StructureError, ParameterError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, TrainingDivergenceError, ZeroDivisionError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
