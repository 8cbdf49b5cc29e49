"""Command-line entry point: ``hulm {train,predict,eval,cv,verify,synth,export-weights}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/divergence
error, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data as dio
from .errors import (BudgetError, DivergedError, HulmError, InvalidArgumentError, NumericRangeError,
                     ParseError)
from .learning import train_sgd, tune_lambda
from .metrics import cross_validate, evaluate, one_vs_rest_detect, posterior
from .model import INIT_SCHEMES, HulmParams, Hyperparams
from .naive import naive_train
from .oracle import OracleBudget
from .serialize import load_model, save_model

log = logging.getLogger("hulm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_hyper(p):
    defaults = Hyperparams()
    p.add_argument("--model", choices=("hulm", "naive"), default="hulm")
    p.add_argument("--hidden", type=int, default=defaults.hidden_units, help="number of hidden units H")
    p.add_argument("--lambda", dest="lam", type=float, default=defaults.l2_lambda, help="L2 weight")
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    p.add_argument("--lr-decay", type=float, default=defaults.lr_decay)
    p.add_argument("--epochs", type=int, default=defaults.epochs)
    p.add_argument("--batch", type=int, default=defaults.batch_size)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--init", choices=INIT_SCHEMES, default=defaults.init_scheme,
                   help="fan_in: W, V variance 1/D, 1/K; fixed: variance 1e-3 throughout")
    p.add_argument("--window", default="none", help="none, stack:w or slide:w")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hulm", description="Hidden-unit logistic model for time-series classification")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("data")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", help="training report path (default: stdout)")
    p.add_argument("--grid", type=_float_list, help="lambda grid tuned on a held-out 20%% split")
    _add_hyper(p)

    p = sub.add_parser("predict", help="posterior for every series")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--out")

    p = sub.add_parser("eval", help="error rate and confusion of a trained model")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--out")

    p = sub.add_parser("cv", help="k-fold cross-validation or one-vs-rest detection")
    p.add_argument("data")
    p.add_argument("--out")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--grouped", action="store_true")
    p.add_argument("--detect", type=_int_list, help="target classes for one-vs-rest detection")
    _add_hyper(p)

    p = sub.add_parser("verify", help="oracle and finite-difference checks")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--grad-instances", type=int, default=50)
    p.add_argument("--max-hidden", type=int, default=3)
    p.add_argument("--max-length", type=int, default=4)
    p.add_argument("--max-states", type=int, default=OracleBudget().max_states)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("task", choices=("order", "hmm", "mean"))
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--length", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export-weights", help="|W| row of the unit with the largest V for a label")
    p.add_argument("model")
    p.add_argument("--label", type=int, required=True)
    p.add_argument("--out")
    return parser


def _hyper(args) -> Hyperparams:
    return Hyperparams(hidden_units=args.hidden, l2_lambda=args.lam, learning_rate=args.lr,
                       lr_decay=args.lr_decay, epochs=args.epochs, batch_size=args.batch, seed=args.seed,
                       init_scheme=args.init)


def _emit(text: str, path=None):
    if path:
        Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _preprocess(data, preprocess: dict):
    window = dio.parse_window(preprocess.get("window"))
    data = dio.apply_window(data, window)
    if "mean" in preprocess:
        st = dio.Standardizer(np.array(preprocess["mean"]), np.array(preprocess["std"]))
        data = st.apply(data)
    return data


def cmd_train(args) -> int:
    data = dio.load_dataset(args.data)
    window = dio.parse_window(args.window)
    preprocess = {"window": args.window} if window else {}
    data = dio.apply_window(data, window)
    if args.standardize:
        st = dio.fit_standardizer(data)
        data = st.apply(data)
        preprocess.update(mean=st.mean.tolist(), std=st.std.tolist())
    hyper = _hyper(args)
    if args.grid:
        plan = dio.kfold(data, 5, seed=hyper.seed)
        tr, va = plan.split(0)
        lam = tune_lambda(data.subset(tr), data.subset(va), hyper, args.grid) if args.model == "hulm" \
            else _tune_naive(data.subset(tr), data.subset(va), hyper, args.grid)
        log.info("selected lambda %g", lam)
        hyper = replace(hyper, l2_lambda=lam)
    report = train_sgd(data, hyper) if args.model == "hulm" else naive_train(data, hyper, return_report=True)
    params, out = report.params, report.to_dict()
    final = evaluate(params, data)
    out.update(model=args.model, l2_lambda=hyper.l2_lambda, final_train_error=final.error_rate)
    save_model(args.out, params, preprocess)
    _emit(json.dumps(out, indent=2), args.report)
    return EXIT_OK


def _tune_naive(train, val, hyper, grid):
    best_lam, best_err = None, np.inf
    for lam in sorted(grid, reverse=True):
        params = naive_train(train, replace(hyper, l2_lambda=lam))
        err = evaluate(params, val).error_rate
        if err < best_err:
            best_lam, best_err = lam, err
    return best_lam


def _load_compatible(args):
    params, preprocess = load_model(args.model)
    data = _preprocess(dio.load_dataset(args.data), preprocess)
    if data.D != params.D:
        raise InvalidArgumentError(f"model expects D={params.D}, dataset has D={data.D}")
    return params, data


def cmd_predict(args) -> int:
    params, data = _load_compatible(args)
    lines = []
    for s in data:
        p = posterior(params, s)
        lines.append(json.dumps({"pred": int(np.argmax(p)), "posterior": p.tolist()}))
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    params, data = _load_compatible(args)
    if not data.is_labeled():
        raise InvalidArgumentError("evaluation needs labeled data")
    if data.K > params.K:
        raise InvalidArgumentError(f"dataset has K={data.K}, model has K={params.K}")
    data = dio.Dataset(data.series, params.K, data.D)
    report = evaluate(params, data)
    _emit(report.to_json() if args.out else report.table(), args.out)
    return EXIT_OK


def cmd_cv(args) -> int:
    data = dio.load_dataset(args.data)
    if args.grouped and any(g is None for g in data.groups):
        raise InvalidArgumentError("--grouped needs a group id on every record")
    hyper = _hyper(args)
    window = dio.parse_window(args.window)
    plan = dio.kfold(data, args.folds, args.grouped, seed=hyper.seed)
    if args.detect:
        reports = [one_vs_rest_detect(data, k, plan, hyper, window, args.standardize, args.threads,
                                      model_kind=args.model) for k in args.detect]
        text = json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2) if args.out \
            else "\n\n".join(r.table() for r in reports)
    else:
        report = cross_validate(data, plan, hyper, args.model, window, args.standardize, args.threads)
        text = report.to_json() if args.out else report.table()
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verification

    budget = OracleBudget(args.max_states)
    results = run_verification(args.instances, args.grad_instances, args.max_hidden, args.max_length,
                               args.seed, budget)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.worst / r.tolerance)
        log.error("verification failed; worst discrepancy %.3e in %s", worst.worst, worst.name)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.task == "order":
        data = dio.synth_order_task(args.n_per_class, args.length, args.noise, args.seed)
    elif args.task == "hmm":
        data = dio.synth_hmm_task(args.n_per_class, args.length, args.seed)
    else:
        data = dio.synth_mean_task(args.n_per_class, args.length, noise_sigma=args.noise, seed=args.seed)
    dio.save_dataset(data, args.out)
    return EXIT_OK


def exported_weights(params: HulmParams, label: int) -> np.ndarray:
    """|W| of the hidden unit with the largest V for ``label`` (lowest index on ties)."""
    if not 0 <= label < params.K:
        raise InvalidArgumentError(f"label {label} outside [0, {params.K})")
    h = int(np.argmax(params.V[:, label]))
    return np.abs(params.W[h])


def cmd_export_weights(args) -> int:
    params, _ = load_model(args.model)
    if not isinstance(params, HulmParams):
        raise InvalidArgumentError("export-weights needs a hulm model")
    w = exported_weights(params, args.label)
    _emit("\n".join(repr(float(v)) for v in w), args.out)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train, "predict": cmd_predict, "eval": cmd_eval, "cv": cmd_cv,
    "verify": cmd_verify, "synth": cmd_synth, "export-weights": cmd_export_weights,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"hulm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (DivergedError, NumericRangeError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except BudgetError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (ParseError, InvalidArgumentError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except HulmError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
