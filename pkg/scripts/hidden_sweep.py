#!/usr/bin/env python3
"""Cross-validated error as a function of the number of hidden units.

    python scripts/hidden_sweep.py data.jsonl --hidden 1,2,5,10,20 --folds 5
"""
import argparse
import time

from hulm.data import kfold, load_dataset, parse_window
from hulm.metrics import cross_validate
from hulm.model import Hyperparams


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("data")
    parser.add_argument("--hidden", default="1,2,5,10,20")
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=Hyperparams().epochs)
    parser.add_argument("--l2", type=float, default=Hyperparams().l2_lambda)
    parser.add_argument("--window")
    parser.add_argument("--standardize", action="store_true")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    data = load_dataset(args.data)
    plan = kfold(data, args.folds, seed=0)
    window = parse_window(args.window) if args.window else None
    print("hidden  error   seconds")
    for H in (int(h) for h in args.hidden.split(",")):
        start = time.time()
        hyper = Hyperparams(hidden_units=H, epochs=args.epochs, l2_lambda=args.l2)
        report = cross_validate(data, plan, hyper, "hulm", window=window, standardize=args.standardize,
                                threads=args.threads)
        print(f"{H:6d}  {report.error_rate:.4f}  {time.time() - start:7.1f}", flush=True)


if __name__ == "__main__":
    main()
