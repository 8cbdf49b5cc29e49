#!/usr/bin/env python3
"""Spoken Arabic digit benchmark.

Converts the public UCI text files (``Train_Arabic_Digit.txt`` and
``Test_Arabic_Digit.txt``: blank-line separated blocks of 13 MFCCs per frame,
660 training and 220 test blocks per digit in digit order) into the JSONL
dataset format, then trains with a width-3 sliding window, 100 hidden units
and lambda picked on a held-out 20% of the training set.

    python scripts/spoken_digits.py convert RAW_DIR OUT_DIR
    python scripts/spoken_digits.py run OUT_DIR/train.jsonl OUT_DIR/test.jsonl
"""
import argparse
import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from hulm.data import Dataset, apply_window, kfold, load_dataset, parse_window, save_dataset
from hulm.learning import train_sgd, tune_lambda
from hulm.metrics import evaluate
from hulm.model import INIT_SCHEMES, Hyperparams, TimeSeries

BLOCKS_PER_DIGIT = {"train": 660, "test": 220}
REPS_PER_SPEAKER = 10


def read_blocks(path):
    blocks, current = [], []
    for line in Path(path).read_text().splitlines():
        values = line.split()
        if values:
            current.append([float(v) for v in values])
        elif current:
            blocks.append(np.array(current))
            current = []
    if current:
        blocks.append(np.array(current))
    return blocks


def convert(raw_dir, out_dir):
    raw_dir, out_dir = Path(raw_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split, name in (("train", "Train_Arabic_Digit.txt"), ("test", "Test_Arabic_Digit.txt")):
        blocks = read_blocks(raw_dir / name)
        per_digit = BLOCKS_PER_DIGIT[split]
        if len(blocks) != 10 * per_digit:
            raise SystemExit(f"{name}: expected {10 * per_digit} blocks, found {len(blocks)}")
        series = []
        for i, frames in enumerate(blocks):
            digit, within = divmod(i, per_digit)
            series.append(TimeSeries(frames, digit, f"{split}-spk{within // REPS_PER_SPEAKER}"))
        data = Dataset(tuple(series), 10, 13, tuple(str(d) for d in range(10)))
        save_dataset(data, out_dir / f"{split}.jsonl")
        print(f"{split}: {len(data)} series, mean length {np.mean([s.T for s in data]):.1f}")


def run(train_path, test_path, hidden, grid, epochs, seed, init, out):
    window = parse_window("slide:3")
    train = apply_window(load_dataset(train_path), window)
    test = apply_window(load_dataset(test_path), window)
    hyper = Hyperparams(hidden_units=hidden, epochs=epochs, seed=seed, init_scheme=init)
    start = time.time()
    tr, va = kfold(train, 5, seed=seed).split(0)
    lam = tune_lambda(train.subset(tr), train.subset(va), hyper, grid)
    print(f"lambda {lam:g} chosen in {time.time() - start:.0f}s")
    report = train_sgd(train, replace(hyper, l2_lambda=lam))
    result = evaluate(report.params, test)
    print(result.table())
    print(f"test error {100 * result.error_rate:.2f}% after {time.time() - start:.0f}s")
    if out:
        Path(out).write_text(json.dumps({"lambda": lam, **result.to_dict()}, indent=2) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("convert")
    p.add_argument("raw_dir")
    p.add_argument("out_dir")
    p = sub.add_parser("run")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--grid", default="0,1e-4,1e-3,1e-2,1e-1")
    p.add_argument("--epochs", type=int, default=Hyperparams().epochs)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=INIT_SCHEMES, default=Hyperparams().init_scheme)
    p.add_argument("--out")
    args = parser.parse_args()
    if args.cmd == "convert":
        convert(args.raw_dir, args.out_dir)
    else:
        grid = [float(v) for v in args.grid.split(",")]
        run(args.train, args.test, args.hidden, grid, args.epochs, args.seed, args.init, args.out)


if __name__ == "__main__":
    main()
