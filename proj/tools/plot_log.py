#!/usr/bin/env python3
# Copyright 2026 The qdnn Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Plots training logs written by `qdnn train` or `qdnn grid`.

Each log becomes one line per panel (NLL and error, train solid, validation
dashed) against epochs. Diverged rows are drawn as a cross at the last finite
point.

    tools/plot_log.py results/mnist_classify.csv results/mnist_classify_sgd.csv -o nll.png
"""

import argparse
import csv
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_log(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    cols = {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}
    return cols


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("logs", nargs="+", help="CSV logs")
    ap.add_argument("-o", "--out", default="training.png", help="output image")
    ap.add_argument("--log-y", action="store_true", help="logarithmic NLL axis")
    ap.add_argument("--labels", help="comma-separated legend labels")
    args = ap.parse_args()

    labels = args.labels.split(",") if args.labels else [os.path.splitext(os.path.basename(p))[0] for p in args.logs]
    if len(labels) != len(args.logs):
        ap.error("--labels needs one entry per log")

    fig, (ax_nll, ax_err) = plt.subplots(1, 2, figsize=(11, 4))
    for path, label in zip(args.logs, labels):
        cols = read_log(path)
        if not cols:
            continue
        epochs = cols["epoch"]
        for ax, key in ((ax_nll, "nll"), (ax_err, "err")):
            line = ax.plot(epochs, cols["train_" + key], label=label)[0]
            valid = cols["valid_" + key]
            if any(math.isfinite(v) for v in valid):
                ax.plot(epochs, valid, linestyle="--", color=line.get_color())
            finite = [(e, v) for e, v, d in zip(epochs, cols["train_" + key], cols["diverged"]) if math.isfinite(v) and not d]
            if any(cols["diverged"]) and finite:
                ax.plot(*finite[-1], marker="x", markersize=9, color=line.get_color())

    ax_nll.set(xlabel="epoch", ylabel="NLL per sample")
    ax_err.set(xlabel="epoch", ylabel="error")
    if args.log_y:
        ax_nll.set_yscale("log")
    ax_nll.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(args.out)


if __name__ == "__main__":
    main()
