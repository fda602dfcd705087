#!/usr/bin/env python3
"""Plot training metric curves from sfvlab metrics.csv files.

Usage: plot_curves.py out.png run_dir [run_dir ...]
Each run directory must contain a metrics.csv written by `sfvlab train`.
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> int:
    if len(sys.argv) < 3:
        print(__doc__, file=sys.stderr)
        return 1
    out_path, runs = sys.argv[1], sys.argv[2:]
    fig, ax = plt.subplots(figsize=(7, 4))
    for run in runs:
        path = Path(run) / "metrics.csv"
        with path.open() as f:
            rows = list(csv.DictReader(f))
        ax.plot(
            [int(r["iteration"]) for r in rows],
            [float(r["avg_normalized_return"]) for r in rows],
            label=Path(run).name,
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("avg normalized return")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    return 0


if __name__ == "__main__":
    sys.exit(main())
