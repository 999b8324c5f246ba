# -*- coding: utf-8 -*-
# usage: in the zdflow environment, run the script with optional sizes and modulus. e.g.:
#        > conda activate zdflow
#        > python scripts/complexity_scan.py 16 32 64 128 --d 3
# prints a table of elimination work per size and the fitted log-log slope; exits 1 outside the accepted band.

import argparse
import logging
import sys

import numpy as np
import pandas as pd

from zdflow import logs
from zdflow.finder import find_flow
from zdflow.graph import LabelledOpenGraph, random_labelling, random_open_graph

logger = logging.getLogger(__name__)

# accepted band for the log-log slope of field operations against n
MIN_SLOPE, MAX_SLOPE = 2.0, 5.0


def scan(sizes, d: int = 3, repeats: int = 3, seed: int = 0) -> pd.DataFrame:
    """finder work on random dense graphs with a quarter of the vertices as outputs"""
    rng = np.random.default_rng(seed)
    records = []
    for n in sizes:
        for repeat in range(repeats):
            graph = random_open_graph(n, d, rng, density=0.9, n_inputs=0, n_outputs=max(1, n // 4))
            lg = LabelledOpenGraph(graph, random_labelling(graph, rng))
            result = find_flow(lg)
            stats = result.statistics
            records.append(
                {
                    "n": n,
                    "repeat": repeat,
                    "found": result.found,
                    "layers": stats.layers,
                    "systems": stats.systems_solved,
                    "row_operations": stats.row_operations,
                    "field_operations": stats.field_operations,
                }
            )
    return pd.DataFrame.from_records(records)


def fitted_slope(table: pd.DataFrame, column: str = "field_operations") -> float:
    """least squares slope of log(work) against log(n) over the per-size means"""
    means = table.groupby("n")[column].mean()
    slope, _ = np.polyfit(np.log(means.index.to_numpy(dtype=float)), np.log(means.to_numpy(dtype=float)), 1)
    return float(slope)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Elimination cost of the flow finder on random dense graphs.")
    parser.add_argument("sizes", type=int, nargs="*", default=[16, 32, 64, 128])
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    table = scan(args.sizes, args.d, args.repeats, args.seed)
    summary = table.groupby("n")[["layers", "row_operations", "field_operations"]].mean()
    print(summary.to_string())
    for column in ("row_operations", "field_operations"):
        print(f"{column} slope: {fitted_slope(table, column):.2f}")
    return 0 if MIN_SLOPE <= fitted_slope(table) <= MAX_SLOPE else 1


if __name__ == "__main__":
    logs.setup_logging(default_level=logging.WARNING)
    sys.exit(main())
