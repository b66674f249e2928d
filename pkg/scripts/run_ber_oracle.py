#!/usr/bin/env python3
"""Desk-scale BER sweep of the mini-batch sampler vs LMMSE and exact ML.

Writes ber.csv into --out and prints the table.  The 16x4 'oracle'
system is small enough that exhaustive ML is feasible per trial.
"""

import argparse
from dataclasses import replace

from dbpdet.experiments import ber_csv, preset, run_ber_sweep

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--out", default="out/oracle")
    args = ap.parse_args()

    spec = replace(preset("oracle", seed=args.seed),
                   workers=args.workers, out_dir=args.out)
    rows = run_ber_sweep(spec)
    print(ber_csv(rows), end="")
