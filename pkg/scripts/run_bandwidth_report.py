#!/usr/bin/env python3
"""Interconnect bits vs antenna count: closed forms with ledger confirmation."""

import argparse

from dbpdet.experiments import bandwidth_csv, run_bandwidth_report

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b-grid", type=lambda s: [int(t) for t in s.split(",")],
                    default=[32, 64, 128, 256, 512])
    ap.add_argument("--out", default="out/bandwidth")
    args = ap.parse_args()

    points = [{"B": b, "U": 8, "C": 8, "m": 2, "S": 4, "Ng": 4, "omega": 16, "M": 16}
              for b in args.b_grid]
    rows = run_bandwidth_report(points, measure=True, out_dir=args.out)
    print(bandwidth_csv(rows), end="")
    cen = {r.n_ant: r.bits for r in rows if r.mode == "centralized"}
    for mode in ("mini_star", "mini_chain"):
        ratios = [f"B={r.n_ant}: {100 * r.bits / cen[r.n_ant]:.1f}%"
                  for r in rows if r.mode == mode]
        print(f"# {mode} share of centralized -> " + ", ".join(ratios))
