#!/usr/bin/env python3
"""BER vs sampling iterations for several mini-batch sizes (32x8, 16-QAM).

Common random numbers across the batch-size grid; one long chain per
trial supplies every prefix length.
"""

import argparse

from dbpdet.detectors import DetectorConfig
from dbpdet.experiments import SystemSpec, run_convergence

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", type=float, default=5.0)
    ap.add_argument("--trials", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--out", default="out/convergence")
    args = ap.parse_args()

    system = SystemSpec(32, 8, 8, 16)
    base = DetectorConfig(sampling_iterations=12, seed=args.seed)
    rows, _ = run_convergence(system, base, m_grid=[1, 2, 4, 8],
                              s_grid=list(range(2, 13)), snr_db=args.snr,
                              n_trials=args.trials, seed=args.seed,
                              workers=args.workers, out_dir=args.out)
    print("m,S,ber")
    for r in rows:
        print(f"{r.batch_size},{r.sampling_iterations},{r.ber:.6g}")
