#!/usr/bin/env python3
"""Run the three preset lattices at full resolution and write all outputs.

    python3 scripts/run_fig2.py [--out out/fig2] [--threads N] [--points 25] [--scale 8]

Prints the wall time per preset and the fig2c values at delta_e = 0.2 µeV,
filter 4 µeV.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from qdrelay.sweep import default_threads, emit_outputs, preset_spec, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/fig2"))
    ap.add_argument("--threads", type=int, default=default_threads())
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--scale", type=int, default=8)
    args = ap.parse_args()

    for name in ("fig2a", "fig2b", "fig2c"):
        spec = preset_spec(name, points=args.points)
        t0 = time.perf_counter()
        table = run_sweep(spec, threads=args.threads)
        dt = time.perf_counter() - t0
        emit_outputs(table, args.out, scale=args.scale)
        lo = min(r.fidelity for r in table.rows)
        hi = max(r.fidelity for r in table.rows)
        print(f"{name}: {len(table.rows)} rows in {dt:.1f} s, fidelity {lo:.4f} .. {hi:.4f}")
        if name == "fig2c":
            a1, a2 = spec.axis1.values, spec.axis2.values
            i, j = int(np.argmin(abs(a1 - 4.0))), int(np.argmin(abs(a2 - 0.2)))
            for d in spec.depths:
                print(f"  L={d} at filter {a1[i]:g} µeV, delta_e {a2[j]:g} µeV: {table.grid(d)[j, i]:.4f}")
    print(f"outputs in {args.out}")


if __name__ == "__main__":
    main()
