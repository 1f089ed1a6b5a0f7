"""Success-probability trajectories for schedules I/II/III on seeded 6-qubit instances.

Writes one trajectory CSV per (seed, schedule) plus summary.csv and a plotting
script into --out.  Defaults reproduce the N=1e5, N_S=50, J*tau_M=pi/2 setting.
"""

import argparse
import sys

from lhzpulse.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--N", default="100000")
    ap.add_argument("--NS", default="50")
    ap.add_argument("--jtaum", default="pi/2")
    ap.add_argument("--scheme", default="lumped")
    ap.add_argument("--workers", default="3")
    ap.add_argument("--out", default="runs/schedules")
    a = ap.parse_args()
    sys.exit(
        main(
            ["sweep", "--seeds", a.seeds, "--schedules", "I,II,III", "--Ns", a.N, "--NS", a.NS,
             "--jtaum", a.jtaum, "--scheme", a.scheme, "--workers", a.workers, "--out", a.out]
        )
    )
