"""Schedule II at full and reduced N (and N_S), reporting the final-success ratio."""

import argparse
import math

from lhzpulse.annealing import RunConfig, run_lumped
from lhzpulse.cli import parse_angle
from lhzpulse.lhz_mapping import encode, random_problem

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--grid", default="100000:50,20000:50,20000:10", help="comma list of N:N_S")
    ap.add_argument("--jtaum", default="pi/2")
    ap.add_argument("--scheme", default="lumped")
    a = ap.parse_args()
    grid = [tuple(int(x) for x in g.split(":")) for g in a.grid.split(",")]
    jt = parse_angle(a.jtaum)
    print("seed," + ",".join(f"N{n}_NS{ns}" for n, ns in grid) + ",ratio_second_to_first")
    for seed in (int(s) for s in a.seeds.split(",")):
        p = random_problem(4, seed)
        lay, ham = encode(p)
        vals = [
            run_lumped(RunConfig(N=n, N_S=ns, J_tau_M=jt, schedule="II", seed=seed, scheme=a.scheme), ham, p, lay).final_success
            for n, ns in grid
        ]
        ratio = vals[1] / vals[0] if vals[0] > 0 else math.inf
        print(f"{seed}," + ",".join(f"{v:.6f}" for v in vals) + f",{ratio:.4f}")
