"""Wall-clock estimates for the 100 ueV and 10.34 meV couplings under both Planck conventions."""

import sys

from lhzpulse.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/cost"
    for J in ("100ueV", "10.34meV"):
        print(f"== J = {J}")
        main(["cost", "--J", J, "--jtaum", "11pi/2", "--out", f"{out}/cost_{J}.csv"])
