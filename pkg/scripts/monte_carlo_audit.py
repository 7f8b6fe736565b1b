"""Monte Carlo audits for Poisson and Gaussian learning, plus a time-step bias study."""

import argparse
import sys

from seqlearn.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/monte_carlo_audit")
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=42)
    a = ap.parse_args()
    sys.exit(main(["mc", "--out", a.out, "--paths", str(a.paths), "--dt", str(a.dt),
                   "--seed", str(a.seed)]))
