"""Optimal target across priors and discount rates (binary matching payoff, quadratic H)."""

import argparse
import csv
from pathlib import Path

import numpy as np

from seqlearn import target as tg
from seqlearn.measure import DecisionUtility, info_cost, quadratic


def main(out: Path, n: int):
    F, H = DecisionUtility.binary_match(), quadratic()
    out.mkdir(parents=True, exist_ok=True)
    priors = np.linspace(0.5, 0.85, n)
    rows = tg.prior_sweep(F, H, priors, 1.0, 1.0)
    with (out / "prior_sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["prior", "value", "info_cost", "mean_wait", "lambda"])
        for r in rows:
            w.writerow([r["prior"], r["value"], r["info_cost"], r["mean_wait"], r["lambda"]])
    print("comparative static holds:", tg.comparative_static_holds(rows))
    with (out / "rate_sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rate", "upper_atom", "value", "info_cost"])
        for rate in np.geomspace(0.01, 20, n):
            s = tg.solve_target(F, H, 0.5, 1.0, rho_rate=float(rate))
            w.writerow([rate, max(p[1] for p in s.lottery.posteriors), s.value,
                        info_cost(s.lottery, H)])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/target_sweep")
    ap.add_argument("--n", type=int, default=15)
    a = ap.parse_args()
    main(Path(a.out), a.n)
