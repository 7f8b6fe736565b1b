"""Finite-difference first-passage law against the eigenfunction series as dt shrinks."""

import argparse

from seqlearn import fpt


def main(horizon: float):
    pb = fpt.FptProblem(horizon=horizon)
    ref = fpt.fpt_series(pb)
    print("dt        sup|F_pde - F_series|")
    for dt in (4e-3, 2e-3, 1e-3, 5e-4):
        print(f"{dt:<9g} {fpt.sup_distance(fpt.fpt_pde(pb, dt=dt), ref):.3e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=float, default=4.0)
    main(ap.parse_args().horizon)
