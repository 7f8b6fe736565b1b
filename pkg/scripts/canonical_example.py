"""Values, decision-time laws and plots for the canonical binary example."""

import argparse
import sys

from seqlearn.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/canonical_example")
    sys.exit(main(["example1", "--out", ap.parse_args().out]))
