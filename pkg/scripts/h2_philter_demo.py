"""Sample the H2 excited-state energy with each protocol and print the reports."""

import argparse
import json

import numpy as np

from philter.amplify import EnergyWindow
from philter.protocols import iterative_philter, philter, qphilter
from philter.spectral import h2_model, hf_ansatz


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=14)
    ap.add_argument("--t", type=int, default=7)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    model, ansatz, window = h2_model(), hf_ansatz(), EnergyWindow("00")
    runs = {
        "philter": lambda rng: philter(model, ansatz, window, args.m, args.t, rng),
        "iterative": lambda rng: iterative_philter(model, ansatz, window, args.m, args.t, rng),
        "qphilter": lambda rng: qphilter(model, ansatz, window, args.m, rng),
    }
    for name, fn in runs.items():
        rep = fn(np.random.default_rng(args.seed))
        print(name, json.dumps(rep.to_dict(), indent=2))


if __name__ == "__main__":
    main()
