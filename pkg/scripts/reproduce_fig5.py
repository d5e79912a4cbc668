"""QPHILTER runtime study over a range of overlaps, with a printed summary."""

import argparse

from philter.experiments import fig5_runtime_study, summarize_runtime


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--overlaps", type=float, nargs="+", default=[1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2])
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="fig5.csv")
    args = ap.parse_args()
    ds = fig5_runtime_study(args.overlaps, runs=args.runs, seed=args.seed)
    ds.write(args.out)
    for b, s in sorted(summarize_runtime(ds).items()):
        print(f"b={b:g}: " + ", ".join(f"{k}={v:.4g}" for k, v in s.items()))


if __name__ == "__main__":
    main()
