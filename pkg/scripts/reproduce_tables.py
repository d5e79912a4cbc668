"""Write the per-eigenstate prefix-mass tables for H2 to CSV."""

import argparse

from philter.experiments import appendix_tables


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="tables.csv")
    args = ap.parse_args()
    ds = appendix_tables()
    ds.write(args.out)
    for state, m, delta, eps, weighted, ok in ds.rows:
        print(f"{state} m={m:2d} delta={delta:.2f} eps2={eps:.3g} weighted={weighted:.3g} condition={ok}")


if __name__ == "__main__":
    main()
