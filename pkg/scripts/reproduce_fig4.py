"""Generate the data for every H2 amplification panel as CSV files."""

import argparse
from pathlib import Path

from philter.experiments import FIG4_KINDS, fig4_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="fig4")
    ap.add_argument("--m", type=int, default=20, help="energy register size for panels A to C")
    ap.add_argument("--k-max", type=int, default=50)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for kind in FIG4_KINDS:
        ds = fig4_sweep(kind, m=args.m, k_max=args.k_max, register_sizes=range(2, min(12, args.m) + 1))
        ds.write(out / f"fig4{kind}.csv")
        print(f"panel {kind}: {len(ds.rows)} rows")


if __name__ == "__main__":
    main()
