#!/usr/bin/env python3
"""Run every built-in figure preset and write CSV + SVG under --out.

The full set at 91 angles takes tens of minutes (the two-nucleus rf panel
dominates); use --angles to trade resolution for speed.
"""

import argparse
import time

from rpcompass import FIGURES, preset_tables
from rpcompass.output import write_figure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--angles", type=int, default=91)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=FIGURES, default=None)
    args = ap.parse_args()

    for figure in args.only or FIGURES:
        t0 = time.time()
        for stem, comments, columns, style in preset_tables(
                figure, threads=args.threads, angles=args.angles):
            for path in write_figure(stem, comments, columns, style, args.out):
                print(path)
        print(f"{figure}: {time.time() - t0:.1f} s")


if __name__ == "__main__":
    main()
