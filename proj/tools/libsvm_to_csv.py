#!/usr/bin/env python3
"""Convert a dense libsvm-format file (e.g. usps, usps.t) to the CSV layout
read by `dsr --csv`: feature columns f1..fD followed by a `label` column."""

import argparse
import bz2
import csv
import sys


def read_rows(path):
    opener = bz2.open if path.endswith(".bz2") else open
    with opener(path, "rt") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            label = parts[0]
            feats = {}
            for item in parts[1:]:
                idx, val = item.split(":", 1)
                feats[int(idx)] = float(val)
            yield label, feats


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--dim", type=int, default=None,
                    help="feature count (default: largest index seen)")
    ap.add_argument("--label-offset", type=int, default=0,
                    help="added to integer labels, e.g. -1 maps 1..10 to 0..9")
    args = ap.parse_args(argv)

    rows = list(read_rows(args.input))
    dim = args.dim or max((max(f) for _, f in rows if f), default=0)
    with open(args.output, "w", newline="") as out:
        writer = csv.writer(out)
        writer.writerow([f"f{i}" for i in range(1, dim + 1)] + ["label"])
        for label, feats in rows:
            if args.label_offset:
                label = str(int(float(label)) + args.label_offset)
            writer.writerow([repr(feats.get(i, 0.0)) for i in range(1, dim + 1)] + [label])
    return 0


if __name__ == "__main__":
    sys.exit(main())
