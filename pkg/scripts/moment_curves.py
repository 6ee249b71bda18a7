"""First and second moments of S(x, f) against their predicted shapes.

Writes one CSV row per x on a log grid from k/(32 pi) to k^2/(16 pi^2).
"""
import argparse
import csv
import math
import sys

import numpy as np

from hml.moments import (first_moment, predicted_first, predicted_second, regime_label,
                         second_moment, spectral_data)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=60)
    ap.add_argument("--points", type=int, default=30)
    ap.add_argument("--out", default="-")
    a = ap.parse_args(argv)
    k = a.k
    xs = np.geomspace(k / (32 * math.pi), k * k / (16 * math.pi ** 2), a.points)
    basis, w = spectral_data(k, math.ceil(2 * xs[-1]) + 2)
    fh = sys.stdout if a.out == "-" else open(a.out, "w", newline="")
    wr = csv.writer(fh)
    wr.writerow(["k", "x", "regime", "first", "first_pred", "second", "second_pred"])
    for x in xs:
        wr.writerow([k, f"{x:.6g}", regime_label(k, x),
                     f"{first_moment(k, x, basis, w):.6g}", f"{predicted_first(k, x):.6g}",
                     f"{second_moment(k, x, basis, w):.6g}", f"{predicted_second(k, x):.6g}"])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
