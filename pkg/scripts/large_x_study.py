"""Second moment at large x: spectral side, direct geometric double sum, and the
diagonal-sum identity for the smoothed transform.

The spectral average runs over only dim S_k forms, so <S^2>/x collapses once
the window holds many more integers than there are forms.
"""
import argparse
import math

import numpy as np

from hml.modforms import cusp_dimension
from hml.moments import diagterms_check, second_moment, spectral_data
from hml.petersson import geometric_matrix


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=120)
    ap.add_argument("--x-max", type=float, default=300.0)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--crosscheck", type=float, nargs="*", default=[60.5])
    ap.add_argument("--diag-x", type=float, nargs="*", default=[10, 25])
    a = ap.parse_args(argv)
    k = a.k
    basis, w = spectral_data(k, math.ceil(2 * a.x_max) + 2)
    print(f"# dim S_k = {cusp_dimension(k)}")
    print("x,second,ratio")
    for x in np.geomspace(k / (2 * math.pi), a.x_max, a.points):
        s = second_moment(k, x, basis, w)
        print(f"{x:.4g},{s:.6g},{s / x:.4g}")
    for x in a.crosscheck:
        ns = tuple(range(math.floor(x) + 1, math.floor(2 * x) + 1))
        g, _, _ = geometric_matrix(ns, ns, k, 600)
        print(f"# x={x}: spectral {second_moment(k, x, basis, w):.10g} "
              f"geometric {math.fsum(g.ravel()):.10g}")
    for x in a.diag_x:
        d = diagterms_check(k, x, k)
        print(f"# diagterms x={x}: lhs {d.lhs:.6g} residual {d.residual:.3g} envelope {d.envelope:.3g}")


if __name__ == "__main__":
    main()
