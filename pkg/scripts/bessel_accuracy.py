"""Uniform large-order J_nu against the high-precision oracle.

For each nu reports, per regime, the worst actual error and the worst
ratio of actual error to the returned estimate.
"""
import argparse
from collections import defaultdict

import numpy as np

from hml.specfun import UniformConfig, bessel_j_oracle, bessel_j_uniform_array


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nus", type=int, nargs="+", default=[50, 100, 200, 400, 800])
    ap.add_argument("--points", type=int, default=120)
    ap.add_argument("--transition", default="airy", choices=["airy", "krasikov"])
    a = ap.parse_args(argv)
    print("nu,regime,n,max_abs_err,max_err_over_estimate")
    for nu in a.nus:
        z = np.linspace(0.05 * nu, 3 * nu, a.points)
        vals, regs, errs = bessel_j_uniform_array(nu, z, UniformConfig(transition=a.transition))
        stats = defaultdict(lambda: [0, 0.0, 0.0])
        for zi, v, r, e in zip(z, vals, regs, errs):
            d = abs(v - float(bessel_j_oracle(nu, float(zi), 64)))
            s = stats[str(r)]
            s[0] += 1
            s[1] = max(s[1], d)
            s[2] = max(s[2], d / e if e > 0 else 0.0)
        for r, (n, d, q) in sorted(stats.items()):
            print(f"{nu},{r},{n},{d:.3e},{q:.3e}")


if __name__ == "__main__":
    main()
