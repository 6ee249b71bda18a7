"""Deviation of the transition-range Bessel moment from nu, and its fitted exponent."""
import argparse

import numpy as np

from hml.oscint import transition_moment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nus", type=float, nargs="+", default=[1e2, 1e3, 1e4, 1e5])
    a = ap.parse_args(argv)
    dev = []
    print("nu,moment,deviation,deviation/nu^(7/8)")
    for nu in a.nus:
        m = transition_moment(nu)
        dev.append(abs(m - nu))
        print(f"{nu:g},{m:.8g},{dev[-1]:.6g},{dev[-1] / nu ** 0.875:.4f}")
    slope = np.polyfit(np.log(a.nus), np.log(dev), 1)[0]
    print(f"# fitted exponent {slope:.4f} (bound 0.875)")


if __name__ == "__main__":
    main()
