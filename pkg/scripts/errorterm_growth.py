"""Size of the error-term Bessel integral against k^{2/3} and x^2/(c^2 k)."""
import argparse
import math

from hml.oscint import errorterm_integral


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--ratios", type=float, nargs="+",
                    default=[1 / (8 * math.pi), 1 / (4 * math.pi), 0.25, 0.5, 1.0, 2.0])
    a = ap.parse_args(argv)
    print("k,x_over_k,c,max_abs,over_k^(2/3),over_4pi x^2/(c^2 k)")
    for k in a.ks:
        for r in a.ratios:
            x = r * k
            v = max(abs(errorterm_integral(k, x, 1, s)) for s in (1, -1))
            print(f"{k},{r:.4g},1,{v:.5g},{v / k ** (2 / 3):.4g},{v * k / (4 * math.pi * x * x):.4g}")


if __name__ == "__main__":
    main()
