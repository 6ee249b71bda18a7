"""Kloosterman sums S(m, n; c) by direct summation over units mod c."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ParameterError


def inverse_mod(a, c):
    """Inverse of a modulo c by the extended Euclidean algorithm."""
    r0, r1 = a % c, c
    s0, s1 = 1, 0
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if r0 != 1:
        raise ParameterError(f"{a} is not invertible mod {c}")
    return s0 % c


@lru_cache(maxsize=4096)
def units_and_inverses(c):
    """Arrays (a, a*) over the units a mod c, 1 <= a <= c.

    The coprimality test is a sieve over the prime factors of c rather than
    one gcd per residue.
    """
    if c == 1:
        return np.array([0], dtype=np.int64), np.array([0], dtype=np.int64)
    keep = np.ones(c, dtype=bool)
    keep[0] = False
    m, p = c, 2
    while p * p <= m:
        if m % p == 0:
            keep[::p] = False
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        keep[::m] = False
    units = np.nonzero(keep)[0]
    inv = np.array([inverse_mod(int(a), c) for a in units], dtype=np.int64)
    units.setflags(write=False)
    inv.setflags(write=False)
    return units.astype(np.int64), inv


def kloosterman(m, n, c):
    """S(m, n; c) = sum over units a mod c of e((a* m + a n)/c), as a float.

    Phases are reduced exactly in integers before the cosine; the imaginary
    parts cancel under a <-> -a, so only cosines are summed (with fsum).
    """
    if m < 1 or n < 1 or c < 1:
        raise ParameterError("m, n, c must be positive")
    a, ainv = units_and_inverses(c)
    r = (ainv * (m % c) + a * (n % c)) % c
    return math.fsum(np.cos(2 * np.pi * r / c))


def kloosterman_complex(m, n, c):
    """The same sum kept in complex arithmetic; used to check realness."""
    a, ainv = units_and_inverses(c)
    r = (ainv * (m % c) + a * (n % c)) % c
    ph = 2 * np.pi * r / c
    return complex(math.fsum(np.cos(ph)), math.fsum(np.sin(ph)))


def kloosterman_table(ms, ns, c):
    """S(m, n; c) for all pairs in the outer product of ``ms`` and ``ns``.

    Returns an array of shape (len(ms), len(ns)). Vectorised counterpart of
    :func:`kloosterman` for the trace-formula sums.
    """
    ms = np.asarray(ms, dtype=np.int64) % c
    ns = np.asarray(ns, dtype=np.int64) % c
    a, ainv = units_and_inverses(c)
    table = np.cos(2 * np.pi * np.arange(c) / c)
    r = (ms[:, None, None] * ainv[None, None, :] + ns[None, :, None] * a[None, None, :]) % c
    return table[r].sum(axis=2)
