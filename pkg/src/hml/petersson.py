"""Both sides of the Petersson trace formula and harmonic-weight recovery.

Geometric side::

    delta_{mn} + 2 pi (-1)^{k/2} sum_{c <= c_max} S(m, n; c)/c J_{k-1}(4 pi sqrt(mn)/c)

Spectral side: sum_f omega(f) lambda_f(m) lambda_f(n). The weights omega(f)
are obtained by inverting the identity on the pairs (1, n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .errors import ConditioningError, InsufficientTableError, ParameterError
from .kloosterman import kloosterman_table
from .specfun import bessel_j

EPS = np.finfo(float).eps


def default_c_max(m, n, k):
    return max(1000, math.ceil(64 * math.pi * math.sqrt(m * n) / k) * 8)


@lru_cache(maxsize=32)
def _kloosterman_over_c(ms, ns, c_max):
    """Array of S(m, n; c)/c with shape (c_max, len(ms), len(ns)), read-only."""
    out = np.empty((c_max, len(ms), len(ns)))
    for c in range(1, c_max + 1):
        out[c - 1] = kloosterman_table(ms, ns, c) / c
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TailBound:
    value: float
    certified: bool
    envelope: float
    series_majorant: float


def tail_bound(m, n, k, c_max, C=10.0):
    """Bound on the dropped terms c > c_max of the geometric sum.

    With |S| <= c each dropped term is at most 2 pi |J_nu(z_c)|, nu = k-1,
    z_c = 4 pi sqrt(mn)/c. Two majorants are summed in closed form and the
    smaller is reported:

    * the small-argument envelope C z^2 exp(-14 nu/13), giving
      2 pi C 16 pi^2 mn exp(-14 nu/13) / c_max;
    * the series majorant (z/2)^nu/nu!, giving
      2 pi (2 pi sqrt(mn))^nu / nu! * c_max^{1-nu}/(nu-1).

    ``certified`` is True once z_{c_max+1} <= (nu+1)/4, the range in which
    the envelope is stated.
    """
    nu = k - 1
    z_next = 4 * math.pi * math.sqrt(m * n) / (c_max + 1)
    log_env = math.log(2 * math.pi * C * 16 * math.pi**2 * m * n / c_max) - 14 * nu / 13
    log_ser = (math.log(2 * math.pi) + nu * math.log(2 * math.pi * math.sqrt(m * n))
               - math.lgamma(nu + 1) + (1 - nu) * math.log(c_max) - math.log(nu - 1))
    env = math.exp(max(log_env, -745.0))
    ser = math.exp(max(log_ser, -745.0))
    return TailBound(min(env, ser), z_next <= (nu + 1) / 4, env, ser)


@dataclass(frozen=True)
class GeometricValue:
    value: float
    tail_bound: float
    tail_certified: bool
    abs_sum: float  # sum of |terms|, used for the rounding floor

    @property
    def noise_floor(self):
        c = max(1.0, self.abs_sum)
        return 64 * EPS * c + self.tail_bound


def geometric_matrix(ms, ns, k, c_max=None):
    """Geometric side for all pairs in ``ms`` x ``ns``.

    Returns (values, abs_sums) as arrays of shape (len(ms), len(ns)).
    """
    if k % 2 or k < 12:
        raise ParameterError("need even k >= 12")
    ms = tuple(int(m) for m in ms)
    ns = tuple(int(n) for n in ns)
    if min(ms) < 1 or min(ns) < 1:
        raise ParameterError("m, n must be positive")
    if c_max is None:
        c_max = default_c_max(max(ms), max(ns), k)
    if c_max < 1:
        raise ParameterError("c_max must be >= 1")
    skc = _kloosterman_over_c(ms, ns, int(c_max))
    c = np.arange(1, c_max + 1, dtype=float)
    root = np.sqrt(np.outer(ms, ns).astype(float))
    z = 4 * np.pi * root[None, :, :] / c[:, None, None]
    terms = skc * bessel_j(k - 1, z)
    sgn = 1 if (k // 2) % 2 == 0 else -1
    off = np.empty(root.shape)
    for i in range(len(ms)):
        for j in range(len(ns)):
            off[i, j] = math.fsum(terms[:, i, j])
    delta = (np.asarray(ms)[:, None] == np.asarray(ns)[None, :]).astype(float)
    vals = delta + 2 * np.pi * sgn * off
    abs_sums = 2 * np.pi * np.abs(terms).sum(axis=0)
    return vals, abs_sums, int(c_max)


def geometric_side(m, n, k, c_max=None):
    """delta_{mn} plus the truncated Kloosterman-Bessel sum, with tail bound."""
    vals, abs_sums, c_max = geometric_matrix((m,), (n,), k, c_max)
    tb = tail_bound(m, n, k, c_max)
    return GeometricValue(float(vals[0, 0]), tb.value, tb.certified, float(abs_sums[0, 0]))


@dataclass(frozen=True)
class HarmonicWeights:
    weight: int
    omegas: tuple
    fit_residual: float
    c_max: int
    tail_bound: float
    heldout_residual: float = math.nan
    in_sample_residual: float = math.nan
    condition_number: float = math.nan
    fit_pairs: tuple = field(default=(), repr=False)
    heldout_pairs: tuple = field(default=(), repr=False)

    @property
    def total(self):
        return math.fsum(float(w) for w in self.omegas)


def spectral_side(m, n, basis, weights):
    """sum_f omega(f) lambda_f(m) lambda_f(n)."""
    if m < 1 or n < 1 or m > basis.N or n > basis.N:
        raise InsufficientTableError(f"pair ({m},{n}) outside table 1..{basis.N}")
    return float(mpmath.fsum(w * basis.lam[f][m] * basis.lam[f][n]
                             for f, w in enumerate(weights.omegas)))


def _default_heldout(d, N, fit):
    top = max(3, min(N, d + 3))
    pairs = [(m, n) for m in range(2, top + 1) for n in range(m, top + 1)]
    return tuple(p for p in pairs if p not in fit and p[0] * p[1] <= 10**6)


def recover_weights(basis, pair_budget=None, c_max=None, heldout=None, cond_limit=1e12):
    """Solve sum_f omega(f) lambda_f(n) = geometric(1, n), n = 1..pair_budget.

    Least squares in mpmath at the basis precision. ``fit_residual`` is the
    larger of the in-sample residual and the rounding/tail floor of the
    geometric values (the in-sample residual is exactly zero when the
    system is square). The held-out residual is measured on pairs (m, n)
    with m, n >= 2 not used in the fit.
    """
    k, d = basis.weight, basis.dimension
    budget = 2 * d if pair_budget is None else int(pair_budget)
    if budget < d:
        raise ParameterError("pair_budget must be >= dimension")
    if budget > basis.N:
        raise InsufficientTableError("pair budget exceeds the eigenvalue table")
    ns = tuple(range(1, budget + 1))
    cm = c_max if c_max is not None else default_c_max(1, budget, k)
    g, a, _ = geometric_matrix((1,), ns, k, cm)
    floors = [GeometricValue(0.0, tail_bound(1, n, k, cm).value, True, float(a[0, j])).noise_floor
              for j, n in enumerate(ns)]
    with mpmath.workprec(basis.precision_bits):
        A = mpmath.matrix(budget, d)
        for i, n in enumerate(ns):
            for f in range(d):
                A[i, f] = basis.lam[f][n]
        b = mpmath.matrix([mpmath.mpf(float(v)) for v in g[0]])
        sv = mpmath.svd_r(A, compute_uv=False)
        smax, smin = max(sv), min(sv)
        cond = float(smax / smin) if smin != 0 else math.inf
        if cond > cond_limit:
            raise ConditioningError(f"design matrix condition {cond:.3g} > {cond_limit:g}; "
                                    "use more or different pairs")
        x, res = mpmath.qr_solve(A, b)
        resid_vec = A * x - b
        in_sample = float(max(abs(r) for r in resid_vec))
        omegas = tuple(x[f] for f in range(d))
    fit = max(in_sample, max(floors))
    tb = max(tail_bound(1, n, k, cm).value for n in ns)
    hw = HarmonicWeights(k, omegas, fit, cm, tb, in_sample_residual=in_sample,
                         condition_number=cond, fit_pairs=tuple((1, n) for n in ns))
    pairs = heldout if heldout is not None else _default_heldout(d, basis.N, hw.fit_pairs)
    worst = 0.0
    if pairs:
        for m, n in pairs:
            gv = geometric_side(m, n, k, max(cm, default_c_max(m, n, k)))
            worst = max(worst, abs(spectral_side(m, n, basis, hw) - gv.value))
    return HarmonicWeights(k, omegas, fit, cm, tb, heldout_residual=worst,
                           in_sample_residual=in_sample, condition_number=cond,
                           fit_pairs=hw.fit_pairs, heldout_pairs=tuple(pairs))


def spectral_matrix(basis, weights, M):
    """sum_f omega(f) lambda_f(m) lambda_f(n) for 1 <= m, n <= M, float64."""
    if M > basis.N:
        raise InsufficientTableError(f"M={M} exceeds table size {basis.N}")
    lam = basis.values[:, 1:M + 1]
    w = np.array([float(o) for o in weights.omegas])
    return np.einsum("f,fm,fn->mn", w, lam, lam)


def trace_residual(k, M, c_max=1000, basis=None, weights=None, precision_bits=256):
    """max over m, n <= M of |spectral - geometric|.

    Eigendata are computed to N = max(M, 2d) when not supplied.
    """
    from .modforms import cusp_dimension, eigenforms

    if basis is None:
        d = cusp_dimension(k)
        basis = eigenforms(k, max(M, 2 * d, 2), precision_bits)
    if weights is None:
        weights = recover_weights(basis, c_max=c_max)
    idx = tuple(range(1, M + 1))
    geo, _, _ = geometric_matrix(idx, idx, k, c_max)
    spec = spectral_matrix(basis, weights, M)
    return float(np.max(np.abs(spec - geo)))
