"""First and second moments of S(x, f) = sum_{x < n <= 2x} lambda_f(n).

Moments are computed spectrally from eigendata and recovered harmonic
weights, and set against the predicted main terms, the Voronoi-transformed
first moment, the off-diagonal (OD) sum of the smoothed second moment, and
the integral identities behind them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, InsufficientTableError, ParameterError, ResourceError
from .modforms import cusp_dimension, divisor_count, eigenforms
from .oscint import (HankelGrid, HankelWindow, SmoothingWindow, integrate_bessel_kernel,
                     measure_decay, window_sum, _y_floor)
from .petersson import _kloosterman_over_c, recover_weights, tail_bound
from .specfun import bessel_j

EPS_REGIME = 0.1

# ---------------------------------------------------------------- shape


def L_func(xi):
    """Tent function: 0 on [0,1], log xi on [1, sqrt 2], log(2/xi) on [sqrt 2, 2], 0 beyond."""
    arr = np.asarray(xi, dtype=float)
    if np.any(arr < 0):
        raise DomainError("L is defined on [0, inf)")
    r2 = math.sqrt(2)
    with np.errstate(divide="ignore"):
        out = np.where((arr >= 1) & (arr <= r2), np.log(np.maximum(arr, 1e-300)),
                       np.where((arr > r2) & (arr <= 2), np.log(2 / np.maximum(arr, 1e-300)), 0.0))
    return float(out) if np.ndim(xi) == 0 else out


def sign_k(k):
    return 1 if (k // 2) % 2 == 0 else -1


# ---------------------------------------------------------------- regimes


def regime_boundaries(k):
    pi2 = math.pi**2
    return {
        "k/(32pi)": k / (32 * math.pi),
        "k/(8pi)": k / (8 * math.pi),
        "k/(4pi)": k / (4 * math.pi),
        "k^2/(32pi^2+1)": k * k / (32 * pi2 + 1),
        "k^2/(32pi^2-1)": k * k / (32 * pi2 - 1),
        "k^2/(16pi^2+1)": k * k / (16 * pi2 + 1),
    }


def regime_label(k, x):
    """One of below-first-transition, first-transition, mid, second-transition, beyond."""
    b = regime_boundaries(k)
    if x < b["k/(8pi)"]:
        return "below-first-transition"
    if x <= b["k/(4pi)"]:
        return "first-transition"
    if x < b["k^2/(32pi^2-1)"]:
        return "mid"
    if x <= b["k^2/(16pi^2+1)"]:
        return "second-transition"
    return "beyond"


def count_in_window(x):
    """#{integers n with x < n <= 2x}."""
    return max(0, math.floor(2 * x) - math.floor(x))


def predicted_first(k, x):
    b = regime_boundaries(k)
    if x <= b["k^2/(32pi^2+1)"]:
        return 0.0
    if b["k^2/(32pi^2-1)"] <= x <= b["k^2/(16pi^2+1)"]:
        return sign_k(k) * k / (4 * math.pi)
    return math.nan


def predicted_second(k, x, eps=EPS_REGIME):
    if x <= k / (32 * math.pi):
        return float(count_in_window(x))
    if x <= k ** (1 + eps):
        return x + sign_k(k) * L_func(k / (4 * math.pi * x)) * k / (2 * math.pi)
    return float(x)


# ---------------------------------------------------------------- spectral data


@lru_cache(maxsize=16)
def spectral_data(k, N, precision_bits=256, cache_dir=None, no_compute=False):
    """(EigenBasis, HarmonicWeights) for weight k with eigenvalues up to N."""
    d = cusp_dimension(k)
    basis = eigenforms(k, max(N, 2 * d, 2), precision_bits, cache_dir=cache_dir,
                       no_compute=no_compute)
    return basis, recover_weights(basis)


def _omega_vec(weights):
    return np.array([float(w) for w in weights.omegas])


def _window_sums(basis, x):
    if 2 * x > basis.N:
        raise InsufficientTableError(f"2x = {2 * x} exceeds table size {basis.N}")
    lo, hi = math.floor(x) + 1, math.floor(2 * x)
    if hi < lo:
        return np.zeros(basis.dimension)
    vals = basis.values[:, lo:hi + 1]
    return np.array([math.fsum(row) for row in vals])


def first_moment(k, x, basis, weights):
    """sum_f omega(f) S(x, f)."""
    _check(k, basis)
    return math.fsum(_omega_vec(weights) * _window_sums(basis, x))


def second_moment(k, x, basis, weights):
    """sum_f omega(f) S(x, f)^2."""
    _check(k, basis)
    s = _window_sums(basis, x)
    return math.fsum(_omega_vec(weights) * s * s)


def smoothed_second_moment(k, x, delta, basis, weights):
    """sum_f omega(f) (sum_n lambda_f(n) w(n/x))^2."""
    _check(k, basis)
    n, wn = _window_support(x, delta)
    if len(n) and n[-1] > basis.N:
        raise InsufficientTableError("window exceeds eigenvalue table")
    s = np.array([math.fsum(row) for row in basis.values[:, n] * wn[None, :]]) if len(n) else np.zeros(basis.dimension)
    return math.fsum(_omega_vec(weights) * s * s)


def _check(k, basis):
    if basis.weight != k:
        raise ParameterError(f"basis has weight {basis.weight}, expected {k}")


def _window_support(x, delta):
    w = SmoothingWindow(delta)
    n = np.arange(math.floor(x) + 1, math.ceil(2 * x))
    wn = w(n / x)
    keep = wn > 0
    return n[keep], wn[keep]


# ---------------------------------------------------------------- Voronoi and OD


def voronoi_main_term(k, x, tol=1e-10):
    """((-1)^{k/2}/(4 pi)) int_{4 pi sqrt x}^{4 pi sqrt 2x} y J_{k-1}(y) dy."""
    if not (k * k / (64 * math.pi**2) <= x <= k**4):
        raise DomainError("needs k^2/(64 pi^2) <= x <= k^4")
    a, b = 4 * math.pi * math.sqrt(x), 4 * math.pi * math.sqrt(2 * x)
    val = integrate_bessel_kernel(lambda y: y, k - 1, a, b, tol=tol, breakpoints=(k - 1,))
    return sign_k(k) * val / (4 * math.pi)


@dataclass(frozen=True)
class OffDiagonal:
    value: float
    tail_bound: float
    c_max: int
    pairs: int


def offdiag_direct(k, x, delta, c_max=None, tail_tol=1e-12, max_pairs=4_000_000):
    """(OD) = 2 pi (-1)^{k/2} sum_{m,n} w(n/x) w(m/x) sum_c S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c).

    The c-sum runs to max(c_max, ceil(32 pi x / k)), extended until the
    certified tail (sum over pairs of the per-pair tail bound) is below
    ``tail_tol``. Bessel values are double-precision accurate ones.
    """
    n, wn = _window_support(x, delta)
    if len(n) ** 2 > max_pairs:
        raise ResourceError(f"{len(n) ** 2} pairs exceed the guard {max_pairs}")
    if len(n) == 0:
        return OffDiagonal(0.0, 0.0, 0, 0)
    floor_c = max(1, math.ceil(32 * math.pi * x / k))
    cm = max(c_max or floor_c, floor_c)
    ww = np.outer(wn, wn)

    def tail(C):
        return float(sum(ww[i, j] * tail_bound(int(a), int(b), k, C).value
                         for i, a in enumerate(n) for j, b in enumerate(n) if j >= i) * 2)

    tb = tail(cm)
    while tb > tail_tol and cm < 10**5:
        cm *= 2
        tb = tail(cm)
    ns = tuple(int(v) for v in n)
    skc = _kloosterman_over_c(ns, ns, cm)
    c = np.arange(1, cm + 1, dtype=float)
    root = np.sqrt(np.outer(n, n).astype(float))
    J = bessel_j(k - 1, 4 * np.pi * root[None, :, :] / c[:, None, None])
    inner = (skc * J).sum(axis=0)
    val = 2 * math.pi * sign_k(k) * math.fsum((ww * inner).ravel())
    return OffDiagonal(val, tb, cm, len(n) ** 2)


@dataclass(frozen=True)
class DecompositionCheck:
    smoothed: float
    diagonal: float
    offdiag: float
    residual: float
    allowance: float

    @property
    def holds(self):
        return self.residual <= self.allowance


def decomposition_check(k, x, delta, basis, weights, c_max=None):
    """Smoothed spectral moment vs window diagonal + (OD).

    The allowance is the OD tail bound plus (sum_n w(n/x))^2 times ten times
    the weight-fit residual, the per-pair accuracy of the trace identity.
    """
    sm = smoothed_second_moment(k, x, delta, basis, weights)
    w = SmoothingWindow(delta)
    diag = window_sum(x, w, 2)
    od = offdiag_direct(k, x, delta, c_max)
    _, wn = _window_support(x, delta)
    allow = od.tail_bound + (wn.sum() ** 2) * 10 * max(weights.fit_residual, 1e-16)
    return DecompositionCheck(sm, diag, od.value, abs(sm - diag - od.value), allow)


# ---------------------------------------------------------------- integral checks


@dataclass(frozen=True)
class MaintermCheck:
    lhs: float
    rhs: float
    residual: float
    envelope: float


def mainterm_integral_check(k, x, C=3.0, tol=1e-9):
    """int y L(y/(4 pi x)) J_{k-1}(y) dy over [4 pi x, 8 pi x] vs L(k/(4 pi x)) k."""
    if k < 50:
        raise ParameterError("stated for k >= 50")
    a, b = 4 * math.pi * x, 8 * math.pi * x
    lhs = integrate_bessel_kernel(lambda y: y * L_func(y / a), k - 1, a, b, tol=tol,
                                  rtol=1e-11, breakpoints=(a * math.sqrt(2), k - 1))
    rhs = L_func(k / a) * k
    return MaintermCheck(float(lhs), rhs, abs(lhs - rhs), C * (k ** 0.875 + k ** (2 / 3)))


@dataclass(frozen=True)
class DiagtermsCheck:
    lhs: float
    residual: float
    envelope: float
    n_max: int
    tail_bound: float
    C4: float


def diagterms_check(k, x, delta, C=10.0, tail_tol=None, hw=None):
    """4 pi^2 x^2 sum_n w~(n x / K)^2 vs x, with envelope C (x/Delta + x^{3/2} log^3 k / k).

    The n-sum stops at xi_cut K / x where the tail, bounded through the
    measured C_4 (|w~(xi)| <= C_4 xi^{-2}), is below ``tail_tol``
    (default 1e-6 x): 4 pi^2 C_4^2 K / (3 x xi_cut^3).
    """
    if delta > k:
        raise ParameterError("needs Delta <= k")
    hw = hw or HankelWindow(k, delta)
    K = hw.scale
    tol = 1e-6 * x if tail_tol is None else tail_tol
    probe = HankelGrid(hw, 4 * math.pi * math.sqrt(2 * K * 4.0) * 1.001)
    dec = measure_decay(hw, xi_min=1e-3, xi_max=4.0, npts=200, grid=probe)
    C4 = dec.C[4]
    xi_cut = max((4 * math.pi**2 * C4**2 * K / (3 * x * tol)) ** (1 / 3), 1e-3)
    n_max = int(math.ceil(xi_cut * K / x))
    grid = probe if xi_cut <= 4.0 else HankelGrid(hw, 4 * math.pi * math.sqrt(2 * K * xi_cut) * 1.001)
    y_floor = _y_floor(hw)
    n_min = max(1, int(y_floor**2 / (32 * math.pi**2 * x)))
    n = np.arange(n_min, n_max + 1)
    v = grid.tilde_w(n * x / K)
    lhs = 4 * math.pi**2 * x * x * math.fsum(v * v)
    tail = 4 * math.pi**2 * C4**2 * K / (3 * x * xi_cut**3)
    env = C * (x / delta + x**1.5 * math.log(k) ** 3 / k)
    return DiagtermsCheck(lhs, abs(lhs - x), env, n_max, tail, C4)


# ---------------------------------------------------------------- report


@dataclass
class MomentReport:
    k: int
    xs: list
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)
    smoothed_second_moment: list = field(default_factory=list)
    regimes: list = field(default_factory=list)
    predicted_first: list = field(default_factory=list)
    predicted_second: list = field(default_factory=list)
    residual_first: list = field(default_factory=list)
    residual_second: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)


def moment_report(k, xs, basis=None, weights=None, delta=None):
    xs = [float(x) for x in xs]
    if basis is None or weights is None:
        basis, weights = spectral_data(k, max(2, math.ceil(2 * max(xs)) + 1))
    dl = delta if delta is not None else k ** 0.99
    rep = MomentReport(k, xs, tolerances={"C": 10.0, "delta": dl})
    for x in xs:
        f1 = first_moment(k, x, basis, weights)
        f2 = second_moment(k, x, basis, weights)
        p1 = predicted_first(k, x)
        p2 = predicted_second(k, x)
        rep.first_moment.append(f1)
        rep.second_moment.append(f2)
        rep.smoothed_second_moment.append(smoothed_second_moment(k, x, dl, basis, weights))
        rep.regimes.append(regime_label(k, x))
        rep.predicted_first.append(p1)
        rep.predicted_second.append(p2)
        rep.residual_first.append(f1 - p1)
        rep.residual_second.append(f2 - p2)
    return rep


def deligne_violations(basis, n_max=None):
    """Pairs (f, n) with |lambda_f(n)| > d(n) (up to 1e-12 slack)."""
    n_max = n_max or basis.N
    bad = []
    for n in range(1, n_max + 1):
        d = divisor_count(n)
        for f in range(basis.dimension):
            if abs(basis.values[f, n]) > d + 1e-12:
                bad.append((f, n))
    return bad
