"""Airy function and large-order Bessel J.

Three Bessel routes live here:

* :func:`bessel_j_oracle` -- trapezoid rule on the periodic integral
  representation, in gmpy2 multiprecision. Slow, trustworthy.
* :func:`bessel_j_uniform` -- double-precision uniform asymptotics (Langer
  formulas in Airy form, the transition form in ``y``, and the leading
  oscillatory term), each tagged with a regime and an error estimate.
* :func:`bessel_j` -- vectorised double-precision values from
  ``scipy.special.jv`` for bulk work (trace formula, off-diagonal sums,
  oscillatory integrals).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
import mpmath
import numpy as np
import scipy.special as sc

from .errors import ConsistencyError, DomainError, ParameterError, ResourceError

AI0 = 0.35502805388781723926  # 3^{-2/3}/Gamma(2/3)
AIP0 = 0.25881940379280679840  # 3^{-1/3}/Gamma(1/3) = -Ai'(0)
_SQRT_PI = math.sqrt(math.pi)
_LN2 = math.log(2.0)

REGIMES = ("series", "quadrature-oracle", "langer", "airy-transition", "oscillatory")


# ---------------------------------------------------------------- Airy

def _u_coeffs(K):
    u = [1.0]
    for k in range(1, K):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, K)]
    return np.array(u), np.array(v)


_U, _V = _u_coeffs(64)
_MACLAURIN_TERMS = 48


def _airy_maclaurin(x):
    x3 = x ** 3
    f = np.ones_like(x)
    g = x.copy()
    fp = 0.5 * x * x
    gp = np.ones_like(x)
    tf, tg, tfp, tgp = f.copy(), g.copy(), fp.copy(), gp.copy()
    fp_sum = fp.copy()
    for k in range(1, _MACLAURIN_TERMS):
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        tgp = tgp * x3 / ((3 * k - 2) * (3 * k))
        f += tf
        g += tg
        gp += tgp
        if k >= 2:
            tfp = tfp * x3 / ((3 * k - 3) * (3 * k - 1))
            fp_sum += tfp
    return AI0 * f - AIP0 * g, AI0 * fp_sum - AIP0 * gp


def _optimal_partial(terms):
    """Sum rows of ``terms`` (shape K x n) up to, not including, the smallest."""
    mags = np.abs(terms)
    stop = np.argmin(mags, axis=0)
    mask = np.arange(terms.shape[0])[:, None] < stop[None, :]
    mask[0] = True
    return np.where(mask, terms, 0.0).sum(axis=0)


def _airy_asym_pos(x):
    zeta = (2.0 / 3.0) * x ** 1.5
    k = np.arange(len(_U))[:, None]
    sgn = (-1.0) ** k
    pw = zeta[None, :] ** (-k.astype(float))
    sa = _optimal_partial(sgn * _U[:, None] * pw)
    sd = _optimal_partial(sgn * _V[:, None] * pw)
    e = np.exp(-zeta) / (2 * _SQRT_PI)
    return e * x ** -0.25 * sa, -e * x ** 0.25 * sd


def _airy_asym_neg(x):
    """Ai(-x), Ai'(-x) for large x > 0."""
    zeta = (2.0 / 3.0) * x ** 1.5
    half = len(_U) // 2
    k = np.arange(half)[:, None]
    sgn = (-1.0) ** k
    ev = zeta[None, :] ** (-2.0 * k)
    od = zeta[None, :] ** (-2.0 * k - 1)
    ua = _optimal_partial(sgn * _U[0::2][:half, None] * ev)
    ub = _optimal_partial(sgn * _U[1::2][:half, None] * od)
    va = _optimal_partial(sgn * _V[0::2][:half, None] * ev)
    vb = _optimal_partial(sgn * _V[1::2][:half, None] * od)
    c = np.cos(zeta - math.pi / 4)
    s = np.sin(zeta - math.pi / 4)
    ai = x ** -0.25 / _SQRT_PI * (c * ua + s * ub)
    aip = x ** 0.25 / _SQRT_PI * (s * va - c * vb)
    return ai, aip


def airy(x, cutoff=6.0, neg_cutoff=8.0):
    """Ai(x) and Ai'(x) for real ``x`` (scalar or array).

    Maclaurin series on ``[-neg_cutoff, cutoff]``; optimally truncated
    asymptotic series beyond. On the oscillatory side the asymptotic series
    for Ai' is only good to about 2e-10 at x = -6, hence the wider default
    there; both branches agree to better than 1e-12 at each switch point.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    ai = np.empty_like(arr)
    aip = np.empty_like(arr)
    mid = (arr <= cutoff) & (arr >= -neg_cutoff)
    pos = arr > cutoff
    neg = arr < -neg_cutoff
    if mid.any():
        ai[mid], aip[mid] = _airy_maclaurin(arr[mid])
    if pos.any():
        ai[pos], aip[pos] = _airy_asym_pos(arr[pos])
    if neg.any():
        ai[neg], aip[neg] = _airy_asym_neg(-arr[neg])
    if np.ndim(x) == 0:
        return float(ai[0]), float(aip[0])
    return ai, aip


# ---------------------------------------------------------------- oracle

def _log2_series_bound(m, z):
    """log2 of (z/2)^m / m!, an upper bound for |J_m(z)|."""
    if z == 0:
        return -math.inf
    return (m * math.log(z / 2) - math.lgamma(m + 1)) / _LN2


def log2_magnitude_estimate(n, z):
    """Rough log2|J_n(z)|; only used to size guard bits, never as a value."""
    if z <= 0:
        return -math.inf
    if z >= n or n == 0:
        return 0.0
    r = z / n
    alpha = math.acosh(1 / r)
    th = math.sqrt(1 - r * r)
    return -(n * (alpha - th) + 0.5 * math.log(2 * math.pi * n * th)) / _LN2


@dataclass(frozen=True)
class OracleResult:
    value: mpmath.mpf
    panels: int
    working_bits: int
    aliasing_bound_log2: float


def _to_mpfr(z, wp):
    if isinstance(z, mpmath.mpf):
        man, exp = z.man_exp
        return gmpy2.mul_2exp(gmpy2.mpfr(man, max(wp, int(man).bit_length() + 1)), exp)
    if isinstance(z, str):
        return gmpy2.mpfr(z, wp)
    return gmpy2.mpfr(z, wp)


def bessel_j_oracle_detail(n, z, precision_bits=96, panel_scale=1, max_panels=1 << 24):
    """Trapezoid rule on J_n(z) = (1/pi) int_0^pi cos(n t - z sin t) dt.

    The integrand is smooth and 2pi-periodic, so the rule converges
    geometrically: with M panels the aliasing error is the sum of
    J_{2Mj +- n}(z) for j >= 1, bounded by the series majorant
    (z/2)^m/m!. M is at least n + z (so each panel sees at most half an
    oscillation) and is raised until the aliasing bound falls below the
    target, which is ``precision_bits`` relative to the estimated size of
    the result. Working precision adds guard bits for the cancellation.
    """
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ParameterError("oracle needs a nonnegative integer order")
    n = int(n)
    zf = float(z)
    if zf < 0 or n > 10**6 or zf > 1e8:
        raise ParameterError("oracle domain is 0 <= n <= 1e6, 0 <= z <= 1e8")
    if zf == 0:
        v = mpmath.mpf(1 if n == 0 else 0)
        return OracleResult(v, 0, precision_bits, -math.inf)
    mag = log2_magnitude_estimate(n, zf)
    guard = max(0.0, -mag)
    target = -(precision_bits + guard + 4)
    M = int(math.ceil(n + zf)) + 8
    m = max(2 * M - n, 1)
    while _log2_series_bound(m, zf) + 2 > target or m <= zf:
        m += max(1, m // 64)
    M = max(M, (m + n + 1) // 2) * int(panel_scale)
    if M > max_panels:
        raise ResourceError(f"oracle needs {M} panels (budget {max_panels})",
                            estimate=None, gap=None)
    alias = _log2_series_bound(2 * M - n, zf) + 2
    wp = int(precision_bits + guard + math.log2(M) + 32)
    with gmpy2.context(gmpy2.get_context(), precision=wp):
        zz = _to_mpfr(z, wp)
        pi = gmpy2.const_pi()
        h = pi / M
        s = (gmpy2.cos(gmpy2.mpfr(0)) + gmpy2.cos(n * pi)) / 2
        nn = gmpy2.mpfr(n)
        for ell in range(1, M):
            t = h * ell
            s += gmpy2.cos(nn * t - zz * gmpy2.sin(t))
        val = s / M
        man, exp = val.as_mantissa_exp()
    with mpmath.workprec(precision_bits):
        out = +mpmath.mpf((int(man), int(exp)))
    return OracleResult(out, M, wp, alias)


def bessel_j_oracle(n, z, precision_bits=96, panel_scale=1):
    """J_n(z) to about ``precision_bits`` relative bits (mpmath mpf)."""
    return bessel_j_oracle_detail(n, z, precision_bits, panel_scale).value


# ---------------------------------------------------------------- accurate double

def bessel_j(nu, z):
    """Double-precision J_nu(z), vectorised (scipy.special.jv)."""
    return sc.jv(nu, z)


# ---------------------------------------------------------------- uniform

@dataclass(frozen=True)
class BesselEval:
    value: float
    regime: str
    error_estimate: float


@dataclass(frozen=True)
class UniformConfig:
    C: float = 10.0
    eps0: float = 0.1
    transition: str = "langer"  # or "krasikov"
    oracle_below: float = 30.0
    oracle_bits: int = 64


def _alpha_minus_tanh(alpha):
    a = np.asarray(alpha, dtype=float)
    small = a < 0.05
    a2 = a * a
    ser = a * a2 * (1 / 3 - a2 * (2 / 15 - a2 * (17 / 315 - a2 * 62 / 2835)))
    with np.errstate(invalid="ignore", over="ignore"):
        direct = a - np.tanh(a)
    return np.where(small, ser, direct)


def _t_minus_arctan(t):
    t = np.asarray(t, dtype=float)
    small = t < 0.05
    t2 = t * t
    ser = t * t2 * (1 / 3 - t2 * (1 / 5 - t2 * (1 / 7 - t2 / 9)))
    return np.where(small, ser, t - np.arctan(t))


_LANGER_PREF = 2 ** (1 / 3) * 3 ** (1 / 6)


def langer_below(nu, z):
    """Sech-parametrised Langer form in Airy shape, 0 < z <= nu."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    r = np.clip(z / nu, 1e-300, 1.0)
    alpha = np.arccosh(1 / r)
    th = np.sqrt((1 - r) * (1 + r))
    q = _alpha_minus_tanh(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(th > 1e-8, q ** (1 / 6) / np.sqrt(th), 3 ** (-1 / 6))
    arg = (1.5 * nu * q) ** (2 / 3)
    ai, _ = airy(np.atleast_1d(arg))
    return _LANGER_PREF * nu ** (-1 / 3) * ratio * ai.reshape(np.shape(arg))


def langer_above(nu, z):
    """Sec-parametrised Langer form in Airy shape, z >= nu."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    t = np.sqrt(np.maximum((z - nu) * (z + nu), 0.0)) / nu
    p = _t_minus_arctan(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(t > 1e-8, p ** (1 / 6) / np.sqrt(t), 3 ** (-1 / 6))
    arg = -((1.5 * nu * p) ** (2 / 3))
    ai, _ = airy(np.atleast_1d(arg))
    return _LANGER_PREF * nu ** (-1 / 3) * ratio * ai.reshape(np.shape(arg))


def krasikov(nu, z):
    """Transition form 2^{1/3} nu^{-1/3} Ai(-2^{1/3} y), y = (z - nu)/nu^{1/3}."""
    nu = np.asarray(nu, dtype=float)
    y = (np.asarray(z, dtype=float) - nu) / nu ** (1 / 3)
    ai, _ = airy(np.atleast_1d(-(2 ** (1 / 3)) * y))
    return 2 ** (1 / 3) * nu ** (-1 / 3) * ai.reshape(np.shape(y))


def oscillatory(nu, z):
    """Leading oscillatory term sqrt(2/pi) (z^2-nu^2)^{-1/4} cos(omega)."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    d = (z - nu) * (z + nu)
    return math.sqrt(2 / math.pi) * d ** -0.25 * np.cos(_omega(nu, z))


def _omega(nu, z):
    d = (z - nu) * (z + nu)
    s = np.sqrt(d)
    return s - nu * np.arctan(s / nu) - math.pi / 4


def series_value(nu, z):
    """Power series for small z, summed with a log-space prefactor."""
    nu = float(nu)
    z = float(z)
    if z == 0:
        return 1.0 if nu == 0 else 0.0
    w = -(z * z) / 4
    term, total = 1.0, 1.0
    ell = 0
    while abs(term) > 1e-18 * abs(total):
        ell += 1
        term *= w / (ell * (nu + ell))
        total += term
        if ell > 400:
            break
    return math.exp(nu * math.log(z / 2) - math.lgamma(nu + 1)) * total


def series_error(nu, z, value):
    """Rounding estimate for :func:`series_value`, dominated by exp of the log prefactor."""
    logpref = abs(nu * math.log(z / 2)) + math.lgamma(nu + 1) if z > 0 else 0.0
    return 4 * np.finfo(float).eps * (logpref + 64) * abs(value)


def transition_halfwidth(nu):
    """nu^{1/3} nu^{4/15} = nu^{3/5}: the window where the y-form is stated."""
    return nu ** 0.6


def _uniform_vector(nu, z, cfg):
    """Vectorised uniform evaluation for fixed nu >= cfg.oracle_below.

    Returns (values, regime codes, error estimates); codes index REGIMES.
    """
    z = np.asarray(z, dtype=float)
    C = cfg.C
    val = np.empty_like(z)
    code = np.empty(z.shape, dtype=np.int8)
    err = np.empty_like(z)
    hw = transition_halfwidth(nu)
    e_langer = C * nu ** (-4 / 3)

    ser = z <= math.sqrt(nu + 1)
    below = (~ser) & (z < nu - hw)
    above = (~ser) & (z > nu + hw)
    trans = ~(ser | below | above)

    for i in np.nonzero(ser)[0]:
        v = series_value(nu, z[i])
        val[i] = v
        err[i] = series_error(nu, z[i], v)
    code[ser] = 0

    if below.any():
        val[below] = langer_below(nu, z[below])
        code[below] = 2
        err[below] = e_langer

    if trans.any():
        zt = z[trans]
        if cfg.transition == "krasikov":
            val[trans] = krasikov(nu, zt)
            y = (zt - nu) / nu ** (1 / 3)
            err[trans] = C * (1 + np.abs(y) ** 2.25) / nu
        else:
            lo = zt <= nu
            v = np.empty_like(zt)
            if lo.any():
                v[lo] = langer_below(nu, zt[lo])
            if (~lo).any():
                v[~lo] = langer_above(nu, zt[~lo])
            val[trans] = v
            err[trans] = e_langer
        code[trans] = 3

    if above.any():
        za = z[above]
        d = (za - nu) * (za + nu)
        e_osc = C * za * za * d ** (-7 / 4)
        onset = za >= nu + nu ** (1 / 3 + cfg.eps0)
        use_osc = onset & (e_osc <= e_langer)
        v = np.empty_like(za)
        e = np.empty_like(za)
        if use_osc.any():
            v[use_osc] = oscillatory(nu, za[use_osc])
            e[use_osc] = e_osc[use_osc]
        if (~use_osc).any():
            v[~use_osc] = langer_above(nu, za[~use_osc])
            e[~use_osc] = e_langer
        val[above] = v
        err[above] = e
        code[above] = np.where(use_osc, 4, 2)
    return val, code, err


def bessel_j_uniform_array(nu, z, cfg=None):
    """Array form of :func:`bessel_j_uniform`: (values, regime names, errors)."""
    cfg = cfg or UniformConfig()
    if nu <= 0:
        raise DomainError("order must be positive")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0):
        raise DomainError("argument must be nonnegative")
    if nu < cfg.oracle_below:
        if float(nu) != int(nu):
            raise ParameterError("orders below the uniform threshold must be integers")
        vals = np.array([float(bessel_j_oracle(int(nu), float(x), cfg.oracle_bits)) for x in z])
        return vals, np.array(["quadrature-oracle"] * len(z)), np.full(len(z), 2.0 ** -cfg.oracle_bits)
    val, code, err = _uniform_vector(float(nu), z, cfg)
    return val, np.array(REGIMES)[code], err


def bessel_j_uniform(nu, z, cfg=None):
    """J_nu(z) from the uniform asymptotics with a regime tag and error estimate."""
    v, r, e = bessel_j_uniform_array(nu, [z], cfg)
    return BesselEval(float(v[0]), str(r[0]), float(e[0]))


def overlap_check(nu, npts=64, cfg=None):
    """Compare the two applicable formulas in each overlap window.

    Windows: transition form vs Langer on |y| <= nu^{4/15}; oscillatory vs
    Langer above the oscillatory onset. Raises ConsistencyError if any
    disagreement exceeds the sum of the two error estimates; otherwise
    returns the worst ratio of disagreement to allowance.
    """
    cfg = cfg or UniformConfig()
    C = cfg.C
    hw = transition_halfwidth(nu)
    zt = np.linspace(nu - hw, nu + hw, npts)
    lang = np.where(zt <= nu, langer_below(nu, np.minimum(zt, nu)), langer_above(nu, np.maximum(zt, nu)))
    y = (zt - nu) / nu ** (1 / 3)
    allow_t = C * nu ** (-4 / 3) + C * (1 + np.abs(y) ** 2.25) / nu
    r1 = np.abs(lang - krasikov(nu, zt)) / allow_t
    z0 = nu + nu ** (1 / 3 + cfg.eps0)
    zo = np.linspace(z0, 4 * nu, npts)
    d = (zo - nu) * (zo + nu)
    allow_o = C * nu ** (-4 / 3) + C * zo * zo * d ** (-7 / 4)
    r2 = np.abs(langer_above(nu, zo) - oscillatory(nu, zo)) / allow_o
    worst = float(max(r1.max(), r2.max()))
    if worst > 1:
        raise ConsistencyError(f"regime overlap disagreement at nu={nu}: ratio {worst:.3g}")
    return worst


# ---------------------------------------------------------------- phase

@dataclass(frozen=True)
class PhasePoint:
    nu: float
    z: float
    omega: float
    omega1: float
    omega2: float


def phase(nu, z):
    """omega(z) = sqrt(z^2-nu^2) - nu arctan(sqrt(z^2/nu^2-1)) - pi/4 and derivatives."""
    nu = float(nu)
    z = float(z)
    if not z > nu:
        raise DomainError("phase needs z > nu")
    d = (z - nu) * (z + nu)
    s = math.sqrt(d)
    om = s - nu * math.atan(s / nu) - math.pi / 4
    return PhasePoint(nu, z, om, s / z, nu * nu / (z * z * s))


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class BoundCheck:
    name: str
    applies: bool
    value_log10: float
    bound_log10: float
    margin_log10: float = field(default=math.nan)
    passed: bool = True


def delta_max(nu, z):
    """Largest delta in (0, 2/3] with z <= (nu+1) - (nu+1)^{1/3+delta}, or None."""
    gap = (nu + 1) - z
    if gap <= 1:
        return None
    d = math.log(gap) / math.log(nu + 1) - 1 / 3
    if d <= 0:
        return None
    return min(d, 2 / 3)


def bound_suite(nu, z, C=10.0, delta=None, precision_bits=64):
    """Check the three Bessel bounds at (nu, z) against the oracle value.

    Comparisons are made in log10 so that values far below double range
    are handled. ``delta`` defaults to the largest admissible value for
    the second bound.
    """
    if nu < 30:
        raise ParameterError("bound suite is stated for nu >= 30")
    n = int(nu)
    J = bessel_j_oracle(n, z, precision_bits)
    lv = float(mpmath.log10(abs(J))) if J != 0 else -math.inf
    out = []

    def mk(name, applies, lb):
        if not applies:
            return BoundCheck(name, False, lv, math.nan, math.nan, True)
        return BoundCheck(name, True, lv, lb, lb - lv, lv <= lb)

    zf = float(z)
    ap1 = zf <= (nu + 1) / 4
    lb1 = (math.log10(C) + 2 * math.log10(zf) - 14 * nu / 13 / math.log(10)) if zf > 0 else -math.inf
    out.append(mk("small-argument", ap1, lb1))
    d = delta if delta is not None else delta_max(nu, zf)
    ap2 = d is not None and 0 < d <= 2 / 3 and zf <= (nu + 1) - (nu + 1) ** (1 / 3 + d)
    lb2 = math.log10(C) - (nu ** d) / math.log(10) if d is not None else math.nan
    out.append(mk("below-transition", ap2, lb2))
    out.append(mk("uniform", True, math.log10(C) - math.log10(nu) / 3))
    return out


# ---------------------------------------------------------------- Mellin transform of J


def mellin_bessel(nu, s):
    """int_0^inf xi^{s-1} J_nu(xi) d xi = 2^{s-1} Gamma((nu+s)/2) / Gamma((nu-s)/2 + 1)."""
    if not (-nu < s <= 1.5):
        raise DomainError("needs -nu < s <= 3/2")
    return float(2 ** (s - 1) * mpmath.gamma((nu + s) / 2) / mpmath.gamma((nu - s) / 2 + 1))


def mellin_bessel_numeric(nu, s, Z=400.0, nodes=16, terms=12):
    """Quadrature of the same integral: Gauss-Legendre on [0, Z] plus an exact tail.

    Beyond Z the Hankel expansion J = Re[sqrt(2/pi) e^{i chi} sum_k i^k a_k xi^{-k-1/2}],
    chi = xi - nu pi/2 - pi/4, is integrated termwise through
    int_Z^inf xi^{a-1} e^{i xi} d xi = e^{i pi a/2} Gamma(a, -iZ).
    Returns (value, tail part).
    """
    if not (-nu < s <= 1.5):
        raise DomainError("needs -nu < s <= 3/2")
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.append(np.arange(0.0, Z, math.pi / 2), Z)
    a, b = edges[:-1, None], edges[1:, None]
    xs = ((b - a) / 2 * x + (a + b) / 2).ravel()
    ws = ((b - a) / 2 * w).ravel()
    head = math.fsum(ws * xs ** (s - 1) * bessel_j(nu, xs))
    with mpmath.workdps(30):
        acc, ak = mpmath.mpc(0), mpmath.mpf(1)
        for k in range(terms):
            if k:
                ak *= (4 * nu * nu - (2 * k - 1) ** 2) / (8 * mpmath.mpf(k))
            e = s - k - mpmath.mpf(1) / 2
            acc += (1j) ** k * ak * mpmath.exp(1j * mpmath.pi * e / 2) * mpmath.gammainc(e, -1j * Z)
        phase0 = mpmath.exp(-1j * (nu * mpmath.pi / 2 + mpmath.pi / 4))
        tail = float(mpmath.re(mpmath.sqrt(2 / mpmath.pi) * phase0 * acc))
    return head + tail, tail
