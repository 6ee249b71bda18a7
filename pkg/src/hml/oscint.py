"""Bessel-kernel quadrature, the smoothing window, its Hankel transform and Mellin transform.

The engine (:func:`integrate_bessel_kernel`) is composite Gauss-Legendre on
panels sized from the local oscillation of J_nu (via the phase derivative
omega') and of the smooth factor, refined by panel halving until two levels
agree.

The window is w(xi) = g(Delta(xi-1)) g(Delta(2-xi)) with
g(t) = h(t)/(h(t)+h(1-t)), h(t) = exp(-1/t) for t > 0. Derivatives are
taken exactly through truncated Taylor jets.

The transform w~(xi) = int_0^inf w(t) J_{k-1}(4 pi sqrt(K xi t)) dt,
K = k^2 + Delta^2, is evaluated in the variable y = 4 pi sqrt(K xi t):

    w~(xi) = (8 pi^2 K xi)^{-1} int y w(y^2/(16 pi^2 K xi)) J_{k-1}(y) dy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import expit, roots_legendre

from .errors import DomainError, ParameterError, ResourceError
from .specfun import bessel_j, bessel_j_uniform_array

# ---------------------------------------------------------------- window


def _g_jet(t, J):
    """Taylor coefficients (shape (J+1, n)) of g at the points ``t``.

    g = expit(u), u(t) = 1/(1-t) - 1/t on (0, 1). With S = g o u the jet
    follows from S' = u' S (1 - S) coefficientwise. Points within 2e-3 of
    the ends are set to the flat limit; the neglected values are below
    exp(-490).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((J + 1, t.size))
    out[0] = np.where(t >= 1, 1.0, 0.0)
    inside = (t > 2e-3) & (t < 1 - 2e-3)
    if not inside.any():
        return out
    ti = t[inside]
    jj = np.arange(J + 1)[:, None]
    U = 1.0 / (1.0 - ti) ** (jj + 1) - (-1.0) ** jj / ti ** (jj + 1)
    S = np.zeros_like(U)
    S[0] = expit(U[0])
    for n in range(1, J + 1):
        acc = np.zeros_like(ti)
        for k in range(1, n + 1):
            m = n - k
            P = S[m] - sum(S[i] * S[m - i] for i in range(m + 1))
            acc += k * U[k] * P
        S[n] = acc / n
    out[:, inside] = S
    edge_hi = (t >= 1 - 2e-3) & (t < 1)
    out[0, edge_hi] = 1.0
    return out


def g_value(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        u = 1.0 / (1.0 - t) - 1.0 / t
        v = expit(u)
    return np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, v))


@lru_cache(maxsize=None)
def g_derivative_sups(J=8, npts=200001):
    """G_i = max over [0, 1] of |g^{(i)}|, i = 0..J, measured on a fine grid."""
    t = np.linspace(0, 1, npts)
    jet = _g_jet(t, J)
    fact = np.array([math.factorial(i) for i in range(J + 1)])[:, None]
    return tuple(float(v) for v in np.abs(jet * fact).max(axis=1))


@dataclass(frozen=True)
class SmoothingWindow:
    """Smooth bump supported on [1, 2], equal to 1 on [1 + 1/Delta, 2 - 1/Delta]."""

    delta: float
    j_max: int = 4

    def __post_init__(self):
        if self.delta < 1:
            raise ParameterError("Delta must be >= 1")

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return g_value(self.delta * (xi - 1)) * g_value(self.delta * (2 - xi))

    def derivatives(self, xi, order=None):
        """Array (order+1, n) with w^{(j)}(xi) in row j."""
        J = self.j_max if order is None else order
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        d = self.delta
        a = _g_jet(d * (xi - 1), J) * (d ** np.arange(J + 1))[:, None]
        b = _g_jet(d * (2 - xi), J) * ((-d) ** np.arange(J + 1))[:, None]
        prod = np.zeros_like(a)
        for n in range(J + 1):
            prod[n] = sum(a[i] * b[n - i] for i in range(n + 1))
        fact = np.array([math.factorial(j) for j in range(J + 1)], dtype=float)[:, None]
        return prod * fact

    @property
    def constants(self):
        """C_j with |w^{(j)}| <= C_j Delta^j (Leibniz on the two factors)."""
        G = g_derivative_sups(max(self.j_max, 1))
        return tuple(sum(math.comb(j, i) * G[i] * G[j - i] for i in range(j + 1))
                     for j in range(self.j_max + 1))

    def ramp_points(self):
        d = self.delta
        lo, hi = 1 + 1 / d, 2 - 1 / d
        if lo >= hi:
            return (1.0, 1.5, 2.0)
        return (1.0, lo, hi, 2.0)

    def integrate(self, f, nodes=24, panels_per_ramp=8, freq=0.0):
        """int_1^2 f(y) w(y) dy by Gauss-Legendre on ramp-aligned panels.

        ``freq`` is the largest angular frequency of f on [1, 2]; panels are
        kept below one half period of it.
        """
        pts = self.ramp_points()
        x, wt = roots_legendre(nodes)
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            ramp = (b - a) <= 1.0 / self.delta + 1e-15
            npan = panels_per_ramp if ramp else max(1, int(math.ceil((b - a) * 8)))
            npan = max(npan, int(math.ceil((b - a) * freq / math.pi)))
            edges = np.linspace(a, b, npan + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                y = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
                total = total + 0.5 * (hi - lo) * np.sum(wt * f(y) * self(y))
        return total


def window_sum(x, window, power=1):
    """sum_{n >= 1} w(n/x)^power."""
    n = np.arange(max(1, int(math.floor(x)) + 1), int(math.ceil(2 * x)) + 1)
    return math.fsum(window(n / x) ** power)


# ---------------------------------------------------------------- engine

_GL_CACHE = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = roots_legendre(n)
    return _GL_CACHE[n]


def local_frequency(nu, y):
    """Local angular frequency of J_nu near y.

    omega'(y) beyond the turning point; the Airy scale nu^{-1/3} near it;
    below it the logarithmic growth rate of J_nu.
    """
    y = np.asarray(y, dtype=float)
    nu = float(nu)
    with np.errstate(divide="ignore", invalid="ignore"):
        osc = np.sqrt(np.maximum(y * y - nu * nu, 0.0)) / np.maximum(y, 1e-300)
        grow = np.sqrt(np.maximum(nu * nu - y * y, 0.0)) / np.maximum(y, 1e-300)
    airy = max(nu, 1.0) ** (-1 / 3)
    return np.maximum(np.maximum(osc, airy), np.minimum(grow, 1e6) / 3)


def _base_partition(nu, a, b, breakpoints, g_freq, max_panel):
    cuts = sorted({float(a), float(b), *[float(p) for p in breakpoints if a < p < b]})
    edges = [cuts[0]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        y = lo
        while y < hi:
            f = float(local_frequency(nu, y)) + g_freq
            h = min(max_panel, math.pi / f)
            # look ahead so that a panel never straddles a faster region
            f2 = float(local_frequency(nu, min(y + h, hi))) + g_freq
            h = min(h, math.pi / f2)
            y = min(y + h, hi)
            if hi - y < 1e-12 * max(1.0, abs(hi)):
                y = hi
            edges.append(y)
    return np.array(edges)


def _kernel_values(nu, y, kernel):
    if kernel == "accurate":
        return bessel_j(nu, y)
    if kernel == "uniform":
        v, _, _ = bessel_j_uniform_array(nu, y)
        return v
    if callable(kernel):
        return kernel(y)
    raise ParameterError(f"unknown kernel {kernel!r}")


def _panel_rule(edges, nodes):
    x, wt = _gl(nodes)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    y = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * wt[None, :]
    return y.ravel(), w.ravel()


@dataclass(frozen=True)
class QuadResult:
    value: complex
    gap: float
    panels: int
    levels: int


def integrate_bessel_kernel(g, nu, a, b, tol=1e-10, rtol=1e-12, kernel="accurate",
                            breakpoints=(), g_freq=0.0, max_panel=8.0, nodes=16,
                            max_panels=1 << 21, detail=False):
    """int_a^b g(y) J_nu(y) dy by oscillation-aware composite Gauss-Legendre.

    ``g`` is vectorised and may be complex. ``g_freq`` is the angular
    frequency of g's own oscillation (1 for e^{iy}). Refinement halves all
    panels until successive levels differ by at most max(tol, rtol |I|).
    """
    if b < a or a < 0:
        raise DomainError("need 0 <= a <= b")
    if a == b:
        return QuadResult(0.0, 0.0, 0, 0) if detail else 0.0
    edges = _base_partition(nu, a, b, breakpoints, g_freq, max_panel)

    def level(e):
        y, w = _panel_rule(e, nodes)
        return np.sum(w * g(y) * _kernel_values(nu, y, kernel))

    prev = level(edges)
    levels = 0
    while True:
        mids = 0.5 * (edges[:-1] + edges[1:])
        fine = np.empty(2 * len(edges) - 1)
        fine[0::2] = edges
        fine[1::2] = mids
        if len(fine) - 1 > max_panels:
            raise ResourceError("panel budget exhausted", estimate=prev, gap=None)
        cur = level(fine)
        levels += 1
        gap = abs(cur - prev)
        edges = fine
        if gap <= max(tol, rtol * abs(cur)):
            break
        prev = cur
        if levels > 12:
            raise ResourceError("quadrature did not converge", estimate=cur, gap=gap)
    val = cur if np.iscomplexobj(cur) else float(cur)
    if detail:
        return QuadResult(val, float(gap), len(edges) - 1, levels)
    return val


# ---------------------------------------------------------------- named integrals


def transition_moment(nu, kernel="uniform", tol=1e-8):
    """int over [(nu+1) -+ (nu+1)^{1/2}] of y J_nu(y) dy."""
    if nu < 50:
        raise ParameterError("transition_moment is stated for nu >= 50")
    c = nu + 1
    a, b = c - math.sqrt(c), c + math.sqrt(c)
    return integrate_bessel_kernel(lambda y: y, nu, a, b, tol=tol, kernel=kernel,
                                   breakpoints=(nu,))


def oscillatory_range_integral(nu, alpha, beta, kernel="accurate", tol=1e-9):
    """int_alpha^beta y J_nu(y) dy; bounded by alpha^2 (alpha^2 - nu^2)^{-3/4}."""
    return integrate_bessel_kernel(lambda y: y, nu, alpha, beta, tol=tol, kernel=kernel)


def oscillatory_range_bound(nu, alpha):
    return alpha * alpha * (alpha * alpha - nu * nu) ** -0.75


def errorterm_integral(k, x, c, sign, tol=1e-9):
    """int_{4 pi x/c}^{8 pi x/c} y^{1/2} J_{k-1}(y) e^{i sign y} dy (complex)."""
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    if c > 32 * math.pi * x / k:
        raise DomainError("needs c <= 32 pi x / k")
    a, b = 4 * math.pi * x / c, 8 * math.pi * x / c
    return complex(integrate_bessel_kernel(lambda y: np.sqrt(y) * np.exp(1j * sign * y),
                                           k - 1, a, b, tol=tol, g_freq=1.0,
                                           breakpoints=(k - 1,)))


# ---------------------------------------------------------------- Hankel window


@dataclass(frozen=True)
class HankelWindow:
    k: int
    delta: float
    nodes: int = 12
    ramp_panels: int = 4
    osc_panel: float = math.pi / 2
    negligible_log: float = -80.0

    @property
    def scale(self):
        return self.k * self.k + self.delta * self.delta

    @property
    def window(self):
        return SmoothingWindow(self.delta)

    def y_range(self, xi):
        y0 = 4 * math.pi * math.sqrt(self.scale * xi)
        return y0, math.sqrt(2) * y0

    def refined(self, factor=2):
        return HankelWindow(self.k, self.delta, self.nodes, self.ramp_panels * factor,
                            self.osc_panel / factor, self.negligible_log)


def _log_j_below(nu, y):
    """Cheap upper estimate of log|J_nu(y)| for y < nu (used for skipping)."""
    if y <= 0:
        return -math.inf
    if y >= nu:
        return 0.0
    r = y / nu
    a = math.acosh(1 / r)
    return -nu * (a - math.sqrt(1 - r * r))


def _y_floor(hw):
    """Below this y, |J_{k-1}| < exp(negligible_log)."""
    nu = hw.k - 1
    lo, hi = 1e-9, float(nu)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _log_j_below(nu, mid) < hw.negligible_log:
            lo = mid
        else:
            hi = mid
    return lo


class HankelGrid:
    """J_{k-1} tabulated once on a global composite Gauss-Legendre grid.

    The integrand of w~ vanishes with all derivatives at both ends of its
    support, so one global grid whose panels resolve both the oscillation
    of J and the narrowest window ramp near each y integrates every w~(xi)
    without aligning panels to the support.
    """

    def __init__(self, hw: HankelWindow, y_max):
        self.hw = hw
        nu = hw.k - 1
        y_lo = _y_floor(hw)
        self.y_lo = y_lo
        edges = [y_lo]
        y = y_lo
        while y < y_max:
            ramp = y / (4 * hw.delta) / hw.ramp_panels
            f = float(local_frequency(nu, y))
            h = max(min(ramp, hw.osc_panel / max(f, 0.25), 8.0), 1e-6)
            y += h
            edges.append(y)
        yy, ww = _panel_rule(np.array(edges), hw.nodes)
        self.y = yy
        self.wj = ww * yy * bessel_j(nu, yy)

    def tilde_w(self, xis):
        hw = self.hw
        K = hw.scale
        win = hw.window
        xis = np.atleast_1d(np.asarray(xis, dtype=float))
        out = np.zeros(xis.shape)
        for i, xi in enumerate(xis):
            if xi <= 0:
                continue
            y0, y1 = hw.y_range(xi)
            if y1 <= self.y_lo:
                continue
            if y1 > self.y[-1]:
                raise ParameterError("grid does not reach this xi")
            i0, i1 = np.searchsorted(self.y, [y0, y1])
            yy = self.y[i0:i1]
            t = yy * yy / (16 * math.pi**2 * K * xi)
            out[i] = np.sum(self.wj[i0:i1] * win(t)) / (8 * math.pi**2 * K * xi)
        return out


def tilde_w(xi, hw: HankelWindow, rtol=1e-11):
    """w~(xi) for one xi via the adaptive engine."""
    if xi < 0:
        raise DomainError("xi must be >= 0")
    if xi == 0:
        return 0.0
    K = hw.scale
    y0, y1 = hw.y_range(xi)
    d = hw.delta
    bps = [y0 * math.sqrt(1 + 1 / d), y0 * math.sqrt(2 - 1 / d)] if d > 2 else []
    c = 16 * math.pi**2 * K * xi
    win = hw.window
    ramp = y0 / (4 * d)
    return float(integrate_bessel_kernel(lambda y: y * win(y * y / c), hw.k - 1, y0, y1,
                                         tol=1e-300, rtol=rtol,
                                         breakpoints=bps, max_panel=max(ramp / 8, 1e-3))
                 / (8 * math.pi**2 * K * xi))


@dataclass(frozen=True)
class DecayConstants:
    xis: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    C: dict = field(default_factory=dict)
    far_slope: float = math.nan


def measure_decay(hw: HankelWindow, xi_min=1e-3, xi_max=16.0, npts=400, grid=None):
    """Measured C_A = max xi^{A/2} |w~(xi)| for A in {2, 4} and the far log-log slope.

    The far slope is fitted to the running maximum of |w~| over the upper
    half (in log xi) of the grid, i.e. to the decay envelope.
    """
    xis = np.geomspace(xi_min, xi_max, npts)
    if grid is None:
        grid = HankelGrid(hw, 4 * math.pi * math.sqrt(2 * hw.scale * xi_max) * 1.001)
    v = grid.tilde_w(xis)
    C = {A: float(np.max(xis ** (A / 2) * np.abs(v))) for A in (2, 4)}
    half = xis >= math.sqrt(xi_min * xi_max) * (xi_max / xi_min) ** 0.25
    env = np.maximum.accumulate(np.abs(v[half])[::-1])[::-1]
    good = env > 0
    slope = math.nan
    if good.sum() > 2:
        slope = float(np.polyfit(np.log(xis[half][good]), np.log(env[good]), 1)[0])
    return DecayConstants(xis, v, C, slope)


# ---------------------------------------------------------------- Mellin


def mellin_phi(s, k, delta, sigma0=0.1):
    """Closed form of int_0^inf xi^{s-1} w~(xi) d xi.

    (4 pi^2 K)^{-s} Gamma((k-1)/2 + s)/Gamma((k+1)/2 - s) int_1^2 y^{-s} w(y) dy.
    """
    s = complex(s)
    if not (sigma0 <= s.real <= 1 - sigma0):
        raise DomainError(f"Re s must lie in [{sigma0}, {1 - sigma0}]")
    K = k * k + delta * delta
    win = SmoothingWindow(delta)
    with mpmath.workdps(30):
        ms = mpmath.mpc(s.real, s.imag)
        lg = mpmath.loggamma((k - 1) / mpmath.mpf(2) + ms) - mpmath.loggamma((k + 1) / mpmath.mpf(2) - ms)
        pref = complex(mpmath.exp(-ms * mpmath.log(4 * mpmath.pi**2 * K) + lg))
    wint = win.integrate(lambda y: np.exp(-s * np.log(y)), freq=abs(s.imag))
    return pref * complex(wint)


def mellin_phi_direct(s, k, delta, xi_max=16.0, nodes=20, hw=None):
    """Direct quadrature of int_0^{xi_max} xi^{s-1} w~(xi) d xi plus a tail bound.

    Integrated in u = sqrt(xi), where w~ oscillates at angular frequency at
    most 4 pi sqrt(2K); panels span one period of that frequency. Returns
    (value, tail_bound), the tail being bounded through the measured C_4:
    int_{xi_max}^inf xi^{sigma-1} C_4 xi^{-2} d xi = C_4 xi_max^{sigma-2}/(2-sigma).
    """
    s = complex(s)
    hw = hw or HankelWindow(k, delta)
    K = hw.scale
    y_floor = _y_floor(hw)
    u_lo = (y_floor / math.sqrt(2)) / (4 * math.pi * math.sqrt(K))
    u_hi = math.sqrt(xi_max)
    grid = HankelGrid(hw, 4 * math.pi * math.sqrt(2 * K * xi_max) * 1.001)
    F = 4 * math.pi * math.sqrt(2 * K)
    npan = max(8, int(math.ceil((u_hi - u_lo) * F / (2 * math.pi))))
    u, wu = _panel_rule(np.linspace(u_lo, u_hi, npan + 1), nodes)
    vals = grid.tilde_w(u * u)
    integral = np.sum(wu * 2 * u ** (2 * s - 1) * vals)
    dec = measure_decay(hw, xi_min=xi_max / 16, xi_max=xi_max, npts=64, grid=grid)
    tail = dec.C[4] * xi_max ** (s.real - 2) / (2 - s.real)
    return complex(integral), tail
