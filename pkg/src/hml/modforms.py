"""Level-one cusp forms: exact q-expansions, Miller bases, Hecke operators
and numerically extracted Hecke eigenvalues.

Everything up to and including the Hecke matrices is exact integer
arithmetic. Eigenvalues are found with mpmath at a working precision
that adds guard bits for the cancellation incurred when eigenforms are
assembled from the (large) Miller basis coefficients.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np

from .errors import (
    CacheMissError,
    ConsistencyError,
    DegenerateSpectrumError,
    InsufficientTableError,
    ParameterError,
    PrecisionError,
)

CACHE_VERSION = 1
DEFAULT_PRECISION_BITS = 256


# ---------------------------------------------------------------------------
# exact series arithmetic
# ---------------------------------------------------------------------------

def _poly_mul(a, b, n):
    """Product of integer coefficient lists truncated to ``n`` terms.

    Uses Kronecker substitution: both operands are packed into one big
    integer with a per-slot width large enough that no slot overflows.
    Negative coefficients are handled by biasing every slot by half its
    range before unpacking.
    """
    a = a[:n]
    b = b[:n]
    if not a or not b:
        return [0] * n
    bound = max(abs(x) for x in a) * max(abs(x) for x in b) * min(len(a), len(b))
    if bound == 0:
        return [0] * n
    width = (bound.bit_length() + 2 + 7) // 8  # bytes per slot
    shift = 8 * width
    pa = sum(c << (shift * i) for i, c in enumerate(a) if c)
    pb = sum(c << (shift * i) for i, c in enumerate(b) if c)
    prod = pa * pb
    slots = n
    half = 1 << (shift - 1)
    bias = int.from_bytes((b"\x00" * (width - 1) + b"\x80") * slots, "little")
    mask = (1 << (shift * slots)) - 1
    raw = ((prod + bias) & mask).to_bytes(width * slots, "little")
    out = []
    for i in range(slots):
        digit = int.from_bytes(raw[i * width:(i + 1) * width], "little")
        out.append(digit - half)
    return out


def _sigma(n, p):
    total = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            e = n // d
            total += d ** p
            if e != d:
                total += e ** p
    return total


@dataclass(frozen=True)
class IntegerSeries:
    """Truncated q-expansion with exact integer coefficients a(0..length-1)."""

    weight: int
    coefficients: tuple
    length: int = field(default=-1)

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if self.length == -1:
            object.__setattr__(self, "length", len(coeffs))
        if self.length != len(coeffs):
            raise ParameterError("length does not match number of coefficients")

    def __getitem__(self, n):
        return self.coefficients[n]

    def __len__(self):
        return self.length

    def __mul__(self, other):
        if isinstance(other, int):
            return IntegerSeries(self.weight, tuple(other * c for c in self.coefficients))
        n = min(self.length, other.length)
        return IntegerSeries(self.weight + other.weight,
                             tuple(_poly_mul(list(self.coefficients), list(other.coefficients), n)))

    __rmul__ = __mul__

    def __sub__(self, other):
        if self.weight != other.weight:
            raise ParameterError("cannot subtract forms of different weight")
        n = min(self.length, other.length)
        return IntegerSeries(self.weight, tuple(a - b for a, b in zip(self.coefficients[:n],
                                                                        other.coefficients[:n])))

    def __add__(self, other):
        if self.weight != other.weight:
            raise ParameterError("cannot add forms of different weight")
        n = min(self.length, other.length)
        return IntegerSeries(self.weight, tuple(a + b for a, b in zip(self.coefficients[:n],
                                                                        other.coefficients[:n])))

    def __pow__(self, e):
        if e < 0:
            raise ParameterError("negative power")
        result = IntegerSeries(0, (1,) + (0,) * (self.length - 1))
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def truncate(self, n):
        return IntegerSeries(self.weight, self.coefficients[:n])

    @property
    def is_cuspidal(self):
        return self.length > 0 and self.coefficients[0] == 0


@lru_cache(maxsize=32)
def eisenstein(k, N):
    """E4 = 1 + 240 sum sigma_3(n) q^n or E6 = 1 - 504 sum sigma_5(n) q^n."""
    if k not in (4, 6):
        raise ParameterError(f"only E4 and E6 are supported, got k={k}")
    if N < 1:
        raise ParameterError("N must be >= 1")
    c, p = (240, 3) if k == 4 else (-504, 5)
    return IntegerSeries(k, (1,) + tuple(c * _sigma(n, p) for n in range(1, N)))


@lru_cache(maxsize=32)
def delta(N):
    """The discriminant form (E4^3 - E6^2)/1728 to N terms."""
    if N < 2:
        raise ParameterError("delta needs N >= 2")
    e4, e6 = eisenstein(4, N), eisenstein(6, N)
    diff = e4 ** 3 - e6 ** 2
    out = []
    for c in diff.coefficients:
        q, r = divmod(c, 1728)
        if r:
            raise ConsistencyError("E4^3 - E6^2 not divisible by 1728")
        out.append(q)
    return IntegerSeries(12, tuple(out))


def cusp_dimension(k):
    """dim S_k for level one (closed form)."""
    if k % 2 or k < 0:
        return 0
    if k % 12 == 2:
        return max(k // 12 - 1, 0)
    return k // 12


def monomial_count_dimension(k):
    """dim S_k by counting monomials E4^a E6^b of weight k, minus one.

    Independent of :func:`cusp_dimension`; used as its oracle.
    """
    if k % 2 or k < 0:
        return 0
    count = sum(1 for b in range(k // 6 + 1) if (k - 6 * b) % 4 == 0)
    return max(count - 1, 0)


# ---------------------------------------------------------------------------
# Miller basis and Hecke matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MillerBasis:
    weight: int
    dimension: int
    forms: tuple  # of IntegerSeries, forms[i] has a(i+1) = 1, a(j+1) = 0 (j != i)

    @property
    def length(self):
        return min(f.length for f in self.forms) if self.forms else 0


@lru_cache(maxsize=16)
def miller_basis(k, N):
    """Echelonised integral basis of S_k, each form known to N terms."""
    if k % 2 or k < 12:
        raise ParameterError(f"need even k >= 12, got {k}")
    d = cusp_dimension(k)
    if d == 0:
        raise ParameterError(f"S_{k} is zero")
    if N < d + 1:
        raise ParameterError(f"N={N} too small for dimension {d} (need N >= {d + 1})")
    e4, e6, dlt = eisenstein(4, N), eisenstein(6, N), delta(N)
    e4_pows = [IntegerSeries(0, (1,) + (0,) * (N - 1))]
    rows = []
    dpow = dlt
    for c in range(1, d + 1):
        rest = k - 12 * c
        b = 0 if rest % 4 == 0 else 1
        a = (rest - 6 * b) // 4
        while len(e4_pows) <= a:
            e4_pows.append(e4_pows[-1] * e4)
        f = dpow * e4_pows[a]
        if b:
            f = f * e6
        rows.append(list(f.coefficients))
        if c < d:
            dpow = dpow * dlt
    # rows[c-1] starts q^c + ...; clear the entries above the diagonal block
    for i in range(d - 1, -1, -1):
        if rows[i][i + 1] != 1:
            raise ConsistencyError("Miller row does not start with 1")
        for j in range(i + 1, d):
            cij = rows[i][j + 1]
            if cij:
                rj = rows[j]
                rows[i] = [x - cij * y for x, y in zip(rows[i], rj)]
    forms = tuple(IntegerSeries(k, tuple(r)) for r in rows)
    return MillerBasis(k, d, forms)


def _is_prime(p):
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


def hecke_matrix(k, p, basis):
    """Integer matrix of T_p acting on coordinate vectors in the Miller basis.

    Column i holds the first ``d`` coefficients of T_p g_i, where
    (T_p f)(n) = a(pn) + p^(k-1) a(n/p). Since the basis is echelon those
    coefficients are the coordinates.
    """
    if not _is_prime(p):
        raise ParameterError(f"p={p} is not prime")
    if basis.weight != k:
        raise ParameterError("weight does not match basis")
    d = basis.dimension
    if basis.length < p * d + 1:
        raise ParameterError(f"basis length {basis.length} < p*d+1 = {p * d + 1}")
    pk = p ** (k - 1)
    mat = [[0] * d for _ in range(d)]
    for i, g in enumerate(basis.forms):
        for j in range(1, d + 1):
            v = g[p * j]
            if j % p == 0:
                v += pk * g[j // p]
            mat[j - 1][i] = v
    return mat


# ---------------------------------------------------------------------------
# eigenforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenBasis:
    """Normalised Hecke eigenvalues lambda_f(n), n = 1..N, for each eigenform.

    ``lam[i][n]`` is an mpf (index 0 is an unused 0), ``values`` the same
    table as float64 with shape (d, N+1).
    """

    weight: int
    dimension: int
    N: int
    lam: tuple
    precision_bits: int
    eigen_residual: float
    values: np.ndarray = field(repr=False, compare=False)

    def lambda_(self, f, n):
        if n < 1 or n > self.N:
            raise InsufficientTableError(f"n={n} outside table 1..{self.N}")
        return self.lam[f][n]


def _num_digits(bits):
    return int(math.ceil(bits * math.log10(2))) + 2


def eigenforms(k, N, precision_bits=DEFAULT_PRECISION_BITS, cache_dir=None, no_compute=False):
    """Hecke eigenbasis of S_k with lambda_f(n) for n <= N.

    With ``cache_dir`` set, results are read from / written to a JSON file
    keyed by (k, N, precision_bits).
    """
    if k % 2 or k < 12:
        raise ParameterError(f"need even k >= 12, got {k}")
    if N < 2:
        raise ParameterError("N must be >= 2")
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"eigen_k{k}_N{N}_p{precision_bits}.json"
        if path.exists():
            return load_eigenbasis(path)
        if no_compute:
            raise CacheMissError(f"no cached eigendata at {path}")
    eb = _compute_eigenforms(k, N, precision_bits)
    if path is not None:
        save_eigenbasis(eb, path)
    return eb


def _compute_eigenforms(k, N, precision_bits):
    d = cusp_dimension(k)
    length = max(N + 1, 3 * d + 1)
    basis = miller_basis(k, length)
    t2 = hecke_matrix(k, 2, basis)
    t3 = hecke_matrix(k, 3, basis)
    max_bits = max(abs(c).bit_length() for g in basis.forms for c in g.coefficients)
    wp = precision_bits + max_bits + 64
    with mpmath.workprec(wp):
        A = mpmath.matrix(t2)
        if d == 1:
            evals = [A[0, 0]]
            evecs = [[mpmath.mpf(1)]]
        else:
            E, ER = mpmath.eig(A)
            evals, evecs = [], []
            for i in range(d):
                ev = E[i]
                if abs(mpmath.im(ev)) > mpmath.mpf(2) ** (-wp // 2) * (1 + abs(ev)):
                    raise PrecisionError("T_2 eigenvalue is not real at this precision; raise precision_bits")
                vec = [ER[j, i] for j in range(d)]
                if abs(vec[0]) == 0:
                    raise ConsistencyError("eigenvector with vanishing first coefficient")
                vec = [mpmath.re(v / vec[0]) for v in vec]
                evals.append(mpmath.re(ev))
                evecs.append(vec)
            order = sorted(range(d), key=lambda i: evals[i])
            evals = [evals[i] for i in order]
            evecs = [evecs[i] for i in order]
            scale = max(abs(e) for e in evals)
            tol = scale * mpmath.mpf(2) ** (-(precision_bits // 2))
            for a, b in zip(evals, evals[1:]):
                if abs(a - b) <= tol:
                    raise DegenerateSpectrumError(f"T_2 eigenvalues {a} and {b} collide (k={k})")
            evecs = [_refine(A, lam_, v) for lam_, v in zip(evals, evecs)]
            evals = [_rayleigh(A, v) for v in evecs]

        resid = mpmath.mpf(0)
        norm_a = max(sum(abs(x) for x in row) for row in t2) or 1
        for lam_, v in zip(evals, evecs):
            r = max(abs(sum(A[i, j] * v[j] for j in range(d)) - lam_ * v[i]) for i in range(d))
            resid = max(resid, r / (norm_a * max(abs(x) for x in v)))

        coeffs = [[int(c) for c in g.coefficients[:N + 1]] for g in basis.forms]
        eps = mpmath.mpf(2) ** (-wp)
        lam_rows = []
        rows_f = np.zeros((d, N + 1))
        for v in evecs:
            row = [mpmath.mpf(0)] * (N + 1)
            for n in range(1, N + 1):
                terms = [v[i] * coeffs[i][n] for i in range(d)]
                a_n = mpmath.fsum(terms)
                scale = mpmath.mpf(n) ** (mpmath.mpf(k - 1) / 2)
                err = (mpmath.fsum(abs(t) for t in terms) * eps * 4 * d) / scale
                if err > mpmath.mpf(2) ** (-precision_bits):
                    raise PrecisionError(
                        f"cancellation at n={n} leaves error {mpmath.nstr(err, 3)}; raise precision_bits")
                row[n] = a_n / scale
            lam_rows.append(tuple(row))
            rows_f[len(lam_rows) - 1] = [float(x) for x in row]

        # T_3 certificate: the T_2 eigenvectors must diagonalise T_3 as well
        if d > 1:
            B = mpmath.matrix(t3)
            norm_b = max(sum(abs(x) for x in row) for row in t3)
            for v in evecs:
                mu = _rayleigh(B, v)
                r = max(abs(sum(B[i, j] * v[j] for j in range(d)) - mu * v[i]) for i in range(d))
                if r / (norm_b * max(abs(x) for x in v)) > max(10 * resid, mpmath.mpf(2) ** (-precision_bits)):
                    raise ConsistencyError("T_2 eigenvectors do not diagonalise T_3")

    return EigenBasis(k, d, N, tuple(lam_rows), precision_bits, float(resid), rows_f)


def _rayleigh(A, v):
    d = len(v)
    Av = [sum(A[i, j] * v[j] for j in range(d)) for i in range(d)]
    return mpmath.fsum(a * b for a, b in zip(Av, v)) / mpmath.fsum(b * b for b in v)


def _refine(A, lam_, v, steps=2):
    """A couple of inverse-iteration steps at the current working precision."""
    d = len(v)
    shift = lam_ * (1 + mpmath.mpf(2) ** (-mpmath.mp.prec // 3))
    M = A - shift * mpmath.eye(d)
    x = mpmath.matrix(v)
    for _ in range(steps):
        try:
            x = mpmath.lu_solve(M, x)
        except ZeroDivisionError:
            break
        x = x / x[0]
    return [mpmath.re(x[i]) for i in range(d)]


def hecke_consistency(basis, M):
    """max over m, n <= M of |lambda(m)lambda(n) - sum_{d|(m,n)} lambda(mn/d^2)|."""
    if M * M > basis.N:
        raise InsufficientTableError(f"M^2 = {M * M} exceeds table length {basis.N}")
    worst = mpmath.mpf(0)
    with mpmath.workprec(basis.precision_bits + 64):
        for lam in basis.lam:
            for m in range(1, M + 1):
                for n in range(m, M + 1):
                    g = math.gcd(m, n)
                    rhs = mpmath.fsum(lam[m * n // (e * e)] for e in range(1, g + 1) if g % e == 0)
                    worst = max(worst, abs(lam[m] * lam[n] - rhs))
    return worst


def sum_S(x, basis, f):
    """sum of lambda_f(n) over the half-open range x < n <= 2x."""
    if x < 0:
        raise ParameterError("x must be >= 0")
    lo = math.floor(x) + 1
    hi = math.floor(2 * x)
    if hi > basis.N:
        raise InsufficientTableError(f"2x = {2 * x} exceeds table length {basis.N}")
    if hi < lo:
        return mpmath.mpf(0)
    with mpmath.workprec(basis.precision_bits + 32):
        return mpmath.fsum(basis.lam[f][lo:hi + 1])


def divisor_count(n):
    return sum(1 if d * d == n else 2 for d in range(1, math.isqrt(n) + 1) if n % d == 0)


# ---------------------------------------------------------------------------
# cache file
# ---------------------------------------------------------------------------

def save_eigenbasis(eb, path):
    digits = _num_digits(eb.precision_bits)
    with mpmath.workprec(eb.precision_bits + 32):
        table = [[mpmath.nstr(x, digits, strip_zeros=False) for x in row[1:]] for row in eb.lam]
    payload = {
        "version": CACHE_VERSION,
        "k": eb.weight,
        "d": eb.dimension,
        "N": eb.N,
        "precision_bits": eb.precision_bits,
        "eigen_residual": eb.eigen_residual,
        "lambda": table,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def load_eigenbasis(path):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != CACHE_VERSION:
        raise CacheMissError(f"cache version mismatch in {path}")
    bits = payload["precision_bits"]
    lam = []
    with mpmath.workprec(bits + 32):
        for row in payload["lambda"]:
            lam.append(tuple([mpmath.mpf(0)] + [mpmath.mpf(s) for s in row]))
    d, N = payload["d"], payload["N"]
    values = np.zeros((d, N + 1))
    for i, row in enumerate(lam):
        values[i] = [float(x) for x in row]
    return EigenBasis(payload["k"], d, N, tuple(lam), bits, payload["eigen_residual"], values)
