import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from hml.errors import CacheMissError, InsufficientTableError, ParameterError
from hml.modforms import (IntegerSeries, cusp_dimension, delta, divisor_count, eigenforms,
                          eisenstein, hecke_consistency, hecke_matrix, load_eigenbasis,
                          miller_basis, monomial_count_dimension, save_eigenbasis, sum_S)

# Ramanujan tau(1..10), tabulated values
TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_delta_matches_tau_table():
    assert list(delta(11).coefficients[1:]) == TAU
    assert delta(11).is_cuspidal


def test_eisenstein_coefficients():
    assert eisenstein(4, 4).coefficients == (1, 240, 2160, 6720)
    assert eisenstein(6, 4).coefficients == (1, -504, -16632, -122976)
    with pytest.raises(ParameterError):
        eisenstein(8, 4)


@given(st.integers(min_value=0, max_value=400))
def test_dimension_two_routes(k):
    assert cusp_dimension(k) == monomial_count_dimension(k)


@given(st.sampled_from([12, 24, 36, 48, 60]), st.integers(min_value=2, max_value=30))
def test_series_power_is_repeated_product(k, N):
    e4 = eisenstein(4, N)
    assert (e4 ** 3).coefficients == (e4 * e4 * e4).coefficients


@pytest.mark.parametrize("k", [12, 24, 36, 50, 72])
def test_miller_basis_is_echelon(k):
    mb = miller_basis(k, 30)
    assert mb.dimension == cusp_dimension(k)
    for i, f in enumerate(mb.forms):
        assert f[0] == 0
        for j in range(mb.dimension):
            assert f[j + 1] == (1 if i == j else 0)


def test_miller_basis_rejects_odd_weight():
    with pytest.raises(ParameterError):
        miller_basis(13, 10)


def test_weight_24_hecke_eigenvalues_closed_form():
    # a(2) for the two eigenforms of weight 24 is 540 -+ 12 sqrt(144169)
    eb = eigenforms(24, 10)
    got = sorted(float(eb.lam[f][2]) * 2 ** 11.5 for f in range(2))
    want = sorted([540 - 12 * math.sqrt(144169), 540 + 12 * math.sqrt(144169)])
    assert got == pytest.approx(want, rel=1e-12)


def test_weight_12_is_tau():
    eb = eigenforms(12, 10)
    for n in range(1, 11):
        assert float(eb.lam[0][n]) == pytest.approx(TAU[n - 1] / n ** 5.5, rel=1e-14)


@pytest.mark.parametrize("k", [24, 36, 60])
def test_hecke_multiplicativity(k):
    eb = eigenforms(k, 64)
    assert hecke_consistency(eb, 8) <= mpmath.mpf(10) ** -30


def test_hecke_consistency_needs_table():
    eb = eigenforms(24, 20)
    with pytest.raises(InsufficientTableError):
        hecke_consistency(eb, 5)


def test_hecke_matrices_commute():
    mb = miller_basis(36, 40)
    T2, T3 = hecke_matrix(36, 2, mb), hecke_matrix(36, 3, mb)
    A = mpmath.matrix(T2) * mpmath.matrix(T3)
    B = mpmath.matrix(T3) * mpmath.matrix(T2)
    assert mpmath.mnorm(A - B, 1) == 0


@pytest.mark.parametrize("k", [24, 48, 72])
def test_deligne_bound(k):
    eb = eigenforms(k, 80)
    for f in range(eb.dimension):
        for n in range(1, 81):
            assert abs(eb.values[f, n]) <= divisor_count(n) + 1e-12


@given(st.integers(min_value=1, max_value=30), st.integers(min_value=1, max_value=30))
def test_coprime_multiplicativity(m, n):
    eb = eigenforms(36, 900)
    if math.gcd(m, n) == 1:
        with mpmath.workprec(eb.precision_bits):
            for lam in eb.lam:
                assert abs(lam[m] * lam[n] - lam[m * n]) < mpmath.mpf(10) ** -60


def test_sum_S_half_open_and_empty(k24):
    basis, _ = k24
    assert sum_S(0.3, basis, 0) == 0
    lam = basis.lam[0]
    tiny = mpmath.mpf(2) ** -200
    with mpmath.workprec(basis.precision_bits):
        assert abs(sum_S(3, basis, 0) - mpmath.fsum(lam[4:7])) < tiny
        assert abs(sum_S(3.5, basis, 0) - mpmath.fsum(lam[4:8])) < tiny
    with pytest.raises(InsufficientTableError):
        sum_S(basis.N, basis, 0)


def test_cache_roundtrip(tmp_path):
    eb = eigenforms(26, 12, 128, cache_dir=tmp_path)
    again = eigenforms(26, 12, 128, cache_dir=tmp_path, no_compute=True)
    worst = max(abs(a - b) for ra, rb in zip(again.lam, eb.lam) for a, b in zip(ra, rb))
    assert worst < mpmath.mpf(2) ** -120
    with pytest.raises(CacheMissError):
        eigenforms(26, 13, 128, cache_dir=tmp_path, no_compute=True)
    save_eigenbasis(eb, tmp_path / "x.json")
    assert load_eigenbasis(tmp_path / "x.json").N == 12


def test_integer_series_guards():
    a = IntegerSeries(4, (1, 2, 3))
    with pytest.raises(ParameterError):
        a + IntegerSeries(6, (1, 2, 3))
    with pytest.raises(ParameterError):
        a ** -1
