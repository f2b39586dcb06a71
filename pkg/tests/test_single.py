import math
from fractions import Fraction

import mpmath
import pytest

from symreg.laurent import H_dimreg, LaurentSeries
from symreg.oracle import ball_integral, mellin_laurent, radial_fp_oracle
from symreg.single import (RIESZ, DIMREG, Regularisation, RegKind, H_prime_zero, asymptotic_expansion,
                           cutoff_integral, cutoff_integral_with_error, dimreg_integral, regularised_laurent,
                           residues)
from symreg.symbols import make_power, make_symbol


def test_convergent_power_is_a_beta_integral():
    # int_{R^n} <xi>^a = pi^(n/2) Gamma(-(a+n)/2) / Gamma(-a/2)
    for a, n in ((-4, 2), (Fraction(-7, 2), 3), (-3, 1)):
        exact = math.pi ** (n / 2) * math.gamma(-(a + n) / 2) / math.gamma(-a / 2)
        assert cutoff_integral(make_power(a), n) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("a,l,n", [(-1, 0, 1), (Fraction(-1, 2), 0, 2), (-2, 1, 2), (Fraction(1, 3), 1, 3),
                                   (-3, 2, 3), (Fraction(-5, 2), 0, 1)])
def test_cutoff_matches_asymptotic_fit(a, l, n):
    s = make_symbol(a, {(0, l): 1})
    fit = radial_fp_oracle(s, n)
    assert cutoff_integral(s, n) == pytest.approx(fit.value, abs=max(1e-6, 10 * fit.abs_error))


def test_asymptotic_expansion_reproduces_ball_integrals():
    s = make_symbol(Fraction(-1, 2), {(0, 0): 1, (1, 1): 2})
    exp = asymptotic_expansion(s, 2)
    # the dropped terms decay like R^(-1/2)
    gaps = [abs(exp.evaluate(R) - ball_integral(s, 2, R)) for R in (100.0, 10000.0)]
    assert gaps[1] < gaps[0] / 5
    assert gaps[1] < 1e-2


@pytest.mark.parametrize("a,l,n", [(-1, 0, 1), (-2, 1, 2), (Fraction(-1, 3), 2, 3), (-3, 2, 3)])
def test_riesz_laurent_matches_mellin_contour(a, l, n):
    s = make_symbol(a, {(0, l): 1})
    lau = regularised_laurent(s, n, RIESZ, K=2)
    ref = mellin_laurent(a, l, n, K=2)
    for d in range(-(l + 1), 3):
        assert lau[d] == pytest.approx(ref.get(d, 0.0), abs=1e-9)


def test_riesz_slope_rescales_poles_only():
    s = make_symbol(-1, {(0, 1): 1})
    one = regularised_laurent(s, 1, RIESZ, K=2)
    three = regularised_laurent(s, 1, Regularisation(RegKind.RIESZ, 3), K=2)
    for d in range(-2, 3):
        assert three[d] == pytest.approx(one[d] * 3.0**d, abs=1e-10)


def test_residues_are_pole_coefficients():
    # the twisted integral of <xi>^-n has the simple pole res_0 / z
    for n in (1, 2, 3):
        s = make_power(-n)
        lau = regularised_laurent(s, n, RIESZ, K=0)
        assert lau[-1] == pytest.approx(residues(s, n)[0], rel=1e-12)


def test_H_series_against_mpmath():
    for p in (1, 2, 3):
        f = lambda z: mpmath.pi ** (-z / 2) * mpmath.gamma(p) / mpmath.gamma(p - z / 2)
        ref = mpmath.taylor(f, 0, 4)
        H = H_dimreg(p, 4)
        for d in range(5):
            assert H[d] == pytest.approx(float(ref[d]), abs=1e-14)
        assert H_prime_zero(p) == pytest.approx(float((mpmath.digamma(p) - mpmath.log(mpmath.pi)) / 2), abs=1e-14)


def test_dimreg_inverse_square_plane_value():
    # fp at 0 of H(z) * int_{R^2} |xi|^-z <xi>^-2 = H(z) * pi^2 / sin(pi z / 2)
    with mpmath.workdps(30):
        f = lambda z: z * mpmath.pi ** (-z / 2) / mpmath.gamma(1 - z / 2) * mpmath.pi**2 / mpmath.sin(mpmath.pi * z / 2)
        ref = float(mpmath.taylor(f, 0, 1, method="quad", radius=0.25)[1].real)
    assert dimreg_integral(make_power(-2), 2) == pytest.approx(ref, abs=1e-10)
    assert ref == pytest.approx(-math.pi * (float(mpmath.euler) + math.log(math.pi)), abs=1e-12)


def test_dimreg_agrees_with_cutoff_without_residue():
    s = make_power(Fraction(-7, 3))
    assert dimreg_integral(s, 2) == pytest.approx(cutoff_integral(s, 2), rel=1e-12)


def test_dimreg_needs_even_dimension():
    with pytest.raises(ValueError):
        dimreg_integral(make_power(-1), 1)


def test_polynomial_cutoff_is_exact_zero():
    s = make_symbol(4, {(0, 0): 1, (2, 0): -3, (4, 0): 2})
    value, err = cutoff_integral_with_error(s, 3)
    assert value == 0 and err == 0.0


def test_custom_regularisation_uses_given_H():
    H = LaurentSeries({0: 1.0, 1: 0.5}, 4)
    reg = Regularisation(RegKind.CUSTOM_H, 1, H)
    s = make_power(-1)
    base = regularised_laurent(s, 1, RIESZ, K=2)
    got = regularised_laurent(s, 1, reg, K=1)
    assert got.fp() == pytest.approx(base[0] + 0.5 * base[-1], abs=1e-12)


def test_covariant_twist_closed_form():
    # int_{R^n} <xi>^(a - z) = pi^(n/2) Gamma((z - a - n)/2) / Gamma((z - a)/2)
    a, n = Fraction(-3, 2), 1
    lau = regularised_laurent(make_power(a), n, Regularisation(RegKind.COVARIANT_TWIST), K=2)
    f = lambda z: mpmath.pi ** (n / 2) * mpmath.gamma((z - float(a) - n) / 2) / mpmath.gamma((z - float(a)) / 2)
    ref = mpmath.taylor(f, 0, 2)
    for d in range(3):
        assert lau[d] == pytest.approx(float(ref[d]), abs=1e-12)


def test_dimreg_regularisation_rejects_other_slopes():
    with pytest.raises(ValueError):
        Regularisation(RegKind.DIMREG, 2)
    assert DIMREG.kind is RegKind.DIMREG
