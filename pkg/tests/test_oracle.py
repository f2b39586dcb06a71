import math
from fractions import Fraction

import mpmath
import pytest

from symreg.matrices import ConstraintMatrix
from symreg.oracle import NotConvergent, ball_integral, direct_integral, mellin_laurent, radial_fp_oracle
from symreg.renorm import SUNSET
from symreg.symbols import make_power

M = ConstraintMatrix.from_rows


def test_one_loop_closed_form():
    r = direct_integral([-4], M([[1]]), 2)
    assert r.value == pytest.approx(math.pi, rel=1e-10)
    assert r.method == "radial"


def test_sunset_one_dimension_closed_form():
    # <k>^-2 * <k>^-2 convolved is 2 pi / (4 + p^2); integrating against <p>^-2 gives pi^2 / 3
    r = direct_integral([-2, -2, -2], SUNSET, 1)
    assert r.value == pytest.approx(math.pi**2 / 3, rel=1e-9)


def test_product_of_one_loops():
    r = direct_integral([-4, -4], ConstraintMatrix.identity(2), 2)
    assert r.value == pytest.approx(math.pi**2, rel=1e-9)


def test_quasi_monte_carlo_three_loops():
    # with <x>^-2 the tangent map makes the integrand constant, so use <x>^-4 (integral pi/2 each)
    r = direct_integral([-4, -4, -4], ConstraintMatrix.identity(3), 1, seed=1)
    assert r.method.startswith("sobol")
    assert r.value == pytest.approx((math.pi / 2) ** 3, rel=1e-3)
    assert abs(r.value - (math.pi / 2) ** 3) < 5 * r.abs_error + 1e-12
    assert r.abs_error > 0


def test_divergent_input_refused():
    with pytest.raises(NotConvergent):
        direct_integral([-2, -2, -2], SUNSET, 3)
    with pytest.raises(NotConvergent):
        direct_integral([-1], M([[1]]), 1)


def test_ball_integral_closed_form():
    # int_{|x|<R} <x>^-2 dx on R = 2 arctan R
    assert ball_integral(make_power(-2), 1, 7.0) == pytest.approx(2 * math.atan(7.0), rel=1e-12)


def test_radial_fit_recovers_log_divergent_constant():
    fit = radial_fp_oracle(make_power(-1), 1)
    assert fit.value == pytest.approx(2 * math.log(2), abs=1e-7)


def test_mellin_laurent_against_gamma_expansion():
    # a = -1, n = 1: Gamma(1/2 - z/2) Gamma(z/2) / Gamma(1/2)
    coeffs = mellin_laurent(-1, 0, 1, K=2)
    f = lambda z: z * mpmath.gamma((1 - z) / 2) * mpmath.gamma(z / 2) / mpmath.gamma(0.5)
    ref = mpmath.taylor(f, 0.0, 3, method="quad", radius=0.3)
    assert coeffs[-1] == pytest.approx(float(ref[0].real), abs=1e-12)
    assert coeffs[0] == pytest.approx(float(ref[1].real), abs=1e-12)
    assert coeffs[1] == pytest.approx(float(ref[2].real), abs=1e-12)


def test_results_serialise():
    d = direct_integral([-4], M([[1]]), 2).to_json()
    assert set(d) == {"value", "abs_error", "evaluations", "method"}
    assert isinstance(d["value"], str)
