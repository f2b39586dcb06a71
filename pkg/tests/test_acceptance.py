"""Acceptance suite: one or more tests per criterion, summarised as PASS/FAIL lines."""
import itertools
import math
import random
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from symreg.germs import MeroGerm, evaluator_E0, evaluator_linear, evaluator_reparam
from symreg.matrices import (ConstraintMatrix, RankDeficient, check_coassociative, check_cocommutative,
                             check_whitney_compatible, whitney_sum)
from symreg.oracle import direct_integral, mellin_laurent
from symreg.renorm import SUNSET, HopfCharacter, birkhoff_factorise, renorm_birkhoff, renorm_evaluator
from symreg.schwinger import INDEPENDENT, SchwingerProblem, meromorphic_extension, sector_data
from symreg.single import (RIESZ, Regularisation, RegKind, cutoff_integral, dimreg_integral,
                           regularised_laurent)
from symreg.symbols import dilate, make_power, make_symbol, polynomial_r2, radial_laplacian

criterion = pytest.mark.criterion
M = ConstraintMatrix.from_rows


def rel(x, y):
    return abs(x - y) / max(1.0, abs(y))


# 1 -------------------------------------------------------------------------

@criterion(1, "single-integral exactness")
def test_cutoff_closed_forms():
    t0 = time.perf_counter()
    v1 = cutoff_integral(make_power(-4), 2)
    v2 = cutoff_integral(make_power(-1), 1)
    elapsed = time.perf_counter() - t0
    assert abs(v1 - math.pi) < 1e-10
    assert abs(v2 - 2 * math.log(2)) < 1e-10
    assert elapsed < 1.0


# 2 -------------------------------------------------------------------------

def _riesz_corpus():
    orders = ["-1/2", "-3/2", "1/3", "-5/3", "-7/4", "5/2", "-1", "-2", "-3", "-4"]
    combos = []
    for a, n, k in itertools.product(orders, (1, 2, 3), (0, 1, 2)):
        combos.append((a, n, k))
    rng = random.Random(2)
    return rng.sample(combos, 50)


@criterion(2, "Riesz finite part equals the cut-off integral")
def test_riesz_fp_equals_cutoff():
    worst = 0.0
    for a, n, k in _riesz_corpus():
        s = make_symbol(a, {(0, k): 1, (1, 0): Fraction(1, 3)})
        fp = regularised_laurent(s, n, RIESZ, K=1).fp()
        cut = cutoff_integral(s, n)
        worst = max(worst, abs(fp - cut))
    assert worst < 1e-9


@criterion(2, "Riesz finite part equals the cut-off integral")
def test_riesz_fp_matches_mellin_oracle():
    # independent contour-integral Laurent coefficients of the twisted integral
    for a, n, k in _riesz_corpus()[:12]:
        s = make_symbol(a, {(0, k): 1})
        oracle = mellin_laurent(a, k, n, K=1).get(0, 0.0)
        assert abs(cutoff_integral(s, n) - oracle) < 1e-9 * max(1.0, abs(oracle))


# 3 -------------------------------------------------------------------------

def _H(p):
    return lambda z: mpmath.pi ** (-z / 2) * mpmath.gamma(p) / mpmath.gamma(p - z / 2)


@criterion(3, "dimensional regularisation against cut-off")
def test_dimreg_inverse_square_plane():
    value = dimreg_integral(make_power(-2), 2)
    assert abs(value - math.pi * (float(mpmath.euler) - math.log(math.pi))) < 1e-8


@criterion(3, "dimensional regularisation against cut-off")
def test_dimreg_log_symbol_identity():
    # sigma = <xi>^-2 log<xi> on R^2: double pole, so H' and H'' both enter
    s = make_symbol(-2, {(0, 1): 1})
    with mpmath.workdps(30):
        H = _H(1)
        h1 = float(mpmath.diff(H, 0, 1))
        h2 = float(mpmath.diff(H, 0, 2)) / 2
    riesz = mellin_laurent(-2, 1, 2, K=1)
    predicted = cutoff_integral(s, 2) + h1 * riesz.get(-1, 0.0) + h2 * riesz.get(-2, 0.0)
    assert abs(dimreg_integral(s, 2) - predicted) < 1e-6


# 4 -------------------------------------------------------------------------

@criterion(4, "polynomials have vanishing cut-off integral")
def test_polynomial_vanishing():
    for m in range(6):
        for n in (1, 2, 3, 4):
            assert cutoff_integral(polynomial_r2(m), n) == 0


# 5 -------------------------------------------------------------------------

def _random_noninteger_orders(count, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        a = Fraction(rng.randint(-40, 20), rng.choice([3, 4, 5, 7]))
        if a.denominator != 1:
            out.append(a)
    return out


@criterion(5, "Stokes property via the radial Laplacian")
def test_stokes_radial_laplacian():
    for a in _random_noninteger_orders(20, 5):
        s = make_symbol(a, {(0, 0): 1, (1, 0): Fraction(-1, 2), (2, 1): Fraction(1, 5)})
        for n in (1, 2, 3):
            assert abs(cutoff_integral(radial_laplacian(s, n), n)) <= 1e-8


# 6 -------------------------------------------------------------------------

@criterion(6, "dilation covariance")
def test_dilation_covariance():
    for a in _random_noninteger_orders(8, 6):
        s = make_power(a)
        for n in (1, 2, 3):
            base = cutoff_integral(s, n)
            for c in (Fraction(2), Fraction(3, 2)):
                ratio = cutoff_integral(dilate(s, c), n) / base
                assert abs(ratio - float(c) ** -n) < 1e-8


# 7 -------------------------------------------------------------------------

ENGINE_CASES = [
    ("sunset n=1", SUNSET, (-2, -2, -2), 1),
    ("non-step 3x2 n=1", M([[1, 0], [1, 2], [0, 1]]), (-2, -2, -2), 1),
    ("sunset n=2", SUNSET, (-2, -2, -2), 2),
    ("two-loop identity n=2", ConstraintMatrix.identity(2), (-4, -4), 2),
]


@criterion(7, "constrained engine against direct quadrature")
@pytest.mark.parametrize("name,B,orders,n", ENGINE_CASES, ids=[c[0] for c in ENGINE_CASES])
def test_engine_matches_oracle(name, B, orders, n):
    t0 = time.perf_counter()
    germ = meromorphic_extension(SchwingerProblem(B, orders, n))
    value = float(germ.constant_value())
    elapsed = time.perf_counter() - t0
    oracle = direct_integral(list(orders), B, n)
    assert germ.is_holomorphic()
    assert rel(value, oracle.value) < 1e-3
    assert elapsed < 60.0


@criterion(7, "constrained engine against direct quadrature")
def test_engine_sunset_closed_form():
    germ = meromorphic_extension(SchwingerProblem(SUNSET, (-2, -2, -2), 1))
    assert rel(float(germ.constant_value()), math.pi**2 / 3) < 1e-3


# 8 -------------------------------------------------------------------------

def _suffix_rank(B, tau, j):
    rows = [[float(x) for x in B.entries[r]] for r in tau[j:]]
    return int(np.linalg.matrix_rank(np.array(rows))) if rows else 0


LATTICE_CASES = [
    (SUNSET, (-2, -2, -2), 3),
    (SUNSET, ("-1/2", "-3/2", -1), 2),
    (M([[1, 0], [1, 2], [0, 1]]), (-1, -1, -2), 1),
    (M([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]), (-2, -2, -2, -2), 2),
    (M([[1], [1], [2]]), ("-1/3", -1, "-1/2"), 1),
]


@criterion(8, "pole-lattice soundness")
@pytest.mark.parametrize("case", range(len(LATTICE_CASES)))
def test_pole_lattice(case):
    B, orders, n = LATTICE_CASES[case]
    problem = SchwingerProblem(B, orders, n, K=2)
    a = [Fraction(x) for x in orders]
    L, I = B.cols_L, B.rows_I
    allowed_zero = set()
    for tau in itertools.permutations(range(I)):
        sec = sector_data(problem, tau)
        s = [L - _suffix_rank(B, tau, j) for j in range(1, I + 1)]
        assert list(sec.s_vector) == s
        for pole in sec.pole_factors:
            j = len(pole.rows)
            assert set(pole.rows) == set(tau[:j])
            base = -sum(a[r] for r in pole.rows) - n * s[j - 1]
            m2 = pole.constant - base
            assert m2 >= 0 and m2 % 2 == 0 and pole.constant <= 0
            assert pole.slope == problem.slope_q
            if pole.constant == 0:
                allowed_zero.add(tuple(Fraction(int(i in pole.rows)) for i in range(I)))
    germ = meromorphic_extension(SchwingerProblem(B, orders, n, z_mode=INDEPENDENT, K=2))
    for term in germ.terms:
        for form, _ in term.den:
            assert form in allowed_zero


@criterion(8, "pole-lattice soundness")
def test_sunset_identity_sector_s_vector():
    assert sector_data(SchwingerProblem(SUNSET, (-2, -2, -2), 3), (0, 1, 2)).s_vector == (0, 1, 2)


# 9 -------------------------------------------------------------------------

@criterion(9, "evaluator worked example")
def test_evaluator_worked_example():
    g = MeroGerm.from_parts(2, {(1, 0): 1, (0, 1): 1}, [((0,), 1)])
    assert evaluator_E0(g) == 1
    assert evaluator_linear(g) == 0


# 10 ------------------------------------------------------------------------

def random_germ(rng, I, K=10):
    terms = MeroGerm.zero(I, K)
    for _ in range(rng.randint(1, 3)):
        num = {}
        for _ in range(rng.randint(1, 3)):
            mono = tuple(rng.randint(0, 1) for _ in range(I))
            num[mono] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        den = []
        for _ in range(rng.randint(0, 2)):
            subset = tuple(sorted(rng.sample(range(I), rng.randint(1, I))))
            den.append((subset, rng.randint(1, 2)))
        terms = terms + MeroGerm.from_parts(I, num, den, K)
    return terms


def _evaluators(rng):
    kappa = [0, Fraction(rng.randint(1, 4), rng.randint(1, 3)), Fraction(rng.randint(-3, 3), 2)]
    return [("E0", evaluator_E0), ("kappa", lambda g: evaluator_reparam(g, kappa))]


@criterion(10, "evaluator axioms on random exact germs")
def test_evaluator_axioms_random():
    rng = random.Random(10)
    for _ in range(200):
        I1, I2 = rng.randint(1, 2), rng.randint(1, 2)
        f, f2 = random_germ(rng, I1), random_germ(rng, I1)
        g = random_germ(rng, I2)
        c = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        perm = list(range(I1))
        rng.shuffle(perm)
        hol = MeroGerm.from_parts(I1, {(0,) * I1: c, tuple(int(i == 0) for i in range(I1)): 1})
        for _, E in _evaluators(rng):
            assert E(f + f2.scale(c)) == E(f) + c * E(f2)
            assert E(f.permute_vars(perm)) == E(f)
            assert E(f.tensor(g)) == E(f) * E(g)
            assert E(hol) == c


# 11 ------------------------------------------------------------------------

def random_matrix(rng, max_L=3):
    while True:
        L = rng.randint(0, max_L)
        I = rng.randint(max(1, L), L + 2)
        try:
            if L == 0:
                return ConstraintMatrix.empty(I)
            return M([[rng.randint(-2, 2) for _ in range(L)] for _ in range(I)])
        except RankDeficient:
            continue


@criterion(11, "Hopf algebra axioms")
def test_hopf_axioms_random():
    rng = random.Random(11)
    for _ in range(50):
        B, Bp = random_matrix(rng), random_matrix(rng, 2)
        assert check_coassociative(B)
        assert check_cocommutative(B)
        assert check_whitney_compatible(B, Bp)


# 12 ------------------------------------------------------------------------

HOPF_BLOCKS = [M([[1]]), M([[1], [1]]), M([[1], [2]]), SUNSET, M([[1, 0], [1, 2], [0, 1]])]
CHARACTER_SETUPS = [(-1, 1), (Fraction(-1, 2), 1), (Fraction(-5, 2), 2)]


def _whitney_pairs():
    pairs = []
    # at most four rows in total keeps each engine call within seconds
    for i, j in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2), (0, 3), (3, 0), (0, 4), (4, 0)]:
        pairs.append((HOPF_BLOCKS[i], HOPF_BLOCKS[j]))
    return pairs


@criterion(12, "Birkhoff renormalised character")
def test_birkhoff_multiplicative():
    for a, n in CHARACTER_SETUPS:
        phi = HopfCharacter(make_power(a), RIESZ, n)
        for B, Bp in _whitney_pairs():
            left = birkhoff_factorise(phi, B).value
            right = birkhoff_factorise(phi, Bp).value
            both = birkhoff_factorise(phi, whitney_sum(B, Bp)).value
            assert abs(left * right) > 1e-3
            assert rel(both, left * right) < 1e-6


@criterion(12, "Birkhoff renormalised character")
def test_birkhoff_primitive_equals_finite_part():
    for a, n in CHARACTER_SETUPS:
        s = make_power(a)
        assert abs(renorm_birkhoff(s, M([[1]]), n=n) - cutoff_integral(s, n)) < 1e-8
        # two rows on one column: the twisted integrand is <k>^(2a - 2z)
        twice = regularised_laurent(make_power(2 * Fraction(a)), n, Regularisation(RegKind.RIESZ, 2), K=1).fp()
        assert abs(renorm_birkhoff(s, M([[1], [1]]), n=n) - twice) < 1e-8


# 13 ------------------------------------------------------------------------

# (-2, 3): overall divergence only; (-1/2, 1): divergent sub-integrals as well
COVARIANCE_SETUPS = [(-2, 3), (Fraction(-1, 2), 1), (Fraction(-2, 3), 1), (-1, 1), (-2, 2)]


@criterion(13, "covariance and Fubini of renormalised values")
@pytest.mark.parametrize("a,n", COVARIANCE_SETUPS)
def test_renormalised_covariance_fubini(a, n):
    s = make_power(a)
    phi = HopfCharacter(s, RIESZ, n)
    for method in ("evaluator", "birkhoff"):
        def value(B):
            if method == "birkhoff":
                return renorm_birkhoff(s, B, n=n, phi=phi)
            return renorm_evaluator([s] * 3, B, n=n)

        base = value(SUNSET)
        assert rel(value(SUNSET.columns([1, 0])), base) < 1e-6
        assert rel(value(SUNSET.matmul([[2, 0], [0, 1]])), base * 2.0**-n) < 1e-6


# 14 ------------------------------------------------------------------------

@criterion(14, "renormalised values reproduce convergent integrals")
@pytest.mark.parametrize("name,B,orders,n", ENGINE_CASES + [("two rows one column", M([[1], [1]]), (-2, -2), 1)],
                         ids=[c[0] for c in ENGINE_CASES] + ["two rows one column"])
def test_renormalisation_methods_match_oracle(name, B, orders, n):
    oracle = direct_integral(list(orders), B, n).value
    symbols = [make_power(a) for a in orders]
    assert rel(renorm_evaluator(symbols, B, n=n), oracle) < 1e-3
    if len(set(orders)) == 1:
        assert rel(renorm_birkhoff(symbols[0], B, n=n), oracle) < 1e-3
