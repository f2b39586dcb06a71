"""Regularised integrals over R^n of one radial symbol.

Every radial integral is split exactly at r = 1.  On [1, oo) the leading
homogeneous terms are subtracted and integrated in closed form; what is left
is absolutely integrable and handled by quadrature (on [1, 2]) and by the
convergent tail of the homogeneous series (on [2, oo)).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate

from ._series import as_fraction, gbinom
from .laurent import H_dimreg, LaurentSeries, gamma_laurent, rgamma_series
from .symbols import RadialSymbol, _rebase_term, residue_l, sphere_volume

QUAD_OPTS = dict(limit=200, epsabs=1e-14, epsrel=1e-12)
TAIL_TERMS = 60


class RegKind(enum.Enum):
    RIESZ = "riesz"
    DIMREG = "dimreg"
    CUSTOM_H = "custom"
    COVARIANT_TWIST = "covariant"


@dataclass(frozen=True)
class Regularisation:
    kind: RegKind = RegKind.RIESZ
    slope_q: Fraction = Fraction(1)
    H_series: Optional[LaurentSeries] = None

    def __post_init__(self):
        object.__setattr__(self, "slope_q", as_fraction(self.slope_q))
        if self.slope_q <= 0:
            raise ValueError("slope q must be positive")
        if self.kind is RegKind.DIMREG and self.slope_q != 1:
            raise ValueError("dimensional regularisation has slope 1")
        if self.kind is RegKind.CUSTOM_H:
            if self.H_series is None or abs(self.H_series[0] - 1) > 1e-14:
                raise ValueError("custom H series must have constant term 1")


RIESZ = Regularisation()
DIMREG = Regularisation(RegKind.DIMREG)


class InsufficientTruncation(ValueError):
    pass


def _tail_integral(s: float, l: int, c: float) -> float:
    """int_c^oo e^(s x) x^l dx for s < 0, i.e. int_{e^c}^oo r^(s-1) log^l r dr."""
    out = 0.0
    for i in range(l + 1):
        out += math.factorial(l) / math.factorial(l - i) * c ** (l - i) / (-s) ** (i + 1)
    return math.exp(s * c) * out


@dataclass(frozen=True)
class _TermData:
    moments: tuple  # I_m = int_0^oo r^(n-1) (f - hom) log^m r, with hom only on [1, oo)
    errors: tuple
    hom: tuple      # (exponent e, log power, coefficient) of the subtracted terms


@lru_cache(maxsize=8192)
def _term_data(b: Fraction, l: int, n: int, mmax: int) -> _TermData:
    """Moments for one basis term <r>^b log^l <r>."""
    if l == 0 and b.denominator == 1 and b >= 0 and b % 2 == 0:
        return _polynomial_term(int(b) // 2, n, mmax)
    # subtract enough terms that the remainder decays faster than r^(-1-n-1/2)
    nsub = 0
    while b - 2 * nsub + n >= Fraction(-1, 2):
        nsub += 1
    nsub = max(nsub, 1)
    kmax = nsub + TAIL_TERMS
    series = _rebase_term(b, l, kmax, +1)
    hom = tuple((b - 2 * k, lp, c) for (k, lp), c in sorted(series.items()) if k < nsub)
    far = [(float(b - 2 * k), lp, float(c)) for (k, lp), c in sorted(series.items()) if k >= nsub]
    bf = float(b)
    homf = [(float(e), lp, float(c)) for e, lp, c in hom]

    def f(r):
        return (1.0 + r * r) ** (bf / 2) * (0.5 * math.log1p(r * r)) ** l

    def diff(r):
        lr = math.log(r)
        return f(r) - sum(c * r**e * lr**lp for e, lp, c in homf)

    moments, errors = [], []
    log2 = math.log(2.0)
    for m in range(mmax + 1):
        a0, e0 = integrate.quad(lambda r: r ** (n - 1) * f(r) * math.log(r) ** m if r > 0 else 0.0,
                                0.0, 1.0, **QUAD_OPTS)
        a1, e1 = integrate.quad(lambda r: r ** (n - 1) * diff(r) * math.log(r) ** m, 1.0, 2.0, **QUAD_OPTS)
        a2 = sum(c * _tail_integral(e + n, lp + m, log2) for e, lp, c in far)
        moments.append(a0 + a1 + a2)
        errors.append(e0 + e1 + 1e-15 * abs(a2))
    return _TermData(tuple(moments), tuple(errors), hom)


def _polynomial_term(M: int, n: int, mmax: int) -> _TermData:
    # <r>^(2M) = sum_k C(M,k) r^(2k): the homogeneous expansion is finite and exact,
    # so only the [0, 1] piece survives, and it is rational.
    moments = []
    for m in range(mmax + 1):
        acc = Fraction(0)
        for k in range(M + 1):
            acc += math.comb(M, k) * Fraction((-1) ** m * math.factorial(m), (2 * k + n) ** (m + 1))
        moments.append(acc)
    hom = tuple((Fraction(2 * k), 0, Fraction(math.comb(M, k))) for k in range(M, -1, -1))
    return _TermData(tuple(moments), tuple(0.0 for _ in moments), hom)


def _remainder_moments(s: RadialSymbol, n: int, mmax: int):
    rem = s.remainder
    if rem is None:
        return [0.0] * (mmax + 1), [0.0] * (mmax + 1)
    if rem.order_bound >= -n:
        raise InsufficientTruncation(
            f"remainder order {rem.order_bound} is not integrable in dimension {n}; raise the truncation")
    vals, errs = [], []
    for m in range(mmax + 1):
        g = lambda r: r ** (n - 1) * float(rem(np.array([r]))[0]) * (math.log(r) ** m if r > 0 else 0.0)
        total, err = 0.0, 0.0
        for lo, hi in ((0.0, 1.0), (1.0, 10.0), (10.0, np.inf)):
            v, e = integrate.quad(g, lo, hi, **QUAD_OPTS)
            total += v
            err += e
        vals.append(total)
        errs.append(err)
    return vals, errs


def _exact_or_float(values):
    if all(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0))
    return float(sum(float(v) for v in values))


def cutoff_integral_with_error(s: RadialSymbol, n: int):
    if n < 1:
        raise ValueError("dimension must be positive")
    parts, err = [], 0.0
    for (j, l), c in s.coeffs.items():
        td = _term_data(s.order_a - j, l, n, 0)
        acc = [td.moments[0]]
        for e, lp, h in td.hom:
            if e + n != 0:
                acc.append(h * Fraction((-1) ** (lp + 1) * math.factorial(lp)) / (e + n) ** (lp + 1))
        term = _exact_or_float(acc)
        parts.append(c * term if isinstance(term, Fraction) and isinstance(c, Fraction) else float(c) * float(term))
        err += abs(float(c)) * td.errors[0]
    rv, re = _remainder_moments(s, n, 0)
    if s.remainder is not None:
        parts.append(rv[0])
        err += re[0]
    total = _exact_or_float(parts)
    vol = sphere_volume(n)
    if isinstance(total, Fraction):
        if total == 0:
            return Fraction(0), 0.0
        return vol * float(total), vol * err
    return vol * total, vol * err


def cutoff_integral(s: RadialSymbol, n: int):
    """Cut-off regularised integral in plain Lebesgue measure.

    Returns an exact ``Fraction`` when the symbol is a polynomial in |xi|^2
    (the value is then 0), otherwise a float.
    """
    return cutoff_integral_with_error(s, n)[0]


def _mellin_pole_series(h, lp: int, c, q: Fraction, K: int) -> dict:
    """Laurent coefficients of h * lp! / (q z - c)^(lp+1)."""
    fact = math.factorial(lp)
    if c == 0:
        return {-(lp + 1): h * fact / q ** (lp + 1) if isinstance(h, Fraction) else float(h) * fact / float(q) ** (lp + 1)}
    out = {}
    base = Fraction(fact) / (-c) ** (lp + 1)
    for m in range(K + 1):
        v = base * math.comb(lp + m, m) * (q / c) ** m
        out[m] = h * v if isinstance(h, Fraction) else float(h) * float(v)
    return out


def _riesz_laurent(s: RadialSymbol, n: int, q: Fraction, K: int) -> LaurentSeries:
    out: dict = {}
    err: dict = {}
    vol = sphere_volume(n)

    def put(d, v, e=0.0):
        out[d] = out.get(d, 0) + v
        if e:
            err[d] = err.get(d, 0.0) + e

    for (j, l), c in s.coeffs.items():
        td = _term_data(s.order_a - j, l, n, K)
        for m in range(K + 1):
            w = Fraction((-1) ** m) * q**m / math.factorial(m)
            mom = td.moments[m]
            put(m, c * w * mom if isinstance(mom, Fraction) and isinstance(c, Fraction) else float(c) * float(w) * float(mom),
                abs(float(c) * float(w)) * td.errors[m])
        for e, lp, h in td.hom:
            for d, v in _mellin_pole_series(h, lp, e + n, q, K).items():
                put(d, c * v if isinstance(v, Fraction) and isinstance(c, Fraction) else float(c) * float(v))
    rv, re = _remainder_moments(s, n, K)
    if s.remainder is not None:
        for m in range(K + 1):
            w = (-float(q)) ** m / math.factorial(m)
            put(m, w * rv[m], abs(w) * re[m])
    scaled = {d: vol * float(v) for d, v in out.items()}
    return LaurentSeries(scaled, K, {d: vol * e for d, e in err.items()})


def _covariant_laurent(s: RadialSymbol, n: int, q: Fraction, K: int) -> LaurentSeries:
    # int_{R^n} <xi>^(b - q z) = pi^(n/2) Gamma((q z - b - n)/2) / Gamma((q z - b)/2)
    if not s.is_classical or s.remainder is not None:
        raise ValueError("the <xi>-twist closed form needs an exact classical symbol")
    total = LaurentSeries({}, K)
    for (j, _), c in s.coeffs.items():
        b = s.order_a - j
        g = gamma_laurent((-b - n) / 2, q / 2, K + 1)
        pole = g.pole_order
        rg = LaurentSeries({d: v for d, v in enumerate(rgamma_series(-b / 2, q / 2, K + pole))}, K + pole)
        total = total + (g * rg).truncate(K).scale(float(c) * math.pi ** (n / 2))
    return total


def regularised_laurent(s: RadialSymbol, n: int, reg: Regularisation = RIESZ, K: int = 4) -> LaurentSeries:
    """Laurent expansion at z = 0 of the holomorphically regularised integral."""
    pole = s.log_type_k + 1
    if reg.kind is RegKind.RIESZ:
        return _riesz_laurent(s, n, reg.slope_q, K)
    if reg.kind is RegKind.COVARIANT_TWIST:
        return _covariant_laurent(s, n, reg.slope_q, K)
    if reg.kind is RegKind.DIMREG:
        if n % 2:
            raise ValueError("dimensional regularisation formula requires an even dimension")
        H = H_dimreg(n // 2, K + pole)
    else:
        H = reg.H_series
    base = _riesz_laurent(s, n, reg.slope_q, K + pole)
    return (H * base).truncate(K)


def dimreg_integral(s: RadialSymbol, n: int) -> float:
    if n % 2:
        raise ValueError("dimensional regularisation requires n = 2p")
    return float(regularised_laurent(s, n, DIMREG, K=0).fp())


def H_prime_zero(p: int) -> float:
    """H'(0) = (digamma(p) - log pi) / 2 = ((1 + 1/2 + ... + 1/(p-1)) - gamma - log pi) / 2."""
    harmonic = sum(1.0 / j for j in range(1, p))
    return 0.5 * (harmonic - float(np.euler_gamma) - math.log(math.pi))


@dataclass(frozen=True)
class AsymptoticExpansion:
    """int_{|xi| <= R} sigma ~ sum power terms + sum log terms + constant."""

    power_terms: tuple   # (exponent s, {log power: coefficient}) for R^s P(log R)
    log_terms: dict      # {p: coefficient of log^p R}
    constant: float
    dim: int = 0

    def evaluate(self, R: float) -> float:
        L = math.log(R)
        out = self.constant
        for s, poly in self.power_terms:
            out += R ** float(s) * sum(c * L**p for p, c in poly.items())
        out += sum(c * L**p for p, c in self.log_terms.items())
        return out


def asymptotic_expansion(s: RadialSymbol, n: int) -> AsymptoticExpansion:
    vol = sphere_volume(n)
    powers: dict = {}
    logs: dict = {}
    for (j, l), c in s.coeffs.items():
        td = _term_data(s.order_a - j, l, n, 0)
        for e, lp, h in td.hom:
            sexp = e + n
            hc = float(c) * float(h) * vol
            if sexp == 0:
                logs[lp + 1] = logs.get(lp + 1, 0.0) + hc / (lp + 1)
                continue
            poly = powers.setdefault(sexp, {})
            fs = float(sexp)
            for i in range(lp + 1):
                coef = (-1) ** i * math.factorial(lp) / math.factorial(lp - i) / fs ** (i + 1)
                poly[lp - i] = poly.get(lp - i, 0.0) + hc * coef
    const = float(cutoff_integral(s, n))
    terms = tuple(sorted(((k, v) for k, v in powers.items()), key=lambda kv: -kv[0]))
    return AsymptoticExpansion(terms, dict(sorted(logs.items())), const, n)


def residues(s: RadialSymbol, n: int) -> dict:
    return {l: residue_l(s, n, l) for l in range(s.log_type_k + 1)}
