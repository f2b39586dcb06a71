"""Truncated one-variable Laurent series and Gamma-function expansions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import mpmath


@dataclass(frozen=True)
class LaurentSeries:
    """sum_d coeffs[d] z^d, known for degrees <= max_degree."""

    coeffs: Mapping[int, object]
    max_degree: int
    errors: Mapping[int, float] = field(default_factory=dict)
    var_name: str = "z"

    def __post_init__(self):
        c = {int(d): v for d, v in self.coeffs.items() if d <= self.max_degree and v != 0}
        e = {int(d): float(v) for d, v in self.errors.items() if d <= self.max_degree and v}
        object.__setattr__(self, "coeffs", dict(sorted(c.items())))
        object.__setattr__(self, "errors", dict(sorted(e.items())))

    @classmethod
    def constant(cls, c, max_degree: int = 8) -> "LaurentSeries":
        return cls({0: c}, max_degree)

    @property
    def min_degree(self) -> int:
        return min(self.coeffs, default=0)

    @property
    def pole_order(self) -> int:
        return max(0, -self.min_degree)

    def __getitem__(self, d: int):
        if d > self.max_degree:
            raise IndexError(f"degree {d} beyond truncation {self.max_degree}")
        return self.coeffs.get(d, 0)

    def error(self, d: int) -> float:
        return self.errors.get(d, 0.0)

    def fp(self):
        return self[0]

    def pole_part(self) -> "LaurentSeries":
        return LaurentSeries({d: v for d, v in self.coeffs.items() if d < 0}, self.max_degree,
                             {d: v for d, v in self.errors.items() if d < 0}, self.var_name)

    def regular_part(self) -> "LaurentSeries":
        return LaurentSeries({d: v for d, v in self.coeffs.items() if d >= 0}, self.max_degree,
                             {d: v for d, v in self.errors.items() if d >= 0}, self.var_name)

    def truncate(self, max_degree: int) -> "LaurentSeries":
        return LaurentSeries(self.coeffs, min(max_degree, self.max_degree), self.errors, self.var_name)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "LaurentSeries":
        ac = abs(complex(c)) if not isinstance(c, Fraction) else abs(float(c))
        return LaurentSeries({d: c * v for d, v in self.coeffs.items()}, self.max_degree,
                             {d: ac * e for d, e in self.errors.items()}, self.var_name)

    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries.constant(other, self.max_degree)
        top = min(self.max_degree, other.max_degree)
        out = dict(self.coeffs)
        for d, v in other.coeffs.items():
            out[d] = out.get(d, 0) + v
        err = dict(self.errors)
        for d, v in other.errors.items():
            err[d] = err.get(d, 0.0) + v
        return LaurentSeries(out, top, err, self.var_name)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, LaurentSeries) else -other)

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            return self.scale(other)
        top = min(self.max_degree + other.min_degree, other.max_degree + self.min_degree)
        out: dict = {}
        err: dict = {}
        for d1, v1 in self.coeffs.items():
            for d2, v2 in other.coeffs.items():
                d = d1 + d2
                if d <= top:
                    out[d] = out.get(d, 0) + v1 * v2
        for d1, v1 in self.coeffs.items():
            for d2, e2 in other.errors.items():
                if d1 + d2 <= top:
                    err[d1 + d2] = err.get(d1 + d2, 0.0) + abs(complex(v1)) * e2
        for d1, e1 in self.errors.items():
            for d2, v2 in other.coeffs.items():
                if d1 + d2 <= top:
                    err[d1 + d2] = err.get(d1 + d2, 0.0) + abs(complex(v2)) * e1
        return LaurentSeries(out, top, err, self.var_name)

    __rmul__ = __mul__

    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def to_rows(self) -> list:
        degs = sorted(set(self.coeffs) | set(self.errors))
        return [(d, self.coeffs.get(d, 0), self.errors.get(d, 0.0)) for d in degs]

    def __repr__(self):
        body = " + ".join(f"({v})z^{d}" for d, v in self.coeffs.items()) or "0"
        return f"LaurentSeries({body} + O(z^{self.max_degree + 1}))"


def series_from_list(coeffs, max_degree: int | None = None, start: int = 0) -> LaurentSeries:
    top = start + len(coeffs) - 1 if max_degree is None else max_degree
    return LaurentSeries({start + i: c for i, c in enumerate(coeffs)}, top)


@lru_cache(maxsize=4096)
def _rgamma_taylor(x0: Fraction, order: int) -> tuple:
    with mpmath.workdps(40):
        cs = mpmath.taylor(mpmath.rgamma, mpmath.mpf(x0.numerator) / x0.denominator, order)
        return tuple(float(c) for c in cs)


def rgamma_series(x0, scale, K: int) -> list:
    """Taylor coefficients in e of 1/Gamma(x0 + scale*e), degrees 0..K."""
    cs = _rgamma_taylor(Fraction(x0), K)
    s = float(scale)
    return [c * s**k for k, c in enumerate(cs)]


def gamma_laurent(x0, scale, K: int) -> LaurentSeries:
    """Laurent series in e of Gamma(x0 + scale*e) up to e^K (simple pole at non-positive integers)."""
    x0 = Fraction(x0)
    cs = list(_rgamma_taylor(x0, K + 2))
    s = float(scale)
    pole = x0.denominator == 1 and x0 <= 0
    if pole:
        cs = cs[1:]
        shift = -1
    else:
        shift = 0
    inv = [0.0] * (K + 2)
    inv[0] = 1.0 / cs[0]
    for k in range(1, K + 2):
        acc = 0.0
        for i in range(1, k + 1):
            if i < len(cs):
                acc += cs[i] * inv[k - i]
        inv[k] = -acc * inv[0]
    out = {}
    for k, v in enumerate(inv):
        d = k + shift
        out[d] = v * s**d
    return LaurentSeries(out, K)


@lru_cache(maxsize=64)
def _h_taylor(p: int, K: int) -> tuple:
    with mpmath.workdps(40):
        f = lambda z: mpmath.power(mpmath.pi, -z / 2) * mpmath.gamma(p) * mpmath.rgamma(p - z / 2)
        return tuple(float(c) for c in mpmath.taylor(f, 0, K))


def H_dimreg(p: int, K: int = 4) -> LaurentSeries:
    """Taylor series of H(z) = pi^(-z/2) Gamma(p) / Gamma(p - z/2)."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    return series_from_list(list(_h_taylor(int(p), int(K))), K)
