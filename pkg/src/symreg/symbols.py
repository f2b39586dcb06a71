"""Radial log-polyhomogeneous symbols in the <xi> = (1+|xi|^2)^(1/2) basis.

A ``RadialSymbol`` of order a and log-type k is the finite expansion

    sum_{j < N, l <= k} c[j, l] <xi>^(a-j) log^l <xi>

optionally completed by a numeric ``Remainder`` of order at most a - N.  When
no remainder is attached the finite sum *is* the function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from ._series import as_fraction, fraction_str, gbinom, ps_binomial, ps_log1p, ps_mul, ps_pow_int

DEFAULT_TRUNCATION = 12


@dataclass(frozen=True)
class Remainder:
    func: Callable[[np.ndarray], np.ndarray]
    order_bound: Fraction

    def __call__(self, r):
        return self.func(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class RadialSymbol:
    order_a: Fraction
    log_type_k: int
    coeffs: Mapping[tuple[int, int], object]
    truncation_N: int = DEFAULT_TRUNCATION
    remainder: Optional[Remainder] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "order_a", as_fraction(self.order_a))
        if self.log_type_k < 0 or self.truncation_N < 0:
            raise ValueError("log type and truncation must be non-negative")
        clean = {}
        for (j, l), c in self.coeffs.items():
            if j < 0 or l < 0:
                raise ValueError(f"bad key {(j, l)}")
            if j >= self.truncation_N:
                raise ValueError(f"key j={j} outside truncation {self.truncation_N}")
            if l > self.log_type_k:
                raise ValueError(f"log power {l} exceeds log type {self.log_type_k}")
            if c != 0:
                clean[(int(j), int(l))] = c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def is_classical(self) -> bool:
        return self.log_type_k == 0

    @property
    def is_exact(self) -> bool:
        return self.remainder is None

    def exponent(self, j: int) -> Fraction:
        return self.order_a - j

    def terms(self):
        return self.coeffs.items()

    def value(self, r):
        """Evaluate the symbol at |xi| = r (vectorised)."""
        r = np.asarray(r, dtype=float)
        rho2 = 1.0 + r * r
        lrho = 0.5 * np.log1p(r * r)
        out = np.zeros_like(r)
        for (j, l), c in self.coeffs.items():
            b = float(self.order_a - j)
            out = out + float(c) * rho2 ** (b / 2) * lrho**l
        if self.remainder is not None:
            out = out + self.remainder(r)
        return out

    def with_truncation(self, N: int) -> "RadialSymbol":
        if N >= self.truncation_N:
            return RadialSymbol(self.order_a, self.log_type_k, self.coeffs, N, self.remainder)
        kept = {k: c for k, c in self.coeffs.items() if k[0] < N}
        dropped = {k: c for k, c in self.coeffs.items() if k[0] >= N}
        rem = _combine_remainder(self.order_a, dropped, self.remainder, self.order_a - N)
        return RadialSymbol(self.order_a, self.log_type_k, kept, N, rem)

    def __add__(self, other: "RadialSymbol") -> "RadialSymbol":
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, RadialSymbol):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __repr__(self):
        parts = []
        for (j, l), c in self.coeffs.items():
            t = f"{c}*<x>^({self.order_a - j})"
            if l:
                t += f"*log^{l}"
            parts.append(t)
        tail = "" if self.remainder is None else " + rem"
        return f"RadialSymbol({' + '.join(parts) or '0'}{tail}; N={self.truncation_N})"


@dataclass(frozen=True)
class HomogeneousExpansion:
    """Coefficients of |xi|^(a-j) log^l |xi|, valid for |xi| >= 1."""

    order_a: Fraction
    coeffs: Mapping[tuple[int, int], object]
    truncation_N: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        object.__setattr__(self, "order_a", as_fraction(self.order_a))
        object.__setattr__(
            self, "coeffs", dict(sorted((k, c) for k, c in self.coeffs.items() if c != 0))
        )

    @property
    def log_type_k(self) -> int:
        return max((l for _, l in self.coeffs), default=0)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        out = np.zeros_like(r)
        for (j, l), c in self.coeffs.items():
            out = out + float(c) * r ** float(self.order_a - j) * lr**l
        return out

    def degree_coefficient(self, degree, l: int):
        j = self.order_a - as_fraction(degree)
        if j.denominator != 1 or j < 0:
            return Fraction(0)
        return self.coeffs.get((int(j), l), Fraction(0))


def _combine_remainder(order_a, dropped: dict, rem: Optional[Remainder], bound) -> Optional[Remainder]:
    if not dropped and rem is None:
        return None
    dropped = dict(dropped)

    def f(r):
        rho2 = 1.0 + r * r
        lrho = 0.5 * np.log1p(r * r)
        out = np.zeros_like(r)
        for (j, l), c in dropped.items():
            out = out + float(c) * rho2 ** (float(order_a - j) / 2) * lrho**l
        if rem is not None:
            out = out + rem(r)
        return out

    if rem is not None:
        bound = max(bound, rem.order_bound)
    return Remainder(f, as_fraction(bound))


def make_power(a, N: int = DEFAULT_TRUNCATION) -> RadialSymbol:
    """The basis symbol <xi>^a."""
    return RadialSymbol(as_fraction(a), 0, {(0, 0): Fraction(1)}, max(N, 1))


def make_symbol(order, coeffs: Mapping, N: int = DEFAULT_TRUNCATION) -> RadialSymbol:
    k = max((l for _, l in coeffs), default=0)
    return RadialSymbol(as_fraction(order), k, {key: as_fraction(c) if isinstance(c, (int, str)) else c
                                                 for key, c in coeffs.items()}, N)


def polynomial_r2(m: int, N: int | None = None) -> RadialSymbol:
    """|xi|^(2m) written exactly as (<xi>^2 - 1)^m."""
    coeffs = {}
    for k in range(m + 1):
        coeffs[(2 * (m - k), 0)] = Fraction(math.comb(m, k) * (-1) ** (m - k))
    return RadialSymbol(Fraction(2 * m), 0, coeffs, N if N is not None else max(DEFAULT_TRUNCATION, 2 * m + 1))


def scale(s: RadialSymbol, c) -> RadialSymbol:
    rem = None
    if s.remainder is not None:
        cf = float(c)
        inner = s.remainder
        rem = Remainder(lambda r: cf * inner(r), inner.order_bound)
    return RadialSymbol(s.order_a, s.log_type_k, {k: c * v for k, v in s.coeffs.items()},
                        s.truncation_N, rem)


def add(s: RadialSymbol, t: RadialSymbol) -> RadialSymbol:
    top = max(s.order_a, t.order_a)
    ds, dt = top - s.order_a, top - t.order_a
    if ds.denominator != 1 or dt.denominator != 1:
        raise ValueError("orders of summands must differ by an integer")
    ds, dt = int(ds), int(dt)
    N = min(s.truncation_N + ds, t.truncation_N + dt)
    kept, dropped = {}, {}
    for src, d in ((s, ds), (t, dt)):
        for (j, l), c in src.coeffs.items():
            key = (j + d, l)
            bucket = kept if key[0] < N else dropped
            bucket[key] = bucket.get(key, 0) + c
    rems = [x.remainder for x in (s, t) if x.remainder is not None]
    rem = None
    if len(rems) == 2:
        r0, r1 = rems
        rem = Remainder(lambda r: r0(r) + r1(r), max(r0.order_bound, r1.order_bound))
    elif rems:
        rem = rems[0]
    rem = _combine_remainder(top, dropped, rem, top - N)
    return RadialSymbol(top, max(s.log_type_k, t.log_type_k), kept, N, rem)


def mul(s: RadialSymbol, t: RadialSymbol) -> RadialSymbol:
    """Product of symbols; coefficients by Cauchy product, truncation by the min rule."""
    order = s.order_a + t.order_a
    N = min(s.truncation_N, t.truncation_N)
    kept, dropped = {}, {}
    for (j1, l1), c1 in s.coeffs.items():
        for (j2, l2), c2 in t.coeffs.items():
            key = (j1 + j2, l1 + l2)
            bucket = kept if key[0] < N else dropped
            bucket[key] = bucket.get(key, 0) + c1 * c2
    rem = None
    if s.remainder is not None or t.remainder is not None:
        s_exact = RadialSymbol(s.order_a, s.log_type_k, s.coeffs, s.truncation_N)
        t_exact = RadialSymbol(t.order_a, t.log_type_k, t.coeffs, t.truncation_N)
        rs, rt = s.remainder, t.remainder

        def cross(r):
            out = np.zeros_like(r)
            if rs is not None:
                out = out + rs(r) * t_exact.value(r)
            if rt is not None:
                out = out + rt(r) * s_exact.value(r)
            if rs is not None and rt is not None:
                out = out + rs(r) * rt(r)
            return out

        bounds = []
        if rs is not None:
            bounds.append(rs.order_bound + t.order_a)
        if rt is not None:
            bounds.append(rt.order_bound + s.order_a)
        rem = Remainder(cross, max(bounds))
    rem = _combine_remainder(order, dropped, rem, order - N)
    return RadialSymbol(order, s.log_type_k + t.log_type_k, kept, N, rem)


def _rebase_term(b: Fraction, l: int, kmax: int, sign: int) -> dict:
    """Expand (1 + sign*x)^(b/2) * (L + log(1 + sign*x)/2)^l in powers x^k L^(l-p)."""
    base = ps_binomial(b / 2, kmax, sign)
    lg = ps_log1p(kmax, sign)
    out = {}
    for p in range(l + 1):
        series = ps_mul(base, ps_pow_int(lg, p, kmax), kmax)
        pref = Fraction(math.comb(l, p), 2**p)
        for k, v in enumerate(series):
            if v != 0:
                out[(k, l - p)] = out.get((k, l - p), 0) + pref * v
    return out


def to_homogeneous(s: RadialSymbol, N: int | None = None) -> HomogeneousExpansion:
    """Re-expand in the |xi| basis (for |xi| >= 1) up to j < N.

    Depths beyond the symbol's own truncation are only meaningful for exact
    symbols (no remainder).
    """
    N = s.truncation_N if N is None else N
    if N > s.truncation_N and s.remainder is not None:
        raise ValueError("cannot expand beyond the truncation of a symbol with a remainder")
    out: dict = {}
    for (j, l), c in s.coeffs.items():
        if j >= N:
            continue
        kmax = (N - 1 - j) // 2
        for (k, lp), v in _rebase_term(s.order_a - j, l, kmax, +1).items():
            key = (j + 2 * k, lp)
            out[key] = out.get(key, 0) + c * v
    return HomogeneousExpansion(s.order_a, out, N)


def from_homogeneous(h: HomogeneousExpansion, N: int | None = None) -> RadialSymbol:
    N = h.truncation_N if N is None else N
    out: dict = {}
    for (j, l), c in h.coeffs.items():
        if j >= N:
            continue
        kmax = (N - 1 - j) // 2
        for (k, lp), v in _rebase_term(h.order_a - j, l, kmax, -1).items():
            key = (j + 2 * k, lp)
            out[key] = out.get(key, 0) + c * v
    k = max((l for _, l in out), default=0)
    return RadialSymbol(h.order_a, k, out, N)


def expand_general_radial(data: Iterable[tuple], N: int = DEFAULT_TRUNCATION) -> RadialSymbol:
    """Build a symbol from homogeneous components given as (degree, log power, value at 1)."""
    data = [(as_fraction(d), int(l), as_fraction(v)) for d, l, v in data]
    if not data:
        raise ValueError("empty homogeneous data")
    top = max(d for d, _, _ in data)
    coeffs: dict = {}
    for d, l, v in data:
        j = top - d
        if j.denominator != 1:
            raise ValueError(f"degree {d} is not on the ladder {top} - N0")
        key = (int(j), l)
        coeffs[key] = coeffs.get(key, 0) + v
    return from_homogeneous(HomogeneousExpansion(top, coeffs, N), N)


def sphere_volume(n: int) -> float:
    """Lebesgue volume of the unit sphere S^(n-1) in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def residue_density(s: RadialSymbol, n: int, l: int) -> Fraction:
    """Coefficient of |xi|^(-n) log^l |xi| in the homogeneous expansion."""
    j = s.order_a + n
    if j.denominator != 1 or j < 0 or l > s.log_type_k:
        return Fraction(0)
    j = int(j)
    depth = j + 1
    if depth > s.truncation_N:
        if s.remainder is not None:
            raise ValueError("residue lies beyond the known part of the symbol")
        return to_homogeneous(s, depth).coeffs.get((j, l), Fraction(0))
    return to_homogeneous(s).coeffs.get((j, l), Fraction(0))


def residue_l(s: RadialSymbol, n: int, l: int = 0) -> float:
    """res_l in plain Lebesgue measure: Vol(S^(n-1)) times the degree -n coefficient."""
    c = residue_density(s, n, l)
    return 0.0 if c == 0 else sphere_volume(n) * float(c)


def _rational_power(c: Fraction, a: Fraction) -> Optional[Fraction]:
    p, q = a.numerator, a.denominator

    def iroot(x: int):
        r = round(x ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == x:
                return cand
        return None

    num, den = iroot(c.numerator), iroot(c.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** p


def dilate(s: RadialSymbol, c) -> RadialSymbol:
    """The symbol xi -> s(c*xi) re-expanded in the <xi> basis (classical symbols).

    For c < 1 the coefficients grow like (c^-2 - 1)^k and the remainder is a
    difference of large terms, so values lose a few digits.
    """
    c = as_fraction(c)
    if c <= 0:
        raise ValueError("dilation factor must be positive")
    if c == 1:
        return s
    if not s.is_classical:
        raise ValueError("dilation of log symbols produces log(c) terms; only classical symbols supported")
    gamma = c**-2 - 1
    lead = _rational_power(c, s.order_a)
    lead_f = float(c) ** float(s.order_a) if lead is None else None
    N = s.truncation_N
    tail = 80

    def coefficient_table(depth: int, exact: bool) -> dict:
        out: dict = {}
        for (j, _), cj in s.coeffs.items():
            b = s.order_a - j
            for k in range(0, (depth - 1 - j) // 2 + 1):
                if exact:
                    v = cj * c ** (-j) * gbinom(b / 2, k) * gamma**k
                    v = v * lead if lead is not None else float(v) * lead_f
                else:
                    v = float(cj) * float(c) ** float(b) * float(gbinom(b / 2, k)) * float(gamma) ** k
                key = j + 2 * k
                out[key] = out.get(key, 0) + v
        return out

    kept = coefficient_table(N, True)
    far = {j: v for j, v in coefficient_table(N + tail, False).items() if j >= N}
    base = RadialSymbol(s.order_a, 0, s.coeffs, s.truncation_N)
    near = RadialSymbol(s.order_a, 0, {(j, 0): v for j, v in kept.items()}, N)
    old_rem = s.remainder
    a = float(s.order_a)
    gf = abs(float(gamma))

    def rem(r):
        r = np.asarray(r, dtype=float)
        rho2 = 1.0 + r * r
        out = np.empty_like(r)
        series_ok = gf / rho2 <= 0.25
        if np.any(series_ok):
            rr = rho2[series_ok]
            acc = np.zeros_like(rr)
            for j, v in far.items():
                acc = acc + v * rr ** ((a - j) / 2)
            out[series_ok] = acc
        direct = ~series_ok
        if np.any(direct):
            rd = r[direct]
            out[direct] = base.value(float(c) * rd) - near.value(rd)
        if old_rem is not None:
            out = out + old_rem(float(c) * r)
        return out

    bound = s.order_a - N
    if old_rem is not None:
        bound = max(bound, old_rem.order_bound)
    return RadialSymbol(s.order_a, 0, {(j, 0): v for j, v in kept.items()}, N, Remainder(rem, bound))


def _d_rho(terms: dict) -> dict:
    out: dict = {}
    for (e, l), c in terms.items():
        if e != 0:
            out[(e - 1, l)] = out.get((e - 1, l), 0) + c * e
        if l:
            out[(e - 1, l - 1)] = out.get((e - 1, l - 1), 0) + c * l
    return out


def _shift(terms: dict, de, factor) -> dict:
    return {(e + de, l): c * factor for (e, l), c in terms.items()}


def _merge(*dicts) -> dict:
    out: dict = {}
    for d in dicts:
        for k, v in d.items():
            out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def radial_laplacian(s: RadialSymbol, n: int) -> RadialSymbol:
    """Euclidean Laplacian in R^n.  With rho = <xi>:

    Delta g(rho) = (1 - rho^-2) g'' + (rho^-3 + (n-1) rho^-1) g'.
    """
    if s.remainder is not None:
        raise ValueError("Laplacian of a numeric remainder is not supported")
    terms = {(s.order_a - j, l): c for (j, l), c in s.coeffs.items()}
    d1 = _d_rho(terms)
    d2 = _d_rho(d1)
    res = _merge(d2, _shift(d2, -2, -1), _shift(d1, -3, 1), _shift(d1, -1, n - 1))
    new_order = s.order_a - 2
    coeffs = {}
    for (e, l), c in res.items():
        j = new_order - e
        coeffs[(int(j), l)] = c
    N = max([s.truncation_N] + [j + 1 for j, _ in coeffs])
    return RadialSymbol(new_order, s.log_type_k, coeffs, N)


def symbol_to_json(s: RadialSymbol) -> dict:
    coeffs = []
    for (j, l), c in s.coeffs.items():
        coeffs.append([j, l, fraction_str(c) if isinstance(c, (int, Fraction)) else repr(float(c))])
    return {"order": fraction_str(s.order_a), "log_type": s.log_type_k,
            "coeffs": coeffs, "truncation": s.truncation_N}


def symbol_from_json(d: Mapping) -> RadialSymbol:
    for key in ("order", "coeffs"):
        if key not in d:
            raise ValueError(f"symbol missing field {key!r}")
    coeffs = {}
    for j, l, c in d["coeffs"]:
        coeffs[(int(j), int(l))] = as_fraction(str(c)) if not isinstance(c, float) else c
    k = int(d.get("log_type", max((l for _, l in coeffs), default=0)))
    N = int(d.get("truncation", DEFAULT_TRUNCATION))
    return RadialSymbol(as_fraction(str(d["order"])), k, coeffs, N)
