from __future__ import annotations

from fractions import Fraction
from math import factorial


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    raise TypeError(f"cannot convert {x!r} to Fraction")


def fraction_str(x: Fraction) -> str:
    x = as_fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def gbinom(x, k: int):
    """Generalised binomial coefficient x choose k (exact for Fraction x)."""
    out = Fraction(1) if isinstance(x, (int, Fraction)) else 1.0
    for i in range(k):
        out = out * (x - i) / (i + 1)
    return out


def ps_mul(a: list, b: list, deg: int) -> list:
    out = [0] * (deg + 1)
    for i, ai in enumerate(a[: deg + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: deg + 1 - i]):
            out[i + j] += ai * bj
    return out


def ps_binomial(expo, deg: int, scale=1) -> list:
    """Coefficients of (1 + scale*u)**expo up to u**deg."""
    return [gbinom(expo, k) * scale**k for k in range(deg + 1)]


def ps_log1p(deg: int, scale=1) -> list:
    """Coefficients of log(1 + scale*u) up to u**deg."""
    out = [Fraction(0)] * (deg + 1)
    for m in range(1, deg + 1):
        out[m] = Fraction((-1) ** (m + 1), m) * scale**m
    return out


def ps_pow_int(a: list, p: int, deg: int) -> list:
    out = [Fraction(1)] + [Fraction(0)] * deg
    for _ in range(p):
        out = ps_mul(out, a, deg)
    return out


def ps_inverse(a: list, deg: int) -> list:
    """Reciprocal of a power series with a[0] != 0."""
    if a[0] == 0:
        raise ZeroDivisionError("series has zero constant term")
    out = [0] * (deg + 1)
    out[0] = 1 / a[0] if not isinstance(a[0], int) else Fraction(1, a[0])
    for k in range(1, deg + 1):
        s = 0
        for i in range(1, min(k, len(a) - 1) + 1):
            s += a[i] * out[k - i]
        out[k] = -s * out[0]
    return out


def ps_exp(a: list, deg: int) -> list:
    """exp of a series with a[0] == 0."""
    if a[0] != 0:
        raise ValueError("ps_exp needs zero constant term")
    out = [0] * (deg + 1)
    out[0] = 1
    for k in range(1, deg + 1):
        s = 0
        for i in range(1, k + 1):
            if i < len(a):
                s += i * a[i] * out[k - i]
        out[k] = s / k
    return out


def multinomial_count(idx) -> int:
    n = factorial(sum(idx))
    for i in idx:
        n //= factorial(i)
    return n
