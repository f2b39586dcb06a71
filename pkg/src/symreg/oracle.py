"""Independent numerical ground truth: direct quadrature and closed-form Mellin integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate
from scipy.stats import qmc

from ._series import as_fraction
from .matrices import ConstraintMatrix
from .schwinger import SchwingerProblem, is_convergent
from .symbols import RadialSymbol, make_power, sphere_volume


class NotConvergent(ValueError):
    code = "NOT_CONVERGENT"


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error: float
    evaluations: int
    method: str = ""

    def to_json(self) -> dict:
        return {"value": repr(float(self.value)), "abs_error": repr(float(self.abs_error)),
                "evaluations": self.evaluations, "method": self.method}


def _symbols(symbols) -> list:
    return [s if isinstance(s, RadialSymbol) else make_power(as_fraction(s)) for s in symbols]


def _product_of_norms(syms, B: ConstraintMatrix, norms2: list) -> np.ndarray:
    out = 1.0
    for s, r2 in zip(syms, norms2):
        out = out * s.value(np.sqrt(np.maximum(r2, 0.0)))
    return out


def _radial_1loop(syms, B, n, tol) -> QuadratureResult:
    coeffs = [abs(float(B[i, 0])) for i in range(B.rows_I)]
    vol = sphere_volume(n)

    def f_log(u):
        r = math.exp(u)
        v = r**n
        for s, c in zip(syms, coeffs):
            v *= float(s.value(np.array([c * r]))[0])
        return v

    val, err = integrate.quad(f_log, -60, 60, epsabs=0, epsrel=tol, limit=400)
    return QuadratureResult(vol * val, vol * max(err, 1e-15 * abs(val)), 0, "radial")


def _row_data(B: ConstraintMatrix):
    return [(float(B[i, 0]), float(B[i, 1])) for i in range(B.rows_I)]


def _inner_breakpoints(rows, x: float) -> list:
    """Values of the inner coordinate where some row form c x + d y vanishes."""
    return sorted({-c * x / d for c, d in rows if d != 0})


def _quad_line(f, breaks: list, tol: float) -> float:
    """Integral over R of f with the given interior breakpoints."""
    if not breaks:
        breaks = [0.0]
    total = integrate.quad(f, -np.inf, breaks[0], epsabs=0, epsrel=tol, limit=200)[0]
    for lo, hi in zip(breaks, breaks[1:]):
        if hi > lo:
            total += integrate.quad(f, lo, hi, epsabs=0, epsrel=tol, limit=200)[0]
    total += integrate.quad(f, breaks[-1], np.inf, epsabs=0, epsrel=tol, limit=200)[0]
    return total


def _nested_n1(syms, B, tol) -> tuple:
    rows = _row_data(B)
    orders = [s for s in syms]
    count = [0]

    def inner(x):
        def f(y):
            count[0] += 1
            v = 1.0
            for s, (c, d) in zip(orders, rows):
                v *= float(s.value(np.array([abs(c * x + d * y)]))[0])
            return v
        return _quad_line(f, _inner_breakpoints(rows, x), tol)

    outer_breaks = sorted({0.0})
    return _quad_line(inner, outer_breaks, tol), count[0]


def _tensor_n1(syms, B, tol) -> QuadratureResult:
    fine, e1 = _nested_n1(syms, B, 1e-11)
    coarse, e2 = _nested_n1(syms, B, 1e-8)
    return QuadratureResult(fine, abs(fine - coarse) + 1e-13 * abs(fine), e1 + e2, "nested-adaptive")


@lru_cache(maxsize=16)
def _graded_angle_rule(n: int, depth: int, nodes: int = 8):
    """Gauss-Legendre on [0, pi] with panels refined geometrically toward both ends."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    cuts = [math.pi / 2 * 2.0**-j for j in range(depth + 1)][::-1]
    left = [0.0] + cuts
    edges = left + [math.pi - c for c in reversed(left[:-1])]
    th, wt = [], []
    for lo, hi in zip(edges, edges[1:]):
        th.append(lo + (x + 1) * (hi - lo) / 2)
        wt.append(w * (hi - lo) / 2)
    th, wt = np.concatenate(th), np.concatenate(wt)
    return np.cos(th), wt * np.sin(th) ** (n - 2)


def _polar_two_loop(syms, B, n, tol) -> tuple:
    """k1 radial outside; k2 in polar coordinates about the k1 direction."""
    rows = _row_data(B)
    vol = sphere_volume(n) * sphere_volume(n - 1)
    count = [0]

    def weight(r1, rho, cos_t):
        v = 1.0
        for s, (c, d) in zip(syms, rows):
            r2 = c * c * r1 * r1 + d * d * rho * rho + 2 * c * d * r1 * rho * cos_t
            v = v * s.value(np.sqrt(np.maximum(r2, 0.0)))
        return v

    def middle(r1):
        radii = sorted({abs(c / d) * r1 for c, d in rows if d != 0 and c != 0})
        depth = int(min(50, max(4, math.log2(max(radii, default=1.0) + 1.0) + 8)))
        ct, wt = _graded_angle_rule(n, depth)

        def f(rho):
            count[0] += ct.size
            return rho ** (n - 1) * float(np.dot(wt, weight(r1, rho, ct)))

        pts = [0.0] + radii
        total = 0.0
        for lo, hi in zip(pts, pts[1:]):
            if hi > lo:
                total += integrate.quad(f, lo, hi, epsabs=0, epsrel=tol, limit=200)[0]
        total += integrate.quad(f, pts[-1], np.inf, epsabs=0, epsrel=tol, limit=200)[0]
        return r1 ** (n - 1) * total

    val = integrate.quad(middle, 0, 1, epsabs=0, epsrel=tol, limit=200)[0]
    val += integrate.quad(middle, 1, np.inf, epsabs=0, epsrel=tol, limit=200)[0]
    return vol * val, count[0]


def _polar(syms, B, n, tol) -> QuadratureResult:
    fine, e1 = _polar_two_loop(syms, B, n, 1e-10)
    coarse, e2 = _polar_two_loop(syms, B, n, 1e-7)
    return QuadratureResult(fine, abs(fine - coarse) + 1e-13 * abs(fine), e1 + e2, "polar-adaptive")


def _sobol(syms, B, n, seed, m=16, reps=8) -> QuadratureResult:
    L = B.cols_L
    d = n * L
    vals = []
    for rep in range(reps):
        pts = qmc.Sobol(d, scramble=True, seed=seed + rep).random_base2(m)
        pts = np.clip(pts, 1e-15, 1 - 1e-15)
        x = np.tan(math.pi * (pts - 0.5))
        jac = np.prod(math.pi / np.cos(math.pi * (pts - 0.5)) ** 2, axis=1)
        ks = x.reshape(-1, L, n)
        norms = []
        for i in range(B.rows_I):
            v = sum(float(B[i, l]) * ks[:, l, :] for l in range(L))
            norms.append(np.sum(v * v, axis=1))
        vals.append(float(np.mean(jac * _product_of_norms(syms, B, norms))))
    vals = np.array(vals)
    return QuadratureResult(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)) * 3,
                            reps * 2**m, "sobol-qmc")


def direct_integral(symbols: Sequence, B: ConstraintMatrix, n: int, tol: float = 1e-10,
                    seed: int = 0) -> QuadratureResult:
    """Plain-measure integral of prod_i sigma_i(B_i k) over R^(nL) in the convergent regime."""
    syms = _symbols(symbols)
    if len(syms) != B.rows_I:
        raise ValueError("one symbol per row is required")
    orders = tuple(s.order_a for s in syms)
    if B.cols_L == 0:
        return QuadratureResult(float(np.prod([s.value(np.array([0.0]))[0] for s in syms])), 0.0, 1, "empty")
    if not is_convergent(SchwingerProblem(B, orders, n)):
        raise NotConvergent("integral is not absolutely convergent for these orders")
    if B.cols_L == 1:
        return _radial_1loop(syms, B, n, tol)
    if B.cols_L == 2 and n == 1:
        return _tensor_n1(syms, B, tol)
    if B.cols_L == 2:
        return _polar(syms, B, n, tol)
    if n * B.cols_L > 6:
        raise ValueError("oracle limited to n*L <= 6")
    return _sobol(syms, B, n, seed)


# one-dimensional radial oracles ---------------------------------------------

def ball_integral(s: RadialSymbol, n: int, R: float) -> float:
    vol = sphere_volume(n)
    f = lambda r: r ** (n - 1) * float(s.value(np.array([r]))[0])
    pts = [1.0] if R > 1 else None
    val, _ = integrate.quad(f, 0, R, epsabs=0, epsrel=1e-13, limit=500, points=pts)
    return vol * val


def radial_fp_oracle(s: RadialSymbol, n: int, R_list: Sequence[float] | None = None,
                     decaying_terms: int = 4) -> QuadratureResult:
    """Constant term of the large-R asymptotics of the ball integral, by least-squares fit."""
    if R_list is None:
        R_list = np.geomspace(8.0, 400.0, 40)
    R = np.asarray(R_list, dtype=float)
    y = np.array([ball_integral(s, n, r) for r in R])
    for dt in range(decaying_terms, 0, -1):
        try:
            return _fit_constant(s, n, R, y, dt)
        except np.linalg.LinAlgError:
            continue
    raise ValueError("ill-conditioned asymptotic fit")


def _fit_constant(s: RadialSymbol, n: int, R: np.ndarray, y: np.ndarray, decaying_terms: int):
    k = s.log_type_k
    top = s.order_a + n
    # <r>^(a-j) = r^(a-j) (1 + r^-2)^((a-j)/2): only exponents a - j - 2m + n occur
    parities = {j % 2 for j, _ in s.coeffs} or {0}
    cols, names = [], []
    for j in range(0, int(top) + 2 * decaying_terms + 3):
        if j % 2 not in parities:
            continue
        e = top - j
        if e < -2 * decaying_terms:
            break
        if e == 0:
            for l in range(1, k + 2):
                cols.append(np.log(R) ** l)
                names.append((0, l))
        else:
            for l in range(k + 1):
                cols.append(R ** float(e) * np.log(R) ** l)
                names.append((e, l))
    cols.append(np.ones_like(R))
    names.append("const")
    A = np.stack(cols, axis=1)
    scale = np.max(np.abs(A), axis=0)
    coef, res, rank, sv = np.linalg.lstsq(A / scale, y, rcond=None)
    if rank < A.shape[1]:
        raise np.linalg.LinAlgError("rank deficient fit")
    coef = coef / scale
    # stability estimate from a fit on the upper half of the radii
    half = len(R) // 2
    coef2 = np.linalg.lstsq(A[half:] / scale, y[half:], rcond=None)[0] / scale
    const = float(coef[-1])
    return QuadratureResult(const, abs(const - float(coef2[-1])) + 1e-12, len(R), "asymptotic-fit")


def mellin_laurent(a, l: int, n: int, q=1, K: int = 3, radius: float = 0.05) -> dict:
    """Laurent coefficients of vol * int_0^inf r^(n-1-qz) <r>^a log^l<r> dr (Riesz twist).

    Closed form: (1/2) Gamma((n-qz)/2) Gamma((qz-s-n)/2) / Gamma(-s/2) at s = a, with
    log^l <r> obtained as the l-th s-derivative.  Coefficients come from a contour
    integral around z = 0.
    """
    a = mpmath.mpf(as_fraction(a).numerator) / as_fraction(a).denominator
    q = mpmath.mpf(as_fraction(q).numerator) / as_fraction(q).denominator
    vol = mpmath.mpf(2) * mpmath.pi ** (mpmath.mpf(n) / 2) / mpmath.gamma(mpmath.mpf(n) / 2)
    with mpmath.workdps(30):
        def F(z):
            g = lambda s: mpmath.gamma((n - q * z) / 2) * mpmath.gamma((q * z - s - n) / 2) * mpmath.rgamma(-s / 2) / 2
            return vol * (mpmath.diff(g, a, l) if l else g(a))

        N = 64
        pts = [radius * mpmath.expjpi(2 * mpmath.mpf(p) / N) for p in range(N)]
        vals = [F(z) for z in pts]
        out = {}
        for d in range(-(l + 2), K + 1):
            c = sum(v * z ** (-d) for v, z in zip(vals, pts)) / N
            out[d] = float(mpmath.re(c))
    return {d: v for d, v in out.items() if abs(v) > 1e-13 * max(1.0, max(abs(x) for x in out.values()))}
