"""Meromorphic extension of constrained multiple integrals of <xi> powers.

For rows with weights <B_i k>^(a_i - q z_i) the integral over R^(nL) is written
with Schwinger parameters, Gaussian-reduced to det(theta)^(-n/2), and split into
the I! ordered sectors.  In each sector the variables eps_i = t_I...t_i reduce
the integrand to prod_j t_j^(alpha_j - 1) g(t) with g smooth on [0,1]^(I-1); the
t_I integral is a Gamma function.

Each t_j < I is integrated as [0, delta] + [delta, 1].  On [0, delta] the Taylor
jet of g in t_j gives sum_m g_m delta^(alpha+m)/(alpha+m), which exposes the pole
factors exactly.  On [delta, 1] Gauss-Legendre in s = -log t is used.  The sum is
independent of delta, which the error estimate exploits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Sequence

import numpy as np

from ._series import as_fraction
from .germs import MeroGerm, _term, subset_form
from .laurent import LaurentSeries, gamma_laurent, rgamma_series
from .matrices import ConstraintMatrix, StepForm, step_reduce
from .symbols import RadialSymbol

INDEPENDENT = "independent"
EQUAL = "equal"


class EngineError(ValueError):
    code = "ENGINE_ERROR"


@dataclass(frozen=True)
class Numerics:
    delta: float = 0.03
    jet_radius: float = 0.12
    jet_points: int = 24
    jet_order: int = 18
    quad_panels: int = 2
    quad_nodes: int = 12

    def cheaper(self) -> "Numerics":
        return Numerics(0.05, self.jet_radius, self.jet_points, self.jet_order - 4,
                        self.quad_panels, self.quad_nodes - 3)


@dataclass(frozen=True)
class SchwingerProblem:
    B: ConstraintMatrix
    orders_a: tuple
    dim_n: int
    slope_q: Fraction = Fraction(1)
    z_mode: str = INDEPENDENT
    K: int = 4
    numerics: Numerics = field(default_factory=Numerics)

    def __post_init__(self):
        a = tuple(as_fraction(x) for x in self.orders_a)
        object.__setattr__(self, "orders_a", a)
        object.__setattr__(self, "slope_q", as_fraction(self.slope_q))
        if len(a) != self.B.rows_I:
            raise ValueError("need one order per row of B")
        if self.dim_n < 1:
            raise ValueError("dimension must be positive")
        if self.slope_q <= 0:
            raise ValueError("slope q must be positive")
        if self.z_mode not in (INDEPENDENT, EQUAL):
            raise ValueError("z_mode must be 'independent' or 'equal'")
        if self.K < 0:
            raise ValueError("K must be non-negative")

    @property
    def num_rows(self) -> int:
        return self.B.rows_I

    @property
    def numerator_degree(self) -> int:
        return self.K + self.B.rows_I


@dataclass(frozen=True)
class PoleFactor:
    """The linear form q * sum_{i in rows} z_i + constant (rows are 0-based)."""

    rows: tuple
    slope: Fraction
    constant: Fraction
    multiplicity: int = 1

    def vanishes_at_zero(self) -> bool:
        return self.constant == 0


@dataclass(frozen=True)
class SectorExpansion:
    permutation: tuple
    markers: tuple
    s_vector: tuple
    exponents: tuple          # alpha_j at z = 0; the t_j power is alpha_j - 1
    step: StepForm
    subtraction_orders: tuple
    pole_factors: tuple


def theta_matrix(B: ConstraintMatrix) -> list:
    """theta[l][m] as {row i: B_il B_im}, i.e. sum_i eps_i B_il B_im."""
    L = B.cols_L
    out = []
    for l in range(L):
        row = []
        for m in range(L):
            row.append({i: B[i, l] * B[i, m] for i in range(B.rows_I) if B[i, l] * B[i, m] != 0})
        out.append(row)
    return out


def theta_determinant(B: ConstraintMatrix) -> dict:
    """det theta as a polynomial {exponent tuple over eps: coefficient}."""
    I, L = B.rows_I, B.cols_L
    th = theta_matrix(B)

    def entry(l, m):
        return {tuple(int(j == i) for j in range(I)): c for i, c in th[l][m].items()}

    total: dict = {}
    for perm in permutations(range(L)):
        sign = _perm_sign(perm)
        term = {(0,) * I: Fraction(sign)}
        for l in range(L):
            nxt: dict = {}
            for m1, c1 in term.items():
                for m2, c2 in entry(l, perm[l]).items():
                    mm = tuple(x + y for x, y in zip(m1, m2))
                    nxt[mm] = nxt.get(mm, 0) + c1 * c2
            term = nxt
        for mm, c in term.items():
            total[mm] = total.get(mm, 0) + c
    return {m: c for m, c in sorted(total.items()) if c != 0}


def _perm_sign(p) -> int:
    sign, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign


def s_vector(markers: Sequence[int], I: int) -> tuple:
    return tuple(sum(1 for m in markers if m <= i) for i in range(1, I + 1))


def _subtraction_depth(alpha0: Fraction) -> int:
    """Smallest M >= 0 with alpha0 + M > 0."""
    return max(0, math.floor(-alpha0) + 1)


def sector_data(problem: SchwingerProblem, tau: Sequence[int]) -> SectorExpansion:
    B, I, n, q = problem.B, problem.num_rows, problem.dim_n, problem.slope_q
    tau = tuple(tau)
    step = step_reduce(B, tau)
    s = s_vector(step.markers, I)
    btau = [-problem.orders_a[r] for r in tau]
    alphas, depths, poles = [], [], []
    for j in range(1, I + 1):
        a0 = (sum(btau[:j]) - n * s[j - 1]) / 2
        alphas.append(a0)
        M = _subtraction_depth(a0)
        depths.append(M)
        rows = tuple(sorted(tau[:j]))
        for m in range(M):
            poles.append(PoleFactor(rows, q, 2 * (a0 + m)))
    return SectorExpansion(tau, step.markers, s, tuple(alphas), step, tuple(depths), tuple(poles))


def is_convergent(problem: SchwingerProblem) -> bool:
    """True when every sector exponent is positive at z = 0 (absolute convergence)."""
    if problem.B.cols_L == 0:
        return True
    return all(a > 0 for tau in permutations(range(problem.num_rows))
               for a in sector_data(problem, tau).exponents)


# numerics ------------------------------------------------------------------

@lru_cache(maxsize=32)
def _gl_nodes(panels: int, nodes: int, length: float):
    x, w = np.polynomial.legendre.leggauss(nodes)
    xs, ws = [], []
    h = length / panels
    for p in range(panels):
        xs.append(p * h + (x + 1) * h / 2)
        ws.append(w * h / 2)
    return np.concatenate(xs), np.concatenate(ws)


def _jet_weights(alpha0: Fraction, q: Fraction, D: int, num: Numerics) -> np.ndarray:
    """W[p, d+1]: samples on the jet circle -> Laurent coefficient of y^d of int_0^delta."""
    N, E, r, delta = num.jet_points, num.jet_order, num.jet_radius, num.delta
    half_q = float(q) / 2
    ld = math.log(delta)
    omega = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(E + 1)) / N)  # [p, m]
    coef = np.zeros((E + 1, D + 2))
    expo = [(half_q * ld) ** a / math.factorial(a) for a in range(D + 2)]
    for m in range(E + 1):
        c = alpha0 + m
        scale_m = delta ** float(c) / r**m
        if c == 0:
            inv = {-1: 2 / float(q)}
        else:
            cf = float(c)
            inv = {b: (-half_q) ** b / cf ** (b + 1) for b in range(D + 1)}
        for b, v in inv.items():
            for a in range(D + 2):
                d = a + b
                if -1 <= d <= D:
                    coef[m, d + 1] += scale_m * v * expo[a]
    return omega @ coef / N


def _quad_weights(alpha0: Fraction, q: Fraction, D: int, num: Numerics):
    s, w = _gl_nodes(num.quad_panels, num.quad_nodes, -math.log(num.delta))
    half_q = float(q) / 2
    W = np.zeros((len(s), D + 2))
    base = w * np.exp(-float(alpha0) * s)
    for d in range(D + 1):
        W[:, d + 1] = base * (-half_q * s) ** d / math.factorial(d)
    return np.exp(-s).astype(complex), W


def _jet_points(num: Numerics) -> np.ndarray:
    N = num.jet_points
    return num.jet_radius * np.exp(2j * np.pi * np.arange(N) / N)


def _theta_tilde_det(S: ConstraintMatrix, markers: tuple, t: np.ndarray) -> np.ndarray:
    """det theta~ at points t (shape (P, I-1), complex)."""
    I, L = S.rows_I, S.cols_L
    P = t.shape[0]
    u = np.sqrt(t)
    ones = np.ones(P, dtype=complex)

    def tprod(i, mu):  # prod_{i <= j < mu} t_j, 1-based j
        out = ones
        for j in range(i, mu):
            out = out * t[:, j - 1]
        return out

    def uprod(mu, M):
        out = ones
        for j in range(mu, M):
            out = out * u[:, j - 1]
        return out

    th = np.zeros((P, L, L), dtype=complex)
    for l in range(L):
        for m in range(l, L):
            mu, M = min(markers[l], markers[m]), max(markers[l], markers[m])
            acc = np.zeros(P, dtype=complex)
            for i in range(1, mu + 1):
                c = S[i - 1, l] * S[i - 1, m]
                if c != 0:
                    acc = acc + float(c) * tprod(i, mu)
            acc = acc * uprod(mu, M)
            th[:, l, m] = acc
            th[:, m, l] = acc
    if L == 0:
        return ones
    if L == 1:
        return th[:, 0, 0]
    if L == 2:
        return th[:, 0, 0] * th[:, 1, 1] - th[:, 0, 1] ** 2
    if L == 3:
        a, b, c = th[:, 0, 0], th[:, 0, 1], th[:, 0, 2]
        d, e, f = th[:, 1, 1], th[:, 1, 2], th[:, 2, 2]
        return a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
    return np.linalg.det(th)


def _schwinger_sum(t: np.ndarray, I: int) -> np.ndarray:
    """S(t) = sum_i prod_{i <= j < I} t_j."""
    P = t.shape[0]
    total = np.ones(P, dtype=complex)
    run = np.ones(P, dtype=complex)
    for j in range(I - 1, 0, -1):
        run = run * t[:, j - 1]
        total = total + run
    return total


def _integrand_jets(S, markers, I, n, beta0, q, D, t) -> np.ndarray:
    """g_k(t) for k = 0..D: S^-beta0 det^-n/2 (-(q/2) log S)^k / k!."""
    Ssum = _schwinger_sum(t, I)
    det = _theta_tilde_det(S, markers, t)
    if np.min(det.real) <= 0:
        raise EngineError("det theta~ not in the right half plane on the sample set")
    logS = np.log(Ssum)
    base = np.exp(-float(beta0) * logS - (n / 2) * np.log(det))
    out = np.empty((D + 1, t.shape[0]), dtype=complex)
    lg = -float(q) / 2 * logS
    out[0] = base
    for k in range(1, D + 1):
        out[k] = out[k - 1] * lg / k
    return out


def _sector_array(problem: SchwingerProblem, sec: SectorExpansion, num: Numerics) -> np.ndarray:
    """Dense Laurent array A[d_1+1, ..., d_I+1] in the partial sums y_j of the sector."""
    I, n, q = problem.num_rows, problem.dim_n, problem.slope_q
    D = problem.numerator_degree
    for j, a0 in enumerate(sec.exponents[:-1]):
        if -a0 > num.jet_order - 6:
            raise EngineError(f"subtraction depth too large for the jet order in sector {sec.permutation}")
    S, markers = sec.step.step_matrix, sec.markers
    beta0 = sec.exponents[-1]
    nv = I - 1
    jets = [(_jet_points(num), _jet_weights(a0, q, D, num)) for a0 in sec.exponents[:-1]]
    quads = [_quad_weights(a0, q, D, num) for a0 in sec.exponents[:-1]]
    acc = np.zeros((D + 1,) + (D + 2,) * nv, dtype=complex)
    for choice in product((0, 1), repeat=nv):
        axes = [jets[j] if c else quads[j] for j, c in enumerate(choice)]
        if nv:
            grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
            shape = grids[0].shape
            t = np.stack([g.ravel() for g in grids], axis=1)
        else:
            shape = ()
            t = np.zeros((1, 0), dtype=complex)
        F = _integrand_jets(S, markers, I, n, beta0, q, D, t).reshape((D + 1,) + shape)
        for ax in axes:
            F = np.tensordot(F, ax[1], axes=([1], [0]))
        acc += F
    G = gamma_laurent(beta0, q / 2, D)
    g = np.array([G[d] for d in range(-1, D + 1)])
    # convolve the y_I axis (currently axis 0, degrees 0..D) with Gamma(beta)
    out = np.zeros((D + 2,) + acc.shape[1:], dtype=complex)
    for k in range(D + 1):
        for e in range(D + 2):  # e = d_I + 1
            gi = e - 1 - k + 1
            if 0 <= gi < D + 2:
                out[e] += acc[k] * g[gi]
    out = np.moveaxis(out, 0, -1)
    return out * float(sec.step.det_factor) ** n


def _shear(arr: np.ndarray, j: int) -> np.ndarray:
    """Substitute y_j = y_(j-1) + x_j (0-based axes j-1, j) in a dense polynomial array."""
    D1 = arr.shape[0]
    out = np.zeros_like(arr)
    a_ax, b_ax = j - 1, j
    arr = np.moveaxis(arr, (a_ax, b_ax), (0, 1))
    out = np.moveaxis(out, (a_ax, b_ax), (0, 1))
    for a in range(D1):
        for b in range(D1 - a):
            blk = arr[a, b]
            if not np.any(blk):
                continue
            for c in range(b + 1):
                out[a + b - c, c] += math.comb(b, c) * blk
    return np.moveaxis(out, (0, 1), (a_ax, b_ax))


def _total_degree_mask(D: int, I: int) -> np.ndarray:
    idx = np.indices((D + 1,) * I).sum(axis=0)
    return idx <= D


def _rgamma_prefactor(problem: SchwingerProblem, D: int) -> list:
    q = problem.slope_q
    return [np.array(rgamma_series(-a / 2, q / 2, D)) for a in problem.orders_a]


def _array_to_numerator(arr: np.ndarray, tol: float) -> dict:
    out = {}
    for idx in zip(*np.nonzero(np.abs(arr) > tol)):
        out[tuple(int(i) for i in idx)] = float(arr[idx])
    return out


def _sector_germ_arrays(problem: SchwingerProblem, sec: SectorExpansion, A: np.ndarray) -> dict:
    """{pole pattern (tuple of j with 1/y_j): dense numerator in z}."""
    I, D = problem.num_rows, problem.numerator_degree
    mask = _total_degree_mask(D, I)
    tau = sec.permutation
    inv = [0] * I
    for k, r in enumerate(tau):
        inv[r] = k
    out = {}
    for Q in product((0, 1), repeat=I):
        sl = tuple(slice(0, 1) if qj else slice(1, D + 2) for qj in Q)
        block = A[sl].real
        full = np.zeros((D + 1,) * I)
        full[tuple(slice(0, s) for s in block.shape)] = block
        full = full * mask
        if not np.any(full):
            continue
        for j in range(I - 1, 0, -1):
            full = _shear(full, j)
        full = np.transpose(full, inv)
        out[Q] = full
    return out


def _apply_prefactor_dense(arr: np.ndarray, pref: list, D: int) -> np.ndarray:
    I = arr.ndim
    for i in range(I):
        moved = np.moveaxis(arr, i, 0)
        new = np.zeros_like(moved)
        for d in range(D + 1):
            for e in range(D + 1 - d):
                new[d + e] += pref[i][e] * moved[d]
        arr = np.moveaxis(new, 0, i)
    return arr * _total_degree_mask(D, I)


def _constant_factor(problem: SchwingerProblem, normalized: bool) -> float:
    n, L = problem.dim_n, problem.B.cols_L
    c = math.pi ** (n * L / 2)
    if normalized:
        c /= (2 * math.pi) ** (n * L)
    return c


@dataclass
class EngineResult:
    value: object                  # MeroGerm or LaurentSeries
    sectors: list
    error_estimate: float
    dense: dict = field(default_factory=dict, repr=False)


def _sector_dense_total(problem: SchwingerProblem, num: Numerics, normalized: bool):
    """Sum over sectors of prefactored dense numerators keyed by denominator subsets."""
    I, D = problem.num_rows, problem.numerator_degree
    pref = _rgamma_prefactor(problem, D)
    const = _constant_factor(problem, normalized)
    total: dict = {}
    sectors = []
    for tau in permutations(range(I)):
        sec = sector_data(problem, tau)
        sectors.append(sec)
        A = _sector_array(problem, sec, num)
        for Q, arr in _sector_germ_arrays(problem, sec, A).items():
            den = tuple(sorted(tuple(sorted(tau[:j + 1])) for j in range(I) if Q[j]))
            arr = _apply_prefactor_dense(arr, pref, D) * const
            total[den] = total.get(den, 0) + arr
    return total, sectors


def _dense_to_germ(I: int, D: int, total: dict) -> MeroGerm:
    terms = []
    for den, arr in sorted(total.items()):
        poly = _array_to_numerator(arr, 0.0)
        dd = {}
        for sub in den:
            f = subset_form(sub, I)
            dd[f] = dd.get(f, 0) + 1
        terms.append(_term(poly, dd))
    return MeroGerm(I, terms, D)


def _sector_laurent_equal(problem: SchwingerProblem, A: np.ndarray) -> dict:
    I, D = problem.num_rows, problem.numerator_degree
    out: dict = {}
    for idx in product(range(D + 2), repeat=I):
        v = A[idx]
        if v == 0:
            continue
        ds = [i - 1 for i in idx]
        deg = sum(ds)
        if deg > problem.K:
            continue
        w = 1.0
        for j, d in enumerate(ds):
            w *= float(j + 1) ** d
        out[deg] = out.get(deg, 0.0) + float(v.real) * w
    return out


def _equal_series(problem: SchwingerProblem, num: Numerics, normalized: bool):
    I, K = problem.num_rows, problem.K
    D = problem.numerator_degree
    total = LaurentSeries({}, K + I)
    sectors = []
    for tau in permutations(range(I)):
        sec = sector_data(problem, tau)
        sectors.append(sec)
        A = _sector_array(problem, sec, num)
        total = total + LaurentSeries(_sector_laurent_equal(problem, A), K + I)
    pref = LaurentSeries({0: 1.0}, D)
    for a in problem.orders_a:
        pref = pref * LaurentSeries(dict(enumerate(rgamma_series(-a / 2, problem.slope_q / 2, D))), D)
    return (total * pref).scale(_constant_factor(problem, normalized)).truncate(K), sectors


def sector_laurent(problem: SchwingerProblem, tau: Sequence[int], normalized: bool = False) -> MeroGerm:
    """Contribution of one sector as an independent-z germ (Gamma prefactors included)."""
    I, D = problem.num_rows, problem.numerator_degree
    sec = sector_data(problem, tau)
    A = _sector_array(problem, sec, problem.numerics)
    pref = _rgamma_prefactor(problem, D)
    const = _constant_factor(problem, normalized)
    total = {}
    for Q, arr in _sector_germ_arrays(problem, sec, A).items():
        den = tuple(sorted(tuple(sorted(tuple(tau)[:j + 1])) for j in range(I) if Q[j]))
        total[den] = _apply_prefactor_dense(arr, pref, D) * const
    return _dense_to_germ(I, D, total)


def _empty_matrix_result(problem: SchwingerProblem):
    I = problem.num_rows
    if problem.z_mode == EQUAL:
        return LaurentSeries({0: 1.0}, problem.K)
    return MeroGerm.constant(1.0, I, problem.numerator_degree)


def meromorphic_extension_with_error(problem: SchwingerProblem, normalized: bool = False) -> EngineResult:
    if problem.B.cols_L == 0:
        return EngineResult(_empty_matrix_result(problem), [], 0.0)
    I, D = problem.num_rows, problem.numerator_degree
    num = problem.numerics
    if problem.z_mode == EQUAL:
        main, sectors = _equal_series(problem, num, normalized)
        alt, _ = _equal_series(problem, num.cheaper(), normalized)
        errs = {d: float(abs(main[d] - alt[d]) + 1e-14 * abs(main[d])) for d in range(main.min_degree, problem.K + 1)}
        out = LaurentSeries(main.coeffs, main.max_degree, errs)
        return EngineResult(out, sectors, float(max(errs.values(), default=0.0)))
    total, sectors = _sector_dense_total(problem, num, normalized)
    alt, _ = _sector_dense_total(problem, num.cheaper(), normalized)
    err = 0.0
    for den, arr in total.items():
        other = alt.get(den, 0)
        err = max(err, float(np.max(np.abs(arr - other))))
    return EngineResult(_dense_to_germ(I, D, total), sectors, err, total)


def meromorphic_extension(problem: SchwingerProblem, normalized: bool = False):
    """Independent-z MeroGerm or equal-z LaurentSeries of the constrained integral."""
    return meromorphic_extension_with_error(problem, normalized).value


def evaluate_at(problem: SchwingerProblem, z: Sequence[float]) -> float:
    """Engine value at a point (only meaningful near 0 inside the truncation)."""
    g = meromorphic_extension(problem)
    if isinstance(g, LaurentSeries):
        return sum(v * z[0] ** d for d, v in g.coeffs.items())
    return g.evaluate(z)


# general radial symbols ----------------------------------------------------

@dataclass(frozen=True)
class PowerReduction:
    problems: list           # [(weight, orders tuple)]
    tail_orders: list        # per row: order of the first dropped term
    convergent_tail: bool


def radial_to_power_reduction(symbols: Sequence[RadialSymbol], B: ConstraintMatrix, n: int,
                              depth: int | None = None) -> PowerReduction:
    """Multi-index expansion of prod_i sigma_i(B_i k) into weighted <xi>-power problems.

    Only classical exact-coefficient parts are used; each row keeps its terms
    j < depth (default: the symbol truncation).  The tail is reported convergent when
    replacing any one row by its first dropped order, with the other rows at their
    leading orders, gives an absolutely convergent integral.
    """
    if len(symbols) != B.rows_I:
        raise ValueError("one symbol per row is required")
    rows = []
    tails = []
    for s in symbols:
        if not s.is_classical:
            raise ValueError("log-type symbols are not supported by the constrained engine")
        N = s.truncation_N if depth is None else min(depth, s.truncation_N)
        rows.append([(s.order_a - j, c) for (j, _), c in s.coeffs.items() if j < N])
        tails.append(s.order_a - N)
    problems: dict = {}
    for combo in product(*rows):
        w = 1
        for _, c in combo:
            w = w * c
        key = tuple(o for o, _ in combo)
        problems[key] = problems.get(key, 0) + w
    plist = sorted(((w, k) for k, w in problems.items() if w != 0), key=lambda x: x[1], reverse=True)
    lead = [s.order_a for s in symbols]
    conv = True
    for i in range(B.rows_I):
        orders = list(lead)
        orders[i] = tails[i]
        if not is_convergent(SchwingerProblem(B, tuple(orders), n)):
            conv = False
    return PowerReduction(plist, tails, conv)
