"""Meromorphic germs at 0 with linear-form poles, iterated finite parts and evaluators.

A germ in I variables is a finite sum of terms N(z) / prod_f f(z)^m_f where N is
a truncated Taylor polynomial and each f is a rational linear form.  Linear
forms are stored normalised (first non-zero coefficient 1).  The partial-sum
forms sum_{i in S} z_i produced by sector decomposition are the 0/1 case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ._series import as_fraction

DEFAULT_K = 6

Monomial = tuple
Poly = dict  # Monomial -> coefficient


class TruncationError(ValueError):
    pass


def _clean(p: Poly) -> Poly:
    return {m: c for m, c in p.items() if c != 0}


def poly_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0) + c
    return _clean(out)


def poly_mul(a: Poly, b: Poly, K: int) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        d1 = sum(m1)
        for m2, c2 in b.items():
            if d1 + sum(m2) > K:
                continue
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    return _clean(out)


def poly_scale(a: Poly, c) -> Poly:
    return _clean({m: c * v for m, v in a.items()})


def poly_linear(form: Sequence, I: int) -> Poly:
    out = {}
    for i, c in enumerate(form):
        if c != 0:
            m = [0] * I
            m[i] = 1
            out[tuple(m)] = c
    return out


def poly_pow(a: Poly, e: int, K: int, I: int) -> Poly:
    out = {(0,) * I: 1}
    for _ in range(e):
        out = poly_mul(out, a, K)
    return out


def poly_eval(a: Poly, z: Sequence):
    total = 0
    for m, c in a.items():
        t = c
        for zi, e in zip(z, m):
            if e:
                t = t * zi**e
        total += t
    return total


def normalise_form(form: Sequence) -> tuple[tuple, object]:
    """Return (normalised form, scale) with form = scale * normalised."""
    form = tuple(as_fraction(c) for c in form)
    lead = next((c for c in form if c != 0), None)
    if lead is None:
        raise ZeroDivisionError("zero linear form in a denominator")
    return tuple(c / lead for c in form), lead


def subset_form(subset: Iterable[int], I: int) -> tuple:
    s = set(subset)
    if not s:
        raise ValueError("empty subset")
    return tuple(Fraction(int(i in s)) for i in range(I))


@dataclass(frozen=True)
class GermTerm:
    num: tuple          # sorted ((monomial, coeff), ...)
    den: tuple          # sorted ((form, multiplicity), ...)

    @property
    def poly(self) -> Poly:
        return dict(self.num)

    @property
    def den_dict(self) -> dict:
        return dict(self.den)


def _term(num: Poly, den: Mapping) -> GermTerm:
    return GermTerm(tuple(sorted(_clean(num).items())), tuple(sorted((f, m) for f, m in den.items() if m)))


class MeroGerm:
    """Immutable sum of terms num/den in ``num_vars`` variables."""

    __slots__ = ("num_vars", "terms", "K")

    def __init__(self, num_vars: int, terms: Iterable[GermTerm] = (), K: int = DEFAULT_K):
        object.__setattr__(self, "num_vars", int(num_vars))
        object.__setattr__(self, "K", int(K))
        merged: dict = {}
        for t in terms:
            merged[t.den] = poly_add(merged.get(t.den, {}), t.poly)
        out = []
        for den, num in merged.items():
            if num:
                out.append(_cancel(num, dict(den), self.num_vars))
        again: dict = {}
        for t in out:
            again[t.den] = poly_add(again.get(t.den, {}), t.poly)
        final = tuple(sorted((_term(n, dict(d)) for d, n in again.items() if n), key=lambda t: (t.den, t.num)))
        object.__setattr__(self, "terms", final)

    def __setattr__(self, *_):
        raise AttributeError("MeroGerm is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, I: int, K: int = DEFAULT_K) -> "MeroGerm":
        return cls(I, (), K)

    @classmethod
    def constant(cls, c, I: int, K: int = DEFAULT_K) -> "MeroGerm":
        return cls(I, [_term({(0,) * I: c}, {})], K)

    @classmethod
    def from_parts(cls, I: int, num: Mapping, den: Iterable = (), K: int = DEFAULT_K) -> "MeroGerm":
        """num: {monomial: coeff}; den: iterable of (subset of variable indices, multiplicity)."""
        return cls.from_forms(I, num, [(subset_form(s, I), m) for s, m in den], K)

    @classmethod
    def from_forms(cls, I: int, num: Mapping, den: Iterable = (), K: int = DEFAULT_K) -> "MeroGerm":
        """Like from_parts but each denominator is an explicit coefficient vector."""
        d: dict = {}
        scale = 1
        for form, mult in den:
            f, s = normalise_form(form)
            d[f] = d.get(f, 0) + mult
            scale = scale * s**mult
        poly = {tuple(m): c for m, c in num.items()}
        if scale != 1:
            poly = {m: c / scale for m, c in poly.items()}
        return cls(I, [_term(poly, d)], K)

    # algebra ------------------------------------------------------------
    def _check(self, other: "MeroGerm"):
        if self.num_vars != other.num_vars:
            raise ValueError("germs in different numbers of variables")

    def __add__(self, other):
        if not isinstance(other, MeroGerm):
            other = MeroGerm.constant(other, self.num_vars, self.K)
        self._check(other)
        return MeroGerm(self.num_vars, self.terms + other.terms, min(self.K, other.K))

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MeroGerm":
        return MeroGerm(self.num_vars, [_term(poly_scale(t.poly, c), t.den_dict) for t in self.terms], self.K)

    def __mul__(self, other):
        if not isinstance(other, MeroGerm):
            return self.scale(other)
        self._check(other)
        K = min(self.K, other.K)
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                den = dict(t1.den)
                for f, m in t2.den:
                    den[f] = den.get(f, 0) + m
                out.append(_term(poly_mul(t1.poly, t2.poly, K), den))
        return MeroGerm(self.num_vars, out, K)

    __rmul__ = __mul__

    def tensor(self, other: "MeroGerm") -> "MeroGerm":
        """f(z_1..z_I) g(z_{I+1}..z_{I+I'}) as a germ in I + I' variables."""
        I, J = self.num_vars, other.num_vars
        return self.embed(I + J, 0) * other.embed(I + J, I)

    def embed(self, total: int, offset: int = 0) -> "MeroGerm":
        """View as a germ in ``total`` variables, occupying positions offset.. ."""
        pad = lambda v, zero: (zero,) * offset + tuple(v) + (zero,) * (total - offset - self.num_vars)
        terms = []
        for t in self.terms:
            terms.append(_term({pad(m, 0): c for m, c in t.num},
                               {pad(f, Fraction(0)): mlt for f, mlt in t.den}))
        return MeroGerm(total, terms, self.K)

    def lift(self, positions: Sequence[int], total: int) -> "MeroGerm":
        """View as a germ in ``total`` variables with variable a placed at positions[a]."""
        def spread(v, zero):
            out = [zero] * total
            for a, x in zip(positions, v):
                out[a] = x
            return tuple(out)

        terms = [_term({spread(m, 0): c for m, c in t.num}, {spread(f, Fraction(0)): k for f, k in t.den})
                 for t in self.terms]
        return MeroGerm(total, terms, self.K)

    def permute_vars(self, perm: Sequence[int]) -> "MeroGerm":
        """g(z) -> g(z_perm(0), ..., z_perm(I-1))."""
        I = self.num_vars
        inv = [0] * I
        for a, b in enumerate(perm):
            inv[b] = a
        terms = []
        for t in self.terms:
            num = {}
            for m, c in t.num:
                new = [0] * I
                for i, e in enumerate(m):
                    new[inv[i]] += e
                num[tuple(new)] = c
            den = {}
            for f, mlt in t.den:
                new = [Fraction(0)] * I
                for i, c in enumerate(f):
                    new[inv[i]] += c
                nf, s = normalise_form(new)
                den[nf] = den.get(nf, 0) + mlt
            terms.append(_term(num, den))
        return MeroGerm(I, terms, self.K)

    def compose_linear(self, T: Sequence[Sequence]) -> "MeroGerm":
        """g(z) -> g(T z) for an invertible rational matrix T."""
        I = self.num_vars
        T = [[as_fraction(x) for x in r] for r in T]
        images = [poly_linear(T[i], I) for i in range(I)]
        terms = []
        for t in self.terms:
            num: Poly = {}
            for m, c in t.num:
                p = {(0,) * I: c}
                for i, e in enumerate(m):
                    if e:
                        p = poly_mul(p, poly_pow(images[i], e, self.K, I), self.K)
                num = poly_add(num, p)
            den: dict = {}
            scale = 1
            for f, mlt in t.den:
                newf = [sum((f[i] * T[i][j] for i in range(I)), Fraction(0)) for j in range(I)]
                nf, s = normalise_form(newf)
                den[nf] = den.get(nf, 0) + mlt
                scale = scale * s**mlt
            terms.append(_term(poly_scale(num, 1 / scale) if scale != 1 else num, den))
        return MeroGerm(I, terms, self.K)

    def evaluate(self, z: Sequence):
        total = 0
        for t in self.terms:
            d = 1
            for f, m in t.den:
                d = d * poly_eval(poly_linear(f, self.num_vars), z) ** m
            total += poly_eval(t.poly, z) / d
        return total

    def is_holomorphic(self) -> bool:
        return all(not t.den for t in self.terms)

    def constant_value(self):
        """Value of a germ without poles and with no variable left."""
        if not self.is_holomorphic():
            raise ValueError("germ still has poles")
        return sum((c for t in self.terms for m, c in t.num if not any(m)), 0)

    def variables_used(self) -> set:
        used = set()
        for t in self.terms:
            for m, _ in t.num:
                used |= {i for i, e in enumerate(m) if e}
            for f, _ in t.den:
                used |= {i for i, c in enumerate(f) if c != 0}
        return used

    def __eq__(self, other):
        return isinstance(other, MeroGerm) and self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, self.terms))

    def __repr__(self):
        parts = []
        for t in self.terms:
            den = "*".join(f"({'+'.join(f'{c}z{i}' for i, c in enumerate(f) if c)})^{m}" for f, m in t.den)
            parts.append(f"[{dict(t.num)}]/[{den or 1}]")
        return f"MeroGerm({self.num_vars}: " + " + ".join(parts or ["0"]) + ")"


def _divide_linear(num: Poly, form: tuple, I: int):
    """Exact division num = form * q; returns q or None."""
    v = next(i for i, c in enumerate(form) if c != 0)
    rest = dict(num)
    q: Poly = {}
    while True:
        cand = [m for m in rest if m[v] > 0]
        if not cand:
            break
        m = max(cand, key=lambda mm: (mm[v], mm))
        c = rest[m] / form[v]
        mq = list(m)
        mq[v] -= 1
        mq = tuple(mq)
        q[mq] = q.get(mq, 0) + c
        for i, fc in enumerate(form):
            if fc == 0:
                continue
            mm = list(mq)
            mm[i] += 1
            mm = tuple(mm)
            rest[mm] = rest.get(mm, 0) - c * fc
            if rest[mm] == 0:
                del rest[mm]
    if rest:
        return None
    return _clean(q)


def _cancel(num: Poly, den: dict, I: int) -> GermTerm:
    changed = True
    while changed and den:
        changed = False
        for f in list(den):
            if any(isinstance(c, float) for c in num.values()):
                break
            q = _divide_linear(num, f, I)
            if q is not None:
                num = q
                den[f] -= 1
                if den[f] == 0:
                    del den[f]
                changed = True
                break
    return _term(num, den)


def coefficient_one_var(g: MeroGerm, i: int, p: int) -> MeroGerm:
    """Coefficient of z_i^p in the Laurent expansion in z_i, other variables generic."""
    I, K = g.num_vars, g.K
    out = []
    for t in g.terms:
        pure = 0
        mixed = []
        other = {}
        for f, m in t.den:
            if f[i] == 0:
                other[f] = m
            elif all(c == 0 for j, c in enumerate(f) if j != i):
                pure += m  # normalised, so the form is exactly z_i
            else:
                rest = tuple(Fraction(0) if j == i else c for j, c in enumerate(f))
                nrest, s = normalise_form(rest)
                mixed.append((f[i], nrest, s, m))
        by_power: dict = {}
        for mono, c in t.num:
            e = mono[i]
            red = list(mono)
            red[i] = 0
            by_power.setdefault(e, {})[tuple(red)] = c
        need = p + pure
        if need < 0:
            continue
        if need > K:
            raise TruncationError(f"coefficient z_{i}^{p} needs numerator degree {need} > K={K}")
        for e, poly in by_power.items():
            left = need - e
            if left < 0:
                continue
            for ks in _compositions(left, len(mixed)):
                coef = 1
                den = dict(other)
                for (ci, nrest, s, m), k in zip(mixed, ks):
                    coef = coef * _binom_neg(m, k) * ci**k / s ** (m + k)
                    den[nrest] = den.get(nrest, 0) + m + k
                out.append(_term(poly_scale(poly, coef), den))
    return MeroGerm(I, out, K)


def _binom_neg(m: int, k: int) -> int:
    """binom(-m, k)."""
    return (-1) ** k * math.comb(m + k - 1, k)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def fp_one_var(g: MeroGerm, i: int) -> MeroGerm:
    return coefficient_one_var(g, i, 0)


def pure_pole_order(g: MeroGerm, i: int) -> int:
    best = 0
    for t in g.terms:
        pure = sum(m for f, m in t.den if f[i] != 0 and all(c == 0 for j, c in enumerate(f) if j != i))
        best = max(best, pure)
    return best


def _iterated(g: MeroGerm, remaining: tuple, step) -> object:
    if not remaining:
        return g.constant_value()
    total = 0
    for v in remaining:
        total = total + _iterated(step(g, v), tuple(x for x in remaining if x != v), step)
    if isinstance(total, int):
        return Fraction(total, len(remaining))
    return total / len(remaining)


def evaluator_E0(g: MeroGerm):
    """(1/I!) sum over orders of iterated finite parts, innermost variable first."""
    return _iterated(g, tuple(range(g.num_vars)), fp_one_var)


def kappa_weights(kappa: Sequence, M: int) -> list:
    """e_k = [z^0] kappa(z)^(-k) for k = 1..M (index k), kappa = [0, k1, k2, ...]."""
    kappa = list(kappa)
    if len(kappa) < 2 or kappa[0] != 0:
        raise ValueError("kappa must satisfy kappa(0) = 0")
    if kappa[1] == 0:
        raise ValueError("kappa'(0) must be non-zero")
    need = M + 1
    ratio = [kappa[j + 1] if j + 1 < len(kappa) else 0 for j in range(need)]  # kappa(z)/z
    inv = [0] * need
    inv[0] = 1 / as_fraction(ratio[0]) if not isinstance(ratio[0], float) else 1 / ratio[0]
    for k in range(1, need):
        inv[k] = -sum(ratio[j] * inv[k - j] for j in range(1, k + 1)) * inv[0]
    out = [1]
    powk = [1] + [0] * (need - 1)
    for k in range(1, M + 1):
        nxt = [0] * need
        for a in range(need):
            for b in range(need - a):
                nxt[a + b] += powk[a] * inv[b]
        powk = nxt
        out.append(powk[k])
    return out


def evaluator_reparam(g: MeroGerm, kappa: Sequence):
    """E0 applied to g composed with kappa in every variable."""
    def step(h: MeroGerm, v: int) -> MeroGerm:
        M = pure_pole_order(h, v)
        w = kappa_weights(kappa, M)
        acc = fp_one_var(h, v)
        for k in range(1, M + 1):
            if w[k] != 0:
                acc = acc + coefficient_one_var(h, v, -k).scale(w[k])
        return acc

    return _iterated(g, tuple(range(g.num_vars)), step)


def shift_matrix(I: int) -> list:
    """T_I(z) = (z_1, z_2 - z_1, ..., z_I - z_(I-1))."""
    return [[Fraction(1) if j == i else (Fraction(-1) if j == i - 1 else Fraction(0)) for j in range(I)]
            for i in range(I)]


def evaluator_linear(g: MeroGerm, T=None):
    """E0 applied to g composed with T (matrix or callable I -> matrix; default shift_matrix)."""
    I = g.num_vars
    if T is None:
        T = shift_matrix
    M = T(I) if callable(T) else T
    from .matrices import det

    if det(M) == 0:
        raise ValueError("T must be invertible")
    return evaluator_E0(g.compose_linear(M))


def germ_to_json(g: MeroGerm) -> dict:
    from ._series import fraction_str

    def num_str(c):
        return fraction_str(c) if isinstance(c, (int, Fraction)) else repr(float(c))

    terms = []
    for t in g.terms:
        den = []
        for f, m in t.den:
            if all(c in (0, 1) for c in f):
                den.append([[i for i, c in enumerate(f) if c == 1], m])
            else:
                den.append([{"form": [fraction_str(c) for c in f]}, m])
        terms.append({"num": [[list(m), num_str(c)] for m, c in t.num], "den": den})
    return {"vars": g.num_vars, "terms": terms}


def germ_from_json(d: Mapping) -> MeroGerm:
    I = int(d["vars"])
    K = int(d.get("K", DEFAULT_K))
    out = MeroGerm.zero(I, K)
    for t in d["terms"]:
        num = {tuple(int(x) for x in m): as_fraction(str(c)) for m, c in t["num"]}
        den_spec = []
        for s, m in t["den"]:
            if isinstance(s, dict):
                den_spec.append((tuple(as_fraction(x) for x in s["form"]), int(m)))
            else:
                den_spec.append((subset_form(s, I), int(m)))
        term_den: dict = {}
        scale = 1
        for form, m in den_spec:
            f, sc = normalise_form(form)
            term_den[f] = term_den.get(f, 0) + m
            scale = scale * sc**m
        out = out + MeroGerm(I, [_term({k: v / scale for k, v in num.items()}, term_den)], K)
    return out
