"""Constraint matrices, step normal forms, Whitney sums and the column coproduct."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from ._series import as_fraction, fraction_str


class RankDeficient(ValueError):
    code = "RANK_DEFICIENT"


def _rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def det(m: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [list(map(as_fraction, r)) for r in m]
    n = len(a)
    out = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            out = -out
        out *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return out


@dataclass(frozen=True)
class ConstraintMatrix:
    """An I x L rational matrix of full column rank (L = 0 is the unit)."""

    rows_I: int
    cols_L: int
    entries: tuple

    def __post_init__(self):
        ent = tuple(tuple(as_fraction(x) for x in row) for row in self.entries)
        if len(ent) != self.rows_I or any(len(r) != self.cols_L for r in ent):
            raise ValueError("entry shape does not match (I, L)")
        if self.rows_I < 1:
            raise ValueError("a constraint matrix needs at least one row")
        object.__setattr__(self, "entries", ent)
        if self.cols_L and _rank([list(r) for r in ent]) < self.cols_L:
            raise RankDeficient("matrix does not have full column rank")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "ConstraintMatrix":
        rows = [list(r) for r in rows]
        L = len(rows[0]) if rows else 0
        return cls(len(rows), L, tuple(tuple(r) for r in rows))

    @classmethod
    def empty(cls, I: int) -> "ConstraintMatrix":
        return cls(I, 0, tuple(() for _ in range(I)))

    @classmethod
    def identity(cls, n: int) -> "ConstraintMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def column(self, l: int) -> tuple:
        return tuple(r[l] for r in self.entries)

    def columns(self, idx: Sequence[int]) -> "ConstraintMatrix":
        return ConstraintMatrix(self.rows_I, len(idx), tuple(tuple(r[l] for l in idx) for r in self.entries))

    def permute_rows(self, perm: Sequence[int]) -> "ConstraintMatrix":
        return ConstraintMatrix(self.rows_I, self.cols_L, tuple(self.entries[p] for p in perm))

    def matmul(self, C: Sequence[Sequence]) -> "ConstraintMatrix":
        C = [[as_fraction(x) for x in r] for r in C]
        out = []
        for r in self.entries:
            out.append(tuple(sum((r[k] * C[k][l] for k in range(self.cols_L)), Fraction(0))
                             for l in range(len(C[0]) if C else 0)))
        return ConstraintMatrix(self.rows_I, len(C[0]) if C else 0, tuple(out))

    def apply(self, ks: Sequence[Sequence]) -> list:
        """Row vectors (B k)_i for loop momenta ks[l] (each a vector in Q^n)."""
        n = len(ks[0]) if ks else 0
        out = []
        for r in self.entries:
            out.append([sum((r[l] * ks[l][d] for l in range(self.cols_L)), Fraction(0)) for d in range(n)])
        return out

    def is_step(self) -> bool:
        return step_markers(self) is not None

    def __repr__(self):
        return "ConstraintMatrix(" + str([[fraction_str(x) for x in r] for r in self.entries]) + ")"


def step_markers(B: ConstraintMatrix):
    """1-based markers i_1 < ... < i_L if B is a step matrix, else None."""
    markers = []
    for l in range(B.cols_L):
        nz = [i for i in range(B.rows_I) if B.entries[i][l] != 0]
        if not nz:
            return None
        markers.append(nz[-1] + 1)
    if any(a >= b for a, b in zip(markers, markers[1:])):
        return None
    return tuple(markers)


@dataclass(frozen=True)
class StepForm:
    row_permutation: tuple
    column_transform: tuple
    step_matrix: ConstraintMatrix
    det_factor: Fraction
    markers: tuple


def step_reduce(B: ConstraintMatrix, row_order: Sequence[int] | None = None) -> StepForm:
    """Column-echelon reduction of the row-permuted matrix: S = P B C is a step matrix.

    ``row_order[k]`` is the row of B that becomes row k of P B.
    """
    I, L = B.rows_I, B.cols_L
    perm = tuple(range(I)) if row_order is None else tuple(row_order)
    if sorted(perm) != list(range(I)):
        raise ValueError("row_order must be a permutation of the rows")
    PB = B.permute_rows(perm)
    cols = [list(PB.column(l)) for l in range(L)]
    trans = [[Fraction(int(i == l)) for i in range(L)] for l in range(L)]  # trans[l] = column l of C
    remaining = list(range(L))
    placed: list[tuple[int, int]] = []  # (marker row, original working column)
    for i in range(I - 1, -1, -1):
        cands = [c for c in remaining if cols[c][i] != 0]
        if not cands:
            continue
        p = cands[-1]
        remaining.remove(p)
        for c in remaining:
            if cols[c][i] != 0:
                f = cols[c][i] / cols[p][i]
                cols[c] = [x - f * y for x, y in zip(cols[c], cols[p])]
                trans[c] = [x - f * y for x, y in zip(trans[c], trans[p])]
        placed.append((i, p))
        if not remaining:
            break
    if remaining:
        raise RankDeficient("matrix does not have full column rank")
    placed.sort()
    order = [p for _, p in placed]
    S_rows = tuple(tuple(cols[c][i] for c in order) for i in range(I))
    C = tuple(tuple(trans[c][k] for c in order) for k in range(L))
    S = ConstraintMatrix(I, L, S_rows)
    markers = tuple(i + 1 for i, _ in placed)
    return StepForm(perm, C, S, abs(det(C)) if L else Fraction(1), markers)


def whitney_sum(B: ConstraintMatrix, Bp: ConstraintMatrix) -> ConstraintMatrix:
    rows = [tuple(r) + (Fraction(0),) * Bp.cols_L for r in B.entries]
    rows += [(Fraction(0),) * B.cols_L + tuple(r) for r in Bp.entries]
    return ConstraintMatrix(B.rows_I + Bp.rows_I, B.cols_L + Bp.cols_L, tuple(rows))


def coproduct(B: ConstraintMatrix) -> list:
    """All 2^L ordered pairs (B restricted to a column subset, B restricted to its complement)."""
    L = B.cols_L
    out = []
    for size in range(L + 1):
        for sub in combinations(range(L), size):
            comp = tuple(l for l in range(L) if l not in sub)
            out.append((B.columns(sub), B.columns(comp)))
    return out


def proper_splits(B: ConstraintMatrix) -> list:
    return [(b1, b2) for b1, b2 in coproduct(B) if b1.cols_L and b2.cols_L]


def check_coassociative(B: ConstraintMatrix) -> bool:
    left = Counter()
    right = Counter()
    for b1, b2 in coproduct(B):
        for b11, b12 in coproduct(b1):
            left[(b11, b12, b2)] += 1
        for b21, b22 in coproduct(b2):
            right[(b1, b21, b22)] += 1
    return left == right


def check_cocommutative(B: ConstraintMatrix) -> bool:
    pairs = Counter(coproduct(B))
    flipped = Counter((b, a) for a, b in coproduct(B))
    return pairs == flipped


def check_whitney_compatible(B: ConstraintMatrix, Bp: ConstraintMatrix) -> bool:
    lhs = Counter(coproduct(whitney_sum(B, Bp)))
    rhs = Counter()
    for a1, a2 in coproduct(B):
        for b1, b2 in coproduct(Bp):
            rhs[(whitney_sum(a1, b1), whitney_sum(a2, b2))] += 1
    return lhs == rhs


def matrix_to_json(B: ConstraintMatrix) -> list:
    if B.cols_L == 0:
        return [[] for _ in range(B.rows_I)]
    return [[fraction_str(x) for x in r] for r in B.entries]


def matrix_from_json(rows) -> ConstraintMatrix:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ValueError("matrix must be a non-empty array of row arrays")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError("matrix rows have different lengths")
    return ConstraintMatrix.from_rows([[as_fraction(str(x)) for x in r] for r in rows])
