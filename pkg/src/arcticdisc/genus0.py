"""Genus-0 eta-discriminants from rational sections q_j / r.

For a pencil x_0 q_0/r + ... + x_n q_n/r the zeros are the roots of
sum_j x_j q_j(z), a polynomial whose coefficients c_k(x) are linear forms.
Its classical discriminant at nominal degree #z = max deg q_j is the
eta-discriminant.  The expansion is exact and symbolic in x.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import sympy as sp

from .polyalg import Poly, bareiss_det, discriminant, sylvester_matrix

__all__ = [
    "RationalPencil",
    "PencilError",
    "coefficient_forms",
    "discriminant_g0",
    "evaluate_g0",
    "pencil_polynomial",
    "read_pencil",
    "write_pencil",
    "poly_gcd",
]


class PencilError(ValueError):
    pass


def _trim(cs: Sequence[Fraction]) -> list[Fraction]:
    cs = list(cs)
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return cs


def _divmod(a: list[Fraction], b: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    a, b = _trim(a), _trim(b)
    if b == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    while len(r) >= len(b) and r != [0]:
        shift = len(r) - len(b)
        f = r[-1] / b[-1]
        q[shift] = f
        for i, c in enumerate(b):
            r[i + shift] -= f * c
        r = _trim(r[:-1]) if len(r) > 1 else [Fraction(0)]
    return q, _trim(r)


def poly_gcd(a: Sequence, b: Sequence) -> list[Fraction]:
    """Monic gcd of two exact ascending coefficient lists."""
    a = _trim([Fraction(c) for c in a])
    b = _trim([Fraction(c) for c in b])
    while b != [0]:
        _, r = _divmod(a, b)
        a, b = b, r
    if a == [0]:
        return a
    lc = a[-1]
    return [c / lc for c in a]


@dataclass(frozen=True)
class RationalPencil:
    numerators: tuple[tuple[Fraction, ...], ...]
    denominator: tuple[Fraction, ...]

    def __init__(self, numerators: Sequence[Sequence], denominator: Sequence = (1,)):
        nums = tuple(tuple(Fraction(c) for c in _trim([Fraction(c) for c in q])) for q in numerators)
        den = tuple(Fraction(c) for c in _trim([Fraction(c) for c in denominator]))
        if len(nums) < 2:
            raise PencilError("a pencil needs at least two sections")
        if all(c == 0 for c in den):
            raise PencilError("zero denominator")
        object.__setattr__(self, "numerators", nums)
        object.__setattr__(self, "denominator", den)
        self._validate()

    @property
    def n(self) -> int:
        return len(self.numerators) - 1

    @property
    def max_degree(self) -> int:
        return max(len(q) - 1 if any(q) else 0 for q in self.numerators)

    def _validate(self) -> None:
        M = sp.Matrix([[q[k] if k < len(q) else 0 for k in range(self.max_degree + 1)]
                       for q in self.numerators])
        if M.rank() != len(self.numerators):
            raise PencilError("sections are linearly dependent")
        g = list(self.numerators[0])
        for q in self.numerators[1:]:
            g = poly_gcd(g, q)
        if len(g) > 1 and len(poly_gcd(g, self.denominator)) > 1:
            raise PencilError("numerators and denominator share a common factor")

    def common_factor(self) -> list[Fraction]:
        g = list(self.numerators[0])
        for q in self.numerators[1:]:
            g = poly_gcd(g, q)
        return g


def coefficient_forms(pencil: RationalPencil) -> list[list[Fraction]]:
    """Matrix with entry (k, j) = q_{j,k}, k = 0..#z."""
    N = pencil.max_degree
    return [[q[k] if k < len(q) else Fraction(0) for q in pencil.numerators] for k in range(N + 1)]


def pencil_polynomial(pencil: RationalPencil, x: Sequence) -> Poly:
    """sum_j x_j q_j at nominal degree #z."""
    C = coefficient_forms(pencil)
    return Poly([sum(xj * ckj for xj, ckj in zip(x, row)) for row in C], pencil.max_degree)


def discriminant_g0(pencil: RationalPencil, symbols: Sequence[sp.Symbol] | None = None) -> sp.Poly:
    """Delta_{#z}(c_0(x), ..., c_{#z}(x)) as an exact sympy polynomial."""
    N = pencil.max_degree
    xs = list(symbols) if symbols is not None else list(sp.symbols(f"x0:{pencil.n + 1}"))
    if N == 0:
        raise PencilError("constant pencil has no zeros")
    g = pencil.common_factor()
    if len(g) > 2 and len(poly_gcd(g, [k * g[k] for k in range(1, len(g))])) > 1:
        raise PencilError("discriminant identically zero: sections share a multiple root")
    C = coefficient_forms(pencil)
    c = [sp.Poly(sum(sp.Rational(v.numerator, v.denominator) * xj for v, xj in zip(row, xs)),
                 *xs, domain="QQ") for row in C]
    if N == 1:
        return sp.Poly(1, *xs, domain="QQ")
    dc = [c[k] * k for k in range(1, N + 1)]
    zero = sp.Poly(0, *xs, domain="QQ")
    one = sp.Poly(1, *xs, domain="QQ")
    M = sylvester_matrix(c, dc, N, N - 1, zero)
    res = bareiss_det(M, exquo=lambda a, b: a.exquo(b), is_zero=lambda a: a.is_zero, one=one)
    sign = -1 if (N * (N - 1) // 2) % 2 else 1
    disc = res.exquo(c[N]) * sign
    if disc.is_zero:
        raise PencilError("discriminant identically zero: Hypothesis on common zeros violated")
    return disc


def evaluate_g0(pencil: RationalPencil, x: Sequence):
    """Pointwise value of the genus-0 discriminant (exact or float)."""
    return discriminant(pencil_polynomial(pencil, x), pencil.max_degree)


def read_pencil(path: str | Path) -> RationalPencil:
    """Text format: line 0 is r, then one q_j per line; ascending rationals."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    rows = [[Fraction(tok) for tok in ln.split()] for ln in lines if ln]
    if len(rows) < 3:
        raise PencilError("pencil file needs a denominator and at least two sections")
    return RationalPencil(rows[1:], rows[0])


def write_pencil(pencil: RationalPencil, path: str | Path) -> None:
    rows = [pencil.denominator, *pencil.numerators]
    Path(path).write_text("".join(" ".join(str(c) for c in row) + "\n" for row in rows))
