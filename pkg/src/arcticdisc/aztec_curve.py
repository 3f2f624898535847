"""Spectral curves of k x l periodic Aztec diamonds.

The curve is built exactly over Q from the Bernoulli/geometric transfer
matrices.  For k = 2 it is brought to hyperelliptic form y^2 = f(z) by
completing the square in w.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from .polyalg import Poly

__all__ = [
    "PeriodicWeights",
    "Angle",
    "SpectralCurve",
    "HyperellipticData",
    "DegenerateModelWarning",
    "ValidationReport",
    "build_curve",
    "hyperelliptic_reduce",
    "validate",
    "transfer_matrices",
]

Z, W = sp.symbols("z w")


class DegenerateModelWarning(UserWarning):
    """Raised as a warning when genus drops or angles collide."""

    def __init__(self, condition: str, detail: str = ""):
        super().__init__(f"degenerate model: {detail or condition}")
        self.condition = condition


def _frac(v) -> Fraction:
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, float):
        return Fraction(str(v))
    return Fraction(v)


@dataclass(frozen=True)
class PeriodicWeights:
    """Edge weights; ``alpha[j][i]`` with row j < k and column i < l."""

    k: int
    l: int
    alpha: tuple
    beta: tuple
    gamma: tuple

    def __init__(self, k: int, l: int, alpha, beta, gamma):
        def grid(a):
            rows = tuple(tuple(_frac(v) for v in row) for row in a)
            if len(rows) != k or any(len(r) != l for r in rows):
                raise ValueError(f"weight array must have shape {k}x{l}")
            return rows

        if k < 1 or l < 1:
            raise ValueError("periods must be positive")
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "l", int(l))
        object.__setattr__(self, "alpha", grid(alpha))
        object.__setattr__(self, "beta", grid(beta))
        object.__setattr__(self, "gamma", grid(gamma))

    @classmethod
    def uniform(cls, k: int = 1, l: int = 1, alpha=1, beta=1, gamma=1) -> "PeriodicWeights":
        return cls(k, l, [[alpha] * l] * k, [[beta] * l] * k, [[gamma] * l] * k)

    @classmethod
    def from_json(cls, doc: dict | str | Path) -> "PeriodicWeights":
        if isinstance(doc, (str, Path)) and Path(str(doc)).exists():
            doc = json.loads(Path(doc).read_text())
        elif isinstance(doc, str):
            doc = json.loads(doc)
        return cls(int(doc["k"]), int(doc["l"]), doc["alpha"], doc["beta"], doc["gamma"])

    def to_json(self) -> dict:
        conv = lambda a: [[str(v) for v in row] for row in a]  # noqa: E731
        return {"k": self.k, "l": self.l, "alpha": conv(self.alpha),
                "beta": conv(self.beta), "gamma": conv(self.gamma)}

    def _v(self, a, i: int) -> Fraction:
        out = Fraction(1)
        for j in range(self.k):
            out *= a[j][i]
        return out

    def _h(self, a, j: int) -> Fraction:
        out = Fraction(1)
        for i in range(self.l):
            out *= a[j][i]
        return out

    def alpha_v(self, i): return self._v(self.alpha, i)
    def beta_v(self, i): return self._v(self.beta, i)
    def gamma_v(self, i): return self._v(self.gamma, i)
    def alpha_h(self, j): return self._h(self.alpha, j)
    def beta_h(self, j): return self._h(self.beta, j)
    def gamma_h(self, j): return self._h(self.gamma, j)

    def positive(self) -> bool:
        return all(v > 0 for a in (self.alpha, self.beta, self.gamma) for row in a for v in row)

    def strict_ok(self) -> list[bool]:
        return [self.beta_v(i) < 1 < self.alpha_v(i) / self.gamma_v(i) if self.gamma_v(i) > 0 else False
                for i in range(self.l)]


@dataclass(frozen=True)
class Angle:
    kind: str  # "q0", "qinf", "p0", "pinf"
    index: int  # 1-based
    z: Optional[Fraction]  # None means infinity
    w: Optional[Fraction]

    @property
    def label(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class HyperellipticData:
    """y^2 = f(z) with w = (y s(z) - a1(z)) / (2 a2(z))."""

    f: Poly
    s: Poly
    a2: Poly
    a1: Poly
    a0: Poly

    @property
    def genus(self) -> int:
        d = self.f.degree
        return max((d + 1) // 2 - 1, 0)

    def sheet_map(self, z, y):
        return (y * complex_eval(self.s, z) - complex_eval(self.a1, z)) / (2 * complex_eval(self.a2, z))

    def y_from_w(self, z, w):
        return (2 * complex_eval(self.a2, z) * w + complex_eval(self.a1, z)) / complex_eval(self.s, z)

    def branch_points(self) -> np.ndarray:
        from .polyalg import root_list

        rs = root_list(self.f.to_float())
        return np.array(sorted(rs, key=lambda r: (round(r.real, 12), r.imag)))


def complex_eval(p: Poly, z):
    acc = 0j if not isinstance(z, np.ndarray) else np.zeros_like(z, dtype=complex)
    for c in reversed(p.coeffs):
        acc = acc * z + complex(c)
    return acc


@dataclass
class SpectralCurve:
    weights: PeriodicWeights
    P: sp.Poly
    genus: int
    expected_genus: int
    angles: list
    hyperelliptic: Optional[HyperellipticData] = None
    problems: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.weights.k

    @property
    def l(self) -> int:
        return self.weights.l

    def evaluate(self, z, w):
        return complex(self.P.as_expr().subs({Z: z, W: w}))

    def angle(self, label: str) -> Angle:
        for a in self.angles:
            if a.label == label:
                return a
        raise KeyError(label)


def _q(v: Fraction) -> sp.Rational:
    return sp.Rational(v.numerator, v.denominator)


def transfer_matrices(w: PeriodicWeights) -> tuple[list[sp.Matrix], list[sp.Matrix]]:
    """Bernoulli and geometric transfer matrices, bound by their definitions."""
    k = w.k
    bs, gs = [], []
    for i in range(w.l):
        B = sp.zeros(k, k)
        for j in range(k):
            B[j, j] += _q(w.gamma[j][i])
            if j + 1 < k:
                B[j + 1, j] += _q(w.alpha[j][i])
        B[0, k - 1] += _q(w.alpha[k - 1][i]) / Z
        beta = [_q(w.beta[j][i]) for j in range(k)]
        G = sp.zeros(k, k)
        for r in range(k):
            for c in range(k):
                if r == c:
                    G[r, c] = 1
                elif r > c:
                    G[r, c] = sp.prod(beta[c:r])
                else:
                    G[r, c] = sp.prod(beta[c:]) * sp.prod(beta[:r]) / Z
        G = G / (1 - sp.prod(beta) / Z)
        bs.append(B)
        gs.append(G)
    return bs, gs


def _newton_interior_points(P: sp.Poly) -> int:
    from scipy.spatial import ConvexHull

    pts = np.array([m for m in P.monoms()], dtype=float)
    if len(pts) < 3 or np.linalg.matrix_rank(pts - pts[0]) < 2:
        return 0
    hull = ConvexHull(pts)
    xs, ys = pts[:, 0], pts[:, 1]
    count = 0
    for a in range(int(xs.min()), int(xs.max()) + 1):
        for b in range(int(ys.min()), int(ys.max()) + 1):
            if all(np.dot(eq[:2], (a, b)) + eq[2] < -1e-9 for eq in hull.equations):
                count += 1
    return count


def hyperelliptic_reduce(curve_or_P, k: Optional[int] = None) -> Optional[HyperellipticData]:
    """Complete the square in w; returns None for curves linear in w."""
    P = curve_or_P.P if isinstance(curve_or_P, SpectralCurve) else curve_or_P
    dw = P.degree(W)
    if dw == 1:
        return None
    if dw != 2:
        raise ValueError("not hyperelliptic-reducible by this pipeline (k != 2)")
    a2 = sp.Poly(P.as_expr().coeff(W, 2), Z)
    a1 = sp.Poly(P.as_expr().coeff(W, 1), Z)
    a0 = sp.Poly(P.as_expr().coeff(W, 0), Z)
    D = a1 ** 2 - 4 * a0 * a2
    lc, factors = sp.sqf_list(D.as_expr(), Z)
    f_expr = sp.Integer(lc) if not isinstance(lc, sp.Basic) else lc
    s_expr = sp.Integer(1)
    for fac, e in factors:
        if e % 2:
            f_expr *= fac ** 1
        s_expr *= fac ** (e // 2)
    f_poly = sp.Poly(sp.expand(f_expr), Z)
    s_poly = sp.Poly(sp.expand(s_expr), Z)

    def to_poly(p: sp.Poly) -> Poly:
        cs = [Fraction(int(sp.fraction(c)[0]), int(sp.fraction(c)[1])) for c in reversed(p.all_coeffs())]
        return Poly(cs)

    return HyperellipticData(to_poly(f_poly), to_poly(s_poly), to_poly(a2), to_poly(a1), to_poly(a0))


def build_curve(w: PeriodicWeights) -> SpectralCurve:
    """Exact spectral curve, angles and genus for the given weights."""
    bs, gs = transfer_matrices(w)
    Phi = sp.eye(w.k)
    for B, G in zip(bs, gs):
        Phi = Phi * B * G
    pref = sp.prod([1 - _q(w.beta_v(i)) / Z for i in range(w.l)])
    expr = sp.cancel(sp.together(pref * (Phi - W * sp.eye(w.k)).det()))
    num, den = sp.fraction(expr)
    den_poly = sp.Poly(den, Z, W)
    if den_poly.degree(W) > 0 or len(den_poly.monoms()) != 1:
        # denominators must be pure powers of z once the prefactor is applied
        raise ArithmeticError("spectral polynomial did not clear to a polynomial")
    P = sp.Poly(sp.expand(num), Z, W, domain="QQ")
    # content normalisation: primitive integer coefficients, positive lex-leading term
    _, P = P.clear_denoms(convert=True)
    P = P.primitive()[1]
    if P.LC() < 0:
        P = -P
    angles = _angles(w)
    problems: list[str] = []
    hyper = None
    expected = (w.k - 1) * (w.l - 1)
    if w.k == 1:
        genus = 0
    elif w.k == 2:
        hyper = hyperelliptic_reduce(P)
        genus = hyper.genus
    else:
        genus = _newton_interior_points(P)
    if genus != expected:
        problems.append(f"genus {genus} differs from (k-1)(l-1) = {expected}")
    keys = [(a.z, a.w) for a in angles]
    if len(set(keys)) != len(keys):
        problems.append("angle collision")
    for a in angles:
        if not _on_curve(P, a):
            problems.append(f"angle {a.label} not on curve")
    curve = SpectralCurve(w, P, genus, expected, angles, hyper, problems)
    for prob in problems:
        warnings.warn(DegenerateModelWarning(prob.split(" ")[0], prob), stacklevel=2)
    return curve


def _angles(w: PeriodicWeights) -> list[Angle]:
    out = []
    for i in range(w.l):
        out.append(Angle("q0", i + 1, (-1) ** w.k * w.alpha_v(i) / w.gamma_v(i), Fraction(0)))
    for i in range(w.l):
        out.append(Angle("qinf", i + 1, w.beta_v(i), None))
    for j in range(w.k):
        out.append(Angle("p0", j + 1, Fraction(0), (-1) ** w.l * w.alpha_h(j) / w.beta_h(j)))
    for j in range(w.k):
        out.append(Angle("pinf", j + 1, None, w.gamma_h(j)))
    return out


def _on_curve(P: sp.Poly, a: Angle) -> bool:
    if a.z is not None and a.w is not None:
        return P.as_expr().subs({Z: _q(a.z), W: _q(a.w)}) == 0
    if a.z is not None:
        lead = sp.Poly(P.as_expr(), W).LC()
        return sp.sympify(lead).subs(Z, _q(a.z)) == 0
    if a.w is not None:
        lead = sp.Poly(P.as_expr(), Z).LC()
        return sp.sympify(lead).subs(W, _q(a.w)) == 0
    return False


@dataclass
class ValidationReport:
    positive: bool
    strict_checks: list
    strict_ok: bool
    genus: Optional[int]
    expected_genus: int
    angles_distinct: Optional[bool]
    problems: list

    @property
    def ok(self) -> bool:
        return self.positive and not self.problems

    def lines(self) -> list[str]:
        out = [f"positivity: {'OK' if self.positive else 'FAIL'}"]
        for i, ok in enumerate(self.strict_checks, 1):
            out.append(f"strict column {i}: {'OK' if ok else 'FAIL'}")
        out.append(f"genus: {self.genus} (expected {self.expected_genus})")
        out.append(f"angles distinct: {self.angles_distinct}")
        out.extend(f"problem: {p}" for p in self.problems)
        return out


def validate(w: PeriodicWeights, strict: bool = False) -> ValidationReport:
    """Report-only check of positivity, the strict inequality, genus and angles."""
    pos = w.positive()
    strict_checks = w.strict_ok()
    problems: list[str] = []
    genus = None
    distinct = None
    if not pos:
        problems.append("non-positive weight")
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateModelWarning)
            curve = build_curve(w)
        genus = curve.genus
        distinct = "angle collision" not in curve.problems
        problems.extend(curve.problems)
    if strict and not all(strict_checks):
        problems.append("strict inequality beta^v < 1 < alpha^v/gamma^v violated")
    return ValidationReport(pos, strict_checks, all(strict_checks), genus,
                            (w.k - 1) * (w.l - 1), distinct, problems)
