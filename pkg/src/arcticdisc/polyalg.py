"""Univariate polynomial algebra over exact rationals and complex floats.

Coefficients are always stored in ascending order.  A ``Poly`` carries a
*nominal* degree which may exceed the actual degree; resultants and
discriminants are taken at the nominal degree, which is what makes them
polynomial functions of the coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "Poly",
    "RootCluster",
    "roots",
    "root_list",
    "resultant",
    "discriminant",
    "discriminant_from_roots",
    "sylvester_matrix",
    "bareiss_det",
    "poly_eval",
    "derivative",
    "translate",
    "reciprocal",
]


def _is_exact(c: Any) -> bool:
    return isinstance(c, Rational) and not isinstance(c, bool)


@dataclass(frozen=True)
class Poly:
    """Polynomial with ascending coefficients and a nominal degree."""

    coeffs: tuple
    nominal_degree: int

    def __init__(self, coeffs: Sequence, nominal_degree: int | None = None):
        cs = list(coeffs)
        if not cs:
            cs = [0]
        if nominal_degree is None:
            nominal_degree = len(cs) - 1
        if nominal_degree < 0:
            raise ValueError("nominal degree must be non-negative")
        if len(cs) > nominal_degree + 1:
            extra = cs[nominal_degree + 1:]
            if any(c != 0 for c in extra):
                raise ValueError("coefficients exceed the nominal degree")
            cs = cs[: nominal_degree + 1]
        cs = cs + [0] * (nominal_degree + 1 - len(cs))
        exact = all(_is_exact(c) for c in cs)
        if exact:
            cs = [Fraction(c) for c in cs]
        else:
            cs = [complex(c) for c in cs]
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "nominal_degree", int(nominal_degree))

    @property
    def exact(self) -> bool:
        return isinstance(self.coeffs[0], Fraction)

    @property
    def degree(self) -> int:
        """Actual degree; -1 for the zero polynomial."""
        for k in range(self.nominal_degree, -1, -1):
            if self.coeffs[k] != 0:
                return k
        return -1

    def is_zero(self) -> bool:
        return self.degree < 0

    def to_float(self) -> "Poly":
        return Poly([complex(c) for c in self.coeffs], self.nominal_degree)

    def __call__(self, z):
        return poly_eval(self.coeffs, z)

    def __repr__(self) -> str:
        return f"Poly({list(self.coeffs)!r}, N={self.nominal_degree})"


@dataclass(frozen=True)
class RootCluster:
    value: complex
    multiplicity: int
    radius: float


def poly_eval(coeffs: Sequence, z):
    """Horner evaluation with ascending coefficients."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def derivative(p: Poly) -> Poly:
    cs = [k * p.coeffs[k] for k in range(1, p.nominal_degree + 1)]
    return Poly(cs or [0], max(p.nominal_degree - 1, 0))


def translate(p: Poly, w) -> Poly:
    """Return p(z + w) at the same nominal degree."""
    n = p.nominal_degree
    out = [0] * (n + 1)
    # Repeated synthetic division (Taylor shift).
    cs = list(p.coeffs)
    for k in range(n + 1):
        acc = 0
        rem = [0] * (len(cs) - 1) if len(cs) > 1 else []
        for i in range(len(cs) - 1, -1, -1):
            acc = acc * w + cs[i]
            if i > 0:
                rem[i - 1] = acc
        out[k] = acc
        cs = rem
        if not cs:
            break
    return Poly(out, n)


def reciprocal(p: Poly) -> Poly:
    """z^N p(1/z) at nominal degree N."""
    return Poly(list(reversed(p.coeffs)), p.nominal_degree)


# --------------------------------------------------------------------------
# roots
# --------------------------------------------------------------------------

def _aberth(c: np.ndarray, maxiter: int = 500) -> tuple[np.ndarray, bool]:
    """Aberth-Ehrlich iteration on a monic-normalised polynomial.

    ``c`` is ascending with nonzero leading coefficient.
    """
    n = len(c) - 1
    a = c / c[-1]
    dc = np.arange(1, n + 1) * a[1:]
    # Initial guesses on a circle of the Fujiwara radius, with an offset angle.
    mags = np.abs(a[:-1])
    with np.errstate(divide="ignore"):
        bound = 2.0 * max(
            (mags[n - k] ** (1.0 / k) for k in range(1, n + 1) if mags[n - k] > 0),
            default=1.0,
        )
    ang = 2 * np.pi * np.arange(n) / n + 0.4
    z = bound * 0.5 * np.exp(1j * ang)
    z = z + 1e-3 * np.exp(1j * (ang * 1.7 + 0.3))
    pa = a[::-1]
    pd = dc[::-1]
    converged = np.zeros(n, dtype=bool)
    for _ in range(maxiter):
        pz = np.polyval(pa, z)
        dpz = np.polyval(pd, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        step[converged] = 0.0
        z = z - step
        converged |= np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))
        if converged.all():
            return z, True
        if not np.all(np.isfinite(z)):
            return z, False
    return z, bool(converged.all())


def _newton_polish(c: np.ndarray, z: np.ndarray, steps: int = 2) -> np.ndarray:
    pa = c[::-1]
    pd = (np.arange(1, len(c)) * c[1:])[::-1]
    for _ in range(steps):
        dp = np.polyval(pd, z)
        p = np.polyval(pa, z)
        ok = np.abs(dp) > 1e-300
        cand = np.where(ok, z - p / np.where(ok, dp, 1.0), z)
        better = np.abs(np.polyval(pa, cand)) < np.abs(p)
        z = np.where(better, cand, z)
    return z


def root_list(p: Poly, precision: int = 53) -> np.ndarray:
    """All roots of ``p`` (actual degree) as a flat complex array."""
    cs = [complex(c) for c in p.coeffs]
    if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in cs):
        raise ValueError("non-finite coefficients")
    d = p.degree
    if d < 0:
        raise ValueError("undefined roots: zero polynomial")
    if d == 0:
        return np.zeros(0, dtype=complex)
    if precision > 53:
        import mpmath

        dps = int(precision * math.log10(2)) + 5
        with mpmath.workdps(dps):
            rs = mpmath.polyroots(
                [mpmath.mpmathify(c) for c in reversed(p.coeffs[: d + 1])],
                maxsteps=400,
                extraprec=precision,
            )
        return np.array([complex(r) for r in rs])
    c = np.array(cs[: d + 1], dtype=complex)
    # Zero roots are peeled off exactly.
    nz = 0
    while nz < d and c[nz] == 0:
        nz += 1
    c = c[nz:]
    found = np.zeros(0, dtype=complex)
    if len(c) > 1:
        found, ok = _aberth(c)
        if not ok:
            comp = np.polynomial.polynomial.polycompanion(c / c[-1]) if len(c) > 2 else None
            found = np.linalg.eigvals(comp) if comp is not None else np.array([-c[0] / c[1]])
        found = _newton_polish(c, found)
    return np.concatenate([np.zeros(nz, dtype=complex), found])


def roots(p: Poly, cluster_tol: float = 1e-7, precision: int = 53) -> list[RootCluster]:
    """Roots with multiplicities.

    Roots closer than ``cluster_tol * (1 + |r|)`` are merged; the cluster
    reports its centroid, size and radius.
    """
    rs = list(root_list(p, precision))
    clusters: list[list[complex]] = []
    for r in rs:
        for cl in clusters:
            cen = sum(cl) / len(cl)
            if abs(r - cen) <= cluster_tol * (1 + abs(cen)):
                cl.append(r)
                break
        else:
            clusters.append([r])
    out = []
    for cl in clusters:
        cen = sum(cl) / len(cl)
        rad = max(abs(r - cen) for r in cl)
        out.append(RootCluster(complex(cen), len(cl), float(rad)))
    return out


# --------------------------------------------------------------------------
# resultants and discriminants
# --------------------------------------------------------------------------

def sylvester_matrix(p: Sequence, q: Sequence, m: int, n: int, zero=0) -> list[list]:
    """Sylvester matrix of p (degree m) and q (degree n), descending rows."""
    pd = [p[m - i] for i in range(m + 1)]
    qd = [q[n - i] for i in range(n + 1)]
    size = m + n
    rows = []
    for i in range(n):
        rows.append([zero] * i + pd + [zero] * (size - m - 1 - i))
    for i in range(m):
        rows.append([zero] * i + qd + [zero] * (size - n - 1 - i))
    return rows


def bareiss_det(M: list[list], exquo: Callable[[Any, Any], Any] | None = None,
                is_zero: Callable[[Any], bool] | None = None, one=1):
    """Fraction-free determinant; works over any integral domain.

    ``exquo(a, b)`` must return the exact quotient a/b.
    """
    n = len(M)
    if n == 0:
        return one
    if exquo is None:
        exquo = lambda a, b: a / b  # noqa: E731
    if is_zero is None:
        is_zero = lambda a: a == 0  # noqa: E731
    A = [list(r) for r in M]
    sign = 1
    prev = one
    for k in range(n - 1):
        if is_zero(A[k][k]):
            for i in range(k + 1, n):
                if not is_zero(A[i][k]):
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return A[k][k] * 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            for j in range(k + 1, n):
                A[i][j] = exquo(A[i][j] * akk - aik * A[k][j], prev)
        prev = akk
    det = A[n - 1][n - 1]
    return det if sign > 0 else -det


def resultant(p: Poly, q: Poly):
    """Res(p, q) at the nominal degrees, via the Sylvester determinant."""
    if p.is_zero() and q.is_zero():
        raise ValueError("resultant undefined: both polynomials are zero")
    m, n = p.nominal_degree, q.nominal_degree
    if m == 0 and n == 0:
        return p.coeffs[0] ** 0
    exact = p.exact and q.exact
    if exact:
        M = sylvester_matrix(p.coeffs, q.coeffs, m, n, Fraction(0))
        return bareiss_det(M, one=Fraction(1))
    M = np.array(sylvester_matrix(p.to_float().coeffs, q.to_float().coeffs, m, n, 0j))
    return complex(np.linalg.det(M))


def _sign(N: int) -> int:
    return -1 if (N * (N - 1) // 2) % 2 else 1


def discriminant(p: Poly, N: int | None = None):
    """Classical discriminant at nominal degree N.

    Uses (-1)^{N(N-1)/2} Res_{N,N-1}(p, p') / c_N; a vanishing leading
    coefficient is handled through translation plus reciprocal.
    """
    if N is None:
        N = p.nominal_degree
    if N == 0:
        raise ValueError("discriminant undefined for N = 0")
    if p.nominal_degree != N:
        p = Poly(list(p.coeffs)[: N + 1], N)
    if p.is_zero():
        return p.coeffs[0] * 0
    cN = p.coeffs[N]
    if N == 1:
        return p.coeffs[0] ** 0
    tiny = (not p.exact) and abs(cN) <= 1e-12 * max(abs(c) for c in p.coeffs)
    if cN == 0 or tiny:
        # Move a root of the reciprocal away from zero: shift so that p(w) != 0.
        best = None
        for w in range(0, 2 * N + 3):
            val = p(w)
            if best is None or abs(val) > abs(best[1]):
                best = (w, val)
            if val != 0 and (p.exact or abs(val) > 1e-3 * max(abs(c) for c in p.coeffs)):
                break
        shifted = translate(p, best[0])
        return discriminant(reciprocal(shifted), N)
    res = resultant(p, derivative(p))
    return _sign(N) * res / cN


def discriminant_from_roots(p: Poly, N: int | None = None) -> complex:
    """Root-product formula (-1)^{N(N-1)/2} c_N^{2N-2} prod_{i!=j}(z_i-z_j)."""
    if N is None:
        N = p.nominal_degree
    z = root_list(p)
    if len(z) != N:
        raise ValueError("root-product formula needs c_N != 0")
    cN = complex(p.coeffs[N])
    prod = 1.0 + 0j
    for i in range(N):
        for j in range(N):
            if i != j:
                prod *= z[i] - z[j]
    return _sign(N) * cN ** (2 * N - 2) * prod
