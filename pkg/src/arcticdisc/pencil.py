"""The affine pencil x0 eta0 + x1 eta1 + x2 eta2 on the spectral curve.

eta1 = (l/2) dz/z, eta2 = -(k/2) dw/w and eta0 = -eta1 - eta2 - df/f, where
df/f has simple poles of residue k at the q0 angles and -l at the p0 angles
and vanishing periods on the compact real ovals.

On y^2 = f(z) every member is written as (A(z) + y B(z)) / (D(z) y) dz over a
shared denominator D = prod (z - r).  For k = 1 the curve is rational in z and
the pencil is a RationalPencil from the genus-0 module.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import sympy as sp
from numpy.polynomial import polynomial as npp

from .aztec_curve import SpectralCurve, Z, W
from .genus0 import RationalPencil
from .surface import SurfaceContext, SurfaceError, SurfacePoint, build_surface

__all__ = [
    "PencilError",
    "Differential",
    "DifferentialPencil",
    "build_dF",
    "zeros",
    "remove_stationary",
    "pencil_from_differentials",
]


class PencilError(ValueError):
    pass


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if len(c) == 0:
        return np.zeros(1, complex)
    scale = np.abs(c).max() or 1.0
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= 1e-15 * scale:
        n -= 1
    return c[:n]


def _from_roots(rs: Sequence[complex]) -> np.ndarray:
    out = np.ones(1, complex)
    for r in rs:
        out = npp.polymul(out, [-r, 1])
    return out


def _merge_roots(lists: Sequence[Sequence[complex]], tol: float = 1e-9) -> list[complex]:
    """Multiset union taking the maximal multiplicity of each root."""
    merged: list[list] = []  # [root, mult]
    for rs in lists:
        local: list[list] = []
        for r in rs:
            for item in local:
                if abs(item[0] - r) <= tol * max(1.0, abs(r)):
                    item[1] += 1
                    break
            else:
                local.append([complex(r), 1])
        for r, m in local:
            for item in merged:
                if abs(item[0] - r) <= tol * max(1.0, abs(r)):
                    item[1] = max(item[1], m)
                    break
            else:
                merged.append([r, m])
    return [r for r, m in merged for _ in range(m)]


def _complement(big: Sequence[complex], small: Sequence[complex], tol: float = 1e-9) -> list[complex]:
    rest = list(big)
    for r in small:
        j = min(range(len(rest)), key=lambda i: abs(rest[i] - r)) if rest else None
        if j is None or abs(rest[j] - r) > tol * max(1.0, abs(r)):
            raise PencilError("denominator is not a sub-multiset of the common denominator")
        rest.pop(j)
    return rest


@dataclass(frozen=True)
class Differential:
    """(A(z) + y B(z)) / (D(z) y) dz with D monic, D = prod (z - r)."""

    A: np.ndarray
    B: np.ndarray
    den: tuple

    def __call__(self, z, y):
        z = np.asarray(z, dtype=complex)
        y = np.asarray(y, dtype=complex)
        D = npp.polyval(z, _from_roots(self.den))
        return (npp.polyval(z, self.A) + y * npp.polyval(z, self.B)) / (D * y)

    def over(self, den: Sequence[complex]) -> tuple[np.ndarray, np.ndarray]:
        extra = _from_roots(_complement(den, self.den))
        return npp.polymul(self.A, extra), npp.polymul(self.B, extra)

    def scale(self, c: complex) -> "Differential":
        return Differential(np.asarray(self.A) * c, np.asarray(self.B) * c, self.den)

    def __add__(self, other: "Differential") -> "Differential":
        den = _merge_roots([self.den, other.den])
        a1, b1 = self.over(den)
        a2, b2 = other.over(den)
        return Differential(_trim(npp.polyadd(a1, a2)), _trim(npp.polyadd(b1, b2)), tuple(den))

    def __neg__(self) -> "Differential":
        return self.scale(-1)

    def __sub__(self, other: "Differential") -> "Differential":
        return self + (-other)


@dataclass(frozen=True)
class DifferentialPencil:
    """Members share one denominator.  Genus 0 pencils carry a RationalPencil."""

    genus: int
    n: int
    poles: tuple  # (SurfacePoint, order)
    z_count: int
    ctx: Optional[SurfaceContext] = None
    f: Optional[np.ndarray] = None
    den: tuple = ()
    A: Optional[np.ndarray] = None  # (n+1, m)
    B: Optional[np.ndarray] = None
    rational: Optional[RationalPencil] = None
    fixed_roots: tuple = ()
    stationary: tuple = ()
    curve: Optional[SpectralCurve] = None
    angle_points: dict = field(default_factory=dict)
    kind: str = "differential"  # or "function": members are G/D without dz/y

    @property
    def p_count(self) -> int:
        return sum(m for _, m in self.poles)

    @property
    def expected_zero_count(self) -> int:
        return self.z_count

    # ---- evaluation

    def _G(self, x, z, y):
        z = np.asarray(z, dtype=complex)
        a = np.asarray(x, dtype=complex) @ self.A
        b = np.asarray(x, dtype=complex) @ self.B
        return npp.polyval(z, a) + y * npp.polyval(z, b)

    def member_values(self, z, y=None) -> np.ndarray:
        """dz-coefficients of eta_0..eta_n at (z, y); shape (n+1, ...)."""
        z = np.asarray(z, dtype=complex)
        if self.rational is not None:
            r = npp.polyval(z, [complex(c) for c in self.rational.denominator])
            return np.stack([npp.polyval(z, [complex(c) for c in q]) / r for q in self.rational.numerators])
        y = np.asarray(y, dtype=complex)
        D = npp.polyval(z, _from_roots(self.den))
        if self.kind == "differential":
            D = D * y
        return np.stack([(npp.polyval(z, self.A[j]) + y * npp.polyval(z, self.B[j])) / D
                         for j in range(self.n + 1)])

    def value(self, x, z, y=None):
        return np.tensordot(np.asarray(x, dtype=complex), self.member_values(z, y), axes=1)

    def pole_order(self, P: SurfacePoint) -> int:
        for Q, m in self.poles:
            if _same_point(P, Q):
                return m
        return 0

    def chart_coeffs(self, P: SurfacePoint, zeta: np.ndarray, order: int | None = None) -> np.ndarray:
        """k_j(zeta) * zeta^order in the standard chart at P.

        Charts: z - z_P at regular points, sqrt(z - e) at branch points, 1/z at
        infinity (1/sqrt(z) when infinity is a branch point).
        """
        m = self.pole_order(P) if order is None else order
        zeta = np.asarray(zeta, dtype=complex)
        if self.rational is not None:
            if P.z is None:
                z = 1 / zeta
                return -self.member_values(z) / zeta**2 * zeta**m
            return self.member_values(P.z + zeta) * zeta**m
        ctx = self.ctx
        f = self.f
        d = len(f) - 1
        g = self.genus
        lc = f[-1]
        if P.z is None:
            if d % 2 == 0:
                z = 1 / zeta
                Y = np.sqrt(npp.polyval(zeta, f[::-1]) / lc)
                y = P.sheet * np.sqrt(complex(lc)) * z ** (g + 1) * Y
                dz = -1 / zeta**2 if self.kind == "differential" else 1
            else:
                z = 1 / zeta**2
                Y = np.sqrt(npp.polyval(zeta**2, f[::-1]) / lc)
                y = np.sqrt(complex(lc)) * zeta ** (-d) * Y
                dz = -2 / zeta**3 if self.kind == "differential" else 1
            return self.member_values(z, y) * dz * zeta**m
        j = ctx.branch_index(P.z) if ctx is not None else None
        if j is not None:
            e = ctx.branch_points[j]
            z = e + zeta**2
            F0 = complex(ctx._F_except(j, np.array([e]))[0])
            y = zeta * np.sqrt(F0) * np.sqrt(ctx._F_except(j, z) / F0)
            dz = 2 * zeta if self.kind == "differential" else 1
            return self.member_values(z, y) * dz * zeta**m
        z = P.z + zeta
        y = P.y * np.sqrt(npp.polyval(z, f) / npp.polyval(P.z, f))
        return self.member_values(z, y) * zeta**m

    def chart_value_at(self, P: SurfacePoint, order: int | None = None, radius: float | None = None,
                       nodes: int = 64) -> np.ndarray:
        """k_j(0) (times the pole factor), by a Cauchy mean when the chart is singular."""
        m = self.pole_order(P) if order is None else order
        simple = P.z is not None and m == 0
        if simple and self.rational is None:
            simple = abs(P.y) > 1e-9 * max(1.0, abs(P.z))
        if simple:
            return self.chart_coeffs(P, np.zeros(1), m)[:, 0]
        rho = radius or self._safe_radius(P)
        t = rho * np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
        return self.chart_coeffs(P, t, m).mean(axis=1)

    def _safe_radius(self, P: SurfacePoint) -> float:
        pts = list(self.den)
        if self.ctx is not None:
            pts += list(self.ctx.branch_points)
        if self.rational is not None:
            pts += [complex(r) for r in np.roots([complex(c) for c in self.rational.denominator][::-1])]
        pts = np.array([p for p in pts], dtype=complex)
        if P.z is None:
            big = np.abs(pts).max() if len(pts) else 1.0
            rad = 0.3 / max(big, 1.0)
            if self.ctx is not None and self.ctx.degree % 2 == 1:
                rad = np.sqrt(rad)
            return rad
        dist = np.abs(pts - P.z)
        dist = dist[dist > 1e-9 * max(1.0, abs(P.z))]
        near = dist.min() if len(dist) else 1.0
        rad = 0.3 * near
        if self.ctx is not None and self.ctx.branch_index(P.z) is not None:
            rad = np.sqrt(rad)
        return rad


def _same_point(P: SurfacePoint, Q: SurfacePoint, tol: float = 1e-8) -> bool:
    if P.z is None or Q.z is None:
        return P.z is None and Q.z is None and P.sheet == Q.sheet
    if abs(P.z - Q.z) > tol * max(1.0, abs(P.z)):
        return False
    if P.y is None or Q.y is None:
        return True
    return abs(P.y - Q.y) <= tol * max(1.0, abs(P.y)) or (abs(P.y) < tol and abs(Q.y) < tol)


# --------------------------------------------------------------------------
# building


def _fr(c) -> complex:
    return complex(float(Fraction(c)))


def _poly_arr(p) -> np.ndarray:
    return np.array([_fr(c) for c in p.coeffs], dtype=complex)


def _nroots(p_sym: sp.Poly) -> list[complex]:
    if p_sym.degree() <= 0:
        return []
    return [complex(r) for r in p_sym.nroots(n=30, maxsteps=200)]


def _build_rational(curve: SpectralCurve) -> DifferentialPencil:
    w = curve.weights
    k, l = w.k, w.l
    P = curve.P
    a1 = P.as_expr().coeff(W, 1)
    a0 = P.as_expr().coeff(W, 0)
    wfun = -a0 / a1
    eta1 = sp.Rational(l, 2) / Z
    eta2 = -sp.Rational(k, 2) * sp.diff(wfun, Z) / wfun
    q0 = [a for a in curve.angles if a.kind == "q0"]
    dff = sum(k / (Z - sp.Rational(a.z.numerator, a.z.denominator)) for a in q0) - sp.Integer(l) / Z
    eta0 = -eta1 - eta2 - dff
    etas = [sp.cancel(sp.together(e)) for e in (eta0, eta1, eta2)]
    dens = [sp.fraction(e)[1] for e in etas]
    r = sp.lcm_list(dens)
    nums = [sp.Poly(sp.cancel(e * r), Z) for e in etas]
    r = sp.Poly(r, Z)
    lc = r.LC()
    r = r.monic()
    nums = [sp.Poly(n.as_expr() / lc, Z) for n in nums]
    to_fr = lambda p: [Fraction(int(sp.fraction(c)[0]), int(sp.fraction(c)[1])) for c in reversed(p.all_coeffs())]  # noqa: E731
    rp = RationalPencil([to_fr(n) for n in nums], to_fr(r))
    poles = []
    for root in _nroots(r):
        poles.append((SurfacePoint(complex(root), None), 1))
    deg_r = r.degree()
    deg_q = rp.max_degree
    if deg_r - deg_q < 2:
        poles.append((SurfacePoint(None, None, 0), 2 - (deg_r - deg_q)))
    p_count = sum(m for _, m in poles)
    z_count = p_count - 2
    if z_count != deg_q:
        raise PencilError(f"internal consistency error: #z = {z_count} but sections have degree {deg_q}")
    return DifferentialPencil(genus=0, n=2, poles=tuple(poles), z_count=z_count, rational=rp, curve=curve)


def _angle_points(curve: SpectralCurve, ctx: SurfaceContext) -> dict[str, SurfacePoint]:
    h = curve.hyperelliptic
    out = {}
    lcs = np.sqrt(complex(ctx.lc))
    g = ctx.genus
    for a in curve.angles:
        if a.z is None:
            # p_inf: choose the sheet whose w tends to the angle's value
            zt = 1e6
            yv = np.sqrt(complex(ctx.f_eval(zt)))
            best = None
            for sh in (1, -1):
                yy = sh * lcs * zt ** (g + 1) * np.sqrt(ctx.f_eval(zt) / (ctx.lc * zt ** ctx.degree))
                wv = h.sheet_map(zt, yy)
                err = abs(wv - float(a.w))
                if best is None or err < best[0]:
                    best = (err, sh)
            del yv
            out[a.label] = SurfacePoint(None, None, best[1])
        elif a.w is None:
            zf = Fraction(a.z)
            s_val = _eval_fr(h.s, zf)
            y = -_eval_fr(h.a1, zf) / s_val
            out[a.label] = SurfacePoint(complex(float(zf)), complex(float(y)))
        else:
            zf = Fraction(a.z)
            y = (2 * _eval_fr(h.a2, zf) * Fraction(a.w) + _eval_fr(h.a1, zf)) / _eval_fr(h.s, zf)
            out[a.label] = SurfacePoint(complex(float(zf)), complex(float(y)))
    return out


def _eval_fr(p, z: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p.coeffs):
        acc = acc * z + Fraction(c)
    return acc


def _oval_homology_ok(f: np.ndarray) -> bool:
    e = np.roots(f[::-1])
    if np.abs(e.imag).max() > 1e-9 * max(1.0, np.abs(e).max()) or len(e) % 2:
        return False
    e = np.sort(e.real)
    lc = f[-1].real
    if lc <= 0:
        return False
    for j in range(1, len(e) - 1, 2):
        if npp.polyval((e[j] + e[j + 1]) / 2, f).real <= 0:
            return False
    return True


def _aux_point(ctx: SurfaceContext, angle_z: list[complex]) -> SurfacePoint:
    e = np.sort(ctx.branch_points.real)
    span = e[-1] - e[0] + 1.0
    cands = [e[-1] + t * span for t in (0.3, 0.7, 1.5)] + [e[0] - t * span for t in (0.3, 0.7, 1.5)]
    cands += [(e[-1] + min([z.real for z in angle_z if z.real > e[-1]] or [e[-1] + span])) / 2]
    cands = [c for c in cands if ctx.f_eval(c).real > 0]
    best = max(cands, key=lambda c: min(abs(c - z) for z in angle_z))
    return SurfacePoint(complex(best), complex(np.sqrt(ctx.f_eval(best).real)))


def _build_hyperelliptic(curve: SpectralCurve, nodes: int, seed: int, prime: bool,
                         theta_tol: float = 1e-15) -> DifferentialPencil:
    w = curve.weights
    k, l = w.k, w.l
    h = curve.hyperelliptic
    f = _poly_arr(h.f)
    homology = "ovals" if _oval_homology_ok(f) else "sorted"
    if homology != "ovals":
        warnings.warn("compact ovals do not match the oval homology; using sorted pairs", stacklevel=3)
    ctx = build_surface(f, homology=homology, nodes=nodes, prime=prime, seed=seed, theta_tol=theta_tol)
    pts = _angle_points(curve, ctx)
    g = ctx.genus

    # eta1 = (l/2) dz / z
    eta1 = Differential(np.zeros(1, complex), np.array([l / 2], complex), (0j,))

    # eta2 = -(k/2) dw/w via implicit differentiation of P(z, w) = 0
    zs = sp.Symbol("z")
    a2s, a1s, a0s, ss = (sp.Poly([sp.Rational(c.numerator, c.denominator) for c in reversed(p.coeffs)], Z)
                         for p in (h.a2, h.a1, h.a0, h.s))
    U1 = -a1s * a0s * a2s.diff(Z) + 2 * a0s * a2s * a1s.diff(Z) - a1s * a2s * a0s.diff(Z)
    V1 = a0s * a2s.diff(Z) - a2s * a0s.diff(Z)
    Dp = a0s * a2s * ss
    lcD = Dp.LC()
    A2 = sp.Poly(U1.as_expr() * sp.Rational(k, 4) / lcD, Z)
    B2 = sp.Poly((ss * V1).as_expr() * sp.Rational(k, 4) / lcD, Z)
    to_np = lambda p: np.array([complex(c) for c in reversed(p.all_coeffs())], dtype=complex)  # noqa: E731
    eta2 = Differential(to_np(A2), to_np(B2), tuple(_nroots(Dp)))
    del zs

    # df/f through third-kind differentials with a common auxiliary point
    q0 = [pts[a.label] for a in curve.angles if a.kind == "q0"]
    p0 = [pts[a.label] for a in curve.angles if a.kind == "p0"]
    weights = [(P, float(k)) for P in q0] + [(P, -float(l)) for P in p0]
    if abs(sum(wt for _, wt in weights)) > 1e-12:
        raise PencilError("internal consistency error: residues of df/f do not sum to zero")
    aux = _aux_point(ctx, [P.z for P in pts.values() if P.z is not None])
    c_total = np.zeros(g, complex)
    dff = None
    for P, wt in weights:
        tk = ctx.third_kind(P, aux)
        c_total = c_total + wt * tk.c
        term = Differential(np.array([P.y / 2], complex), np.array([0.5], complex), (P.z,)).scale(wt)
        dff = term if dff is None else dff + term
    hol = Differential(-np.asarray(c_total, complex), np.zeros(1, complex), ())
    dff = dff + hol
    eta0 = -(eta1 + eta2 + dff)
    etas = [eta0, eta1, eta2]
    den = _merge_roots([e.den for e in etas])
    AB = [e.over(den) for e in etas]
    m = max(max(len(a), len(b)) for a, b in AB)
    A = np.zeros((3, m), complex)
    B = np.zeros((3, m), complex)
    for j, (a, b) in enumerate(AB):
        A[j, : len(a)] = a
        B[j, : len(b)] = b
    poles = tuple((pts[a.label], 1) for a in curve.angles)
    p_count = len(poles)
    if p_count != 2 * (k + l):
        raise PencilError("degenerate model: pole count differs from 2(k+l)")
    z_count = p_count + 2 * g - 2
    pen = DifferentialPencil(genus=g, n=2, poles=poles, z_count=z_count, ctx=ctx, f=f, den=tuple(den),
                             A=A, B=B, curve=curve, angle_points=pts)
    M = np.concatenate([A, B], axis=1)
    if np.linalg.matrix_rank(M, tol=1e-10 * np.abs(M).max()) != 3:
        raise PencilError("pencil members are linearly dependent")
    return replace(pen, fixed_roots=tuple(_fixed_roots(pen)))


def _fixed_roots(pen: DifferentialPencil) -> list[complex]:
    """z-values where every member's numerator G vanishes on a sheet.

    These are roots of A^2 - f B^2 for every x and are not zeros of eta(x).
    """
    out = []
    distinct: list[complex] = []
    for r in pen.den:
        if not any(abs(r - q) <= 1e-9 * max(1.0, abs(r)) for q in distinct):
            distinct.append(r)
    for r in distinct:
        yv = np.sqrt(complex(npp.polyval(r, pen.f)))
        mult = sum(1 for q in pen.den if abs(q - r) <= 1e-9 * max(1.0, abs(r)))
        pw = abs(r) ** np.arange(pen.A.shape[1])
        for sh in (1, -1):
            vanish = True
            for j in range(pen.n + 1):
                G = npp.polyval(r, pen.A[j]) + sh * yv * npp.polyval(r, pen.B[j])
                ref = np.abs(pen.A[j]) @ pw + abs(yv) * (np.abs(pen.B[j]) @ pw)
                if abs(G) > 1e-9 * ref:
                    vanish = False
                    break
            if vanish:
                out.extend([r] * mult)
    return out


def build_dF(curve: SpectralCurve, nodes: int = 80, seed: int = 0, prime: bool = True,
             theta_tol: float = 1e-15) -> DifferentialPencil:
    """The pencil (eta0, eta1, eta2) for a k x l model with k in {1, 2}."""
    if curve.problems:
        raise PencilError("degenerate model: " + "; ".join(curve.problems))
    if curve.k == 1:
        return _build_rational(curve)
    if curve.k == 2 and curve.l >= 2:
        return _build_hyperelliptic(curve, nodes, seed, prime, theta_tol)
    raise PencilError(f"k = {curve.k}, l = {curve.l} is outside the supported pipelines (k = 1, or k = 2 with l >= 2)")


def pencil_from_differentials(ctx: SurfaceContext, etas: Sequence[Differential],
                              poles: Sequence[tuple[SurfacePoint, int]]) -> DifferentialPencil:
    """Generic pencil on a hyperelliptic surface from explicit members."""
    den = _merge_roots([e.den for e in etas])
    AB = [e.over(den) for e in etas]
    m = max(max(len(a), len(b)) for a, b in AB)
    n = len(etas) - 1
    A = np.zeros((n + 1, m), complex)
    B = np.zeros((n + 1, m), complex)
    for j, (a, b) in enumerate(AB):
        A[j, : len(a)] = a
        B[j, : len(b)] = b
    p_count = sum(mm for _, mm in poles)
    pen = DifferentialPencil(genus=ctx.genus, n=n, poles=tuple(poles), z_count=p_count + 2 * ctx.genus - 2,
                             ctx=ctx, f=np.asarray(ctx.f), den=tuple(den), A=A, B=B)
    return replace(pen, fixed_roots=tuple(_fixed_roots(pen)))


# --------------------------------------------------------------------------
# zeros


def _zeros_rational(pen: DifferentialPencil, x) -> list[SurfacePoint]:
    qs = [[complex(c) for c in q] for q in pen.rational.numerators]
    N = pen.rational.max_degree
    c = np.zeros(N + 1, complex)
    for xj, q in zip(x, qs):
        c[: len(q)] += xj * np.asarray(q)
    scale = np.abs(c).max()
    deg = N
    while deg > 0 and abs(c[deg]) <= 1e-13 * scale:
        deg -= 1
    rts = np.roots(c[: deg + 1][::-1]) if deg > 0 else np.array([])
    out = [SurfacePoint(complex(r), None) for r in rts]
    out += [SurfacePoint(None, None, 0)] * (N - deg)
    return out


def _deflated_roots(N: np.ndarray, fixed: Sequence[complex], iters: int = 50) -> list[complex]:
    """Roots of N other than the fixed roots, multiplicity included.

    Division by the fixed factor seeds the roots. Division is unstable next
    to clustered roots, so the seeds are then refined by Aberth steps on
    N(z) / prod(z - r) with N evaluated directly.
    """
    N = np.asarray(N, dtype=complex)
    if len(N) <= 1:
        if fixed:
            raise PencilError("fixed root missing from the eliminant")
        return []
    if not fixed:
        return list(np.roots(N[::-1]))
    q, _ = npp.polydiv(N, _from_roots(list(fixed)))
    q = np.atleast_1d(q)
    if len(q) <= 1:
        return []
    z = np.roots(q[::-1]).astype(complex)
    if len(z) != len(N) - 1 - len(fixed):
        raise PencilError("root-lift ambiguity: fixed roots do not divide the eliminant")
    dN = npp.polyder(N)
    fx = np.asarray(fixed, dtype=complex)
    for _ in range(iters):
        with np.errstate(all="ignore"):
            ratio = npp.polyval(z, dN) / npp.polyval(z, N) - (1.0 / (z[:, None] - fx[None, :])).sum(axis=1)
            w = 1.0 / ratio
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            step = w / (1.0 - w * (1.0 / diff).sum(axis=1))
        ok = np.isfinite(step)
        z = np.where(ok, z - np.where(ok, step, 0), z)
        if np.all(np.abs(step[ok]) <= 1e-15 * np.maximum(1.0, np.abs(z[ok]))):
            break
    return list(z)


def _lift(pen: DifferentialPencil, x, zr: complex, taken: list[SurfacePoint]) -> SurfacePoint:
    ctx = pen.ctx
    j = ctx.branch_index(zr, tol=1e-14)
    if j is not None:
        return SurfacePoint(complex(ctx.branch_points[j]), 0j)
    yv = np.sqrt(complex(npp.polyval(zr, pen.f)))
    g_plus = abs(pen._G(x, zr, yv))
    g_minus = abs(pen._G(x, zr, -yv))
    sh = 1 if g_plus <= g_minus else -1
    amb = min(g_plus, g_minus) > 0.1 * max(g_plus, g_minus)
    if amb:
        for T in taken:
            if T.z is not None and abs(T.z - zr) < 1e-6 * max(1.0, abs(zr)) and T.y is not None:
                if abs(T.y - sh * yv) < abs(T.y + sh * yv):
                    sh = -sh
                break
    y = sh * yv
    z = zr
    # Newton polish of G(z, y(z)) on the chosen sheet
    a = np.asarray(x, dtype=complex) @ pen.A
    b = np.asarray(x, dtype=complex) @ pen.B
    da, db, df = npp.polyder(a), npp.polyder(b), npp.polyder(pen.f)
    for _ in range(4):
        fv = npp.polyval(z, pen.f)
        yn = np.sqrt(complex(fv))
        y = yn if abs(yn - y) < abs(yn + y) else -yn
        G = npp.polyval(z, a) + y * npp.polyval(z, b)
        dG = npp.polyval(z, da) + y * npp.polyval(z, db) + npp.polyval(z, df) / (2 * y) * npp.polyval(z, b)
        if dG == 0 or abs(y) < 1e-8:
            break
        step = G / dG
        if abs(step) > 1e-3 * max(1.0, abs(z)):
            break
        z = z - step
        if abs(step) < 1e-16 * max(1.0, abs(z)):
            break
    fv = npp.polyval(z, pen.f)
    yn = np.sqrt(complex(fv))
    y = yn if abs(yn - y) < abs(yn + y) else -yn
    return SurfacePoint(complex(z), complex(y))


def zeros(pen: DifferentialPencil, x) -> list[SurfacePoint]:
    """The zero divisor Z(x): zeros of eta(x) plus poles that cancel, #z points."""
    x = np.asarray(x, dtype=complex)
    if not np.any(x):
        raise PencilError("x = 0 is not a point of projective space")
    if pen.rational is not None:
        pts = _zeros_rational(pen, x)
    else:
        a = x @ pen.A
        b = x @ pen.B
        N = npp.polysub(npp.polymul(a, a), npp.polymul(pen.f, npp.polymul(b, b)))
        nfix = len(pen.fixed_roots)
        expect = pen.z_count + nfix + len(pen.stationary)
        N = np.asarray(N, complex)
        if len(N) < expect + 1:
            N = np.concatenate([N, np.zeros(expect + 1 - len(N))])
        N = N[: expect + 1]
        # zeros at infinity are read off the chart there; a small top
        # coefficient of N alone only signals a large finite root
        inf_pts = _infinite_zeros(pen, x)
        deg = expect - len(inf_pts)
        rts = _deflated_roots(N[: deg + 1], pen.fixed_roots)
        pts: list[SurfacePoint] = []
        for r in rts:
            pts.append(_lift(pen, x, r, pts))
        pts += inf_pts
    if pen.stationary:
        pts = _subtract(pts, pen.stationary)
    if len(pts) != pen.z_count:
        raise PencilError(f"zero count {len(pts)} differs from #z = {pen.z_count}")
    return pts


def _infinite_zeros(pen: DifferentialPencil, x, tol: float = 1e-10) -> list[SurfacePoint]:
    """Points over infinity where eta(x) vanishes (simple zeros, by the chart value)."""
    d = len(pen.f) - 1
    sheets = (0,) if d % 2 else (1, -1)
    out = []
    for sh in sheets:
        P = SurfacePoint(None, None, sh)
        k = pen.chart_value_at(P)
        if abs(x @ k) <= tol * np.linalg.norm(x) * np.linalg.norm(k):
            out.append(P)
    return out


def _subtract(pts: list[SurfacePoint], S: Sequence[SurfacePoint]) -> list[SurfacePoint]:
    rest = list(pts)
    for s in S:
        for i, P in enumerate(rest):
            if _same_point(P, s, tol=1e-6):
                rest.pop(i)
                break
        else:
            raise PencilError("stationary point is not among the zeros")
    return rest


def remove_stationary(pen: DifferentialPencil, S: Sequence[SurfacePoint]) -> DifferentialPencil:
    """Subtract common zeros S of all members from the zero map."""
    S = tuple(S)
    if not S:
        return pen
    rng = np.random.default_rng(7)
    for s in S:
        for _ in range(3):
            x = rng.normal(size=pen.n + 1)
            if not any(_same_point(P, s, tol=1e-6) for P in zeros(pen, x)):
                raise PencilError("S is not contained in the common-zero set of the pencil")
    return replace(pen, stationary=pen.stationary + S, z_count=pen.z_count - len(S))
