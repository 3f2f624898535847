"""Riemann-surface toolkit for hyperelliptic curves y^2 = f(z).

Periods come from straight chords between consecutive sorted branch points.
The substitution z = c - h cos(t) absorbs both square-root endpoints.  The
loop around a chord integrates an odd differential to twice the chord value.
The Abel map integrates along polylines from the first branch point.  Legs
that start at a branch point use z = e + (b - e) t^2, and y is continued
node by node.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

__all__ = [
    "SurfaceError",
    "SurfacePoint",
    "SurfaceContext",
    "ThirdKind",
    "build_surface",
    "period_matrix",
    "theta",
    "log_theta",
    "theta_norm",
    "reduce_lattice",
    "half_periods",
    "load_riemann_data",
    "save_riemann_data",
]


class SurfaceError(ValueError):
    pass


# --------------------------------------------------------------------------
# theta


def _check_B(B) -> np.ndarray:
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    Y = B.imag
    try:
        np.linalg.cholesky((Y + Y.T) / 2)
    except np.linalg.LinAlgError:
        raise SurfaceError("imaginary part of B is not positive definite") from None
    return B


def reduce_lattice(v, B) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split v = m1 + B m2 + r with integer m1, m2 and a small remainder r."""
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    v = np.asarray(v, dtype=complex)
    m2 = np.rint(np.linalg.solve(B.imag, v.imag)).astype(int)
    w = v - B @ m2
    m1 = np.rint(w.real).astype(int)
    return m1, m2, w - m1


def _lattice_points(B: np.ndarray, tol: float) -> np.ndarray:
    g = B.shape[0]
    Y = B.imag
    Yinv = np.linalg.inv(Y)
    # reduced arguments have |Y^-1 Im s| <= 1/2 componentwise
    c_rad = 0.5 * np.sqrt(np.sum(np.abs(Y)))
    ev = np.linalg.eigvalsh(Y)
    rho2 = max(ev.min(), 1e-300)
    R2 = (-np.log(tol) + np.pi * c_rad**2 + g * np.log(2.0 + 1.0 / np.sqrt(rho2))) / np.pi
    R = np.sqrt(R2) + c_rad
    box = [int(np.ceil(R * np.sqrt(Yinv[i, i]))) for i in range(g)]
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in box], indexing="ij")
    M = np.stack([gr.ravel() for gr in grids], axis=1)
    q = np.einsum("ni,ij,nj->n", M, Y, M)
    return M[q <= R * R]


_LATTICE_CACHE: dict[tuple, np.ndarray] = {}


def _points_for(B: np.ndarray, tol: float) -> np.ndarray:
    key = (B.tobytes(), tol)
    pts = _LATTICE_CACHE.get(key)
    if pts is None:
        if len(_LATTICE_CACHE) > 64:
            _LATTICE_CACHE.clear()
        pts = _LATTICE_CACHE[key] = _lattice_points(B, tol)
    return pts


def log_theta(s, B, tol: float = 1e-15) -> np.ndarray:
    """Complex logarithm of theta(s|B), evaluated after lattice reduction.

    Accepts s of shape (g,) or (n, g).  The imaginary part is defined mod 2 pi.
    """
    B = _check_B(B)
    g = B.shape[0]
    s = np.asarray(s, dtype=complex)
    single = s.ndim == 1
    S = s.reshape(-1, g)
    Yi = np.linalg.inv(B.imag)
    m2 = np.rint(S.imag @ Yi.T)
    S1 = S - m2 @ B.T
    m1 = np.rint(S1.real)
    S0 = S1 - m1
    M = _points_for(B, tol)
    quad = 0.5 * np.einsum("ni,ij,nj->n", M, B, M)
    phase = 2j * np.pi * (quad[None, :] + S0 @ M.T)
    shift = phase.real.max(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        core = np.log(np.exp(phase - shift).sum(axis=1)) + shift[:, 0]
    corr = -2j * np.pi * (0.5 * np.einsum("ni,ij,nj->n", m2, B, m2) + np.sum(m2 * S0, axis=1))
    out = core + corr
    return out[0] if single else out


def theta(s, B, tol: float = 1e-15):
    """Riemann theta function; accepts one vector or a batch of rows."""
    return np.exp(log_theta(s, B, tol))


def theta_norm(s, B, tol: float = 1e-15):
    """|theta(s)| exp(-pi Im(s)^T Y^-1 Im(s)), invariant under lattice shifts."""
    B = _check_B(B)
    s = np.asarray(s, dtype=complex)
    Yi = np.linalg.inv(B.imag)
    lt = log_theta(s, B, tol)
    q = np.einsum("...i,ij,...j->...", s.imag, Yi, s.imag)
    return np.exp(lt.real - np.pi * q)


def half_periods(B) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """All (eps, delta, (eps + B delta)/2) with eps, delta in {0,1}^g."""
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    g = B.shape[0]
    out = []
    for eps in itertools.product((0, 1), repeat=g):
        for dlt in itertools.product((0, 1), repeat=g):
            e, d = np.array(eps), np.array(dlt)
            out.append((e, d, (e + B @ d) / 2))
    return out


# --------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class SurfacePoint:
    """A point of y^2 = f(z).  z is None at infinity, where sheet is +-1
    (y ~ sheet * sqrt(lc) z^(g+1)) for even degree and 0 for odd degree."""

    z: complex | None
    y: complex | None
    sheet: int = 0

    @property
    def at_infinity(self) -> bool:
        return self.z is None

    def involution(self) -> "SurfacePoint":
        if self.z is None:
            return SurfacePoint(None, None, -self.sheet)
        return SurfacePoint(self.z, -self.y, 0)

    def to_json(self):
        if self.z is None:
            return {"z": None, "sheet": self.sheet}
        return {"z": [self.z.real, self.z.imag], "y": [self.y.real, self.y.imag]}

    @classmethod
    def from_json(cls, d) -> "SurfacePoint":
        if d["z"] is None:
            return cls(None, None, int(d.get("sheet", 0)))
        return cls(complex(*d["z"]), complex(*d["y"]))


def _dist_to_segment(p: np.ndarray, a: complex, b: complex) -> np.ndarray:
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0:
        return np.abs(p - a)
    t = np.clip(((p - a) * np.conj(d)).real / L2, 0.0, 1.0)
    return np.abs(p - (a + t * d))


def _continue(vals: np.ndarray, start: complex | None = None) -> np.ndarray:
    """Square roots of vals made continuous along the array order."""
    r = np.sqrt(vals.astype(complex))
    prev = r[0] if start is None else start
    for k in range(len(r)):
        if abs(r[k] + prev) < abs(r[k] - prev):
            r[k] = -r[k]
        prev = r[k]
    return r


@dataclass
class _Rule:
    z: np.ndarray
    y: np.ndarray
    dz: np.ndarray

    def integrate(self, h: Callable) -> np.ndarray:
        return np.asarray(h(self.z, self.y)) @ self.dz


def _concat(rules: Sequence[_Rule]) -> _Rule:
    return _Rule(np.concatenate([r.z for r in rules]), np.concatenate([r.y for r in rules]),
                 np.concatenate([r.dz for r in rules]))


# --------------------------------------------------------------------------
# context


@dataclass(frozen=True)
class ThirdKind:
    """omega = [(y + y+)/(2y(z - z+)) - (y + y-)/(2y(z - z-)) - sum_i c_i z^i / y] dz."""

    plus: SurfacePoint
    minus: SurfacePoint
    c: np.ndarray

    def __call__(self, z, y):
        zp, yp = self.plus.z, self.plus.y
        zm, ym = self.minus.z, self.minus.y
        z = np.asarray(z, dtype=complex)
        y = np.asarray(y, dtype=complex)
        hol = sum(ci * z**i for i, ci in enumerate(self.c))
        return (y + yp) / (2 * y * (z - zp)) - (y + ym) / (2 * y * (z - zm)) - hol / y


@dataclass(frozen=True)
class SurfaceContext:
    f: np.ndarray  # ascending complex coefficients
    genus: int
    branch_points: np.ndarray
    a_chords: tuple[int, ...]
    b_chords: tuple[tuple[int, ...], ...]
    a_signs: tuple[int, ...]
    chord_signs: tuple[int, ...]
    A: np.ndarray
    B: np.ndarray
    normalization: np.ndarray
    nodes: int = 40
    homology: str = "sorted"
    e: np.ndarray | None = None
    K: np.ndarray | None = None
    R_set: tuple[SurfacePoint, ...] = ()
    S_set: tuple[SurfacePoint, ...] = ()
    D_set: tuple[SurfacePoint, ...] = ()
    theta_tol: float = 1e-15
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    # ---- basic evaluation

    @property
    def degree(self) -> int:
        return len(self.f) - 1

    @property
    def lc(self) -> complex:
        return self.f[-1]

    @property
    def basepoint(self) -> SurfacePoint:
        return SurfacePoint(complex(self.branch_points[0]), 0j)

    def f_eval(self, z):
        return np.polynomial.polynomial.polyval(z, self.f)

    def y_ref(self, z: complex) -> complex:
        """Principal branch: sqrt(lc) * prod sqrt(z - e_j)."""
        return complex(np.sqrt(complex(self.lc)) * np.prod(np.sqrt(z - self.branch_points)))

    def point(self, z: complex, sheet: int = 1) -> SurfacePoint:
        z = complex(z)
        return SurfacePoint(z, sheet * self.y_ref(z))

    def point_y(self, z: complex, y: complex) -> SurfacePoint:
        return SurfacePoint(complex(z), complex(y))

    def infinity(self, sheet: int = 1) -> SurfacePoint:
        return SurfacePoint(None, None, sheet if self.degree % 2 == 0 else 0)

    def conj(self, P: SurfacePoint) -> SurfacePoint:
        if P.z is None:
            s = P.sheet
            if self.degree % 2 == 0 and np.real(self.lc) < 0:
                s = -s
            return SurfacePoint(None, None, s)
        return SurfacePoint(np.conj(P.z), np.conj(P.y))

    def branch_index(self, z: complex, tol: float = 1e-12) -> int | None:
        d = np.abs(self.branch_points - z)
        j = int(np.argmin(d))
        return j if d[j] <= tol * max(1.0, abs(z)) else None

    def _sep(self) -> np.ndarray:
        e = self.branch_points
        D = np.abs(e[:, None] - e[None, :]) + np.diag(np.full(len(e), np.inf))
        return D.min(axis=1)

    # ---- quadrature rules

    def _F_except(self, j: int, z):
        others = np.delete(self.branch_points, j)
        return self.lc * np.prod(z[:, None] - others[None, :], axis=1)

    def chord_rule(self, m: int, nodes: int | None = None, panels: int = 4) -> _Rule:
        e = self.branch_points
        n = nodes or self.nodes
        x, w = np.polynomial.legendre.leggauss(n)
        edges = np.linspace(0.0, np.pi, panels + 1)
        th = np.concatenate([(edges[p] + edges[p + 1]) / 2 + (edges[p + 1] - edges[p]) / 2 * x
                             for p in range(panels)])
        wt = np.concatenate([(edges[p + 1] - edges[p]) / 2 * w for p in range(panels)])
        c, h = (e[m] + e[m + 1]) / 2, (e[m + 1] - e[m]) / 2
        z = c - h * np.cos(th)
        others = np.delete(e, [m, m + 1])
        R = _continue(self.lc * np.prod(z[:, None] - others[None, :], axis=1))
        y = 1j * h * np.sin(th) * R
        return _Rule(z, y, h * np.sin(th) * wt)

    def _pieces(self, a: complex, b: complex, sing_a: int | None, sing_b: int | None, depth=0):
        e = self.branch_points
        if sing_a is not None and sing_b is not None:
            m = (a + b) / 2
            return self._pieces(a, m, sing_a, None, depth + 1) + self._pieces(m, b, None, sing_b, depth + 1)
        excl = [j for j in (sing_a, sing_b) if j is not None]
        mask = np.ones(len(e), bool)
        mask[excl] = False
        d = _dist_to_segment(e[mask], a, b).min() if mask.any() else np.inf
        if abs(b - a) <= 0.5 * d or abs(b - a) < 1e-14:
            return [(a, b, sing_a, sing_b)]
        if depth > 60:
            raise SurfaceError("path passes through a branch point")
        m = (a + b) / 2
        return self._pieces(a, m, sing_a, None, depth + 1) + self._pieces(m, b, None, sing_b, depth + 1)

    def _detour(self, pts: list[complex], avoid: set[int]) -> list[complex]:
        e = self.branch_points
        sep = self._sep()
        out = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            seg = [a, b]
            for _ in range(8):
                changed = False
                new = [seg[0]]
                for p, q in zip(seg[:-1], seg[1:]):
                    d = _dist_to_segment(e, p, q)
                    bad = [j for j in range(len(e)) if j not in avoid and d[j] < 0.2 * sep[j]
                           and abs(e[j] - p) > 1e-14 and abs(e[j] - q) > 1e-14]
                    if bad:
                        j = min(bad, key=lambda j: d[j])
                        u = (q - p) / abs(q - p)
                        nrm = 1j * u
                        side = ((e[j] - p) * np.conj(nrm)).real
                        if side > 0:
                            nrm = -nrm
                        new.append(e[j] + 0.4 * sep[j] * nrm)
                        changed = True
                    new.append(q)
                seg = new
                if not changed:
                    break
            out.extend(seg[1:])
        return out

    def _leg(self, pts: list[complex], sing_start: int | None, sing_end: int | None,
             y_start: complex | None, nodes: int) -> tuple[_Rule, complex]:
        """Rule along a polyline; returns it with the continued y at the end."""
        avoid = {j for j in (sing_start, sing_end) if j is not None}
        pts = self._detour(pts, avoid)
        pieces = []
        for k, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
            sa = sing_start if k == 0 else None
            sb = sing_end if k == len(pts) - 2 else None
            pieces.extend(self._pieces(a, b, sa, sb))
        x, w = np.polynomial.legendre.leggauss(nodes)
        t, wt = (x + 1) / 2, w / 2
        rules = []
        prev = y_start
        for a, b, sa, sb in pieces:
            if sa is not None:
                ej = self.branch_points[sa]
                z = ej + (b - ej) * t**2
                sq = _continue(self._F_except(sa, z), None if prev is None or prev == 0 else None)
                y = np.sqrt(b - ej) * t * sq
                dz = 2 * (b - ej) * t * wt
                yb = np.sqrt(b - ej) * _continue(self._F_except(sa, np.array([b])), sq[-1])[0]
            elif sb is not None:
                ej = self.branch_points[sb]
                z = ej + (a - ej) * (1 - t) ** 2
                sa_val = np.sqrt(complex(a - ej))
                Fa = np.sqrt(complex(self._F_except(sb, np.array([a]))[0]))
                if prev is not None and abs(sa_val * Fa + prev) < abs(sa_val * Fa - prev):
                    Fa = -Fa
                sq = _continue(self._F_except(sb, z), Fa)
                y = sa_val * (1 - t) * sq
                dz = -2 * (a - ej) * (1 - t) * wt
                yb = 0j
            else:
                z = a + (b - a) * t
                ya = np.sqrt(complex(self.f_eval(a)))
                if prev is not None and abs(ya + prev) < abs(ya - prev):
                    ya = -ya
                y = _continue(self.f_eval(z), ya)
                dz = (b - a) * wt
                yb = _continue(np.array([self.f_eval(b)]), y[-1])[0]
            rules.append(_Rule(z, y, dz))
            prev = yb
        return _concat(rules), prev

    def _tail_rule(self, za: complex, y_start: complex, nodes: int) -> tuple[_Rule, complex]:
        """Ray z = za / s^2 from za to infinity; returns rule and Y(0) = lim y s^d."""
        d = self.degree
        x, w = np.polynomial.legendre.leggauss(nodes)
        s = 1 - (x + 1) / 2
        wt = w / 2
        k = np.arange(d + 1)
        F = np.array([np.sum(self.f * za**k * sv ** (2 * (d - k))) for sv in s])
        Y1 = y_start  # at s = 1, Y = y
        Y = _continue(F, Y1)
        z = za / s**2
        y = Y / s**d
        dz = 2 * za / s**3 * wt  # dz = -2 za s^-3 ds with s running 1 -> 0
        Y0 = _continue(np.array([self.lc * za**d]), Y[-1])[0]
        return _Rule(z, y, dz), Y0

    def _far_point(self) -> complex:
        e = self.branch_points
        R = 2.0 * np.abs(e).max() + 1.0
        # a direction avoiding the branch points' arguments
        args = np.angle(e - 0)
        best, bd = 0.5, -1.0
        for th in np.linspace(0, 2 * np.pi, 73)[:-1] + 0.123:
            dd = np.min(np.abs(np.angle(np.exp(1j * (args - th)))))
            if dd > bd:
                best, bd = th, dd
        return R * np.exp(1j * best)

    def path_rules(self, P: SurfacePoint, nodes: int | None = None) -> list[_Rule]:
        """Quadrature legs from the basepoint to P.  The last leg is flipped to
        the other sheet when needed; earlier legs end at branch points."""
        n = nodes or self.nodes
        e = self.branch_points
        z0 = e[0]
        if P.z is None:
            za = self._far_point()
            r1, y_end = self._leg([z0, za], 0, None, 0j, n)
            r2, Y0 = self._tail_rule(za, y_end, n)
            rule = _concat([r1, r2])
            if self.degree % 2 == 0:
                g = self.genus
                lead = Y0 / za ** (g + 1)
                if abs(lead + P.sheet * np.sqrt(complex(self.lc))) < abs(lead - P.sheet * np.sqrt(complex(self.lc))):
                    rule = _Rule(rule.z, -rule.y, rule.dz)
            return [rule]
        zP = complex(P.z)
        j = self.branch_index(zP)
        if j == 0:
            return []
        if j is not None:
            rule, _ = self._leg([z0, e[j]], 0, j, 0j, n)
            return [rule]
        sep = self._sep()
        near = np.abs(e - zP) < 0.05 * sep
        near[0] = False
        legs = []
        if near.any():
            jn = int(np.argmax(near))
            r1, _ = self._leg([z0, e[jn]], 0, jn, 0j, n)
            legs.append(r1)
            r2, y_end = self._leg([e[jn], zP], jn, None, 0j, n)
        else:
            r2, y_end = self._leg([z0, zP], 0, None, 0j, n)
        if P.y is not None and abs(y_end + P.y) < abs(y_end - P.y):
            r2 = _Rule(r2.z, -r2.y, r2.dz)
        legs.append(r2)
        return legs

    def integrate_to(self, P: SurfacePoint, h: Callable, nodes: int | None = None):
        total = 0
        for r in self.path_rules(P, nodes):
            total = total + r.integrate(h)
        return total

    def _holo(self, z, y):
        return np.stack([z**i / y for i in range(self.genus)])

    def abel_raw(self, P: SurfacePoint, nodes: int | None = None) -> np.ndarray:
        if self.genus == 0:
            return np.zeros(0, complex)
        v = self.integrate_to(P, self._holo, nodes)
        return np.zeros(self.genus, complex) if np.isscalar(v) and v == 0 else np.asarray(v, complex)

    def abel(self, P: SurfacePoint, nodes: int | None = None) -> np.ndarray:
        """One representative of u(P) in the normalized basis."""
        key = (P, nodes)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.normalization @ self.abel_raw(P, nodes)
            if len(self._cache) > 20000:
                self._cache.clear()
            self._cache[key] = hit
        return hit.copy()

    # ---- theta-based pieces

    def theta(self, s):
        return theta(s, self.B, self.theta_tol)

    def log_theta(self, s):
        return log_theta(s, self.B, self.theta_tol)

    def reduce(self, v):
        return reduce_lattice(v, self.B)

    def lattice_distance(self, v) -> float:
        """Distance of v to the lattice in the reduced (m1, m2) coordinates."""
        Bm = self.B
        m2r = np.linalg.solve(Bm.imag, np.asarray(v).imag)
        m1r = (np.asarray(v) - Bm @ m2r).real
        frac = np.concatenate([m1r - np.rint(m1r), m2r - np.rint(m2r)])
        return float(np.abs(frac).max())

    def prime(self, R: SurfacePoint, S: SurfacePoint) -> complex:
        """E_e(R, S) = theta(u(S) - u(R) + e) for the recorded representatives."""
        return complex(self.theta(self.abel(S) - self.abel(R) + self.e))

    def prime_norm(self, R: SurfacePoint, S: SurfacePoint) -> float:
        return float(theta_norm(self.abel(S) - self.abel(R) + self.e, self.B, self.theta_tol))

    # ---- third-kind differentials

    def a_period(self, h: Callable) -> np.ndarray:
        """a-periods of h(z, y) dz for differentials odd under y -> -y."""
        out = []
        for j, m in enumerate(self.a_chords):
            out.append(self.a_signs[j] * 2 * self.chord_rule(m).integrate(h))
        return np.array(out)

    def oddpart_a_periods(self, h: Callable) -> np.ndarray:
        def odd(z, y):
            return (np.asarray(h(z, y)) - np.asarray(h(z, -y))) / 2
        return self.a_period(odd)

    def third_kind(self, Pplus: SurfacePoint, Pminus: SurfacePoint) -> ThirdKind:
        for P in (Pplus, Pminus):
            if P.z is None or abs(P.y) < 1e-12:
                raise SurfaceError("third-kind poles at branch points or infinity are not supported")
        if abs(Pplus.z - Pminus.z) < 1e-14 and abs(Pplus.y - Pminus.y) < 1e-14:
            raise SurfaceError("third-kind differential needs two distinct points")
        base = ThirdKind(Pplus, Pminus, np.zeros(self.genus))
        rhs = self.oddpart_a_periods(base)
        M = np.stack([self.a_period(lambda z, y, i=i: z**i / y) for i in range(self.genus)], axis=1)
        c = np.linalg.solve(M, rhs) if self.genus else np.zeros(0)
        return ThirdKind(Pplus, Pminus, c)

    # ---- export

    def to_json(self) -> dict:
        cx = lambda a: [[complex(v).real, complex(v).imag] for v in np.ravel(a)]  # noqa: E731
        return {
            "f": cx(self.f),
            "genus": self.genus,
            "branch_points": cx(self.branch_points),
            "homology": self.homology,
            "B": cx(self.B),
            "A": cx(self.A),
            "a_chords": list(self.a_chords),
            "b_chords": [list(b) for b in self.b_chords],
            "a_signs": list(self.a_signs),
            "chord_signs": list(self.chord_signs),
            "e": None if self.e is None else cx(self.e),
            "K": None if self.K is None else cx(self.K),
            "R_set": [P.to_json() for P in self.R_set],
            "S_set": [P.to_json() for P in self.S_set],
            "D_set": [P.to_json() for P in self.D_set],
            "nodes": self.nodes,
        }


# --------------------------------------------------------------------------
# construction


def _homology(d: int, g: int, convention: str):
    if convention == "sorted":
        a = tuple(2 * j for j in range(g))
        b = tuple(tuple(2 * m + 1 for m in range(j, g)) for j in range(g))
    elif convention == "ovals":
        a = tuple(2 * j + 1 for j in range(g))
        b = tuple(tuple(2 * m for m in range(0, j + 1)) for j in range(g))
    else:
        raise SurfaceError(f"unknown homology convention {convention!r}")
    return a, b


def _periods(ctx_stub: SurfaceContext, nodes: int):
    g = ctx_stub.genus
    nchord = len(ctx_stub.branch_points) - 1
    Om = np.zeros((g, nchord), complex)
    for m in range(nchord):
        rule = ctx_stub.chord_rule(m, nodes)
        Om[:, m] = rule.integrate(lambda z, y: np.stack([z**i / y for i in range(g)]))
    return 2 * Om


def _search(L: np.ndarray, a_chords, b_chords):
    g = len(a_chords)
    used = sorted({m for b in b_chords for m in b})
    best = None
    for sa in itertools.product((1, -1), repeat=g):
        for sc in itertools.product((1, -1), repeat=len(used)):
            sign = dict(zip(used, sc))
            A = np.stack([sa[j] * L[:, a_chords[j]] for j in range(g)], axis=1)
            Bp = np.stack([sum(sign[m] * L[:, m] for m in b_chords[j]) for j in range(g)], axis=1)
            Bm = np.linalg.solve(A, Bp)
            asym = np.abs(Bm - Bm.T).max() / max(1.0, np.abs(Bm).max())
            try:
                np.linalg.cholesky(((Bm + Bm.T) / 2).imag)
            except np.linalg.LinAlgError:
                continue
            if best is None or asym < best[0] - 1e-13:
                best = (asym, sa, tuple(sign.get(m, 1) for m in range(L.shape[1])), A, Bm)
    return best


def build_surface(f, homology: str = "sorted", nodes: int = 40, prime: bool = True,
                  seed: int = 0, theta_tol: float = 1e-15) -> SurfaceContext:
    """Construct the surface data for y^2 = f(z).

    f is an ascending coefficient sequence (real, squarefree, degree >= 3).
    """
    fc = np.trim_zeros(np.asarray(f, dtype=complex), "b")
    d = len(fc) - 1
    if d < 3:
        raise SurfaceError("need deg f >= 3 for positive genus")
    g = (d - 1) // 2
    e = np.roots(fc[::-1]).astype(complex)
    # polish roots
    fd = np.polynomial.polynomial.polyder(fc)
    for _ in range(3):
        e = e - np.polynomial.polynomial.polyval(e, fc) / np.polynomial.polynomial.polyval(e, fd)
    e = e[np.lexsort((np.round(e.imag, 12), np.round(e.real, 12)))]
    gap = np.abs(e[:, None] - e[None, :]) + np.diag(np.full(d, np.inf))
    if gap.min() < 1e-10:
        raise SurfaceError("near-degenerate curve: branch points closer than 1e-10")
    a_chords, b_chords = _homology(d, g, homology)
    stub = SurfaceContext(fc, g, e, a_chords, b_chords, (), (), np.eye(g), np.eye(g), np.eye(g),
                          nodes=nodes, homology=homology, theta_tol=theta_tol)
    L = _periods(stub, nodes)
    best = _search(L, a_chords, b_chords)
    if best is None or best[0] > 1e-8:
        raise SurfaceError("period matrix search failed: no symmetric basis with Im B > 0")
    _, sa, sc, A, Bm = best
    ctx = replace(stub, a_signs=tuple(sa), chord_signs=sc, A=A, B=Bm,
                  normalization=np.linalg.inv(A), _cache={})
    if prime:
        e_vec, R_set, S_set, K, D = prime_setup(ctx, seed=seed)
        ctx = replace(ctx, e=e_vec, K=K, R_set=R_set, S_set=S_set, D_set=D, _cache={})
    return ctx


def period_matrix(f, nodes: int = 40, homology: str = "sorted") -> tuple[np.ndarray, np.ndarray]:
    """Normalized period matrix B and the matrix A^-1 normalizing z^i dz / y."""
    ctx = build_surface(f, homology=homology, nodes=nodes, prime=False)
    return ctx.B, ctx.normalization


# --------------------------------------------------------------------------
# prime data


def real_oval_points(ctx: SurfaceContext, count: int, rng: np.random.Generator) -> list[SurfacePoint]:
    """Random points on real ovals (f >= 0 on a real interval, either sheet)."""
    e = ctx.branch_points
    real = np.sort(e[np.abs(e.imag) < 1e-12].real)
    cand = []
    for lo, hi in zip(real[:-1], real[1:]):
        mid = (lo + hi) / 2
        if ctx.f_eval(mid).real > 0:
            cand.append((lo, hi))
    pts = []
    for i in range(count):
        if cand:
            lo, hi = cand[i % len(cand)]
            z = lo + (hi - lo) * rng.uniform(0.2, 0.8)
        else:
            z = (real[-1] + 1.0 + rng.uniform()) if len(real) else rng.uniform(1, 2)
            if ctx.f_eval(z).real < 0:
                z = (real[0] - 1.0 - rng.uniform()) if len(real) else -z
        y = np.sqrt(complex(ctx.f_eval(z)))
        pts.append(SurfacePoint(complex(z), complex(y) * rng.choice([1, -1])))
    return pts


def _random_points(ctx: SurfaceContext, count: int, rng) -> list[SurfacePoint]:
    e = ctx.branch_points
    scale = max(1.0, np.abs(e).max())
    out = []
    while len(out) < count:
        z = complex(rng.normal(0, scale), rng.normal(0, scale))
        if np.abs(e - z).min() > 0.05 * scale:
            out.append(ctx.point(z, int(rng.choice([1, -1]))))
    return out


def riemann_constant(ctx: SurfaceContext, rng) -> np.ndarray:
    """The half-period K with theta(K + u(D)) = 0 for effective D of degree g-1."""
    g = ctx.genus
    probes = [_random_points(ctx, g - 1, rng) for _ in range(3)] if g > 1 else [[]]
    scores = []
    for eps, dlt, h in half_periods(ctx.B):
        worst = 0.0
        for D in probes:
            s = h + sum((ctx.abel(P) for P in D), np.zeros(g, complex))
            worst = max(worst, float(theta_norm(s, ctx.B)))
        scores.append((worst, h))
    scores.sort(key=lambda t: t[0])
    if scores[0][0] > 1e-8:
        raise SurfaceError("no half-period characteristic vanishes on the theta divisor")
    return scores[0][1]


def _find_zeros(ctx: SurfaceContext, fun: Callable[[SurfacePoint], float], rng,
                grid: int = 14) -> list[SurfacePoint]:
    """Local minimization of a nonnegative function over both sheets."""
    e = ctx.branch_points
    lo = e.real.min() - 1.0
    hi = e.real.max() + 1.0
    him = max(1.0, np.abs(e.imag).max() + 1.0)
    xs = np.linspace(lo, hi, grid * 2 + 1)
    ys = np.linspace(-him, him, grid + 1)
    starts = []
    for sh in (1, -1):
        for xv in xs:
            for yv in ys:
                z = complex(xv, yv)
                if np.abs(e - z).min() < 1e-6:
                    continue
                y0 = np.sqrt(complex(ctx.f_eval(z))) * sh
                starts.append((fun(SurfacePoint(z, y0)), z, y0))
    starts.sort(key=lambda t: t[0])
    found: list[SurfacePoint] = []
    for val, z0, y0 in starts[:10]:
        def obj(v, y_anchor=[y0]):
            z = complex(v[0], v[1])
            y = np.sqrt(complex(ctx.f_eval(z)))
            if abs(y + y_anchor[0]) < abs(y - y_anchor[0]):
                y = -y
            return fun(SurfacePoint(z, y))
        res = optimize.minimize(obj, [z0.real, z0.imag], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 2000})
        z = complex(res.x[0], res.x[1])
        y = np.sqrt(complex(ctx.f_eval(z)))
        if abs(y + y0) < abs(y - y0):
            y = -y
        P = SurfacePoint(z, y)
        if fun(P) < 1e-6 and not any(abs(P.z - Q.z) < 1e-5 and abs(P.y - Q.y) < 1e-5 * max(1, abs(P.y))
                                      for Q in found):
            found.append(P)
    return found


def prime_setup(ctx: SurfaceContext, seed: int = 0, retries: int = 5):
    """Return (e, R_set, S_set, K, D).  e = K + u(D) for D on the real ovals."""
    rng = np.random.default_rng(seed)
    g = ctx.genus
    K = riemann_constant(ctx, rng)
    for _ in range(retries):
        D = tuple(real_oval_points(ctx, g - 1, rng))
        e_vec = K + sum((ctx.abel(P) for P in D), np.zeros(g, complex))
        trial = replace(ctx, e=e_vec, K=K, _cache=ctx._cache)
        pairs = [tuple(_random_points(ctx, 2, rng)) for _ in range(5)]
        vals = [trial.prime_norm(R, S) for R, S in pairs]
        if max(vals) > 1e-6:
            break
    else:
        raise SurfaceError("prime function vanishes identically for every drawn e")
    if g == 1:
        return e_vec, (), (), K, D
    S_fix = _random_points(ctx, 1, rng)[0]
    R_fix = _random_points(ctx, 1, rng)[0]
    zr = _find_zeros(ctx, lambda R: trial.prime_norm(R, S_fix), rng)
    R_set = tuple(P for P in zr if not (abs(P.z - S_fix.z) < 1e-5 and abs(P.y - S_fix.y) < 1e-5 * max(1, abs(P.y))))
    zs = _find_zeros(ctx, lambda S: trial.prime_norm(R_fix, S), rng)
    S_set = tuple(P for P in zs if not (abs(P.z - R_fix.z) < 1e-5 and abs(P.y - R_fix.y) < 1e-5 * max(1, abs(P.y))))
    if len(R_set) != g - 1 or len(S_set) != g - 1:
        raise SurfaceError(f"prime zero search found {len(R_set)}/{len(S_set)} spurious zeros, expected {g - 1}")
    return e_vec, R_set, S_set, K, D


# --------------------------------------------------------------------------
# JSON


def save_riemann_data(ctx: SurfaceContext, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ctx.to_json(), indent=1, sort_keys=True))


def load_riemann_data(path: str | Path) -> SurfaceContext:
    d = json.loads(Path(path).read_text())
    cx = lambda v: np.array([complex(a, b) for a, b in v])  # noqa: E731
    g = d["genus"]
    B = cx(d["B"]).reshape(g, g)
    A = cx(d["A"]).reshape(g, g)
    return SurfaceContext(
        f=cx(d["f"]), genus=g, branch_points=cx(d["branch_points"]),
        a_chords=tuple(d["a_chords"]), b_chords=tuple(tuple(b) for b in d["b_chords"]),
        a_signs=tuple(d["a_signs"]), chord_signs=tuple(d["chord_signs"]), A=A, B=B,
        normalization=np.linalg.inv(A), nodes=d.get("nodes", 40), homology=d.get("homology", "sorted"),
        e=None if d["e"] is None else cx(d["e"]), K=None if d["K"] is None else cx(d["K"]),
        R_set=tuple(SurfacePoint.from_json(p) for p in d["R_set"]),
        S_set=tuple(SurfacePoint.from_json(p) for p in d["S_set"]),
        D_set=tuple(SurfacePoint.from_json(p) for p in d.get("D_set", [])),
    )
