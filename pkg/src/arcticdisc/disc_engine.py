"""Pointwise evaluation of the eta-discriminant and the (eta, nu)-resultant.

With zeros z_1..z_#z of eta(x), Abel representatives summing to a frozen
Sigma and vt_e(r, s) = theta(s - r + e):

    delta(x)  = prod_{i != j} vt_e(z_i, z_j) / [prod_i vt_e(z_i, q)]^(2 #z)
    Delta(x)  = delta(x) (prod L^R)^(#z+1) (L^Q)^(2 #z) / (prod L^S)^(#z-1)

Products are accumulated as complex logarithms so that large #z neither
overflows nor underflows.  At genus 0 the classical discriminant is used.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npp

from .genus0 import evaluate_g0, pencil_polynomial
from .pencil import DifferentialPencil, PencilError, _from_roots, _same_point, zeros
from .polyalg import Poly, derivative, resultant
from .surface import SurfaceContext, SurfacePoint

__all__ = [
    "DiscError",
    "LinearForm",
    "DiscriminantContext",
    "make_context",
    "linear_form_at",
    "delta_eta",
    "log_discriminant",
    "discriminant_eval",
    "ResultantContext",
    "make_resultant_context",
    "resultant_eval",
    "log_resultant",
    "function_pencil",
    "derivative_pencil",
    "disc_via_resultant",
    "degree_of_discriminant",
    "abel_distance",
    "write_grid_csv",
]

POLE = complex("inf")


class DiscError(ArithmeticError):
    pass


def degree_of_discriminant(g: int, z_count: int) -> int:
    if g < 0 or z_count < 1:
        raise ValueError("need g >= 0 and #z >= 1")
    return 2 * g - 2 + 2 * z_count


@dataclass(frozen=True)
class LinearForm:
    coefficients: np.ndarray
    anchor: SurfacePoint
    chart: str

    def __call__(self, x) -> complex:
        return complex(np.asarray(x, dtype=complex) @ self.coefficients)


def _chart_tag(pencil: DifferentialPencil, P: SurfacePoint) -> str:
    if P.z is None:
        return "1/z"
    if pencil.ctx is not None and pencil.ctx.branch_index(P.z) is not None:
        return "sqrt(z-e)"
    return "z-z0"


def linear_form_at(P: SurfacePoint, pencil: DifferentialPencil, order: int | None = None) -> LinearForm:
    """L^P(x) = sum_j x_j k_j(zeta_P), with the pole factor zeta^m at poles."""
    for S in pencil.stationary:
        if _same_point(P, S):
            raise DiscError("stationary zero or chart failure")
    c = pencil.chart_value_at(P, order)
    if np.abs(c).max() < 1e-12:
        raise DiscError("stationary zero or chart failure")
    return LinearForm(np.asarray(c, dtype=complex), P, _chart_tag(pencil, P))


@dataclass(frozen=True)
class DiscriminantContext:
    pencil: DifferentialPencil
    ctx: Optional[SurfaceContext]
    Sigma: Optional[np.ndarray]
    q_point: Optional[SurfacePoint]
    q_vec: Optional[np.ndarray]
    e: Optional[np.ndarray]
    LQ: Optional[LinearForm]
    LR: tuple = ()
    LS: tuple = ()
    r_vecs: tuple = ()
    s_vecs: tuple = ()
    offset: Optional[np.ndarray] = None
    x_ref: tuple = (1.0, 0.1, 0.1)
    sigma_tol: float = 1e-7

    @property
    def genus(self) -> int:
        return self.pencil.genus

    @property
    def degree(self) -> int:
        return degree_of_discriminant(self.genus, self.pencil.z_count)

    def abel(self, P: SurfacePoint) -> np.ndarray:
        return self.ctx.abel(P) + self.offset


def _generic_point(pencil: DifferentialPencil, rng, avoid: Sequence[SurfacePoint]) -> SurfacePoint:
    ctx = pencil.ctx
    e = ctx.branch_points
    scale = max(1.0, float(np.abs(e).max()))
    bad = [P.z for P, _ in pencil.poles if P.z is not None] + [P.z for P in avoid if P.z is not None]
    bad += list(pencil.den) + list(e)
    while True:
        z = complex(rng.normal(0, 0.5 * scale), rng.normal(0, 0.5 * scale))
        if min(abs(z - b) for b in bad) > 0.05 * scale:
            return ctx.point(z, int(rng.choice([1, -1])))


def make_context(pencil: DifferentialPencil, seed: int = 0, q_point: SurfacePoint | None = None,
                 x_ref=(1.0, 0.1, 0.1), e: np.ndarray | None = None, basepoint: int = 0,
                 sigma_shift: np.ndarray | None = None) -> DiscriminantContext:
    """Freeze Sigma, Q and e for pointwise evaluation.

    basepoint picks the branch point the Abel map is measured from; e may be
    any representative on the theta divisor; sigma_shift adds a lattice vector.
    """
    if pencil.genus == 0:
        return DiscriminantContext(pencil, None, None, None, None, None, None, x_ref=tuple(x_ref))
    ctx = pencil.ctx
    rng = np.random.default_rng(seed)
    if q_point is None:
        q_point = _generic_point(pencil, rng, list(ctx.S_set) + list(pencil.stationary))
    offset = -ctx.abel(SurfacePoint(complex(ctx.branch_points[basepoint]), 0j)) if basepoint else np.zeros(ctx.genus, complex)
    e_vec = ctx.e if e is None else np.asarray(e, dtype=complex)
    stub = DiscriminantContext(pencil, ctx, None, q_point, None, e_vec, None, offset=offset, x_ref=tuple(x_ref))
    q_vec = stub.abel(q_point)
    Z = zeros(pencil, x_ref)
    Sigma = sum((stub.abel(P) for P in Z), np.zeros(ctx.genus, complex))
    if sigma_shift is not None:
        Sigma = Sigma + np.asarray(sigma_shift, dtype=complex)
    LQ = linear_form_at(q_point, pencil)
    LR = tuple(linear_form_at(R, pencil) for R in ctx.R_set)
    LS = tuple(linear_form_at(S, pencil) for S in ctx.S_set)
    return replace(stub, Sigma=Sigma, q_vec=q_vec, LQ=LQ, LR=LR, LS=LS,
                   r_vecs=tuple(stub.abel(R) for R in ctx.R_set),
                   s_vecs=tuple(stub.abel(S) for S in ctx.S_set))


def _representatives(dctx: DiscriminantContext, Z: Sequence[SurfacePoint], Sigma: np.ndarray) -> np.ndarray:
    zs = np.array([dctx.abel(P) for P in Z])
    v = Sigma - zs.sum(axis=0)
    m1, m2, res = dctx.ctx.reduce(v)
    if np.abs(res).max() > dctx.sigma_tol:
        raise _Degenerate(f"path bookkeeping failure: Sigma residual {np.abs(res).max():.3g}")
    zs[0] = zs[0] + m1 + dctx.ctx.B @ m2
    return zs


def _log_delta_from(dctx: DiscriminantContext, zs: np.ndarray) -> complex:
    n = len(zs)
    e = dctx.e
    ii, jj = np.where(~np.eye(n, dtype=bool))
    args1 = zs[jj] - zs[ii] + e
    args2 = dctx.q_vec[None, :] - zs + e
    l1 = dctx.ctx.log_theta(args1)
    l2 = dctx.ctx.log_theta(args2)
    return complex(np.sum(l1) - 2 * n * np.sum(l2))


def delta_eta(x, dctx: DiscriminantContext, log: bool = False):
    """delta_eta(x); returns POLE when Pi_2 vanishes."""
    if dctx.genus == 0:
        raise DiscError("delta_eta is defined for genus >= 1; use discriminant_eval")
    Z = zeros(dctx.pencil, x)
    zs = _representatives(dctx, Z, dctx.Sigma)
    val = _log_delta_from(dctx, zs)
    if log:
        return val
    if np.isinf(val.real) and val.real > 0:
        return POLE
    return complex(np.exp(val))


def _log(v: complex) -> complex:
    return complex(np.log(complex(v))) if v != 0 else complex(-np.inf)


def log_discriminant(x, dctx: DiscriminantContext, Z: Sequence[SurfacePoint] | None = None) -> complex:
    """Complex logarithm of Delta_eta(x) (real part -inf at coalescence)."""
    x = np.asarray(x, dtype=complex)
    if not np.any(x):
        raise DiscError("x = 0")
    if dctx.genus == 0:
        return _log(discriminant_eval(x, dctx))
    if Z is None:
        Z = zeros(dctx.pencil, x)
    nz = len(Z)
    zs = _representatives(dctx, Z, dctx.Sigma)
    ld = _log_delta_from(dctx, zs)
    out = ld + 2 * nz * _log(dctx.LQ(x))
    for L in dctx.LR:
        out += (nz + 1) * _log(L(x))
    for L in dctx.LS:
        out -= (nz - 1) * _log(L(x))
    return complex(out)


class _Degenerate(DiscError):
    pass


def discriminant_eval(x, dctx: DiscriminantContext, fallback: bool = True) -> complex:
    """Delta_eta(x).

    Where the zero map degenerates (a zero of eta(x) sitting on a pole) the
    value is recovered exactly from the polynomial restriction to a line:
    p(0) is the mean of p over M > d roots of unity on a small circle.
    """
    x = np.asarray(x, dtype=complex)
    if dctx.genus == 0:
        return complex(evaluate_g0(dctx.pencil.rational, list(x)))
    try:
        lv = log_discriminant(x, dctx)
    except _Degenerate:
        if not fallback:
            raise
        d = dctx.degree
        v = np.random.default_rng(1).normal(size=x.shape) + 1j * np.random.default_rng(2).normal(size=x.shape)
        v *= 1e-3 * np.linalg.norm(x) / np.linalg.norm(v)
        ts = np.exp(2j * np.pi * (np.arange(d + 2) + 0.25) / (d + 2))
        return complex(np.mean([discriminant_eval(x + t * v, dctx, fallback=False) for t in ts]))
    if np.isnan(lv.real):
        raise DiscError("undefined logarithm in discriminant evaluation")
    return complex(np.exp(lv)) if np.isfinite(lv.real) else 0j


def abel_distance(dctx: DiscriminantContext, P: SurfacePoint, Q: SurfacePoint) -> float:
    """Euclidean distance of Abel images with the lattice-minimal representative."""
    v = dctx.ctx.abel(P) - dctx.ctx.abel(Q)
    B = dctx.ctx.B
    m2r = np.linalg.solve(B.imag, v.imag)
    m1r = (v - B @ m2r).real
    best = np.inf
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            m1 = np.rint(m1r) + d1
            m2 = np.rint(m2r) + d2
            best = min(best, float(np.linalg.norm(v - m1 - B @ m2)))
    return best


# --------------------------------------------------------------------------
# resultants


def function_pencil(pencil: DifferentialPencil) -> DifferentialPencil:
    """eta_j / omega with omega = dz/y; zeros unchanged, poles gain ord(omega)."""
    if pencil.rational is not None:
        raise DiscError("genus-0 pencils use the classical resultant")
    g = pencil.genus
    poles = list(pencil.poles)
    if g > 1:
        d = len(pencil.f) - 1
        if d % 2 == 0:
            for sh in (1, -1):
                poles.append((SurfacePoint(None, None, sh), g - 1))
        else:
            poles.append((SurfacePoint(None, None, 0), 2 * g - 2))
    merged: list = []
    for P, m in poles:
        for i, (Q, mq) in enumerate(merged):
            if _same_point(P, Q):
                merged[i] = (Q, mq + m)
                break
        else:
            merged.append((P, m))
    p_count = sum(m for _, m in merged)
    return replace(pencil, kind="function", poles=tuple(merged), z_count=p_count - len(pencil.stationary))


def derivative_pencil(fpen: DifferentialPencil) -> DifferentialPencil:
    """d(G/D) written again as (A~ + y B~) / (D~ y) dz with D~ = D^2."""
    if fpen.kind != "function":
        raise DiscError("derivative_pencil expects a function pencil")
    from .pencil import _fixed_roots

    f = fpen.f
    df = npp.polyder(f)
    D = _from_roots(fpen.den)
    dD = npp.polyder(D)
    n1 = fpen.n + 1
    rows_A, rows_B = [], []
    for j in range(n1):
        A, B = fpen.A[j], fpen.B[j]
        dA, dB = npp.polyder(A), npp.polyder(B)
        At = npp.polyadd(npp.polymul(2 * f, npp.polysub(npp.polymul(dB, D), npp.polymul(B, dD))),
                         npp.polymul(df, npp.polymul(B, D)))
        Bt = 2 * npp.polysub(npp.polymul(dA, D), npp.polymul(A, dD))
        rows_A.append(At / 2)
        rows_B.append(Bt / 2)
    m = max(max(len(a), len(b)) for a, b in zip(rows_A, rows_B))
    An = np.zeros((n1, m), complex)
    Bn = np.zeros((n1, m), complex)
    for j in range(n1):
        An[j, : len(rows_A[j])] = rows_A[j]
        Bn[j, : len(rows_B[j])] = rows_B[j]
    poles = tuple((P, mm + 1) for P, mm in fpen.poles)
    p_count = sum(mm for _, mm in poles)
    out = replace(fpen, kind="differential", A=An, B=Bn, den=tuple(list(fpen.den) * 2), poles=poles,
                  z_count=p_count + 2 * fpen.genus - 2, stationary=())
    return replace(out, fixed_roots=tuple(_fixed_roots(out)))


@dataclass(frozen=True)
class ResultantContext:
    eta: DifferentialPencil
    nu: DifferentialPencil
    ctx: SurfaceContext
    e: np.ndarray
    Sigma_z: np.ndarray
    Sigma_w: np.ndarray
    q_point: SurfacePoint
    p_point: SurfacePoint
    q_vec: np.ndarray
    p_vec: np.ndarray
    LQ: LinearForm
    LP: LinearForm
    sigma_tol: float = 1e-7

    def abel(self, P):
        return self.ctx.abel(P)


def make_resultant_context(eta: DifferentialPencil, nu: DifferentialPencil, seed: int = 0,
                           x_ref=None, y_ref=None) -> ResultantContext:
    ctx = eta.ctx
    for S in eta.stationary:
        if any(_same_point(S, T) for T in nu.stationary):
            raise DiscError("shared stationary zero")
    rng = np.random.default_rng(seed)
    q = _generic_point(eta, rng, list(ctx.S_set))
    p = _generic_point(nu, rng, list(ctx.S_set) + [q])
    if x_ref is None:
        x_ref = np.full(eta.n + 1, 0.1)
        x_ref[0] = 1.0
    x_ref = np.asarray(x_ref, dtype=complex)
    y_ref = x_ref.copy() if y_ref is None else np.asarray(y_ref, dtype=complex)
    Sz = sum((ctx.abel(P) for P in zeros(eta, x_ref)), np.zeros(ctx.genus, complex))
    Sw = sum((ctx.abel(P) for P in zeros(nu, y_ref)), np.zeros(ctx.genus, complex))
    return ResultantContext(eta, nu, ctx, ctx.e, Sz, Sw, q, p, ctx.abel(q), ctx.abel(p),
                            linear_form_at(q, eta), linear_form_at(p, nu))


def _reps(ctx: SurfaceContext, pts, Sigma, tol) -> np.ndarray:
    zs = np.array([ctx.abel(P) for P in pts])
    m1, m2, res = ctx.reduce(Sigma - zs.sum(axis=0))
    if np.abs(res).max() > tol:
        raise _Degenerate(f"path bookkeeping failure: Sigma residual {np.abs(res).max():.3g}")
    zs[0] = zs[0] + m1 + ctx.B @ m2
    return zs


def log_resultant(x, y, rctx: ResultantContext, Zx=None, Wy=None) -> complex:
    ctx = rctx.ctx
    Zx = zeros(rctx.eta, x) if Zx is None else Zx
    Wy = zeros(rctx.nu, y) if Wy is None else Wy
    zs = _reps(ctx, Zx, rctx.Sigma_z, rctx.sigma_tol)
    ws = _reps(ctx, Wy, rctx.Sigma_w, rctx.sigma_tol)
    nz, nw = len(zs), len(ws)
    e = rctx.e
    args1 = (ws[None, :, :] - zs[:, None, :] + e).reshape(-1, ctx.genus)
    l1 = np.sum(ctx.log_theta(args1))
    l2z = np.sum(ctx.log_theta(rctx.q_vec[None, :] - zs + e))
    l2w = np.sum(ctx.log_theta(ws - rctx.p_vec[None, :] + e))
    out = l1 - nw * l2z - nz * l2w + nw * _log(rctx.LQ(x)) + nz * _log(rctx.LP(y))
    return complex(out)


def resultant_eval(x, y, eta: DifferentialPencil | None = None, nu: DifferentialPencil | None = None,
                   rctx: ResultantContext | None = None) -> complex:
    """(eta, nu)-resultant at (x, y); genus 0 falls back to Sylvester."""
    if eta is not None and eta.rational is not None:
        p = pencil_polynomial(eta.rational, list(x))
        q = pencil_polynomial(nu.rational, list(y))
        return complex(resultant(p.to_float(), q.to_float()))
    if rctx is None:
        rctx = make_resultant_context(eta, nu)
    lv = log_resultant(x, y, rctx)
    return complex(np.exp(lv)) if np.isfinite(lv.real) else 0j


@dataclass(frozen=True)
class _ViaResultant:
    rctx: ResultantContext
    fpen: DifferentialPencil
    dpen: DifferentialPencil
    pole_forms: tuple


_VIA_CACHE: dict = {}


def _via(dctx: DiscriminantContext) -> _ViaResultant:
    key = id(dctx)
    hit = _VIA_CACHE.get(key)
    if hit is not None and hit[0] is dctx:
        return hit[1]
    fpen = function_pencil(dctx.pencil)
    dpen = derivative_pencil(fpen)
    rctx = make_resultant_context(fpen, dpen, x_ref=dctx.x_ref, y_ref=dctx.x_ref)
    forms = tuple(linear_form_at(P, fpen, m) for P, m in fpen.poles)
    out = _ViaResultant(rctx, fpen, dpen, forms)
    _VIA_CACHE[key] = (dctx, out)
    return out


def disc_via_resultant(x, pencil: DifferentialPencil, dctx: DiscriminantContext | None = None,
                       log: bool = False):
    """Resultant_{eta, d eta}(x; x) / prod_l L^{P_l}(x), up to a constant.

    Genus 0 follows the classical route exactly (rational x stays rational).
    """
    if pencil.rational is not None:
        p = pencil_polynomial(pencil.rational, list(x))
        N = pencil.rational.max_degree
        res = resultant(p, derivative(p))
        lead = p.coeffs[N]
        if lead == 0:
            raise DiscError("leading coefficient of P(x) vanishes; (1/x_n) Res is undefined there")
        val = res / lead
        return val if not log else _log(complex(val))
    x = np.asarray(x, dtype=complex)
    if dctx is None:
        dctx = make_context(pencil)
    via = _via(dctx)
    lv = log_resultant(x, x, via.rctx)
    for L in via.pole_forms:
        lv -= _log(L(x))
    if log:
        return lv
    return complex(np.exp(lv)) if np.isfinite(lv.real) else 0j


def write_grid_csv(path: str | Path, rows: Sequence[tuple[float, float, complex]]) -> None:
    """Columns x1, x2, Re, Im, log10|.| with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["x1", "x2", "re_delta", "im_delta", "log10_abs_delta"])
        for x1, x2, v in rows:
            mag = abs(v)
            lg = np.log10(mag) if mag > 0 else -np.inf
            w.writerow([f"{x1:.17g}", f"{x2:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}", f"{lg:.17g}"])
