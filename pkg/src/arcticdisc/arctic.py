"""Arctic-curve tracing from the real ovals and degree verification.

At a point S with chart coefficients k(zeta) = (k_0, k_1, k_2), eta(x) has
a double zero at S exactly when x is proportional to k(S) x k'(S).  Scaling
k by a nonvanishing function or changing the chart only rescales this cross
product, so each oval is swept with a parameter phi in which the coefficients
are analytic and real.  k' comes from a complex step in phi.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npp

from .disc_engine import DiscriminantContext, degree_of_discriminant, discriminant_eval, log_discriminant
from .pencil import DifferentialPencil

__all__ = [
    "TraceError",
    "TracedCurve",
    "trace",
    "membership_residual",
    "real_ovals",
    "degree_check",
    "DegreeReport",
    "degree_formula",
    "fit_circle",
    "fit_conic",
    "write_trace_csv",
    "trace_svg",
]

STEP = 1e-20


class TraceError(RuntimeError):
    pass


def degree_formula(smooth: int, frozen: int, model: str = "aztec") -> int:
    """Degree of the arctic curve from the numbers of smooth and frozen regions."""
    if smooth < 0 or frozen < 1:
        raise ValueError("need smooth >= 0 and frozen >= 1")
    if model in ("aztec", "hex_unramified"):
        if model == "hex_unramified" and smooth == 0:
            raise ValueError("an unramified hexagon model always has a smooth region")
        return 6 * smooth + 2 * frozen - 6
    if model == "hex_ramified":
        return 6 * smooth + 2 * frozen - 10
    raise ValueError(f"unknown model {model!r}")


@dataclass
class TracedCurve:
    samples: list  # per oval: array (n, 2)
    params: list  # per oval: phi values
    oval_ids: list
    residuals: list = field(default_factory=list)
    dropped: int = 0

    def points(self) -> np.ndarray:
        arrs = [s for s in self.samples if len(s)]
        return np.concatenate(arrs) if arrs else np.zeros((0, 2))

    def in_square(self, slack: float = 1e-6) -> bool:
        P = self.points()
        return bool(np.all(np.abs(P) <= 1 + slack))


# --------------------------------------------------------------------------
# oval parametrizations


@dataclass(frozen=True)
class _Oval:
    tag: str
    fn: Callable[[np.ndarray], np.ndarray]  # phi -> (3, n) real-analytic coefficients


def real_ovals(pencil: DifferentialPencil) -> list[_Oval]:
    if pencil.rational is not None:
        return [_rational_oval(pencil)]
    f = np.asarray(pencil.f)
    d = len(f) - 1
    e = np.roots(f[::-1])
    if d % 2 or np.abs(e.imag).max() > 1e-9 * max(1.0, np.abs(e).max()):
        raise TraceError("tracing needs an even-degree f with real branch points (an M-curve)")
    e = np.sort(e.real)
    lc = f[-1].real
    ovals = []
    if lc > 0:
        ovals.append(_unbounded_oval(pencil, e))
    for j in range(1, d - 1):
        if npp.polyval((e[j] + e[j + 1]) / 2, f).real > 0:
            ovals.append(_compact_oval(pencil, e, j))
    return ovals


def _rational_oval(pen: DifferentialPencil) -> _Oval:
    qs = [np.array([float(c) for c in q]) for q in pen.rational.numerators]
    N = pen.rational.max_degree

    def fn(phi):
        u, v = np.sin(phi / 2), np.cos(phi / 2)
        return np.stack([sum(c * u**k * v ** (N - k) for k, c in enumerate(q)) for q in qs])

    return _Oval("real-line", fn)


def _compact_oval(pen: DifferentialPencil, e: np.ndarray, j: int) -> _Oval:
    lo, hi = e[j], e[j + 1]
    m, h = (lo + hi) / 2, (hi - lo) / 2
    others = np.delete(e, [j, j + 1])
    lc = pen.f[-1].real
    A, B = pen.A, pen.B

    def fn(phi):
        z = m + h * np.cos(phi)
        F = lc * np.prod(z[None, :] - others[:, None], axis=0)
        rt = np.sqrt(-F + 0j)
        y = h * np.sin(phi) * rt
        s = -1 / rt
        return np.stack([(npp.polyval(z, A[i]) + y * npp.polyval(z, B[i])) * s for i in range(pen.n + 1)])

    return _Oval(f"compact[{lo:.6g},{hi:.6g}]", fn)


def _unbounded_oval(pen: DifferentialPencil, e: np.ndarray) -> _Oval:
    d = len(e)
    m0 = (e[0] + e[1]) / 2
    tj = 1 / (e - m0)
    ta, tb = tj[0], tj[-1]
    mt, ht = (ta + tb) / 2, (tb - ta) / 2
    others = tj[1:-1]
    lc = pen.f[-1].real
    A, B = pen.A, pen.B
    M = max(A.shape[1] - 1, B.shape[1] - 1 + d // 2)

    def fn(phi):
        t = mt + ht * np.cos(phi)
        C = lc * np.prod(1 - t[None, :] / others[:, None], axis=0) / (ta * tb)
        rt = np.sqrt(-C + 0j)
        z = m0 + 1 / t
        # t^(d/2) y and t^M (A + y B), both analytic through t = 0
        ty = ht * np.sin(phi) * rt
        s = t ** (d // 2 - 2) / rt
        out = []
        for i in range(pen.n + 1):
            a = np.asarray(A[i])
            b = np.asarray(B[i])
            # t^M A(m0 + 1/t) = sum a_k t^(M-k) (m0 t + 1)^k
            ta_ = sum(a[k] * t ** (M - k) * (m0 * t + 1) ** k for k in range(len(a)))
            tb_ = sum(b[k] * t ** (M - k - d // 2) * (m0 * t + 1) ** k for k in range(len(b)))
            out.append((ta_ + ty * tb_) * s)
        return np.stack(out)

    return _Oval("unbounded", fn)


# --------------------------------------------------------------------------
# tracing


def _cross_points(fn, phi: np.ndarray):
    k = fn(phi + 1j * STEP)
    kr, kd = k.real, k.imag / STEP
    imag_res = np.abs(fn(phi).imag).max(axis=0) / (np.abs(fn(phi)).max(axis=0) + 1e-300)
    x = np.cross(kr.T, kd.T)
    return x, imag_res


def trace(pencil: DifferentialPencil, samples_per_oval: int = 400, dctx: Optional[DiscriminantContext] = None,
          max_chord: float = 1e-3, max_refine: int = 12, x0_tol: float = 1e-9,
          residual_every: int = 0) -> TracedCurve:
    """Sample the arctic curve as (x1/x0, x2/x0) along every real oval."""
    samples, params, tags, residuals = [], [], [], []
    dropped = 0
    for ov in real_ovals(pencil):
        phi = 2 * np.pi * (np.arange(samples_per_oval) + 0.5 / np.sqrt(2)) / samples_per_oval
        for it in range(max_refine + 1):
            x, ires = _cross_points(ov.fn, phi)
            ok = (np.abs(x[:, 0]) > x0_tol * np.linalg.norm(x, axis=1)) & (ires < 1e-7)
            pts = np.where(ok[:, None], x[:, 1:] / np.where(ok, x[:, 0], 1)[:, None], np.nan)
            if it == max_refine:
                break
            gaps = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
            gaps = np.where(np.isnan(gaps), 0, gaps)
            bad = np.where(gaps > max_chord)[0]
            if len(bad) == 0 or len(phi) > 200000:
                break
            nxt = np.roll(phi, -1)
            nxt[-1] += 2 * np.pi
            phi = np.sort(np.concatenate([phi, (phi[bad] + nxt[bad]) / 2]))
        dropped += int((~ok).sum())
        keep = ok & (np.max(np.abs(pts), axis=1) <= 1 + 1e-6) if np.any(ok) else ok
        dropped += int((ok & ~keep).sum())
        samples.append(pts[keep])
        params.append(phi[keep])
        tags.append(ov.tag)
        if residual_every and dctx is not None:
            res = []
            for p in pts[keep][::residual_every]:
                res.append(membership_residual(dctx, p))
            residuals.append(np.array(res))
    return TracedCurve(samples, params, tags, residuals, dropped)


def membership_residual(dctx: DiscriminantContext, p, width: float = 0.02, n: int = 9) -> float:
    """|Delta(1, p)| over the median of |Delta| on a short transverse segment."""
    p = np.asarray(p, dtype=float)
    center = abs(discriminant_eval(np.array([1.0, p[0], p[1]]), dctx))
    rng = np.random.default_rng(0)
    dirv = rng.normal(size=2)
    dirv /= np.linalg.norm(dirv)
    vals = []
    for s in np.linspace(-width, width, n):
        if s == 0:
            continue
        q = p + s * dirv
        vals.append(abs(discriminant_eval(np.array([1.0, q[0], q[1]]), dctx)))
    return center / np.median(vals)


# --------------------------------------------------------------------------
# degree check


@dataclass
class DegreeReport:
    expected: int
    trials: list  # (err_d, err_d_minus_1)
    passed: bool

    def lines(self) -> list[str]:
        out = [f"expected degree d = {self.expected}"]
        for i, (a, b) in enumerate(self.trials):
            out.append(f"line {i}: degree-{self.expected} held-out error {a:.3e}; degree-{self.expected - 1} held-out error {b:.3e}")
        out.append(f"degree = {self.expected} {'CONFIRMED' if self.passed else 'NOT CONFIRMED'}")
        return out


def _circle_nodes(n: int, rho: float, phase: float = 0.0) -> np.ndarray:
    return rho * np.exp(2j * np.pi * (np.arange(n) + phase) / n)


def _fit_predict(nodes, vals, deg, held, rho):
    V = np.vander(nodes / rho, deg + 1, increasing=True)
    c = np.linalg.lstsq(V, vals, rcond=None)[0]
    return np.vander(held / rho, deg + 1, increasing=True) @ c


def _line_radius(fun, d: int, margin: float) -> float:
    """Radius enclosing every zero of t -> Delta(a + t b), with a margin factor."""
    nodes = _circle_nodes(d + 1, 1.0)
    vals = np.array([fun(t) for t in nodes])
    c = np.fft.fft(vals) / (d + 1)  # coefficients of the interpolant on roots of unity
    c = c[: d + 1]
    if abs(c[d]) == 0:
        return 1.0
    r = np.abs(np.roots(c[::-1]))
    return float(margin * max(1.0, r.max()))


def degree_check(dctx: DiscriminantContext, trials: int = 3, seed: int = 0, margin: float = 3.0,
                 pass_tol: float = 1e-6, reject_tol: float = 1e-2) -> DegreeReport:
    """Confirm deg Delta = d by interpolation on random complex lines.

    Nodes are roots of unity scaled to a circle |t| = rho that encloses all
    zeros of the restriction, so |Delta| varies little over the nodes and the
    pointwise relative error is meaningful at every held-out point.
    """
    d = dctx.degree
    rng = np.random.default_rng(seed)
    n = dctx.pencil.n + 1
    results = []
    for _ in range(trials):
        for _attempt in range(5):
            a = rng.normal(size=n) + 1j * rng.normal(size=n)
            b = rng.normal(size=n) + 1j * rng.normal(size=n)
            fun = lambda t: discriminant_eval(a + t * b, dctx)  # noqa: E731
            try:
                rho = _line_radius(fun, d, margin)
                nd = _circle_nodes(d + 1, rho)
                vd = np.array([fun(t) for t in nd])
                nm = _circle_nodes(d, rho, 0.5)
                vm = np.array([fun(t) for t in nm])
                held = rho * np.exp(2j * np.pi * rng.uniform(size=5))
                vh = np.array([fun(t) for t in held])
            except ArithmeticError:
                continue
            if not (np.all(np.isfinite(vd)) and np.all(np.isfinite(vm)) and np.all(np.isfinite(vh))) or np.any(vh == 0):
                continue
            err_d = float(np.max(np.abs(_fit_predict(nd, vd, d, held, rho) - vh) / np.abs(vh)))
            err_m = float(np.max(np.abs(_fit_predict(nm, vm, d - 1, held, rho) - vh) / np.abs(vh))) if d > 0 else np.inf
            results.append((err_d, err_m))
            break
        else:
            raise TraceError("could not find a well-conditioned line")
    passed = all(a < pass_tol and b > reject_tol for a, b in results)
    return DegreeReport(d, results, passed)


# --------------------------------------------------------------------------
# fitting and export


def fit_circle(P: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Least-squares circle; returns center, radius and max radial residual."""
    P = np.asarray(P, dtype=float)
    M = np.column_stack([2 * P[:, 0], 2 * P[:, 1], np.ones(len(P))])
    rhs = (P**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    c = sol[:2]
    r = np.sqrt(sol[2] + c @ c)
    res = np.abs(np.linalg.norm(P - c, axis=1) - r).max()
    return c, float(r), float(res)


def fit_conic(P: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest singular vector of the conic design matrix and its singular value ratio."""
    P = np.asarray(P, dtype=float)
    x, y = P[:, 0], P[:, 1]
    M = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    return vt[-1], float(s[-1] / s[0])


def write_trace_csv(curve: TracedCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["oval_id", "s", "x1", "x2", "residual"])
        for oid, (pts, ph) in enumerate(zip(curve.samples, curve.params)):
            res = curve.residuals[oid] if oid < len(curve.residuals) else None
            for i, (p, s) in enumerate(zip(pts, ph)):
                r = ""
                if res is not None and len(res) and i % max(1, len(pts) // max(len(res), 1)) == 0:
                    k = i // max(1, len(pts) // len(res))
                    r = f"{res[k]:.17g}" if k < len(res) else ""
                w.writerow([oid, f"{s:.17g}", f"{p[0]:.17g}", f"{p[1]:.17g}", r])


def trace_svg(curve: TracedCurve, size: int = 512) -> str:
    from .cli import svg_document, svg_polyline

    body = ['<rect x="-1" y="-1" width="2" height="2" fill="none" stroke="#888888" stroke-width="0.006"/>']
    for pts in curve.samples:
        if len(pts):
            body.append(svg_polyline(pts, stroke="#000000"))
    return svg_document(body, size)
