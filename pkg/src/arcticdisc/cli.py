"""Command-line front end: ``arcticdisc COMMAND --weights FILE [options]``."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_USAGE = 64

COMMANDS = ("validate", "curve", "trace", "disc-eval", "degree-check", "sample", "compare")

USAGE = """usage: arcticdisc COMMAND --weights PATH [options]

commands:
  validate       positivity / strict inequality / genus / angle report
  curve          spectral curve as JSON
  trace          arctic curve samples (CSV + SVG)
  disc-eval      discriminant on a grid of x = (1, x1, x2) (CSV + heat map SVG)
  degree-check   interpolation check of the discriminant degree
  sample         random tilings (SVG + binary grid)
  compare        empirical boundary vs traced curve (Hausdorff report)

options:
  --weights PATH   weight file (JSON, decimal strings)
  --config PATH    run config (JSON); flags override file values
  --out DIR        output directory (default: .)
  --strict         require beta^v < 1 < alpha^v / gamma^v
  --precision BITS working precision (default 53)
  --seed U64       random seed (default 0)
  --samples N      tilings to draw (sample: 1, compare: 50)
  --order N        Aztec diamond order (sample: 50, compare: 300)
  --bins B         bins per axis for the empirical boundary (default 80)
  --trials T       random lines for degree-check (default 3)
  --grid W:H:xmin:xmax:ymin:ymax   disc-eval grid (default 41:41:-1:1:-1:1)
"""


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


# --------------------------------------------------------------------------
# SVG helpers (shared with arctic.trace_svg and shuffler.tiling_svg)


def svg_document(body: Sequence[str], size: int = 512) -> str:
    """SVG 1.1 document with viewBox [-1, 1]^2; y points down, callers flip."""
    head = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
            'viewBox="-1 -1 2 2">\n')
    return head + "".join(line + "\n" for line in body) + "</svg>\n"


def _xy(p) -> str:
    # -0.0 and 0.0 print the same so output stays byte-stable
    return f"{float(p[0]) + 0.0:.6f},{-float(p[1]) + 0.0:.6f}"


def svg_polyline(pts, stroke: str = "#000000", width: float = 0.006, closed: bool = False) -> str:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    tag = "polygon" if closed else "polyline"
    coords = " ".join(_xy(p) for p in pts)
    return f'<{tag} points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"/>'


def svg_marker(p, radius: float = 0.015, fill: str = "#000000") -> str:
    x, y = _xy(p).split(",")
    return f'<circle cx="{x}" cy="{y}" r="{radius}" fill="{fill}"/>'


# a short viridis-like ramp; interpolated linearly
_RAMP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float)


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    c = _RAMP[i] + (t - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


@dataclass
class Grid:
    """Values of Delta on a regular grid; values[i, j] sits at (x1[i], x2[j])."""

    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray


def _heatmap(grid: Grid) -> list[str]:
    from skimage.measure import find_contours

    v = np.asarray(grid.values, dtype=complex)
    x1, x2 = np.asarray(grid.x1, float), np.asarray(grid.x2, float)
    ok = np.isfinite(v)
    mag = np.where(ok, np.abs(v), np.nan)
    with np.errstate(divide="ignore"):
        lg = np.log10(mag)
    fin = lg[np.isfinite(lg)]
    lo, hi = (float(fin.min()), float(fin.max())) if fin.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    dx = (x1[-1] - x1[0]) / max(len(x1) - 1, 1) if len(x1) > 1 else 2.0
    dy = (x2[-1] - x2[0]) / max(len(x2) - 1, 1) if len(x2) > 1 else 2.0
    body = []
    for i, a in enumerate(x1):
        for j, b in enumerate(x2):
            if not ok[i, j]:
                continue
            col = _color((lg[i, j] - lo) / span) if np.isfinite(lg[i, j]) else "#000000"
            body.append(f'<rect x="{a - dx / 2 + 0.0:.6f}" y="{-b - dy / 2 + 0.0:.6f}" '
                        f'width="{dx:.6f}" height="{dy:.6f}" fill="{col}" stroke="none"/>')
    # Delta is real up to a constant phase; its zero set is where the
    # phase-corrected real part changes sign
    if ok.any() and len(x1) > 1 and len(x2) > 1:
        k = np.nanargmax(np.where(ok, np.abs(v), -1.0))
        ph = v.flat[k] / abs(v.flat[k]) if abs(v.flat[k]) > 0 else 1.0
        re = np.where(ok, (v / ph).real, 0.0)
        for c in find_contours(re, 0.0):
            pts = np.c_[np.interp(c[:, 0], np.arange(len(x1)), x1), np.interp(c[:, 1], np.arange(len(x2)), x2)]
            body.append(svg_polyline(pts, stroke="#000000", width=0.012))
    return body


def plot(obj, style: str = "auto", size: int = 512) -> str:
    """SVG for a Grid (heat map + zero contour), a traced curve, a point set or a Tiling."""
    from .arctic import TracedCurve
    from .shuffler import Tiling, tiling_svg

    if isinstance(obj, Tiling):
        return tiling_svg(obj, size)
    if isinstance(obj, Grid):
        if np.asarray(obj.values).size == 0:
            raise ValueError("empty grid")
        return svg_document(_heatmap(obj), size)
    if isinstance(obj, TracedCurve):
        curves = [np.asarray(s, float).reshape(-1, 2) for s in obj.samples]
    elif isinstance(obj, (list, tuple)) and obj and np.ndim(obj[0]) == 2:
        curves = [np.asarray(s, float).reshape(-1, 2) for s in obj]
    else:
        curves = [np.asarray(obj, float).reshape(-1, 2)]
    curves = [c for c in curves if len(c)]
    if not curves:
        raise ValueError("nothing to plot")
    body = ['<rect x="-1" y="-1" width="2" height="2" fill="none" stroke="#888888" stroke-width="0.006"/>']
    for c in curves:
        if len(c) == 1 or style == "points":
            body.extend(svg_marker(p) for p in c)
        else:
            body.append(svg_polyline(c))
    return svg_document(body, size)


# --------------------------------------------------------------------------
# config


@dataclass
class RunConfig:
    command: str
    weights: Path | None = None
    out: Path = Path(".")
    precision: int = 53
    seed: int = 0
    strict: bool = False
    samples: int | None = None
    order: int | None = None
    bins: int = 80
    trials: int = 3
    grid: tuple = (41, 41, -1.0, 1.0, -1.0, 1.0)
    extra: dict = field(default_factory=dict)

    def check(self) -> None:
        if self.weights is None:
            raise ValidationFailure("--weights is required")
        if not Path(self.weights).is_file():
            raise ValidationFailure(f"weight file not found: {self.weights}")
        for name in ("samples", "order", "bins", "trials", "precision"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValidationFailure(f"{name} must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValidationFailure("seed must fit in an unsigned 64-bit integer")
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise ValidationFailure("grid sizes must be positive")

    @property
    def theta_tol(self) -> float:
        return max(2.0 ** -self.precision, 1e-300)

    @property
    def nodes(self) -> int:
        return 80 if self.precision <= 53 else int(np.ceil(80 * self.precision / 53))


def parse_grid(s: str) -> tuple:
    parts = s.split(":")
    if len(parts) != 6:
        raise UsageError("--grid expects W:H:xmin:xmax:ymin:ymax")
    try:
        return (int(parts[0]), int(parts[1])) + tuple(float(p) for p in parts[2:])
    except ValueError as exc:
        raise UsageError(f"bad --grid value: {s}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="arcticdisc", add_help=False, usage=argparse.SUPPRESS)
    p.add_argument("command", nargs="?")
    p.add_argument("--weights")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--precision", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--grid")
    p.add_argument("-h", "--help", action="store_true")
    return p


def build_config(argv: Sequence[str]) -> RunConfig:
    ns = _parser().parse_args(list(argv))
    if ns.help:
        raise UsageError("")
    if ns.command not in COMMANDS:
        raise UsageError(f"unknown command: {ns.command}" if ns.command else "missing command")
    file_vals: dict = {}
    if ns.config:
        try:
            file_vals = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationFailure(f"cannot read config: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    cfg = RunConfig(command=ns.command)
    for k, v in file_vals.items():
        key = k.replace("-", "_")
        if key not in known or key == "command":
            cfg.extra[k] = v
        elif key == "grid":
            cfg.grid = parse_grid(v) if isinstance(v, str) else tuple(v)
        elif key in ("weights", "out"):
            # relative paths in a config file are relative to that file
            pth = Path(v)
            cfg.__setattr__(key, pth if pth.is_absolute() else Path(ns.config).parent / pth)
        elif key == "strict":
            cfg.strict = bool(v)
        else:
            try:
                setattr(cfg, key, int(v))
            except (TypeError, ValueError) as exc:
                raise ValidationFailure(f"config field {k} must be an integer") from exc
    for key in ("precision", "seed", "samples", "order", "bins", "trials"):
        v = getattr(ns, key)
        if v is not None:
            setattr(cfg, key, v)
    if ns.weights:
        cfg.weights = Path(ns.weights)
    if ns.out:
        cfg.out = Path(ns.out)
    if ns.strict:
        cfg.strict = True
    if ns.grid:
        cfg.grid = parse_grid(ns.grid)
    return cfg


# --------------------------------------------------------------------------
# commands


def _load_weights(cfg: RunConfig):
    from .aztec_curve import PeriodicWeights

    try:
        return PeriodicWeights.from_json(Path(cfg.weights))
    except (KeyError, ValueError, TypeError, ZeroDivisionError, json.JSONDecodeError) as exc:
        raise ValidationFailure(f"bad weight file: {exc}") from exc


def _checked_curve(cfg: RunConfig):
    from .aztec_curve import DegenerateModelWarning, build_curve, validate

    w = _load_weights(cfg)
    rep = validate(w, strict=cfg.strict)
    if not rep.ok:
        raise ValidationFailure("; ".join(rep.problems) or "invalid weights")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        return w, build_curve(w)


def _pencil(cfg: RunConfig, curve):
    from .pencil import build_dF

    return build_dF(curve, nodes=cfg.nodes, seed=cfg.seed, theta_tol=cfg.theta_tol)


def _emit(lines: Sequence[str], path: Path) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    path.write_text(text)


def cmd_validate(cfg: RunConfig) -> int:
    from .aztec_curve import validate

    w = _load_weights(cfg)
    rep = validate(w, strict=cfg.strict)
    _emit(rep.lines() + [f"status: {'OK' if rep.ok else 'FAIL'}"], cfg.out / "validate.txt")
    return EXIT_OK if rep.ok else EXIT_INVALID


def curve_json(curve) -> dict:
    doc = {
        "weights": curve.weights.to_json(),
        "polynomial": str(curve.P.as_expr()),
        "genus": curve.genus,
        "expected_genus": curve.expected_genus,
        "angles": [a.label for a in curve.angles],
    }
    h = curve.hyperelliptic
    if h is not None:
        doc["hyperelliptic_f"] = [str(c) if h.f.exact else f"{complex(c).real:.17g}" for c in h.f.coeffs]
        doc["branch_points"] = [[f"{b.real:.17g}", f"{b.imag:.17g}"] for b in h.branch_points()]
    return doc


def cmd_curve(cfg: RunConfig) -> int:
    _, curve = _checked_curve(cfg)
    text = json.dumps(curve_json(curve), indent=2, sort_keys=True) + "\n"
    (cfg.out / "curve.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_trace(cfg: RunConfig) -> int:
    from .arctic import trace, trace_svg, write_trace_csv

    _, curve = _checked_curve(cfg)
    tc = trace(_pencil(cfg, curve), samples_per_oval=cfg.samples or 400)
    write_trace_csv(tc, cfg.out / "trace.csv")
    (cfg.out / "trace.svg").write_text(trace_svg(tc))
    sys.stdout.write(f"ovals: {len(tc.samples)}\npoints: {sum(len(s) for s in tc.samples)}\n")
    return EXIT_OK


def evaluate_grid(dctx, grid: tuple) -> Grid:
    from .disc_engine import DiscError, discriminant_eval

    W, H, x0, x1, y0, y1 = grid
    xs = np.linspace(x0, x1, W) if W > 1 else np.array([(x0 + x1) / 2])
    ys = np.linspace(y0, y1, H) if H > 1 else np.array([(y0 + y1) / 2])
    vals = np.empty((W, H), dtype=complex)
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            try:
                vals[i, j] = discriminant_eval(np.array([1.0, a, b]), dctx)
            except DiscError:
                vals[i, j] = complex(np.nan, np.nan)
    return Grid(xs, ys, vals)


def cmd_disc_eval(cfg: RunConfig) -> int:
    from .disc_engine import make_context, write_grid_csv

    _, curve = _checked_curve(cfg)
    dctx = make_context(_pencil(cfg, curve), seed=cfg.seed)
    g = evaluate_grid(dctx, cfg.grid)
    rows = [(a, b, g.values[i, j]) for i, a in enumerate(g.x1) for j, b in enumerate(g.x2)]
    write_grid_csv(cfg.out / "disc.csv", rows)
    (cfg.out / "disc.svg").write_text(plot(g))
    bad = int(np.sum(~np.isfinite(g.values)))
    sys.stdout.write(f"grid points: {len(rows)}\nundefined: {bad}\n")
    return EXIT_OK


def cmd_degree_check(cfg: RunConfig) -> int:
    from .arctic import degree_check
    from .disc_engine import make_context

    _, curve = _checked_curve(cfg)
    dctx = make_context(_pencil(cfg, curve), seed=cfg.seed)
    rep = degree_check(dctx, trials=cfg.trials, seed=cfg.seed)
    _emit(rep.lines(), cfg.out / "degree.txt")
    return EXIT_OK if rep.passed else EXIT_INVALID


def cmd_sample(cfg: RunConfig) -> int:
    from .shuffler import sample, tiling_svg, write_binary

    w, _ = _checked_curve(cfg)
    n = cfg.order or 50
    for i in range(cfg.samples or 1):
        t = sample(w, n, seed=cfg.seed + i)
        (cfg.out / f"tiling_{i:04d}.svg").write_text(tiling_svg(t))
        write_binary(t, cfg.out / f"tiling_{i:04d}.aztl")
    sys.stdout.write(f"tilings: {cfg.samples or 1}\norder: {n}\n")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    from .arctic import trace, trace_svg
    from .shuffler import compare_boundary, empirical_boundary, sample

    w, curve = _checked_curve(cfg)
    n = cfg.order or 300
    m = cfg.samples or 50
    tc = trace(_pencil(cfg, curve), samples_per_oval=400)
    tilings = [sample(w, n, seed=cfg.seed + i) for i in range(m)]
    cloud = empirical_boundary(tilings, bins=cfg.bins)
    cloud.to_csv(cfg.out / "boundary.csv")
    (cfg.out / "trace.svg").write_text(trace_svg(tc))
    (cfg.out / "boundary.svg").write_text(plot(cloud.contours))
    d = compare_boundary(cloud, tc)
    _emit([f"order: {n}", f"samples: {m}", f"bins: {cfg.bins}", f"hausdorff: {d:.6f}"],
          cfg.out / "compare.txt")
    return EXIT_OK


_DISPATCH = {
    "validate": cmd_validate,
    "curve": cmd_curve,
    "trace": cmd_trace,
    "disc-eval": cmd_disc_eval,
    "degree-check": cmd_degree_check,
    "sample": cmd_sample,
    "compare": cmd_compare,
}


def run(command: str, config: RunConfig) -> int:
    config.command = command
    config.check()
    config.out.mkdir(parents=True, exist_ok=True)
    return _DISPATCH[command](config)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = build_config(argv)
        return run(cfg.command, cfg)
    except UsageError as exc:
        if str(exc):
            sys.stderr.write(f"arcticdisc: {exc}\n")
        sys.stderr.write(USAGE)
        return EXIT_USAGE
    except ValidationFailure as exc:
        sys.stderr.write(f"arcticdisc: validation failed: {exc}\n")
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"arcticdisc: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
