"""Weighted domino shuffling for periodic Aztec diamonds.

Geometry.  The order-n Aztec diamond is the union of unit squares with
centres (x, y), |x| + |y| <= n.  A *cell* of order n is a lattice point
p = (u, v) with |u| + |v| <= n - 1 and u + v + n odd; its block is the 2x2
square around p.  Every domino of an order-n tiling is one of the four
halves of exactly one block: N (top), E (right), S (bottom), W (left).
Cells are indexed on an n x n grid by a = (u + v + n - 1)/2 and
b = (v - u + n - 1)/2.

Weights live on cells as four arrays (N, E, S, W).  Shuffling from order
m - 1 to m moves N dominoes up, S down, E right and W left, annihilates
colliding pairs and fills empty blocks with a parallel pair, horizontal
with probability N*S / (N*S + E*W) at that cell.  The order-(m-1) weights
come from the order-m ones by urban renewal.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .aztec_curve import PeriodicWeights

__all__ = [
    "ShuffleError",
    "Tiling",
    "cell_weights",
    "sample",
    "sample_cells",
    "enumerate_tilings",
    "tiling_probabilities",
    "square_types",
    "height_function",
    "empirical_boundary",
    "cell_state_entropy",
    "local_roughness",
    "roughness_lag",
    "BoundaryCloud",
    "compare_boundary",
    "hausdorff",
    "tiling_svg",
    "write_binary",
    "read_binary",
]

TYPES = "NESW"
N_, E_, S_, W_ = range(4)


class ShuffleError(ValueError):
    pass


@dataclass
class Tiling:
    """Dominoes as four boolean n x n arrays over the cell grid (N, E, S, W)."""

    n: int
    cells: np.ndarray  # shape (4, n, n), bool
    log_weight: float = float("nan")

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    def dominoes(self) -> list[tuple[int, int, str]]:
        t, a, b = np.nonzero(self.cells)
        return [(int(x), int(y), TYPES[z]) for z, x, y in zip(t, a, b)]

    def key(self) -> bytes:
        return np.packbits(self.cells).tobytes()

    def check_cover(self) -> None:
        cov = _coverage(self.n, self.cells)
        if not np.all(cov[_diamond_mask(self.n)] == 1) or np.any(cov[~_diamond_mask(self.n)]):
            raise ShuffleError("tiling is not an exact cover")
        if self.count != self.n * (self.n + 1):
            raise ShuffleError("wrong number of dominoes")


# --------------------------------------------------------------------------
# geometry helpers


def _cell_centers(n: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return a - b, a + b - (n - 1)


# doubled offsets of the two squares of each domino type relative to 2p
_OFFS = {
    N_: ((-1, 1), (1, 1)),
    E_: ((1, 1), (1, -1)),
    S_: ((-1, -1), (1, -1)),
    W_: ((-1, 1), (-1, -1)),
}


def _square_index(n: int, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Doubled odd square coordinates -> indices into a 2n x 2n array."""
    return (X + 2 * n - 1) // 2, (Y + 2 * n - 1) // 2


def _diamond_mask(n: int) -> np.ndarray:
    X = 2 * np.arange(2 * n) - (2 * n - 1)
    XX, YY = np.meshgrid(X, X, indexing="ij")
    return np.abs(XX) + np.abs(YY) <= 2 * n


def _coverage(n: int, cells: np.ndarray) -> np.ndarray:
    cov = np.zeros((2 * n, 2 * n), dtype=int)
    u, v = _cell_centers(n)
    for t in range(4):
        sel = cells[t]
        for dx, dy in _OFFS[t]:
            i, j = _square_index(n, 2 * u[sel] + dx, 2 * v[sel] + dy)
            np.add.at(cov, (i, j), 1)
    return cov


def square_types(t: Tiling) -> np.ndarray:
    """2n x 2n array: domino type covering each square, -1 outside."""
    n = t.n
    out = np.full((2 * n, 2 * n), -1, dtype=int)
    u, v = _cell_centers(n)
    for k in range(4):
        sel = t.cells[k]
        for dx, dy in _OFFS[k]:
            i, j = _square_index(n, 2 * u[sel] + dx, 2 * v[sel] + dy)
            out[i, j] = k
    return out


def square_coordinates(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Macroscopic coordinates of square centres, in the square [-1, 1]^2."""
    X = (2 * np.arange(2 * n) - (2 * n - 1)) / 2
    XX, YY = np.meshgrid(X, X, indexing="ij")
    return (XX + YY) / n, (YY - XX) / n


# --------------------------------------------------------------------------
# weights


def cell_weights(w: PeriodicWeights, n: int) -> np.ndarray:
    """(4, n, n) array of N, E, S, W weights of the order-n diamond.

    Cell (a, b) carries alpha, beta, gamma with column index i = a mod l and
    row index j = b mod k.  alpha sits opposite the unit edge and beta
    opposite gamma, so every face has weight alpha / (beta gamma) or its
    inverse, matching the spectral curve.
    """
    al = np.array(w.alpha, dtype=float)
    be = np.array(w.beta, dtype=float)
    ga = np.array(w.gamma, dtype=float)
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i = a % w.l
    j = b % w.k
    out = np.empty((4, n, n))
    out[N_] = al[j, i]
    out[S_] = 1.0
    out[E_] = be[j, i]
    out[W_] = ga[j, i]
    return out


def _reduce(W: np.ndarray) -> np.ndarray:
    """Urban renewal: order-m weights -> order-(m-1) weights."""
    m = W.shape[1]
    D = W[N_] * W[S_] + W[E_] * W[W_]
    out = np.empty((4, m - 1, m - 1))
    out[N_] = (W[N_] / D)[1:, 1:]
    out[S_] = (W[S_] / D)[:-1, :-1]
    out[E_] = (W[E_] / D)[1:, :-1]
    out[W_] = (W[W_] / D)[:-1, 1:]
    # a global factor does not change the measure; keep values near one
    out /= np.exp(np.mean(np.log(out)))
    return out


def _weight_pyramid(W: np.ndarray) -> list[np.ndarray]:
    levels = [W]
    while levels[-1].shape[1] > 1:
        levels.append(_reduce(levels[-1]))
    return levels[::-1]  # index m-1 holds order m


def _stage_rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), stage]))


def _shuffle_step(cells: np.ndarray, W: np.ndarray, u01: np.ndarray) -> np.ndarray:
    m = W.shape[1]
    out = np.zeros((4, m, m), dtype=bool)
    out[N_, 1:, 1:] = cells[N_]
    out[S_, :-1, :-1] = cells[S_]
    out[E_, 1:, :-1] = cells[E_]
    out[W_, :-1, 1:] = cells[W_]
    # a cell that received anything (even a pair that annihilates) is not refilled
    empty = ~out.any(axis=0)
    clash = out[N_] & out[S_]
    out[N_] &= ~clash
    out[S_] &= ~clash
    clash = out[E_] & out[W_]
    out[E_] &= ~clash
    out[W_] &= ~clash
    horiz = u01 * (W[N_] * W[S_] + W[E_] * W[W_]) < W[N_] * W[S_]
    out[N_] |= empty & horiz
    out[S_] |= empty & horiz
    out[E_] |= empty & ~horiz
    out[W_] |= empty & ~horiz
    return out


def sample_cells(W: np.ndarray, seed: int = 0, check: bool = False) -> Tiling:
    """Sample from the measure given by explicit (4, n, n) cell weights."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 3 or W.shape[0] != 4 or W.shape[1] != W.shape[2]:
        raise ShuffleError("cell weights must have shape (4, n, n)")
    if np.any(W <= 0) or not np.all(np.isfinite(W)):
        raise ShuffleError("weights must be positive and finite")
    n = W.shape[1]
    levels = _weight_pyramid(W)
    cells = np.zeros((4, 0, 0), dtype=bool)
    for m in range(1, n + 1):
        cells = _shuffle_step(cells, levels[m - 1], _stage_rng(seed, m).random((m, m)))
        if check:
            Tiling(m, cells).check_cover()
    t = Tiling(n, cells)
    t.log_weight = float(np.sum(np.log(W)[cells]))
    return t


def sample(w: PeriodicWeights, N: int, seed: int = 0, check: bool = False) -> Tiling:
    """Random tiling of the order-N diamond, exact for the periodic weights."""
    if N < 1:
        raise ShuffleError("N must be at least 1")
    return sample_cells(cell_weights(w, N), seed=seed, check=check)


# --------------------------------------------------------------------------
# enumeration oracle


def enumerate_tilings(n: int) -> list[Tiling]:
    """All tilings of the order-n diamond by backtracking (n <= 4)."""
    if n > 4:
        raise ShuffleError("enumeration is limited to n <= 4")
    u, v = _cell_centers(n)
    mask = _diamond_mask(n)
    options: dict[tuple[int, int], list] = {}
    for t in range(4):
        for a in range(n):
            for b in range(n):
                sq = [_square_index(n, 2 * u[a, b] + dx, 2 * v[a, b] + dy) for dx, dy in _OFFS[t]]
                sq = [(int(i), int(j)) for i, j in sq]
                for s in sq:
                    options.setdefault(s, []).append((t, a, b, sq))
    squares = sorted(zip(*np.nonzero(mask)))
    squares = [(int(i), int(j)) for i, j in squares]
    covered = set()
    chosen: list = []
    out: list[Tiling] = []

    def rec():
        free = next((s for s in squares if s not in covered), None)
        if free is None:
            cells = np.zeros((4, n, n), dtype=bool)
            for t, a, b, _ in chosen:
                cells[t, a, b] = True
            out.append(Tiling(n, cells))
            return
        for t, a, b, sq in options[free]:
            if all(s not in covered for s in sq):
                covered.update(sq)
                chosen.append((t, a, b, sq))
                rec()
                chosen.pop()
                covered.difference_update(sq)

    rec()
    return out


def tiling_probabilities(W: np.ndarray, tilings: Sequence[Tiling]) -> np.ndarray:
    logs = np.array([np.sum(np.log(W)[t.cells]) for t in tilings])
    p = np.exp(logs - logs.max())
    return p / p.sum()


# --------------------------------------------------------------------------
# height function


def _domino_ids(t: Tiling) -> np.ndarray:
    n = t.n
    ids = -np.ones((2 * n, 2 * n), dtype=int)
    u, v = _cell_centers(n)
    base = 0
    for typ in range(4):
        sel = t.cells[typ]
        k = base + np.arange(int(sel.sum()))
        for dx, dy in _OFFS[typ]:
            i, j = _square_index(n, 2 * u[sel] + dx, 2 * v[sel] + dy)
            ids[i, j] = k
        base += int(sel.sum())
    return ids


def height_function(t: Tiling) -> np.ndarray:
    """Heights on the (2n+1) x (2n+1) lattice points; NaN outside the diamond.

    Walking along a unit edge with a dark square on the left changes the
    height by +1, or by -3 when a domino straddles the edge (signs flip with a
    light square on the left).  Vertex (I, J) is the lattice point
    (I - n, J - n).  Raises ShuffleError if the increments are not a gradient.
    """
    n = t.n
    ids = np.pad(_domino_ids(t), 1, constant_values=-1)  # square (i, j) -> ids[i+1, j+1]
    ii, jj = np.meshgrid(np.arange(-1, 2 * n + 1), np.arange(-1, 2 * n + 1), indexing="ij")
    dark = (ii + jj + n) % 2 == 0

    def incr(left, right, left_dark):
        sgn = np.where(left_dark, 1.0, -1.0)
        d = np.where((left >= 0) & (left == right), -3 * sgn, sgn)
        return np.where((left >= 0) | (right >= 0), d, np.nan)

    # +x along row J: left square (I, J), right square (I, J - 1)
    dx = incr(ids[1:-1, 1:], ids[1:-1, :-1], dark[1:-1, 1:])  # (2n, 2n+1)
    # +y along column I: left square (I - 1, J), right square (I, J)
    dy = incr(ids[:-1, 1:-1], ids[1:, 1:-1], dark[:-1, 1:-1])  # (2n+1, 2n)
    occ = ids >= 0
    valid = occ[:-1, :-1] | occ[1:, :-1] | occ[:-1, 1:] | occ[1:, 1:]
    mid = np.concatenate([[0.0], np.cumsum(dy[n])])
    c = np.vstack([np.zeros((1, 2 * n + 1)), np.cumsum(np.nan_to_num(dx), axis=0)])
    H = mid[None, :] + c - c[n][None, :]
    H[~valid] = np.nan
    chk = H[:, 1:] - H[:, :-1] - dy
    chk2 = H[1:, :] - H[:-1, :] - dx
    if max(np.nanmax(np.abs(chk), initial=0.0), np.nanmax(np.abs(chk2), initial=0.0)) > 0:
        raise ShuffleError("height function is path dependent")
    return H


# --------------------------------------------------------------------------
# empirical boundary


@dataclass
class BoundaryCloud:
    points: np.ndarray  # (m, 2), ordered along each contour
    contours: list
    field: np.ndarray  # binned roughness on [-1, 1]^2, axis 0 is x1
    levels: tuple  # (outer, inner); inner is None without a smooth phase

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("contour,x1,x2\r\n")
            for c, pts in enumerate(self.contours):
                for x, y in pts:
                    fh.write(f"{c},{x:.17g},{y:.17g}\r\n")


def cell_state_entropy(samples: Sequence[Tiling]) -> np.ndarray:
    """Entropy across samples of each cell's state (which of N, E, S, W it holds)."""
    n = samples[0].n
    codes = np.stack([(s.cells * np.array([1, 2, 4, 8])[:, None, None]).sum(axis=0) for s in samples])
    ent = np.zeros((n, n))
    for c in np.unique(codes):
        p = (codes == c).mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent -= np.where(p > 0, p * np.log(p), 0.0)
    return ent


def roughness_lag(n: int) -> int:
    return max(2, n // 40)


def local_roughness(heights: np.ndarray, lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Variance across samples of height increments over `lag` lattice steps.

    `heights` is (samples, 2n+1, 2n+1).  Returns macroscopic midpoints (m, 2)
    and the variances (m,) for increments along both lattice axes.  Frozen and
    smooth phases have O(1) increment variance, the rough phase grows like
    log(lag).
    """
    H = np.asarray(heights, dtype=float)
    n = (H.shape[1] - 1) // 2
    I, J = np.meshgrid(np.arange(2 * n + 1), np.arange(2 * n + 1), indexing="ij")
    X1 = (I + J - 2 * n) / n
    X2 = (J - I) / n
    pts, vals = [], []
    for ax in (1, 2):
        sl_a = [slice(None)] * 3
        sl_b = [slice(None)] * 3
        sl_a[ax] = slice(lag, None)
        sl_b[ax] = slice(None, -lag)
        var = np.var(H[tuple(sl_a)] - H[tuple(sl_b)], axis=0)
        ok = ~np.isnan(var)
        for X in (X1, X2):
            mid = (X[tuple(sl_a[1:])] + X[tuple(sl_b[1:])]) / 2
            pts.append(mid[ok])
        vals.append(var[ok])
    P = np.c_[np.concatenate(pts[0::2]), np.concatenate(pts[1::2])]
    return P, np.concatenate(vals)


def _bin_field(P, V, bins, smooth):
    from scipy.ndimage import gaussian_filter

    i1 = np.clip(((P[:, 0] + 1) / 2 * bins).astype(int), 0, bins - 1)
    i2 = np.clip(((P[:, 1] + 1) / 2 * bins).astype(int), 0, bins - 1)
    tot = np.zeros((bins, bins))
    num = np.zeros((bins, bins))
    np.add.at(tot, (i1, i2), V)
    np.add.at(num, (i1, i2), 1)
    f = np.where(num > 0, tot / np.maximum(num, 1), 0.0)
    return gaussian_filter(f, smooth, mode="constant") if smooth else f


def empirical_boundary(samples: Sequence[Tiling], bins: int = 80, min_samples: int = 30,
                       smooth: float = 1.0, lag: int | None = None) -> BoundaryCloud:
    """Phase boundaries from the local height roughness of the samples.

    The binned roughness has three plateaus: ~0 in frozen regions, a high
    rough level, and an intermediate smooth (gas) level inside bubbles.  Each
    boundary is the level set halfway between the two plateaus it separates.
    The rough/gas split only applies inside holes of the rough region.
    """
    from scipy.ndimage import binary_fill_holes
    from skimage.measure import find_contours

    if len(samples) < min_samples:
        raise ShuffleError("insufficient statistics")
    n = samples[0].n
    if any(s.n != n for s in samples):
        raise ShuffleError("samples must share the same order")
    lag = roughness_lag(n) if lag is None else int(lag)
    H = np.stack([height_function(s) for s in samples])
    f = _bin_field(*local_roughness(H, lag), bins, smooth)
    if f.max() <= 0:
        raise ShuffleError("no boundary found")
    rough = f >= 0.5 * f.max()
    filled = binary_fill_holes(rough)
    holes = filled & ~rough
    rough_level = float(np.median(f[rough]))
    outer = 0.5 * rough_level
    raw = list(find_contours(np.pad(f, 1), outer))
    inner = None
    if holes.any():
        gas_level = float(np.median(f[holes]))
        inner = 0.5 * (gas_level + rough_level)
        # outside the filled rough region is masked to the rough level so
        # only the bubble contours are picked up
        g = np.where(filled, f, rough_level)
        raw += find_contours(np.pad(g, 1, constant_values=rough_level), inner)
    contours = [(c - 1 + 0.5) / bins * 2 - 1 for c in raw]
    if not contours:
        raise ShuffleError("no boundary found")
    return BoundaryCloud(np.concatenate(contours), contours, f, (outer, inner))


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between finite point sets (sup-norm metric)."""
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    B = np.asarray(B, dtype=float).reshape(-1, 2)
    if len(A) == 0 or len(B) == 0:
        raise ShuffleError("empty point set")
    da, _ = cKDTree(B).query(A, p=np.inf)
    db, _ = cKDTree(A).query(B, p=np.inf)
    return float(max(da.max(), db.max()))


def compare_boundary(cloud, traced) -> float:
    P = cloud.points if hasattr(cloud, "points") else np.asarray(cloud)
    Q = traced.points() if hasattr(traced, "points") and callable(traced.points) else np.asarray(traced)
    return hausdorff(P, Q)


# --------------------------------------------------------------------------
# export

_COLORS = {N_: "#1f4e9c", E_: "#d9a321", S_: "#2e8b57", W_: "#b22222"}


def tiling_svg(t: Tiling, size: int = 512) -> str:
    from .cli import svg_document

    n = t.n
    u, v = _cell_centers(n)
    body = []
    for typ in range(4):
        for a, b in zip(*np.nonzero(t.cells[typ])):
            (dx1, dy1), (dx2, dy2) = _OFFS[typ]
            cx = (2 * u[a, b] + (dx1 + dx2) / 2) / 2
            cy = (2 * v[a, b] + (dy1 + dy2) / 2) / 2
            wdt, hgt = (2, 1) if typ in (N_, S_) else (1, 2)
            # rotate the diamond into [-1, 1]^2
            corners = [(cx + sx * wdt / 2, cy + sy * hgt / 2) for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
            pts = " ".join(f"{(x + y) / n:.6f},{-(y - x) / n:.6f}" for x, y in corners)
            body.append(f'<polygon points="{pts}" fill="{_COLORS[typ]}" stroke="none"/>')
    return svg_document(body, size)


_MAGIC = b"AZTL"


def write_binary(t: Tiling, path: str | Path) -> None:
    """Header (magic, version, n) then packed N, E, S, W bit planes."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<HI", 1, t.n))
        fh.write(np.packbits(t.cells.astype(np.uint8)).tobytes())


def read_binary(path: str | Path) -> Tiling:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ShuffleError("not a tiling file")
    ver, n = struct.unpack("<HI", raw[4:10])
    if ver != 1:
        raise ShuffleError(f"unsupported version {ver}")
    bits = np.unpackbits(np.frombuffer(raw[10:], dtype=np.uint8))[: 4 * n * n]
    return Tiling(n, bits.reshape(4, n, n).astype(bool))
