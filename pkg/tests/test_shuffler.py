from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from arcticdisc.aztec_curve import PeriodicWeights
from arcticdisc.shuffler import (
    ShuffleError,
    Tiling,
    cell_state_entropy,
    cell_weights,
    compare_boundary,
    empirical_boundary,
    enumerate_tilings,
    hausdorff,
    height_function,
    read_binary,
    sample,
    sample_cells,
    tiling_probabilities,
    tiling_svg,
    write_binary,
)

UNI = PeriodicWeights.uniform()
# 2x2 uniform except one doubled alpha
ONE_DOUBLED = PeriodicWeights(2, 2, [[2, 1], [1, 1]], [[1, 1], [1, 1]], [[1, 1], [1, 1]])


def frequencies(w, n, draws, seed0=0):
    tilings = enumerate_tilings(n)
    index = {t.key(): i for i, t in enumerate(tilings)}
    counts = np.zeros(len(tilings))
    for s in range(seed0, seed0 + draws):
        counts[index[sample(w, n, seed=s).key()]] += 1
    return tilings, counts


@pytest.mark.parametrize("n,count", [(1, 2), (2, 8), (3, 64), (4, 1024)])
def test_enumeration_counts(n, count):
    tilings = enumerate_tilings(n)
    assert len(tilings) == count
    assert len({t.key() for t in tilings}) == count
    for t in tilings:
        t.check_cover()


def test_n1_uniform_frequency():
    _, counts = frequencies(UNI, 1, 10_000)
    assert np.all(np.abs(counts / counts.sum() - 0.5) < 0.02)


def test_n2_uniform_chi_square():
    _, counts = frequencies(UNI, 2, 8000)
    assert chisquare(counts).pvalue > 0.01


def test_n2_weighted_within_3_sigma():
    draws = 8000
    tilings, counts = frequencies(ONE_DOUBLED, 2, draws)
    p = tiling_probabilities(cell_weights(ONE_DOUBLED, 2), tilings)
    assert len(set(np.round(p, 12))) > 1
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) <= 3 * sigma)


def test_tiling_probabilities_uniform():
    p = tiling_probabilities(cell_weights(UNI, 3), enumerate_tilings(3))
    assert np.allclose(p, 1 / 64)


def test_n3_total_variation_small():
    draws = 4000
    w = PeriodicWeights(1, 1, [[3]], [[F(1, 2)]], [[1]])
    tilings, counts = frequencies(w, 3, draws)
    p = tiling_probabilities(cell_weights(w, 3), tilings)
    tv = 0.5 * np.abs(counts / draws - p).sum()
    # expected TV of an exact sampler at 4000 draws over 64 outcomes is a few hundredths
    assert tv < 0.06


def test_sampler_is_deterministic_under_seed():
    a = sample(ONE_DOUBLED, 12, seed=5)
    b = sample(ONE_DOUBLED, 12, seed=5)
    assert a.key() == b.key() and a.log_weight == b.log_weight
    assert sample(ONE_DOUBLED, 12, seed=6).key() != a.key()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_exact_cover_and_height(n, seed):
    t = sample(ONE_DOUBLED, n, seed=seed, check=True)
    t.check_cover()
    assert t.count == n * (n + 1)
    H = height_function(t)
    assert H.shape == (2 * n + 1, 2 * n + 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_binary_round_trip(tmp_path_factory, n, seed):
    t = sample(UNI, n, seed=seed)
    path = tmp_path_factory.mktemp("bin") / "t.aztl"
    write_binary(t, path)
    back = read_binary(path)
    assert back.n == n and np.array_equal(back.cells, t.cells)


def test_boundary_heights_are_tiling_independent():
    Hs = [height_function(t) for t in enumerate_tilings(3)]
    valid = ~np.isnan(Hs[0])
    assert all(np.array_equal(~np.isnan(H), valid) for H in Hs)
    # interior vertices vary, boundary vertices do not
    edge = valid & ~np.roll(valid, 1, 0) | valid & ~np.roll(valid, -1, 0) | valid & ~np.roll(valid, 1, 1) | valid & ~np.roll(valid, -1, 1)
    ref = Hs[0][edge]
    assert all(np.array_equal(H[edge], ref) for H in Hs)
    assert len({H[valid].tobytes() for H in Hs}) == 64


def test_check_cover_detects_a_bad_cover():
    t = enumerate_tilings(2)[0]
    cells = t.cells.copy()
    typ, a, b = map(int, np.argwhere(cells)[0])
    cells[typ, a, b] = False
    cells[(typ + 1) % 4, a, b] = True
    with pytest.raises(ShuffleError):
        Tiling(2, cells).check_cover()


def test_invalid_inputs():
    with pytest.raises(ShuffleError):
        sample(UNI, 0)
    with pytest.raises(ShuffleError):
        sample_cells(-np.ones((4, 2, 2)))
    with pytest.raises(ShuffleError):
        enumerate_tilings(5)


def test_hausdorff_examples():
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    circ = np.c_[np.cos(th), np.sin(th)] * 0.5
    assert hausdorff(circ, circ) == 0
    assert hausdorff(circ, circ + [0.1, 0]) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ShuffleError):
        hausdorff(circ, np.zeros((0, 2)))


@pytest.fixture(scope="module")
def uniform200():
    return [sample(UNI, 200, seed=s) for s in range(30)]


@pytest.fixture(scope="module")
def cloud200(uniform200):
    return empirical_boundary(uniform200)


def test_uniform_boundary_is_the_circle(cloud200):
    th = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    circ = np.c_[np.cos(th), np.sin(th)]
    assert compare_boundary(cloud200, circ) <= 0.05
    assert cloud200.levels[1] is None


def test_uniform_boundary_rotation_symmetric(cloud200):
    P = cloud200.points
    assert hausdorff(P, np.c_[-P[:, 1], P[:, 0]]) < 0.03


def test_frozen_corners(uniform200, cloud200):
    bins = cloud200.field.shape[0]
    c = (np.arange(bins) + 0.5) / bins * 2 - 1
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    corner = np.abs(X1) + np.abs(X2) > 1.6
    assert cloud200.field[corner].max() < 0.02 * cloud200.field.max()
    n = uniform200[0].n
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    u, v = a - b, a + b - (n - 1)
    ent = cell_state_entropy(uniform200)
    tri = np.abs(u + v) / n + np.abs(v - u) / n > 1.6
    assert ent[tri].max() < 1e-12
    assert ent.max() > 0.5


def test_insufficient_statistics(uniform200):
    with pytest.raises(ShuffleError, match="insufficient statistics"):
        empirical_boundary(uniform200[:5])


def test_boundary_csv(tmp_path, cloud200):
    path = tmp_path / "b.csv"
    cloud200.to_csv(path)
    raw = path.read_bytes()
    assert raw.startswith(b"contour,x1,x2\r\n")
    assert raw.count(b"\r\n") == len(cloud200.points) + 1


def test_tiling_svg_deterministic():
    t = sample(UNI, 6, seed=1)
    s = tiling_svg(t)
    assert s == tiling_svg(sample(UNI, 6, seed=1))
    assert s.count("<polygon") == t.count
    assert len(Counter(ln.split('fill="')[1][:7] for ln in s.splitlines() if "<polygon" in ln)) == 4
