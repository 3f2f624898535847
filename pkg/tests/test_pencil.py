import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from arcticdisc.aztec_curve import build_curve
from arcticdisc.pencil import (
    Differential,
    PencilError,
    build_dF,
    pencil_from_differentials,
    remove_stationary,
    zeros,
)
from arcticdisc.surface import SurfacePoint, build_surface
from conftest import UNIFORM

npp = np.polynomial.polynomial


def _residue(pen, P, r=1e-4, n=128):
    """(1/2 pi i) of the sum of all members around P, i.e. minus the residue of df/f."""
    t = np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    zz = P.z + r * t
    if pen.rational is not None:
        vals = pen.member_values(zz)
    else:
        y = P.y * np.sqrt(npp.polyval(zz, pen.f) / npp.polyval(P.z, pen.f))
        vals = pen.member_values(zz, y)
    return (vals.sum(axis=0) * r * t).mean()


def _match(ctx, A, B):
    """Greedy matching of two divisors by Abel-map distance mod the lattice."""
    rest = list(B)
    worst = 0.0
    for P in A:
        d = [ctx.lattice_distance(ctx.abel(P) - ctx.abel(Q)) for Q in rest]
        i = int(np.argmin(d))
        worst = max(worst, d[i])
        rest.pop(i)
    return worst


def test_counts_2x2(pencil2):
    assert pencil2.p_count == 8
    assert pencil2.z_count == 8 == 2 * 2 * 2
    assert pencil2.z_count - pencil2.p_count == 2 * pencil2.genus - 2


def test_residues_of_df_over_f(pencil2):
    k, l = 2, 2
    for a in pencil2.curve.angles:
        P = pencil2.angle_points[a.label]
        if P.z is None:
            continue
        if a.kind == "q0":
            assert abs(-_residue(pencil2, P) - k) < 1e-8
        if a.kind == "p0":
            assert abs(-_residue(pencil2, P) + l) < 1e-8


def test_residues_uniform(pencil_uniform):
    q0 = [a for a in pencil_uniform.curve.angles if a.kind == "q0"][0]
    assert abs(-_residue(pencil_uniform, SurfacePoint(complex(q0.z), None)) - 1) < 1e-8
    assert abs(-_residue(pencil_uniform, SurfacePoint(0j, None)) + 1) < 1e-8


def test_linear_independence(pencil2):
    M = np.concatenate([pencil2.A, pencil2.B], axis=1)
    assert np.linalg.matrix_rank(M, tol=1e-10 * np.abs(M).max()) == 3


def test_zero_count_random_real(pencil2):
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(100, 3)):
        Z = zeros(pencil2, x)
        assert len(Z) == 8


def test_zeros_vanish(pencil2):
    rng = np.random.default_rng(1)
    for x in rng.normal(size=(10, 3)):
        for P in zeros(pencil2, x):
            if P.z is None:
                continue
            G = abs(pencil2._G(x, P.z, P.y))
            scale = np.abs(x) @ (np.abs(pencil2.A) @ np.abs(P.z) ** np.arange(pencil2.A.shape[1]))
            assert G < 1e-7 * scale


def test_uniform_two_zeros(pencil_uniform):
    Z = zeros(pencil_uniform, [1.0, 0.0, 0.0])
    assert len(Z) == 2
    assert Z[0].z is not None and Z[1].z is not None
    assert abs(Z[0].z - Z[1].z) > 1e-3


def test_abel_sum_constant(pencil2):
    ctx = pencil2.ctx
    rng = np.random.default_rng(2)
    ref = None
    for x in rng.normal(size=(20, 3)):
        s = sum(ctx.abel(P) for P in zeros(pencil2, x))
        if ref is None:
            ref = s
        assert ctx.lattice_distance(s - ref) < 1e-7


def test_reality(pencil2):
    ctx = pencil2.ctx
    rng = np.random.default_rng(3)
    for x in rng.normal(size=(10, 3)):
        Z = zeros(pencil2, x)
        assert _match(ctx, Z, [ctx.conj(P) for P in Z]) < 1e-7


def test_x_zero_rejected(pencil2):
    with pytest.raises(PencilError):
        zeros(pencil2, [0, 0, 0])


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.1, 10))
@settings(max_examples=25, deadline=None)
def test_zeros_projective(pencil2, xs, lam):
    x = np.array(xs)
    assume(np.linalg.norm(x) > 1e-2)
    Z1 = zeros(pencil2, x)
    Z2 = zeros(pencil2, lam * x)
    assert _match(pencil2.ctx, Z1, Z2) < 1e-6


# synthetic pencil with a common zero at one point P = (c, y_c)

@pytest.fixture(scope="module")
def synthetic():
    f = npp.polyfromroots([-2.0, -0.5, 1.0, 2.5]).real
    ctx = build_surface(f)
    c = 0.3 + 0.2j
    P = ctx.point(c)
    yc = P.y
    etas = [
        Differential(np.array([-c, 1], complex), np.zeros(1, complex), ()),
        Differential(np.array([-c * c, 0, 1], complex), np.zeros(1, complex), ()),
        Differential(np.array([-yc], complex), np.array([1], complex), ()),
    ]
    poles = [(ctx.infinity(1), 2), (ctx.infinity(-1), 2)]
    return pencil_from_differentials(ctx, etas, poles), P


def test_synthetic_common_zero(synthetic):
    pen, P = synthetic
    rng = np.random.default_rng(4)
    for x in rng.normal(size=(5, 3)):
        Z = zeros(pen, x)
        assert len(Z) == 4
        assert min(abs(Q.z - P.z) + abs(Q.y - P.y) for Q in Z if Q.z is not None) < 1e-7


def test_remove_stationary(synthetic):
    pen, P = synthetic
    assert remove_stationary(pen, []) is pen
    red = remove_stationary(pen, [P])
    assert red.z_count == 3
    x = np.array([0.4, -1.1, 0.7])
    Z = zeros(red, x)
    assert len(Z) == 3
    assert all(Q.z is None or abs(Q.z - P.z) + abs(Q.y - P.y) > 1e-6 for Q in Z)


def test_remove_stationary_rejects_non_common(synthetic):
    pen, _ = synthetic
    with pytest.raises(PencilError):
        remove_stationary(pen, [pen.ctx.point(1.7 - 0.4j)])


def test_unsupported_model():
    from fractions import Fraction as F

    from arcticdisc.aztec_curve import PeriodicWeights

    c = build_curve(PeriodicWeights(2, 1, [[2], [3]], [[F(1, 2)], [F(1, 3)]], [[1], [F(1, 2)]]))
    assert not c.problems
    with pytest.raises(PencilError, match="outside the supported"):
        build_dF(c)
