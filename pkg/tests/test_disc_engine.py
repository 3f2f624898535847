from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp

from arcticdisc.disc_engine import (
    DiscError,
    _log_delta_from,
    _representatives,
    abel_distance,
    degree_of_discriminant,
    delta_eta,
    disc_via_resultant,
    discriminant_eval,
    linear_form_at,
    log_discriminant,
    make_context,
    make_resultant_context,
    resultant_eval,
    write_grid_csv,
)
from arcticdisc.genus0 import RationalPencil, discriminant_g0, pencil_polynomial
from arcticdisc.pencil import DifferentialPencil, zeros
from arcticdisc.surface import SurfacePoint


def cx(rng, n=3):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def spread(r):
    r = np.asarray(r)
    return float(np.abs(r / r[0] - 1).max())


@pytest.mark.parametrize("g,nz,d", [(0, 2, 2), (1, 8, 16), (1, 4, 8)])
def test_degree_of_discriminant(g, nz, d):
    assert degree_of_discriminant(g, nz) == d


def test_degree_rejects_bad_input():
    with pytest.raises(ValueError):
        degree_of_discriminant(-1, 3)


def test_context_degree(dctx2):
    assert dctx2.degree == 16


def test_linear_form_genus0():
    rp = RationalPencil([[1], [0, 1]])
    pen = DifferentialPencil(genus=0, n=1, poles=(), z_count=1, rational=rp)
    L = linear_form_at(SurfacePoint(2 + 0j, None), pen)
    assert np.allclose(L.coefficients, [1, 2])


def test_linear_form_defines_vanishing(pencil2):
    ctx = pencil2.ctx
    rng = np.random.default_rng(0)
    P = ctx.point(0.4 + 0.3j)
    L = linear_form_at(P, pencil2)
    x = np.cross(L.coefficients, cx(rng))
    assert abs(L(x)) < 1e-12 * np.linalg.norm(x) * np.linalg.norm(L.coefficients)
    assert min(ctx.lattice_distance(ctx.abel(Q) - ctx.abel(P)) for Q in zeros(pencil2, x)) < 1e-7


def test_linear_form_chart_independence(pencil2):
    P = pencil2.ctx.point(0.4 + 0.3j)
    k1 = linear_form_at(P, pencil2).coefficients
    # the chart 1/z - 1/z0 at the same point rescales by dz/dzeta = -z^2
    k2 = pencil2.member_values(P.z, P.y) * (-P.z**2)
    cos = abs(np.vdot(k1, k2)) / (np.linalg.norm(k1) * np.linalg.norm(k2))
    assert np.arccos(min(cos, 1.0)) < 1e-8


def test_homogeneity(dctx2):
    rng = np.random.default_rng(1)
    for _ in range(3):
        x = cx(rng)
        lam = complex(*rng.normal(size=2))
        r = discriminant_eval(lam * x, dctx2) / discriminant_eval(x, dctx2)
        assert abs(r / lam**16 - 1) < 1e-8


def test_representative_invariance(dctx2):
    rng = np.random.default_rng(2)
    x = cx(rng)
    zs = _representatives(dctx2, zeros(dctx2.pencil, x), dctx2.Sigma)
    base = _log_delta_from(dctx2, zs)
    B = dctx2.ctx.B
    moved = zs.copy()
    moved[1] += B[:, 0]
    moved[4] -= B[:, 0]
    shifted = _log_delta_from(dctx2, moved)
    assert abs(np.exp(shifted - base) - 1) < 1e-7


def test_sigma_shift_covariance(pencil2, dctx2):
    rng = np.random.default_rng(3)
    B = dctx2.ctx.B
    m = np.array([1.0])
    d2 = make_context(pencil2, sigma_shift=B @ m)
    n = pencil2.z_count
    log_factor = (2j * np.pi * m @ B @ m + 4j * np.pi * m @ dctx2.Sigma
                  - 4j * np.pi * n * m @ (dctx2.q_vec + dctx2.e))
    for _ in range(3):
        x = cx(rng)
        a = delta_eta(x, dctx2, log=True)
        b = delta_eta(x, d2, log=True)
        assert abs(np.exp(b - a - log_factor) - 1) < 1e-7


def test_uniqueness_up_to_constant(pencil2, dctx2):
    B = dctx2.ctx.B
    d2 = make_context(pencil2, seed=5, basepoint=2, e=dctx2.e + 1 + B[:, 0], sigma_shift=np.ones(1) + B[:, 0])
    rng = np.random.default_rng(4)
    r = [np.exp(log_discriminant(x, d2) - log_discriminant(x, dctx2)) for x in (cx(rng) for _ in range(20))]
    assert spread(r) < 1e-5


def test_conjugation_symmetry(dctx2):
    rng = np.random.default_rng(5)
    r = []
    for _ in range(5):
        x = cx(rng)
        r.append(discriminant_eval(np.conj(x), dctx2) / np.conj(discriminant_eval(x, dctx2)))
    assert spread(r) < 1e-8
    assert abs(abs(r[0]) - 1) < 1e-8


def test_nonvanishing_off_coalescence(pencil2, dctx2):
    rng = np.random.default_rng(6)
    checked = 0
    while checked < 200:
        x = rng.normal(size=3)
        Z = zeros(pencil2, x)
        dmin = min(abel_distance(dctx2, Z[i], Z[j]) for i in range(8) for j in range(i + 1, 8))
        if dmin <= 1e-3:
            continue
        lv = log_discriminant(x, dctx2, Z)
        assert np.isfinite(lv.real)
        checked += 1


def test_degenerate_point_fallback(dctx2):
    # zeros of eta(x) land on poles along x1 = -1; the value is recovered by continuity
    a = discriminant_eval(np.array([1, -1, 0.3]), dctx2)
    b = discriminant_eval(np.array([1, -1 + 1e-9, 0.3]), dctx2)
    assert abs(a / b - 1) < 1e-5


def test_zero_x_rejected(dctx2):
    with pytest.raises(DiscError):
        log_discriminant(np.zeros(3), dctx2)


def test_genus0_discriminant_eval(pencil_uniform):
    d = make_context(pencil_uniform)
    assert d.degree == 2
    rng = np.random.default_rng(7)
    for _ in range(3):
        x = rng.normal(size=3)
        lam = 1.7
        assert abs(discriminant_eval(lam * x, d) / discriminant_eval(x, d) - lam**2) < 1e-10


# resultants

@pytest.fixture(scope="module")
def rctx(pencil2):
    return make_resultant_context(pencil2, pencil2)


def test_resultant_bihomogeneity(pencil2, rctx):
    rng = np.random.default_rng(8)
    x, y = cx(rng), cx(rng)
    lam, mu = 1.3 - 0.4j, -0.7 + 0.9j
    r0 = resultant_eval(x, y, rctx=rctx)
    assert abs(resultant_eval(lam * x, y, rctx=rctx) / r0 / lam**8 - 1) < 1e-8
    assert abs(resultant_eval(x, mu * y, rctx=rctx) / r0 / mu**8 - 1) < 1e-8


def test_resultant_vanishing(pencil2, rctx):
    rng = np.random.default_rng(9)
    x = rng.normal(size=3)
    P = [Q for Q in zeros(pencil2, x) if Q.z is not None][0]
    k = linear_form_at(P, pencil2).coefficients
    y = np.cross(k, rng.normal(size=3)).real if np.allclose(k.imag, 0) else np.cross(k, rng.normal(size=3))
    scale = np.median([abs(resultant_eval(x, cx(rng), rctx=rctx)) for _ in range(5)])
    assert abs(resultant_eval(x, y, rctx=rctx)) < 1e-6 * scale


def test_resultant_genus0_matches_sylvester():
    eta = RationalPencil([[1], [0, 1], [0, 0, 1]])
    nu = RationalPencil([[2, 1], [0, 0, 1], [1, 0, 0, 1]])
    pe = DifferentialPencil(genus=0, n=2, poles=(), z_count=2, rational=eta)
    pn = DifferentialPencil(genus=0, n=2, poles=(), z_count=3, rational=nu)
    z = sp.Symbol("z")
    rng = np.random.default_rng(10)
    ratios = []
    for _ in range(10):
        x = [F(int(v), 7) for v in rng.integers(-20, 20, 3)]
        y = [F(int(v), 5) for v in rng.integers(-20, 20, 3)]
        px = sum(sp.Rational(c.numerator, c.denominator) * z**i for i, c in enumerate(pencil_polynomial(eta, x).coeffs))
        py = sum(sp.Rational(c.numerator, c.denominator) * z**i for i, c in enumerate(pencil_polynomial(nu, y).coeffs))
        ref = complex(sp.resultant(sp.Poly(px, z), sp.Poly(py, z)))
        got = resultant_eval([float(v) for v in x], [float(v) for v in y], pe, pn)
        if abs(ref) > 1e-12:
            ratios.append(got / ref)
    assert np.var(np.array(ratios) / ratios[0]) < 1e-8


def test_disc_via_resultant_ratio(pencil2, dctx2):
    rng = np.random.default_rng(11)
    r = []
    for _ in range(20):
        x = cx(rng)
        r.append(np.exp(disc_via_resultant(x, pencil2, dctx2, log=True) - log_discriminant(x, dctx2)))
    assert spread(r) < 1e-6


def test_disc_via_resultant_genus0_exact():
    x0, x1, x2 = sp.symbols("x0:3")
    for nums in ([[1], [0, 1], [0, 0, 1]], [[1, 2], [0, 3, 1], [5, 0, 1]], [[2], [1, 1], [0, 1, 3]]):
        rp = RationalPencil(nums)
        pen = DifferentialPencil(genus=0, n=2, poles=(), z_count=rp.max_degree, rational=rp)
        D = discriminant_g0(rp)
        N = rp.max_degree
        sign = (-1) ** (N * (N - 1) // 2)
        for x in ([F(1), F(2), F(3)], [F(-1, 2), F(5), F(1, 3)]):
            got = disc_via_resultant(x, pen)
            want = D.as_expr().subs({x0: x[0], x1: x[1], x2: x[2]})
            assert sp.Rational(got.numerator, got.denominator) == sign * want


def test_grid_csv(tmp_path):
    write_grid_csv(tmp_path / "g.csv", [(0.0, 0.5, 1 + 2j), (0.1, 0.2, 0j)])
    raw = (tmp_path / "g.csv").read_bytes()
    assert raw.startswith(b"x1,x2,re_delta,im_delta,log10_abs_delta\r\n")
    assert raw.count(b"\r\n") == 3
    assert b"-inf" in raw


def band_ratio(dctx, x):
    """|Delta(x)| / (|x|^d prod_{i != j} dist(Z_i, Z_j)) with Abel distances."""
    Z = zeros(dctx.pencil, x)
    ds = [abel_distance(dctx, Z[i], Z[j]) for i in range(len(Z)) for j in range(i)]
    return abs(discriminant_eval(x, dctx)) / (np.linalg.norm(x) ** dctx.degree * np.prod(np.square(ds)))


def test_band_ratio_on_random_segments(dctx2):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        a, b = rng.normal(size=(2, 3))
        r = np.array([band_ratio(dctx2, a + t * (b - a)) for t in np.linspace(0, 1, 21)])
        worst = max(worst, r.max() / r.min())
    assert worst < 10


def test_disc_via_resultant_genus0_needs_leading_coefficient():
    rp = RationalPencil([[1], [0, 1], [0, 0, 1]])
    pen = DifferentialPencil(genus=0, n=2, poles=(), z_count=2, rational=rp)
    with pytest.raises(DiscError):
        disc_via_resultant([F(1), F(2), F(0)], pen)
