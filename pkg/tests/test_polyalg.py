import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arcticdisc.polyalg import (
    Poly,
    derivative,
    discriminant,
    discriminant_from_roots,
    reciprocal,
    resultant,
    root_list,
    roots,
    translate,
)

F = Fraction
small_q = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def test_roots_pure_imaginary_pair():
    rs = sorted(root_list(Poly([1, 0, 1])), key=lambda r: r.imag)
    assert np.allclose(rs, [-1j, 1j], atol=1e-14)


def test_roots_double_root_is_clustered():
    cl = roots(Poly([1, -2, 1]))
    assert len(cl) == 1
    assert cl[0].multiplicity == 2
    assert abs(cl[0].value - 1) < 1e-7


def test_roots_cube_roots_of_unity():
    p = Poly([-1, 0, 0, 1])
    rs = root_list(p)
    assert len(rs) == 3
    for r in rs:
        assert abs(p(r)) < 1e-12
    expected = [1, cmath.exp(2j * cmath.pi / 3), cmath.exp(-2j * cmath.pi / 3)]
    for e in expected:
        assert min(abs(r - e) for r in rs) < 1e-12


def test_roots_errors():
    with pytest.raises(ValueError, match="undefined roots"):
        roots(Poly([0, 0, 0]))
    with pytest.raises(ValueError):
        roots(Poly([1.0, float("nan")]))


def test_roots_high_precision_path():
    rs = root_list(Poly([2, 0, -1]), precision=128)
    assert np.allclose(sorted(rs, key=lambda r: r.real), [-2 ** 0.5, 2 ** 0.5])


def test_resultant_linear():
    a, b = F(3, 7), F(-2, 5)
    assert resultant(Poly([-a, 1]), Poly([-b, 1])) == a - b


def test_resultant_shared_root():
    assert resultant(Poly([-1, 0, 1]), Poly([-1, 1])) == 0


def test_resultant_against_root_product():
    p, q = Poly([1, 0, 1]), Poly([-1, 0, 1])
    exact = resultant(p, q)
    # Res(p, q) = lc(p)^deg q * prod q(root of p)
    num = np.prod([q(complex(r)) for r in root_list(p)])
    assert exact == 4
    assert abs(num - 4) < 1e-12


def test_resultant_both_zero():
    with pytest.raises(ValueError):
        resultant(Poly([0, 0]), Poly([0]))


def test_quadratic_discriminant():
    c0, c1, c2 = F(2), F(-3, 2), F(5, 3)
    assert discriminant(Poly([c0, c1, c2]), 2) == c1 ** 2 - 4 * c0 * c2


def test_discriminant_with_gap():
    x0, x1 = F(3), F(-7, 2)
    assert discriminant(Poly([x0, 0, x1]), 2) == -4 * x0 * x1


@pytest.mark.parametrize("p,q", [(1, 1), (-2, 3), (F(1, 2), F(-1, 3)), (3, 0)])
def test_depressed_cubic(p, q):
    poly = Poly([F(q), F(p), 0, 1])
    d = discriminant(poly, 3)
    assert d == -4 * F(p) ** 3 - 27 * F(q) ** 2
    if d != 0:
        assert abs(discriminant_from_roots(poly.to_float()) - float(d)) < 1e-9 * (1 + abs(float(d)))


def test_discriminant_zero_degree():
    with pytest.raises(ValueError, match="undefined"):
        discriminant(Poly([1]), 0)


def test_discriminant_degree_drop_matches_limit():
    # c_N = 0: value must equal the polynomial in the coefficients.
    c0, c1 = F(2), F(5)
    assert discriminant(Poly([c0, c1, 0], 2), 2) == c1 ** 2


def test_translate_and_reciprocal():
    p = Poly([1, 2, 3])
    assert translate(p, 1).coeffs == (6, 8, 3)
    assert reciprocal(p).coeffs == (3, 2, 1)
    assert derivative(p).coeffs == (2, 6)


@settings(max_examples=40, deadline=None)
@given(st.lists(small_q, min_size=3, max_size=6), small_q.filter(lambda v: v != 0))
def test_homogeneity(cs, lam):
    N = len(cs) - 1
    p = Poly(cs, N)
    scaled = Poly([lam * c for c in cs], N)
    assert discriminant(scaled, N) == lam ** (2 * N - 2) * discriminant(p, N)


@settings(max_examples=30, deadline=None)
@given(st.lists(small_q, min_size=3, max_size=6), small_q)
def test_translation_invariance(cs, w):
    N = len(cs) - 1
    p = Poly(cs, N)
    assert discriminant(translate(p, w), N) == discriminant(p, N)


@settings(max_examples=30, deadline=None)
@given(st.lists(small_q, min_size=3, max_size=6))
def test_reciprocal_invariance(cs):
    N = len(cs) - 1
    p = Poly(cs, N)
    if p.coeffs[0] != 0:
        assert discriminant(reciprocal(p), N) == discriminant(p, N)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=3, max_size=7))
def test_root_product_equivalence(cs):
    N = len(cs) - 1
    if cs[-1] == 0:
        cs[-1] = 1
    p = Poly([F(c) for c in cs], N)
    d = complex(discriminant(p, N))
    r = discriminant_from_roots(p.to_float(), N)
    assert abs(d - r) <= 1e-8 * max(1.0, abs(d))
