from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp
from scipy.optimize import brentq

from arcticdisc.genus0 import (
    PencilError,
    RationalPencil,
    coefficient_forms,
    discriminant_g0,
    evaluate_g0,
    pencil_polynomial,
    read_pencil,
    write_pencil,
)
from arcticdisc.polyalg import root_list

x0, x1, x2 = sp.symbols("x0:3")


def test_coefficient_forms_examples():
    assert coefficient_forms(RationalPencil([[1], [0, 0, 1]])) == [[1, 0], [0, 0], [0, 1]]
    assert coefficient_forms(RationalPencil([[1], [0, 1]])) == [[1, 0], [0, 1]]
    assert coefficient_forms(RationalPencil([[2, 1], [0, 3]])) == [[2, 0], [1, 3]]


def test_worked_example_z_squared():
    d = discriminant_g0(RationalPencil([[1], [0, 0, 1]]))
    assert d.as_expr() == -4 * x0 * x1


def test_linear_pencil_is_constant():
    d = discriminant_g0(RationalPencil([[1], [0, 1]]))
    assert d.total_degree() == 0


def test_quadratic_pencil():
    d = discriminant_g0(RationalPencil([[1], [0, 1], [0, 0, 1]]))
    assert sp.expand(d.as_expr() - (x1 ** 2 - 4 * x0 * x2)) == 0


def test_shared_double_root_rejected():
    with pytest.raises(PencilError, match="identically zero"):
        discriminant_g0(RationalPencil([[1, -2, 1], [-1, 1, 1, -1]]))


def test_dependent_sections_rejected():
    with pytest.raises(PencilError, match="dependent"):
        RationalPencil([[1, 1], [2, 2]])


def test_common_factor_with_denominator_rejected():
    with pytest.raises(PencilError, match="common factor"):
        RationalPencil([[-1, 1], [0, -1, 1]], [-1, 1])


def test_pencil_file_roundtrip(tmp_path):
    p = RationalPencil([[F(1, 2), 0, -1], [0, 3], [1, 1, 1]], [0, 1])
    path = tmp_path / "pencil.txt"
    write_pencil(p, path)
    assert read_pencil(path) == p


def _pencil():
    # Uniform 1x1 Aztec pencil: numerators over r = z (z^2 - 1).
    return RationalPencil([[F(-1, 2), 0, F(-1, 2)], [F(-1, 2), 0, F(1, 2)], [0, 1]], [0, -1, 0, 1])


def test_degree_is_2n_minus_2():
    d = discriminant_g0(_pencil())
    assert d.is_homogeneous
    assert d.total_degree() == 2 * 2 - 2
    # the uniform model gives the inscribed circle
    ratio = sp.simplify(d.as_expr() / (x1 ** 2 + x2 ** 2 - x0 ** 2))
    assert ratio.is_number


def test_symbolic_matches_pointwise():
    p = RationalPencil([[1, 2, 0, 1], [0, 1, 1], [3, 0, -1, 2]])
    d = discriminant_g0(p)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = [F(int(v), 7) for v in rng.integers(-20, 20, 3)]
        assert d.eval(dict(zip(d.gens, x))) == evaluate_g0(p, x)


def _min_gap(poly):
    # chordal distance on the Riemann sphere, so roots escaping to infinity count
    rs = list(root_list(poly))

    def chord(a, b):
        return abs(a - b) / np.sqrt((1 + abs(a) ** 2) * (1 + abs(b) ** 2))

    return min(chord(a, b) for i, a in enumerate(rs) for b in rs[i + 1:])


def test_zero_set_equivalence():
    p = RationalPencil([[1, 2, 0, 1], [0, 1, 1], [3, 0, -1, 2]])
    d = discriminant_g0(p)
    f = sp.lambdify(d.gens, d.as_expr())
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.normal(size=3)
        if abs(f(*x)) > 1e-6:
            assert _min_gap(pencil_polynomial(p, x).to_float()) > 1e-9
    hits = 0
    for _ in range(60):
        a, b = rng.normal(size=3), rng.normal(size=3)
        ts = np.linspace(-3, 3, 601)
        vals = [f(*(a + t * b)) for t in ts]
        for t0, t1, v0, v1 in zip(ts, ts[1:], vals, vals[1:]):
            if v0 * v1 < 0:
                t = brentq(lambda s: f(*(a + s * b)), t0, t1, xtol=1e-15)
                poly = pencil_polynomial(p, a + t * b)
                assert _min_gap(poly.to_float()) < 1e-6
                hits += 1
    assert hits > 10


def test_degree_drop_handled_by_reciprocal():
    p = RationalPencil([[1, 2, 0, 1], [0, 1, 1], [3, 0, -1, 2]])
    d = discriminant_g0(p)
    # choose x killing the leading coefficient: x0*1 + x2*2 = 0
    x = [F(2), F(5, 3), F(-1)]
    poly = pencil_polynomial(p, x)
    assert poly.coeffs[-1] == 0
    via = evaluate_g0(p, x)
    assert via == d.eval(dict(zip(d.gens, x)))
