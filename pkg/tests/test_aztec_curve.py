import json
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp

from arcticdisc.aztec_curve import (
    DegenerateModelWarning,
    PeriodicWeights,
    build_curve,
    hyperelliptic_reduce,
    validate,
)
from conftest import UNIFORM, W2, random_strict_weights

z, w = sp.symbols("z w")


def test_uniform_polynomial_is_rational_curve():
    c = build_curve(UNIFORM)
    assert c.genus == 0
    target = sp.Poly((z + 1) - w * (z - 1), z, w)
    ratio = sp.cancel(c.P.as_expr() / target.as_expr())
    assert ratio.is_number and ratio != 0


def test_uniform_angles():
    c = build_curve(UNIFORM)
    got = {a.label: (a.z, a.w) for a in c.angles}
    assert got == {"q01": (-1, 0), "qinf1": (1, None), "p01": (0, -1), "pinf1": (None, 1)}


def test_generic_2x2_genus_and_angles(curve2):
    assert curve2.genus == 1
    assert len(curve2.angles) == 8
    assert len({(a.z, a.w) for a in curve2.angles}) == 8
    assert not curve2.problems


def test_finite_angles_exactly_on_curve(curve2):
    for a in curve2.angles:
        if a.z is not None and a.w is not None:
            val = curve2.P.as_expr().subs({z: sp.Rational(a.z.numerator, a.z.denominator),
                                           w: sp.Rational(a.w.numerator, a.w.denominator)})
            assert val == 0


def test_hyperelliptic_reduce_genus0_marker():
    assert hyperelliptic_reduce(build_curve(UNIFORM)) is None


def test_hyperelliptic_reduce_2x2(curve2):
    h = hyperelliptic_reduce(curve2)
    assert h.f.degree in (3, 4)
    assert h.genus == 1


def test_sheet_map_round_trip(curve2, rng):
    h = curve2.hyperelliptic
    fz = lambda t: sum(complex(c) * t**i for i, c in enumerate(h.f.coeffs))  # noqa: E731
    P = sp.lambdify((z, w), curve2.P.as_expr(), "numpy")
    for t in rng.normal(size=100) + 1j * rng.normal(size=100):
        y = np.sqrt(fz(t))
        for s in (1, -1):
            ww = h.sheet_map(t, s * y)
            scale = sum(abs(c) * abs(t) ** i * abs(ww) ** j for (i, j), c in
                        zip(curve2.P.monoms(), map(float, curve2.P.coeffs())))
            assert abs(P(t, ww)) < 1e-10 * scale


def test_branch_points_real(curve2):
    b = curve2.hyperelliptic.branch_points()
    assert np.abs(b.imag).max() < 1e-8


def test_validate_uniform_strict_fails():
    rep = validate(UNIFORM, strict=True)
    assert rep.positive
    assert not rep.strict_ok
    assert not rep.ok


def test_validate_zero_entry():
    bad = PeriodicWeights(1, 1, [[0]], [[1]], [[1]])
    rep = validate(bad)
    assert not rep.positive and not rep.ok


def test_validate_strict_passes():
    good = PeriodicWeights.uniform(2, 2, alpha=2, beta=F(1, 2), gamma=1)
    assert all(good.strict_ok())
    assert good.beta_v(0) == F(1, 4) and good.alpha_v(0) / good.gamma_v(0) == 4
    rep = validate(good, strict=True)
    assert rep.strict_ok


@pytest.mark.parametrize("k,l", [(1, 1), (2, 2), (2, 3)])
def test_genus_consistency(k, l):
    rng = np.random.default_rng(k * 10 + l)
    draws = 20 if k < 2 else 5
    for _ in range(draws):
        wt = random_strict_weights(k, l, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateModelWarning)
            c = build_curve(wt)
        assert c.genus == (k - 1) * (l - 1)


def test_json_round_trip_exact():
    doc = json.dumps(W2.to_json())
    assert PeriodicWeights.from_json(doc) == W2
    parsed = PeriodicWeights.from_json('{"k":1,"l":1,"alpha":[["0.1"]],"beta":[["1/3"]],"gamma":[["2"]]}')
    assert parsed.alpha[0][0] == F(1, 10) and parsed.beta[0][0] == F(1, 3)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        PeriodicWeights(2, 2, [[1, 1]], [[1, 1], [1, 1]], [[1, 1], [1, 1]])
