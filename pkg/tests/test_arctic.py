import csv

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from arcticdisc.arctic import (
    TraceError,
    degree_check,
    degree_formula,
    fit_circle,
    fit_conic,
    membership_residual,
    trace,
    trace_svg,
    write_trace_csv,
)
from arcticdisc.disc_engine import degree_of_discriminant, make_context
from arcticdisc.pencil import zeros


@pytest.fixture(scope="module")
def trace_uniform(pencil_uniform):
    return trace(pencil_uniform, samples_per_oval=400)


def test_uniform_trace_is_the_inscribed_circle(trace_uniform):
    P = trace_uniform.points()
    c, r, res = fit_circle(P)
    assert res < 1e-6
    assert np.allclose(c, 0, atol=1e-9) and abs(r - 1) < 1e-9
    _, ratio = fit_conic(P)
    assert ratio < 1e-10


def test_uniform_trace_touches_every_edge(trace_uniform):
    P = trace_uniform.points()
    gaps = [np.min(1 - P[:, 0]), np.min(1 + P[:, 0]), np.min(1 - P[:, 1]), np.min(1 + P[:, 1])]
    assert max(gaps) < 1e-3
    assert trace_uniform.in_square()


def test_fit_conic_rejects_a_cubic():
    t = np.linspace(-1, 1, 200)
    _, ratio = fit_conic(np.c_[t, t**3])
    assert ratio > 1e-4


def test_trace2_in_square_and_closed(trace2):
    assert trace2.in_square()
    assert trace2.dropped == 0
    assert trace2.oval_ids[0] == "unbounded" and len(trace2.oval_ids) == 2
    for s in trace2.samples:
        gaps = np.linalg.norm(np.diff(s, axis=0), axis=1)
        assert gaps.max() < 2e-3
        assert np.linalg.norm(s[0] - s[-1]) <= gaps.max()


def test_trace2_membership(trace2, dctx2):
    for s in trace2.samples:
        for p in s[:: len(s) // 10]:
            assert membership_residual(dctx2, p) < 1e-6


def test_membership_residual_off_curve(trace2, dctx2):
    assert membership_residual(dctx2, np.array([0.0, 0.0])) > 1e-2


def test_real_coalescence_at_traced_points(trace2, pencil2):
    # the double zero sits on a real oval: real z and f(z) >= 0
    f = np.asarray(pencil2.f)
    for s in trace2.samples:
        for p in s[:: len(s) // 5]:
            Z = [P for P in zeros(pencil2, np.array([1.0, p[0], p[1]])) if P.z is not None]
            i, j = min(((i, j) for i in range(len(Z)) for j in range(i)),
                       key=lambda ij: abs(Z[ij[0]].z - Z[ij[1]].z) + abs(Z[ij[0]].y - Z[ij[1]].y) / (1 + abs(Z[ij[0]].y)))
            z = (Z[i].z + Z[j].z) / 2
            assert abs(z.imag) < 1e-4 * max(1, abs(z))
            assert np.polyval(f[::-1], z.real).real >= -1e-6 * np.abs(f).sum() * max(1, abs(z)) ** (len(f) - 1)


def test_trace_rejects_non_m_curve(pencil2):
    from dataclasses import replace

    bad = replace(pencil2, f=np.array([1.0, 0, 1.0]))
    with pytest.raises(TraceError):
        trace(bad, 10)


def test_degree_check_uniform(pencil_uniform):
    rep = degree_check(make_context(pencil_uniform), trials=3)
    assert rep.expected == 2 and rep.passed
    assert all(a < 1e-6 and b > 1e-2 for a, b in rep.trials)
    assert rep.lines()[-1] == "degree = 2 CONFIRMED"


def test_degree_check_2x2(dctx2):
    rep = degree_check(dctx2, trials=3)
    assert rep.expected == 16
    assert len(rep.trials) == 3
    for a, b in rep.trials:
        assert a < 1e-6
        assert b > 1e-2
    assert rep.passed


@pytest.mark.parametrize("args,want", [((1, 4, "aztec"), 8), ((1, 8, "aztec"), 16), ((2, 8, "hex_ramified"), 18),
                                       ((0, 4, "aztec"), 2), ((1, 4, "hex_unramified"), 8)])
def test_degree_formula_table(args, want):
    assert degree_formula(*args) == want


def test_degree_formula_errors():
    with pytest.raises(ValueError):
        degree_formula(0, 4, "hex_unramified")
    with pytest.raises(ValueError):
        degree_formula(-1, 4)
    with pytest.raises(ValueError):
        degree_formula(1, 0)
    with pytest.raises(ValueError):
        degree_formula(1, 4, "lozenge")


@given(st.integers(0, 5), st.integers(1, 20))
def test_degree_formula_matches_discriminant_degree(g, p):
    assume(p + 2 * g - 2 >= 1)
    assert degree_formula(g, p, "aztec") == degree_of_discriminant(g, p + 2 * g - 2)


def test_write_trace_csv(tmp_path, trace_uniform):
    path = tmp_path / "t.csv"
    write_trace_csv(trace_uniform, path)
    raw = path.read_bytes()
    assert raw.startswith(b"oval_id,s,x1,x2,residual\r\n")
    rows = list(csv.reader(raw.decode().splitlines()))
    assert len(rows) - 1 == len(trace_uniform.points())
    x1 = float(rows[1][2])
    assert x1 == trace_uniform.samples[0][0, 0]


def test_trace_svg_is_deterministic(trace_uniform):
    a = trace_svg(trace_uniform)
    assert a == trace_svg(trace_uniform)
    assert a.startswith("<?xml") and "<polyline" in a
