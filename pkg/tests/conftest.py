import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from arcticdisc.aztec_curve import PeriodicWeights, build_curve

# generic strict-mode 2x2 model used across the suite
W2 = PeriodicWeights(
    2, 2,
    [[3, F(1, 2)], [F(1, 3), 2]],
    [[F(9, 10), F(4, 5)], [F(7, 10), F(9, 10)]],
    [[F(9, 10), F(1, 2)], [F(4, 5), F(3, 5)]],
)
UNIFORM = PeriodicWeights.uniform()


def random_strict_weights(k, l, rng):
    """Random rational weights satisfying beta^v < 1 < alpha^v / gamma^v."""
    while True:
        draw = lambda lo, hi: [[F(int(rng.integers(lo, hi)), 10) for _ in range(l)] for _ in range(k)]  # noqa: E731
        w = PeriodicWeights(k, l, draw(11, 40), draw(3, 10), draw(3, 10))
        if all(w.strict_ok()):
            return w


@pytest.fixture(scope="session")
def curve2():
    return build_curve(W2)


@pytest.fixture(scope="session")
def pencil2(curve2):
    from arcticdisc.pencil import build_dF

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_dF(curve2)


@pytest.fixture(scope="session")
def dctx2(pencil2):
    from arcticdisc.disc_engine import make_context

    return make_context(pencil2)


@pytest.fixture(scope="session")
def pencil_uniform():
    from arcticdisc.pencil import build_dF

    return build_dF(build_curve(UNIFORM))


@pytest.fixture(scope="session")
def trace2(pencil2, dctx2):
    from arcticdisc.arctic import trace

    return trace(pencil2, samples_per_oval=200, dctx=dctx2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
