import time
import warnings

import numpy as np
import pytest
import sympy as sp

from renewal_expansions.models import DiscretePMF, MatrixExponential

ME_ALPHA = (0.0625, 0.4375, 0.5)
ME_T = ((-1.0, 1.0, 0.0), (0.0, -1.0, 1.0), (0.0, 0.0, -1.0))


@pytest.fixture(autouse=True)
def _quiet_growth_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        yield


@pytest.fixture(scope="session")
def double_root_me():
    """Mixture of Erlang-3, Erlang-2 and Exp(1) whose g - 1 has a double zero at 5/4.

    Returns the model and the density-term coefficients ``(p0, p1)`` of
    ``exp(-5x/4) (p0 + p1 x)`` computed symbolically.
    """
    z, w = sp.symbols("z w")
    a = [sp.Rational(1, 16), sp.Rational(7, 16), sp.Rational(1, 2)]
    g = a[0] / (1 - z) ** 3 + a[1] / (1 - z) ** 2 + a[2] / (1 - z)
    z0 = sp.Rational(5, 4)
    assert sp.simplify((g - 1).subs(z, z0)) == 0
    assert sp.simplify(sp.diff(g, z).subs(z, z0)) == 0
    phi = -1 / (1 - g.subs(z, z0 + w))
    ser = sp.series(sp.simplify(phi * w**2), w, 0, 2).removeO()
    a_m2 = ser.coeff(w, 0)
    a_m1 = ser.coeff(w, 1)
    p0, p1 = complex(a_m1), complex(-a_m2)
    return MatrixExponential(ME_ALPHA, ME_T), (p0, p1)


@pytest.fixture(scope="session")
def double_root_pmf():
    """pmf on {0, 1, 2, 3}; G(w) - 1 = 0.2 (w - 1)(w + 2)^2 with w = e^z, so log 2 + i pi is a double zero."""
    return DiscretePMF([0.2, 0.0, 0.6, 0.2])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance reporting ---------------------------------------------------

_ACCEPTANCE: dict[int, str] = {}


class CriterionRecorder:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def report(self, number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}, {self.elapsed:.1f} s): {detail}"
        _ACCEPTANCE[number] = line
        print(line)


@pytest.fixture
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
