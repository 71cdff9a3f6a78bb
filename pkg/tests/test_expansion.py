import math
import warnings

import numpy as np
import pytest

from renewal_expansions.expansion import (
    exact_mode_check,
    expand_density,
    expand_mass,
    expand_U,
    expand_v,
    linear_part,
)
from renewal_expansions.models import (
    DiscretePMF,
    Erlang,
    Exponential,
    Geometric,
    HyperExponential,
    NegativeBinomial,
    Uniform01,
)
from renewal_expansions.oracles import phase_type_density, renewal_grid_continuous, renewal_mass_exact


class TestLinearPart:
    def test_nonlattice(self):
        assert linear_part(Erlang(2, 2.0)) == pytest.approx((1.0, 0.75))

    def test_lattice_intercept(self):
        # U(k) = sum of the mass function; its asymptote is k/mu + (mu2 + mu)/(2 mu^2)
        m = DiscretePMF([0.0, 0.5, 0.5])
        slope, intercept = linear_part(m)
        U = np.cumsum(renewal_mass_exact(m, 200).values)
        assert U[200] - slope * 200 == pytest.approx(intercept, abs=1e-12)


class TestClosedForms:
    def test_exponential_density_is_constant(self):
        exp = expand_density(Exponential(2.0), 5.0)
        assert exp.evaluate(np.array([0.0, 1.0, 7.0])) == pytest.approx([2.0, 2.0, 2.0])
        assert exp.exact

    def test_erlang_density(self):
        exp = expand_density(Erlang(2, 2.0), 5.0)
        x = np.array([0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
        assert np.max(np.abs(exp.evaluate(x) - (1 - np.exp(-4 * x)))) < 1e-12
        assert exp.exact

    def test_erlang_v_and_U(self):
        x = np.array([0.0, 0.3, 2.0])
        assert np.allclose(expand_v(Erlang(2, 2.0), 5.0).evaluate(x), np.exp(-4 * x) / 4, atol=1e-13)
        assert np.allclose(expand_U(Erlang(2, 2.0), 5.0).evaluate(x), x + 0.75 + np.exp(-4 * x) / 4, atol=1e-13)

    def test_erlang_v_strip_too_narrow(self):
        exp = expand_v(Erlang(2, 2.0), 3.0)
        assert len(exp) == 0
        assert not exp.exact

    def test_hyperexponential_against_phase_type(self):
        m = HyperExponential([0.4, 0.6], [1.0, 5.0])
        x = np.linspace(0.0, 4.0, 9)
        ph = phase_type_density([0.4, 0.6], [[-1.0, 0.0], [0.0, -5.0]], x)
        assert np.max(np.abs(expand_density(m, 10.0).evaluate(x) - ph)) < 1e-12

    def test_double_root_density(self, double_root_me):
        model, _ = double_root_me
        x = np.linspace(0.0, 6.0, 13)
        ph = phase_type_density(model.alpha, model.T, x)
        exp = expand_density(model, 3.0)
        assert exp.exact
        assert np.max(np.abs(exp.evaluate(x) - ph)) < 1e-12


class TestLattice:
    def test_geometric(self):
        exp = expand_U(Geometric(0.3), 3.0)
        k = np.arange(10)
        assert np.allclose(exp.evaluate(k), 1 + 0.3 * k, atol=1e-13)

    def test_geometric_mass_at_origin(self):
        assert expand_mass(Geometric(0.3), 3.0).evaluate(0) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_negative_binomial_mass(self, n):
        m = NegativeBinomial(0.4, n)
        k = np.arange(51)
        exp = expand_mass(m, 5.0)
        assert np.max(np.abs(exp.evaluate(k) - renewal_mass_exact(m, 50).values)) < 1e-12
        assert exp.exact

    def test_double_root(self, double_root_pmf):
        exp = expand_U(double_root_pmf, 3.0)
        k = np.arange(41)
        U = np.cumsum(renewal_mass_exact(double_root_pmf, 40).values)
        assert np.max(np.abs(exp.evaluate(k) - U)) < 1e-12

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError):
            expand_mass(Geometric(0.3), 3.0).evaluate(0.5)

    def test_density_of_lattice_rejected(self):
        with pytest.raises(ValueError):
            expand_density(Geometric(0.3), 3.0)


class TestUniform:
    def test_tracks_grid_oracle(self):
        m = Uniform01()
        exp = expand_U(m, 3.2)
        grid = renewal_grid_continuous(m, 6.0, 1e-3)
        x = np.array([2.0, 4.0, 6.0])
        idx = np.rint(x / 1e-3).astype(int)
        # omitted terms start at Re z = 3.26
        err = np.abs(exp.evaluate(x) - grid.values[idx])
        assert np.all(err < 0.5 * np.exp(-3.2 * x))

    def test_not_exact(self):
        assert not expand_v(Uniform01(), 2.5).exact

    def test_breakdown(self):
        rows = expand_v(Uniform01(), 2.5).breakdown(1.0)
        assert len(rows) == 1 and rows[0]["paired"]

    def test_remainder_bound(self):
        exp = expand_v(Uniform01(), 2.5)
        assert exp.remainder_bound(2.0) == pytest.approx(math.exp(-5.0))

    def test_evaluations_are_real(self):
        v = expand_v(Uniform01(), 4.5).evaluate(np.linspace(0, 3, 31))
        assert v.dtype == float


class TestExactMode:
    def test_report_fields(self):
        exp = expand_density(Erlang(3, 1.0), 8.0)
        rep = exact_mode_check(exp.model, exp)
        assert rep.root_total == 3 and rep.roots_included == 3
        assert rep.samples == sorted(rep.samples, reverse=True)

    def test_partial_strip_not_exact(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            exp = expand_density(Erlang(3, 1.0), 0.5)
        assert not exp.exact
        assert "of 3" in exp.diagnostics["exact_mode"].reason
