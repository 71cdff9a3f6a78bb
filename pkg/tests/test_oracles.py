import math

import mpmath as mp
import numpy as np
import pytest

from renewal_expansions.errors import MassAtZeroOne, ModelError
from renewal_expansions.models import DiscretePMF, Erlang, Exponential, NegativeBinomial, TruncatedExponential, Uniform01
from renewal_expansions.oracles import (
    phase_type_density,
    philox_generator,
    renewal_grid_continuous,
    renewal_mass_exact,
    renewal_mc,
    ruin_discrete_dp,
    ruin_discrete_residual,
    ruin_grid_continuous,
    ruin_mc_continuous,
    ruin_mc_stop_loss_pair,
    worker_count,
)
from renewal_expansions.ruin import ContinuousRiskModel


def uniform_renewal_exact(x):
    # U(x) = sum_{k <= x} (k - x)^k e^{x - k} / k! for Uniform(0, 1) inter-arrival times
    with mp.workdps(50):
        x = mp.mpf(x)
        return float(mp.fsum((k - x) ** k * mp.e ** (x - k) / mp.factorial(k) for k in range(int(x) + 1)))


class TestRenewalMassExact:
    def test_geometric_like(self):
        # P(X = 1) = 1: u(k) = 1 for every k
        assert np.all(renewal_mass_exact(DiscretePMF([0.0, 1.0]), 10).values == 1.0)

    def test_mass_at_zero(self):
        u = renewal_mass_exact(DiscretePMF([0.5, 0.5]), 5).values
        # u(0) = 1/(1 - f0) = 2, u(k) = u(k-1) f1 / (1 - f0)
        assert u == pytest.approx([2.0, 2.0, 2.0, 2.0, 2.0, 2.0])

    def test_rejects_point_mass_at_zero(self):
        with pytest.raises(MassAtZeroOne):
            renewal_mass_exact(DiscretePMF([1.0]), 5)

    def test_negative_binomial_converges_to_inverse_mean(self):
        m = NegativeBinomial(0.4, 2)
        u = renewal_mass_exact(m, 200).values
        assert u[-1] == pytest.approx(1.0 / m.mean, rel=1e-12)


class TestRenewalGrid:
    def test_uniform_against_closed_form(self):
        res = renewal_grid_continuous(Uniform01(), 5.0, 1e-3)
        for x in (0.5, 1.0, 2.3, 5.0):
            assert res.at(x) == pytest.approx(uniform_renewal_exact(x), abs=1e-11)

    def test_erlang(self):
        res = renewal_grid_continuous(Erlang(2, 2.0), 4.0, 1e-3)
        x = res.x
        exact = x + 0.75 + np.exp(-4 * x) / 4
        assert np.max(np.abs(res.values - exact)) < 1e-10

    def test_atom_at_truncation_point(self):
        # min(V, 0.5): U jumps at multiples of 0.5 only through the density part
        m = TruncatedExponential(2.0, 0.5)
        res = renewal_grid_continuous(m, 3.0, 1e-3)
        mc = renewal_mc(m, 3.0, 200_000, seed=3)
        assert abs(res.at(3.0) - mc.values[0]) < 4 * mc.std_err[0]

    def test_step_too_coarse(self):
        with pytest.raises(ValueError):
            renewal_grid_continuous(Erlang(2, 2.0), 1.0, 0.01)

    def test_error_estimate_reported(self):
        res = renewal_grid_continuous(Erlang(2, 2.0), 2.0, 1e-3)
        assert res.std_err is not None and res.std_err.shape == res.values.shape


class TestPhaseType:
    """Renewal density ``alpha exp((T + t alpha) x) t`` of phase-type laws."""

    def test_exponential_is_poisson(self):
        x = np.linspace(0, 3, 7)
        assert np.allclose(phase_type_density([1.0], [[-2.0]], x), 2.0)

    def test_erlang(self):
        x = np.linspace(0.1, 5, 9)
        assert np.allclose(phase_type_density([1.0, 0.0], [[-2.0, 2.0], [0.0, -2.0]], x), 1 - np.exp(-4 * x), atol=1e-14)

    def test_density_integrates_to_renewal_function(self):
        from scipy import integrate

        dens = lambda y: phase_type_density([1.0, 0.0], [[-2.0, 2.0], [0.0, -2.0]], np.array([y]))[0]
        # U(x) - 1 = integral of the density (U counts the renewal at 0)
        val = integrate.quad(dens, 0, 2.0)[0]
        assert val == pytest.approx(2.0 + 0.75 + math.exp(-8) / 4 - 1.0, abs=1e-10)


class TestRuinDiscreteDP:
    def test_two_point_claims_closed_form(self):
        # Z in {0, 2}: the renewal equation gives psi(x) = (13/7) (3/7)^x for x >= 1
        dp = ruin_discrete_dp(DiscretePMF([0.7, 0.0, 0.3]), 20)
        x = np.arange(1, 21)
        assert np.allclose(dp.values[1:], 13.0 / 7.0 * (3.0 / 7.0) ** x, rtol=1e-12)

    def test_residual_vanishes(self):
        claims = DiscretePMF([0.5, 0.25, 0.1, 0.15])
        dp = ruin_discrete_dp(claims, 50)
        assert np.max(np.abs(ruin_discrete_residual(claims, dp.values))) < 1e-15

    def test_negative_loading(self):
        with pytest.raises(ModelError):
            ruin_discrete_dp(DiscretePMF([0.0, 0.0, 1.0]), 5)


class TestRuinGrid:
    def test_exponential_claims(self):
        model = ContinuousRiskModel(1.0, 1.0, Exponential(3.0))
        res = ruin_grid_continuous(model, 5.0, 1e-3)
        x = res.x
        assert np.max(np.abs(res.values - np.exp(-2 * x) / 3)) < 1e-9


class TestMonteCarlo:
    def test_philox_streams_differ(self):
        a = philox_generator(1, 0).random(4)
        b = philox_generator(1, 1).random(4)
        assert not np.allclose(a, b)
        assert np.array_equal(a, philox_generator(1, 0).random(4))

    def test_worker_count_env(self, monkeypatch):
        monkeypatch.setenv("RENEWAL_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("RENEWAL_THREADS", "0")
        assert worker_count() >= 1

    def test_reproducible_across_thread_counts(self, monkeypatch):
        model = ContinuousRiskModel(1.0, 1.0, Exponential(3.0))
        monkeypatch.setenv("RENEWAL_THREADS", "1")
        a = ruin_mc_continuous(model, 1.0, 70_000, seed=9)
        monkeypatch.setenv("RENEWAL_THREADS", "4")
        b = ruin_mc_continuous(model, 1.0, 70_000, seed=9)
        assert a.values[0] == b.values[0] and a.std_err[0] == b.std_err[0]

    def test_exponential_claims(self):
        model = ContinuousRiskModel(1.0, 1.0, Exponential(3.0))
        mc = ruin_mc_continuous(model, 1.0, 200_000, seed=4)
        truth = math.exp(-2.0) / 3.0
        assert abs(mc.values[0] - truth) < 3.5 * mc.std_err[0]

    def test_minimum_paths(self):
        model = ContinuousRiskModel(1.0, 1.0, Exponential(3.0))
        with pytest.raises(ValueError):
            ruin_mc_continuous(model, 1.0, 100)

    def test_renewal_mc(self):
        mc = renewal_mc(Erlang(2, 2.0), 2.0, 100_000, seed=2)
        assert abs(mc.values[0] - (2.75 + math.exp(-8) / 4)) < 4 * mc.std_err[0]

    def test_stop_loss_pair_sandwich(self):
        est = ruin_mc_stop_loss_pair(1.0, 2.0, 1.0, 1.5, 0.2, 2.0, 4.0, 40_000, seed=5)
        assert est["psi1"] <= est["psi_or"] <= est["psi1"] + est["psi2"]
