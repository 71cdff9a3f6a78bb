import math
import warnings

import numpy as np
import pytest
from scipy.special import lambertw

from renewal_expansions.errors import BoundaryZero, NegativeLoading, NoFiniteRoot
from renewal_expansions.models import (
    DiscretePMF,
    Erlang,
    Exponential,
    HyperExponential,
    MatrixExponential,
    NegativeBinomial,
    TruncatedExponential,
    Uniform01,
)
from renewal_expansions.rootfinder import (
    SearchRegion,
    count_zeros,
    diagnose_growth,
    find_roots,
    lundberg_root,
)


def uniform_roots_lambert(r0, branches=range(-30, 31)):
    # e^z = 1 + z  <=>  z = -1 - W_k(-1/e); branches 0 and -1 meet at z = 0
    out = [0j]
    for k in branches:
        if k in (0, -1):
            continue
        z = -1.0 - complex(lambertw(-math.exp(-1.0), k))
        if z.real < r0:
            out.append(z)
    return sorted(set(np.round(out, 8)), key=lambda z: (z.real, abs(z.imag), z.imag))


class TestCountZeros:
    def test_erlang(self):
        # (2/(2-z))^2 = 1 at z = 0 and z = 4
        assert count_zeros(Erlang(2, 2.0), (-0.5, 5.0, -1.0, 1.0)) == 2
        assert count_zeros(Erlang(2, 2.0), (-0.5, 3.0, -1.0, 1.0)) == 1

    def test_poles_are_added_back(self):
        # the box contains the pole at 2 but only one zero of g - 1
        assert count_zeros(Erlang(2, 2.0), (1.0, 3.0, -1.0, 1.0)) == 0
        assert count_zeros(Erlang(2, 2.0), (3.0, 5.0, -1.0, 1.0)) == 1

    def test_region_splitting_is_additive(self):
        m = Uniform01()
        whole = count_zeros(m, (-0.5, 3.0, -0.05, 30.0))
        parts = count_zeros(m, (-0.5, 1.7, -0.05, 30.0)) + count_zeros(m, (1.7, 3.0, -0.05, 30.0))
        # 0, 2.09 +- 7.46i and 2.66 +- 13.88i; the next pair has Re 3.03
        assert whole == parts == 3

    def test_boundary_zero_without_nudge(self):
        with pytest.raises(BoundaryZero):
            count_zeros(Exponential(1.0), (0.0, 1.0, -1.0, 1.0), nudge=False)

    def test_boundary_zero_nudged(self):
        assert count_zeros(Exponential(1.0), (0.0, 0.5, -1.0, 1.0)) in (0, 1)


class TestFindRoots:
    def test_uniform_against_lambert(self):
        roots = find_roots(Uniform01(), 4.5)
        expected = uniform_roots_lambert(4.5)
        assert len(roots) == len(expected)
        got = sorted((r.location for r in roots), key=lambda z: (z.real, abs(z.imag), z.imag))
        assert np.max(np.abs(np.array(got) - np.array(expected))) < 1e-7

    def test_uniform_small_strip(self):
        roots = find_roots(Uniform01(), 2.5)
        assert len(roots) == 3
        assert roots[0].location == 0
        assert roots[1].location == roots[2].location.conjugate()
        assert roots[1].conjugate_of is not None

    def test_uniform_explicit_bound_warns_and_keeps_box(self):
        with pytest.warns(RuntimeWarning, match="doubles"):
            roots = find_roots(Uniform01(), SearchRegion(4.5, im_bound=40.0))
        assert all(abs(r.location.imag) <= 40.0 for r in roots)
        assert len(roots) == 13

    def test_residuals(self):
        for r in find_roots(Uniform01(), 4.5):
            z = r.location
            assert abs(np.exp(z) - z - 1) < 1e-11

    def test_erlang_exact_roots(self):
        roots = find_roots(Erlang(2, 2.0), 5.0)
        assert [r.location for r in roots] == [0, 4]

    def test_hyperexponential_real_roots(self):
        m = HyperExponential([0.5, 0.5], [1.0, 3.0])
        roots = find_roots(m, 5.0)
        assert len(roots) == 2
        assert all(r.location.imag == 0 for r in roots)
        for r in roots:
            assert abs(m.mgf(r.location) - 1) < 1e-12

    def test_lattice_double_root(self, double_root_pmf):
        roots = find_roots(double_root_pmf, 3.0)
        double = [r for r in roots if r.multiplicity == 2]
        assert len(double) == 1
        assert abs(double[0].location - complex(math.log(2.0), math.pi)) < 1e-10
        assert sum(r.multiplicity for r in roots) == 3

    def test_matrix_exponential_double_root(self, double_root_me):
        model, _ = double_root_me
        roots = find_roots(model, 3.0)
        assert [(r.location, r.multiplicity) for r in roots] == [(0, 1), (1.25, 2)]

    def test_negative_binomial_count(self):
        roots = find_roots(NegativeBinomial(0.4, 3), 5.0)
        assert sum(r.multiplicity for r in roots) == 3

    def test_g_prime_stored(self):
        for r in find_roots(Uniform01(), 3.0):
            assert abs(r.g_prime - Uniform01().mgf_derivative(r.location, 1)) < 1e-10

    def test_to_dict_schema(self):
        d = find_roots(Uniform01(), 2.5)[1].to_dict()
        assert set(d) == {"re", "im", "multiplicity", "g_prime_re", "g_prime_im"}

    def test_diverging_newton_start_is_survived(self):
        # Newton from one sub-box centre runs off to infinity for this law
        T = [[-3.276173922912767, 1.8182490714251498], [0.0, -1.2018352229130596]]
        model = MatrixExponential([0.6004358539571327, 0.3995641460428673], T)
        roots = find_roots(model, 8.19)
        assert sum(r.multiplicity for r in roots) == count_zeros(model, (-0.5, 8.19, -40.0, 40.0))
        assert all(abs(model.mgf(r.location) - 1) < 1e-10 for r in roots)

    def test_zero_on_box_edge_is_nudged(self):
        # zeros at rate + 2 pi i k / d; the top edge passes through k = 2
        model = TruncatedExponential(1.0, 1.0)
        assert count_zeros(model, (-0.5, 1.5, -0.05, 4 * math.pi)) == 3


class TestLundbergRoot:
    def test_exponential_claims(self):
        assert lundberg_root(Exponential(3.0), 1.0, 1.0) == pytest.approx(2.0, abs=1e-14)

    def test_discrete(self):
        kappa = lundberg_root(DiscretePMF([0.7, 0.0, 0.3]))
        assert abs(kappa - math.log(7.0 / 3.0)) < 1e-12

    def test_truncated_exponential_lambert(self):
        # claims min(V, 2), V ~ Exp(1); alpha = 1, c = 1.5
        kappa = lundberg_root(TruncatedExponential(1.0, 2.0), 1.0, 1.5)
        g = TruncatedExponential(1.0, 2.0).mgf(kappa)
        assert abs(1.0 * (g - 1) - 1.5 * kappa) < 1e-12
        assert kappa == pytest.approx(0.69707001104, abs=1e-10)

    def test_negative_loading(self):
        with pytest.raises(NegativeLoading):
            lundberg_root(Exponential(1.0), 2.0, 1.0)

    def test_no_finite_root(self):
        # claims never exceed the unit premium, so E e^{kZ} never reaches e^k
        with pytest.raises(NoFiniteRoot):
            lundberg_root(DiscretePMF([0.5, 0.5]))


class TestGrowth:
    def test_rational_not_flagged(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = diagnose_growth(Erlang(2, 2.0), 1.0, 200.0)
        assert not rep.flagged

    def test_lattice_not_applicable(self):
        assert not diagnose_growth(DiscretePMF([0.5, 0.5]), 1.0, 200.0).applicable
