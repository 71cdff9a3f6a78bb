import cmath
import math

import numpy as np
import pytest

from renewal_expansions.errors import DegenerateFactor, NotSimple
from renewal_expansions.models import Erlang, Exponential, Uniform01
from renewal_expansions.residue import (
    IntegrandContext,
    laurent_coefficients,
    residue_numeric,
    residue_simple,
    residue_term,
)
from renewal_expansions.rootfinder import Root, find_roots


class TestResidueSimple:
    def test_erlang_density(self):
        ctx = IntegrandContext(Erlang(2, 2.0), "density")
        (r0, r4) = find_roots(Erlang(2, 2.0), 5.0)
        assert residue_simple(r0, "density", ctx) == pytest.approx(1.0)
        assert residue_simple(r4, "density", ctx) == pytest.approx(-1.0)

    def test_erlang_v(self):
        ctx = IntegrandContext(Erlang(2, 2.0), "nonlattice_v")
        root = find_roots(Erlang(2, 2.0), 5.0)[1]
        assert residue_simple(root, "nonlattice_v", ctx) == pytest.approx(0.25)

    def test_zero_is_degenerate_for_v(self):
        ctx = IntegrandContext(Uniform01(), "nonlattice_v")
        root = find_roots(Uniform01(), 1.0)[0]
        with pytest.raises(DegenerateFactor):
            residue_simple(root, "nonlattice_v", ctx)

    def test_multiple_root_rejected(self):
        ctx = IntegrandContext(Exponential(1.0), "density")
        with pytest.raises(NotSimple):
            residue_simple(Root(1.0 + 0j, 2, 0j), "density", ctx)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            IntegrandContext(Exponential(1.0), "bogus")


class TestResidueNumeric:
    @pytest.mark.parametrize("kind", ["density", "nonlattice_v"])
    def test_matches_closed_form_on_uniform(self, kind):
        m = Uniform01()
        roots = find_roots(m, 3.5)
        ctx = IntegrandContext(m, kind)
        locs = [r.location for r in roots]
        for r in roots[1:]:
            x = 0.7
            c = residue_simple(r, kind, ctx)
            num = residue_numeric(ctx, r.location, x, avoid=locs)
            assert abs(num - c * cmath.exp(-x * r.location)) < 1e-9 * max(1.0, abs(num))

    def test_double_pole_at_zero_for_v(self):
        # the residue at 0 of the v integrand is the linear asymptote x/mu + mu2/(2 mu^2)
        m = Erlang(2, 2.0)
        ctx = IntegrandContext(m, "nonlattice_v")
        res = residue_numeric(ctx, 0.0, 1.3, avoid=[4.0])
        assert res.real == pytest.approx(1.3 + 0.75, abs=1e-9)


class TestLaurent:
    def test_double_root_against_symbolic(self, double_root_me):
        model, (p0, p1) = double_root_me
        roots = find_roots(model, 3.0)
        ctx = IntegrandContext(model, "density")
        term = residue_term(ctx, roots[1], avoid=[r.location for r in roots])
        assert term.root.multiplicity == 2
        assert abs(term.coeffs[0] - p0) < 1e-9
        assert abs(term.coeffs[1] - p1) < 1e-9
        assert abs(p0 - (-0.14)) < 1e-12 and abs(p1 - 0.0125) < 1e-12

    def test_simple_pole_principal_part(self):
        m = Erlang(2, 2.0)
        ctx = IntegrandContext(m, "density")
        (a1,) = laurent_coefficients(ctx, 4.0, 1)
        # phi = -1/(1-g), residue 1/g'(4) = -1
        assert a1 == pytest.approx(-1.0, abs=1e-10)


class TestTermConjugate:
    def test_conjugate_pair_values(self):
        m = Uniform01()
        roots = find_roots(m, 2.5)
        ctx = IntegrandContext(m, "density")
        t = residue_term(ctx, roots[1])
        tc = t.conjugate()
        x = np.linspace(0, 3, 7)
        assert np.allclose(t.evaluate(x), np.conj(tc.evaluate(x)), atol=1e-15)
        direct = residue_term(ctx, roots[2])
        assert abs(direct.coefficient - tc.coefficient) < 1e-12
        assert math.isclose(direct.exponent.imag, tc.exponent.imag, abs_tol=1e-12)
