"""Invariants every expansion must satisfy, checked on one model instance.

Shared by the hypothesis suite and the acceptance run.
"""

import cmath
import math
import warnings

import numpy as np

from renewal_expansions.expansion import expand_density, expand_mass
from renewal_expansions.models import (
    DiscretePMF,
    Erlang,
    Exponential,
    Geometric,
    HyperExponential,
    MatrixExponential,
    NegativeBinomial,
    TruncatedExponential,
)
from renewal_expansions.residue import IntegrandContext, residue_numeric, residue_simple, residue_term
from renewal_expansions.rootfinder import count_zeros

FAMILIES = (
    "exponential",
    "erlang",
    "hyperexponential",
    "matrix_exponential",
    "truncated_exponential",
    "discrete_pmf",
    "negative_binomial",
    "geometric",
)


def build(family: str, u: np.ndarray):
    """Model, strip width and box height from uniforms ``u`` in [0, 1).

    The height is ``None`` unless the family has infinitely many zeros in the
    strip.
    """
    if family == "exponential":
        rate = 0.5 + 4.5 * u[0]
        return Exponential(rate), 1.5 * rate, None
    if family == "erlang":
        stages = 2 + int(3 * u[0])
        rate = 0.5 + 2.5 * u[1]
        return Erlang(stages, rate), 2.2 * rate, None
    if family == "hyperexponential":
        k = 2 + int(2 * u[0])
        w = u[1 : 1 + k] + 0.1
        rates = np.cumsum(0.3 + 2.0 * u[4 : 4 + k])
        return HyperExponential(w / w.sum(), rates), 1.1 * rates[-1], None
    if family == "matrix_exponential":
        n = 2 + int(2 * u[0])
        diag = 0.5 + 3.0 * u[1 : 1 + n]
        T = np.diag(-diag)
        for i in range(n - 1):
            T[i, i + 1] = diag[i] * (0.2 + 0.8 * u[5 + i])
        a = u[8 : 8 + n] + 0.05
        return MatrixExponential(a / a.sum(), T), 2.5 * diag.max(), None
    if family == "truncated_exponential":
        # g - 1 = (e^{(z - rate) d} - 1) z / (z - rate): a column of zeros on Re z = rate
        rate, d = 0.5 + 2.0 * u[0], 0.5 + 2.0 * u[1]
        k = 1 + int(4 * u[2])
        return TruncatedExponential(rate, d), rate + 0.3, (k + 0.5) * 2 * math.pi / d
    if family == "discrete_pmf":
        K = 2 + int(5 * u[0])
        p = u[1 : 2 + K] + 0.02
        return DiscretePMF(p / p.sum()), 3.0, None
    if family == "negative_binomial":
        return NegativeBinomial(0.1 + 0.7 * u[0], 1 + int(3 * u[1])), 1.0 - math.log(0.1 + 0.7 * u[0]) + 1.0, None
    if family == "geometric":
        return Geometric(0.1 + 0.8 * u[0]), 3.0, None
    raise ValueError(family)


def check_instance(model, r0: float, im_bound: float | None = None) -> list[str]:
    """Return the list of violated invariants (empty when all hold)."""
    with warnings.catch_warnings():
        # an explicit box cuts off zeros on purpose
        warnings.simplefilter("ignore", RuntimeWarning)
        return _check(model, r0, im_bound)


def _check(model, r0, im_bound):
    problems = []
    exp = expand_mass(model, r0) if model.lattice else expand_density(model, r0, im_bound)
    roots = exp.roots
    locs = [r.location for r in roots]
    kind = "mass" if model.lattice else "density"
    ctx = IntegrandContext(model, kind)

    # conjugate symmetry of roots and of their terms
    for r in roots:
        z = r.location
        if abs(z.imag) < 1e-12 or (model.lattice and abs(abs(z.imag) - math.pi) < 1e-9):
            continue
        mates = [s for s in roots if abs(s.location - z.conjugate()) < 1e-9 * max(1.0, abs(z))]
        if len(mates) != 1:
            problems.append(f"no conjugate for {z}")
            continue
        a = residue_term(ctx, r, avoid=locs)
        b = residue_term(ctx, mates[0], avoid=locs)
        for ca, cb in zip(a.coeffs, b.coeffs):
            if abs(ca - cb.conjugate()) > 1e-9 * max(1.0, abs(ca)):
                problems.append(f"term at {z} is not conjugate-symmetric")

    # closed form against the trapezoid rule on every simple root
    x = 0.5 if not model.lattice else 1.0
    for r in roots:
        if r.multiplicity != 1:
            continue
        c = residue_simple(r, kind, ctx)
        num = residue_numeric(ctx, r.location, x, avoid=locs)
        ref = c * cmath.exp(-x * r.location)
        if abs(num - ref) > 1e-9 * max(1.0, abs(ref)):
            problems.append(f"residue mismatch at {r.location}: {abs(num - ref):.2e}")

    # real-valued evaluations; the unpaired sum over all roots is real too
    xs = np.arange(6.0) if model.lattice else np.linspace(0.0, 3.0, 7)
    vals = exp.evaluate(xs)
    if vals.dtype != float or not np.all(np.isfinite(vals)):
        problems.append("evaluation is not real and finite")
    full = sum(residue_term(ctx, r, avoid=locs).evaluate(xs) for r in roots)
    if np.max(np.abs(np.imag(full))) > 1e-9 * max(1.0, np.max(np.abs(full))):
        problems.append("residue sum has an imaginary part")

    # argument-principle counts add up when the region is split
    if model.lattice:
        top = math.pi + 0.05
    elif im_bound is not None:
        top = im_bound
    else:
        top = max([abs(z.imag) for z in locs] + [1.0]) + 1.0
    rect = (-0.5, r0, -0.05, top)
    whole = count_zeros(model, rect)
    mid = 0.5 * (rect[0] + rect[1]) + 1e-3 * math.pi
    left = count_zeros(model, (rect[0], mid, rect[2], rect[3]))
    right = count_zeros(model, (mid, rect[1], rect[2], rect[3]))
    shifts = (-2 * math.pi, 0.0, 2 * math.pi) if model.lattice else (0.0,)
    inside = sum(
        r.multiplicity
        for r in roots
        for s in shifts
        if rect[0] < r.location.real < rect[1] and rect[2] < r.location.imag + s < rect[3]
    )
    if not whole == left + right == inside:
        problems.append(f"counts disagree: whole {whole}, split {left}+{right}, found {inside}")
    return problems
