"""Residues of the expansion integrands at the zeros of ``g - 1``.

Every integrand has the shape ``h(z; x) = exp(-x (z + shift)) * phi(z)``
where ``phi`` does not depend on ``x``. A residue term is therefore stored
as ``exp(-x (z_j + shift)) * sum_k p_k x^k``, with a single coefficient
when ``z_j`` is a simple pole of ``phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DegenerateFactor, NoConvergence, NotSimple, PoleEvaluation, PoleTooClose
from .models import DistributionModel
from .rootfinder import Root

__all__ = [
    "KINDS",
    "IntegrandContext",
    "ResidueTerm",
    "residue_simple",
    "residue_numeric",
    "laurent_coefficients",
    "residue_term",
]

KINDS = ("nonlattice_v", "lattice_v", "density", "mass", "ruin_continuous", "ruin_discrete")

_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class IntegrandContext:
    """Which integrand to take residues of, and the data it depends on.

    ``model`` is the law whose MGF appears in ``1/(1-g)`` (for ruin kinds,
    the tilted ladder law). Ruin kinds also need ``kappa`` and the claim
    law; the continuous one needs ``alpha`` and ``c``.
    """

    model: DistributionModel
    kind: str
    kappa: float = 0.0
    alpha: float | None = None
    c: float | None = None
    claims: DistributionModel | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown integrand kind {self.kind!r}")
        if self.kind.startswith("ruin") and self.claims is None:
            raise ValueError("ruin integrands need the claim law")
        if self.kind == "ruin_continuous" and (self.alpha is None or self.c is None):
            raise ValueError("continuous ruin integrand needs alpha and c")

    @property
    def shift(self) -> float:
        return self.kappa if self.kind.startswith("ruin") else 0.0

    @property
    def claim_mean(self) -> float:
        return self.claims.mean if self.claims is not None else math.nan

    def phi(self, z: np.ndarray) -> np.ndarray:
        """The ``x``-independent factor of the integrand."""
        g = self.model.mgf(z)
        one_minus = 1.0 - g
        k = self.kind
        if k == "nonlattice_v":
            return 1.0 / (z * one_minus)
        if k == "lattice_v":
            return 1.0 / (np.expm1(z) * one_minus)
        if k in ("density", "mass"):
            return -1.0 / one_minus
        s = z + self.kappa
        m = self.claim_mean
        if k == "ruin_continuous":
            return (self.alpha * m - self.c) / (self.c * one_minus * s)
        # ruin_discrete
        es = np.exp(s)
        return -(m - g * es) / (one_minus * (1.0 - es))

    def integrand(self, z: np.ndarray, x: float) -> np.ndarray:
        return np.exp(-x * (z + self.shift)) * self.phi(z)

    def extra_singularities(self) -> list[complex]:
        """Singular points of ``phi`` that are not zeros of ``g - 1``."""
        if self.kind == "nonlattice_v":
            return [0j]
        if self.kind == "lattice_v":
            return [0j, 2j * np.pi, -2j * np.pi]
        if self.kind == "ruin_continuous":
            return [complex(-self.kappa)]
        if self.kind == "ruin_discrete":
            return [complex(-self.kappa, 2 * np.pi * k) for k in (-1, 0, 1)]
        return []


@dataclass(frozen=True)
class ResidueTerm:
    """``exp(-x * exponent) * sum_k coeffs[k] x^k`` for one root."""

    root: Root
    kind: str
    exponent: complex
    coeffs: tuple[complex, ...]

    @property
    def coefficient(self) -> complex:
        """Leading coefficient (the whole term for a simple root)."""
        return self.coeffs[0]

    def evaluate(self, x) -> np.ndarray | complex:
        xx = np.asarray(x, dtype=float)
        poly = np.zeros(xx.shape, dtype=complex)
        for k, p in enumerate(self.coeffs):
            poly = poly + p * xx**k
        out = np.exp(-xx * self.exponent) * poly
        return complex(out) if np.ndim(x) == 0 else out

    def conjugate(self) -> "ResidueTerm":
        r = self.root
        croot = Root(r.location.conjugate(), r.multiplicity, r.g_prime.conjugate(), r.conjugate_of)
        return ResidueTerm(croot, self.kind, self.exponent.conjugate(), tuple(c.conjugate() for c in self.coeffs))


def residue_simple(root: Root, kind: str, ctx: IntegrandContext) -> complex:
    """Closed-form coefficient ``c_j`` of the term at a simple root.

    The term is ``c_j * exp(-x (z_j + shift))``.

    Raises
    ------
    NotSimple
        ``root.multiplicity > 1``.
    DegenerateFactor
        The extra factor of the integrand vanishes or is singular at the root.
    """
    if root.multiplicity != 1:
        raise NotSimple(f"root {root.location} has multiplicity {root.multiplicity}")
    z = complex(root.location)
    gp = complex(root.g_prime) if root.g_prime != 0 else complex(ctx.model.mgf_derivative(z, 1))
    if gp == 0:
        raise NotSimple(f"g'(z) vanishes at {z}")
    if kind == "nonlattice_v":
        if abs(z) < _DEGENERATE_TOL:
            raise DegenerateFactor("the factor z vanishes at the root")
        return -1.0 / (z * gp)
    if kind == "lattice_v":
        em1 = np.expm1(z)
        if abs(em1) < _DEGENERATE_TOL:
            raise DegenerateFactor("the factor e^z - 1 vanishes at the root")
        return -1.0 / (em1 * gp)
    if kind in ("density", "mass"):
        return 1.0 / gp
    claims = ctx.claims
    s = z + ctx.kappa
    m = claims.mean
    if kind == "ruin_continuous":
        if abs(s) < _DEGENERATE_TOL:
            raise DegenerateFactor("z + kappa vanishes at the root")
        den = ctx.alpha * complex(claims.mgf_derivative(s, 1)) - ctx.c
        return (ctx.c - ctx.alpha * m) / den
    if kind == "ruin_discrete":
        es = np.exp(s)
        if abs(1.0 - es) < _DEGENERATE_TOL:
            raise DegenerateFactor("e^(z + kappa) - 1 vanishes at the root")
        return (m - es) / (es - complex(claims.mgf_derivative(s, 1)))
    raise ValueError(f"unknown integrand kind {kind!r}")


def _isolation_radius(ctx: IntegrandContext, pole: complex, radius_hint, avoid: Iterable[complex]) -> float:
    others = [complex(a) for a in avoid]
    others += ctx.extra_singularities()
    others += [p for p, _ in ctx.model.poles_in(pole.real - 1, pole.real + 1, pole.imag - 1, pole.imag + 1)]
    dists = [abs(o - pole) for o in others if abs(o - pole) > 1e-12]
    d = min(dists, default=math.inf)
    radius = min(0.1, 0.5 * d if math.isfinite(d) else 0.1)
    if radius_hint is not None:
        radius = min(radius, float(radius_hint))
    if radius < 1e-8:
        raise PoleTooClose(f"another singularity lies within {d:.2e} of {pole}")
    return radius


def _circle_means(func: Callable[[np.ndarray], np.ndarray], z0: complex, radius: float, powers, tol=1e-10):
    """``mean(func(z_k) (z_k - z0)^n)`` on an N-node circle, N doubled to convergence."""
    prev = None
    n = 64
    while n <= 4096:
        theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        dz = radius * np.exp(1j * theta)
        with np.errstate(all="ignore"):
            vals = func(z0 + dz)
        cur = np.array([np.mean(vals * dz**p) for p in powers])
        if not np.all(np.isfinite(cur)):
            raise NoConvergence(f"integrand is not finite on the circle around {z0}")
        if prev is not None:
            scale = max(np.max(np.abs(cur)), 1e-300)
            if np.max(np.abs(cur - prev)) <= tol * scale:
                return cur
        prev = cur
        n *= 2
    raise NoConvergence(f"trapezoid residue around {z0} did not settle at N=4096")


def residue_numeric(
    ctx: IntegrandContext,
    pole: complex,
    x: float,
    radius_hint: float | None = None,
    avoid: Iterable[complex] = (),
) -> complex:
    """Residue of the full integrand at ``pole`` by the trapezoid rule on a circle.

    ``avoid`` lists other zeros of ``g - 1`` that the circle must exclude.
    """
    pole = complex(pole)
    radius = _isolation_radius(ctx, pole, radius_hint, avoid)
    try:
        (val,) = _circle_means(lambda z: ctx.integrand(z, x), pole, radius, [1])
    except PoleEvaluation as exc:
        raise PoleTooClose(str(exc)) from None
    return complex(val)


def laurent_coefficients(
    ctx: IntegrandContext,
    pole: complex,
    order: int,
    radius_hint: float | None = None,
    avoid: Iterable[complex] = (),
) -> np.ndarray:
    """Principal-part coefficients ``a_{-1}, ..., a_{-order}`` of ``phi`` at ``pole``."""
    pole = complex(pole)
    radius = _isolation_radius(ctx, pole, radius_hint, avoid)
    return _circle_means(ctx.phi, pole, radius, list(range(1, order + 1)))


def residue_term(ctx: IntegrandContext, root: Root, avoid: Iterable[complex] = ()) -> ResidueTerm:
    """Expansion term of ``root``: closed form when simple, Laurent otherwise."""
    exponent = complex(root.location) + ctx.shift
    if root.multiplicity == 1:
        try:
            c = residue_simple(root, ctx.kind, ctx)
            return ResidueTerm(root, ctx.kind, exponent, (complex(c),))
        except DegenerateFactor:
            pass
    order = root.multiplicity
    z = complex(root.location)
    if ctx.kind == "nonlattice_v" and abs(z) < _DEGENERATE_TOL:
        order += 1
    if ctx.kind == "lattice_v" and abs(np.expm1(z)) < _DEGENERATE_TOL:
        order += 1
    avoid = [a for a in avoid if abs(complex(a) - z) > 1e-12]
    a = laurent_coefficients(ctx, z, order, avoid=avoid)
    # residue of exp(-x (z - z0)) phi(z) picks a_{-k-1} (-x)^k / k!
    coeffs = tuple(complex((-1) ** k * a[k] / math.factorial(k)) for k in range(order))
    return ResidueTerm(root, ctx.kind, exponent, coeffs)
