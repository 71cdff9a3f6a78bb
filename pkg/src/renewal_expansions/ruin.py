"""Multi-term expansions of ruin probabilities.

The ruin probability satisfies a defective renewal equation; after the
exponential tilt by the Lundberg exponent ``kappa`` it becomes a proper
renewal equation, and every zero ``z_j`` of ``g - 1`` of the tilted law in
``0 <= Re z < r`` contributes a term ``C_j exp(-(z_j + kappa) x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.special

from .errors import DegenerateDirection, ModelError, NegativeLoading
from .models import (
    DiscretePMF,
    DistributionModel,
    Exponential,
    LadderContinuous,
    TruncatedExponential,
    tilt_ladder_continuous,
    tilt_ladder_discrete,
)
from .residue import IntegrandContext, ResidueTerm, residue_term
from .rootfinder import Root, SearchRegion, find_roots, lundberg_root

__all__ = [
    "ContinuousRiskModel",
    "DiscreteRiskModel",
    "BivariateModel",
    "RuinExpansion",
    "BivariateResult",
    "ruin_continuous",
    "ruin_discrete",
    "ruin_bivariate",
    "cramer_lundberg_constant",
    "stop_loss_pair",
    "stop_loss_lambert_roots",
]


@dataclass(frozen=True)
class ContinuousRiskModel:
    """Compound Poisson surplus ``x + c t - sum of claims`` with intensity ``alpha``."""

    alpha: float
    c: float
    claims: DistributionModel

    def __post_init__(self):
        if not self.alpha > 0 or not self.c > 0:
            raise ModelError("alpha and c must be positive")
        if self.claims.lattice:
            raise ModelError("continuous risk model needs a continuous claim law")
        if self.c <= self.alpha * self.claims.mean:
            raise NegativeLoading(f"premium {self.c} does not exceed alpha*m = {self.alpha * self.claims.mean}")

    @property
    def m(self) -> float:
        return self.claims.mean

    @cached_property
    def kappa(self) -> float:
        return lundberg_root(self.claims, self.alpha, self.c)

    @cached_property
    def ladder(self) -> LadderContinuous:
        return tilt_ladder_continuous(self.claims, self.alpha, self.c, self.kappa)


@dataclass(frozen=True)
class DiscreteRiskModel:
    """Binomial model: unit premium per period, i.i.d. integer claims ``Z``."""

    claims: DistributionModel

    def __post_init__(self):
        if not self.claims.lattice:
            raise ModelError("discrete risk model needs integer-valued claims")
        if self.claims.mean >= 1.0:
            raise NegativeLoading(f"E[Z] = {self.claims.mean} must be below 1")

    @property
    def m(self) -> float:
        return self.claims.mean

    @cached_property
    def kappa(self) -> float:
        return lundberg_root(self.claims)

    @cached_property
    def tilted(self):
        return tilt_ladder_discrete(self.claims, self.kappa)


@dataclass
class RuinExpansion:
    """``psi(x) ~ sum_j Re-paired C_j exp(-(z_j + kappa) x)``."""

    terms: list[ResidueTerm]
    paired: list[bool]
    kappa: float
    r: float
    lattice: bool
    roots: list[Root] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    origin: float = 0.0

    @property
    def remainder_exponent(self) -> float:
        return self.r + self.kappa if math.isfinite(self.kappa) else math.inf

    def term_values(self, x) -> np.ndarray:
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((len(self.terms), xx.size))
        for i, (t, pair) in enumerate(zip(self.terms, self.paired)):
            val = t.evaluate(xx)
            out[i] = 2.0 * val.real if pair else val.real
        return out

    def evaluate(self, x):
        xx = np.asarray(x, dtype=float)
        if self.lattice and np.any(xx != np.round(xx)):
            raise ValueError("discrete ruin expansions are evaluated at integers only")
        total = self.term_values(xx).sum(axis=0)
        if self.origin:
            total = total + self.origin * (np.atleast_1d(xx) == 0)
        return float(total[0]) if np.ndim(x) == 0 else total.reshape(np.shape(x))

    def breakdown(self, x: float) -> list[dict]:
        vals = self.term_values(x)[:, 0]
        return [
            {"exponent": t.exponent, "coefficient": t.coeffs[0], "paired": p, "value": float(v)}
            for t, p, v in zip(self.terms, self.paired, vals)
        ]

    def leading(self) -> tuple[float, float]:
        """Cramer-Lundberg pair ``(kappa, C)``."""
        t = self.terms[0]
        return float(t.exponent.real), float(t.coeffs[0].real)

    def __len__(self) -> int:
        return len(self.terms)


def _assemble(ctx: IntegrandContext, roots: list[Root]) -> tuple[list[ResidueTerm], list[bool]]:
    locs = [r.location for r in roots]
    terms, paired = [], []
    for r in roots:
        if r.location.imag < 0:
            continue
        terms.append(residue_term(ctx, r, avoid=locs))
        paired.append(r.conjugate_of is not None)
    return terms, paired


def cramer_lundberg_constant(model: ContinuousRiskModel | DiscreteRiskModel) -> float:
    """Coefficient ``C`` of the leading term ``C exp(-kappa x)``.

    Continuous: ``(c - alpha m) / (alpha E[Z e^{kappa Z}] - c)``.
    Discrete: ``(m - e^kappa) / (e^kappa - E[Z e^{kappa Z}])``.
    """
    kappa = model.kappa
    mprime = float(model.claims.mgf_derivative(kappa, 1).real)
    if isinstance(model, DiscreteRiskModel):
        ek = math.exp(kappa)
        return (model.m - ek) / (ek - mprime)
    return (model.c - model.alpha * model.m) / (model.alpha * mprime - model.c)


def ruin_continuous(model: ContinuousRiskModel, r: float, im_bound: float | None = None) -> RuinExpansion:
    """Ruin probability expansion of the compound Poisson model.

    Terms cover the zeros of the tilted ladder ``g - 1`` with ``Re z < r``;
    the remainder is ``o(exp(-(r + kappa) x))``.
    """
    kappa = model.kappa
    ladder = model.ladder
    roots = find_roots(ladder, SearchRegion(r, lattice=False, im_bound=im_bound))
    ctx = IntegrandContext(ladder, "ruin_continuous", kappa=kappa, alpha=model.alpha, c=model.c, claims=model.claims)
    terms, paired = _assemble(ctx, roots)
    mprime = float(model.claims.mgf_derivative(kappa, 1).real)
    alt_den = mprime - model.c
    diag = {
        "C": cramer_lundberg_constant(model),
        # the same constant with the denominator written without alpha
        "C_alt_denominator": (model.c - model.alpha * model.m) / alt_den if alt_den != 0 else math.nan,
        "safety_loading": model.c / (model.alpha * model.m) - 1.0,
    }
    return RuinExpansion(terms, paired, kappa, float(r), False, roots, diag)


def ruin_discrete(model: DiscreteRiskModel, r: float) -> RuinExpansion:
    """Ruin probability expansion of the discrete-time binomial model.

    Claims that are identically zero give an empty expansion (no ruin).
    """
    if model.m == 0.0:
        return RuinExpansion([], [], math.inf, float(r), True, [], {"reason": "claims vanish, psi = 0"})
    kappa = model.kappa
    tilted = model.tilted
    roots = find_roots(tilted, SearchRegion(r, lattice=True))
    ctx = IntegrandContext(tilted, "ruin_discrete", kappa=kappa, claims=model.claims)
    terms, paired = _assemble(ctx, roots)
    diag = {"C": cramer_lundberg_constant(model)}
    # at x = 0 the integrand tends to 1 on the far edge when G is a polynomial
    origin = -1.0 if isinstance(tilted, DiscretePMF) else 0.0
    return RuinExpansion(terms, paired, kappa, float(r), True, roots, diag, origin)


# ---------------------------------------------------------------------------
# two companies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BivariateModel:
    """Two risk processes observed along the ray ``x2 = q x1``."""

    model1: ContinuousRiskModel
    model2: ContinuousRiskModel
    q: float
    r_max: float = 16.0

    def __post_init__(self):
        if not self.q > 0:
            raise ModelError("q must be positive")


@dataclass(frozen=True)
class _Candidate:
    label: str
    exponent: complex
    coefficient: complex


@dataclass
class BivariateResult:
    """Two dominant terms of ``psi_or(x, q x)`` and the region they define."""

    q: float
    region: str
    d0: float
    D0: float
    d1: complex
    D1: complex
    boundary: bool = False
    orderings: list[list[str]] = field(default_factory=list)
    candidates: list[dict] = field(default_factory=list)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.D0 * np.exp(-self.d0 * x) + (self.D1 * np.exp(-self.d1 * x)).real

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "region": self.region,
            "d0": self.d0,
            "D0": self.D0,
            "d1_re": self.d1.real,
            "d1_im": self.d1.imag,
            "D1_re": self.D1.real,
            "D1_im": self.D1.imag,
            "boundary": self.boundary,
        }


@dataclass(frozen=True)
class TwoTermData:
    kappa: float
    C0: float
    z1: complex | None
    C1: complex
    paired: bool


def two_term_data(model: ContinuousRiskModel, r_max: float = 16.0) -> TwoTermData:
    """Leading constant and the first subdominant root of one company.

    The strip is widened (1, 2, 4, ... up to ``r_max``) until a zero besides
    ``z = 0`` appears; with none found the second coefficient is zero.
    """
    r = 1.0
    while True:
        exp = ruin_continuous(model, r)
        if len(exp.terms) > 1 or r >= r_max:
            break
        r *= 2.0
    C0 = float(exp.terms[0].coeffs[0].real)
    if len(exp.terms) < 2:
        return TwoTermData(model.kappa, C0, None, 0j, False)
    t = exp.terms[1]
    if len(t.coeffs) > 1:
        raise ModelError("the first subdominant zero is not simple")
    return TwoTermData(model.kappa, C0, complex(t.root.location), complex(t.coeffs[0]), exp.paired[1])


_REGIONS = {
    ("psi1_0", "psi1_1"): "psi1_two_terms",
    ("psi1_0", "psi2_0"): "psi1_psi2",
    ("psi2_0", "psi1_0"): "psi2_psi1",
    ("psi2_0", "psi2_1"): "psi2_two_terms",
}


def _candidates(a: TwoTermData, b: TwoTermData, q: float) -> list[_Candidate]:
    cands = [
        _Candidate("psi1_0", complex(a.kappa), complex(a.C0)),
        _Candidate("psi2_0", complex(q * b.kappa), complex(b.C0)),
    ]
    if a.z1 is not None and a.C1 != 0:
        cands.append(_Candidate("psi1_1", a.kappa + a.z1, (2.0 if a.paired else 1.0) * a.C1))
    if b.z1 is not None and b.C1 != 0:
        cands.append(_Candidate("psi2_1", q * (b.kappa + b.z1), (2.0 if b.paired else 1.0) * b.C1))
    return cands


def ruin_bivariate(
    model: BivariateModel,
    strict: bool = False,
    data: tuple[TwoTermData, TwoTermData] | None = None,
) -> BivariateResult:
    """Two-term expansion of ``psi_or(x, q x)``.

    The two candidate terms with the smallest real exponents are kept; a
    conjugate pair counts as one candidate with coefficient ``2 C``. When a
    tie within ``1e-10`` decides the ordering the result carries
    ``boundary=True`` and both orderings (``strict=True`` raises instead).
    """
    a, b = data if data is not None else (two_term_data(model.model1, model.r_max), two_term_data(model.model2, model.r_max))
    cands = sorted(_candidates(a, b, model.q), key=lambda c: c.exponent.real)
    boundary = False
    orderings = [[c.label for c in cands[:2]]]
    for i in (0, 1):
        if i + 1 < len(cands) and abs(cands[i].exponent.real - cands[i + 1].exponent.real) < 1e-10:
            boundary = True
            swapped = list(cands)
            swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
            orderings.append([c.label for c in swapped[:2]])
    if boundary and strict:
        raise DegenerateDirection(f"candidate exponents coincide at q={model.q}")
    first, second = cands[0], cands[1]
    region = _REGIONS.get((first.label, second.label), "undetermined")
    return BivariateResult(
        q=model.q,
        region=region,
        d0=float(first.exponent.real),
        D0=float(first.coefficient.real),
        d1=second.exponent,
        D1=second.coefficient,
        boundary=boundary,
        orderings=orderings,
        candidates=[
            {"label": c.label, "exponent": c.exponent, "coefficient": c.coefficient} for c in cands
        ],
    )


# ---------------------------------------------------------------------------
# stop-loss reinsurance pair
# ---------------------------------------------------------------------------


def stop_loss_pair(lam: float, d: float, alpha: float, c1: float, c2: float) -> tuple[ContinuousRiskModel, ContinuousRiskModel]:
    """Insurer keeping ``min(V, d)`` and reinsurer paying ``(V - d)^+``.

    ``V`` is exponential(``lam``); the reinsurer only sees claims above the
    priority, which arrive with intensity ``alpha e^{-lam d}`` and are again
    exponential(``lam``) by memorylessness.
    """
    insurer = ContinuousRiskModel(alpha, c1, TruncatedExponential(lam, d))
    reinsurer = ContinuousRiskModel(alpha * math.exp(-lam * d), c2, Exponential(lam))
    return insurer, reinsurer


def stop_loss_lambert_roots(lam: float, d: float, alpha: float, c: float, kappa: float, branches=range(-6, 7)) -> list[complex]:
    """Zeros of the tilted ladder ``g - 1`` for truncated exponential claims.

    With ``u = z + kappa - lam`` the equation reduces to
    ``e^{u d} = 1 + (c / alpha) u``, solved by
    ``u = -alpha/c - W_k(-a e^{-a}) / d`` with ``a = alpha d / c``. The
    branch giving ``u = 0`` is not a zero of ``g - 1`` unless ``alpha d = c``
    and is dropped.
    """
    a = alpha * d / c
    arg = -a * math.exp(-a)
    out = []
    for k in branches:
        w = complex(scipy.special.lambertw(arg, k))
        u = -alpha / c - w / d
        if abs(u) < 1e-9:
            continue
        out.append(lam - kappa + u)
    uniq = []
    for z in sorted(out, key=lambda z: (z.real, abs(z.imag))):
        if not any(abs(z - w) < 1e-9 for w in uniq):
            uniq.append(z)
    return uniq
