"""Exponential expansions of the renewal function and the renewal measure.

``v(x) = U(x) - x/mu - b`` is written as a sum of residue terms over the
zeros of ``g - 1`` in ``0 < Re z < r0`` (the intercept ``b`` depends on the
lattice flag). The renewal density (or mass function) includes the term at
``z = 0``, which is the constant ``1/mu``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .models import DistributionModel
from .residue import IntegrandContext, ResidueTerm, residue_term
from .rootfinder import Root, SearchRegion, diagnose_growth, find_roots

__all__ = [
    "Expansion",
    "ExactModeReport",
    "expand_v",
    "expand_U",
    "expand_density",
    "expand_mass",
    "evaluate",
    "exact_mode_check",
    "linear_part",
    "EXACT_FAMILIES",
]

log = logging.getLogger(__name__)

# families whose g is rational (in z, or in e^z for lattice laws)
EXACT_FAMILIES = (
    "exponential",
    "erlang",
    "hyperexponential",
    "matrix_exponential",
    "discrete_pmf",
    "negative_binomial",
    "geometric",
)


def linear_part(model: DistributionModel) -> tuple[float, float]:
    """Slope ``1/mu`` and intercept of the linear asymptote of ``U``."""
    mom = model.moments()
    mu, mu2 = mom.mu, mom.mu2
    if model.lattice:
        return 1.0 / mu, (mu2 + mu) / (2.0 * mu**2)
    return 1.0 / mu, mu2 / (2.0 * mu**2)


@dataclass
class Expansion:
    """Residue terms of one expansion, stored once per conjugate pair.

    ``quantity`` is one of ``v``, ``U``, ``density`` or ``mass``; only ``U``
    adds the linear part in :meth:`evaluate`.
    """

    quantity: str
    terms: list[ResidueTerm]
    paired: list[bool]
    linear: tuple[float, float]
    remainder_abscissa: float
    lattice: bool
    model: DistributionModel | None = None
    roots: list[Root] = field(default_factory=list)
    exact: bool = False
    diagnostics: dict = field(default_factory=dict)

    def _check_x(self, x):
        xx = np.asarray(x, dtype=float)
        if np.any(xx < 0):
            raise ValueError("x must be nonnegative")
        if self.lattice and np.any(xx != np.round(xx)):
            raise ValueError("lattice expansions are evaluated at integers only")
        return xx

    def term_values(self, x) -> np.ndarray:
        """Real contribution of every stored term (pairs count twice)."""
        xx = np.atleast_1d(self._check_x(x))
        out = np.empty((len(self.terms), xx.size))
        for i, (t, pair) in enumerate(zip(self.terms, self.paired)):
            val = t.evaluate(xx)
            out[i] = 2.0 * val.real if pair else val.real
        return out

    def linear_values(self, x) -> np.ndarray:
        xx = np.atleast_1d(self._check_x(x))
        slope, intercept = self.linear
        return slope * xx + intercept

    def evaluate(self, x):
        """Value of the expansion at ``x`` (scalar or array)."""
        xx = self._check_x(x)
        total = self.term_values(xx).sum(axis=0)
        if self.quantity == "U":
            total = total + self.linear_values(xx)
        if self.quantity == "mass" and self.model is not None:
            total = total + _origin_correction(self.model) * (np.atleast_1d(xx) == 0)
        return float(total[0]) if np.ndim(x) == 0 else total.reshape(np.shape(x))

    def breakdown(self, x: float) -> list[dict]:
        """Per-term contributions at a single ``x``."""
        vals = self.term_values(x)[:, 0]
        rows = []
        for t, pair, v in zip(self.terms, self.paired, vals):
            rows.append(
                {
                    "root": t.root.location,
                    "multiplicity": t.root.multiplicity,
                    "paired": pair,
                    "value": float(v),
                }
            )
        return rows

    def remainder_bound(self, x):
        """Bare exponential scale ``exp(-r0 x)`` of the omitted terms."""
        return np.exp(-self.remainder_abscissa * np.asarray(x, dtype=float))

    def __len__(self) -> int:
        return len(self.terms)


def _origin_correction(model: DistributionModel) -> float:
    """Contribution at k = 0 of the far edge of the fundamental domain.

    At ``k = 0`` the mass integrand tends to ``1/(1 - g(+inf))`` instead of
    decaying, so the residue sum misses exactly this amount.
    """
    kind = model.kind
    if kind == "negative_binomial":
        return 1.0
    if kind == "geometric":
        return model.q
    return 0.0


def evaluate(expansion: Expansion, x):
    """Evaluate ``expansion`` at ``x``; see :meth:`Expansion.evaluate`."""
    return expansion.evaluate(x)


def _build(model, r0, quantity, kind, include_zero, im_bound=None, check_growth=True) -> Expansion:
    region = SearchRegion(r0, lattice=model.lattice, im_bound=im_bound)
    if check_growth and not model.lattice:
        report = diagnose_growth(model, min(r0, 0.999 * model.mgf_radius), 200.0)
        if report.flagged:
            warnings.warn(
                f"1/(1-g) appears to grow along the strip (slope {report.slope:.2f}); "
                "the zero set may be incomplete",
                RuntimeWarning,
                stacklevel=3,
            )
    roots = find_roots(model, region)
    ctx = IntegrandContext(model, kind)
    locs = [r.location for r in roots]
    terms, paired = [], []
    for r in roots:
        if r.location.imag < 0:
            continue
        if r.location == 0 and not include_zero:
            continue
        terms.append(residue_term(ctx, r, avoid=locs))
        paired.append(r.conjugate_of is not None)
    exp = Expansion(
        quantity=quantity,
        terms=terms,
        paired=paired,
        linear=linear_part(model) if quantity in ("v", "U") else (0.0, 0.0),
        remainder_abscissa=float(r0),
        lattice=model.lattice,
        model=model,
        roots=roots,
    )
    report = exact_mode_check(model, exp)
    exp.exact = report.exact
    exp.diagnostics["exact_mode"] = report
    return exp


def expand_v(model: DistributionModel, r0: float, im_bound: float | None = None) -> Expansion:
    """Expansion of ``v = U - x/mu - intercept`` over the zeros with ``Re z < r0``.

    Examples
    --------
    >>> from renewal_expansions.models import Erlang
    >>> round(expand_v(Erlang(2, 2.0), 5.0).evaluate(1.0), 6)
    0.004579
    """
    kind = "lattice_v" if model.lattice else "nonlattice_v"
    return _build(model, r0, "v", kind, include_zero=False, im_bound=im_bound)


def expand_U(model: DistributionModel, r0: float, im_bound: float | None = None) -> Expansion:
    """Same terms as :func:`expand_v`, evaluated with the linear part added."""
    exp = expand_v(model, r0, im_bound)
    exp.quantity = "U"
    return exp


def expand_density(model: DistributionModel, r0: float, im_bound: float | None = None) -> Expansion:
    """Renewal density of a non-lattice law (term at zero included)."""
    if model.lattice:
        raise ValueError("use expand_mass for lattice laws")
    return _build(model, r0, "density", "density", include_zero=True, im_bound=im_bound)


def expand_mass(model: DistributionModel, r0: float) -> Expansion:
    """Renewal mass function ``u(k) = U(k) - U(k-1)`` of a lattice law."""
    if not model.lattice:
        raise ValueError("use expand_density for non-lattice laws")
    return _build(model, r0, "mass", "mass", include_zero=True)


# ---------------------------------------------------------------------------
# exact mode
# ---------------------------------------------------------------------------


@dataclass
class ExactModeReport:
    exact: bool
    samples: list[float]
    abscissae: list[float]
    root_total: int | None
    roots_included: int
    reason: str = ""


def total_root_count(model: DistributionModel) -> int | None:
    """Number of zeros of ``g - 1`` in the whole plane (per period if lattice).

    Known only for the families with rational ``g``; ``None`` otherwise.
    """
    kind = model.kind
    if kind == "exponential":
        return 1
    if kind == "erlang":
        return model.stages
    if kind == "hyperexponential":
        return len(model.poles())
    if kind == "matrix_exponential":
        if model.atom0 >= 1.0:
            return None
        return sum(k for _, k in model.poles())
    if kind == "discrete_pmf":
        return model.K
    if kind == "negative_binomial":
        return model.n
    if kind == "geometric":
        return 1
    return None


def exact_mode_check(model: DistributionModel, expansion: Expansion) -> ExactModeReport:
    """Heuristic test that the expansion holds with no remainder.

    Samples ``sup_theta |1/(e^r (1-g))|`` (lattice) or ``sup_theta |1/(r (1-g))|``
    at ``r`` in ``{10, 20, 40, 80}``. The flag is set only for families with
    rational ``g`` whose every zero is already part of the expansion, and
    only when the samples decay monotonically (below ``1e-3`` for lattice
    laws, by a factor 4 otherwise).
    """
    rs = [10.0, 20.0, 40.0, 80.0]
    samples = []
    for r in rs:
        if model.lattice:
            n = 2048
            theta = -np.pi + 2 * np.pi * (np.arange(n) + 0.5) / n
            scale = math.exp(r)
        else:
            n = 8192
            theta = -400.0 + 800.0 * (np.arange(n) + 0.5) / n
            scale = r
        z = r + 1j * theta
        with np.errstate(all="ignore"):
            try:
                g = model.mgf(z)
            except Exception:  # noqa: BLE001 - sampling is advisory
                samples.append(math.inf)
                continue
            vals = np.abs(1.0 / (scale * (1.0 - g)))
        vals = np.where(np.isnan(vals), 0.0, vals)
        samples.append(float(np.max(vals)))
    total = total_root_count(model)
    included = sum(r.multiplicity for r in expansion.roots) if expansion.roots else 0
    monotone = all(b <= a for a, b in zip(samples, samples[1:])) and all(np.isfinite(samples))
    if model.kind not in EXACT_FAMILIES or total is None:
        return ExactModeReport(False, samples, rs, total, included, "g is not rational in the strip variable")
    if included != total:
        return ExactModeReport(False, samples, rs, total, included, f"{included} of {total} zeros included")
    if not monotone:
        return ExactModeReport(False, samples, rs, total, included, "sampled suprema do not decay")
    if model.lattice and samples[-1] >= 1e-3:
        return ExactModeReport(False, samples, rs, total, included, "sampled suprema stay above 1e-3")
    if not model.lattice and samples[-1] > samples[0] / 4:
        return ExactModeReport(False, samples, rs, total, included, "sampled suprema decay too slowly")
    return ExactModeReport(True, samples, rs, total, included, "all zeros included; suprema decay")
