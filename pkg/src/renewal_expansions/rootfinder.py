"""Zeros of ``g(z) - 1`` in vertical strips, and the real Lundberg exponent.

Zeros are counted with the argument principle (adaptive Gauss-Kronrod on
each rectangle edge), isolated by recursive bisection and polished by
Newton's method. Poles of ``g`` inside a rectangle are known in closed form
and added back to the winding number.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    BoundaryZero,
    MultiplicityUnresolved,
    NegativeLoading,
    NoFiniteRoot,
    PoleEvaluation,
    QuadratureDivergence,
)
from .models import DistributionModel

__all__ = [
    "Root",
    "SearchRegion",
    "GrowthReport",
    "count_zeros",
    "find_roots",
    "lundberg_root",
    "diagnose_growth",
]

log = logging.getLogger(__name__)

MAX_NODES = 2**16
NEWTON_TOL = 1e-13
NEWTON_MAXIT = 100
# iterates beyond this modulus have escaped; abs() of them may overflow
NEWTON_ESCAPE = 1e100
NUDGE = 1e-6
MAX_NUDGES = 5
LEFT_EDGE = -0.5
OVERFLOW_GUARD = 700.0

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])  # 15 nodes, ascending
_WK15 = np.concatenate([_WK[:-1], _WK[::-1]])
_WG7 = np.zeros(15)
_WG7[1:7:2] = _WG[:3]
_WG7[7] = _WG[3]
_WG7[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class Root:
    """A solution of ``g(z) = 1``."""

    location: complex
    multiplicity: int = 1
    g_prime: complex = 0j
    conjugate_of: int | None = None

    @property
    def is_real(self) -> bool:
        return self.location.imag == 0.0

    def to_dict(self) -> dict:
        return {
            "re": self.location.real,
            "im": self.location.imag,
            "multiplicity": self.multiplicity,
            "g_prime_re": self.g_prime.real,
            "g_prime_im": self.g_prime.imag,
        }


@dataclass(frozen=True)
class SearchRegion:
    """Strip ``0 <= Re z < r0`` (height ``im_bound``, or the lattice period)."""

    r0: float
    lattice: bool = False
    im_bound: float | None = None

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.im_bound is not None and not self.im_bound > 0:
            raise ValueError("im_bound must be positive")


# ---------------------------------------------------------------------------
# argument principle
# ---------------------------------------------------------------------------


def _log_derivative(model: DistributionModel, z: np.ndarray):
    g1 = model.mgf(z) - 1.0
    dg = model.mgf_derivative(z, 1)
    return g1, dg


@np.errstate(all="ignore")
def _edge_winding(model, a: complex, b: complex, budget: list[int], tol: float) -> tuple[complex, float]:
    """Adaptive G7K15 integral of ``g'/(g-1)`` along the segment ``a -> b``."""
    pending = [(a, b)]
    total = 0j
    min_mod = math.inf
    while pending:
        starts = np.array([p[0] for p in pending])
        ends = np.array([p[1] for p in pending])
        mid = 0.5 * (starts + ends)
        half = 0.5 * (ends - starts)
        z = mid[:, None] + half[:, None] * _NODES[None, :]
        budget[0] += z.size
        if budget[0] > MAX_NODES:
            raise QuadratureDivergence("contour quadrature exceeded the node budget")
        g1, dg = _log_derivative(model, z.ravel())
        g1 = g1.reshape(z.shape)
        dg = dg.reshape(z.shape)
        min_mod = min(min_mod, float(np.min(np.abs(g1))))
        if min_mod < 1e-8:
            raise BoundaryZero(f"g - 1 vanishes near the contour (|g-1| = {min_mod:.1e})")
        f = dg / g1
        kron = half * (f @ _WK15)
        gauss = half * (f @ _WG7)
        err = np.abs(kron - gauss)
        seg_tol = tol * np.abs(half) / max(abs(b - a) / 2, 1e-300)
        nxt = []
        for i, (s, e) in enumerate(pending):
            if err[i] <= max(seg_tol[i], 1e-14) or abs(half[i]) < 1e-13:
                total += kron[i]
            else:
                m = mid[i]
                nxt.extend([(s, m), (m, e)])
        pending = nxt
    return total, min_mod


def _winding(model, x0, x1, y0, y1) -> float:
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = 0j
    for k in range(4):
        budget = [0]
        val, _ = _edge_winding(model, corners[k], corners[(k + 1) % 4], budget, 1e-5)
        total += val
    return (total / (2j * np.pi)).real, (total / (2j * np.pi)).imag


def count_zeros(model: DistributionModel, rect: tuple[float, float, float, float], nudge: bool = True) -> int:
    """Number of zeros of ``g - 1`` (with multiplicity) inside ``rect``.

    ``rect`` is ``(x0, x1, y0, y1)``. If ``g - 1`` vanishes on the boundary
    (or a pole of ``g`` sits on it) the rectangle is enlarged by ``1e-6``
    on every side, at most five times.

    Raises
    ------
    BoundaryZero
        The boundary still touches a zero after the nudges.
    QuadratureDivergence
        The adaptive rule needed more than ``2**16`` nodes on an edge, even
        after the nudges.
    """
    x0, x1, y0, y1 = map(float, rect)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("rect must satisfy x0 < x1 and y0 < y1")
    last_exc: Exception | None = None
    for attempt in range(MAX_NUDGES + 1):
        try:
            w, wi = _winding(model, x0, x1, y0, y1)
        except (BoundaryZero, PoleEvaluation, QuadratureDivergence) as exc:
            # a zero sitting on an edge can exhaust the node budget before
            # the modulus test fires; both are cured by a nudge
            last_exc = exc
        else:
            n_poles = sum(k for _, k in model.poles_in(x0, x1, y0, y1))
            val = w + n_poles
            if abs(val - round(val)) < 1e-3 and abs(wi) < 1e-3:
                return int(round(val))
            last_exc = BoundaryZero(f"winding number {val:.6f} is not close to an integer")
        if not nudge:
            break
        x0, x1, y0, y1 = x0 - NUDGE, x1 + NUDGE, y0 - NUDGE, y1 + NUDGE
    if isinstance(last_exc, PoleEvaluation):
        raise BoundaryZero(str(last_exc))
    raise last_exc  # type: ignore[misc]


# ---------------------------------------------------------------------------
# local refinement
# ---------------------------------------------------------------------------


@np.errstate(all="ignore")
def _newton(model, z: complex, mult: int = 1) -> complex | None:
    for _ in range(NEWTON_MAXIT):
        try:
            g1 = model.mgf(z) - 1.0
            dg = model.mgf_derivative(z, 1)
        except PoleEvaluation:
            return None
        if dg == 0:
            return z if g1 == 0 else None
        step = mult * g1 / dg
        if not np.isfinite(step):
            return None
        z = z - step
        if not max(abs(z.real), abs(z.imag)) < NEWTON_ESCAPE:
            return None
        if abs(step) <= NEWTON_TOL * max(1.0, abs(z)):
            return z
    return None


def _inside(z, x0, x1, y0, y1, pad=0.0) -> bool:
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


def _isolate(model, rect, n, out, depth=0):
    """Bisect ``rect`` (holding ``n`` zeros) until every zero is located."""
    x0, x1, y0, y1 = rect
    if n == 0:
        return
    diam = math.hypot(x1 - x0, y1 - y0)
    centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    if n == 1:
        z = _newton(model, centre)
        if z is not None and _inside(z, x0, x1, y0, y1, pad=1e-9):
            out.append((z, 1))
            return
    elif diam < 0.05:
        z = _polish_multiple(model, centre, n)
        if z is not None and _inside(z, x0, x1, y0, y1, pad=1e-9) and abs(model.mgf(z) - 1) < 1e-10:
            h = min(1e-2, max(diam, 1e-4))
            try:
                k = count_zeros(model, (z.real - h, z.real + h, z.imag - h, z.imag + h), nudge=False)
            except BoundaryZero:
                k = -1
            if k == n and _derivatives_vanish(model, z, n):
                out.append((z, n))
                return
    if diam < 1e-9:
        raise MultiplicityUnresolved(f"{n} zeros packed near {centre} with distinct Newton limits")
    # split the longer side, nudging the cut off any zero
    for shift in (0.0, 1e-3, -1e-3, 7e-3, -7e-3):
        try:
            if x1 - x0 >= y1 - y0:
                cut = 0.5 * (x0 + x1) + shift * (x1 - x0)
                halves = [(x0, cut, y0, y1), (cut, x1, y0, y1)]
            else:
                cut = 0.5 * (y0 + y1) + shift * (y1 - y0)
                halves = [(x0, x1, y0, cut), (x0, x1, cut, y1)]
            counts = [count_zeros(model, h, nudge=False) for h in halves]
        except BoundaryZero:
            continue
        if sum(counts) == n:
            break
    else:
        raise BoundaryZero(f"could not split rectangle {rect} cleanly")
    for h, k in zip(halves, counts):
        _isolate(model, h, k, out, depth + 1)


@np.errstate(all="ignore")
def _polish_multiple(model, z, n):
    # Newton on the (n-1)-th derivative converges quadratically at an n-fold zero
    if n - 1 > 3:
        return None
    for _ in range(NEWTON_MAXIT):
        try:
            num = model.mgf_derivative(z, n - 1)
            den = model.mgf_derivative(z, n)
        except (PoleEvaluation, ValueError):
            return None
        if den == 0 or not np.isfinite(num / den):
            return None
        step = num / den
        z = z - step
        if not max(abs(z.real), abs(z.imag)) < NEWTON_ESCAPE:
            return None
        if abs(step) <= NEWTON_TOL * max(1.0, abs(z)):
            return z
    return None


@np.errstate(all="ignore")
def _derivatives_vanish(model, z, n) -> bool:
    scale = max(1.0, abs(model.mgf_derivative(z, min(n, 3))))
    for k in range(1, min(n, 3)):
        if abs(model.mgf_derivative(z, k)) > 1e-6 * scale:
            return False
    return True


def _canonical(model, raw, lattice, y_top):
    """Snap, mirror and sort the zeros found in the upper search box."""
    upper = []
    for z, m in raw:
        if abs(z.imag) < 1e-9:
            z = complex(z.real, 0.0)
        if lattice and abs(z.imag - np.pi) < 1e-9:
            z = complex(z.real, np.pi)
        if z.imag < 0 or (lattice and z.imag > np.pi) or z.imag > y_top:
            continue
        if abs(z.real) < 1e-12:
            z = complex(0.0, z.imag)
        if any(abs(z - w) < 1e-9 * max(1.0, abs(z)) for w, _ in upper):
            continue
        upper.append((z, m))
    upper.sort(key=lambda t: (round(t[0].real, 9), abs(t[0].imag)))
    roots: list[Root] = []
    for z, m in upper:
        gp = complex(model.mgf_derivative(z, 1))
        self_conj = z.imag == 0.0 or (lattice and z.imag == np.pi)
        if self_conj:
            if z.imag == 0.0:
                gp = complex(gp.real, 0.0)
            roots.append(Root(z, m, gp))
        else:
            i = len(roots)
            roots.append(Root(z, m, gp, conjugate_of=i + 1))
            roots.append(Root(z.conjugate(), m, gp.conjugate(), conjugate_of=i))
    return roots


def _strip_count(model, r0, y0, y1):
    return count_zeros(model, (LEFT_EDGE, r0, y0, y1))


def find_roots(model: DistributionModel, region: SearchRegion | float) -> list[Root]:
    """All solutions of ``g(z) = 1`` with ``Re z < r0`` (one lattice period).

    Only the closed upper half-plane is searched; conjugates are mirrored.
    The result is sorted by real part, then by ``|Im|``.
    """
    if not isinstance(region, SearchRegion):
        region = SearchRegion(float(region), lattice=model.lattice)
    lattice = model.lattice
    delta = 0.05
    r0 = region.r0
    if lattice:
        y1 = np.pi + delta
        total = _strip_count(model, r0, -delta, y1)
        top = np.pi
    elif region.im_bound is not None:
        y1 = float(region.im_bound)
        total = _strip_count(model, r0, -delta, y1)
        doubled = _strip_count(model, r0, -delta, 2 * y1)
        if doubled != total:
            warnings.warn(
                f"zero count changes from {total} to {doubled} when im_bound doubles; "
                "zeros beyond the requested box are omitted",
                RuntimeWarning,
                stacklevel=2,
            )
        top = y1
    else:
        y1 = 32.0
        total = _strip_count(model, r0, -delta, y1)
        stable = 0
        while stable < 2:
            nxt = _strip_count(model, r0, -delta, 2 * y1)
            stable = stable + 1 if nxt == total else 0
            if nxt != total:
                log.debug("strip count %d -> %d at height %g", total, nxt, 2 * y1)
            y1, total = 2 * y1, nxt
            if y1 > 2**14:
                raise QuadratureDivergence("zero count in the strip did not stabilise")
        top = y1
    raw: list[tuple[complex, int]] = []
    _isolate(model, (LEFT_EDGE, r0, -delta, y1), total, raw)
    return _canonical(model, raw, lattice, top)


# ---------------------------------------------------------------------------
# Lundberg exponent
# ---------------------------------------------------------------------------


def lundberg_root(claims: DistributionModel, alpha: float | None = None, c: float | None = None) -> float:
    """Positive real root of the Lundberg equation.

    Continuous model (``alpha``, ``c`` given): ``alpha (M(k) - 1) = c k``.
    Discrete model with unit premium: ``M(k) = e^k``.

    Raises
    ------
    NegativeLoading
        Safety loading is not positive.
    NoFiniteRoot
        The root lies beyond ``700`` or does not exist.
    """
    m = claims.mean
    if alpha is None and c is None:
        if not claims.lattice:
            raise ValueError("discrete Lundberg equation needs integer-valued claims")
        if m >= 1.0:
            raise NegativeLoading(f"E[Z] = {m} must be below 1")
        if claims.tail(1) <= 0.0:
            raise NoFiniteRoot("claims never exceed the premium; ruin is impossible")

        # the exact MGF: truncating an infinite support first shifts the root
        def h(k):
            return float(claims.mgf(k).real) - math.exp(k)

        def dh(k):
            return float(claims.mgf_derivative(k, 1).real) - math.exp(k)

        def ratio(k):
            return h(k) / math.expm1(k)

    else:
        if alpha is None or c is None:
            raise ValueError("alpha and c must be given together")
        if c <= alpha * m:
            raise NegativeLoading(f"premium {c} does not exceed alpha*m = {alpha * m}")

        def h(k):
            return alpha * (float(claims.mgf(k).real) - 1.0) - c * k

        def dh(k):
            return alpha * float(claims.mgf_derivative(k, 1).real) - c

        def ratio(k):
            return h(k) / k

    radius = claims.mgf_radius
    lo = 1e-8
    hi = 1.0
    grow = 0
    while True:
        if math.isfinite(radius) and hi >= radius:
            hi = radius - (radius - lo) * 2.0 ** (-grow - 1)
        if hi > OVERFLOW_GUARD:
            raise NoFiniteRoot("Lundberg root beyond the overflow guard")
        try:
            val = ratio(hi)
        except (OverflowError, PoleEvaluation):
            val = math.inf
        if val > 0:
            break
        lo = hi
        hi *= 2.0
        grow += 1
        if grow > 200:
            raise NoFiniteRoot("no sign change found for the Lundberg equation")
    kappa = optimize.brentq(ratio, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(20):
        step = h(kappa) / dh(kappa)
        kappa -= step
        if abs(step) < 1e-15 * max(1.0, kappa):
            break
    return float(kappa)


# ---------------------------------------------------------------------------
# growth diagnostic
# ---------------------------------------------------------------------------


@dataclass
class GrowthReport:
    """Grid supremum of ``|1/(1 - g)|`` away from the real axis."""

    applicable: bool
    sup: float = math.nan
    slope: float = math.nan
    flagged: bool = False
    band_sups: list[float] = field(default_factory=list)
    band_centres: list[float] = field(default_factory=list)


@np.errstate(all="ignore")
def diagnose_growth(model: DistributionModel, r0: float, theta_max: float, theta_probe: float = 1.0) -> GrowthReport:
    """Advisory check that ``1/(1-g)`` stays bounded high up in the strip.

    Lattice laws are periodic in ``Im z`` and return ``applicable=False``.
    The trend is the log-log slope of band-wise maxima in ``theta``.
    """
    if model.lattice:
        return GrowthReport(applicable=False)
    r = np.linspace(0.0, r0, 64)
    theta = np.geomspace(theta_probe, theta_max, 256)
    z = r[:, None] + 1j * theta[None, :]
    with np.errstate(all="ignore"):
        try:
            vals = np.abs(1.0 / (1.0 - model.mgf(z)))
        except PoleEvaluation:
            vals = np.full(z.shape, np.inf)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    col = vals.max(axis=0)
    bands = np.array_split(np.arange(theta.size), 8)
    sups = [float(col[b].max()) for b in bands]
    centres = [float(np.sqrt(theta[b[0]] * theta[b[-1]])) for b in bands]
    tail_s = np.log(sups[4:])
    tail_c = np.log(centres[4:])
    slope = float(np.polyfit(tail_c, tail_s, 1)[0]) if np.all(np.isfinite(tail_s)) else math.inf
    return GrowthReport(
        applicable=True,
        sup=float(col.max()),
        slope=slope,
        flagged=bool(slope > 0.1),
        band_sups=sups,
        band_centres=centres,
    )
