"""Independent reference computations for renewal and ruin quantities.

None of these routines use roots or residues: exact lattice recursions,
trapezoidal Volterra solvers with Richardson extrapolation, the closed-form
phase-type renewal density, a forward-substitution solver for discrete
ruin and reproducible Monte Carlo.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import MassAtZeroOne, ModelError
from .models import DiscretePMF, DistributionModel
from .ruin import ContinuousRiskModel

__all__ = [
    "OracleResult",
    "renewal_mass_exact",
    "renewal_grid_continuous",
    "phase_type_density",
    "ruin_discrete_dp",
    "ruin_discrete_residual",
    "ruin_grid_continuous",
    "ruin_mc_continuous",
    "ruin_mc_stop_loss_pair",
    "renewal_mc",
    "worker_count",
    "philox_generator",
]

BLOCK = 1 << 15


@dataclass
class OracleResult:
    """Reference values on a grid with the error model of the method."""

    x: np.ndarray
    values: np.ndarray
    method: str
    error_model: dict = field(default_factory=dict)
    std_err: np.ndarray | None = None

    def at(self, x: float) -> float:
        idx = int(np.argmin(np.abs(self.x - x)))
        if abs(self.x[idx] - x) > 1e-9 * max(1.0, abs(x)):
            raise KeyError(f"{x} is not a grid point")
        return float(self.values[idx])


# ---------------------------------------------------------------------------
# lattice renewal
# ---------------------------------------------------------------------------


def _pmf_array(pmf) -> np.ndarray:
    if isinstance(pmf, DistributionModel):
        if not pmf.lattice:
            raise ModelError("a lattice law is required")
        return pmf.to_pmf().probs
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or np.any(p < 0):
        raise ModelError("pmf must be a nonnegative 1-d array")
    return p


def renewal_mass_exact(pmf, k_max: int) -> OracleResult:
    """Renewal masses ``u_0..u_{k_max}`` by the convolution recursion.

    ``u_k (1 - p_0) = 1{k=0} + sum_{j>=1} p_j u_{k-j}``.
    """
    p = _pmf_array(pmf)
    p0 = p[0] if p.size else 0.0
    if p0 >= 1.0 - 1e-12:
        raise MassAtZeroOne("the law puts all of its mass at zero")
    K = min(p.size - 1, k_max)
    rev = p[1 : K + 1][::-1]  # p_K .. p_1
    u = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        lo = max(0, k - K)
        acc = float(np.dot(rev[K - (k - lo) :], u[lo:k])) if k > 0 else 0.0
        u[k] = ((1.0 if k == 0 else 0.0) + acc) / (1.0 - p0)
    return OracleResult(np.arange(k_max + 1, dtype=float), u, "exact_recursion", {"kind": "exact"})


# ---------------------------------------------------------------------------
# continuous renewal equation
# ---------------------------------------------------------------------------


def _density_nodes(model: DistributionModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Density at the nodes: jump average (interior use) and left limit (endpoint use)."""
    f = np.asarray(model.density(x), dtype=float)
    left = f.copy()
    h = x[1] - x[0] if x.size > 1 else 1.0
    for j in model.density_jumps():
        idx = np.nonzero(np.abs(x - j) < 1e-9 * h)[0]
        for i in idx:
            eps = 1e-9 * max(1.0, j)
            left[i] = float(model.density(j - eps))
            f[i] = 0.5 * (left[i] + float(model.density(j + eps)))
    return f, left


def _volterra(
    kernel: np.ndarray,
    forcing: np.ndarray,
    h: float,
    atoms: list[tuple[int, float, float]],
    kernel_end: np.ndarray | None = None,
) -> np.ndarray:
    """Trapezoid solve of ``y(x) = b(x) + int_0^x y(x-s) k(s) ds + atoms``.

    ``kernel_end`` holds left limits of ``k`` used at the upper end of the
    integral (they differ from ``kernel`` at jumps). ``atoms`` holds ``(index, frac, mass)``: a point mass at
    ``(index + frac) h`` contributes ``mass * y(x - location)`` (linear
    interpolation between nodes when ``frac > 0``).
    """
    n = forcing.size
    if kernel_end is None:
        kernel_end = kernel
    y = np.zeros(n)
    k0 = kernel[0]
    at0 = sum(m for i, fr, m in atoms if i == 0 and fr == 0.0)
    others = [(i, fr, m) for i, fr, m in atoms if not (i == 0 and fr == 0.0)]
    for i in range(n):
        acc = forcing[i]
        if i > 0:
            acc += h * (np.dot(y[i - 1 : 0 : -1], kernel[1:i]) + 0.5 * y[0] * kernel_end[i])
        for j, fr, m in others:
            # y((i - j - fr) h), interpolated between nodes i-j-1 and i-j
            if fr == 0.0 and i >= j:
                acc += m * y[i - j]
            elif fr > 0.0 and i - j - 1 >= 0:
                acc += m * ((1.0 - fr) * y[i - j - 1] + fr * y[i - j]) if j > 0 else 0.0
        y[i] = acc / (1.0 - (0.5 * h * k0 if i > 0 else 0.0) - at0)
    return y


def _atom_list(model: DistributionModel, h: float):
    out = []
    for loc, mass in model.atoms():
        pos = loc / h
        j = int(math.floor(pos + 1e-9))
        fr = max(0.0, pos - j)
        if fr < 1e-9:
            fr = 0.0
        out.append((j, fr, mass))
    return out


def _renewal_grid_single(model, x_max, h):
    n = int(round(x_max / h)) + 1
    x = h * np.arange(n)
    f, f_left = _density_nodes(model, x)
    U = _volterra(f, np.ones(n), h, _atom_list(model, h), f_left)
    return x, U


def renewal_grid_continuous(model: DistributionModel, x_max: float, h: float, richardson: bool = True) -> OracleResult:
    """Renewal function ``U = 1 + F * U`` on ``[0, x_max]`` by the trapezoid rule.

    With ``richardson`` the solve is repeated at ``h/2`` and combined as
    ``(4 U_{h/2} - U_h) / 3``; the difference to ``U_{h/2}`` is reported as
    the error estimate.
    """
    if model.lattice:
        raise ModelError("use renewal_mass_exact for lattice laws")
    if h > 1e-3 * x_max:
        raise ValueError("h must not exceed 1e-3 * x_max")
    x, U = _renewal_grid_single(model, x_max, h)
    if not richardson:
        return OracleResult(x, U, "trapezoid", {"kind": "grid", "h": h, "bias": "O(h^2)"})
    _, U2 = _renewal_grid_single(model, x_max, h / 2)
    U2 = U2[::2]
    R = (4.0 * U2 - U) / 3.0
    return OracleResult(
        x, R, "trapezoid_richardson", {"kind": "grid", "h": h, "bias": "O(h^4)"}, std_err=np.abs(R - U2)
    )


def phase_type_density(alpha: Sequence[float], T, x) -> np.ndarray:
    """Renewal density ``alpha exp((s alpha + T) x) s`` of a phase-type law."""
    a = np.asarray(alpha, dtype=float)
    T = np.asarray(T, dtype=float)
    s = -T.sum(axis=1)
    A = np.outer(s, a) + T
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.array([a @ scipy.linalg.expm(A * xi) @ s for xi in xs])
    return float(vals[0]) if np.ndim(x) == 0 else vals


# ---------------------------------------------------------------------------
# ruin: deterministic oracles
# ---------------------------------------------------------------------------


def _ruin_dp_arrays(claims):
    p = _pmf_array(claims)
    tails = 1.0 - np.cumsum(p)  # P(Z > k)
    tails = np.clip(tails, 0.0, None)
    l = tails[: max(p.size - 1, 1)]
    return p, l


def ruin_discrete_dp(claims, x_max: int) -> OracleResult:
    """Ruin probabilities ``psi(0..x_max)`` of the binomial model.

    Forward substitution in
    ``psi(x) = sum_{k=0}^{x} psi(x-k) l(k) + Lbar(x)`` with
    ``l(k) = P(Z > k)`` and ``Lbar(x) = sum_{y >= x} l(y)``.
    """
    p, l = _ruin_dp_arrays(claims)
    m = float(np.dot(np.arange(p.size), p))
    if m >= 1.0:
        raise ModelError(f"E[Z] = {m} must be below 1")
    K = l.size
    lbar_full = np.concatenate([np.cumsum(l[::-1])[::-1], [0.0]])
    psi = np.zeros(x_max + 1)
    if m == 0.0:
        return OracleResult(np.arange(x_max + 1.0), psi, "forward_substitution", {"kind": "exact"})
    for x in range(x_max + 1):
        lbar = lbar_full[min(x, K)]
        kmax = min(x, K - 1)
        acc = lbar
        if kmax >= 1:
            acc += float(np.dot(psi[x - kmax : x][::-1], l[1 : kmax + 1]))
        psi[x] = acc / (1.0 - l[0])
    return OracleResult(np.arange(x_max + 1.0), psi, "forward_substitution", {"kind": "exact"})


def ruin_discrete_residual(claims, psi: np.ndarray) -> np.ndarray:
    """Residual of the discrete renewal equation at every ``x``."""
    _, l = _ruin_dp_arrays(claims)
    K = l.size
    lbar_full = np.concatenate([np.cumsum(l[::-1])[::-1], [0.0]])
    res = np.empty(psi.size)
    for x in range(psi.size):
        kmax = min(x, K - 1)
        rhs = lbar_full[min(x, K)] + sum(psi[x - k] * l[k] for k in range(kmax + 1))
        res[x] = psi[x] - rhs
    return res


def _ruin_grid_single(model: ContinuousRiskModel, x_max, h):
    n = int(round(x_max / h)) + 1
    x = h * np.arange(n)
    claims = model.claims
    gbar = np.array([claims.tail(xi) for xi in x])
    left = gbar.copy()
    for j in claims.density_jumps() + [a for a, _ in claims.atoms()]:
        idx = np.nonzero(np.abs(x - j) < 1e-9 * h)[0]
        for i in idx:
            left[i] = claims.tail(j - 1e-12)
            gbar[i] = 0.5 * (left[i] + claims.tail(j + 1e-12))
    ratio = model.alpha / model.c
    kern = ratio * gbar
    # int_x^inf Gbar = m - int_0^x Gbar (trapezoid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (gbar[1:] + gbar[:-1]))])
    forcing = ratio * (claims.mean - cum)
    return x, _volterra(kern, forcing, h, [], ratio * left)


def ruin_grid_continuous(model: ContinuousRiskModel, x_max: float, h: float) -> OracleResult:
    """Ruin probability from the defective renewal equation, trapezoid + Richardson.

    ``psi(x) = (alpha/c) [ int_0^x psi(x-y) Gbar(y) dy + int_x^inf Gbar(y) dy ]``.
    """
    x, P = _ruin_grid_single(model, x_max, h)
    _, P2 = _ruin_grid_single(model, x_max, h / 2)
    P2 = P2[::2]
    R = (4.0 * P2 - P) / 3.0
    return OracleResult(x, R, "trapezoid_richardson", {"kind": "grid", "h": h}, std_err=np.abs(R - P2))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def worker_count() -> int:
    """Thread cap from ``RENEWAL_THREADS`` (default: CPU count)."""
    env = os.environ.get("RENEWAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def philox_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_blocks(fn: Callable[[np.random.Generator, int], np.ndarray], n_paths: int, seed: int) -> np.ndarray:
    """Evaluate ``fn`` on path blocks and stack results in block order."""
    sizes = [BLOCK] * (n_paths // BLOCK)
    if n_paths % BLOCK:
        sizes.append(n_paths % BLOCK)
    jobs = [(philox_generator(seed, b), s) for b, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=min(worker_count(), max(1, len(jobs)))) as pool:
        parts = list(pool.map(lambda j: fn(*j), jobs))
    return np.concatenate(parts, axis=-1)


def _estimate(hits: np.ndarray) -> tuple[float, float]:
    n = hits.size
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1 - p), 0.0) / n) if n > 1 else math.inf


def _escape_level(x: float, kappa: float, n_paths: int) -> float:
    # Lundberg: P(ruin | surplus L) <= exp(-kappa L) < 0.1 * smallest plausible std err
    se_floor = math.sqrt(1e-4 / n_paths)
    return x + math.log(10.0 / se_floor) / kappa


def ruin_mc_continuous(
    model: ContinuousRiskModel,
    x: float,
    n_paths: int = 100_000,
    horizon: int | None = None,
    seed: int = 0,
    escape: float | None = None,
) -> OracleResult:
    """Monte Carlo ruin probability of the compound Poisson model.

    Paths run claim by claim until ruin or until the surplus reaches a
    level where the Lundberg bound makes later ruin negligible. ``horizon``
    caps the number of claims per path (``None``: no cap). With a
    nonpositive loading there is no Lundberg exponent; a claim cap is then
    mandatory and paths alive at the cap count as surviving.
    """
    if n_paths < 10_000:
        raise ValueError("n_paths must be at least 1e4")
    alpha, c, claims = model.alpha, model.c, model.claims
    try:
        kappa = model.kappa
        level = escape if escape is not None else _escape_level(x, kappa, n_paths)
    except Exception:  # noqa: BLE001 - loading check happens in the model
        kappa, level = math.nan, math.inf
    cap = horizon if horizon is not None else 10**7

    def block(rng: np.random.Generator, size: int) -> np.ndarray:
        surplus = np.full(size, float(x))
        ruined = np.zeros(size, dtype=bool)
        alive = np.arange(size)
        steps = 0
        while alive.size and steps < cap:
            k = alive.size
            surplus[alive] += c * rng.exponential(1.0 / alpha, k) - claims.sample(rng, k)
            s = surplus[alive]
            hit = s < 0
            ruined[alive[hit]] = True
            alive = alive[(~hit) & (s < level)]
            steps += 1
        return ruined

    hits = _run_blocks(block, n_paths, seed)
    p, se = _estimate(hits)
    return OracleResult(
        np.array([float(x)]),
        np.array([p]),
        "monte_carlo",
        {"kind": "monte_carlo", "n_paths": n_paths, "std_err": se, "escape_level": level, "seed": seed},
        std_err=np.array([se]),
    )


def ruin_mc_stop_loss_pair(
    lam: float,
    d: float,
    alpha: float,
    c1: float,
    c2: float,
    x1: float,
    x2: float,
    n_paths: int = 100_000,
    seed: int = 0,
) -> dict:
    """Joint simulation of insurer and stop-loss reinsurer on common claims.

    Returns estimates and standard errors of ``psi_1(x1)``, ``psi_2(x2)``
    and ``psi_or(x1, x2)``, all from the same paths.
    """
    from .ruin import stop_loss_pair

    m1, m2 = stop_loss_pair(lam, d, alpha, c1, c2)
    L1 = _escape_level(x1, m1.kappa, n_paths)
    L2 = _escape_level(x2, m2.kappa, n_paths)

    def block(rng: np.random.Generator, size: int) -> np.ndarray:
        r1 = np.full(size, float(x1))
        r2 = np.full(size, float(x2))
        ru1 = np.zeros(size, dtype=bool)
        ru2 = np.zeros(size, dtype=bool)
        alive = np.arange(size)
        while alive.size:
            k = alive.size
            t = rng.exponential(1.0 / alpha, k)
            v = rng.exponential(1.0 / lam, k)
            r1[alive] += c1 * t - np.minimum(v, d)
            r2[alive] += c2 * t - np.maximum(v - d, 0.0)
            ru1[alive] |= r1[alive] < 0
            ru2[alive] |= r2[alive] < 0
            open1 = ~ru1[alive] & (r1[alive] < L1)
            open2 = ~ru2[alive] & (r2[alive] < L2)
            alive = alive[open1 | open2]
        return np.vstack([ru1, ru2])

    flags = _run_blocks(block, n_paths, seed)
    out = {}
    for name, hits in (("psi1", flags[0]), ("psi2", flags[1]), ("psi_or", flags[0] | flags[1])):
        p, se = _estimate(hits)
        out[name] = p
        out[name + "_se"] = se
    out["n_paths"] = n_paths
    return out


def renewal_mc(model: DistributionModel, x: float, n_paths: int = 100_000, seed: int = 0) -> OracleResult:
    """Monte Carlo renewal function ``E #{n >= 0 : S_n <= x}``."""

    def block(rng: np.random.Generator, size: int) -> np.ndarray:
        s = np.zeros(size)
        count = np.zeros(size)
        alive = np.arange(size)
        while alive.size:
            count[alive] += 1.0
            s[alive] += model.sample(rng, alive.size)
            alive = alive[s[alive] <= x]
        return count

    counts = _run_blocks(block, n_paths, seed)
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(counts.size))
    return OracleResult(
        np.array([float(x)]),
        np.array([mean]),
        "monte_carlo",
        {"kind": "monte_carlo", "n_paths": n_paths, "std_err": se, "seed": seed},
        std_err=np.array([se]),
    )
