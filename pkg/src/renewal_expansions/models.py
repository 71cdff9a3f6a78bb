"""Distribution families with closed-form complex moment generating functions.

Every family exposes ``g(z) = E[exp(zX)]`` on the whole complex plane through
its closed form (or meromorphic extension), the first few derivatives of
``g``, raw moments, the survival function, the location of the poles of
``g`` and enough structure (density, atoms, pmf, sampler) for the oracles.

Lattice families are normalised to mesh 1 and live on ``{0, 1, 2, ...}``.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats
from scipy import integrate

from .errors import ModelError, NegativeLoading, PoleEvaluation

__all__ = [
    "DistributionModel",
    "MomentSummary",
    "DiscretePMF",
    "NegativeBinomial",
    "Geometric",
    "Exponential",
    "Erlang",
    "HyperExponential",
    "MatrixExponential",
    "Uniform01",
    "TruncatedExponential",
    "LadderContinuous",
    "LadderDiscrete",
    "mgf",
    "mgf_derivative",
    "moments",
    "tail",
    "tilt_ladder_continuous",
    "tilt_ladder_discrete",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]

POLE_TOL = 1e-12
TILT_TAIL_TOL = 1e-18
MAX_TILT_SUPPORT = 100_000
# series branch for (e^{wd}-1)/w style integrals
_SERIES_RADIUS = 1.0
_SERIES_TERMS = 40


@dataclass(frozen=True)
class MomentSummary:
    """First two moments and the abscissa of convergence of the MGF."""

    mu: float
    mu2: float
    mgf_radius: float


def _stirling2(n: int) -> list[int]:
    # S(n, k) for k = 1..n, small n only
    table = {1: [1], 2: [1, 1], 3: [1, 3, 1], 4: [1, 7, 6, 1], 5: [1, 15, 25, 10, 1]}
    if n not in table:
        raise ValueError(f"derivative order {n} not supported")
    return table[n]


def _check_order(order: int) -> None:
    if order < 0 or order > 5:
        raise ValueError("order must be between 0 and 5")


def exp_integral(w, d: float, n: int = 0):
    """Return ``int_0^d x^n exp(w x) dx`` for complex ``w`` (vectorised).

    Small ``|w| d`` uses the power series, which avoids the cancellation in
    ``(exp(wd) - 1) / w``; otherwise an upward recursion in ``n``.
    """
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) * d < _SERIES_RADIUS
    if np.any(small):
        ws = w[small]
        acc = np.zeros(ws.shape, dtype=complex)
        term = np.ones(ws.shape, dtype=complex)
        for k in range(_SERIES_TERMS):
            if k > 0:
                term = term * ws * d / k
            acc = acc + term / (n + k + 1)
        out[small] = acc * d ** (n + 1)
    big = ~small
    if np.any(big):
        wb = w[big]
        ewd = np.exp(wb * d)
        val = (ewd - 1.0) / wb
        for j in range(1, n + 1):
            val = (d**j * ewd - j * val) / wb
        out[big] = val
    return out


def _scalar_or_array(z, result):
    if np.ndim(z) == 0:
        return complex(result.reshape(()))
    return result


class DistributionModel(ABC):
    """Base class of every inter-renewal / claim-size law."""

    kind: str = ""
    lattice: bool = False

    # --- complex-plane interface -------------------------------------------
    @abstractmethod
    def _mgf(self, z: np.ndarray) -> np.ndarray: ...

    def _mgf_deriv(self, z: np.ndarray, order: int) -> np.ndarray:
        return self._cauchy_derivative(z, order)

    def mgf(self, z):
        """Evaluate ``g(z)``; ``z`` may be a scalar or an array."""
        zz = np.asarray(z, dtype=complex)
        self._check_poles(zz)
        return _scalar_or_array(z, self._mgf(zz.ravel()).reshape(zz.shape))

    def mgf_derivative(self, z, order: int = 1):
        """Evaluate ``g^{(order)}(z)``."""
        _check_order(order)
        zz = np.asarray(z, dtype=complex)
        self._check_poles(zz)
        flat = zz.ravel()
        res = self._mgf(flat) if order == 0 else self._mgf_deriv(flat, order)
        return _scalar_or_array(z, res.reshape(zz.shape))

    def _cauchy_derivative(self, z: np.ndarray, order: int, nodes: int = 128) -> np.ndarray:
        """Derivative by the Cauchy integral formula on a small circle."""
        out = np.empty(z.shape, dtype=complex)
        theta = 2.0 * np.pi * np.arange(nodes) / nodes
        unit = np.exp(1j * theta)
        for i, z0 in enumerate(z):
            dist = min((abs(z0 - p) for p in self.poles_near(z0, 1.0)), default=np.inf)
            rad = min(0.05, 0.5 * dist)
            vals = self._mgf(z0 + rad * unit)
            out[i] = math.factorial(order) * np.mean(vals * unit ** (-order)) / rad**order
        return out

    # --- poles -------------------------------------------------------------
    def poles(self) -> list[tuple[complex, int]]:
        """Poles of ``g`` (one representative per period for lattice laws)."""
        return []

    def poles_in(self, x0: float, x1: float, y0: float, y1: float) -> list[tuple[complex, int]]:
        """Poles (with order) inside the closed rectangle ``[x0,x1] x [y0,y1]``."""
        found = []
        for p, order in self.poles():
            if not (x0 <= p.real <= x1):
                continue
            if self.lattice:
                kmin = math.ceil((y0 - p.imag) / (2 * np.pi))
                kmax = math.floor((y1 - p.imag) / (2 * np.pi))
                for k in range(kmin, kmax + 1):
                    found.append((complex(p.real, p.imag + 2 * np.pi * k), order))
            elif y0 <= p.imag <= y1:
                found.append((p, order))
        return found

    def poles_near(self, z0: complex, radius: float) -> list[complex]:
        z0 = complex(z0)
        return [
            p
            for p, _ in self.poles_in(z0.real - radius, z0.real + radius, z0.imag - radius, z0.imag + radius)
        ]

    def _check_poles(self, z: np.ndarray) -> None:
        if not self.poles():
            return
        for p, _ in self.poles():
            if self.lattice:
                d = z - p
                d = d.real + 1j * ((d.imag + np.pi) % (2 * np.pi) - np.pi)
            else:
                d = z - p
            if np.any(np.abs(d) <= POLE_TOL * max(1.0, abs(p))):
                raise PoleEvaluation(f"{self.kind}: evaluation at pole {p}")

    @property
    def mgf_radius(self) -> float:
        """Abscissa ``R`` of convergence of the MGF."""
        reals = [p.real for p, _ in self.poles()]
        return min(reals) if reals else math.inf

    # --- real-line quantities ----------------------------------------------
    @abstractmethod
    def raw_moment(self, n: int) -> float: ...

    @abstractmethod
    def tail(self, x: float) -> float: ...

    @property
    def mean(self) -> float:
        return self.raw_moment(1)

    def moments(self) -> MomentSummary:
        return MomentSummary(self.raw_moment(1), self.raw_moment(2), self.mgf_radius)

    @property
    @abstractmethod
    def params(self) -> dict[str, Any]: ...

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": self.params, "lattice": self.lattice}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DistributionModel) and self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    # --- oracle hooks ------------------------------------------------------
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError(f"sampling is not available for {self.kind}")

    def density(self, x) -> np.ndarray:
        """Density of the absolutely continuous part (continuous laws)."""
        raise NotImplementedError(f"{self.kind} has no density")

    def atoms(self) -> list[tuple[float, float]]:
        """Point masses ``(location, mass)`` of a continuous-type law."""
        return []

    def density_jumps(self) -> list[float]:
        """Points where the density is discontinuous (besides 0)."""
        return []


# ---------------------------------------------------------------------------
# lattice families
# ---------------------------------------------------------------------------


class _LatticeModel(DistributionModel):
    """Laws on ``{0, 1, ...}``: ``g(z) = G(exp(z))`` with ``G`` a function of w."""

    lattice = True

    @abstractmethod
    def _G(self, w: np.ndarray, k: int) -> np.ndarray:
        """k-th derivative of ``G`` with respect to ``w``."""

    def _mgf(self, z):
        return self._G(np.exp(z), 0)

    def _mgf_deriv(self, z, order):
        w = np.exp(z)
        out = np.zeros(z.shape, dtype=complex)
        for k, s in enumerate(_stirling2(order), start=1):
            out = out + s * w**k * self._G(w, k)
        return out

    @abstractmethod
    def pmf(self, k) -> np.ndarray: ...

    def support_max(self, tol: float = 1e-15) -> int:
        """Smallest K with ``P(X > K) < tol``."""
        k = 0
        while self.tail(k) >= tol:
            k = 2 * k + 1
        lo, hi = 0, k
        while lo < hi:
            mid = (lo + hi) // 2
            if self.tail(mid) < tol:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def to_pmf(self, tol: float = 1e-15) -> "DiscretePMF":
        """Finite-support version (renormalised after truncation at ``tol``)."""
        k = self.support_max(tol)
        probs = self.pmf(np.arange(k + 1))
        return DiscretePMF(probs / probs.sum())

    def raw_moment(self, n: int) -> float:
        k = self.support_max(1e-18)
        ks = np.arange(k + 1, dtype=float)
        return float(math.fsum(self.pmf(ks.astype(int)) * ks**n))


class DiscretePMF(_LatticeModel):
    """Finite-support law on ``{0, ..., K}`` given by its probabilities."""

    kind = "discrete_pmf"

    def __init__(self, probs: Sequence[float]):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ModelError("probs must be a non-empty 1-d sequence")
        if np.any(p < 0):
            raise ModelError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ModelError(f"probabilities sum to {p.sum()!r}, not 1")
        nz = np.nonzero(p)[0]
        p = p[: nz[-1] + 1]
        self.probs = p
        self._poly = p[::-1].astype(complex)

    @property
    def params(self):
        return {"probs": self.probs.tolist()}

    @property
    def K(self) -> int:
        return self.probs.size - 1

    def support(self) -> np.ndarray:
        return np.nonzero(self.probs)[0]

    def _G(self, w, k):
        coeffs = self.probs.astype(complex)
        for _ in range(k):
            coeffs = coeffs[1:] * np.arange(1, coeffs.size)
        if coeffs.size == 0:
            return np.zeros(w.shape, dtype=complex)
        return np.polyval(coeffs[::-1], w)

    def _mgf(self, z):
        return np.polyval(self._poly, np.exp(z))

    def _mgf_deriv(self, z, order):
        ks = np.arange(self.probs.size, dtype=float)
        return np.polyval((self.probs * ks**order)[::-1].astype(complex), np.exp(z))

    def pmf(self, k):
        k = np.asarray(k)
        out = np.zeros(k.shape)
        ok = (k >= 0) & (k <= self.K)
        out[ok] = self.probs[k[ok]]
        return out

    def raw_moment(self, n):
        ks = np.arange(self.probs.size, dtype=float)
        return float(math.fsum(self.probs * ks**n))

    def tail(self, x):
        if x < 0:
            return 1.0
        return float(math.fsum(self.probs[int(math.floor(x)) + 1 :]))

    def support_max(self, tol=1e-15):
        return self.K

    def to_pmf(self, tol=1e-15):
        return self

    def sample(self, rng, size):
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right").astype(float)


class Geometric(_LatticeModel):
    """Geometric law on ``{1, 2, ...}``: ``P(X = k) = p (1 - p)^{k-1}``."""

    kind = "geometric"

    def __init__(self, p: float):
        if not 0.0 < p < 1.0:
            raise ModelError("geometric p must lie in (0, 1)")
        self.p = float(p)
        self.q = 1.0 - self.p

    @property
    def params(self):
        return {"p": self.p}

    def _G(self, w, k):
        # p w / (1 - q w) = (p/q) (1/(1 - q w) - 1)
        base = 1.0 - self.q * w
        if k == 0:
            return self.p * w / base
        return (self.p / self.q) * math.factorial(k) * self.q**k / base ** (k + 1)

    def poles(self):
        return [(complex(-math.log(self.q), 0.0), 1)]

    def pmf(self, k):
        k = np.asarray(k)
        return np.where(k >= 1, self.p * self.q ** (np.maximum(k, 1) - 1), 0.0)

    def raw_moment(self, n):
        if n == 1:
            return 1.0 / self.p
        if n == 2:
            return (2.0 - self.p) / self.p**2
        return super().raw_moment(n)

    def tail(self, x):
        if x < 0:
            return 1.0
        return self.q ** math.floor(x)

    def sample(self, rng, size):
        return rng.geometric(self.p, size).astype(float)


class NegativeBinomial(_LatticeModel):
    """``P(X = k) = C(k+n-1, k) p^k (1-p)^n`` on ``{0, 1, ...}``."""

    kind = "negative_binomial"

    def __init__(self, p: float, n: int):
        if not 0.0 < p < 1.0:
            raise ModelError("negative binomial p must lie in (0, 1)")
        if int(n) != n or n < 1:
            raise ModelError("negative binomial n must be a positive integer")
        self.p = float(p)
        self.n = int(n)

    @property
    def params(self):
        return {"p": self.p, "n": self.n}

    def _G(self, w, k):
        base = 1.0 - self.p * w
        rising = math.prod(range(self.n, self.n + k)) if k else 1
        return (1.0 - self.p) ** self.n * rising * self.p**k / base ** (self.n + k)

    def poles(self):
        return [(complex(-math.log(self.p), 0.0), self.n)]

    def pmf(self, k):
        return scipy.stats.nbinom.pmf(np.asarray(k), self.n, 1.0 - self.p)

    def raw_moment(self, n):
        if n == 1:
            return self.n * self.p / (1.0 - self.p)
        if n == 2:
            var = self.n * self.p / (1.0 - self.p) ** 2
            return var + (self.n * self.p / (1.0 - self.p)) ** 2
        return super().raw_moment(n)

    def tail(self, x):
        if x < 0:
            return 1.0
        return float(scipy.stats.nbinom.sf(math.floor(x), self.n, 1.0 - self.p))

    def sample(self, rng, size):
        return rng.negative_binomial(self.n, 1.0 - self.p, size).astype(float)


# ---------------------------------------------------------------------------
# continuous families
# ---------------------------------------------------------------------------


class Exponential(DistributionModel):
    kind = "exponential"

    def __init__(self, rate: float):
        if not rate > 0:
            raise ModelError("exponential rate must be positive")
        self.rate = float(rate)

    @property
    def params(self):
        return {"rate": self.rate}

    def _mgf(self, z):
        return self.rate / (self.rate - z)

    def _mgf_deriv(self, z, order):
        return math.factorial(order) * self.rate / (self.rate - z) ** (order + 1)

    def poles(self):
        return [(complex(self.rate), 1)]

    def raw_moment(self, n):
        return math.factorial(n) / self.rate**n

    def tail(self, x):
        return 1.0 if x < 0 else math.exp(-self.rate * x)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)


class Erlang(DistributionModel):
    kind = "erlang"

    def __init__(self, stages: int, rate: float):
        if int(stages) != stages or stages < 1:
            raise ModelError("erlang stages must be a positive integer")
        if not rate > 0:
            raise ModelError("erlang rate must be positive")
        self.stages = int(stages)
        self.rate = float(rate)

    @property
    def params(self):
        return {"stages": self.stages, "rate": self.rate}

    def _mgf(self, z):
        return (self.rate / (self.rate - z)) ** self.stages

    def _mgf_deriv(self, z, order):
        k = self.stages
        rising = math.prod(range(k, k + order))
        return self.rate**k * rising / (self.rate - z) ** (k + order)

    def poles(self):
        return [(complex(self.rate), self.stages)]

    def raw_moment(self, n):
        return math.prod(range(self.stages, self.stages + n)) / self.rate**n

    def tail(self, x):
        return 1.0 if x < 0 else float(scipy.special.gammaincc(self.stages, self.rate * x))

    def density(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return scipy.stats.gamma.pdf(x, self.stages, scale=1.0 / self.rate)

    def sample(self, rng, size):
        return rng.gamma(self.stages, 1.0 / self.rate, size)


class HyperExponential(DistributionModel):
    """Finite mixture of exponentials."""

    kind = "hyperexponential"

    def __init__(self, weights: Sequence[float], rates: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        r = np.asarray(rates, dtype=float)
        if w.shape != r.shape or w.ndim != 1 or w.size == 0:
            raise ModelError("weights and rates must be 1-d sequences of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ModelError("weights must be nonnegative and sum to 1")
        if np.any(r <= 0):
            raise ModelError("rates must be positive")
        self.weights = w
        self.rates = r

    @property
    def params(self):
        return {"weights": self.weights.tolist(), "rates": self.rates.tolist()}

    def _mgf(self, z):
        return np.sum(self.weights * self.rates / (self.rates - z[:, None]), axis=1)

    def _mgf_deriv(self, z, order):
        f = math.factorial(order)
        return np.sum(f * self.weights * self.rates / (self.rates - z[:, None]) ** (order + 1), axis=1)

    def poles(self):
        rates = sorted({float(r) for r, w in zip(self.rates, self.weights) if w > 0})
        return [(complex(r), 1) for r in rates]

    def raw_moment(self, n):
        return float(np.sum(self.weights * math.factorial(n) / self.rates**n))

    def tail(self, x):
        return 1.0 if x < 0 else float(np.sum(self.weights * np.exp(-self.rates * x)))

    def density(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(self.weights * self.rates * np.exp(-self.rates * np.maximum(x, 0)), axis=-1)

    def sample(self, rng, size):
        comp = rng.choice(self.rates.size, size=size, p=self.weights)
        return rng.exponential(1.0, size) / self.rates[comp]


class MatrixExponential(DistributionModel):
    """Matrix-exponential law ``(alpha, T)`` with exit vector ``s = -T 1``.

    A defect ``1 - sum(alpha)`` is an atom at zero. Pole orders are the
    algebraic multiplicities of the eigenvalues of ``T``, so the
    representation is assumed minimal.
    """

    kind = "matrix_exponential"

    def __init__(self, alpha: Sequence[float], T: Sequence[Sequence[float]]):
        a = np.asarray(alpha, dtype=float)
        t = np.asarray(T, dtype=float)
        n = a.size
        if t.shape != (n, n):
            raise ModelError("T must be square and match alpha")
        if np.any(a < 0) or a.sum() > 1.0 + 1e-12:
            raise ModelError("alpha must be nonnegative with sum <= 1")
        if np.any(np.diag(t) >= 0):
            raise ModelError("diagonal of T must be strictly negative")
        off = t - np.diag(np.diag(t))
        if np.any(off < 0):
            raise ModelError("off-diagonal entries of T must be nonnegative")
        if np.any(t.sum(axis=1) > 1e-12):
            raise ModelError("row sums of T must be nonpositive")
        if np.max(np.linalg.eigvals(t).real) >= 0:
            raise ModelError("T is not a subintensity matrix")
        self.alpha = a
        self.T = t
        self.exit = -t.sum(axis=1)
        self.atom0 = max(0.0, 1.0 - a.sum())

    @property
    def params(self):
        return {"alpha": self.alpha.tolist(), "T": self.T.tolist()}

    def _resolvent_power(self, z, power):
        n = self.alpha.size
        eye = np.eye(n)
        A = -z[:, None, None] * eye - self.T
        vec = np.broadcast_to(self.exit.astype(complex), (z.size, n))[..., None]
        for _ in range(power):
            vec = np.linalg.solve(A, vec)
        return (vec[..., 0] @ self.alpha).astype(complex)

    def _mgf(self, z):
        return self.atom0 + self._resolvent_power(z, 1)

    def _mgf_deriv(self, z, order):
        return math.factorial(order) * self._resolvent_power(z, order + 1)

    @cached_property
    def _poles(self):
        eig = -np.linalg.eigvals(self.T)
        eig = np.sort_complex(eig)
        out: list[list] = []
        for e in eig:
            for item in out:
                if abs(item[0] - e) < 1e-8 * max(1.0, abs(e)):
                    item[1] += 1
                    break
            else:
                out.append([complex(e), 1])
        return [(complex(p), k) for p, k in out]

    def poles(self):
        return self._poles

    def raw_moment(self, n):
        inv = np.linalg.inv(-self.T)
        v = np.ones(self.alpha.size)
        for _ in range(n):
            v = inv @ v
        return float(math.factorial(n) * self.alpha @ v)

    def tail(self, x):
        if x < 0:
            return 1.0
        return float(self.alpha @ scipy.linalg.expm(self.T * x) @ np.ones(self.alpha.size))

    def density(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([self.alpha @ scipy.linalg.expm(self.T * xi) @ self.exit for xi in x])

    def atoms(self):
        return [(0.0, self.atom0)] if self.atom0 > 0 else []

    def sample(self, rng, size):
        n = self.alpha.size
        rates = -np.diag(self.T)
        # jump chain: to other phases or absorption
        P = np.hstack([self.T / rates[:, None], (self.exit / rates)[:, None]])
        np.fill_diagonal(P[:, :n], 0.0)
        cumP = np.cumsum(P, axis=1)
        cumP[:, -1] = 1.0
        start = np.append(self.alpha, self.atom0)
        state = np.searchsorted(np.cumsum(start), rng.random(size) * start.sum(), side="right")
        state = np.minimum(state, n)
        total = np.zeros(size)
        alive = state < n
        while np.any(alive):
            idx = np.nonzero(alive)[0]
            s = state[idx]
            total[idx] += rng.exponential(1.0, idx.size) / rates[s]
            nxt = (rng.random(idx.size)[:, None] > cumP[s]).sum(axis=1)
            state[idx] = nxt
            alive[idx] = nxt < n
        return total


class Uniform01(DistributionModel):
    """Uniform law on ``[0, 1]``; ``g(z) = (e^z - 1) / z`` is entire."""

    kind = "uniform01"

    @property
    def params(self):
        return {}

    def _mgf(self, z):
        return exp_integral(z, 1.0, 0)

    def _mgf_deriv(self, z, order):
        return exp_integral(z, 1.0, order)

    def raw_moment(self, n):
        return 1.0 / (n + 1)

    def tail(self, x):
        return float(min(1.0, max(0.0, 1.0 - x)))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x < 1), 1.0, 0.0)

    def density_jumps(self):
        return [1.0]

    def sample(self, rng, size):
        return rng.random(size)


class TruncatedExponential(DistributionModel):
    """``min(V, d)`` with ``V`` exponential(rate): the stop-loss retained claim."""

    kind = "truncated_exponential"

    def __init__(self, rate: float, d: float):
        if not rate > 0 or not d > 0:
            raise ModelError("rate and priority d must be positive")
        self.rate = float(rate)
        self.d = float(d)

    @property
    def params(self):
        return {"rate": self.rate, "d": self.d}

    def _mgf(self, z):
        w = z - self.rate
        return self.rate * exp_integral(w, self.d, 0) + np.exp(w * self.d)

    def _mgf_deriv(self, z, order):
        w = z - self.rate
        return self.rate * exp_integral(w, self.d, order) + self.d**order * np.exp(w * self.d)

    def raw_moment(self, n):
        if n == 0:
            return 1.0
        lam, d = self.rate, self.d
        return float(math.factorial(n) / lam**n * scipy.special.gammainc(n, lam * d))

    def tail(self, x):
        if x < 0:
            return 1.0
        return math.exp(-self.rate * x) if x < self.d else 0.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x < self.d), self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def atoms(self):
        return [(self.d, math.exp(-self.rate * self.d))]

    def density_jumps(self):
        return [self.d]

    def sample(self, rng, size):
        return np.minimum(rng.exponential(1.0 / self.rate, size), self.d)


class LadderContinuous(DistributionModel):
    """Exponentially tilted ladder-height law ``e^{kx} (alpha/c) Gbar(x) dx``.

    ``g(z) = (alpha/c) (M(z + kappa) - 1) / (z + kappa)`` where ``M`` is the
    claim-size MGF; near ``z = -kappa`` the quotient is replaced by its
    Taylor series in the raw claim moments.
    """

    kind = "ladder_continuous"
    _series_terms = 40

    def __init__(self, claims: DistributionModel, alpha: float, c: float, kappa: float):
        self.claims = claims
        self.alpha = float(alpha)
        self.c = float(c)
        self.kappa = float(kappa)
        self.ratio = self.alpha / self.c
        self._series_radius = 0.05 * min(1.0, claims.mgf_radius)
        self._claim_moments = np.array(
            [1.0] + [claims.raw_moment(j) for j in range(1, self._series_terms + 2)]
        )

    @property
    def params(self):
        return {
            "claims": self.claims.to_dict(),
            "alpha": self.alpha,
            "c": self.c,
            "kappa": self.kappa,
        }

    def _series(self, s, order):
        # d^order/ds^order of sum_j m_{j+1} s^j / (j+1)!
        acc = np.zeros(s.shape, dtype=complex)
        for j in range(order, self._series_terms):
            coef = self._claim_moments[j + 1] / math.factorial(j + 1)
            coef *= math.factorial(j) / math.factorial(j - order)
            acc = acc + coef * s ** (j - order)
        return acc

    def _closed(self, s, order):
        M = self.claims._mgf(s) - 1.0
        acc = np.zeros(s.shape, dtype=complex)
        for k in range(order + 1):
            Mk = M if k == 0 else self.claims._mgf_deriv(s, k)
            j = order - k
            acc = acc + math.comb(order, k) * Mk * (-1) ** j * math.factorial(j) / s ** (j + 1)
        return acc

    def _eval(self, z, order):
        s = z + self.kappa
        out = np.empty(s.shape, dtype=complex)
        near = np.abs(s) < self._series_radius
        if np.any(near):
            out[near] = self._series(s[near], order)
        if np.any(~near):
            out[~near] = self._closed(s[~near], order)
        return self.ratio * out

    def _mgf(self, z):
        return self._eval(z, 0)

    def _mgf_deriv(self, z, order):
        return self._eval(z, order)

    def poles(self):
        return [(p - self.kappa, k) for p, k in self.claims.poles()]

    def raw_moment(self, n):
        if n == 0:
            return 1.0
        if n <= 5:
            return float(self._mgf_deriv(np.zeros(1, dtype=complex), n)[0].real)
        val, _ = integrate.quad(lambda x: x**n * float(self.density(x)), 0, np.inf, limit=200)
        return val

    def density(self, x):
        x = np.asarray(x, dtype=float)
        gbar = np.vectorize(self.claims.tail, otypes=[float])(x)
        return np.where(x >= 0, np.exp(self.kappa * x) * self.ratio * gbar, 0.0)

    def density_jumps(self):
        if isinstance(self.claims, TruncatedExponential):
            return [self.claims.d]
        if isinstance(self.claims, Uniform01):
            return [1.0]
        if isinstance(self.claims, DiscretePMF):
            return [float(k) for k in self.claims.support() if k > 0]
        return []

    def tail(self, x):
        if x <= 0:
            return 1.0
        brk = [b for b in self.density_jumps() if b > x]
        val, _ = integrate.quad(lambda y: float(self.density(y)), x, np.inf, points=brk or None, limit=200)
        return float(val)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def mgf(model: DistributionModel, z):
    """Moment generating function ``g(z)`` of ``model``."""
    return model.mgf(z)


def mgf_derivative(model: DistributionModel, z, order: int = 1):
    """``order``-th derivative of the moment generating function."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return model.mgf_derivative(z, order)


def moments(model: DistributionModel) -> MomentSummary:
    """Mean, second moment and MGF radius of ``model``."""
    return model.moments()


def tail(model: DistributionModel, x: float) -> float:
    """Survival function ``P(X > x)``."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    return model.tail(x)


def tilt_ladder_continuous(claims: DistributionModel, alpha: float, c: float, kappa: float) -> LadderContinuous:
    """Tilted ladder-height law of the compound Poisson risk process.

    Raises
    ------
    NegativeLoading
        If ``c <= alpha * E[claims]``.
    ModelError
        If ``kappa`` does not solve the Lundberg equation to 1e-10.
    """
    m = claims.mean
    if c <= alpha * m:
        raise NegativeLoading(f"premium {c} does not exceed alpha*m = {alpha * m}")
    law = LadderContinuous(claims, alpha, c, kappa)
    resid = abs(law.mgf(0.0) - 1.0)
    if resid > 1e-10:
        raise ModelError(f"kappa={kappa} does not solve the Lundberg equation (residual {resid:.2e})")
    return law


class LadderDiscrete(_LatticeModel):
    """Tilted pmf ``f(k) = e^{kappa k} P(Z > k)`` for negative binomial claims.

    With ``u = e^{kappa} w`` the generating function is
    ``((1 - p u)^n - (1 - p)^n) / ((1 - u) (1 - p u)^n)``; the factor
    ``1 - u`` divides the numerator exactly, so ``G`` is stored as a ratio of
    polynomials in ``w`` with a single pole of order ``n``.
    """

    kind = "ladder_discrete"

    def __init__(self, claims: NegativeBinomial, kappa: float):
        self.claims = claims
        self.kappa = float(kappa)
        p, n = claims.p, claims.n
        P = np.polynomial.Polynomial
        den_u = P([1.0, -p]) ** n
        num_u, rem = divmod(den_u - (1.0 - p) ** n, P([1.0, -1.0]))
        if np.max(np.abs(rem.coef)) > 1e-12:
            raise ModelError("numerator does not vanish at u = 1")
        scale = np.exp(self.kappa * np.arange(n + 1))
        self._num = P(num_u.coef * scale[: num_u.coef.size])
        self._den = P(den_u.coef * scale[: den_u.coef.size])
        # R^{(k)} = N_k / D^{k+1}
        self._numerators = [self._num]
        dD = self._den.deriv()
        for k in range(5):
            Nk = self._numerators[-1]
            self._numerators.append(Nk.deriv() * self._den - (k + 1) * Nk * dD)
        self._pole = -math.log(p) - self.kappa

    @property
    def params(self):
        return {"claims": self.claims.to_dict(), "kappa": self.kappa}

    def _G(self, w, k):
        return self._numerators[k](w) / self._den(w) ** (k + 1)

    def poles(self):
        return [(complex(self._pole, 0.0), self.claims.n)]

    def pmf(self, k):
        k = np.asarray(k)
        # log space: e^{kappa k} overflows long before the tail underflows
        log_tails = scipy.stats.nbinom.logsf(k, self.claims.n, 1.0 - self.claims.p)
        return np.where(k >= 0, np.exp(self.kappa * k + log_tails), 0.0)

    def tail(self, x):
        # f decays geometrically with ratio p e^kappa < 1
        start = max(math.floor(x) + 1, 0)
        ratio = self.claims.p * math.exp(self.kappa)
        span = int(math.ceil(60.0 / max(-math.log(ratio), 1e-3))) + self.claims.n * 20
        return float(math.fsum(self.pmf(np.arange(start, start + span))))

    def raw_moment(self, n):
        g1 = float(self._G(np.array([1.0 + 0j]), 1).real[0])
        if n == 1:
            return g1
        if n == 2:
            return float(self._G(np.array([1.0 + 0j]), 2).real[0]) + g1
        return super().raw_moment(n)


def tilt_ladder_discrete(claims: DistributionModel, kappa: float) -> DiscretePMF | LadderDiscrete:
    """Tilted pmf ``f(k) = e^{kappa k} P(Z > k)`` of the binomial risk model.

    Negative binomial claims give the exact rational :class:`LadderDiscrete`.
    Otherwise ``f`` is cut where its own tail drops below ``TILT_TAIL_TOL`` (the claims
    are never truncated first, since ``e^{kappa k}`` magnifies their tail), so
    it is a finite pmf whose MGF is a polynomial in ``e^z``. This coincides
    with ``(1 - E e^{(z+kappa)Z}) / (1 - e^{z+kappa})`` and has no removable
    singularities to patch.
    """
    if not claims.lattice:
        raise ModelError("discrete tilting needs integer-valued claims")
    if claims.mean >= 1.0:
        raise NegativeLoading(f"E[Z] = {claims.mean} is not below the unit premium")
    if isinstance(claims, NegativeBinomial):
        law = LadderDiscrete(claims, kappa)
        total = complex(law.mgf(0.0)).real
        if abs(total - 1.0) > 1e-10:
            raise ModelError(f"kappa={kappa} does not solve the discrete Lundberg equation (G(1) = {total!r})")
        return law
    f = []
    k = 0
    while True:
        term = math.exp(kappa * k) * claims.tail(k)
        if term == 0.0 or (k > 0 and term < TILT_TAIL_TOL):
            break
        f.append(term)
        k += 1
        if k > MAX_TILT_SUPPORT:
            raise ModelError(f"tilted pmf does not decay (kappa={kappa} too large?)")
    f = np.array(f)
    total = f.sum()
    if abs(total - 1.0) > 1e-10:
        raise ModelError(f"kappa={kappa} does not solve the discrete Lundberg equation (sum {total!r})")
    return DiscretePMF(f / total)


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------

_BUILDERS = {
    "discrete_pmf": lambda p: DiscretePMF(p["probs"]),
    "negative_binomial": lambda p: NegativeBinomial(p["p"], p["n"]),
    "geometric": lambda p: Geometric(p["p"]),
    "exponential": lambda p: Exponential(p["rate"]),
    "erlang": lambda p: Erlang(p["stages"], p["rate"]),
    "hyperexponential": lambda p: HyperExponential(p["weights"], p["rates"]),
    "matrix_exponential": lambda p: MatrixExponential(p["alpha"], p["T"]),
    "uniform01": lambda p: Uniform01(),
    "truncated_exponential": lambda p: TruncatedExponential(p["rate"], p["d"]),
}


def model_from_dict(spec: dict[str, Any]) -> DistributionModel:
    """Build a model from ``{"kind": ..., "params": {...}, "lattice": bool}``."""
    try:
        kind = spec["kind"]
    except (KeyError, TypeError):
        raise ModelError("model definition needs a 'kind' field") from None
    if kind not in _BUILDERS:
        raise ModelError(f"unknown model kind {kind!r}; expected one of {sorted(_BUILDERS)}")
    try:
        model = _BUILDERS[kind](spec.get("params", {}))
    except KeyError as exc:
        raise ModelError(f"{kind}: missing parameter {exc.args[0]!r}") from None
    if "lattice" in spec and bool(spec["lattice"]) != model.lattice:
        raise ModelError(f"{kind}: lattice flag must be {model.lattice}")
    return model


def model_to_dict(model: DistributionModel) -> dict[str, Any]:
    return model.to_dict()


def load_model(path: str | Path) -> DistributionModel:
    """Read a JSON model definition file."""
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(spec)
