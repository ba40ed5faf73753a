"""Inter-event time distributions for transmission and recovery delays.

Each kind exposes the cumulative distribution, an inverse transform, and
sampling. ``inverse_cdf(u)`` maps a uniform variate u in (0, 1] through the
survival side, F^{-1}(1 - u), so an exponential delay is exactly -ln(u)/rate;
u and 1-u are equidistributed, hence samples follow the distribution either
way. Discrete-time kinds have integer support starting at 1: a node infected
at step t can transmit no earlier than step t+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError


def _check_u(u):
    arr = np.asarray(u, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise ValueError("uniform variate must lie in (0, 1]")
    return arr


@dataclass(frozen=True)
class InterEventDistribution:
    """Base type; concrete kinds implement cdf / inverse_cdf / atoms."""

    def cdf(self, t):
        raise NotImplementedError

    def inverse_cdf(self, u):
        raise NotImplementedError

    def pdf(self, t):
        """Density for continuous kinds; atomic kinds expose atoms() instead."""
        raise NotImplementedError(f"{type(self).__name__} has no density")

    def sample(self, gen: np.random.Generator, size=None):
        """Draw via the inverse transform from a (0, 1] uniform."""
        return self.inverse_cdf(1.0 - gen.random(size))

    def tail_time(self, eps: float) -> float:
        """A time T with 1 - cdf(T) <= eps."""
        return float(self.inverse_cdf(eps))

    def atoms(self, eps: float):
        """(times, probabilities) covering all but <= eps mass, or None if continuous."""
        return None

    @property
    def is_discrete(self) -> bool:
        return False

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(InterEventDistribution):
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ConfigError(f"exponential rate must be positive, got {self.rate}")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t < 0.0, 0.0, -np.expm1(-self.rate * np.maximum(t, 0.0)))

    def inverse_cdf(self, u):
        return -np.log(_check_u(u)) / self.rate

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t < 0.0, 0.0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)))

    def to_config(self) -> dict:
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Geometric(InterEventDistribution):
    """Per-step success probability p, support {1, 2, ...}."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"geometric p must lie in (0, 1], got {self.p}")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        steps = np.floor(np.maximum(t, 0.0))
        return np.where(t < 0.0, 0.0, 1.0 - (1.0 - self.p) ** steps)

    def inverse_cdf(self, u):
        u = _check_u(u)
        if self.p == 1.0:
            return np.ones_like(u)
        k = np.ceil(np.log(u) / math.log1p(-self.p))
        return np.maximum(k, 1.0)

    def pmf(self, k):
        k = np.asarray(k, dtype=np.float64)
        return self.p * (1.0 - self.p) ** (k - 1.0)

    def atoms(self, eps: float):
        if self.p == 1.0:
            return np.array([1.0]), np.array([1.0])
        k_max = max(1, int(math.ceil(math.log(eps) / math.log1p(-self.p))))
        times = np.arange(1, k_max + 1, dtype=np.float64)
        return times, self.pmf(times)

    @property
    def is_discrete(self) -> bool:
        return True

    def to_config(self) -> dict:
        return {"kind": "geometric", "p": self.p}


@dataclass(frozen=True)
class LogNormal(InterEventDistribution):
    """Parameters of the underlying normal."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ConfigError(f"lognormal sigma must be positive, got {self.sigma}")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        pos = t > 0.0
        out[pos] = ndtr((np.log(t[pos]) - self.mu) / self.sigma)
        return out

    def inverse_cdf(self, u):
        return np.exp(self.mu + self.sigma * ndtri(1.0 - _check_u(u)))

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        pos = t > 0.0
        z = (np.log(t[pos]) - self.mu) / self.sigma
        out[pos] = np.exp(-0.5 * z * z) / (t[pos] * self.sigma * np.sqrt(2.0 * np.pi))
        return out

    def to_config(self) -> dict:
        return {"kind": "lognormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Deterministic(InterEventDistribution):
    value: float

    def __post_init__(self):
        if not self.value > 0.0:
            raise ConfigError(f"deterministic delay must be positive, got {self.value}")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t >= self.value, 1.0, 0.0)

    def inverse_cdf(self, u):
        return np.full_like(_check_u(u), self.value)

    def tail_time(self, eps: float) -> float:
        return self.value

    def atoms(self, eps: float):
        return np.array([self.value]), np.array([1.0])

    @property
    def is_discrete(self) -> bool:
        return float(self.value).is_integer()

    def to_config(self) -> dict:
        return {"kind": "deterministic", "value": self.value}


@dataclass(frozen=True)
class Weibull(InterEventDistribution):
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0 and self.scale > 0.0):
            raise ConfigError("weibull shape and scale must be positive")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t < 0.0, 0.0,
                        -np.expm1(-((np.maximum(t, 0.0) / self.scale) ** self.shape)))

    def inverse_cdf(self, u):
        return self.scale * (-np.log(_check_u(u))) ** (1.0 / self.shape)

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        pos = t > 0.0
        z = t[pos] / self.scale
        out[pos] = (self.shape / self.scale) * z ** (self.shape - 1.0) * np.exp(-z ** self.shape)
        return out

    def to_config(self) -> dict:
        return {"kind": "weibull", "shape": self.shape, "scale": self.scale}


_KINDS = {
    "exponential": (Exponential, ("rate",)),
    "geometric": (Geometric, ("p",)),
    "lognormal": (LogNormal, ("mu", "sigma")),
    "deterministic": (Deterministic, ("value",)),
    "weibull": (Weibull, ("shape", "scale")),
}


def from_config(spec: dict, field: str = "distribution") -> InterEventDistribution:
    """Build a distribution from a {kind: ..., params...} mapping."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{field}: expected a mapping with a 'kind' entry, got {spec!r}")
    kind = str(spec["kind"]).lower().replace("-", "_")
    if kind not in _KINDS:
        raise ConfigError(f"{field}: unknown kind {spec['kind']!r} "
                          f"(expected one of {sorted(_KINDS)})")
    cls, params = _KINDS[kind]
    extra = set(spec) - {"kind"} - set(params)
    if extra:
        raise ConfigError(f"{field}: unexpected parameters {sorted(extra)} for kind {kind}")
    missing = [p for p in params if p not in spec]
    if missing:
        raise ConfigError(f"{field}: missing parameters {missing} for kind {kind}")
    try:
        return cls(**{p: float(spec[p]) for p in params})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}: bad parameter value ({exc})") from exc
