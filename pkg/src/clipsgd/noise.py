"""Symmetric, mean-zero target-noise families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NoiseModel:
    """Base class; subclasses are frozen dataclasses."""

    family: str = ""

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(NoiseModel):
    sigma: float

    family = "gaussian"

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"gaussian: sigma must be >= 0, got {self.sigma}")

    def sample(self, rng, size=None):
        z = rng.standard_normal(size)
        return self.sigma * z

    def variance(self):
        return self.sigma**2

    def to_config(self):
        return {"family": self.family, "sigma": self.sigma}


@dataclass(frozen=True)
class RademacherLike(NoiseModel):
    """Atoms -lam, 0, +lam with probabilities p/2, 1-p, p/2."""

    p: float
    lam: float

    family = "rademacher"

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"rademacher: p must lie in (0, 1], got {self.p}")
        if not self.lam > 0:
            raise ValueError(f"rademacher: lambda must be > 0, got {self.lam}")

    @classmethod
    def from_sigma(cls, sigma: float, p: float) -> RademacherLike:
        return cls(p, sigma / math.sqrt(p))

    def sample(self, rng, size=None):
        u = rng.random(size)
        sign = np.where(u < 0.5 * self.p, -1.0, 1.0)
        out = np.where(u < self.p, sign * self.lam, 0.0)
        return out if size is not None else float(out)

    def variance(self):
        return self.p * self.lam**2

    @property
    def sigma(self):
        return math.sqrt(self.variance())

    def to_config(self):
        return {"family": self.family, "p": self.p, "lambda": self.lam}


@dataclass(frozen=True)
class Uniform(NoiseModel):
    """Uniform on [-M, M]."""

    M: float

    family = "uniform"

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError(f"uniform: M must be > 0, got {self.M}")

    @classmethod
    def from_sigma(cls, sigma: float) -> Uniform:
        return cls(math.sqrt(3.0) * sigma)

    def sample(self, rng, size=None):
        return rng.uniform(-self.M, self.M, size)

    def variance(self):
        return self.M**2 / 3.0

    @property
    def sigma(self):
        return math.sqrt(self.variance())

    def to_config(self):
        return {"family": self.family, "M": self.M}


@dataclass(frozen=True)
class SymmetricExponential(NoiseModel):
    """Laplace noise with density rate * exp(-rate |x|) / 2."""

    rate: float

    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"exponential: rate must be > 0, got {self.rate}")

    @classmethod
    def from_sigma(cls, sigma: float) -> SymmetricExponential:
        return cls(math.sqrt(2.0) / sigma)

    def sample(self, rng, size=None):
        return rng.laplace(0.0, 1.0 / self.rate, size)

    def variance(self):
        return 2.0 / self.rate**2

    @property
    def sigma(self):
        return math.sqrt(self.variance())

    def to_config(self):
        return {"family": self.family, "rate": self.rate}


FAMILIES = ("gaussian", "rademacher", "uniform", "exponential")


def noise_from_sigma(family: str, sigma: float, p: float = 0.5) -> NoiseModel:
    """Member of ``family`` with standard deviation ``sigma``."""
    if family == "gaussian":
        return Gaussian(sigma)
    if family == "rademacher":
        return RademacherLike.from_sigma(sigma, p)
    if family == "uniform":
        return Uniform.from_sigma(sigma)
    if family == "exponential":
        return SymmetricExponential.from_sigma(sigma)
    raise ValueError(f"unknown noise family {family!r}")


def noise_from_config(cfg: dict) -> NoiseModel:
    """Keys: family plus sigma | (p, lambda) | (p, sigma) | M | rate."""
    family = cfg.get("family")
    try:
        if family == "gaussian":
            return Gaussian(float(cfg["sigma"]))
        if family == "rademacher":
            p = float(cfg["p"])
            if "lambda" in cfg:
                return RademacherLike(p, float(cfg["lambda"]))
            return RademacherLike.from_sigma(float(cfg["sigma"]), p)
        if family == "uniform":
            if "M" in cfg:
                return Uniform(float(cfg["M"]))
            return Uniform.from_sigma(float(cfg["sigma"]))
        if family == "exponential":
            if "rate" in cfg:
                return SymmetricExponential(float(cfg["rate"]))
            return SymmetricExponential.from_sigma(float(cfg["sigma"]))
    except KeyError as e:
        raise ValueError(f"noise: family {family!r} is missing key {e.args[0]!r}") from None
    raise ValueError(f"noise: unknown family {family!r}")
