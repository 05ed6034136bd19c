"""Covariance spectra and problem instances, stored in the eigenbasis of K."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of the data covariance, sorted descending with max 1.

    Unnormalized input is rescaled by its largest eigenvalue.
    """

    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("eigenvalues must be finite and strictly positive")
        lam = np.sort(lam)[::-1]
        object.__setattr__(self, "eigenvalues", _frozen(lam / lam[0]))

    @property
    def ambient_dim(self) -> int:
        return self.eigenvalues.size

    @cached_property
    def intrinsic_dim(self) -> float:
        return intrinsic_dimension(self)

    @cached_property
    def trace_sq(self) -> float:
        return float(np.sum(self.eigenvalues**2))

    @cached_property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return _frozen(np.sqrt(self.eigenvalues))

    def save(self, path) -> None:
        Path(path).write_text("".join(f"{x!r}\n" for x in self.eigenvalues.tolist()))

    @classmethod
    def load(cls, path) -> Spectrum:
        lines = Path(path).read_text().split()
        return cls(np.array([float(x) for x in lines]))

    def __hash__(self):
        return hash(self.eigenvalues.tobytes())

    def __eq__(self, other):
        return isinstance(other, Spectrum) and np.array_equal(
            self.eigenvalues, other.eigenvalues
        )


def power_law_spectrum(ambient_dim: int, alpha: float) -> Spectrum:
    """Eigenvalues j**-alpha for j = 1..ambient_dim."""
    if ambient_dim < 1:
        raise ValueError(f"ambient_dim must be >= 1, got {ambient_dim}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    j = np.arange(1, ambient_dim + 1, dtype=float)
    return Spectrum(j**-alpha)


def identity_spectrum(ambient_dim: int) -> Spectrum:
    return power_law_spectrum(ambient_dim, 0.0)


def intrinsic_dimension(spec: Spectrum) -> float:
    """Tr(K) / ||K||."""
    lam = spec.eigenvalues
    return float(lam.sum() / lam.max())


def spectrum_from_config(cfg: dict) -> Spectrum:
    """Build a spectrum from keys {kind, ambient_dim, alpha, values}.

    ``values`` is either a sequence of eigenvalues or a path to a text file
    with one eigenvalue per line.
    """
    kind = cfg.get("kind")
    if kind == "power_law":
        return power_law_spectrum(int(cfg["ambient_dim"]), float(cfg["alpha"]))
    if kind == "identity":
        return identity_spectrum(int(cfg["ambient_dim"]))
    if kind == "explicit":
        values = cfg["values"]
        if isinstance(values, (str, Path)):
            return Spectrum.load(values)
        return Spectrum(np.asarray(values, dtype=float))
    raise ValueError(f"spectrum: unknown kind {kind!r}")


def sample_data(spec: Spectrum, rng: np.random.Generator) -> np.ndarray:
    """One data vector a ~ N(0, K) in eigencoordinates."""
    return spec.sqrt_eigenvalues * rng.standard_normal(spec.ambient_dim)


def risk_and_distance(v, spec: Spectrum) -> tuple[float, float]:
    """(sum lam_i v_i, sum 2 v_i) for v_i = <x - x*, w_i>**2 / 2."""
    v = np.asarray(v, dtype=float)
    return float(spec.eigenvalues @ v), float(2.0 * v.sum())


def default_v0(spec: Spectrum, distance: float = 1.0) -> np.ndarray:
    """Isotropic initial displacement with D_0 = ``distance``."""
    return np.full(spec.ambient_dim, distance / (2.0 * spec.ambient_dim))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    spectrum: Spectrum
    noise: object  # a clipsgd.noise.NoiseModel
    v0: np.ndarray = field(default=None)

    def __post_init__(self):
        v0 = default_v0(self.spectrum) if self.v0 is None else self.v0
        v0 = np.asarray(v0, dtype=float)
        if v0.shape != (self.spectrum.ambient_dim,):
            raise ValueError(
                f"v0 must have length {self.spectrum.ambient_dim}, got shape {v0.shape}"
            )
        if not np.all(np.isfinite(v0)) or np.any(v0 < 0):
            raise ValueError("v0 entries must be finite and nonnegative")
        object.__setattr__(self, "v0", _frozen(v0))

    @property
    def intrinsic_dim(self) -> float:
        return self.spectrum.intrinsic_dim

    @property
    def initial_risk(self) -> float:
        return risk_and_distance(self.v0, self.spectrum)[0]

    @property
    def initial_distance(self) -> float:
        return risk_and_distance(self.v0, self.spectrum)[1]

    @property
    def initial_delta(self) -> np.ndarray:
        """Eigencoordinates of x_0 - x*, taking the nonnegative root."""
        return np.sqrt(2.0 * self.v0)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.spectrum.eigenvalues.tobytes())
        h.update(self.v0.tobytes())
        h.update(repr(self.noise).encode())
        return h.hexdigest()[:16]
