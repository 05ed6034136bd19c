"""Stability thresholds and the two clipping criteria.

CSC = H/G decides whether clipping raises the stable learning rate; CCC =
H^2/G decides whether clipping can beat tuned unclipped SGD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .factors import density_at_zero, reduction
from .noise import NoiseModel
from .spectra import Spectrum


def ccc_zero_limit(noise: NoiseModel, r: float) -> float:
    """lim_{c->0} H^2/G = 4 f_w(0)^2 E[w^2]; infinite when w has an atom at 0."""
    f0 = density_at_zero(noise, r)
    return math.inf if math.isinf(f0) else 4.0 * f0 * f0 * (2.0 * r + noise.variance())


def _small_c_limit(noise, r, name):
    f0 = density_at_zero(noise, r)
    if f0 > 0:
        return math.inf
    raise ValueError(f"{name}: limit c -> 0 does not exist (no mass of w near 0)")


def csc(noise: NoiseModel, r: float, c: float) -> float:
    """H/G at (r, c); the criterion holds iff the value exceeds 1."""
    if math.isinf(c):
        return 1.0
    h, g = reduction(noise, r, c) if c > 0 else (0.0, 0.0)
    if g == 0:
        return _small_c_limit(noise, r, "csc")
    return h / g


def ccc(noise: NoiseModel, r: float, c: float) -> float:
    """H^2/G at (r, c); the criterion holds iff the value exceeds 1."""
    if math.isinf(c):
        return 1.0
    h, g = reduction(noise, r, c) if c > 0 else (0.0, 0.0)
    if g == 0:
        lim = ccc_zero_limit(noise, r)
        if lim == 0:
            raise ValueError("ccc: limit c -> 0 does not exist (no mass of w near 0)")
        return lim
    return h * h / g


def eta_star(v, spec: Spectrum, noise: NoiseModel, c: float) -> tuple[float, float]:
    """Learning rates at which dR/dt and dD/dt vanish: (eta*_R, eta*_D)."""
    v = np.asarray(v, dtype=float)
    lam = spec.eigenvalues
    r = float(lam @ v)
    p = r + 0.5 * noise.variance()
    if p <= 0:
        raise ValueError("eta_star: dynamics at rest (P = 0)")
    h, g = reduction(noise, r, c)
    if g == 0:
        return math.inf, math.inf
    grad_sq = float(2.0 * (lam * lam) @ v)
    eta_r = spec.intrinsic_dim * grad_sq * h / (spec.trace_sq * p * g)
    eta_d = 2.0 * r * h / (p * g)
    return eta_r, eta_d


@dataclass(frozen=True)
class CriterionReport:
    csc: float
    ccc: float
    eta_star_risk: float
    eta_star_dist: float
    risk: float
    clip: float
    noise: str


def report(v, spec: Spectrum, noise: NoiseModel, c: float) -> CriterionReport:
    r = float(spec.eigenvalues @ np.asarray(v, dtype=float))
    er, ed = eta_star(v, spec, noise, c)
    return CriterionReport(csc(noise, r, c), ccc(noise, r, c), er, ed, r, c, repr(noise))
