"""Euler-Maruyama integration of clipped homogenized SGD in the eigenbasis.

    d delta_i = -eta H lam_i delta_i dt + eta sqrt(2 G P lam_i / d) dB_i

with (H, G) taken from the exact risk of the current state and
P = R + sigma^2/2.  The drift uses grad P = K delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .csgd import _ensemble_map, default_workers, record_every_default
from .factors import reduction
from .rng import make_rng
from .schedules import Schedule
from .spectra import ProblemInstance
from .trajectory import EnsembleStats, Trajectory, ensemble_stats


@dataclass
class SdeState:
    delta: np.ndarray
    t: float
    rng: np.random.Generator


def em_step(state: SdeState, instance: ProblemInstance, eta_t: float, c_t: float, dt: float) -> SdeState:
    """One Euler-Maruyama step; updates ``state`` in place."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lam = instance.spectrum.eigenvalues
    delta = state.delta
    r = 0.5 * float(lam @ (delta * delta))
    p = r + 0.5 * instance.noise.variance()
    h, g = reduction(instance.noise, r, c_t)
    xi = state.rng.standard_normal(lam.size)
    diffusion = eta_t * math.sqrt(2.0 * g * p * dt / instance.intrinsic_dim)
    state.delta = delta - (eta_t * h * dt) * lam * delta + diffusion * instance.spectrum.sqrt_eigenvalues * xi
    state.t += dt
    return state


def run_sde(
    instance: ProblemInstance,
    schedule: Schedule,
    t_end: float,
    dt: float | None = None,
    seed: int = 0,
    record_every: int | None = None,
) -> Trajectory:
    """One C-HSGD path.  Default dt = 1/d, matching one SGD step."""
    d = instance.intrinsic_dim
    dt = 1.0 / d if dt is None else dt
    if dt > (1.0 / d) * (1 + 1e-12):
        raise ValueError(f"dt must be <= 1/d = {1.0 / d}, got {dt}")
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if schedule.state_dependent:
        raise ValueError("state-dependent schedules must be resolved into a table first")
    n_steps = math.ceil(t_end / dt - 1e-9)
    # same recording times as C-SGD: every ceil(d/50) units of 1/d
    m = record_every or max(1, round(record_every_default(d) / (d * dt)))
    lam = instance.spectrum.eigenvalues
    state = SdeState(instance.initial_delta.copy(), 0.0, make_rng(seed))
    steps, risks, dists = [0], [instance.initial_risk], [instance.initial_distance]
    for k in range(n_steps):
        t = k * dt
        em_step(state, instance, float(schedule.eta(t)), float(schedule.clip(t)), dt)
        if (k + 1) % m == 0 or k + 1 == n_steps:
            sq = state.delta * state.delta
            steps.append(k + 1)
            risks.append(0.5 * float(lam @ sq))
            dists.append(float(sq.sum()))
    return Trajectory(
        np.array(steps) * dt, risks, dists,
        meta={"engine": "hsgd", "seed": seed, "dt": dt, "instance": instance.digest()},
    )


def ensemble_sde(
    instance: ProblemInstance,
    schedule: Schedule,
    t_end: float,
    n_runs: int,
    base_seed: int,
    dt: float | None = None,
    workers: int | None = None,
    level: float = 0.8,
    record_every: int | None = None,
) -> EnsembleStats:
    if n_runs < 2:
        raise ValueError(f"n_runs must be >= 2, got {n_runs}")
    args = [(instance, schedule, t_end, dt, base_seed + j, record_every) for j in range(n_runs)]
    trajs = _ensemble_map(run_sde, args, workers or default_workers())
    stats = ensemble_stats(trajs, level)
    stats.meta = {"engine": "hsgd", "base_seed": base_seed, "n_runs": n_runs, "instance": instance.digest()}
    return stats
