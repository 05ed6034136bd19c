"""Streaming clipped SGD on least squares, simulated in the eigenbasis of K."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rng import make_rng
from .schedules import ScaledSchedule, Schedule, scale_to_steps
from .spectra import ProblemInstance
from .trajectory import EnsembleStats, Trajectory, ensemble_stats

WORKERS_ENV = "CLIPSGD_WORKERS"


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass
class SgdState:
    delta: np.ndarray
    step: int
    rng: np.random.Generator
    samples_drawn: int = 0


def sgd_step(
    state: SgdState, instance: ProblemInstance, eta_k: float, c_k: float, check: bool = False
) -> SgdState:
    """One fresh sample, one clipped gradient step; updates ``state`` in place."""
    spec = instance.spectrum
    a = spec.sqrt_eigenvalues * state.rng.standard_normal(spec.ambient_dim)
    eps = instance.noise.sample(state.rng)
    state.samples_drawn += 1
    w = float(a @ state.delta) - eps
    scale = 1.0
    if c_k < math.inf:
        norm = abs(w) * math.sqrt(float(a @ a))
        if norm > c_k:
            scale = c_k / norm
    step = (eta_k * scale * w) * a
    if check:
        assert math.sqrt(float(step @ step)) <= eta_k * c_k * (1 + 1e-12)
    state.delta -= step
    state.step += 1
    return state


def _risk_dist(delta, lam):
    sq = delta * delta
    return 0.5 * float(lam @ sq), float(sq.sum())


def record_every_default(intrinsic_dim: float) -> int:
    return max(1, math.ceil(intrinsic_dim / 50))


def run(
    instance: ProblemInstance,
    schedule: Schedule | ScaledSchedule,
    n_steps: int,
    seed: int,
    record_every: int | None = None,
    check: bool = False,
) -> Trajectory:
    """One C-SGD trajectory; records at steps 0, m, 2m, ... and the last step."""
    d = instance.intrinsic_dim
    if isinstance(schedule, Schedule):
        schedule = scale_to_steps(schedule, d, n_steps)
    if schedule.n_steps < n_steps:
        raise ValueError("scaled schedule is shorter than n_steps")
    m = record_every or record_every_default(d)
    lam = instance.spectrum.eigenvalues
    state = SgdState(instance.initial_delta.copy(), 0, make_rng(seed))
    r0, d0 = _risk_dist(state.delta, lam)
    steps, risks, dists = [0], [r0], [d0]
    for k in range(n_steps):
        sgd_step(state, instance, schedule.eta[k], schedule.clip[k], check)
        if (k + 1) % m == 0 or k + 1 == n_steps:
            rr, dd = _risk_dist(state.delta, lam)
            steps.append(k + 1)
            risks.append(rr)
            dists.append(dd)
    return Trajectory(
        np.array(steps) / d,
        risks,
        dists,
        meta={"engine": "sgd", "seed": seed, "instance": instance.digest(), "samples": state.samples_drawn},
    )


def _ensemble_map(fn, args, workers):
    if workers <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args)))


def ensemble(
    instance: ProblemInstance,
    schedule: Schedule | ScaledSchedule,
    n_steps: int,
    n_runs: int,
    base_seed: int,
    workers: int | None = None,
    level: float = 0.8,
    record_every: int | None = None,
) -> EnsembleStats:
    """Runs with seeds base_seed .. base_seed + n_runs - 1, merged in seed order."""
    if n_runs < 2:
        raise ValueError(f"n_runs must be >= 2, got {n_runs}")
    if isinstance(schedule, Schedule):
        schedule = scale_to_steps(schedule, instance.intrinsic_dim, n_steps)
    args = [(instance, schedule, n_steps, base_seed + j, record_every) for j in range(n_runs)]
    trajs = _ensemble_map(run, args, workers or default_workers())
    stats = ensemble_stats(trajs, level)
    stats.meta = {"engine": "sgd", "base_seed": base_seed, "n_runs": n_runs, "instance": instance.digest()}
    return stats
