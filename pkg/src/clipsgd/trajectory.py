"""Risk/distance time series and ensemble summaries shared by all engines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Trajectory:
    times: np.ndarray
    risk: np.ndarray
    distance: np.ndarray
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.risk = np.asarray(self.risk, dtype=float)
        self.distance = np.asarray(self.distance, dtype=float)
        n = self.times.size
        if self.risk.size != n or self.distance.size != n:
            raise ValueError("trajectory arrays must have equal lengths")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.times.size

    @property
    def final_risk(self) -> float:
        return float(self.risk[-1])

    def risk_at(self, t):
        """Linear interpolation of the risk on the recorded grid."""
        return np.interp(t, self.times, self.risk)

    def distance_at(self, t):
        return np.interp(t, self.times, self.distance)


@dataclass
class EnsembleStats:
    times: np.ndarray
    mean_risk: np.ndarray
    lo_risk: np.ndarray
    hi_risk: np.ndarray
    mean_dist: np.ndarray
    lo_dist: np.ndarray
    hi_dist: np.ndarray
    se_risk: np.ndarray
    n_runs: int
    level: float = 0.8
    meta: dict = field(default_factory=dict)

    COLUMNS = ("t", "mean_risk", "lo_risk", "hi_risk", "mean_dist", "lo_dist", "hi_dist")

    def columns(self) -> list[np.ndarray]:
        return [
            self.times, self.mean_risk, self.lo_risk, self.hi_risk,
            self.mean_dist, self.lo_dist, self.hi_dist,
        ]


def ensemble_stats(trajs: list[Trajectory], level: float = 0.8) -> EnsembleStats:
    """Pointwise mean and central ``level`` quantile band."""
    if len(trajs) < 2:
        raise ValueError("ensemble needs at least 2 runs")
    if not 0 < level < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {level}")
    times = trajs[0].times
    for tr in trajs[1:]:
        if not np.array_equal(tr.times, times):
            raise ValueError("ensemble members must share a recording grid")
    risk = np.stack([tr.risk for tr in trajs])
    dist = np.stack([tr.distance for tr in trajs])
    q = [(1 - level) / 2, (1 + level) / 2]
    rq = np.quantile(risk, q, axis=0)
    dq = np.quantile(dist, q, axis=0)
    n = len(trajs)
    return EnsembleStats(
        times=times.copy(),
        mean_risk=risk.mean(axis=0),
        lo_risk=rq[0],
        hi_risk=rq[1],
        mean_dist=dist.mean(axis=0),
        lo_dist=dq[0],
        hi_dist=dq[1],
        se_risk=risk.std(axis=0, ddof=1) / np.sqrt(n),
        n_runs=n,
        level=level,
        meta=dict(trajs[0].meta),
    )
