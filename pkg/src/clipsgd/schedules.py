"""Learning-rate and clipping schedules in continuous time t = k/d."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .factors import reduction, reduction_grid
from .noise import NoiseModel

INF = math.inf
_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _piecewise(times: np.ndarray, values: np.ndarray, t):
    """Right-continuous piecewise-constant lookup with times[0] == 0."""
    idx = np.searchsorted(times, t, side="right") - 1
    return values[np.clip(idx, 0, len(values) - 1)]


@dataclass(frozen=True, eq=False)
class Schedule:
    """Piecewise-constant eta(t) and c(t), optionally state dependent.

    ``clip_rule="max_ccc"`` replaces c(t) by the maximizer of H^2/G at the
    current deterministic risk; ``compensate`` divides eta by H at the
    current risk and threshold.
    """

    eta_times: tuple = (0.0,)
    eta_values: tuple = (1.0,)
    clip_times: tuple = (0.0,)
    clip_values: tuple = (INF,)
    clip_rule: str | None = None
    compensate: bool = False

    def __post_init__(self):
        for name in ("eta", "clip"):
            times = np.asarray(getattr(self, f"{name}_times"), dtype=float)
            values = np.asarray(getattr(self, f"{name}_values"), dtype=float)
            if times.shape != values.shape or times.ndim != 1 or times.size == 0:
                raise ValueError(f"schedule: {name} times and values must be equal-length 1-d")
            if times[0] != 0.0 or np.any(np.diff(times) <= 0):
                raise ValueError(f"schedule: {name} times must start at 0 and increase")
            object.__setattr__(self, f"_{name}_t", times)
            object.__setattr__(self, f"_{name}_v", values)
        if not np.all(np.isfinite(self._eta_v)) or np.any(self._eta_v <= 0):
            raise ValueError("schedule: eta must be finite and positive")
        if np.any(~(self._clip_v > 0)):
            raise ValueError("schedule: clip must be positive (inf means unclipped)")
        if self.clip_rule not in (None, "max_ccc"):
            raise ValueError(f"schedule: unknown clip rule {self.clip_rule!r}")

    @classmethod
    def constant(cls, eta: float, clip: float = INF, compensate: bool = False) -> Schedule:
        return cls((0.0,), (float(eta),), (0.0,), (float(clip),), None, compensate)

    @classmethod
    def table(cls, times, etas, clips) -> Schedule:
        times = tuple(float(t) for t in times)
        return cls(times, tuple(map(float, etas)), times, tuple(map(float, clips)))

    @classmethod
    def max_ccc(cls, eta: float, compensate: bool = True) -> Schedule:
        return cls((0.0,), (float(eta),), clip_rule="max_ccc", compensate=compensate)

    @property
    def kind(self) -> str:
        if self.state_dependent:
            return "state_dependent"
        if len(self.eta_times) == 1 and len(self.clip_times) == 1:
            return "constant"
        return "piecewise"

    @property
    def state_dependent(self) -> bool:
        return self.clip_rule is not None or self.compensate

    def eta(self, t):
        return _piecewise(self._eta_t, self._eta_v, t)

    def clip(self, t):
        return _piecewise(self._clip_t, self._clip_v, t)

    def resolve(self, t: float, r: float, noise: NoiseModel) -> tuple[float, float]:
        """(eta, c) at time t and deterministic risk r."""
        eta = float(self.eta(t))
        if self.clip_rule == "max_ccc":
            c = max_ccc_schedule(noise, r)[0]
        else:
            c = float(self.clip(t))
        if self.compensate:
            eta = compensated_eta(eta, noise, r, c)
        return eta, c

    def to_config(self) -> dict:
        return {
            "eta_times": list(self.eta_times),
            "eta_values": list(self.eta_values),
            "clip_times": list(self.clip_times),
            "clip_values": [repr(float(c)) for c in self.clip_values],
            "clip_rule": self.clip_rule,
            "compensate": self.compensate,
        }


@dataclass(frozen=True)
class ScaledSchedule:
    """Per-iteration eta_k = eta(k/d)/d and c_k = c(k/d) sqrt(d)."""

    eta: np.ndarray
    clip: np.ndarray
    intrinsic_dim: float

    @property
    def n_steps(self) -> int:
        return self.eta.size

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) / self.intrinsic_dim


def scale_to_steps(sched: Schedule, intrinsic_dim: float, n_steps: int) -> ScaledSchedule:
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if sched.state_dependent:
        raise ValueError("state-dependent schedules must be resolved into a table first")
    t = np.arange(n_steps) / intrinsic_dim
    return ScaledSchedule(
        sched.eta(t) / intrinsic_dim, sched.clip(t) * math.sqrt(intrinsic_dim), float(intrinsic_dim)
    )


def compensated_eta(base_eta: float, noise: NoiseModel, r: float, c: float) -> float:
    """eta / H_c(r), equating the clipped drift with the unclipped one."""
    h = reduction(noise, r, c).H
    if not h > 0:
        raise ValueError(f"compensation undefined: H = 0 at r={r}, c={c}")
    return base_eta / h


def golden_section_max(f, a: float, b: float, tol: float = 1e-9, max_iter: int = 200):
    """Maximize a unimodal f on [a, b]; returns (x, f(x))."""
    x1 = b - _PHI * (b - a)
    x2 = a + _PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _PHI * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


_GRID_POINTS = 64
_CCC_TOL = 1e-9


def _ccc_values(noise, r, c):
    h, g = reduction_grid(noise, r, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(g > 0, h * h / g, 0.0)


def max_ccc_schedule(noise: NoiseModel, r: float) -> tuple[float, float]:
    """(c*, max_c H^2/G); (inf, 1) when no finite threshold beats 1.

    Coarse log grid over [1e-4, 1e4] sqrt(2r + sigma^2), then golden-section
    refinement in log c around the best grid node.  Ties resolve to the
    smallest maximizing c.
    """
    if r < 0:
        raise ValueError(f"risk must be nonnegative, got {r}")
    scale = math.sqrt(2.0 * r + noise.variance())
    if scale == 0:
        return INF, 1.0
    logc = np.linspace(math.log(1e-4), math.log(1e4), _GRID_POINTS) + math.log(scale)
    vals = _ccc_values(noise, r, np.exp(logc))
    i = int(np.argmax(vals))
    lo, hi = logc[max(i - 1, 0)], logc[min(i + 1, _GRID_POINTS - 1)]

    def f(u):
        h, g = reduction(noise, r, math.exp(u))
        return h * h / g if g > 0 else 0.0

    x, best = golden_section_max(f, lo, hi, tol=1e-10)
    if vals[i] > best:
        x, best = logc[i], float(vals[i])
    if best <= 1.0 + _CCC_TOL:
        return INF, 1.0
    return math.exp(x), best
