"""Experiment configuration: INI files with [spectrum], [noise], [schedule], [run]."""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field, replace

from .noise import NoiseModel, noise_from_config
from .schedules import Schedule
from .spectra import ProblemInstance, Spectrum, default_v0, spectrum_from_config

ENGINES = ("sgd", "hsgd", "ode", "volterra", "compare", "criteria", "factors")

_RUN_DEFAULTS = {
    "engine": "ode",
    "t_end": "5.0",
    "steps": "",
    "runs": "100",
    "seed": "0",
    "dt": "",
    "level": "0.8",
    "distance": "1.0",
    "risk": "1.0",
    "c_min": "1e-3",
    "c_max": "1e3",
    "c_points": "200",
}


class ConfigError(ValueError):
    pass


def _num(section, key, raw, positive=False, nonneg=False, integer=False):
    try:
        val = int(raw) if integer else float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config: [{section}] {key}: expected a number, got {raw!r}") from None
    if positive and not val > 0:
        raise ConfigError(f"config: [{section}] {key}: must be positive, got {raw!r}")
    if nonneg and not val >= 0:
        raise ConfigError(f"config: [{section}] {key}: must be nonnegative, got {raw!r}")
    return val


def parse_table(section: str, key: str, raw: str):
    """'0.7' -> ([0.0], [0.7]); '0:0.7, 2:0.5' -> ([0, 2], [0.7, 0.5])."""
    times, values = [], []
    for item in raw.split(","):
        item = item.strip()
        if ":" in item:
            t, v = item.split(":", 1)
            times.append(_num(section, key, t, nonneg=True))
        else:
            if times:
                raise ConfigError(f"config: [{section}] {key}: mixing plain and t:value entries")
            times.append(0.0)
            v = item
        values.append(_num(section, key, v, positive=True))
    if len(times) > 1 and any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError(f"config: [{section}] {key}: table times must increase")
    if times[0] != 0:
        raise ConfigError(f"config: [{section}] {key}: table must start at t = 0")
    return times, values


@dataclass
class ExperimentConfig:
    spectrum: dict = field(default_factory=lambda: {"kind": "power_law", "ambient_dim": "500", "alpha": "0.2"})
    noise: dict = field(default_factory=lambda: {"family": "gaussian", "sigma": "0.7"})
    schedule: dict = field(default_factory=lambda: {"eta": "0.7", "clip": "inf", "compensate": "false"})
    run: dict = field(default_factory=lambda: dict(_RUN_DEFAULTS))

    # -- io -------------------------------------------------------------------

    @classmethod
    def from_ini(cls, text: str) -> ExperimentConfig:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"config: malformed file: {e}") from None
        unknown = set(parser.sections()) - {"spectrum", "noise", "schedule", "run"}
        if unknown:
            raise ConfigError(f"config: unknown section [{sorted(unknown)[0]}]")
        cfg = cls()
        for name in ("spectrum", "noise", "schedule"):
            if parser.has_section(name):
                setattr(cfg, name, dict(parser[name]))
        if parser.has_section("run"):
            for key in parser["run"]:
                if key not in _RUN_DEFAULTS:
                    raise ConfigError(f"config: [run] unknown key {key!r}")
            cfg.run.update(parser["run"])
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_ini(fh.read())

    def to_ini(self) -> str:
        """Canonical text: sorted keys, fixed section order."""
        buf = io.StringIO()
        for name in ("spectrum", "noise", "schedule", "run"):
            buf.write(f"[{name}]\n")
            for key in sorted(getattr(self, name)):
                buf.write(f"{key} = {getattr(self, name)[key]}\n")
            buf.write("\n")
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]

    def with_updates(self, **sections) -> ExperimentConfig:
        new = replace(
            self,
            spectrum=dict(self.spectrum),
            noise=dict(self.noise),
            schedule=dict(self.schedule),
            run=dict(self.run),
        )
        for name, updates in sections.items():
            getattr(new, name).update({k: str(v) for k, v in updates.items() if v is not None})
        new.validate()
        return new

    # -- resolved objects -------------------------------------------------------

    def validate(self) -> None:
        self.build_spectrum()
        self.build_noise()
        self.build_schedule()
        r = self.run
        if r["engine"] not in ENGINES:
            raise ConfigError(f"config: [run] engine: unknown engine {r['engine']!r}")
        _num("run", "t_end", r["t_end"], nonneg=True)
        _num("run", "runs", r["runs"], positive=True, integer=True)
        _num("run", "seed", r["seed"], nonneg=True, integer=True)
        _num("run", "level", r["level"], positive=True)
        _num("run", "distance", r["distance"], nonneg=True)
        _num("run", "risk", r["risk"], nonneg=True)
        _num("run", "c_min", r["c_min"], positive=True)
        _num("run", "c_max", r["c_max"], positive=True)
        _num("run", "c_points", r["c_points"], positive=True, integer=True)
        if r["steps"]:
            _num("run", "steps", r["steps"], positive=True, integer=True)
        if r["dt"]:
            _num("run", "dt", r["dt"], positive=True)
        if not 0 < float(r["level"]) < 1:
            raise ConfigError(f"config: [run] level: must lie in (0, 1), got {r['level']!r}")

    def build_spectrum(self) -> Spectrum:
        s = self.spectrum
        kind = s.get("kind")
        if kind is None:
            raise ConfigError("config: [spectrum] missing key 'kind'")
        try:
            if kind in ("power_law", "identity"):
                _num("spectrum", "ambient_dim", s.get("ambient_dim"), positive=True, integer=True)
            if kind == "power_law":
                _num("spectrum", "alpha", s.get("alpha"), nonneg=True)
            if kind == "explicit" and "values" in s and "," in s["values"]:
                values = [_num("spectrum", "values", x, positive=True) for x in s["values"].split(",")]
                return spectrum_from_config({"kind": kind, "values": values})
            return spectrum_from_config(s)
        except KeyError as e:
            raise ConfigError(f"config: [spectrum] missing key {e.args[0]!r}") from None
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"config: [spectrum] {e}") from None

    def build_noise(self) -> NoiseModel:
        for key, raw in self.noise.items():
            if key != "family":
                _num("noise", key, raw, nonneg=True)
        try:
            return noise_from_config(self.noise)
        except ValueError as e:
            raise ConfigError(f"config: [noise] {e}") from None

    def build_schedule(self) -> Schedule:
        s = self.schedule
        if "eta" not in s:
            raise ConfigError("config: [schedule] missing key 'eta'")
        et, ev = parse_table("schedule", "eta", s["eta"])
        clip = s.get("clip", "inf").strip()
        comp = s.get("compensate", "false").strip().lower()
        if comp not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"config: [schedule] compensate: expected a boolean, got {comp!r}")
        compensate = comp in ("true", "1", "yes")
        if clip == "max_ccc":
            return Schedule(tuple(et), tuple(ev), clip_rule="max_ccc", compensate=compensate)
        if clip == "inf":
            ct, cv = [0.0], [math.inf]
        else:
            ct, cv = parse_table("schedule", "clip", clip)
        return Schedule(tuple(et), tuple(ev), tuple(ct), tuple(cv), None, compensate)

    def build_instance(self) -> ProblemInstance:
        spec = self.build_spectrum()
        return ProblemInstance(spec, self.build_noise(), default_v0(spec, float(self.run["distance"])))

    # -- typed accessors ----------------------------------------------------------

    @property
    def engine(self) -> str:
        return self.run["engine"]

    @property
    def t_end(self) -> float:
        return float(self.run["t_end"])

    @property
    def runs(self) -> int:
        return int(self.run["runs"])

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    @property
    def level(self) -> float:
        return float(self.run["level"])

    def steps(self, intrinsic_dim: float) -> int:
        if self.run["steps"]:
            return int(self.run["steps"])
        return max(1, math.ceil(self.t_end * intrinsic_dim - 1e-9))

    def dt(self, default: float | None) -> float | None:
        return float(self.run["dt"]) if self.run["dt"] else default
