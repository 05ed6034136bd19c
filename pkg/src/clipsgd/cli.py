"""Command-line experiment harness.

Every engine writes a CSV whose '#' header carries the resolved config and
its hash; output depends only on the config, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import chsgd, csgd, ode
from .config import ENGINES, ConfigError, ExperimentConfig
from .criteria import ccc, csc
from .factors import reduction, reduction_grid, reduction_oracle_quadrature
from .noise import Gaussian, noise_from_sigma
from .schedules import Schedule, max_ccc_schedule
from .spectra import ProblemInstance, identity_spectrum, power_law_spectrum

FIGURES = ("fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4a", "fig4b")
FAMILY_ORDER = ("gaussian", "rademacher", "uniform", "exponential")


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path, header, columns, meta: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(header))
    cols = [np.asarray(c) for c in columns]
    for i in range(cols[0].size):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def _header_row(path) -> str:
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            return line
    return ""


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"clipsgd": cfg.engine, "config_hash": cfg.digest()}
    meta.update({f"config.{name}.{k}": v for name in ("spectrum", "noise", "schedule", "run")
                 for k, v in sorted(getattr(cfg, name).items())})
    meta["v0"] = "isotropic, D0 = run.distance"
    meta["c_star_ties"] = "smallest maximizing c"
    meta.update(extra)
    return meta


def _c_grid(cfg: ExperimentConfig) -> np.ndarray:
    r = cfg.run
    return np.logspace(math.log10(float(r["c_min"])), math.log10(float(r["c_max"])), int(r["c_points"]))


def _table_schedule(cfg, inst, sched):
    if sched.state_dependent:
        return ode.resolve_schedule(inst, sched, cfg.t_end + 1.0 / inst.intrinsic_dim, cfg.dt(1e-2))
    return sched


# -- engines --------------------------------------------------------------------


def run_config(cfg: ExperimentConfig, out: Path, workers: int | None = None) -> dict:
    """Dispatch on [run] engine; writes ``out`` and returns a summary dict."""
    engine = cfg.engine
    summary: dict = {"engine": engine}
    if engine in ("factors", "criteria"):
        noise = cfg.build_noise()
        r = float(cfg.run["risk"])
        cs = _c_grid(cfg)
        if engine == "factors":
            h, g = reduction_grid(noise, r, cs)
            with np.errstate(divide="ignore", invalid="ignore"):
                cols = [cs, h, g, h / g, h * h / g]
            write_csv(out, ["c", "H", "G", "H_over_G", "H2_over_G"], cols, _meta(cfg))
        else:
            cols = [cs, [csc(noise, r, c) for c in cs], [ccc(noise, r, c) for c in cs]]
            write_csv(out, ["c", "csc", "ccc"], cols, _meta(cfg))
        c_star, best = max_ccc_schedule(noise, r)
        summary.update(c_star=c_star, max_ccc=best)
        return summary

    inst = cfg.build_instance()
    sched = cfg.build_schedule()
    d = inst.intrinsic_dim
    if engine == "sgd":
        n = cfg.steps(d)
        table = _table_schedule(cfg, inst, sched)
        if cfg.runs == 1:
            tr = csgd.run(inst, table, n, cfg.seed)
            write_csv(out, ["t", "risk", "distance"], [tr.times, tr.risk, tr.distance], _meta(cfg))
            summary["final_risk"] = tr.final_risk
        else:
            st = csgd.ensemble(inst, table, n, cfg.runs, cfg.seed, workers, cfg.level)
            write_csv(out, list(st.COLUMNS), st.columns(), _meta(cfg))
            summary["final_risk"] = float(st.mean_risk[-1])
    elif engine == "hsgd":
        table = _table_schedule(cfg, inst, sched)
        dt = cfg.dt(1.0 / d)
        if cfg.runs == 1:
            tr = chsgd.run_sde(inst, table, cfg.t_end, dt, cfg.seed)
            write_csv(out, ["t", "risk", "distance"], [tr.times, tr.risk, tr.distance], _meta(cfg))
            summary["final_risk"] = tr.final_risk
        else:
            st = chsgd.ensemble_sde(inst, table, cfg.t_end, cfg.runs, cfg.seed, dt, workers, cfg.level)
            write_csv(out, list(st.COLUMNS), st.columns(), _meta(cfg))
            summary["final_risk"] = float(st.mean_risk[-1])
    elif engine == "ode":
        tr = ode.solve(inst, sched, cfg.t_end, cfg.dt(1e-3))
        x = tr.extra
        write_csv(out, ["t", "risk", "distance", "lambda_int", "c_star", "eta_star"],
                  [tr.times, tr.risk, tr.distance, x["lambda_int"], x["c_star"], x["eta_star"]], _meta(cfg))
        summary["final_risk"] = tr.final_risk
    elif engine == "volterra":
        tr = ode.solve_volterra(inst, sched, cfg.t_end, cfg.dt(1e-3))
        write_csv(out, ["t", "risk", "distance", "lambda_int"],
                  [tr.times, tr.risk, tr.distance, tr.extra["lambda_int"]], _meta(cfg))
        summary["final_risk"] = tr.final_risk
    elif engine == "compare":
        res = ode.compare_clipped_vs_unclipped(inst, sched, cfg.t_end, cfg.dt(1e-2))
        cl, un = res.clipped, res.unclipped
        write_csv(out, ["t", "risk_clipped", "risk_unclipped", "lambda_clipped", "lambda_unclipped",
                        "c_star", "eta_star"],
                  [cl.times, cl.risk, un.risk, cl.extra["lambda_int"], un.extra["lambda_int"],
                   cl.extra["c_star"], cl.extra["eta_star"]], _meta(cfg))
        finite = cl.extra["c_star"][np.isfinite(cl.extra["c_star"])]
        summary.update(final_risk=res.final_clipped, final_unclipped=res.final_unclipped,
                       c_star=float(finite.min()) if finite.size else math.inf)
    return summary


def _summary_line(summary: dict, wall: float, out) -> str:
    parts = [summary["engine"]]
    for key in ("final_risk", "final_unclipped", "c_star", "max_ccc"):
        if key in summary:
            parts.append(f"{key}={summary[key]:.6g}")
    parts.append(f"wall={wall:.2f}s")
    parts.append(f"out={out}")
    return " ".join(parts)


# -- figure reproduction ---------------------------------------------------------


def _fig_config(engine, spectrum, noise, eta, clip, t_end, runs, seed, **run):
    cfg = ExperimentConfig(
        spectrum=spectrum, noise=noise,
        schedule={"eta": str(eta), "clip": str(clip), "compensate": "false"},
    )
    return cfg.with_updates(run={"engine": engine, "t_end": t_end, "runs": runs, "seed": seed, **run})


def _family_noise_cfg(family, sigma, p):
    if family == "rademacher":
        return {"family": family, "sigma": str(sigma), "p": str(p)}
    return {"family": family, "sigma": str(sigma)}


def reproduce(figure_id: str, out_dir: Path, runs: int = 100, seed: int = 0, workers=None) -> dict:
    """Write per-curve CSVs and ``<figure>_manifest.json`` into ``out_dir``."""
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict = {}
    params: dict = {}

    def emit(name, cfg, workers=workers):
        path = out_dir / f"{figure_id}_{name}.csv"
        run_config(cfg, path, workers)
        files[path.name] = {"engine": cfg.engine, "config_hash": cfg.digest(), "columns": _header_row(path)}

    if figure_id in ("fig1a", "fig1b"):
        alpha = "0.2" if figure_id == "fig1a" else repr(1 / 9)
        spec = {"kind": "power_law", "ambient_dim": "500", "alpha": alpha}
        noise = {"family": "gaussian", "sigma": "0.7"}
        params = {"ambient_dim": 500, "alpha": float(alpha), "sigma": 0.7, "eta": 0.7, "clip": 0.9, "t_end": 5.0}
        for engine in ("sgd", "hsgd"):
            emit(engine, _fig_config(engine, spec, noise, 0.7, 0.9, 5.0, runs, seed))
        emit("ode", _fig_config("ode", spec, noise, 0.7, 0.9, 5.0, 1, seed))
        emit("ode_unclipped", _fig_config("ode", spec, noise, 0.7, "inf", 5.0, 1, seed))
    elif figure_id in ("fig2a", "fig2b"):
        sigma, p = (9.0, 0.7) if figure_id == "fig2a" else (5.0, 0.2)
        params = {"risk": 3.0, "sigma": sigma, "p": p}
        for fam in FAMILY_ORDER:
            cfg = _fig_config("factors", {"kind": "identity", "ambient_dim": "1"}, _family_noise_cfg(fam, sigma, p),
                              1.0, "inf", 0.0, 1, seed, risk=3.0, c_min=1e-2, c_max=1e3, c_points=200)
            emit(fam, cfg)
    elif figure_id == "fig3":
        sigma, p = 7.0, 0.5
        risks = np.logspace(-4, 2, 61)
        params = {"sigma": sigma, "p": p, "risk_grid": "logspace(-4, 2, 61)"}
        cols, header = [risks], ["risk"]
        for fam in FAMILY_ORDER:
            noise = noise_from_sigma(fam, sigma, p)
            vals = [max_ccc_schedule(noise, r) for r in risks]
            cols += [[v[1] for v in vals], [v[0] for v in vals]]
            header += [f"max_ccc_{fam}", f"c_star_{fam}"]
        path = out_dir / "fig3_max_ccc.csv"
        write_csv(path, header, cols, {"clipsgd": "fig3", **{k: v for k, v in params.items()}})
        files[path.name] = {"engine": "max_ccc", "columns": ",".join(header)}
    else:
        spec = {"kind": "power_law", "ambient_dim": "500", "alpha": "0.2"}
        noise = ({"family": "gaussian", "sigma": "0.8"} if figure_id == "fig4a"
                 else {"family": "rademacher", "sigma": "0.8", "p": "0.2"})
        t_end = 10.0
        params = {"ambient_dim": 500, "alpha": 0.2, "sigma": 0.8, "eta": 0.4, "t_end": t_end,
                  "p": 0.2 if figure_id == "fig4b" else None}
        emit("compare", _fig_config("compare", spec, noise, 0.4, "inf", t_end, 1, seed, dt=1e-2))
        emit("sgd_unclipped", _fig_config("sgd", spec, noise, 0.4, "inf", t_end, runs, seed))
        cfg = _fig_config("sgd", spec, noise, 0.4, "max_ccc", t_end, runs, seed, dt=1e-2)
        emit("sgd_clipped", cfg.with_updates(schedule={"compensate": "true"}))

    manifest = {
        "figure": figure_id,
        "parameters": params,
        "seed": seed,
        "runs": runs,
        "v0": "isotropic v_i(0) = 1/(2 ambient_dim), so D0 = 1",
        "files": files,
    }
    (out_dir / f"{figure_id}_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# -- selftest ---------------------------------------------------------------------


def selftest() -> bool:
    """Fast sanity checks; prints one PASS/FAIL line each."""
    checks = []
    h, g = reduction(Gaussian(0.0), 0.5, 2.0)
    checks.append(("gaussian H at (0.5, 0, 2)", abs(h - math.erf(math.sqrt(2))) < 1e-12))
    worst = 0.0
    for fam in FAMILY_ORDER:
        noise = noise_from_sigma(fam, 1.0, 0.3)
        for r in (0.1, 1.0):
            for c in (0.3, 1.0, 3.0):
                a, b = reduction(noise, r, c), reduction_oracle_quadrature(noise, r, c)
                worst = max(worst, abs(a.H - b.H), abs(a.G - b.G))
    checks.append(("closed forms vs quadrature", worst < 1e-6))
    inst = ProblemInstance(identity_spectrum(20), Gaussian(0.5))
    sched = Schedule.constant(0.5, 0.7)
    full = ode.solve(inst, sched, 2.0, 1e-2)
    iso = ode.solve_isotropic(inst.initial_risk, inst.noise, sched, 2.0, 1e-2)
    checks.append(("ode vs isotropic", np.max(np.abs(full.risk - iso.risk)) < 1e-10))
    inst = ProblemInstance(power_law_spectrum(50, 0.2), Gaussian(0.8))
    res = ode.compare_clipped_vs_unclipped(inst, Schedule.constant(0.4), 1.0, 5e-2)
    checks.append(("gaussian compare equal", res.final_clipped == res.final_unclipped))
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= bool(passed)
    return ok


# -- argument parsing ----------------------------------------------------------------


def _kv(text: str) -> dict:
    """'kind=power_law,ambient_dim=500' -> dict."""
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clipsgd", description="Clipped SGD laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file")
    common.add_argument("--out", type=Path, help="output CSV path or directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help=f"parallel workers (default ${csgd.WORKERS_ENV} or 1)")
    common.add_argument("--spectrum", type=_kv, help="e.g. kind=power_law,ambient_dim=500,alpha=0.2")
    common.add_argument("--noise", type=_kv, help="e.g. family=rademacher,p=0.2,sigma=0.8")
    common.add_argument("--eta", help="constant or table t:value,...")
    common.add_argument("--clip", help="constant, table, inf or max_ccc")
    common.add_argument("--compensate", action="store_true", default=None)
    common.add_argument("--steps", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--t-end", type=float)
    common.add_argument("--risk", type=float, help="risk for factors/criteria")
    for name in ENGINES:
        sub.add_parser(name, parents=[common], help=f"run the {name} engine")
    rep = sub.add_parser("reproduce", help="regenerate the data behind a figure")
    rep.add_argument("figure", choices=FIGURES)
    rep.add_argument("--out", type=Path, default=Path("results"))
    rep.add_argument("--runs", type=int, default=100)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--workers", type=int)
    sub.add_parser("selftest", help="fast internal consistency checks")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.spectrum:
        cfg.spectrum = dict(args.spectrum)
    if args.noise:
        cfg.noise = dict(args.noise)
    sched = {"eta": args.eta, "clip": args.clip,
             "compensate": None if args.compensate is None else "true"}
    run = {"engine": args.command, "seed": args.seed, "steps": args.steps, "runs": args.runs,
           "dt": args.dt, "t_end": args.t_end, "risk": args.risk}
    return cfg.with_updates(schedule=sched, run=run)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return 0 if selftest() else 1
    start = time.perf_counter()
    try:
        if args.command == "reproduce":
            manifest = reproduce(args.figure, args.out, args.runs, args.seed, args.workers)
            print(f"reproduce {args.figure}: {len(manifest['files'])} files "
                  f"wall={time.perf_counter() - start:.2f}s out={args.out}")
            return 0
        cfg = _config_from_args(args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = args.out or Path(f"{cfg.engine}.csv")
    if out.suffix != ".csv":
        out = out / f"{cfg.engine}.csv"
    try:
        summary = run_config(cfg, out, args.workers)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(_summary_line(summary, time.perf_counter() - start, out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
