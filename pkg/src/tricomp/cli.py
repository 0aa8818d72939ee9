"""Batch front end: parse a config, run one pipeline, write reports.

Subcommands: kpp, lv2, wave3, simulate, sweep, verify-kernel.  Values come
from (highest precedence first) command-line flags, the --config JSON file,
and built-in defaults.  Every run writes a manifest.json capturing the
resolved config, its hash and the artifact paths; reports themselves carry no
timestamp, so identical configs reproduce byte-identical reports.

Exit codes: 0 success; 2 configuration error; 3 regime/precondition error
(uncovered regime, speed below the minimal wave speed, dominance predicate
failed); 4 convergence failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .asymptotics import match_wave_asymptotics
from .bvp import Grid, write_triple_csv
from .errors import (
    ConvergenceError,
    H3UnsatisfiedError,
    NoMonotoneWaveError,
    PreconditionError,
    RegimeError,
    TricompError,
)
from .model import ModelParams, classify_regime, rates
from .pde import (
    KernelSpec,
    SimState,
    convolution_identity_check,
    measure_speed,
    run_local,
)
from .scalar_waves import KppProblem, solve_kpp
from .system_waves import IterationConfig, solve_lv2, three_species_wave

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_CONVERGENCE = 4

PIPELINES = ("kpp", "lv2", "wave3", "simulate", "sweep", "verify-kernel")

_DEFAULTS = {
    "a1": 0.5,
    "a2": 2.0,
    "r": 0.2,
    "tau": 2.0,
    "c": [1.5],
    "L": 60.0,
    "n": 5999,
    "out": "tricomp_out",
    "tol": 1e-9,
    "max_iters": 200_000,
    "l": None,
    "l_bar": None,
    "beta": None,
    "seed": 0,
    "T": 20.0,
    "pde_h": 0.05,
    "quadrature_step": 0.05,
}


@dataclass
class RunConfig:
    """Fully resolved configuration of one pipeline run."""

    pipeline: str
    params: ModelParams
    c: list[float]
    L: float
    n: int
    out: Path
    tol: float = 1e-9
    max_iters: int = 200_000
    l: float | None = None
    l_bar: float | None = None
    beta: float | None = None
    seed: int = 0
    T: float = 20.0
    pde_h: float = 0.05
    quadrature_step: float = 0.05

    def grid(self) -> Grid:
        return Grid(self.L, self.n)

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(beta=self.beta, tol=self.tol,
                               max_iters=self.max_iters)

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "params": self.params.to_dict(),
            "c": self.c,
            "grid": {"L": self.L, "n": self.n},
            "out": str(self.out),
            "tol": self.tol,
            "max_iters": self.max_iters,
            "overrides": {"l": self.l, "l_bar": self.l_bar, "beta": self.beta,
                          "seed": self.seed},
            "T": self.T,
            "pde_h": self.pde_h,
            "quadrature_step": self.quadrature_step,
        }


class ConfigError(Exception):
    pass


def _flatten_config(obj: dict) -> dict:
    """Accept both flat keys and nested {"params": {...}, "grid": {...}}."""
    flat = dict(obj)
    for group in ("params", "grid", "overrides"):
        sub = flat.pop(group, None)
        if sub is not None:
            if not isinstance(sub, dict):
                raise ConfigError(f"'{group}' must be an object")
            flat.update(sub)
    return flat


def _parse_speeds(value) -> list[float]:
    if value is None:
        raise ConfigError("missing speed c")
    if isinstance(value, str):
        parts = [s for s in value.split(",") if s.strip()]
        if not parts:
            raise ConfigError("empty speed list")
        return [float(s) for s in parts]
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError("empty speed list")
        return [float(v) for v in value]
    return [float(value)]


def resolve_config(pipeline: str, args: argparse.Namespace) -> RunConfig:
    merged = dict(_DEFAULTS)
    if args.config is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config root must be a JSON object")
        merged.update(_flatten_config(loaded))
    for key in ("a1", "a2", "r", "tau", "c", "L", "n", "out", "tol",
                "max_iters", "l", "l_bar", "beta", "seed", "T", "pde_h",
                "quadrature_step"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            merged[key] = val
    try:
        params = ModelParams(a1=float(merged["a1"]), a2=float(merged["a2"]),
                             r=float(merged["r"]), tau=float(merged["tau"]))
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad model parameters: {exc}") from exc
    speeds = _parse_speeds(merged["c"])
    if any(not (math.isfinite(s) and s >= 0) for s in speeds):
        raise ConfigError(f"speeds must be finite and nonnegative: {speeds}")
    try:
        cfg = RunConfig(
            pipeline=pipeline,
            params=params,
            c=speeds,
            L=float(merged["L"]),
            n=int(merged["n"]),
            out=Path(merged["out"]),
            tol=float(merged["tol"]),
            max_iters=int(merged["max_iters"]),
            l=None if merged["l"] is None else float(merged["l"]),
            l_bar=None if merged["l_bar"] is None else float(merged["l_bar"]),
            beta=None if merged["beta"] is None else float(merged["beta"]),
            seed=int(merged["seed"]),
            T=float(merged["T"]),
            pde_h=float(merged["pde_h"]),
            quadrature_step=float(merged["quadrature_step"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc
    if cfg.n < 3 or cfg.L <= 0 or cfg.tol <= 0:
        raise ConfigError("grid/tolerance values out of range")
    return cfg


def _dump_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _write_manifest(cfg: RunConfig, regime: str | None, artifacts: list[Path]):
    resolved = cfg.to_dict()
    payload = json.dumps(resolved, sort_keys=True).encode()
    manifest = {
        "pipeline": cfg.pipeline,
        "config": resolved,
        "config_hash": hashlib.sha256(payload).hexdigest(),
        "regime": regime,
        "artifacts": [str(a) for a in artifacts],
        "created": datetime.now(timezone.utc).isoformat(),
    }
    _dump_json(cfg.out / "manifest.json", manifest)


def _single_speed(cfg: RunConfig) -> float:
    if len(cfg.c) != 1:
        raise ConfigError(f"{cfg.pipeline} expects a single speed, got {cfg.c}")
    return cfg.c[0]


# ---------------------------------------------------------------------------
# pipelines

def _run_kpp(cfg: RunConfig) -> int:
    c = _single_speed(cfg)
    p = cfg.params
    if p.a1 >= 1.0:
        raise RegimeError("the logistic front family needs a1 < 1")
    problem = KppProblem.logistic(1.0 - p.a1, 1.0, c)
    wave = solve_kpp(problem, cfg.grid())
    csv = cfg.out / "kpp_profile.csv"
    wave.profile.write_csv(csv, header="xi,omega")
    report = cfg.out / "kpp_report.json"
    _dump_json(report, wave.report())
    _write_manifest(cfg, None, [csv, report])
    return EXIT_OK


def _run_lv2(cfg: RunConfig) -> int:
    c = _single_speed(cfg)
    wave = solve_lv2(cfg.params, c, cfg.grid(), l=cfg.l,
                     config=cfg.iteration_config())
    csv = cfg.out / "lv2_profiles.csv"
    write_triple_csv(csv, wave.components, names=("u", "v"))
    report = cfg.out / "lv2_report.json"
    _dump_json(report, wave.report())
    _write_manifest(cfg, wave.regime.variant.value, [csv, report])
    return EXIT_OK


def _run_wave3(cfg: RunConfig) -> int:
    c = _single_speed(cfg)
    wave = three_species_wave(cfg.params, c, cfg.grid(),
                              config=cfg.iteration_config(),
                              l=cfg.l, l_bar=cfg.l_bar)
    csv = cfg.out / "profiles.csv"
    wave.write_csv(csv)
    report_data = wave.report()
    report_data["asymptotics"] = match_wave_asymptotics(wave)
    report = cfg.out / "report.json"
    _dump_json(report, report_data)
    _write_manifest(cfg, wave.regime.variant.value, [csv, report])
    return EXIT_OK


def _run_simulate(cfg: RunConfig) -> int:
    from .model import from_monotone

    c = _single_speed(cfg)
    wave = three_species_wave(cfg.params, c, cfg.grid(),
                              config=cfg.iteration_config(),
                              l=cfg.l, l_bar=cfg.l_bar)
    pde_grid = Grid(cfg.L, max(3, int(round(2 * cfg.L / cfg.pde_h)) - 1))
    x = pde_grid.nodes
    u0, v0, w0 = from_monotone(wave.u.interp(x), wave.v.interp(x),
                               wave.w.interp(x))
    state = SimState(pde_grid, u0, v0, w0, 0.0)
    times, frames, _ = run_local(state, cfg.params, cfg.T,
                                 snapshot_every=max(cfg.T / 40.0, 0.5))

    frames_csv = cfg.out / "frames.csv"
    with frames_csv.open("w") as fh:
        fh.write("t,xi,u,v,w\n")
        for t, (u, v, w) in zip(times, frames):
            for j in range(x.size):
                fh.write(f"{t},{x[j]},{u[j]},{v[j]},{w[j]}\n")
    speed = measure_speed(times, [f[0] for f in frames], pde_grid, level=0.5)
    speed["expected_speed"] = -c
    report = cfg.out / "speed_report.json"
    _dump_json(report, speed)
    _write_manifest(cfg, wave.regime.variant.value, [frames_csv, report])
    return EXIT_OK


def _sweep_row(cfg: RunConfig, c: float) -> dict:
    p = cfg.params
    row = {"c": c, "converged": False, "no_wave": False, "iterations": None,
           "residual": None, "rate_minus_fit": None,
           "rate_minus_predicted": None, "error": None}
    table = rates(p, c)
    if table.complex_roots:
        row["no_wave"] = True
        row["error"] = f"no monotone wave below {table.c_min:.6g}"
        return row
    row["rate_minus_predicted"] = table.lambda_minus
    try:
        wave = three_species_wave(p, c, cfg.grid(),
                                  config=cfg.iteration_config(),
                                  l=cfg.l, l_bar=cfg.l_bar)
    except TricompError as exc:
        row["error"] = str(exc)
        return row
    row["converged"] = True
    row["iterations"] = wave.iterations
    row["residual"] = max(wave.residuals)
    if wave.decay_minus[0] is not None:
        row["rate_minus_fit"] = wave.decay_minus[0].rate
    return row


def _run_sweep(cfg: RunConfig) -> int:
    if len(cfg.c) < 2:
        raise ConfigError("sweep needs at least two speeds")
    workers = int(os.environ.get("TRICOMP_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _sweep_row(cfg, c), cfg.c))
    else:
        rows = [_sweep_row(cfg, c) for c in cfg.c]

    csv = cfg.out / "sweep.csv"
    with csv.open("w") as fh:
        fh.write("c,converged,no_wave,iterations,residual,"
                 "rate_minus_fit,rate_minus_predicted,error\n")
        for row in rows:
            fh.write(",".join([
                f"{row['c']}",
                str(row["converged"]).lower(),
                str(row["no_wave"]).lower(),
                "" if row["iterations"] is None else str(row["iterations"]),
                "" if row["residual"] is None else f"{row['residual']:.3e}",
                ("" if row["rate_minus_fit"] is None
                 else f"{row['rate_minus_fit']:.8f}"),
                ("" if row["rate_minus_predicted"] is None
                 else f"{row['rate_minus_predicted']:.8f}"),
                "" if row["error"] is None else row["error"].replace(",", ";"),
            ]) + "\n")
    report = cfg.out / "sweep_report.json"
    _dump_json(report, {"rows": rows,
                        "regime": classify_regime(cfg.params).variant.value})
    _write_manifest(cfg, classify_regime(cfg.params).variant.value,
                    [csv, report])
    return EXIT_OK


def _run_verify_kernel(cfg: RunConfig) -> int:
    grid = Grid(cfg.L, max(3, int(round(2 * cfg.L / max(cfg.pde_h, 0.05))) - 1))
    kern = KernelSpec(tau=cfg.params.tau,
                      quadrature_step=cfg.quadrature_step)
    kern_fine = KernelSpec(tau=cfg.params.tau,
                           quadrature_step=cfg.quadrature_step / 2.0)

    def bump(x, t):
        return 0.5 + 0.3 * np.exp(-x * x / 25.0) * np.cos(0.3 * t)

    def const_one(x, t):
        return np.ones_like(x)

    res_one = convolution_identity_check(const_one, kern, grid)
    res_bump = convolution_identity_check(bump, kern, grid)
    res_bump_fine = convolution_identity_check(bump, kern_fine, grid)
    report_data = {
        "kernel_mass": kern.mass(),
        "mass_in_range": bool(0.9999 <= kern.mass() <= 1.0),
        "residual_constant": res_one["residual"],
        "residual_bump": res_bump["residual"],
        "residual_bump_refined": res_bump_fine["residual"],
        "refinement_decreases": bool(
            res_bump_fine["residual"] < res_bump["residual"]
        ),
        "quadrature_step": kern.quadrature_step,
    }
    report = cfg.out / "kernel_report.json"
    _dump_json(report, report_data)
    _write_manifest(cfg, None, [report])
    return EXIT_OK


_RUNNERS = {
    "kpp": _run_kpp,
    "lv2": _run_lv2,
    "wave3": _run_wave3,
    "simulate": _run_simulate,
    "sweep": _run_sweep,
    "verify-kernel": _run_verify_kernel,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tricomp",
        description="Monotone traveling waves of a three-species "
                    "competition-cooperation system",
        epilog="Value precedence: command-line flag > --config file > default.",
    )
    sub = parser.add_subparsers(dest="pipeline", required=True)
    for name, helptext in (
        ("kpp", "solve one scalar logistic front and fit its decay rates"),
        ("lv2", "two-species wave via the monotone iteration"),
        ("wave3", "three-species wave: classify, build pair, iterate, fit"),
        ("simulate", "seed the time-dependent system with the computed wave"),
        ("sweep", "run wave3 across a list of speeds"),
        ("verify-kernel", "check the delay-kernel identities numerically"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", type=str, default=None,
                        help="JSON config file")
        sp.add_argument("--a1", type=float, default=None)
        sp.add_argument("--a2", type=float, default=None)
        sp.add_argument("--r", type=float, default=None)
        sp.add_argument("--tau", type=float, default=None)
        sp.add_argument("--c", type=str, default=None,
                        help="speed, or comma-separated list for sweep")
        sp.add_argument("--L", type=float, default=None,
                        help="domain half-width")
        sp.add_argument("--n", type=int, default=None,
                        help="number of interior grid points")
        sp.add_argument("--out", type=str, default=None,
                        help="output directory")
        sp.add_argument("--tol", type=float, default=None,
                        help="iteration stopping tolerance")
        sp.add_argument("--max-iters", dest="max_iters", type=int,
                        default=None)
        sp.add_argument("--l", type=float, default=None,
                        help="lower-solution v-scale override")
        sp.add_argument("--l-bar", dest="l_bar", type=float, default=None,
                        help="lower-solution w-scale override")
        sp.add_argument("--beta", type=float, default=None,
                        help="monotone shift override")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--T", type=float, default=None,
                        help="simulation horizon (simulate)")
        sp.add_argument("--pde-h", dest="pde_h", type=float, default=None,
                        help="simulation grid spacing")
        sp.add_argument("--quadrature-step", dest="quadrature_step",
                        type=float, default=None,
                        help="kernel quadrature step (verify-kernel)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, matching the config-error contract
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args.pipeline, args)
        cfg.out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _RUNNERS[cfg.pipeline](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegimeError, NoMonotoneWaveError, H3UnsatisfiedError,
            PreconditionError) as exc:
        print(f"regime/precondition error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except TricompError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
