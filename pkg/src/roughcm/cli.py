"""Command-line front end: lift-check, solve, manifold, validate, bench."""
from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import suites
from .controlled import NONLINEAR_KINDS, crp_norm, make_nonlinearity, random_controlled
from .dynamics import RadiusRule, calibrate_constants, cocycle_defect, picard_unit, solve_flow, write_trajectory_csv
from .manifold import (ContractionError, GapParams, LPWindow, gap_k, gap_lhs, invariance_defect, lp_solve,
                       sample_graph, tangency_probe, write_graph)
from .roughpath import (SampledPath, area_identity_defect, chen_defects, holder_seminorms, lift_piecewise_linear,
                        sample_gaussian_path, shift, zero_path)
from .spectral import KINDS, SpectralModel, build_space, dichotomy_constants

NOISE_KINDS = ("gaussian", "zero")

DEFAULTS = {
    "model": "dirichlet_rd",
    "n_modes": 16,
    "gamma": 0.45,
    "hurst": 0.5,
    "noise": "gaussian",
    "seed": 0,
    "step_exponent": 8,
    "k_past": 20,
    "n_blocks": 2,
    "solver_tol": 1e-12,
    "integral_tol": 1e-9,
    "lp_tol": 1e-14,
    "drift": "cubic_drift",
    "drift_coeff": 1.0,
    "diffusion": "poly_diffusion",
    "diffusion_coeff": 0.5,
    "xi_mode": 0,
    "xi_amplitude": 0.05,
    "radius": "default",
    "gap_k": "working",
    "n_directions": 8,
    "n_radii": 6,
    "sweep_seeds": 1,
    "triples": 10000,
    "corrupt_area": 0,
    "self_convergence": 1,
    "out_dir": "runs",
}

THRESHOLDS = {
    "chen_max_defect": 1e-12,
    "area_identity_max": 1e-12,
    "shift_cocycle_defect": 0.0,
    "cocycle_defect_rel": 1e-6,
    "endpoint_drift_rel": 1e-3,
    "gap_lhs": 0.25,
    "even_mode_max": 1e-10,
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

def parse_config_text(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def _coerce(key: str, value):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    ref = DEFAULTS[key]
    try:
        if isinstance(ref, bool) or isinstance(ref, int) and not isinstance(ref, float):
            return int(value)
        if isinstance(ref, float):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r}") from exc
    return str(value)


def resolve_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        cfg.update({k: _coerce(k, v) for k, v in parse_config_text(Path(path).read_text()).items()})
    cfg.update({k: _coerce(k, v) for k, v in overrides.items()})
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    if cfg["model"] not in KINDS:
        raise ConfigError(f"model must be one of {KINDS}")
    if not (1.0 / 3.0 < cfg["gamma"] <= 0.5):
        raise ConfigError("gamma must lie in (1/3, 1/2]")
    if not (1.0 / 3.0 < cfg["hurst"] <= 0.5):
        raise ConfigError("hurst must lie in (1/3, 1/2]")
    if cfg["step_exponent"] < 6:
        raise ConfigError("step_exponent must be at least 6")
    for key in ("drift", "diffusion"):
        if cfg[key] not in NONLINEAR_KINDS:
            raise ConfigError(f"{key} must be one of {NONLINEAR_KINDS}")
    if cfg["noise"] not in NOISE_KINDS:
        raise ConfigError(f"noise must be one of {NOISE_KINDS}")
    if cfg["n_modes"] < 2 or cfg["k_past"] < 2 or cfg["n_blocks"] < 1:
        raise ConfigError("n_modes, k_past and n_blocks are too small")


def canonical_config(cfg: dict) -> str:
    return "".join(f"{k}={_scalar(cfg[k])}\n" for k in sorted(cfg))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_config(cfg).encode()).hexdigest()


# ---------------------------------------------------------------- output

def _scalar(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    return str(v)


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float written at 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {dumps(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v, indent + 1) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return _scalar(obj)


class AtomicOutputs:
    """Collects files in a temporary directory and renames them into place at the end."""

    def __init__(self, out_dir: str):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=self.out))
        self.names: list[str] = []

    def path(self, name: str) -> Path:
        self.names.append(name)
        return self.tmp / name

    def commit(self) -> None:
        for name in self.names:
            os.replace(self.tmp / name, self.out / name)
        self.discard()

    def discard(self) -> None:
        for p in self.tmp.iterdir():
            p.unlink()
        self.tmp.rmdir()


def _report(command: str, cfg: dict, metrics: dict, thresholds: dict, failures: list) -> dict:
    return {"command": command, "passed": not failures, "failed_metrics": failures,
            "metrics": metrics, "thresholds": thresholds,
            "config": {k: cfg[k] for k in sorted(cfg)}, "config_hash": config_hash(cfg)}


# ---------------------------------------------------------------- helpers

def _space(cfg):
    return build_space(SpectralModel(cfg["model"], cfg["n_modes"]))


def _step(cfg) -> float:
    return 2.0 ** -cfg["step_exponent"]


def _noise(cfg, start: float, end: float, seed: int | None = None, step: float | None = None):
    step = _step(cfg) if step is None else step
    if cfg["noise"] == "zero":
        return zero_path(start, end, step, cfg["gamma"])
    path = sample_gaussian_path(cfg["hurst"], start, end, step, cfg["seed"] if seed is None else seed)
    return lift_piecewise_linear(path, cfg["gamma"])


def _coefficients(cfg, space):
    return (make_nonlinearity(space, cfg["drift"], cfg["drift_coeff"], cfg["gamma"]),
            make_nonlinearity(space, cfg["diffusion"], cfg["diffusion_coeff"], cfg["gamma"]))


def _xi(cfg, space):
    return space.unit(cfg["xi_mode"], cfg["xi_amplitude"])


def _gap(cfg, space) -> tuple[GapParams | None, float, float]:
    d = dichotomy_constants(space, 0.0, np.linspace(-5.0, 5.0, 101))
    base = gap_k(d, 1.0)
    choice = cfg["gap_k"]
    k = base.k_gap if choice == "working" else base.k_closed_form if choice == "closed_form" else float(choice)
    lhs = gap_lhs(d, 1.0, base.eta, k)
    if lhs >= 0.25:
        return None, k, lhs
    return GapParams(eta=base.eta, k_gap=k, c_s=1.0, dichotomy=d, k_closed_form=base.k_closed_form), k, lhs


def _rule(cfg, space, drift, diffusion, k_target: float, default: str) -> RadiusRule:
    choice = default if cfg["radius"] == "default" else cfg["radius"]
    if choice != "auto":
        return RadiusRule(override=float(choice))
    rp = _noise(cfg, 0.0, 1.0)
    c_f, c_g = calibrate_constants(space, drift, diffusion, rp)
    return RadiusRule(k_target=k_target, c_f=c_f, c_g=c_g)


def _aggregate(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"min": float(v.min()), "median": float(np.median(v)), "max": float(v.max())}


def _threads() -> int:
    return max(1, int(os.environ.get("ROUGHCM_THREADS", "1")))


# ---------------------------------------------------------------- commands

def _lift_metrics(cfg, seed: int) -> dict:
    rp = _noise(cfg, -1.0, 2.0, seed)
    if cfg["corrupt_area"]:
        rp = rp.with_step_area(rp.index(0.5), 1e-3)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.integers(0, rp.n_points, size=(cfg["triples"], 3)), axis=1)
    hs = holder_seminorms(rp, (0.0, 1.0))
    moved = shift(rp, 1.0)
    grid = np.arange(0, int(round(1.0 / rp.step)) + 1)
    base, mb = rp.index(1.0), moved.index(0.0)
    inc = np.abs((rp.values[base + grid] - rp.values[base]) - (moved.values[mb + grid] - moved.values[mb])).max()
    area = np.abs(rp._area_idx(np.full_like(grid, base), base + grid)
                  - moved._area_idx(np.full_like(grid, mb), mb + grid)).max()
    return {"chen_max_defect": float(chen_defects(rp, idx).max()),
            "area_identity_max": area_identity_defect(rp),
            "holder_w_gamma": hs.w_gamma, "holder_ww_2gamma": hs.ww_2gamma, "holder_rho": hs.rho,
            "shift_cocycle_defect": float(max(inc, area))}


def cmd_lift_check(cfg: dict) -> dict:
    seeds = range(cfg["seed"], cfg["seed"] + cfg["sweep_seeds"])
    with ThreadPoolExecutor(_threads()) as pool:
        rows = list(pool.map(lambda s: _lift_metrics(cfg, s), seeds))
    if len(rows) == 1:
        metrics = dict(rows[0])
        worst = metrics
    else:
        metrics = {k: _aggregate([r[k] for r in rows]) for k in rows[0]}
        worst = {k: v["max"] for k, v in metrics.items()}
    th = {k: THRESHOLDS[k] for k in ("chen_max_defect", "area_identity_max", "shift_cocycle_defect")}
    failures = [k for k, lim in th.items() if not worst[k] <= lim]
    return _report("lift-check", cfg, metrics, th, failures)


def cmd_solve(cfg: dict, outputs: AtomicOutputs) -> dict:
    space = _space(cfg)
    drift, diffusion = _coefficients(cfg, space)
    n = cfg["n_blocks"]
    rp = _noise(cfg, 0.0, float(max(n, 2)))
    rule = _rule(cfg, space, drift, diffusion, gap_k(dichotomy_constants(space, 0.0, np.linspace(-5, 5, 101))).k_gap, "1.0")
    xi = _xi(cfg, space)
    traj = solve_flow(space, drift, diffusion, rule, xi, rp, n, tol=cfg["solver_tol"])
    write_trajectory_csv(traj, outputs.path("trajectory.csv"))
    coc = cocycle_defect(space, drift, diffusion, rule, xi, rp, 1, 1, tol=cfg["solver_tol"])
    ref = float(space.norm(solve_flow(space, drift, diffusion, rule, xi, rp, 2, tol=cfg["solver_tol"]).final, 0.0))
    metrics = {"residual": float(max(traj.residuals)), "iterations": traj.iterations,
               "radii": [r.r for r in traj.radii], "final_norm": float(space.norm(traj.final, 0.0)),
               "cocycle_defect": coc, "cocycle_defect_rel": coc / ref if ref > 0 else 0.0}
    th = {"residual": cfg["solver_tol"], "cocycle_defect_rel": THRESHOLDS["cocycle_defect_rel"]}
    if drift.kind == "zero" and diffusion.kind == "zero":
        metrics["semigroup_deviation"] = max(
            float(np.abs(b.u - space.propagate(k + b.times[:, None], xi)).max()) for k, b in enumerate(traj.blocks))
        th["semigroup_deviation"] = 1e-12
    if cfg["self_convergence"] and cfg["noise"] != "zero":
        fine = sample_gaussian_path(cfg["hurst"], 0.0, 1.0, _step(cfg) / 2, cfg["seed"])
        coarse = SampledPath(fine.times[::2], fine.values[::2], fine.step * 2)
        ends = []
        for p in (fine, coarse):
            lift = lift_piecewise_linear(p, cfg["gamma"])
            ends.append(picard_unit(space, drift, diffusion, rule.for_rough(lift), xi, lift,
                                    tol=cfg["solver_tol"]).path.u[-1])
        den = float(np.linalg.norm(ends[0]))
        metrics["endpoint_drift_rel"] = float(np.linalg.norm(ends[0] - ends[1])) / den if den > 0 else 0.0
        th["endpoint_drift_rel"] = THRESHOLDS["endpoint_drift_rel"]
    failures = [k for k, lim in th.items() if not metrics[k] <= lim]
    return _report("solve", cfg, metrics, th, failures)


def cmd_manifold(cfg: dict, outputs: AtomicOutputs) -> dict:
    space = _space(cfg)
    drift, diffusion = _coefficients(cfg, space)
    gp, k, lhs = _gap(cfg, space)
    if gp is None:
        raise ConfigError(f"gap condition fails: left side {lhs:.17g} >= 0.25 for K = {k:.17g}")
    kp = cfg["k_past"]
    rp = _noise(cfg, -2.0 * kp - 1, 3.0)
    rule = _rule(cfg, space, drift, diffusion, gp.k_gap, "auto")
    win = LPWindow.build(rp, kp, rule)
    graph = sample_graph(space, drift, diffusion, win, gp, n_directions=cfg["n_directions"],
                         n_radii=cfg["n_radii"], tol=cfg["lp_tol"])
    ball = min(win.radii[0].r, rule.for_rough(rp).r)
    radii = [ball / 2 ** j for j in range(1, 4)]
    tang = tangency_probe(space, drift, diffusion, win, gp, radii, tol=cfg["lp_tol"])
    e = graph.center_points[1] / np.linalg.norm(graph.center_points[1])
    inv = invariance_defect(space, drift, diffusion, rule, rp, kp, gp, [0.5 * ball * e, -0.5 * ball * e],
                            lp_tol=cfg["lp_tol"])
    even = np.zeros(space.N, dtype=bool)
    if cfg["model"] == "dirichlet_rd":
        even = space.wavenumbers % 2 == 0
    even_max = float(np.abs(graph.h_values[:, even]).max()) if even.any() else 0.0
    metrics = {"gap_lhs": lhs, "K": k, "eta": gp.eta, "k_past": kp, "radius": win.radii[0].r,
               "iterations": graph.iterations, "tail_estimate": float(max(graph.tail_estimates)),
               "tangency_radii": radii, "tangency_ratios": tang,
               "tangency_decreasing": all(b < a for a, b in zip(tang, tang[1:])) or max(tang) == 0.0,
               "invariance_defect": inv.defect, "invariance_excluded": inv.excluded,
               "even_mode_max": even_max,
               "backward_sum_mismatch": float(max(graph.consistency))}
    th = {"gap_lhs": THRESHOLDS["gap_lhs"], "invariance_defect": 5e-3 if cfg["noise"] == "zero" else 2e-2,
          "even_mode_max": THRESHOLDS["even_mode_max"]}
    failures = [k for k in ("gap_lhs",) if not metrics[k] < th[k]]
    failures += [k for k in ("invariance_defect", "even_mode_max") if not metrics[k] <= th[k]]
    if not metrics["tangency_decreasing"]:
        failures.append("tangency_decreasing")
    meta = {"eta": gp.eta, "K": k, "K_past": kp, "tail_estimate": metrics["tail_estimate"], "gap_lhs": lhs,
            "config_hash": config_hash(cfg)}
    write_graph(graph, outputs.path("graph.csv"))
    outputs.path("graph_meta.json").write_text(dumps(meta) + "\n")
    return _report("manifold", cfg, metrics, th, failures)


def cmd_validate(cfg: dict, suite: str) -> dict:
    results = suites.run_suite(suite, seed=cfg["seed"])
    for r in results:
        print(r.line(), file=sys.stderr)
    failures = [f"criterion_{r.number}" for r in results if not r.passed]
    report = _report("validate", cfg, {"suite": suite, "criteria": [r.as_dict() for r in results]}, {}, failures)
    return report


def cmd_bench(cfg: dict) -> dict:
    space = _space(cfg)
    drift, diffusion = _coefficients(cfg, space)
    timings = {}

    def clock(name, fn, repeat=3):
        best = math.inf
        for _ in range(repeat):
            t = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t)
        timings[name] = best

    rp = _noise(cfg, -cfg["k_past"] - 1.0, 2.0)
    clock("sample_and_lift", lambda: _noise(cfg, -cfg["k_past"] - 1.0, 2.0))
    cp = random_controlled(space, shift(rp, 0.0), 0.0, np.random.default_rng(cfg["seed"]))
    clock("crp_norm", lambda: crp_norm(space, cp))
    rule = RadiusRule(override=1.0)
    clock("picard_unit", lambda: picard_unit(space, drift, diffusion, rule.for_rough(rp), _xi(cfg, space), rp))
    gp = gap_k(dichotomy_constants(space, 0.0, np.linspace(-5, 5, 101)))
    win = LPWindow.build(rp, cfg["k_past"], rule)
    xi = np.where(space.center_mask, _xi(cfg, space), 0.0)
    clock("lp_solve", lambda: lp_solve(space, drift, diffusion, win, gp, xi, tol=cfg["lp_tol"]), repeat=1)
    return _report("bench", cfg, {"seconds": timings}, {}, [])


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughcm", description="Center manifolds of rough parabolic equations.")
    p.add_argument("command", choices=["lift-check", "solve", "manifold", "validate", "bench"])
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--suite", default="all", help="chen | sewing | cocycle | doss | manifold | all")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["out_dir"] = args.out
    try:
        cfg = resolve_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outputs = AtomicOutputs(cfg["out_dir"])
    name = args.command.replace("-", "_")
    try:
        if args.command == "lift-check":
            report = cmd_lift_check(cfg)
        elif args.command == "solve":
            report = cmd_solve(cfg, outputs)
        elif args.command == "manifold":
            report = cmd_manifold(cfg, outputs)
        elif args.command == "validate":
            if args.suite not in (*suites.SUITES, "all"):
                raise ConfigError(f"unknown suite {args.suite!r}")
            report = cmd_validate(cfg, args.suite)
        else:
            report = cmd_bench(cfg)
    except (ConfigError, ContractionError, ValueError, RuntimeError) as exc:
        outputs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = dumps(report) + "\n"
    outputs.path(f"{name}_report.json").write_text(text)
    outputs.commit()
    sys.stdout.write(text)
    if not report["passed"]:
        print("failed: " + ", ".join(report["failed_metrics"]), file=sys.stderr)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
