"""Run configured experiments and write CSV curves plus a JSON report."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .bounds import solve_t0, upper_bound_U
from .config import ExperimentConfig
from .model import Annulus, classify_type, divergence_diagnostics
from .slsolve import ResolutionError, lambda1_region
from .verify import (
    FAIL,
    INCONCLUSIVE_VERDICT,
    BatteryConfig,
    corrupted_thresholds,
    run_battery,
    summarize,
)

CSV_COLUMNS = (
    "model_id",
    "r",
    "lambda1_ball",
    "lambda1_error",
    "r2_lambda",
    "volume",
    "exterior_volume",
    "lambda1_annulus",
)

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 3


def fmt(x) -> str:
    """Float at 12 significant digits; non-finite values spelled out."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def jsonable(obj):
    """Recursively round floats to 12 digits and stringify non-finite ones."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else fmt(x)
    return obj


@dataclass
class ModelRun:
    model: object
    verdict: object
    profile: object
    annulus: dict  # r -> lambda1 (nan when the solve failed)
    failures: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list
    checks: list
    thresholds: object

    @property
    def exit_code(self) -> int:
        counts = summarize(self.checks)
        if counts[FAIL]:
            return EXIT_FAIL
        if counts[INCONCLUSIVE_VERDICT]:
            return EXIT_INCONCLUSIVE
        return EXIT_OK


def _grid(config):
    g = config.r_grid
    return asy.RadiusGrid(float(g["start"]), float(g["ratio"]), int(g["count"]))


def _annulus_curve(model, radii, tol, doublings, jobs):
    def work(r):
        try:
            return lambda1_region(model, Annulus(r / 8.0, r), tol=tol, max_doublings=doublings).lam, None
        except (ResolutionError, ArithmeticError, ValueError) as exc:
            return math.nan, f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(work, radii))
    else:
        out = [work(r) for r in radii]
    values = {float(r): v for r, (v, _) in zip(radii, out)}
    failures = {float(r): m for r, (_, m) in zip(radii, out) if m}
    return values, failures


def run_experiment(config: ExperimentConfig, seed=None) -> ExperimentResult:
    grid = _grid(config)
    tol = float(config.solver["tol"])
    doublings = int(config.solver["max_grid_doublings"])
    faults = config.faults or {}
    thresholds = corrupted_thresholds(faults["t0"]) if "t0" in faults else solve_t0()
    runs = []
    for model in config.models():
        verdict = classify_type(model)
        prof = asy.profile(model, grid, tol, max_doublings=doublings, jobs=config.jobs)
        radii = prof.curves[asy.EIGENVALUE].r
        annulus, ann_fail = _annulus_curve(model, radii, tol, doublings, config.jobs)
        failures = {q: c.failures for q, c in prof.curves.items() if c.failures}
        if ann_fail:
            failures["annulus"] = ann_fail
        runs.append(ModelRun(model, verdict, prof, annulus, failures))
    battery = BatteryConfig(
        seed=config.seed if seed is None else seed,
        checks=config.check_ids,
        tol=tol,
        grid=grid,
        thresholds=thresholds,
        eigen_scale=dict(faults.get("eigen_scale", {})),
        jobs=config.jobs,
    )
    checks = run_battery(
        [r.model for r in runs],
        battery,
        profiles={r.model.model_id: r.profile for r in runs},
        verdicts={r.model.model_id: r.verdict for r in runs},
    )
    return ExperimentResult(config, runs, checks, thresholds)


# ---------------------------------------------------------------------------
# output


def csv_rows(result: ExperimentResult) -> list:
    rows = []
    grid = _grid(result.config).radii()
    for run in result.runs:
        curves = run.profile.curves
        eig, vol, ext = (curves[q] for q in asy.QUANTITIES)
        index = {float(r): i for i, r in enumerate(eig.r)}
        for r in grid:
            i = index.get(float(r))
            if i is None:
                rows.append([run.model.model_id, fmt(r)] + ["skipped"] * 6)
                continue
            lam = eig.values[i]
            row = [run.model.model_id, fmt(r)]
            if np.isfinite(lam):
                row += [fmt(lam), fmt(eig.errors[i]), fmt(r * r * lam)]
            else:
                row += ["failed"] * 3
            row.append(fmt(vol.values[i]) if np.isfinite(vol.log_values[i]) else "failed")
            row.append(fmt(ext.values[i]))
            ann = run.annulus.get(float(r), math.nan)
            row.append(fmt(ann) if np.isfinite(ann) else "failed")
            rows.append(row)
    return rows


def csv_text(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(csv_rows(result))
    return buf.getvalue()


def report_dict(result: ExperimentResult) -> dict:
    th = result.thresholds
    models = []
    for run in result.runs:
        mid = run.model.model_id
        ann = [r * r * v for r, v in run.annulus.items() if np.isfinite(v)]
        nu = run.profile.nu_star
        models.append({
            "model_id": mid,
            "family": run.model.family,
            "params": dict(run.model.params),
            "type": run.verdict.to_dict(),
            "divergence": divergence_diagnostics(run.model).__dict__,
            "profile": run.profile.to_dict(),
            "U_of_nu_star": upper_bound_U(nu.value) if math.isfinite(nu.value) else math.inf,
            "annulus_sup_r2_lambda": max(ann) if ann else math.nan,
            "failures": run.failures,
            "checks": [c.to_dict() for c in result.checks if c.model_id == mid],
        })
    return jsonable({
        "config": result.config.to_dict(),
        "thresholds": th.to_dict(),
        "models": models,
        "global_checks": [c.to_dict() for c in result.checks if c.model_id == "-"],
        "summary": summarize(result.checks),
        "exit_code": result.exit_code,
    })


def report_json(result: ExperimentResult) -> str:
    return json.dumps(report_dict(result), indent=2, sort_keys=True) + "\n"


def emit_report(result: ExperimentResult, csv_path=None, json_path=None) -> int:
    """Write the configured outputs; return the exit code (3 if a write fails)."""
    outputs = []
    if csv_path:
        outputs.append((csv_path, csv_text(result)))
    if json_path:
        outputs.append((json_path, report_json(result)))
    for path, text in outputs:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from None
    return result.exit_code


class OutputError(OSError):
    pass
