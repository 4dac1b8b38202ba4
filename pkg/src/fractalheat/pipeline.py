"""Pipeline orchestration: staged runs, persistence, manifests.

A run executes geometry -> labeling -> spectral -> subordination ->
verification and writes tables (CSV), reports (JSON), plot data plus a
gnuplot script, and a manifest with per-stage timings and a checksummed file
inventory.  All numeric output is formatted with 17 significant digits and
written in deterministic order, so identical configs reproduce identical
bytes regardless of the thread count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BoundReport,
    ReflectionStudy,
    refinement_stability,
    relativistic_comparison_reports,
    stable_comparison_reports,
)
from .config import ConfigError, RunConfig
from .geometry import validate_snf
from .kernels import KernelCache
from .labeling import build_good_labeling
from .subordinate import crosscheck_subordination

STAGES = ("validate", "labeling", "spectral", "subordinate", "verify", "report")


class PipelineError(RuntimeError):
    pass


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@dataclass
class RunManifest:
    config_hash: str
    artifact_version: str
    timings: dict[str, float]
    inventory: dict[str, str]
    claims_passed: bool

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "artifact_version": self.artifact_version,
            "timings": self.timings,
            "inventory": self.inventory,
            "claims_passed": self.claims_passed,
        }


@dataclass
class PipelineState:
    config: RunConfig
    cache: KernelCache
    written: list[Path] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    reports: dict[str, dict[str, BoundReport]] = field(default_factory=dict)
    stability: dict[str, float] = field(default_factory=dict)
    plot_rows: dict[str, list[tuple]] = field(default_factory=dict)
    claims_passed: bool = True

    def out(self, rel: str) -> Path:
        path = self.config.out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(path)
        return path


def parallel_map(fn, items, threads: int):
    """Order-preserving map; results are independent of the worker count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Stages


def _stage_validate(state: PipelineState) -> None:
    cfg = state.config
    report = validate_snf(cfg.system, depth=3)
    payload = {
        "fractal": cfg.system.name,
        "axioms": {
            r.name: {"pass": r.passed, "detail": r.detail} for r in report.results
        },
        "ok": report.ok,
    }
    _write_json(state.out("reports/validation.json"), payload)
    if not report.ok:
        raise PipelineError(f"fractal fails validation:\n{report.summary()}")


def _stage_labeling(state: PipelineState) -> None:
    cfg = state.config
    label_map = build_good_labeling(cfg.system, cfg.M, cfg.window)
    state.out("reports/labeling.txt").write_text(label_map.to_text())
    state.label_map = label_map


def _stage_spectral(state: PipelineState) -> None:
    cfg = state.config
    folded = state.cache.kernel(cfg.system, cfg.M, cfg.n)
    window = state.cache.kernel(cfg.system, cfg.window, cfg.n)
    rng = np.random.default_rng(cfg.seed)
    n = folded.n
    pairs = rng.integers(0, n, size=(min(cfg.table_pairs, n * n), 2))
    rows_idx = pairs[:, 0]
    cols_idx = pairs[:, 1]

    def row_block(t: float) -> np.ndarray:
        g = folded.matrix(t)
        return g[rows_idx, cols_idx]

    blocks = parallel_map(row_block, cfg.kernel_times, cfg.threads)
    table = state.out(f"tables/heat_M{cfg.M}_n{cfg.n}.csv")
    with table.open("w") as fh:
        fh.write("M,n,t,x_index,y_index,value\n")
        for t, block in zip(cfg.kernel_times, blocks):
            for (i, j), v in zip(pairs, block):
                fh.write(f"{cfg.M},{cfg.n},{fmt(t)},{i},{j},{fmt(v)}\n")
    metrics = {
        "conservativeness_residual": {
            fmt(t): fmt(folded.conservativeness_residual(t)) for t in cfg.kernel_times
        },
        "spectral_gap": fmt(folded.spectral_gap),
        "window_spectral_gap": fmt(window.spectral_gap),
        "n_vertices": folded.n,
        "window_vertices": window.n,
    }
    _write_json(state.out("reports/kernel_metrics.json"), metrics)
    state.table_pairs_idx = pairs


def _stage_subordinate(state: PipelineState) -> None:
    cfg = state.config
    folded = state.cache.kernel(cfg.system, cfg.M, cfg.n)
    pairs = state.table_pairs_idx
    payload = {}
    for spec in cfg.subordinators:
        def row_block(t: float, spec=spec) -> np.ndarray:
            g = folded.matrix(t, exponent=spec.laplace_exponent)
            return g[pairs[:, 0], pairs[:, 1]]

        blocks = parallel_map(row_block, cfg.kernel_times, cfg.threads)
        safe = spec.label().replace("(", "_").replace(")", "").replace(",", "_")
        table = state.out(f"tables/subordinate_{safe}.csv")
        with table.open("w") as fh:
            fh.write("M,n,t,x_index,y_index,value,subordinator\n")
            for t, block in zip(cfg.kernel_times, blocks):
                for (i, j), v in zip(pairs, block):
                    fh.write(
                        f"{cfg.M},{cfg.n},{fmt(t)},{i},{j},{fmt(v)},{spec.label()}\n"
                    )
        check = crosscheck_subordination(
            folded, spec, times=[0.5, 1.0, 2.0],
            n_samples=cfg.crosscheck_samples, seed=cfg.seed,
        )
        payload[spec.label()] = {
            "max_rel_error": fmt(check.max_rel_error),
            "n_samples": check.n_samples,
        }
    _write_json(state.out("reports/subordination.json"), payload)


def _collect_plot_rows(study, report, spec, cfg, rng):
    """(t, r, kernel, form, ratio) rows for one claim, on a seeded subsample."""
    from .bounds import form_for, log_time_grid

    system = cfg.system
    lf = float(system.L)
    n = len(study.sub_indices)
    take = min(50, n)
    idx = rng.integers(0, n, size=(take, 2))
    dist = study.metric(cfg.metric)
    crossover_rel = lf ** (study.M * system.walk_dim)
    crossover_stb = lf ** (spec.alpha * study.M * system.walk_dim) if spec else None
    regime = report.regime
    if regime == "near":
        times = log_time_grid(cfg.t_min, crossover_stb * 0.98, cfg.n_times)
    elif regime == "flat":
        cross = crossover_stb if spec.kind == "stable" else crossover_rel
        times = log_time_grid(cross, cross * cfg.flat_span, cfg.n_times)
    elif regime == "regime1":
        times = log_time_grid(1.0, crossover_rel * 0.98, cfg.n_times)
    elif regime in ("regime2", "regime3", "domination"):
        times = log_time_grid(cfg.t_min, 0.95, cfg.n_times)
    else:
        return []
    form = None
    if regime == "regime1":
        form = form_for(system, "relativistic_regime_1", alpha=spec.alpha, M=study.M,
                        c=report.fitted_c or 1.0)
    elif regime == "regime2":
        form = form_for(system, "relativistic_regime_2", alpha=spec.alpha, M=study.M,
                        c=report.fitted_c or 1.0)
    elif regime == "regime3":
        form = form_for(system, "relativistic_regime_3", alpha=spec.alpha, M=study.M)
    rows = []
    flat_value = lf ** (-study.M * system.hausdorff_dim)
    for t in times:
        folded = study.folded_matrix(t, spec)
        free = study.free_matrix(t, spec) if regime in ("near", "domination") else None
        for i, j in idx:
            r = float(dist[i, j])
            if regime == "regime2" and r < 1.0:
                continue
            if regime == "regime3" and r >= 1.0:
                continue
            kern = float(folded[i, j])
            if regime in ("near", "domination"):
                denom = float(free[i, j])
            elif regime == "flat":
                denom = flat_value
            else:
                denom = float(form.evaluate(t, r))
            rows.append((float(t), r, kern, denom, kern / max(denom, 1e-300)))
    return rows


def _stage_verify(state: PipelineState) -> None:
    cfg = state.config
    rng = np.random.default_rng(cfg.seed)
    all_reports: dict[str, dict] = {}
    passed = True
    for spec in cfg.subordinators:
        fine = ReflectionStudy.build(cfg.system, cfg.M, cfg.n, cfg.window, state.cache)
        coarse = ReflectionStudy.build(
            cfg.system, cfg.M, cfg.n - 1, cfg.window, state.cache
        )
        if spec.kind == "stable":
            fine_reports = stable_comparison_reports(
                fine, spec.alpha, n_times=cfg.n_times, t_min=cfg.t_min,
                spread_threshold=cfg.spread_threshold,
                bracket_tol=cfg.bracket_tol, seed=cfg.seed,
            )
            coarse_reports = stable_comparison_reports(
                coarse, spec.alpha, n_times=cfg.n_times, t_min=cfg.t_min,
                spread_threshold=cfg.spread_threshold,
                bracket_tol=cfg.bracket_tol, seed=cfg.seed,
            )
        else:
            fine_reports = relativistic_comparison_reports(
                fine, spec.alpha, spec.m, n_times=cfg.n_times, t_min=cfg.t_min,
                flat_span=cfg.flat_span, spread_threshold=cfg.spread_threshold,
                domination_tol=cfg.domination_tol, metric=cfg.metric, seed=cfg.seed,
            )
            coarse_reports = relativistic_comparison_reports(
                coarse, spec.alpha, spec.m, n_times=cfg.n_times, t_min=cfg.t_min,
                flat_span=cfg.flat_span, spread_threshold=cfg.spread_threshold,
                domination_tol=cfg.domination_tol, metric=cfg.metric, seed=cfg.seed,
            )
        for name, rep in fine_reports.items():
            stab = refinement_stability(coarse_reports[name], rep)
            state.stability[rep.claim] = stab
            entry = rep.to_dict()
            entry["stability"] = stab
            entry["stability_pass"] = stab <= cfg.stability_threshold
            entry["pass"] = bool(entry["pass"] and stab <= cfg.stability_threshold)
            all_reports[rep.claim] = entry
            passed &= entry["pass"]
            key = f"{spec.label()}:{name}"
            state.plot_rows[key] = _collect_plot_rows(fine, rep, spec, cfg, rng)
            state.reports.setdefault(spec.label(), {})[name] = rep
    _write_json(state.out("reports/bounds.json"), all_reports)
    state.claims_passed = passed


def emit_plot_data(plot_rows: dict[str, list[tuple]], outdir: Path) -> list[Path]:
    """Per-claim CSVs (t, r, kernel, form, ratio) plus a gnuplot script."""
    outdir = Path(outdir)
    if plot_rows:
        outdir.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    for key in sorted(plot_rows):
        rows = plot_rows[key]
        safe = key.replace("(", "_").replace(")", "").replace(",", "_").replace(":", "-")
        path = outdir / f"claim_{safe}.csv"
        with path.open("w") as fh:
            fh.write("t,r,kernel,form,ratio\n")
            for t, r, kern, formval, ratio in rows:
                fh.write(f"{fmt(t)},{fmt(r)},{fmt(kern)},{fmt(formval)},{fmt(ratio)}\n")
        files.append(path)
    if plot_rows:
        script = outdir / "plots.gp"
        lines = [
            "set datafile separator ','",
            "set logscale xy",
            "set key outside",
            "set xlabel 't'",
            "set ylabel 'ratio kernel/form'",
        ]
        for path in files:
            lines.append(
                f"plot '{path.name}' every ::1 using 1:5 with points title '{path.stem}'"
            )
            lines.append("pause -1")
        script.write_text("\n".join(lines) + "\n")
        files.append(script)
    return files


def _stage_report(state: PipelineState) -> None:
    cfg = state.config
    plot_files = emit_plot_data(state.plot_rows, cfg.out_dir / "plots")
    state.written.extend(plot_files)
    lines = [f"fractalheat run summary (version {__version__})"]
    for spec_label, reps in sorted(state.reports.items()):
        for name, rep in sorted(reps.items()):
            stab = state.stability.get(rep.claim)
            status = "pass" if rep.passed and (stab is None or stab <= cfg.stability_threshold) else "FAIL"
            lines.append(
                f"{status}  {rep.claim}: spread {rep.spread:.4g}"
                + (f", stability {stab:.3f}" if stab is not None else "")
            )
    summary = state.out("reports/summary.txt")
    summary.write_text("\n".join(lines) + "\n")


def run_pipeline(
    config: RunConfig, last_stage: str = "report", cache: KernelCache | None = None
) -> RunManifest:
    """Execute stages through ``last_stage``; on error remove partial outputs."""
    if last_stage not in STAGES:
        raise ConfigError(f"unknown stage {last_stage!r}; expected one of {STAGES}")
    config.validate()
    cache = cache or KernelCache(directory=config.out_dir / "cache")
    state = PipelineState(config=config, cache=cache)
    stage_fns = {
        "validate": _stage_validate,
        "labeling": _stage_labeling,
        "spectral": _stage_spectral,
        "subordinate": _stage_subordinate,
        "verify": _stage_verify,
        "report": _stage_report,
    }
    last_index = STAGES.index(last_stage)
    try:
        for stage in STAGES[: last_index + 1]:
            t0 = time.perf_counter()
            stage_fns[stage](state)
            state.timings[stage] = time.perf_counter() - t0
    except Exception:
        for path in state.written:
            if path.exists():
                path.unlink()
        raise
    inventory = {
        str(p.relative_to(config.out_dir)): _sha256(p)
        for p in sorted(set(state.written))
        if p.exists()
    }
    manifest = RunManifest(
        config_hash=hashlib.sha256(config.raw_text.encode()).hexdigest(),
        artifact_version=__version__,
        timings={k: round(v, 6) for k, v in state.timings.items()},
        inventory=inventory,
        claims_passed=state.claims_passed,
    )
    manifest_path = config.out_dir / "manifest.json"
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(manifest_path, manifest.to_dict())
    return manifest
