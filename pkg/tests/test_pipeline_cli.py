import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from fractalheat.config import load_run_config
from fractalheat.pipeline import emit_plot_data, run_pipeline

CONFIGS = Path(__file__).parent.parent / "configs"


def _quick_config(tmp_path, out_name="out", **overrides):
    text = (CONFIGS / "quick-run.ini").read_text()
    text = text.replace(
        "fractal = gasket.ini", f"fractal = {CONFIGS / 'gasket.ini'}"
    ).replace("out = out-quick", f"out = {tmp_path / out_name}")
    for key, value in overrides.items():
        old = next(
            line for line in text.splitlines() if line.startswith(f"{key} = ")
        )
        text = text.replace(old, f"{key} = {value}")
    path = tmp_path / "run.ini"
    path.write_text(text)
    return path


def _tracked_files(outdir: Path):
    return {
        str(p.relative_to(outdir)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(outdir.rglob("*"))
        if p.is_file() and p.suffix in (".csv", ".json", ".txt", ".gp")
        and p.name != "manifest.json"
    }


class TestPipeline:
    def test_manifest_inventory_matches_disk(self, tmp_path):
        cfg = load_run_config(_quick_config(tmp_path))
        manifest = run_pipeline(cfg)
        assert manifest.claims_passed
        for rel, digest in manifest.inventory.items():
            path = cfg.out_dir / rel
            assert path.exists()
            assert hashlib.sha256(path.read_bytes()).hexdigest() == digest

    def test_identical_runs_reproduce_bytes(self, tmp_path):
        path = _quick_config(tmp_path)
        cfg_a = load_run_config(path, out_override=tmp_path / "a")
        cfg_b = load_run_config(path, out_override=tmp_path / "b")
        man_a = run_pipeline(cfg_a)
        man_b = run_pipeline(cfg_b)
        assert man_a.inventory == man_b.inventory
        assert man_a.config_hash == man_b.config_hash
        assert _tracked_files(cfg_a.out_dir) == _tracked_files(cfg_b.out_dir)

    def test_failure_removes_partial_outputs(self, tmp_path):
        # an impossible truncation bracket aborts the verify stage
        cfg = load_run_config(_quick_config(tmp_path, bracket_tol="1e-6"))
        with pytest.raises(Exception):
            run_pipeline(cfg)
        leftovers = [
            p for p in cfg.out_dir.rglob("*")
            if p.is_file() and "cache" not in p.parts
        ]
        assert leftovers == []

    def test_stage_prefix_runs(self, tmp_path):
        cfg = load_run_config(_quick_config(tmp_path))
        manifest = run_pipeline(cfg, last_stage="spectral")
        names = set(manifest.inventory)
        assert any(n.startswith("tables/heat") for n in names)
        assert not any(n.startswith("reports/bounds") for n in names)

    def test_plot_csv_ratios_within_report_range(self, tmp_path):
        cfg = load_run_config(_quick_config(tmp_path))
        run_pipeline(cfg)
        bounds = json.loads((cfg.out_dir / "reports/bounds.json").read_text())
        claim = next(k for k in bounds if "stable-near" in k)
        rep = bounds[claim]
        csv_path = cfg.out_dir / "plots" / "claim_stable_0.5-near.csv"
        rows = csv_path.read_text().splitlines()[1:]
        ratios = [float(r.split(",")[4]) for r in rows]
        assert min(ratios) >= rep["min_ratio"] - 1e-12
        assert max(ratios) <= rep["max_ratio"] + 1e-12


class TestEmitPlotData:
    def test_empty_reports_empty_list(self, tmp_path):
        assert emit_plot_data({}, tmp_path / "plots") == []
        assert not (tmp_path / "plots").exists()

    def test_row_count_contract(self, tmp_path):
        rows = [(0.1 * (i + 1), 0.5, 1.0, 2.0, 0.5) for i in range(12) for _ in range(50)]
        files = emit_plot_data({"demo-claim": rows}, tmp_path / "plots")
        csv_files = [f for f in files if f.suffix == ".csv"]
        assert len(csv_files) == 1
        lines = csv_files[0].read_text().splitlines()
        assert len(lines) == 601  # header + 600 data rows
        script = [f for f in files if f.suffix == ".gp"]
        assert script and "plot" in script[0].read_text()


class TestCli:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "fractalheat", *args],
            capture_output=True,
            text=True,
        )

    def test_validate_fractal_ok(self):
        proc = self._run("validate-fractal", "--config", str(CONFIGS / "gasket.ini"))
        assert proc.returncode == 0
        assert "nesting: pass" in proc.stdout

    def test_validate_fractal_accepts_run_config(self, tmp_path):
        cfg = _quick_config(tmp_path)
        proc = self._run("validate-fractal", "--config", str(cfg))
        assert proc.returncode == 0
        assert "connectivity: pass" in proc.stdout

    def test_stage_flag_limits_outputs(self, tmp_path):
        cfg = _quick_config(tmp_path)
        proc = self._run(
            "report", "--config", str(cfg), "--out", str(tmp_path / "s"),
            "--stage", "spectral",
        )
        assert proc.returncode == 0
        names = {p.name for p in (tmp_path / "s").rglob("*") if p.is_file()}
        assert any(n.startswith("heat_") for n in names)
        assert "bounds.json" not in names

    def test_full_report_run(self, tmp_path):
        cfg = _quick_config(tmp_path)
        proc = self._run("report", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "o" / "manifest.json").exists()

    def test_bad_depth_rejected_before_compute(self, tmp_path):
        cfg = _quick_config(tmp_path, n="9")
        proc = self._run("report", "--config", str(cfg))
        assert proc.returncode == 2
        assert "configuration error" in proc.stderr

    def test_claim_failure_exit_code(self, tmp_path):
        cfg = _quick_config(tmp_path, spread="1.01")
        proc = self._run(
            "verify-bounds", "--config", str(cfg), "--out", str(tmp_path / "f")
        )
        assert proc.returncode == 1
        assert "FAILED" in proc.stderr or "FAIL" in proc.stderr

    def test_threads_do_not_change_bytes(self, tmp_path):
        cfg = _quick_config(tmp_path)
        a = self._run("report", "--config", str(cfg), "--out", str(tmp_path / "t1"),
                      "--threads", "1")
        b = self._run("report", "--config", str(cfg), "--out", str(tmp_path / "t2"),
                      "--threads", "2")
        assert a.returncode == 0 and b.returncode == 0
        assert _tracked_files(tmp_path / "t1") == _tracked_files(tmp_path / "t2")
        man_a = json.loads((tmp_path / "t1" / "manifest.json").read_text())
        man_b = json.loads((tmp_path / "t2" / "manifest.json").read_text())
        assert man_a["inventory"] == man_b["inventory"]
