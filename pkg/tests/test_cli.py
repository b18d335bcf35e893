"""End-to-end CLI exit codes and report artifacts."""

import json
import subprocess
import sys

import numpy as np
import pytest

from calwave import SpectralFunction, UniformGrid, mask_catalog, save_spectral


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "calwave.cli", *args],
        capture_output=True, text=True, env=env,
    )


def write_config(tmp_path, name="cfg.json", **overrides):
    cfg = {
        "version": "1",
        "group": {"name": "dilation1d_pos", "params": {}},
        "mask": {"name": "full", "params": {}, "null_guard": None},
        "grid": {"shape": [1024], "extent": [[-8.0, 8.0]]},
        "quadrature": {"resolution": [64]},
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_group_info_ok(tmp_path):
    out = tmp_path / "out"
    res = run_cli("group-info", "--group", "similitude2", "--out", str(out))
    assert res.returncode == 0, res.stderr
    payload = json.loads((out / "group_info.json").read_text())
    assert payload["group"] == "similitude2"
    assert payload["unimodular_G"] is False
    assert payload["modular_H_homomorphism_error"] < 1e-10


def test_group_info_unknown_group(tmp_path):
    res = run_cli("group-info", "--group", "nonsense",
                  "--out", str(tmp_path / "out"))
    assert res.returncode == 1
    assert "unknown group" in res.stderr


def test_bad_config_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    res = run_cli("classify", "--config", str(bad),
                  "--out", str(tmp_path / "out"))
    assert res.returncode == 1


def test_invalid_tolerance_rejected(tmp_path):
    cfg = write_config(tmp_path, tolerances={"admissible": -1.0})
    res = run_cli("classify", "--config", str(cfg),
                  "--out", str(tmp_path / "out"))
    assert res.returncode == 1
    assert "tolerance" in res.stderr


def test_classify_writes_report(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    res = run_cli("classify", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    report = json.loads((out / "calderon_report.json").read_text())
    assert report["verdict"] in ("admissible", "weakly_admissible")
    assert (out / "phi_samples.csv").exists()
    assert (out / "phi_samples.png").exists()


def test_classify_inconclusive_exit_2(tmp_path):
    # tiny grid against a wide scale range: heavy leakage, verdict withheld
    cfg = write_config(
        tmp_path,
        grid={"shape": [256], "extent": [[-1.0, 1.0]]},
    )
    res = run_cli("classify", "--config", str(cfg),
                  "--out", str(tmp_path / "out"))
    assert res.returncode == 2, res.stdout + res.stderr
    assert "inconclusive" in res.stdout


def test_synthesize_nonunimodular_branch(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    res = run_cli("synthesize", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    report = json.loads((out / "synthesis_report.json").read_text())
    assert report["branch"] == "nonunimodular"
    assert (out / "admissible_vector.cwsf").exists()
    assert (out / "admissible_vector.csv").exists()
    assert (out / "admissible_vector.png").exists()


def test_synthesize_rotation_full_plane_exit_3(tmp_path):
    cfg = write_config(
        tmp_path,
        group={"name": "rotation2", "params": {}},
        grid={"shape": [128, 128], "extent": [[-8.0, 8.0], [-8.0, 8.0]]},
        quadrature={"resolution": [128]},
    )
    out = tmp_path / "out"
    res = run_cli("synthesize", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 3, res.stdout + res.stderr
    assert "infinite" in res.stderr
    report = json.loads((out / "synthesis_report.json").read_text())
    assert report["orbit_space_mass"]["finite"] is False


def test_synthesize_not_weakly_admissible_exit_4(tmp_path):
    grid = UniformGrid.from_extent([128, 128], [[-4.0, 4.0], [-4.0, 4.0]])
    mask = mask_catalog("annulus", {"r1": 1.0, "r2": 2.0}, 0.125)

    def holey(pts):
        r = np.linalg.norm(np.atleast_2d(pts), axis=1)
        return np.where(r < 1.5, np.exp(-(((r - 1.2) / 0.2) ** 2)), 0.0)

    seed = SpectralFunction.from_callable(grid, holey, mask)
    seed_path = tmp_path / "seed.cwsf"
    save_spectral(seed_path, seed, kind="psi_hat")
    cfg = write_config(
        tmp_path,
        group={"name": "rotation2", "params": {}},
        mask={"name": "annulus", "params": {"r1": 1.0, "r2": 2.0},
              "null_guard": 0.125},
        grid={"shape": [128, 128], "extent": [[-4.0, 4.0], [-4.0, 4.0]]},
        quadrature={"resolution": [128]},
    )
    res = run_cli("synthesize", "--config", str(cfg),
                  "--seed-psi", str(seed_path),
                  "--out", str(tmp_path / "out"))
    assert res.returncode == 4, res.stdout + res.stderr
    assert "not weakly admissible" in res.stderr


def test_orbits_command(tmp_path):
    cfg = write_config(
        tmp_path,
        group={"name": "similitude2", "params": {}},
        grid={"shape": [64, 64], "extent": [[-4.0, 4.0], [-4.0, 4.0]]},
        quadrature={"resolution": [16, 8]},
    )
    out = tmp_path / "out"
    res = run_cli("orbits", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    payload = json.loads((out / "orbit_reports.json").read_text())
    assert payload["transversal"] == "point(1,0)"
    assert all(r["stabilizer_class"] == "trivial" for r in payload["orbits"])
    assert (out / "orbit_clouds.csv").exists()


def test_disintegrate_command(tmp_path):
    cfg = write_config(
        tmp_path,
        group={"name": "similitude2", "params": {}},
        grid={"shape": [64, 64], "extent": [[-4.0, 4.0], [-4.0, 4.0]]},
        quadrature={"resolution": [16, 8]},
    )
    out = tmp_path / "out"
    res = run_cli("disintegrate", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    payload = json.loads((out / "disintegration.json").read_text())
    assert payload["total_orbit_mass"] > 0
    assert "identity_check" in payload
    assert (out / "orbit_weights.csv").exists()


def test_roundtrip_command(tmp_path):
    cfg = write_config(
        tmp_path,
        mask={"name": "halfplane_strip",
              "params": {"lo": 0.25, "hi": 8.0, "two_sided": True},
              "null_guard": 0.05},
        grid={"shape": [1024], "extent": [[-8.0, 8.0]]},
        quadrature={"resolution": [256]},
        options={"seed_center": 1.5, "seed_width": 0.6},
    )
    out = tmp_path / "out"
    res = run_cli("roundtrip", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    metrics = json.loads((out / "roundtrip_metrics.json").read_text())
    assert metrics["rel_l2_error"] < 0.1
    assert (out / "roundtrip.png").exists()


def test_sl2z_demo_command(tmp_path):
    cfg = write_config(
        tmp_path,
        group={"name": "sl2z_demo", "params": {}},
        options={"entry_bound": 64, "sample_count": 20},
    )
    out = tmp_path / "out"
    res = run_cli("sl2z-demo", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    payload = json.loads((out / "sl2z_summary.json").read_text())
    assert payload["monotone"] is True
    assert (out / "sl2z_partial_sums.csv").exists()
    assert (out / "sl2z_partial_sums.png").exists()


def test_resolution_and_tol_overrides(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    res = run_cli("classify", "--config", str(cfg), "--out", str(out),
                  "--resolution", "32", "--tol", "0.5")
    assert res.returncode == 0, res.stderr
    report = json.loads((out / "calderon_report.json").read_text())
    assert report["tolerance_used"] == 0.5
    assert json.loads((out / "calderon_report.json").read_text())[
        "config"]["quadrature"]["resolution"] == [32]
