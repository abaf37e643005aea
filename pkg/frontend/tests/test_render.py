"""Secondary-component tests: render the four preset outputs produced by the
mppgeo command line (the primary is driven only through its CLI and files)."""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from plotkit import FigureSpec, SchemaMismatch, render


def run_mppgeo(workdir: Path, command: str, preset: str, out: str, *extra):
    args = [sys.executable, "-m", "mppgeo", command, "--config", preset,
            "--out", out, *extra]
    proc = subprocess.run(args, cwd=workdir, capture_output=True, text=True,
                          timeout=400)
    assert proc.returncode == 0, proc.stderr
    return workdir / f"{out}.traj.json"


@pytest.fixture(scope="module")
def preset_outputs(tmp_path_factory):
    work = tmp_path_factory.mktemp("runs")
    files = {
        "so3-ivp": run_mppgeo(work, "so3-ivp", "fig1-ivp", "ivp",
                              "--steps", "200"),
        "so3-bvp": run_mppgeo(work, "so3-bvp", "fig1-bvp", "bvp",
                              "--steps", "200"),
        "sphere-bvp": run_mppgeo(work, "sphere-bvp", "fig2-sphere", "sph",
                                 "--steps", "300"),
        "landmarks-bvp": run_mppgeo(work, "landmarks-bvp", "fig3-grid", "lmk",
                                    "--steps", "250"),
    }
    return work, files


def checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_all_four_presets_render(preset_outputs, tmp_path):
    work, files = preset_outputs
    sums = {k: checksum(p) for k, p in files.items()}

    r1 = render(FigureSpec(inputs=[files["so3-ivp"]], kind="so3-frames",
                           out=str(tmp_path / "ivp"), style={"frames": 6}))
    assert r1.frames == 6
    assert all(Path(f).exists() for f in r1.files)

    r2 = render(FigureSpec(inputs=[files["so3-bvp"]], kind="so3-frames",
                           out=str(tmp_path / "bvp"), style={"frames": 4}))
    assert len(r2.files) == 4

    r3 = render(FigureSpec(inputs=[files["sphere-bvp"]], kind="sphere",
                           out=str(tmp_path / "sphere")))
    assert Path(r3.files[0]).exists()
    assert r3.meta["quiver_points"] > 0

    r4 = render(FigureSpec(inputs=[files["landmarks-bvp"]], kind="landmarks",
                           out=str(tmp_path / "landmarks")))
    assert Path(r4.files[0]).exists()
    # 7x7 grid: 49 field-center dots, matching the config echo
    doc = json.loads(files["landmarks-bvp"].read_text())
    grid_cfg = doc["config"]["fields"]["grid"]
    assert r4.field_dots == grid_cfg["nx"] * grid_cfg["ny"] == 49

    # rendering is read-only
    assert {k: checksum(p) for k, p in files.items()} == sums
    print("PASS criterion 12: four presets rendered; field dots "
          f"{r4.field_dots}")


def test_single_state_trajectory_single_frame(tmp_path):
    doc = {
        "schema": "mppgeo.trajectory.v1",
        "t": [0.0],
        "state": {"gamma": [[1, 0, 0, 0, 1, 0, 0, 0, 1]]},
    }
    f = tmp_path / "single.traj.json"
    f.write_text(json.dumps(doc))
    result = render(FigureSpec(inputs=[f], kind="so3-frames",
                               out=str(tmp_path / "single")))
    assert result.frames == 1


def test_schema_mismatch_reports_file_and_path(tmp_path):
    f = tmp_path / "bad.traj.json"
    f.write_text(json.dumps({"schema": "mppgeo.trajectory.v1", "t": [0.0],
                             "state": {}}))
    with pytest.raises(SchemaMismatch) as exc:
        render(FigureSpec(inputs=[f], kind="so3-frames", out=str(tmp_path / "x")))
    assert "bad.traj.json" in str(exc.value)
    assert "state/gamma" in str(exc.value)


def test_endpoints_render(tmp_path):
    work = tmp_path
    proc = subprocess.run(
        [sys.executable, "-m", "mppgeo", "simulate", "--config", "flat-simulate",
         "--out", "sam", "--steps", "40"],
        cwd=work, capture_output=True, text=True, timeout=200)
    assert proc.returncode == 0, proc.stderr
    result = render(FigureSpec(inputs=[work / "sam.samples.json"],
                               kind="endpoints", out=str(tmp_path / "cloud")))
    assert result.meta["samples"] == 10000
    assert Path(result.files[0]).exists()
