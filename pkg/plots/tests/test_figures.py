"""Figure rendering over real artifacts produced by the primary CLI."""

import hashlib
import json
import shutil
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from sharpwave_plot.cli import main as plot_main
from sharpwave_plot.figures import KINDS, FigureSpec, MissingArtifact, render

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="session")
def fisher_artifacts(tmp_path_factory):
    """Generate wave artifacts by invoking the primary CLI (the external
    interface this package consumes)."""
    root = tmp_path_factory.mktemp("fisher_run")
    env_src = subprocess.run(
        [sys.executable, "-c",
         "from sharpwave.fixtures import fixture_path; print(fixture_path('fisher'))"],
        capture_output=True, text=True, check=True,
    ).stdout.strip()
    shutil.copy(env_src, root / "fisher.json")
    out = root / "out"
    cfg = root / "run.json"
    cfg.write_text(json.dumps({
        "environment": "fisher.json",
        "solver": {"dx": 1.0 / 64},
        "renorm": {"n_max": 12, "window": [-6.0, 2.0]},
        "out": str(out),
    }))
    res = subprocess.run(
        [sys.executable, "-m", "sharpwave.cli", "wave", "--config", str(cfg)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stdout + res.stderr
    return out


class TestRender:
    @pytest.mark.parametrize("kind", KINDS)
    def test_all_kinds_render(self, fisher_artifacts, tmp_path, kind):
        out = render(FigureSpec(run_dir=fisher_artifacts, kind=kind, out=tmp_path / f"{kind}.png"))
        data = out.read_bytes()
        assert data[:8] == PNG_MAGIC
        assert len(data) > 4000

    def test_speed_overlay_gap(self, fisher_artifacts):
        # the two curves the trajectory figure overlays must agree to 5%
        df = pd.read_csv(fisher_artifacts / "trajectory.csv")
        t, b, slope = (df[c].to_numpy() for c in ("t", "b", "slope"))
        fd = np.gradient(b, t)
        sel = slice(20, -20)  # interior samples, away from start-up
        rel = np.abs(fd[sel] - slope[sel]) / np.abs(slope[sel]).max()
        assert rel.max() <= 0.05

    def test_deterministic(self, fisher_artifacts, tmp_path):
        a = render(FigureSpec(run_dir=fisher_artifacts, kind="profile", out=tmp_path / "a.png"))
        b = render(FigureSpec(run_dir=fisher_artifacts, kind="profile", out=tmp_path / "b.png"))
        assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()

    def test_read_only(self, fisher_artifacts, tmp_path):
        before = sorted(p.name for p in fisher_artifacts.iterdir())
        render(FigureSpec(run_dir=fisher_artifacts, kind="heatmap", out=tmp_path / "h.png"))
        assert sorted(p.name for p in fisher_artifacts.iterdir()) == before

    def test_missing_column_fails(self, fisher_artifacts, tmp_path):
        broken = tmp_path / "broken"
        broken.mkdir()
        (broken / "profile.csv").write_text("x,V\n0,1\n")
        with pytest.raises(MissingArtifact, match="lacks columns"):
            render(FigureSpec(run_dir=broken, kind="profile", out=tmp_path / "x.png"))

    def test_bad_kind_rejected(self, fisher_artifacts, tmp_path):
        with pytest.raises(ValueError):
            FigureSpec(run_dir=fisher_artifacts, kind="sparkline", out=tmp_path / "x.png")


class TestCli:
    def test_all_kinds(self, fisher_artifacts, tmp_path):
        code = plot_main(["--run", str(fisher_artifacts), "--kind", "all", "--out", str(tmp_path)])
        assert code == 0
        for kind in KINDS:
            assert (tmp_path / f"{kind}.png").read_bytes()[:8] == PNG_MAGIC

    def test_missing_run_dir(self, tmp_path):
        assert plot_main(["--run", str(tmp_path / "ghost"), "--kind", "profile",
                          "--out", str(tmp_path / "x.png")]) == 2

    def test_missing_artifact_exit1(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert plot_main(["--run", str(empty), "--kind", "heatmap",
                          "--out", str(tmp_path / "x.png")]) == 1
