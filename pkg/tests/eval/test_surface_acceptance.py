"""
Acceptance: reference surfaces of the two-parameter model.

At 81 x 81 over [-2, 2]^2 the slope-jump detector must flag exactly
theta = 0 on the L2 adversarial surface, exactly the two axes on the L-inf
one, and nothing on the clean surface or either entropy surface. The
`surface` subcommand run on the shipped configuration must export the six
raw and two entropy grids.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from main import main
from src.cli.commands import EXIT_OK
from src.verification.checks import SUITES, run_check

SURFACE_CHECKS = SUITES["surface"]
CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("name,check", SURFACE_CHECKS, ids=[n for n, _ in SURFACE_CHECKS])
def test_surface_check_passes(name, check):
    result = run_check(name, "surface", check, 0)
    assert result.passed, f"{name}: {result.detail}"


def test_reference_job_exports_every_surface(tmp_path):
    out = tmp_path / "reference"
    assert main(["surface", "--config", str(CONFIG_DIR / "reference_surfaces.json"), "--out", str(out)]) == EXIT_OK
    grids = sorted(p.name for p in out.glob("*.csv"))
    assert len(grids) == 8
    assert len([g for g in grids if g.endswith("_entropy.csv")]) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["artifacts"]) == 16

    for stem, want_marks in (("linear_logistic_clean", 0), ("linear_logistic_adv_l2", 1)):
        sidecar = json.loads((out / f"{stem}.meta.json").read_text())
        assert len(sidecar["discontinuities"]) == want_marks
