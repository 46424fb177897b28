"""
Acceptance: `verify-lemmas` on the shipped default configuration exits 0
and records one passing result per check of the default suites.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from main import main
from src.cli.commands import EXIT_OK
from src.verification.checks import DEFAULT_SUITES, SUITES

CONFIG = Path(__file__).resolve().parents[2] / "configs" / "verify_default.json"


@pytest.mark.slow
def test_default_verification_passes(tmp_path):
    out = tmp_path / "verify"
    assert main(["verify-lemmas", "--config", str(CONFIG), "--out", str(out)]) == EXIT_OK
    results = json.loads((out / "checks.json").read_text())["results"]
    assert len(results) == sum(len(SUITES[s]) for s in DEFAULT_SUITES)
    assert all(r["passed"] for r in results)
