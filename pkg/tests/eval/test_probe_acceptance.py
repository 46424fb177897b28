"""
Acceptance: gradient-smoothness regions and implicit Jacobians.

The regularity constants are estimated on the reference point with input radius
0.6, then the adversarial-loss gradient ratio is compared with the bound it
implies (5% slack for the empirical suprema):

  l2_gradient_smoothness      {||theta|| >= 1}:  <= C_thth + 0.6 C_thx
  attack_composition_smoothness  {||theta|| >= 1}: <= C_thth + C C_thx, where C
                                 is the measured sup ratio of the L2 attack map
  linf_orthant_smoothness     positive orthant:  <= C_thth
  two_sided_gradient_bound    C_thth ||t1 - t2|| + 2 eps C_thx on every pair of
                              the full square, for both L2 and L-inf

Implicit Jacobians must agree with central differences of the argmax oracle
to relative error 1e-3: the swish model at theta = (1.5, -1.5) (interior
optimum, strictly inside the L-inf ball) and the linear model on the L2
sphere. Power iteration must match the dense Hessian norm to 1e-4.
"""

from __future__ import annotations

import pytest

from src.verification.checks import SUITES, run_check

PROBE_CHECKS = SUITES["probes"]


@pytest.mark.parametrize("name,check", PROBE_CHECKS, ids=[n for n, _ in PROBE_CHECKS])
def test_probe_check_passes(name, check):
    result = run_check(name, "probes", check, 0)
    assert result.passed, f"{name}: measured {result.measured} vs bound {result.bound} ({result.detail})"


def test_interior_case_reports_strict_interior():
    result = run_check("interior_implicit_jacobian", "probes", dict(PROBE_CHECKS)["interior_implicit_jacobian"], 0)
    assert "strictly_interior=True" in result.detail
