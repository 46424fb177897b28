"""
Acceptance: optimal attacks on the two-parameter linear model.

  closed_form_optimality      exact attacks are never beaten by the brute-force
                              oracle by more than 1e-3 and equal the dual-norm
                              loss to 1e-9 (100 seeded instances)
  l2_attack_ratio             the L2 attack map is (eps / theta_min)-Lipschitz on
                              {||theta|| >= theta_min} for (eps, theta_min) =
                              (0.6, 1) and (1, 2), within 1%
  l2_boundary_jacobian_norm   the boundary Jacobian at ||theta|| = 2 has
                              spectral norm eps / ||theta|| = 0.3 +/- 1e-6
  linf_straddle_witness       the L-inf attack jumps by 2 eps across theta_2 = 0,
                              so its ratio grows >= 9x per decade; zero inside
                              an orthant
"""

from __future__ import annotations

import pytest

from src.verification.checks import SUITES, run_check

ATTACK_CHECKS = SUITES["attacks"]


@pytest.mark.parametrize("name,check", ATTACK_CHECKS, ids=[n for n, _ in ATTACK_CHECKS])
@pytest.mark.parametrize("seed", [0, 1])
def test_attack_check_passes(name, check, seed):
    result = run_check(name, "attacks", check, seed)
    assert result.passed, f"{name}: measured {result.measured} vs bound {result.bound} ({result.detail})"

