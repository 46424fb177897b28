"""
Colour-coded terminal tables for the lab's subcommands.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np

from src.models import CheckResult, EntropyEvaluation, ProbeReport, SurfaceGrid, TrainingRun

# ── ANSI colours ──────────────────────────────────────────────────────────────
GREEN  = "\033[92m"
RED    = "\033[91m"
YELLOW = "\033[93m"
CYAN   = "\033[96m"
BOLD   = "\033[1m"
DIM    = "\033[2m"
RESET  = "\033[0m"


# ── Printing helpers ──────────────────────────────────────────────────────────

def hr(char="─", width=80):
    print(DIM + char * width + RESET)


def print_header(text: str):
    print()
    print(BOLD + CYAN + "═" * 80 + RESET)
    print(BOLD + CYAN + f"  {text}" + RESET)
    print(BOLD + CYAN + "═" * 80 + RESET)


def _vec(values: np.ndarray | Sequence[float] | None, digits: int = 6) -> str:
    if values is None:
        return "-"
    return "[" + ", ".join(f"{v:.{digits}g}" for v in np.ravel(values)) + "]"


# ── verify-lemmas ─────────────────────────────────────────────────────────────

def print_check_table(results: Sequence[CheckResult]) -> None:
    print_header(f"Smoothness Lab Verification  ({len(results)} checks)")
    suite = None
    for r in results:
        if r.suite != suite:
            suite = r.suite
            print()
            print(f"  {BOLD}{suite}{RESET}")
            hr()
        icon = f"{GREEN}✓ PASS{RESET}" if r.passed else f"{RED}✗ FAIL{RESET}"
        print(
            f"  {icon}  {r.name:<30} measured={r.measured:<12.4g} bound={r.bound:<10.4g}"
            f"{DIM} seed={r.seed} {r.seconds:.1f}s{RESET}"
        )
        if r.detail:
            print(f"          {DIM}{r.detail}{RESET}")

    # ── Summary ──
    print_header("Summary")
    passed = sum(1 for r in results if r.passed)
    total = len(results)
    color = GREEN if passed == total else RED
    print(f"  Checks passed: {color}{BOLD}{passed}/{total}{RESET}\n")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"  {RED}Failed checks:{RESET}")
        for r in failed:
            print(f"    {RED}✗{RESET}  {r.suite}/{r.name}" + (f"  [{r.detail[:60]}]" if r.detail else ""))
        print()


# ── surface ───────────────────────────────────────────────────────────────────

def print_surface_summary(grids: Sequence[tuple[SurfaceGrid, Path]]) -> None:
    print_header(f"Loss Surfaces  ({len(grids)} grids)")
    for grid, path in grids:
        flags = len(grid.discontinuities)
        color = YELLOW if flags else GREEN
        lo, hi = float(grid.values.min()), float(grid.values.max())
        print(
            f"  {grid.spec.label:<28} {color}{flags:>5} slope jumps{RESET}  "
            f"range=[{lo:.4g}, {hi:.4g}]  {DIM}{path.name}{RESET}"
        )
    print()


# ── probe ─────────────────────────────────────────────────────────────────────

def print_probe_report(report: ProbeReport) -> None:
    print_header("Smoothness Constants (empirical sup)")
    rows = [
        ("C_theta", report.c_theta),
        ("C_theta_theta", report.c_theta_theta),
        ("C_theta_x", report.c_theta_x),
        ("curvature c", report.curvature_c),
        ("sigma_1", report.sigma1),
        ("eps-sharpness", report.eps_sharpness),
    ]
    for name, value in rows:
        shown = f"{CYAN}{value:.6g}{RESET}" if value is not None else f"{DIM}-{RESET}"
        print(f"  {name:<16} {shown}")
    counts = ", ".join(f"{k}={v}" for k, v in report.sample_counts.items())
    print(f"\n  {DIM}seed={report.seed}  input_radius={report.input_radius}  {counts}{RESET}\n")


# ── entropy ───────────────────────────────────────────────────────────────────

def print_entropy_table(evaluations: Sequence[EntropyEvaluation], gamma: float) -> None:
    print_header(f"Local Entropy  (gamma = {gamma:g}, {len(evaluations)} points)")
    for ev in evaluations:
        sigma1 = float(np.linalg.norm(ev.hessian, 2)) if ev.hessian is not None else float("nan")
        print(f"  {BOLD}theta{RESET} {_vec(ev.theta)}")
        print(f"    -F        {CYAN}{ev.value:.10g}{RESET}")
        print(f"    -grad F   {_vec(ev.gradient, 8)}")
        print(f"    E[theta'] {_vec(ev.mean, 8)}")
        print(f"    sigma_1   {sigma1:.6g}  {DIM}(Hessian {_vec(ev.hessian, 6)}){RESET}")
        hr()


# ── train ─────────────────────────────────────────────────────────────────────

def print_training_summary(run: TrainingRun) -> None:
    cfg = run.config
    print_header(f"Training  {cfg.name}  ({cfg.optimizer.value}{' + AWP' if cfg.awp else ''})")
    if run.records:
        first, last = run.records[0], run.records[-1]
        ratio = last.train_robust_loss / first.train_robust_loss if first.train_robust_loss else float("nan")
        color = GREEN if ratio <= 0.5 else YELLOW
        print(f"  Epochs run         : {len(run.records)}/{cfg.epochs}")
        print(f"  Train robust loss  : {first.train_robust_loss:.5f} -> {last.train_robust_loss:.5f}  "
              f"{color}(x{ratio:.3f}){RESET}")
        print(f"  Test robust acc    : {last.test_robust_accuracy:.1%}")
        print(f"  Test clean acc     : {last.test_clean_accuracy:.1%}")
    if run.best is not None:
        print(f"  Best checkpoint    : epoch {run.best.epoch}  {DIM}({cfg.early_stopping.value}){RESET}")
    if run.aborted is not None:
        print(f"\n  {RED}Aborted at epoch {run.aborted.epoch}, batch {run.aborted.batch_id}: "
              f"{run.aborted.message}{RESET}")
    print()
