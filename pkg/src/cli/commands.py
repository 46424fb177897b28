"""
Subcommands of the `smoothness-lab` command line.

    surface        SurfaceJob     -> one CSV/JSON grid per requested surface
                                     (+ filter-normalized slices)
    probe          ProbeJob       -> probe_report.json
    entropy        EntropyJob     -> entropy.json (-F, gradient, Hessian per theta)
    train          ExperimentConfig -> metrics.jsonl, checkpoint.json, run.json
    verify-lemmas  VerifyJob      -> checks.json + pass/fail table

Every successful or failed-but-finished run writes manifest.json into its
output directory (config echo, seeds, sha256 of every artifact).

Exit codes
    0  success (for verify-lemmas: every requested check passed)
    2  config missing or invalid, unknown subcommand
    3  numerical failure, failed check or aborted training
"""

from __future__ import annotations

import argparse
from collections.abc import Callable
from pathlib import Path

import numpy as np
import structlog
from pydantic import BaseModel, ValidationError

from src.cli import report
from src.cli.schemas import (
    EntropyJob,
    ProbeJob,
    SurfaceJob,
    VerifyJob,
    load_job,
)
from src.config import settings
from src.entropy.quadrature import local_entropy_exact
from src.exceptions import ConfigError, LabError, TrainingAbortedError
from src.model_core.factory import make_model
from src.models import ExperimentConfig, GridSpec
from src.probes.assumption import estimate_assumption1_constants
from src.probes.implicit import interior_optimum_check
from src.probes.oracle import argmax_oracle
from src.probes.sharpness import epsilon_sharpness
from src.surface.export import export_grid, sidecar_path
from src.surface.filter_norm import DEFAULT_ALPHAS, filter_normalized_slice
from src.surface.losses import SurfaceLoss, default_surface_pgd
from src.surface.sampler import sample_entropy_surface, sample_surface
from src.training.harness import adversarial_train
from src.training.persistence import MetricsWriter, write_json, write_manifest
from src.verification.checks import run_suites

log = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3

SUBCOMMANDS = ("surface", "probe", "entropy", "train", "verify-lemmas")

Handler = Callable[[argparse.Namespace, Path], int]


class LabArgumentParser(argparse.ArgumentParser):
    """Turns argparse usage errors into ConfigError instead of exiting."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> LabArgumentParser:
    common = LabArgumentParser(add_help=False)
    common.add_argument("-c", "--config", default=None, help="Path to the JSON job document")
    common.add_argument("-o", "--out", default=None, help="Output directory (default: <output_dir>/<subcommand>)")
    common.add_argument("--seed", type=int, default=None, help="Override the job's master seed")
    common.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")

    parser = LabArgumentParser(
        prog="smoothness-lab",
        description="Desk-scale probes of adversarial-training loss smoothness and EntropySGD",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.add_parser("surface", parents=[common], help="Export 2-D loss and -F surfaces")
    sub.add_parser("probe", parents=[common], help="Estimate smoothness constants on a region")
    sub.add_parser("entropy", parents=[common], help="Print -F, its gradient and Hessian at listed thetas")
    sub.add_parser("train", parents=[common], help="Run desk-scale adversarial training")
    sub.add_parser("verify-lemmas", parents=[common], help="Run the numerical check suites")
    return parser


def _with_seed(job: BaseModel, seed: int | None) -> BaseModel:
    return job if seed is None else job.model_copy(update={"seed": seed})


def _artifacts_with_sidecars(paths: list[Path]) -> list[Path]:
    out = []
    for path in paths:
        out.append(path)
        if path.suffix == ".csv" and sidecar_path(path).exists():
            out.append(sidecar_path(path))
    return out


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------


def cmd_surface(args: argparse.Namespace, out_dir: Path) -> int:
    job: SurfaceJob = _with_seed(load_job(args.config, SurfaceJob), args.seed)
    dataset = job.data.load()
    pgd = job.pgd or default_surface_pgd(job.epsilon, job.seed)

    exported = []
    written: list[Path] = []
    for request in job.surfaces:
        model = make_model(request.model)
        if model.param_dim != 2:
            raise ConfigError(f"surface {request.stem}: a 2-D grid needs param_dim 2, got {model.param_dim}")
        if model.input_dim != dataset.input_dim:
            raise ConfigError(f"surface {request.stem}: model.input_dim != data dimension {dataset.input_dim}")
        lossfn = SurfaceLoss(model, dataset.inputs, dataset.labels, request.variant, job.epsilon, pgd)
        spec = GridSpec(
            theta1_range=job.theta1_range,
            theta2_range=job.theta2_range,
            resolution=job.resolution,
            variant=request.variant,
            entropy=request.entropy,
        )
        meta = {"model": request.model.kind.value, "seed": job.seed}
        if request.entropy:
            grid = sample_entropy_surface(lossfn, spec, request.gamma, job.quadrature, metadata=meta)
        else:
            grid = sample_surface(lossfn, spec, metadata=meta)
        path = export_grid(grid, out_dir / f"{request.stem}.{job.format}", job.format)
        exported.append((grid, path))
        written.append(path)

    for k, request in enumerate(job.slices):
        model = make_model(request.model, request.init_seed)
        if model.input_dim != dataset.input_dim:
            raise ConfigError(f"slice {k}: model.input_dim != data dimension {dataset.input_dim}")
        theta_star = np.asarray(request.theta_star) if request.theta_star is not None else model.theta0
        if theta_star.size != model.param_dim:
            raise ConfigError(f"slice {k}: theta_star has {theta_star.size} entries, model needs {model.param_dim}")
        curves = filter_normalized_slice(
            model, theta_star, (dataset.inputs, dataset.labels), request.ball, request.pgd,
            request.n_directions, request.alphas or DEFAULT_ALPHAS, seed=job.seed + k,
        )
        written.append(write_json(
            {"model": request.model.model_dump(mode="json"), "curves": [c.model_dump() for c in curves]},
            out_dir / f"slice_{k}.json",
        ))

    report.print_surface_summary(exported)
    write_manifest(out_dir, "surface", job, {"seed": job.seed, "pgd_seed": pgd.seed},
                   _artifacts_with_sidecars(written))
    return EXIT_OK


# ---------------------------------------------------------------------------
# probe
# ---------------------------------------------------------------------------


def cmd_probe(args: argparse.Namespace, out_dir: Path) -> int:
    job: ProbeJob = _with_seed(load_job(args.config, ProbeJob), args.seed)
    model = make_model(job.model, job.init_seed)
    dataset = job.data.load()
    if dataset.input_dim != model.input_dim:
        raise ConfigError(f"data dimension {dataset.input_dim} != model.input_dim {model.input_dim}")
    if job.region.dim != model.param_dim:
        raise ConfigError(f"region dimension {job.region.dim} != model.param_dim {model.param_dim}")
    for name in ("curvature", "sharpness"):
        request = getattr(job, name)
        if request is not None and len(request.theta) != model.param_dim:
            raise ConfigError(
                f"{name}.theta has {len(request.theta)} entries, model.param_dim is {model.param_dim}"
            )

    probe =estimate_assumption1_constants(
        model, job.region, dataset, job.n_pairs, job.seed, job.input_radius
    )
    updates: dict[str, float] = {}
    artifacts = []
    if job.curvature is not None:
        req = job.curvature
        if req.example >= len(dataset):
            raise ConfigError(f"curvature.example {req.example} out of range for {len(dataset)} examples")
        theta = np.asarray(req.theta, dtype=np.float64)
        x, y = dataset.inputs[req.example], float(dataset.labels[req.example])
        attack = argmax_oracle(model, theta, x, y, req.ball, seed=job.seed)
        updates["curvature_c"] = interior_optimum_check(model, theta, x, attack.x_prime, y, req.ball).c
    if job.sharpness is not None:
        req = job.sharpness
        X, y = dataset.inputs, dataset.labels
        estimate = epsilon_sharpness(
            lambda t: model.mean_loss_and_grad(t, X, y)[0],
            np.asarray(req.theta, dtype=np.float64),
            req.radius,
            req.restarts,
            seed=job.seed,
            grad_fn=lambda t: model.mean_loss_and_grad(t, X, y)[1],
        )
        updates["sigma1"] = estimate.spectral_norm
        updates["eps_sharpness"] = estimate.exact
        artifacts.append(write_json(estimate, out_dir / "sharpness.json"))
    probe = probe.model_copy(update=updates)

    artifacts.insert(0, write_json(probe, out_dir / "probe_report.json"))
    report.print_probe_report(probe)
    write_manifest(out_dir, "probe", job, {"seed": job.seed, "init_seed": job.init_seed}, artifacts)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def _quadratic(nodes: np.ndarray) -> np.ndarray:
    return 0.5 * np.sum(nodes**2, axis=1)


def cmd_entropy(args: argparse.Namespace, out_dir: Path) -> int:
    job: EntropyJob = _with_seed(load_job(args.config, EntropyJob), args.seed)
    thetas = job.theta_array()
    if job.objective == "quadratic":
        lossfn = _quadratic
    else:
        model = make_model(job.model)
        dataset = job.data.load()
        if thetas.shape[1] != model.param_dim:
            raise ConfigError(f"thetas have {thetas.shape[1]} entries, model needs {model.param_dim}")
        pgd = job.pgd or default_surface_pgd(job.epsilon, job.seed)
        lossfn = SurfaceLoss(model, dataset.inputs, dataset.labels, job.variant, job.epsilon, pgd)

    evaluations = [local_entropy_exact(lossfn, theta, job.gamma, job.quadrature) for theta in thetas]
    path = write_json(
        {"gamma": job.gamma, "evaluations": [ev.model_dump(mode="json") for ev in evaluations]},
        out_dir / "entropy.json",
    )
    report.print_entropy_table(evaluations, job.gamma)
    write_manifest(out_dir, "entropy", job, {"seed": job.seed}, [path])
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def cmd_train(args: argparse.Namespace, out_dir: Path) -> int:
    config: ExperimentConfig = _with_seed(load_job(args.config, ExperimentConfig), args.seed)
    writer = MetricsWriter(out_dir / "metrics.jsonl")
    run = adversarial_train(config, on_epoch=writer)

    artifacts = [writer.path]
    if run.best is not None:
        artifacts.append(write_json(run.best, out_dir / "checkpoint.json"))
    artifacts.append(write_json(run, out_dir / "run.json"))
    report.print_training_summary(run)
    seeds = {"seed": config.seed, "init_seed": config.init_seed, "dataset_seed": config.dataset.seed}
    status = "ok" if run.completed else "aborted"
    write_manifest(out_dir, "train", config, seeds, artifacts, status=status)
    if not run.completed:
        raise TrainingAbortedError(
            f"epoch {run.aborted.epoch}, batch {run.aborted.batch_id}: {run.aborted.message}", run.aborted
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-lemmas
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace, out_dir: Path) -> int:
    job = load_job(args.config, VerifyJob) if args.config else VerifyJob()
    job = _with_seed(job, args.seed)
    results = run_suites(job.suites, job.seed, job.only)
    if not results:
        raise ConfigError(f"no checks selected by only={job.only}")

    path = write_json({"results": [r.model_dump() for r in results]}, out_dir / "checks.json")
    report.print_check_table(results)
    passed = all(r.passed for r in results)
    write_manifest(out_dir, "verify-lemmas", job, {"seed": job.seed}, [path],
                   status="ok" if passed else "failed")
    return EXIT_OK if passed else EXIT_FAILURE


HANDLERS: dict[str, Handler] = {
    "surface": cmd_surface,
    "probe": cmd_probe,
    "entropy": cmd_entropy,
    "train": cmd_train,
    "verify-lemmas": cmd_verify,
}


def _field_errors(exc: ValidationError) -> list[str]:
    return [f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()]


def dispatch(args: argparse.Namespace) -> int:
    """Run the parsed subcommand and map failures to exit codes."""
    handler = HANDLERS[args.command]
    out_dir = Path(args.out) if args.out else Path(settings.output_dir) / args.command

    structlog.contextvars.bind_contextvars(command=args.command)
    try:
        return handler(args, out_dir)
    except ValidationError as exc:
        print(f"{report.RED}Invalid config for {args.command}:{report.RESET}")
        for line in _field_errors(exc):
            print(f"  {report.RED}✗{report.RESET}  {line}")
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"{report.RED}Config error: {exc}{report.RESET}")
        return EXIT_CONFIG
    except LabError as exc:
        log.error("command_failed", error_type=type(exc).__name__, error=str(exc))
        print(f"{report.RED}{args.command} failed: {type(exc).__name__}: {exc}{report.RESET}")
        return EXIT_FAILURE
    finally:
        structlog.contextvars.unbind_contextvars("command")
