"""
Run artifacts on disk: JSONL metrics, checkpoint JSON and the manifest that
makes any output reproducible (config echo, seeds, artifact sha256).
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

UTC = timezone.utc

import structlog
from pydantic import BaseModel

from src.exceptions import ExportError

log = structlog.get_logger(__name__)


def canonical_json(payload: BaseModel | dict[str, Any]) -> str:
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: BaseModel | dict[str, Any]) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class MetricsWriter:
    """Appends one JSON line per record; usable as an epoch callback."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")
        except OSError as exc:
            raise ExportError(f"cannot create metrics file: {exc}", str(self.path)) from exc

    def __call__(self, record: BaseModel) -> None:
        try:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(record.model_dump_json() + "\n")
        except OSError as exc:
            raise ExportError(f"cannot append metrics: {exc}", str(self.path)) from exc


def write_json(payload: BaseModel | dict[str, Any], path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, default=str)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write {path.name}: {exc}", str(path)) from exc
    return path


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: BaseModel | dict[str, Any],
    seeds: dict[str, int],
    artifacts: list[Path],
    status: str = "ok",
) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "status": status,
        "created_at": datetime.now(UTC).isoformat(),
        "config": config.model_dump(mode="json") if isinstance(config, BaseModel) else config,
        "config_sha256": config_hash(config),
        "seeds": seeds,
        "artifacts": {
            str(p.relative_to(out_dir) if p.is_relative_to(out_dir) else p): file_sha256(p)
            for p in artifacts
        },
    }
    path = write_json(manifest, out_dir / "manifest.json")
    log.info("manifest_written", path=str(path), artifacts=len(artifacts))
    return path
