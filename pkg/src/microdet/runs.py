"""Run persistence: flat directory tree of run folders with JSON manifests.

Every CLI command materializes one run directory under the runs root; all
artifacts the command produces live inside it and are listed in its
manifest, so everything on disk is reachable from exactly one manifest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import platform
import secrets
import sys
from datetime import datetime, timezone
from pathlib import Path

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path, chunk: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        while True:
            block = fh.read(chunk)
            if not block:
                break
            digest.update(block)
    return digest.hexdigest()


def digest_input(path: str | Path) -> str:
    """Digest a file, or a directory as the hash of its (name, file hash) list."""
    p = Path(path)
    if p.is_file():
        return sha256_file(p)
    digest = hashlib.sha256()
    for child in sorted(p.rglob("*")):
        if child.is_file():
            digest.update(child.relative_to(p).as_posix().encode())
            digest.update(bytes.fromhex(sha256_file(child)))
    return digest.hexdigest()


def environment_fingerprint() -> dict:
    import numpy
    import torch

    return {
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "numpy": numpy.__version__,
        "torch": torch.__version__,
        "torch_threads": torch.get_num_threads(),
    }


@dataclasses.dataclass
class RunManifest:
    run_id: str
    command: str
    config: dict
    seeds: dict
    input_digests: dict
    started_at: str
    finished_at: str = ""
    artifacts: dict = dataclasses.field(default_factory=dict)
    metrics: dict = dataclasses.field(default_factory=dict)
    environment: dict = dataclasses.field(default_factory=environment_fingerprint)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class Run:
    """An in-progress run; call finish() to freeze the manifest."""

    def __init__(self, runs_root: str | Path, command: str, config: dict | None = None,
                 seeds: dict | None = None, inputs: dict | None = None):
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        self.run_id = f"{stamp}-{command}-{secrets.token_hex(3)}"
        self.path = Path(runs_root) / self.run_id
        self.path.mkdir(parents=True, exist_ok=False)
        self.manifest = RunManifest(
            run_id=self.run_id,
            command=command,
            config=config or {},
            seeds=seeds or {},
            input_digests={k: digest_input(v) for k, v in (inputs or {}).items()},
            started_at=datetime.now(timezone.utc).isoformat(),
        )

    def artifact_path(self, name: str, filename: str) -> Path:
        """Reserve an artifact slot inside the run directory."""
        path = self.path / filename
        self.manifest.artifacts[name] = str(path)
        return path

    def record_artifact(self, name: str, path: str | Path) -> None:
        """Reference an artifact written at an explicit external location."""
        self.manifest.artifacts[name] = str(Path(path).resolve())

    def finish(self, metrics: dict | None = None) -> Path:
        if metrics:
            self.manifest.metrics.update(metrics)
        self.manifest.finished_at = datetime.now(timezone.utc).isoformat()
        out = self.path / MANIFEST_NAME
        out.write_text(json.dumps(self.manifest.to_dict(), indent=2))
        return out


def list_runs(runs_root: str | Path) -> list[dict]:
    root = Path(runs_root)
    if not root.exists():
        return []
    manifests = []
    for manifest in sorted(root.glob(f"*/{MANIFEST_NAME}")):
        try:
            manifests.append(json.loads(manifest.read_text()))
        except json.JSONDecodeError:
            continue
    return manifests


def load_run(runs_root: str | Path, run_id: str) -> dict:
    path = Path(runs_root) / run_id / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no manifest for run {run_id!r} under {runs_root}")
    return json.loads(path.read_text())
