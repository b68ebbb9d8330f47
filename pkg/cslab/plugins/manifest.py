"""
Lists every file a run wrote in `manifest.json`, with its xxhash64 content
hash, alongside the config hash, the versions in use and the time spent in
each stage.

The manifest is the one output whose content changes between two runs of
the same config.
"""

import json
import platform
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import numpy as np
import pydantic
import scipy
import xxhash

from cslab.__about__ import __version__
from cslab.hookspec import hook_impl

if TYPE_CHECKING:
    from cslab import Cslab


class ManifestEntry(pydantic.BaseModel):
    path: str
    xxhash64: str
    bytes: int


class Manifest(pydantic.BaseModel):
    targets: List[str]
    status: str
    config_hash: Optional[str] = None
    versions: Dict[str, str]
    timings: Dict[str, float]
    artifacts: List[ManifestEntry]


def file_hash(path: Path) -> str:
    return xxhash.xxh64(path.read_bytes()).hexdigest()


def versions() -> Dict[str, str]:
    return {
        "cslab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def config_hash(cslab: "Cslab") -> Optional[str]:
    config: Any = cslab.__dict__.get("config")
    if config is None:
        return None
    return cslab.make_hash(json.dumps(config.model_dump(mode="json"), sort_keys=True))


def write_manifest(cslab: "Cslab", output_dir: Path, status: str = "ok") -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for path in sorted(set(cslab.written)):
        if path.exists():
            name = path.relative_to(output_dir) if path.is_relative_to(output_dir) else path
            entries.append(
                ManifestEntry(
                    path=name.as_posix(),
                    xxhash64=file_hash(path),
                    bytes=path.stat().st_size,
                )
            )
    manifest = Manifest(
        targets=cslab.targets,
        status=status,
        config_hash=config_hash(cslab),
        versions=versions(),
        timings=cslab.timings,
        artifacts=entries,
    )
    path = output_dir / "manifest.json"
    path.write_text(manifest.model_dump_json(indent=2) + "\n")
    return path


@hook_impl(trylast=True)
def save(cslab: "Cslab") -> None:
    write_manifest(cslab, cslab.output_dir)
