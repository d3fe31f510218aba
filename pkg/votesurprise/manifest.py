"""Run manifests: the effective parameters, seed and version behind an output."""

from dataclasses import dataclass, field
import hashlib
from importlib.metadata import PackageNotFoundError, version
import json
import logging
from pathlib import Path
from typing import Any

from awesomeversion import AwesomeVersion

from .errors import InvalidInput
from .util import dump_json, load_json, to_jsonable

LOGGER = logging.getLogger(__package__).getChild("manifest")

MANIFEST_FILE = "manifest.json"


def package_version() -> str:
    """Return the installed version of votesurprise."""
    try:
        return version("votesurprise")
    except PackageNotFoundError:
        return "0.0.0"


def config_hash(parameters: dict[str, Any]) -> str:
    """Return a short stable hash of a parameter object."""
    text = json.dumps(to_jsonable(parameters), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def check_version(made_with: str, current: str | None = None) -> bool:
    """Check if the running version is equal to (or higher than) the given version."""
    return AwesomeVersion(current or package_version()) >= AwesomeVersion(made_with)


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to rerun a command; thread count is left out on purpose."""

    command: str
    master_seed: int
    parameters: dict[str, Any]
    outputs: tuple[str, ...] = ()
    version: str = field(default_factory=package_version)

    @property
    def config_hash(self) -> str:
        """Return the hash of the parameters."""
        return config_hash(self.parameters)

    def write(self, directory: Path) -> Path:
        """Write manifest.json into directory."""
        path = Path(directory) / MANIFEST_FILE
        dump_json(
            {
                "command": self.command,
                "master_seed": self.master_seed,
                "parameters": self.parameters,
                "outputs": list(self.outputs),
                "version": self.version,
                "config_hash": self.config_hash,
            },
            path,
        )
        return path

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        """Load a manifest, warning when a newer votesurprise wrote it."""
        raw = load_json(path)
        try:
            manifest = cls(
                command=raw["command"],
                master_seed=int(raw["master_seed"]),
                parameters=dict(raw["parameters"]),
                outputs=tuple(raw.get("outputs", ())),
                version=str(raw.get("version", "0.0.0")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"{path} is not a run manifest: {exc}") from exc
        if not check_version(manifest.version):
            LOGGER.warning(
                "%s was written by votesurprise %s, newer than %s",
                path,
                manifest.version,
                package_version(),
            )
        return manifest
