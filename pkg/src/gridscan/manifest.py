"""manifest.json read/write/verify for dataset and estimate directories."""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandera.pandas as pa

from .errors import IncompatibleDataError, MissingInputError

MANIFEST_NAME = "manifest.json"
_CHUNK = 1 << 20


def file_sha256(path: Union[str, Path]) -> str:
    """Hex SHA-256 of a file's bytes, read in 1 MiB chunks."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(_CHUNK), b""):
            digest.update(chunk)
    return digest.hexdigest()


def schema_md5(schema: pa.DataFrameSchema) -> str:
    """Fingerprint of a CSV layout: MD5 of the schema's YAML form."""
    text = schema.to_yaml()
    if text is None:
        raise IncompatibleDataError(f"schema {schema.name!r} has no YAML form")
    return hashlib.md5(text.encode()).hexdigest()


def _canonical(data: Dict[str, Any]) -> str:
    body = {k: v for k, v in data.items() if k != "manifest_md5"}
    return json.dumps(body, indent=2, sort_keys=True)


def _body_md5(data: Dict[str, Any]) -> str:
    return hashlib.md5(_canonical(data).encode()).hexdigest()


class Manifest:
    """Manages a directory's manifest.json.

    Each file entry records the SHA-256 of its content, the MD5 of the
    pandera schema it satisfies and its row count. Free-form run metadata
    (config echo, seeds, grid) lives alongside. ``manifest_md5`` covers the
    sorted JSON body; no timestamps are stored, so reruns are byte-identical.
    """

    def __init__(self, manifest_path: Union[str, Path] = MANIFEST_NAME):
        self.manifest_path = Path(manifest_path)
        self.data: Dict[str, Any] = {"files": {}}

    @classmethod
    def in_directory(cls, directory: Union[str, Path]) -> "Manifest":
        return cls(Path(directory) / MANIFEST_NAME)

    @property
    def directory(self) -> Path:
        return self.manifest_path.parent

    def load(self, required: bool = True) -> None:
        """Load the manifest from disk.

        Raises:
            MissingInputError: ``required`` and the file does not exist
        """
        if self.manifest_path.exists():
            with open(self.manifest_path, "r") as f:
                self.data = json.load(f)
            self.data.setdefault("files", {})
        elif required:
            raise MissingInputError(f"Manifest not found: {self.manifest_path}")
        else:
            self.data = {"files": {}}

    def save(self) -> None:
        """Save manifest to disk with computed manifest_md5."""
        self.data["manifest_md5"] = _body_md5(self.data)
        self.manifest_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.manifest_path, "w") as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
            f.write("\n")

    def add_file(self, name: str, schema: pa.DataFrameSchema, rows: int) -> None:
        """Record a file (relative to the manifest directory) with its hashes.

        Args:
            name: File name relative to the manifest directory
            schema: Schema the file was written to satisfy
            rows: Number of data rows
        """
        self.data["files"][name] = {
            "sha256": file_sha256(self.directory / name),
            "schema": schema.name,
            "schema_md5": schema_md5(schema),
            "rows": int(rows),
        }

    def get_file(self, name: str) -> Optional[Dict[str, Any]]:
        return self.data["files"].get(name)

    def has_file(self, name: str) -> bool:
        return name in self.data["files"]

    def get_all_files(self) -> Dict[str, Dict[str, Any]]:
        return self.data["files"]

    def set(self, key: str, value: Any) -> None:
        if key in ("files", "manifest_md5"):
            raise KeyError(f"{key} is managed by the manifest itself")
        self.data[key] = value

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    def verify_integrity(self) -> bool:
        """Verify manifest integrity by checking manifest_md5."""
        if "manifest_md5" not in self.data:
            return False
        return self.data["manifest_md5"] == _body_md5(self.data)

    def verify_files(self, names: Optional[list[str]] = None) -> None:
        """Check the manifest hash and the content hash of each listed file.

        Raises:
            MissingInputError: A recorded file is absent
            IncompatibleDataError: The manifest or a file was modified since it was written
        """
        if not self.verify_integrity():
            raise IncompatibleDataError(f"Manifest integrity check failed: {self.manifest_path}")
        for name in names if names is not None else sorted(self.data["files"]):
            entry = self.get_file(name)
            if entry is None:
                raise MissingInputError(f"{name} is not recorded in {self.manifest_path}")
            path = self.directory / name
            if not path.exists():
                raise MissingInputError(f"Data file not found: {path}")
            if file_sha256(path) != entry["sha256"]:
                raise IncompatibleDataError(f"{path} has been modified since it was written. SHA-256 mismatch.")
