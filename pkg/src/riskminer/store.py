"""File-backed persistence: newline-delimited records, checksums, run manifests.

Record files are append-only JSON lines with a `<path>.sha256` sidecar updated
on every append. One writer per file, enforced with a lock file; sealed files
take unlimited concurrent readers.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Generic, Mapping, Sequence, TypeVar

from filelock import FileLock, Timeout

from .errors import ChecksumMismatch, ParseError, SchemaError, StoreError

T = TypeVar("T")

DEFAULT_LOCK_TIMEOUT = 10.0


class RecordSchema(Generic[T]):
    """Declared shape of one record type in a JSONL file."""

    def __init__(
        self,
        name: str,
        to_dict: Callable[[T], dict],
        from_dict: Callable[[Mapping], T],
        validate: Callable[[T], None] | None = None,
    ):
        self.name = name
        self._to_dict = to_dict
        self._from_dict = from_dict
        self._validate = validate

    def dumps(self, record: T) -> str:
        if self._validate is not None:
            self._validate(record)
        try:
            return json.dumps(self._to_dict(record), sort_keys=True, ensure_ascii=False)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{self.name}: record not serializable: {exc}") from exc

    def loads(self, line: str) -> T:
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{self.name}: invalid JSON: {exc}") from exc
        try:
            record = self._from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{self.name}: bad record: {exc}") from exc
        if self._validate is not None:
            self._validate(record)
        return record


def dataclass_schema(name: str, cls: type) -> RecordSchema:
    """Schema for a flat dataclass whose fields are all JSON-native."""
    def from_dict(data: Mapping):
        return cls(**{f.name: data[f.name] for f in dataclasses.fields(cls)})
    return RecordSchema(name, dataclasses.asdict, from_dict)


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _checksum_path(path: Path) -> Path:
    return path.with_name(path.name + ".sha256")


def write_checksum(path: str | Path) -> str:
    path = Path(path)
    digest = _file_sha256(path)
    _checksum_path(path).write_text(digest + "\n")
    return digest


def append_records(
    path: str | Path,
    records: Sequence[T],
    schema: RecordSchema[T],
    lock_timeout: float = DEFAULT_LOCK_TIMEOUT,
) -> int:
    """Append records to a JSONL file and refresh its checksum sidecar.

    All records are serialized (and so validated) before the file is touched:
    a schema violation leaves the file unchanged.
    """
    path = Path(path)
    lines = [schema.dumps(record) for record in records]
    path.parent.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(path) + ".lock")
    try:
        lock.acquire(timeout=lock_timeout)
    except Timeout as exc:
        raise StoreError(f"{path}: another writer holds the lock") from exc
    try:
        with open(path, "a", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        write_checksum(path)
    except OSError as exc:
        raise StoreError(f"{path}: write failed: {exc}") from exc
    finally:
        lock.release()
    return len(lines)


def read_records(path: str | Path, schema: RecordSchema[T], verify: bool = True) -> list[T]:
    """Read and validate a JSONL record file.

    A checksum sidecar, when present, must match the file content. Files
    without a sidecar (hand-written fixtures) are read unverified.
    """
    path = Path(path)
    if not path.exists():
        raise StoreError(f"{path}: no such record file")
    sidecar = _checksum_path(path)
    if verify and sidecar.exists():
        expected = sidecar.read_text().strip()
        actual = _file_sha256(path)
        if actual != expected:
            raise ChecksumMismatch(f"{path}: sha256 {actual} != recorded {expected}")
    records: list[T] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            try:
                records.append(schema.loads(stripped))
            except SchemaError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return records


def write_json(path: str | Path, payload: Any) -> None:
    """Write a JSON document deterministically (sorted keys, trailing newline)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


STAGES = ("harvest", "screen", "extract", "evaluate")


@dataclass
class RunManifest:
    run_id: str
    stage: str
    config_hash: str
    input_refs: list[str] = field(default_factory=list)
    output_refs: list[str] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""
    counters: dict[str, int] = field(default_factory=dict)

    def validate(self) -> None:
        if self.stage not in STAGES:
            raise SchemaError(f"unknown stage {self.stage!r}")
        for key, value in self.counters.items():
            if value < 0:
                raise SchemaError(f"counter {key} is negative")

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "RunManifest":
        manifest = cls(**{f.name: data[f.name] for f in dataclasses.fields(cls)})
        manifest.validate()
        return manifest


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def manifest_path(root: str | Path, run_id: str) -> Path:
    return Path(root) / "runs" / run_id / "manifest.json"


def write_manifest(root: str | Path, manifest: RunManifest) -> Path:
    manifest.validate()
    path = manifest_path(root, manifest.run_id)
    write_json(path, manifest.to_json_dict())
    return path


def read_manifest(root: str | Path, run_id: str) -> RunManifest | None:
    path = manifest_path(root, run_id)
    if not path.exists():
        return None
    return RunManifest.from_json_dict(read_json(path))
