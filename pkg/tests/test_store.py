from __future__ import annotations

import threading
from dataclasses import dataclass

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskminer.errors import ChecksumMismatch, ParseError, SchemaError, StoreError
from riskminer.store import (
    RecordSchema,
    RunManifest,
    append_records,
    dataclass_schema,
    read_manifest,
    read_records,
    write_manifest,
)


@dataclass
class Row:
    key: str
    value: int


def _validate_row(row: Row) -> None:
    if row.value < 0:
        raise SchemaError("value must be non-negative")


ROW_SCHEMA = RecordSchema(
    "Row",
    to_dict=lambda r: {"key": r.key, "value": r.value},
    from_dict=lambda d: Row(key=d["key"], value=int(d["value"])),
    validate=_validate_row,
)


def test_append_then_append_then_read(tmp_path):
    path = tmp_path / "rows.jsonl"
    assert append_records(path, [Row("a", 1), Row("b", 2), Row("c", 3)], ROW_SCHEMA) == 3
    assert append_records(path, [Row("d", 4), Row("e", 5)], ROW_SCHEMA) == 2
    assert len(path.read_text().splitlines()) == 5
    rows = read_records(path, ROW_SCHEMA)
    assert [r.key for r in rows] == list("abcde")


def test_schema_violation_leaves_file_unchanged(tmp_path):
    path = tmp_path / "rows.jsonl"
    append_records(path, [Row("a", 1)], ROW_SCHEMA)
    before = path.read_bytes()
    with pytest.raises(SchemaError):
        append_records(path, [Row("b", 2), Row("bad", -1)], ROW_SCHEMA)
    assert path.read_bytes() == before
    assert len(read_records(path, ROW_SCHEMA)) == 1


def test_second_writer_rejected_while_locked(tmp_path):
    path = tmp_path / "rows.jsonl"
    from filelock import FileLock
    lock = FileLock(str(path) + ".lock")
    lock.acquire()
    try:
        hold = threading.Event()

        def second_writer():
            with pytest.raises(StoreError, match="another writer"):
                append_records(path, [Row("x", 1)], ROW_SCHEMA, lock_timeout=0.2)
            hold.set()

        thread = threading.Thread(target=second_writer)
        thread.start()
        thread.join(timeout=10)
        assert hold.is_set()
    finally:
        lock.release()


def test_corruption_detected(tmp_path):
    path = tmp_path / "rows.jsonl"
    append_records(path, [Row("a", 1), Row("b", 2)], ROW_SCHEMA)
    raw = bytearray(path.read_bytes())
    raw[5] ^= 0xFF  # flip one byte
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatch):
        read_records(path, ROW_SCHEMA)


def test_empty_file_with_valid_checksum(tmp_path):
    path = tmp_path / "rows.jsonl"
    append_records(path, [], ROW_SCHEMA)
    assert read_records(path, ROW_SCHEMA) == []


def test_truncated_line_reports_line_number(tmp_path):
    path = tmp_path / "rows.jsonl"
    append_records(path, [Row("a", 1), Row("b", 2)], ROW_SCHEMA)
    truncated = path.read_text()[:-10]
    path.write_text(truncated)
    from riskminer.store import write_checksum
    write_checksum(path)  # checksum valid; the final line itself is broken
    with pytest.raises(ParseError) as exc_info:
        read_records(path, ROW_SCHEMA)
    assert exc_info.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(StoreError):
        read_records(tmp_path / "absent.jsonl", ROW_SCHEMA)


def test_sidecar_missing_reads_unverified(tmp_path):
    path = tmp_path / "rows.jsonl"
    path.write_text('{"key": "a", "value": 1}\n')
    assert read_records(path, ROW_SCHEMA) == [Row("a", 1)]


@given(st.lists(
    st.tuples(st.text(min_size=0, max_size=20), st.integers(min_value=0, max_value=10**9)),
    max_size=30))
def test_roundtrip_identity_random_records(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("store") / "rows.jsonl"
    records = [Row(key=k, value=v) for k, v in rows]
    append_records(path, records, ROW_SCHEMA)
    assert read_records(path, ROW_SCHEMA) == records


def test_dataclass_schema_roundtrip(tmp_path):
    schema = dataclass_schema("Row", Row)
    path = tmp_path / "x.jsonl"
    append_records(path, [Row("k", 9)], schema)
    assert read_records(path, schema) == [Row("k", 9)]


def test_manifest_roundtrip(tmp_path):
    manifest = RunManifest(
        run_id="screen-abc", stage="screen", config_hash="abc",
        input_refs=["corpus"], output_refs=["screen/x"],
        started_at="2024-01-01T00:00:00Z", finished_at="2024-01-01T00:00:01Z",
        counters={"screened": 10},
    )
    write_manifest(tmp_path, manifest)
    loaded = read_manifest(tmp_path, "screen-abc")
    assert loaded == manifest
    assert read_manifest(tmp_path, "nonexistent") is None


def test_manifest_rejects_negative_counters(tmp_path):
    manifest = RunManifest(run_id="x", stage="screen", config_hash="h",
                           counters={"bad": -1})
    with pytest.raises(SchemaError):
        write_manifest(tmp_path, manifest)
