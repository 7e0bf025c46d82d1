"""Human-evaluation marks and their aggregation into a per-family table.

Marks: 1 = valid risk factor for the queried disease, 2 = valid factor for a
different disease, 3 = not a risk factor. Mark-1 records can additionally be
flagged highly significant (strong OR/CI evidence in the abstract).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..errors import InvalidMark, SchemaError, SignificanceOnNonValid, UnmappedDisease
from ..store import RecordSchema

VALID_MARKS = (1, 2, 3)


@dataclass
class EvalMark:
    record_ref: str
    mark: int
    highly_significant: bool = False
    annotator_id: str = ""
    timestamp: str = ""

    def validate(self) -> None:
        if self.mark not in VALID_MARKS:
            raise InvalidMark(f"mark {self.mark!r} not in {VALID_MARKS}")
        if self.highly_significant and self.mark != 1:
            raise SignificanceOnNonValid(
                f"record {self.record_ref}: highly_significant requires mark 1, got {self.mark}"
            )

    def to_json_dict(self) -> dict:
        return {
            "record_ref": self.record_ref,
            "mark": self.mark,
            "highly_significant": self.highly_significant,
            "annotator_id": self.annotator_id,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "EvalMark":
        mark = cls(
            record_ref=data["record_ref"],
            mark=int(data["mark"]),
            highly_significant=bool(data.get("highly_significant", False)),
            annotator_id=data.get("annotator_id", ""),
            timestamp=data.get("timestamp", ""),
        )
        mark.validate()
        return mark


EVAL_MARK_SCHEMA = RecordSchema("EvalMark", EvalMark.to_json_dict, EvalMark.from_json_dict)


@dataclass
class FamilyRow:
    family: str
    mark1: int
    mark2: int
    mark3: int

    @property
    def total(self) -> int:
        return self.mark1 + self.mark2 + self.mark3


@dataclass
class FamilyTable:
    rows: list[FamilyRow] = field(default_factory=list)

    @property
    def grand_totals(self) -> tuple[int, int, int, int]:
        m1 = sum(r.mark1 for r in self.rows)
        m2 = sum(r.mark2 for r in self.rows)
        m3 = sum(r.mark3 for r in self.rows)
        return (m1, m2, m3, m1 + m2 + m3)

    @property
    def grand_total(self) -> int:
        return self.grand_totals[3]

    def row(self, family: str) -> FamilyRow | None:
        for r in self.rows:
            if r.family == family:
                return r
        return None

    def to_tsv(self) -> str:
        lines = ["family\tvalid_for_disease\tvalid_other_disease\tnot_risk_factor\ttotal"]
        for r in self.rows:
            lines.append(f"{r.family}\t{r.mark1}\t{r.mark2}\t{r.mark3}\t{r.total}")
        m1, m2, m3, total = self.grand_totals
        lines.append(f"total\t{m1}\t{m2}\t{m3}\t{total}")
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_tsv(), encoding="utf-8")
        return path


def aggregate_marks(
    marks: Sequence[EvalMark],
    record_diseases: Mapping[str, str],
    family_map: Mapping[str, str],
) -> FamilyTable:
    """Count marks per disease family.

    `record_diseases` maps record_ref -> disease_id; `family_map` maps
    disease_id -> family. Marks whose disease has no family label are an
    error listing the offending diseases, never a silent drop. Row order is
    deterministic: descending family total, then family name.
    """
    unknown_records = sorted({m.record_ref for m in marks if m.record_ref not in record_diseases})
    if unknown_records:
        raise SchemaError(f"marks reference unknown records: {', '.join(unknown_records[:5])}"
                          + ("..." if len(unknown_records) > 5 else ""))
    unmapped = {record_diseases[m.record_ref] for m in marks
                if record_diseases[m.record_ref] not in family_map}
    if unmapped:
        raise UnmappedDisease(sorted(unmapped))

    counts: dict[str, list[int]] = {}
    for mark in marks:
        mark.validate()
        family = family_map[record_diseases[mark.record_ref]]
        counts.setdefault(family, [0, 0, 0])[mark.mark - 1] += 1

    rows = [FamilyRow(family=f, mark1=c[0], mark2=c[1], mark3=c[2])
            for f, c in counts.items()]
    rows.sort(key=lambda r: (-r.total, r.family))
    return FamilyTable(rows=rows)


def record_disease_index(records: Iterable) -> dict[str, str]:
    """Build the record_ref -> disease_id map from RiskFactorRecords."""
    return {r.record_id: r.disease_id for r in records}
