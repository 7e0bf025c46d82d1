#!/usr/bin/env python3
"""Regenerate the human-evaluation fixture under data/evaluation/.

Produces 1,485 marks over synthetic extracted records with a fixed
per-family distribution (grand totals 662 / 694 / 129, 41 highly-significant
mark-1 records), plus the record file the marks reference. Fully
deterministic; safe to re-run.
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from riskminer.evalkit.marks import EVAL_MARK_SCHEMA, EvalMark  # noqa: E402
from riskminer.extract import RISK_FACTOR_SCHEMA, RiskFactorRecord  # noqa: E402
from riskminer.store import append_records  # noqa: E402

# family -> (diseases, mark1, mark2, mark3)
DISTRIBUTION = [
    ("Carcinomas",
     ["H00028", "H00017", "H00018", "H00046", "H00014", "H00026", "H00021", "H00013", "H00029"],
     317, 285, 60),
    ("Infection", ["H00110", "H00309", "H00319"], 45, 51, 6),
    ("Leukemias",
     ["H00003", "H00009", "H00001", "H00005", "H00004", "H00006", "H00007", "H00002"],
     208, 192, 46),
    ("Lymphomas", ["H00008", "H00011"], 27, 12, 4),
    ("Metabolic disorders (GD)", ["H00216", "H00126", "H00208"], 4, 60, 8),
    ("Mucus malefunction (GD)", ["H00218"], 11, 34, 2),
    ("Cardiomyopathy", ["H00292"], 5, 23, 0),
    ("Sarcomas", ["H00036"], 15, 5, 1),
    ("other hematological disorders", ["H00010"], 30, 32, 2),
]

HIGHLY_SIGNIFICANT_TOTAL = 41
HIGHLY_SIGNIFICANT_STRIDE = 16  # every 16th mark-1 record, first 41
TIMESTAMP = "2024-04-26T00:00:00Z"
ANNOTATOR = "annotator-1"


def main() -> None:
    out_dir = REPO / "data" / "evaluation"
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"
    marks_path = out_dir / "marks.jsonl"
    for path in (records_path, marks_path):
        path.unlink(missing_ok=True)
        sidecar = path.with_name(path.name + ".sha256")
        sidecar.unlink(missing_ok=True)

    records: list[RiskFactorRecord] = []
    marks: list[EvalMark] = []
    pmid_counter = 30_000_000
    mark1_seen = 0
    flagged = 0
    for family, diseases, c1, c2, c3 in DISTRIBUTION:
        for mark_value, count in ((1, c1), (2, c2), (3, c3)):
            for i in range(count):
                disease_id = diseases[i % len(diseases)]
                pmid_counter += 1
                text = f"candidate risk factor {i + 1} (mark {mark_value}) for {disease_id}"
                record = RiskFactorRecord(
                    disease_id=disease_id,
                    pmid=str(pmid_counter),
                    text=text,
                    start_char=0,
                    end_char=len(text),
                    score=round(0.55 + (i % 40) / 100.0, 2),
                    backend_id="heuristic",
                )
                records.append(record)
                highly = False
                if mark_value == 1:
                    if mark1_seen % HIGHLY_SIGNIFICANT_STRIDE == 0 and flagged < HIGHLY_SIGNIFICANT_TOTAL:
                        highly = True
                        flagged += 1
                    mark1_seen += 1
                marks.append(EvalMark(
                    record_ref=record.record_id,
                    mark=mark_value,
                    highly_significant=highly,
                    annotator_id=ANNOTATOR,
                    timestamp=TIMESTAMP,
                ))

    append_records(records_path, records, RISK_FACTOR_SCHEMA)
    append_records(marks_path, marks, EVAL_MARK_SCHEMA)
    assert flagged == HIGHLY_SIGNIFICANT_TOTAL, flagged
    print(f"{len(records)} records, {len(marks)} marks, {flagged} highly significant")


if __name__ == "__main__":
    main()
