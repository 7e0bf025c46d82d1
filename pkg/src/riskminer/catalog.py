"""Disease catalog: KEGG flat-file parsing, loading, name lookup, REST sync.

The KEGG `get` endpoint serves flat-text records; that format is the canonical
ingest format here so saved responses double as offline fixtures. Family
labels are not derivable from KEGG and ship as a curated sidecar
(`families.tsv`, columns `kegg_id<TAB>family`).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    AmbiguousName,
    DuplicateId,
    EmptyCatalog,
    MalformedEntry,
    SchemaError,
    UnknownRecordType,
)
from .transport import Transport, get_with_retries

logger = logging.getLogger(__name__)

KEGG_LIST_URL = "https://rest.kegg.jp/list/disease"
KEGG_GET_URL = "https://rest.kegg.jp/get/{id}"

# KEGG-native ids are H + digits; manually added diseases get locally minted
# ids starting with M (e.g. "M2023_04_26_16_49_01").
KEGG_ID_RE = re.compile(r"^H\d+$")
LOCAL_ID_RE = re.compile(r"^M[0-9A-Za-z_\-]+$")

# DBLINKS keys we carry over into Disease fields.
_DBLINK_FIELDS = {"MeSH": "mesh_ids", "ICD-10": "icd10_codes", "ICD-11": "icd11_codes"}


def _dedupe(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


@dataclass
class Disease:
    kegg_id: str
    name: str
    synonyms: list[str] = field(default_factory=list)
    description: str = ""
    mesh_ids: list[str] = field(default_factory=list)
    icd10_codes: list[str] = field(default_factory=list)
    icd11_codes: list[str] = field(default_factory=list)
    family: str | None = None

    def __post_init__(self) -> None:
        self.name = self.name.strip()
        self.mesh_ids = _dedupe(self.mesh_ids)
        self.icd10_codes = _dedupe(self.icd10_codes)
        self.icd11_codes = _dedupe(self.icd11_codes)
        self.validate()

    def validate(self) -> None:
        if not (KEGG_ID_RE.match(self.kegg_id) or LOCAL_ID_RE.match(self.kegg_id)):
            raise SchemaError(f"bad disease id {self.kegg_id!r}: expected H<digits> or M<local id>")
        if not self.name:
            raise SchemaError(f"disease {self.kegg_id}: empty name")

    def all_names(self) -> list[str]:
        return [self.name, *self.synonyms]

    def to_json_dict(self) -> dict:
        return {
            "kegg_id": self.kegg_id,
            "name": self.name,
            "synonyms": self.synonyms,
            "description": self.description,
            "mesh_ids": self.mesh_ids,
            "icd10_codes": self.icd10_codes,
            "icd11_codes": self.icd11_codes,
            "family": self.family,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Disease":
        return cls(
            kegg_id=data["kegg_id"],
            name=data["name"],
            synonyms=list(data.get("synonyms", [])),
            description=data.get("description", ""),
            mesh_ids=list(data.get("mesh_ids", [])),
            icd10_codes=list(data.get("icd10_codes", [])),
            icd11_codes=list(data.get("icd11_codes", [])),
            family=data.get("family"),
        )


def parse_kegg_entry(raw_entry: str) -> Disease:
    """Parse one KEGG flat-text record into a Disease.

    Total over any text containing a valid `ENTRY ... Disease` line: missing
    sections yield empty fields, never errors.
    """
    sections = _split_sections(raw_entry)
    if "ENTRY" not in sections:
        raise MalformedEntry("record has no ENTRY line")
    entry_tokens = sections["ENTRY"][0].split()
    if not entry_tokens:
        raise MalformedEntry("ENTRY line is empty")
    kegg_id = entry_tokens[0]
    record_type = entry_tokens[-1] if len(entry_tokens) > 1 else ""
    if record_type != "Disease":
        raise UnknownRecordType(f"{kegg_id}: ENTRY type {record_type!r} is not Disease")

    names = _parse_names(sections.get("NAME", []))
    name = names[0] if names else kegg_id
    synonyms = names[1:]
    description = " ".join(line.strip() for line in sections.get("DESCRIPTION", [])).strip()

    codes: dict[str, list[str]] = {dest: [] for dest in _DBLINK_FIELDS.values()}
    for line in sections.get("DBLINKS", []):
        key, _, rest = line.partition(":")
        dest = _DBLINK_FIELDS.get(key.strip())
        if dest is not None:
            codes[dest].extend(rest.split())

    return Disease(
        kegg_id=kegg_id,
        name=name,
        synonyms=synonyms,
        description=description,
        **codes,
    )


def _split_sections(raw: str) -> dict[str, list[str]]:
    """Group flat-file lines by their 12-column section key.

    Continuation lines (leading whitespace) attach to the current section;
    the terminator `///` ends the record.
    """
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.splitlines():
        if line.startswith("///"):
            break
        if not line.strip():
            continue
        if line[:1].isspace():
            if current is not None:
                sections[current].append(line.strip())
            continue
        key = line[:12].strip()
        value = line[12:].strip()
        current = key
        sections.setdefault(key, []).append(value)
    return sections


def _parse_names(lines: Sequence[str]) -> list[str]:
    # KEGG packs the primary name and synonyms into NAME, ';'-separated
    # across continuation lines.
    joined = " ".join(lines)
    return [part.strip() for part in joined.split(";") if part.strip()]


class DiseaseCatalog:
    """Immutable-after-load disease catalog with case-insensitive name lookup."""

    def __init__(self, entries: dict[str, Disease], family_map: dict[str, str],
                 unknown_family_ids: list[str]):
        self.entries = entries
        self.family_map = family_map
        self.unknown_family_ids = unknown_family_ids
        self.name_collisions: dict[str, list[str]] = {}
        self._by_name: dict[str, str] = {}
        for disease in entries.values():
            for name in disease.all_names():
                key = name.strip().lower()
                if key in self.name_collisions:
                    if disease.kegg_id not in self.name_collisions[key]:
                        self.name_collisions[key].append(disease.kegg_id)
                elif key in self._by_name and self._by_name[key] != disease.kegg_id:
                    self.name_collisions[key] = [self._by_name[key], disease.kegg_id]
                    del self._by_name[key]
                else:
                    self._by_name[key] = disease.kegg_id
        if self.name_collisions:
            logger.warning("catalog has %d ambiguous disease names", len(self.name_collisions))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, kegg_id: str) -> bool:
        return kegg_id in self.entries

    def get(self, kegg_id: str) -> Disease | None:
        return self.entries.get(kegg_id)

    def lookup_name(self, name: str) -> Disease | None:
        """Resolve a name or synonym, ignoring case and surrounding whitespace.

        Ambiguous names are never silently merged: they raise AmbiguousName
        listing the colliding entries.
        """
        key = name.strip().lower()
        if key in self.name_collisions:
            raise AmbiguousName(
                f"name {name!r} matches several diseases: {', '.join(self.name_collisions[key])}"
            )
        kegg_id = self._by_name.get(key)
        return self.entries[kegg_id] if kegg_id is not None else None

    def family_of(self, kegg_id: str) -> str | None:
        return self.family_map.get(kegg_id)


def load_catalog(records: Sequence[Disease], family_map: Mapping[str, str]) -> DiseaseCatalog:
    """Assemble a catalog from parsed records plus the curated family sidecar.

    Duplicate kegg_ids are an error. Sidecar rows for unknown ids are dropped
    but kept on the catalog for reporting, so the family_map invariant (every
    key resolves to an entry) always holds.
    """
    if not records:
        raise EmptyCatalog("no disease records to load")
    entries: dict[str, Disease] = {}
    for disease in records:
        if disease.kegg_id in entries:
            raise DuplicateId(f"duplicate disease id {disease.kegg_id}")
        entries[disease.kegg_id] = disease

    known_families: dict[str, str] = {}
    unknown: list[str] = []
    for kegg_id, family in family_map.items():
        if kegg_id in entries:
            known_families[kegg_id] = family
            entries[kegg_id].family = family
        else:
            unknown.append(kegg_id)
    if unknown:
        logger.warning("families sidecar names %d ids missing from the catalog", len(unknown))
    return DiseaseCatalog(entries, known_families, sorted(unknown))


def read_families_tsv(path: str | Path) -> dict[str, str]:
    """Read the `kegg_id<TAB>family` sidecar; '#' lines are comments."""
    family_map: dict[str, str] = {}
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        kegg_id, _, family = line.partition("\t")
        if not family:
            raise SchemaError(f"families file {path}: bad row {raw_line!r}")
        family_map[kegg_id.strip()] = family.strip()
    return family_map


def load_catalog_dir(cache_dir: str | Path, families_path: str | Path | None = None) -> DiseaseCatalog:
    """One-shot conversion of saved KEGG responses (`<id>.txt`) into a catalog."""
    cache = Path(cache_dir)
    records = [parse_kegg_entry(p.read_text(encoding="utf-8")) for p in sorted(cache.glob("*.txt"))]
    family_map = read_families_tsv(families_path) if families_path else {}
    return load_catalog(records, family_map)


def list_disease_ids(transport: Transport) -> list[str]:
    """Fetch the id column of the KEGG disease list."""
    resp = get_with_retries(transport, KEGG_LIST_URL, {})
    ids = []
    for line in resp.text.splitlines():
        if not line.strip():
            continue
        entry_id = line.split("\t")[0].strip()
        entry_id = entry_id.removeprefix("ds:")
        ids.append(entry_id)
    return ids


def sync_catalog_cache(
    transport: Transport,
    cache_dir: str | Path,
    disease_ids: Sequence[str] | None = None,
    refresh: bool = False,
) -> int:
    """Download KEGG disease records into `cache_dir`, one verbatim `<id>.txt` each.

    Already-cached ids are skipped unless `refresh`. Returns the number of
    records fetched over the network.
    """
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    if disease_ids is None:
        disease_ids = list_disease_ids(transport)
    fetched = 0
    for disease_id in disease_ids:
        target = cache / f"{disease_id}.txt"
        if target.exists() and not refresh:
            continue
        resp = get_with_retries(transport, KEGG_GET_URL.format(id=disease_id), {})
        target.write_bytes(resp.body)
        fetched += 1
    return fetched
