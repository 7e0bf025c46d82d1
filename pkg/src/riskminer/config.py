"""Pipeline configuration: one INI-style key/value document drives all stages.

Every constant the pipeline depends on (classifier threshold, confidence
coefficient, length percentile, k, rate limits) is a named, overridable field
here, so ablations are flag-level edits. See `docs/config-example.ini` for
the full schema.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .extract import DEFAULT_CONFIDENCE_COEFFICIENT, DEFAULT_K, DEFAULT_LENGTH_PERCENTILE
from .harvest import (
    DEFAULT_PAGE_SIZE,
    MAX_PAGE_SIZE,
    RATE_LIMIT_KEYED,
    RATE_LIMIT_KEYLESS,
)
from .screen import DEFAULT_THRESHOLD

BACKEND_KINDS = ("heuristic", "http")


@dataclass
class PipelineConfig:
    # catalog
    catalog_cache_dir: Path = Path("cache/kegg")
    families_file: Path | None = None
    # disease selection: "all" or explicit kegg ids
    diseases: list[str] = field(default_factory=lambda: ["all"])
    # harvest
    page_size: int = DEFAULT_PAGE_SIZE
    offline: bool = False
    # replay recorded responses from this directory instead of the network
    recorded_dir: Path | None = None
    rate_limit_keyless: int = RATE_LIMIT_KEYLESS
    rate_limit_keyed: int = RATE_LIMIT_KEYED
    fetch_workers: int = 4
    # screen
    screen_backend: str = "heuristic"
    screen_endpoint: str = ""
    screen_threshold: float = DEFAULT_THRESHOLD
    # extract
    extract_backend: str = "heuristic"
    extract_endpoint: str = ""
    k: int = DEFAULT_K
    confidence_coefficient: float = DEFAULT_CONFIDENCE_COEFFICIENT
    length_percentile: float = DEFAULT_LENGTH_PERCENTILE
    seed_dataset: Path | None = None
    max_answer_length: int | None = None
    # output
    output_root: Path = Path("out")

    def validate(self) -> None:
        if not 0 < self.confidence_coefficient <= 1:
            raise ConfigError(
                f"confidence_coefficient {self.confidence_coefficient} outside (0, 1]")
        if not 0 < self.length_percentile < 1:
            raise ConfigError(f"length_percentile {self.length_percentile} outside (0, 1)")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.screen_threshold <= 1:
            raise ConfigError(f"screen_threshold {self.screen_threshold} outside [0, 1]")
        if not 1 <= self.page_size <= MAX_PAGE_SIZE:
            raise ConfigError(f"page_size {self.page_size} outside [1, {MAX_PAGE_SIZE}]")
        if self.rate_limit_keyless < 1 or self.rate_limit_keyed < 1:
            raise ConfigError("rate limits must be >= 1")
        if self.fetch_workers < 1:
            raise ConfigError("fetch_workers must be >= 1")
        if self.screen_backend not in BACKEND_KINDS:
            raise ConfigError(f"unknown screen backend {self.screen_backend!r}")
        if self.extract_backend not in BACKEND_KINDS:
            raise ConfigError(f"unknown extract backend {self.extract_backend!r}")
        if self.screen_backend == "http" and not self.screen_endpoint:
            raise ConfigError("screen backend 'http' needs an endpoint")
        if self.extract_backend == "http" and not self.extract_endpoint:
            raise ConfigError("extract backend 'http' needs an endpoint")
        if not self.diseases:
            raise ConfigError("disease selection is empty")

    def effective_dict(self) -> dict:
        """The configuration as plain values; the basis for config_hash.

        output_root is deliberately excluded: the hash names runs *inside*
        that root, and trees produced under different roots from the same
        inputs must match.
        """
        return {
            "catalog_cache_dir": str(self.catalog_cache_dir),
            "families_file": str(self.families_file) if self.families_file else None,
            "diseases": self.diseases,
            "page_size": self.page_size,
            "offline": self.offline,
            "recorded_dir": str(self.recorded_dir) if self.recorded_dir else None,
            "rate_limit_keyless": self.rate_limit_keyless,
            "rate_limit_keyed": self.rate_limit_keyed,
            "fetch_workers": self.fetch_workers,
            "screen_backend": self.screen_backend,
            "screen_endpoint": self.screen_endpoint,
            "screen_threshold": self.screen_threshold,
            "extract_backend": self.extract_backend,
            "extract_endpoint": self.extract_endpoint,
            "k": self.k,
            "confidence_coefficient": self.confidence_coefficient,
            "length_percentile": self.length_percentile,
            "seed_dataset": str(self.seed_dataset) if self.seed_dataset else None,
            "max_answer_length": self.max_answer_length,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.effective_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _get(parser: configparser.ConfigParser, section: str, key: str, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        if isinstance(default, bool):
            return parser.getboolean(section, key)
        if isinstance(default, int):
            return parser.getint(section, key)
        if isinstance(default, float):
            return parser.getfloat(section, key)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return raw


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a config file. Relative paths resolve against the
    config file's directory."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    base = path.parent

    def resolve(raw: str | None) -> Path | None:
        if raw is None:
            return None
        p = Path(raw)
        return p if p.is_absolute() else base / p

    defaults = PipelineConfig()
    diseases_raw = _get(parser, "selection", "diseases", "all")
    diseases = [d.strip() for d in str(diseases_raw).split(",") if d.strip()]
    max_len_raw = _get(parser, "extract", "max_answer_length", None)
    try:
        max_answer_length = int(max_len_raw) if max_len_raw is not None else None
    except ValueError as exc:
        raise ConfigError(f"[extract] max_answer_length: {exc}") from exc

    config = PipelineConfig(
        catalog_cache_dir=resolve(_get(parser, "catalog", "cache_dir", "cache/kegg")),
        families_file=resolve(_get(parser, "catalog", "families", None)),
        diseases=diseases,
        page_size=_get(parser, "harvest", "page_size", defaults.page_size),
        offline=_get(parser, "harvest", "offline", defaults.offline),
        recorded_dir=resolve(_get(parser, "harvest", "recorded_dir", None)),
        rate_limit_keyless=_get(parser, "harvest", "rate_limit_keyless",
                                defaults.rate_limit_keyless),
        rate_limit_keyed=_get(parser, "harvest", "rate_limit_keyed", defaults.rate_limit_keyed),
        fetch_workers=_get(parser, "harvest", "fetch_workers", defaults.fetch_workers),
        screen_backend=_get(parser, "screen", "backend", defaults.screen_backend),
        screen_endpoint=_get(parser, "screen", "endpoint", defaults.screen_endpoint),
        screen_threshold=_get(parser, "screen", "threshold", defaults.screen_threshold),
        extract_backend=_get(parser, "extract", "backend", defaults.extract_backend),
        extract_endpoint=_get(parser, "extract", "endpoint", defaults.extract_endpoint),
        k=_get(parser, "extract", "k", defaults.k),
        confidence_coefficient=_get(parser, "extract", "confidence_coefficient",
                                    defaults.confidence_coefficient),
        length_percentile=_get(parser, "extract", "length_percentile",
                               defaults.length_percentile),
        seed_dataset=resolve(_get(parser, "extract", "seed_dataset", None)),
        max_answer_length=max_answer_length,
        output_root=resolve(_get(parser, "output", "root", "out")),
    )
    config.validate()
    return config
