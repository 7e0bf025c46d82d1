"""Exception hierarchy shared across the pipeline stages."""

from __future__ import annotations


class RiskMinerError(Exception):
    """Base class for all errors raised by this package."""


# --- catalog ---------------------------------------------------------------

class MalformedEntry(RiskMinerError):
    """Flat-text record has no ENTRY line."""


class UnknownRecordType(RiskMinerError):
    """ENTRY line present but not a Disease record."""


class DuplicateId(RiskMinerError):
    """Two catalog records share a kegg_id."""


class EmptyCatalog(RiskMinerError):
    """Catalog load was given no records."""


class AmbiguousName(RiskMinerError):
    """A disease name resolves to more than one catalog entry."""


# --- harvest ---------------------------------------------------------------

class EmptyDiseaseName(RiskMinerError):
    """Disease name empty after trimming."""


class NetworkError(RiskMinerError):
    """Transport failure that survived bounded retries."""


class ApiThrottled(NetworkError):
    """Server asked us to back off (HTTP 429)."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class MalformedResponse(RiskMinerError):
    """Server response could not be parsed."""


class OfflineCacheMiss(RiskMinerError):
    """Offline mode requested but the local cache has no answer."""


# --- screen / extract ------------------------------------------------------

class NoAbstract(RiskMinerError):
    """Article has no abstract text and cannot be classified."""


class BackendFailure(RiskMinerError):
    """A pluggable model backend errored or violated its contract."""


class LengthMismatch(RiskMinerError):
    """Two aligned sequences have different lengths."""


class UnknownPmid(RiskMinerError):
    """A pmid has no counterpart in the gold labels."""


class EmptySample(RiskMinerError):
    """Statistic requested over an empty sample."""


class MixedDiseases(RiskMinerError):
    """Per-disease reduction was handed records from several diseases."""


# --- evalkit ---------------------------------------------------------------

class EmptyGold(RiskMinerError):
    """Metric requested with no gold answers."""


class TooFewDiseases(RiskMinerError):
    """Disease-disjoint split needs at least two diseases."""


class UnmappedDisease(RiskMinerError):
    """Marks reference diseases with no family label."""

    def __init__(self, disease_ids: list[str]):
        super().__init__(f"no family label for diseases: {', '.join(sorted(disease_ids))}")
        self.disease_ids = sorted(disease_ids)


class SpanMismatch(RiskMinerError):
    """A stored span offset does not reproduce its answer text."""


class SchemaError(RiskMinerError):
    """Record does not satisfy its declared schema."""


# --- store -----------------------------------------------------------------

class StoreError(RiskMinerError):
    """Persistence-layer failure (I/O, locking)."""


class ChecksumMismatch(StoreError):
    """Record file content does not match its sha256 sidecar."""


class ParseError(StoreError):
    """A record line failed to parse."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- annotation service -----------------------------------------------------

class UnknownTask(RiskMinerError):
    """Task id does not exist."""


class TaskAlreadyDone(RiskMinerError):
    """Task was already completed or skipped."""


class InvalidMark(RiskMinerError):
    """Evaluation mark outside {1, 2, 3}."""


class SignificanceOnNonValid(RiskMinerError):
    """highly_significant is only allowed together with mark 1."""


# --- cli -------------------------------------------------------------------

class ConfigError(RiskMinerError):
    """Pipeline configuration is invalid."""


class StageFailure(RiskMinerError):
    """A pipeline stage failed; carries the manifests of completed work."""

    def __init__(self, stage: str, cause: Exception, completed: list | None = None):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.completed = completed or []
