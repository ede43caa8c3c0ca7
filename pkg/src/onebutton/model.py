"""Shared domain types, local-time arithmetic, and press-stream validation.

All timestamps are integer milliseconds since the Unix epoch (UTC) unless a
name says otherwise. Local-time binning uses one fixed UTC offset per dataset,
so day/hour arithmetic is pure integer math with no timezone database.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from enum import IntEnum

MS_PER_SECOND = 1_000
MS_PER_MINUTE = 60_000
MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000

_EPOCH = date(1970, 1, 1)
_EPOCH_WEEKDAY = 3  # 1970-01-01 was a Thursday

QUALITY_ANCHORED = "anchored"
QUALITY_RECEIPT = "receipt"
PRESS_QUALITIES = (QUALITY_ANCHORED, QUALITY_RECEIPT)

MAX_SEQ = 0xFFFF_FFFF

ANNOTATION_KINDS = ("session", "phone_consultation", "gap", "weekend", "note")
# Weekend ranges are always derived from the calendar; they are never persisted.
STORABLE_ANNOTATION_KINDS = ("session", "phone_consultation", "gap", "note")


class DomainError(Exception):
    """Base class for data-level errors raised by this package."""


class TimeBeforeStart(DomainError):
    """A timestamp falls before local midnight of day 1."""


class InvalidRecord(DomainError):
    """A record violates its type invariants."""


class GapOverlap(InvalidRecord):
    """A gap annotation overlaps an already stored gap annotation."""


class UnsortedInput(DomainError):
    """A press stream was not sorted by (t_utc_ms, seq)."""


class MalformedBatch(DomainError):
    """A sync message is not well-formed wire data."""


class EmptyPeriod(DomainError):
    """A comparison period contains no countable days."""


class InfeasibleConstraints(DomainError):
    """A scenario request deviates from the shape the generator supports."""


class Weekday(IntEnum):
    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4
    SAT = 5
    SUN = 6

    @property
    def label(self) -> str:
        return WEEKDAY_LABELS[self.value]

    @property
    def is_weekend(self) -> bool:
        return self.value >= Weekday.SAT


WEEKDAY_LABELS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


@dataclass(frozen=True, slots=True)
class RawPress:
    """One button interaction as stored on the host.

    ``t_utc_ms`` is assigned by the sync link: from a clock anchor when one is
    known for the press's boot (``quality="anchored"``), otherwise the batch
    receipt time (``quality="receipt"``). ``uptime_ms`` is the device-side
    milliseconds-since-boot reading; it is protocol-internal and not part of
    the interchange file formats.
    """

    device_id: str
    boot_id: int
    seq: int
    uptime_ms: int
    t_utc_ms: int
    quality: str

    def __post_init__(self) -> None:
        if not self.device_id:
            raise InvalidRecord("press device_id must be non-empty")
        if self.boot_id < 0 or self.uptime_ms < 0:
            raise InvalidRecord("press boot_id and uptime_ms must be non-negative")
        if not 0 <= self.seq <= MAX_SEQ:
            raise InvalidRecord(f"press seq out of range: {self.seq}")
        if self.quality not in PRESS_QUALITIES:
            raise InvalidRecord(f"unknown press quality: {self.quality!r}")


@dataclass(frozen=True, slots=True)
class Observation:
    """A decoded occurrence of the tracked phenomenon.

    ``t_utc_ms`` is the first press of the burst. ``source_seqs`` is None for
    observations re-read from a file, where the contributing presses are not
    recorded.
    """

    t_utc_ms: int
    press_count: int
    irregular: bool
    source_seqs: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.press_count < 2:
            raise InvalidRecord("observation press_count must be >= 2")
        if self.irregular != (self.press_count > 2):
            raise InvalidRecord("irregular flag must equal press_count > 2")
        if self.source_seqs is not None and len(self.source_seqs) != self.press_count:
            raise InvalidRecord("source_seqs length must equal press_count")


@dataclass(frozen=True, slots=True)
class Annotation:
    """A labeled time range over the dataset, end-exclusive."""

    kind: str
    start_utc_ms: int
    end_utc_ms: int
    label: str | None = None
    location: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ANNOTATION_KINDS:
            raise InvalidRecord(f"unknown annotation kind: {self.kind!r}")
        if self.start_utc_ms > self.end_utc_ms:
            raise InvalidRecord("annotation start must not exceed end")
        if self.location is not None:
            lat, lon = self.location
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise InvalidRecord(f"annotation location out of range: {self.location}")

    def overlaps(self, other: "Annotation") -> bool:
        return self.start_utc_ms < other.end_utc_ms and other.start_utc_ms < self.end_utc_ms


@dataclass(frozen=True, slots=True)
class DatasetConfig:
    """Per-dataset binning parameters.

    Day 1 is the local calendar date ``start_date``; all day and hour binning
    applies the fixed ``utc_offset_minutes``. DST transitions are deliberately
    not modeled.
    """

    start_date: date
    utc_offset_minutes: int = 0
    burst_gap_ms: int = 2_000
    day_count: int = 100

    def __post_init__(self) -> None:
        if abs(self.utc_offset_minutes) > 14 * 60:
            raise ValueError("utc_offset_minutes must be within +/-14 hours")
        if self.burst_gap_ms <= 0:
            raise ValueError("burst_gap_ms must be positive")
        if self.day_count <= 0:
            raise ValueError("day_count must be positive")

    @property
    def start_epoch_day(self) -> int:
        return (self.start_date - _EPOCH).days

    @property
    def utc_offset_ms(self) -> int:
        return self.utc_offset_minutes * MS_PER_MINUTE


def local_hour(t_utc_ms: int, utc_offset_minutes: int) -> int:
    """Local hour of day (0..23) under a fixed UTC offset."""
    return ((t_utc_ms + utc_offset_minutes * MS_PER_MINUTE) // MS_PER_HOUR) % 24


def _raw_day_index(t_utc_ms: int, config: DatasetConfig) -> int:
    local_ms = t_utc_ms + config.utc_offset_ms
    return local_ms // MS_PER_DAY - config.start_epoch_day + 1


def local_parts(t_utc_ms: int, config: DatasetConfig) -> tuple[int, Weekday, int]:
    """Split a UTC timestamp into (day_index, weekday, local hour).

    day_index counts local days since ``start_date`` starting at 1. Raises
    TimeBeforeStart for timestamps before local midnight of day 1.
    """
    day_index = _raw_day_index(t_utc_ms, config)
    if day_index < 1:
        raise TimeBeforeStart(f"t={t_utc_ms} precedes day 1 of {config.start_date}")
    local_ms = t_utc_ms + config.utc_offset_ms
    epoch_day = local_ms // MS_PER_DAY
    weekday = Weekday((epoch_day + _EPOCH_WEEKDAY) % 7)
    hour = (local_ms // MS_PER_HOUR) % 24
    return day_index, weekday, hour


def day_window_utc(config: DatasetConfig, day_index: int) -> tuple[int, int]:
    """Half-open UTC window [start, end) of one local day."""
    if day_index < 1:
        raise ValueError("day_index starts at 1")
    base = (config.start_epoch_day + day_index - 1) * MS_PER_DAY - config.utc_offset_ms
    return base, base + MS_PER_DAY


def day_weekday(config: DatasetConfig, day_index: int) -> Weekday:
    """Weekday of a dataset day without needing a timestamp."""
    if day_index < 1:
        raise ValueError("day_index starts at 1")
    return Weekday((config.start_epoch_day + day_index - 1 + _EPOCH_WEEKDAY) % 7)


def day_local_date(config: DatasetConfig, day_index: int) -> date:
    """Local calendar date of a dataset day."""
    if day_index < 1:
        raise ValueError("day_index starts at 1")
    return config.start_date + timedelta(days=day_index - 1)


@dataclass(frozen=True, slots=True)
class StreamViolation:
    """One integrity defect found in a press stream."""

    kind: str  # "duplicate_seq" | "nonmonotonic_uptime"
    device_id: str
    boot_id: int
    seq: int
    detail: str


def validate_press_stream(presses: list[RawPress]) -> list[StreamViolation]:
    """Report duplicate (device_id, seq) pairs and per-boot uptime regressions.

    An empty result means the stream is consistent. Within one boot, presses
    ordered by seq must have strictly increasing uptime readings.
    """
    violations: list[StreamViolation] = []
    seen: dict[tuple[str, int], RawPress] = {}
    by_boot: dict[tuple[str, int], list[RawPress]] = {}
    for press in presses:
        key = (press.device_id, press.seq)
        if key in seen:
            violations.append(
                StreamViolation(
                    kind="duplicate_seq",
                    device_id=press.device_id,
                    boot_id=press.boot_id,
                    seq=press.seq,
                    detail=f"(device_id={press.device_id!r}, seq={press.seq}) appears more than once",
                )
            )
            continue
        seen[key] = press
        by_boot.setdefault((press.device_id, press.boot_id), []).append(press)

    for (device_id, boot_id), group in by_boot.items():
        group.sort(key=lambda p: p.seq)
        for prev, cur in zip(group, group[1:]):
            if cur.uptime_ms <= prev.uptime_ms:
                violations.append(
                    StreamViolation(
                        kind="nonmonotonic_uptime",
                        device_id=device_id,
                        boot_id=boot_id,
                        seq=cur.seq,
                        detail=(
                            f"seq {cur.seq} has uptime {cur.uptime_ms} ms, "
                            f"not after seq {prev.seq} at {prev.uptime_ms} ms"
                        ),
                    )
                )
    return violations
