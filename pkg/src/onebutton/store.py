"""Append-only event store: presses, observations, annotations, overflow gaps.

Backing storage is a single NDJSON append log replayed into in-memory indexes
on open; running without a path keeps everything in memory. Nothing is ever
mutated or deleted. Press identity is (device_id, seq): appending a press
that already exists is a no-op returning the original record id.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from dataclasses import dataclass

from .model import (
    Annotation,
    GapOverlap,
    InvalidRecord,
    Observation,
    RawPress,
    STORABLE_ANNOTATION_KINDS,
)

RECORD_KINDS = ("press", "observation", "annotation", "overflow_gap")


@dataclass(frozen=True, slots=True)
class OverflowGap:
    """A seq range lost to device buffer eviction, detected at ingestion."""

    device_id: str
    from_seq: int
    to_seq: int
    detected_at_ms: int


class EventStore:
    """Durable append-only store with snapshot reads.

    Appends and reads are serialized by one lock; reads hand out copies, so a
    returned list is a consistent snapshot. Per-device press order follows
    append order, which the sync protocol keeps in seq order.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self._lock = threading.Lock()
        self._next_id = 1
        self._presses: list[RawPress] = []
        self._press_ids: dict[tuple[str, int], int] = {}
        self._max_seq: dict[str, int] = {}
        self._observations: list[Observation] = []
        self._annotations: list[Annotation] = []
        self._overflow_gaps: list[OverflowGap] = []
        self._path = Path(path) if path is not None else None
        self._fh = None
        if self._path is not None:
            if self._path.exists():
                self._replay(self._path)
            self._fh = self._path.open("a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- appends ------------------------------------------------------------

    def append_press(self, press: RawPress) -> int:
        with self._lock:
            return self._append_press(press)

    def append_presses(self, presses: list[RawPress]) -> list[int]:
        with self._lock:
            return [self._append_press(p) for p in presses]

    def _append_press(self, press: RawPress) -> int:
        key = (press.device_id, press.seq)
        existing = self._press_ids.get(key)
        if existing is not None:
            return existing
        record_id = self._take_id()
        self._presses.append(press)
        self._press_ids[key] = record_id
        prev = self._max_seq.get(press.device_id, -1)
        if press.seq > prev:
            self._max_seq[press.device_id] = press.seq
        self._log(
            "press",
            device_id=press.device_id,
            boot_id=press.boot_id,
            seq=press.seq,
            uptime_ms=press.uptime_ms,
            t_utc_ms=press.t_utc_ms,
            quality=press.quality,
        )
        return record_id

    def append_observation(self, obs: Observation) -> int:
        with self._lock:
            record_id = self._take_id()
            self._observations.append(obs)
            self._log(
                "observation",
                t_utc_ms=obs.t_utc_ms,
                press_count=obs.press_count,
                irregular=obs.irregular,
                source_seqs=list(obs.source_seqs) if obs.source_seqs is not None else None,
            )
            return record_id

    def append_observations(self, observations: list[Observation]) -> list[int]:
        return [self.append_observation(o) for o in observations]

    def append_annotation(self, annotation: Annotation) -> int:
        """Store an annotation; weekend ranges are derived and rejected here."""
        if annotation.kind not in STORABLE_ANNOTATION_KINDS:
            raise InvalidRecord(f"annotation kind {annotation.kind!r} is not storable")
        with self._lock:
            if annotation.kind == "gap":
                for existing in self._annotations:
                    if existing.kind == "gap" and existing.overlaps(annotation):
                        raise GapOverlap(
                            f"gap {annotation.start_utc_ms}..{annotation.end_utc_ms} overlaps "
                            f"stored gap {existing.start_utc_ms}..{existing.end_utc_ms}"
                        )
            record_id = self._take_id()
            self._annotations.append(annotation)
            location = None
            if annotation.location is not None:
                location = {"lat": annotation.location[0], "lon": annotation.location[1]}
            self._log(
                "annotation",
                kind=annotation.kind,
                start_utc_ms=annotation.start_utc_ms,
                end_utc_ms=annotation.end_utc_ms,
                label=annotation.label,
                location=location,
            )
            return record_id

    def append_overflow_gap(
        self, device_id: str, from_seq: int, to_seq: int, detected_at_ms: int
    ) -> int:
        if from_seq > to_seq:
            raise InvalidRecord("overflow gap range is inverted")
        with self._lock:
            record_id = self._take_id()
            self._overflow_gaps.append(
                OverflowGap(
                    device_id=device_id,
                    from_seq=from_seq,
                    to_seq=to_seq,
                    detected_at_ms=detected_at_ms,
                )
            )
            self._log(
                "overflow_gap",
                device_id=device_id,
                from_seq=from_seq,
                to_seq=to_seq,
                detected_at_ms=detected_at_ms,
            )
            return record_id

    # -- queries ------------------------------------------------------------

    def presses(
        self,
        from_ms: int | None = None,
        to_ms: int | None = None,
        device_id: str | None = None,
    ) -> list[RawPress]:
        """Presses in the half-open window [from_ms, to_ms), time-ordered."""
        with self._lock:
            rows = [
                p
                for p in self._presses
                if _in_window(p.t_utc_ms, from_ms, to_ms)
                and (device_id is None or p.device_id == device_id)
            ]
        rows.sort(key=lambda p: (p.t_utc_ms, p.device_id, p.seq))
        return rows

    def observations(self, from_ms: int | None = None, to_ms: int | None = None) -> list[Observation]:
        with self._lock:
            rows = [o for o in self._observations if _in_window(o.t_utc_ms, from_ms, to_ms)]
        rows.sort(key=lambda o: o.t_utc_ms)
        return rows

    def annotations(
        self,
        from_ms: int | None = None,
        to_ms: int | None = None,
        kind: str | None = None,
    ) -> list[Annotation]:
        """Annotations intersecting the window, ordered by (start, end, kind)."""
        with self._lock:
            rows = [
                a
                for a in self._annotations
                if (kind is None or a.kind == kind)
                and (to_ms is None or a.start_utc_ms < to_ms)
                and (from_ms is None or a.end_utc_ms > from_ms or a.start_utc_ms >= from_ms)
            ]
        rows.sort(key=lambda a: (a.start_utc_ms, a.end_utc_ms, a.kind))
        return rows

    def overflow_gaps(self, device_id: str | None = None) -> list[OverflowGap]:
        with self._lock:
            rows = [
                g for g in self._overflow_gaps if device_id is None or g.device_id == device_id
            ]
        rows.sort(key=lambda g: (g.device_id, g.from_seq))
        return rows

    def query(self, kind: str, from_ms: int | None = None, to_ms: int | None = None):
        """Generic time-windowed query over one record kind."""
        if kind == "press":
            return self.presses(from_ms, to_ms)
        if kind == "observation":
            return self.observations(from_ms, to_ms)
        if kind == "annotation":
            return self.annotations(from_ms, to_ms)
        if kind == "overflow_gap":
            return self.overflow_gaps()
        raise ValueError(f"unknown record kind: {kind!r}")

    def devices(self) -> set[str]:
        with self._lock:
            return set(self._max_seq)

    def max_seq(self, device_id: str) -> int | None:
        with self._lock:
            return self._max_seq.get(device_id)

    @property
    def press_count(self) -> int:
        with self._lock:
            return len(self._presses)

    # -- export -------------------------------------------------------------

    def export_presses(
        self,
        fmt: str = "csv",
        from_ms: int | None = None,
        to_ms: int | None = None,
    ) -> str:
        """Press file content, seq-ordered per device; byte-stable per state."""
        from . import formats

        rows = self.presses(from_ms, to_ms)
        rows.sort(key=lambda p: (p.device_id, p.seq))
        if fmt == "csv":
            return formats.press_csv(rows)
        if fmt == "ndjson":
            return formats.press_ndjson(rows)
        raise ValueError(f"unknown export format: {fmt!r}")

    # -- persistence --------------------------------------------------------

    def _take_id(self) -> int:
        record_id = self._next_id
        self._next_id += 1
        return record_id

    def _log(self, record_type: str, **fields) -> None:
        if self._fh is None:
            return
        line = json.dumps({"type": record_type, **fields}, separators=(",", ":"))
        self._fh.write(line + "\n")
        self._fh.flush()

    def _replay(self, path: Path) -> None:
        with path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    self._apply(obj)
                except (json.JSONDecodeError, KeyError, TypeError, InvalidRecord) as exc:
                    raise InvalidRecord(f"{path}:{line_no}: bad log record: {exc}") from None

    def _apply(self, obj: dict) -> None:
        record_type = obj["type"]
        if record_type == "press":
            self._append_press(
                RawPress(
                    device_id=obj["device_id"],
                    boot_id=obj["boot_id"],
                    seq=obj["seq"],
                    uptime_ms=obj["uptime_ms"],
                    t_utc_ms=obj["t_utc_ms"],
                    quality=obj["quality"],
                )
            )
        elif record_type == "observation":
            seqs = obj["source_seqs"]
            self._observations.append(
                Observation(
                    t_utc_ms=obj["t_utc_ms"],
                    press_count=obj["press_count"],
                    irregular=obj["irregular"],
                    source_seqs=tuple(seqs) if seqs is not None else None,
                )
            )
            self._take_id()
        elif record_type == "annotation":
            location = obj["location"]
            self._annotations.append(
                Annotation(
                    kind=obj["kind"],
                    start_utc_ms=obj["start_utc_ms"],
                    end_utc_ms=obj["end_utc_ms"],
                    label=obj["label"],
                    location=(location["lat"], location["lon"]) if location else None,
                )
            )
            self._take_id()
        elif record_type == "overflow_gap":
            self._overflow_gaps.append(
                OverflowGap(
                    device_id=obj["device_id"],
                    from_seq=obj["from_seq"],
                    to_seq=obj["to_seq"],
                    detected_at_ms=obj["detected_at_ms"],
                )
            )
            self._take_id()
        else:
            raise InvalidRecord(f"unknown record type {record_type!r}")


def _in_window(t: int, from_ms: int | None, to_ms: int | None) -> bool:
    if from_ms is not None and t < from_ms:
        return False
    if to_ms is not None and t >= to_ms:
        return False
    return True
