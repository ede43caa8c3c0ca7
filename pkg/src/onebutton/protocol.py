"""Device-to-host sync protocol: wire encoding, clock anchors, idempotent ingestion.

Wire messages are single-line JSON objects with exactly the fields below, in
this order, newline-delimited when streamed:

    hello  {"device_id", "boot_id", "uptime_now_ms", "buffered_count", "overflowed"}
    batch  {"device_id", "events": [{"seq", "boot_id", "uptime_ms"}, ...]}
    ack    {"acked_through_seq"}

Acks are cumulative: a single integer acknowledges every seq at or below it.
Ingestion skips already-acked seqs, so retransmission after a lost ack never
duplicates a press. A seq jump past the cumulative ack can only mean the
device evicted the missing presses on buffer overflow; the hole is recorded
as an overflow-gap event so later analysis can tell data loss from absence of
the phenomenon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .model import (
    MalformedBatch,
    QUALITY_ANCHORED,
    QUALITY_RECEIPT,
    RawPress,
)

if TYPE_CHECKING:
    from .store import EventStore


@dataclass(frozen=True, slots=True)
class BatchEvent:
    seq: int
    boot_id: int
    uptime_ms: int


@dataclass(frozen=True, slots=True)
class Hello:
    """Connection handshake; sent before any batch of a connection."""

    device_id: str
    boot_id: int
    uptime_now_ms: int
    buffered_count: int
    overflowed: bool


@dataclass(frozen=True, slots=True)
class SyncBatch:
    device_id: str
    events: tuple[BatchEvent, ...]


@dataclass(frozen=True, slots=True)
class SyncAck:
    """Highest seq the host has durably stored; never decreases per device."""

    acked_through_seq: int


@dataclass(frozen=True, slots=True)
class ClockAnchor:
    """(host wall time, device uptime) pair captured at a handshake."""

    boot_id: int
    host_wall_ms: int
    uptime_now_ms: int


def encode_message(msg: Hello | SyncBatch | SyncAck) -> str:
    """Canonical single-line encoding of one wire message (no newline)."""
    if isinstance(msg, Hello):
        obj: dict = {
            "device_id": msg.device_id,
            "boot_id": msg.boot_id,
            "uptime_now_ms": msg.uptime_now_ms,
            "buffered_count": msg.buffered_count,
            "overflowed": msg.overflowed,
        }
    elif isinstance(msg, SyncBatch):
        obj = {
            "device_id": msg.device_id,
            "events": [
                {"seq": e.seq, "boot_id": e.boot_id, "uptime_ms": e.uptime_ms} for e in msg.events
            ],
        }
    elif isinstance(msg, SyncAck):
        obj = {"acked_through_seq": msg.acked_through_seq}
    else:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    return json.dumps(obj, separators=(",", ":"))


def encode_stream(messages: list[Hello | SyncBatch | SyncAck]) -> str:
    """Line-delimited encoding, one message per line, each newline-terminated."""
    return "".join(encode_message(m) + "\n" for m in messages)


def decode_message(line: str) -> Hello | SyncBatch | SyncAck:
    """Parse one wire line, classifying by its fields."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedBatch(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedBatch("wire message must be a JSON object")
    try:
        if "events" in obj:
            events = tuple(
                BatchEvent(seq=_as_int(e["seq"]), boot_id=_as_int(e["boot_id"]), uptime_ms=_as_int(e["uptime_ms"]))
                for e in obj["events"]
            )
            return SyncBatch(device_id=_as_str(obj["device_id"]), events=events)
        if "acked_through_seq" in obj:
            return SyncAck(acked_through_seq=_as_int(obj["acked_through_seq"]))
        if "uptime_now_ms" in obj:
            return Hello(
                device_id=_as_str(obj["device_id"]),
                boot_id=_as_int(obj["boot_id"]),
                uptime_now_ms=_as_int(obj["uptime_now_ms"]),
                buffered_count=_as_int(obj["buffered_count"]),
                overflowed=bool(obj["overflowed"]),
            )
    except (KeyError, TypeError) as exc:
        raise MalformedBatch(f"wire message missing or mistyped field: {exc}") from None
    raise MalformedBatch(f"unrecognized wire message: {sorted(obj)}")


def decode_stream(text: str) -> list[Hello | SyncBatch | SyncAck]:
    return [decode_message(line) for line in text.splitlines() if line.strip()]


def _as_int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedBatch(f"expected integer, got {value!r}")
    return value


def _as_str(value) -> str:
    if not isinstance(value, str):
        raise MalformedBatch(f"expected string, got {value!r}")
    return value


def map_to_wall(anchor: ClockAnchor | None, uptime_ms: int, receipt_wall_ms: int) -> tuple[int, str]:
    """Map a device uptime reading to wall-clock time.

    With an anchor for the press's boot, the press happened (anchor uptime -
    press uptime) device-milliseconds before the anchored wall instant.
    Without one the batch receipt time is the best available estimate, marked
    by the lower "receipt" quality.
    """
    if anchor is None:
        return receipt_wall_ms, QUALITY_RECEIPT
    return anchor.host_wall_ms - (anchor.uptime_now_ms - uptime_ms), QUALITY_ANCHORED


class SyncHost:
    """Host endpoint of the sync protocol for any number of devices.

    Durable state (presses, overflow gaps) lives in the event store; anchors
    and the cumulative ack cache are in-memory and rebuild from handshakes and
    the store after a restart. Callers must serialize calls per device_id.
    """

    def __init__(self, store: "EventStore") -> None:
        self.store = store
        self.anchors: dict[tuple[str, int], ClockAnchor] = {}
        self._acked: dict[str, int] = {}

    def known_device(self, device_id: str) -> bool:
        return device_id in self._acked or device_id in self.store.devices()

    def acked_through(self, device_id: str) -> int:
        """Cumulative ack for a device; -1 before any press is stored."""
        if device_id not in self._acked:
            stored = self.store.max_seq(device_id)
            self._acked[device_id] = -1 if stored is None else stored
        return self._acked[device_id]

    def handle_hello(self, hello: Hello, wall_ms: int) -> SyncAck:
        """Record the handshake's clock anchor; reply with the current ack.

        Only the latest anchor per (device, boot) is retained. The ack in the
        reply lets a device prune presses whose ack was lost on a previous
        connection.
        """
        self.anchors[(hello.device_id, hello.boot_id)] = ClockAnchor(
            boot_id=hello.boot_id,
            host_wall_ms=wall_ms,
            uptime_now_ms=hello.uptime_now_ms,
        )
        return SyncAck(acked_through_seq=self.acked_through(hello.device_id))

    def handle_batch(self, batch: SyncBatch, wall_ms: int) -> tuple[list[RawPress], SyncAck]:
        """Ingest one batch idempotently; returns (new presses, cumulative ack).

        Events at or below the current ack are skipped. A jump past the ack
        records an overflow gap for the evicted seq range.
        """
        if not batch.events:
            raise MalformedBatch("sync batch must not be empty")
        prev_seq = None
        for event in batch.events:
            if prev_seq is not None and event.seq <= prev_seq:
                raise MalformedBatch(
                    f"batch events out of order: seq {event.seq} after {prev_seq}"
                )
            prev_seq = event.seq

        acked = self.acked_through(batch.device_id)
        new_presses: list[RawPress] = []
        cursor = acked
        for event in batch.events:
            if event.seq <= cursor:
                continue
            if event.seq > cursor + 1:
                self.store.append_overflow_gap(
                    device_id=batch.device_id,
                    from_seq=cursor + 1,
                    to_seq=event.seq - 1,
                    detected_at_ms=wall_ms,
                )
            anchor = self.anchors.get((batch.device_id, event.boot_id))
            t_utc_ms, quality = map_to_wall(anchor, event.uptime_ms, wall_ms)
            press = RawPress(
                device_id=batch.device_id,
                boot_id=event.boot_id,
                seq=event.seq,
                uptime_ms=event.uptime_ms,
                t_utc_ms=t_utc_ms,
                quality=quality,
            )
            self.store.append_press(press)
            new_presses.append(press)
            cursor = event.seq
        if cursor > acked:
            self._acked[batch.device_id] = cursor
        return new_presses, SyncAck(acked_through_seq=self._acked.get(batch.device_id, acked))
