"""Firmware model of the one-button wearable.

The device has no wall clock: presses are stamped with a drifting
milliseconds-since-boot reading and held in a bounded FIFO buffer until the
sync link acknowledges them. All time is injected by the caller, so every
schedule replays deterministically.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .protocol import BatchEvent, Hello, SyncBatch

DEFAULT_CAPACITY = 4_096
PPM = 1_000_000


@dataclass(frozen=True, slots=True)
class PressFact:
    """Ground-truth record of one press, kept outside the protocol for oracles."""

    seq: int
    boot_id: int
    uptime_ms: int
    true_t_ms: int


class ButtonDevice:
    """Simulated smartbutton: drifting uptime clock plus a bounded press buffer.

    The uptime clock runs at (1 + drift_ppm * 1e-6) times true time, floored
    to whole milliseconds. The press buffer evicts its oldest entry on
    overflow and flags the loss in the next handshake. ``next_seq`` survives
    reboots, so (device_id, seq) stays unique for the device's lifetime.
    """

    def __init__(
        self,
        device_id: str,
        *,
        boot_true_ms: int = 0,
        capacity: int = DEFAULT_CAPACITY,
        drift_ppm: int = 0,
    ) -> None:
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.device_id = device_id
        self.capacity = capacity
        self.drift_ppm = drift_ppm
        self.boot_id = 0
        self.next_seq = 0
        self.overflowed = False
        self._boot_true_ms = boot_true_ms
        self._last_true_ms = boot_true_ms
        self._buffer: deque[BatchEvent] = deque()
        self.press_log: list[PressFact] = []
        self.evicted_seqs: list[int] = []

    @property
    def buffered_count(self) -> int:
        return len(self._buffer)

    def uptime_at(self, true_ms: int) -> int:
        """Drifted milliseconds-since-boot reading at a true instant."""
        if true_ms < self._last_true_ms:
            raise ValueError("simulated time must not run backwards")
        elapsed = true_ms - self._boot_true_ms
        return elapsed * (PPM + self.drift_ppm) // PPM

    def press(self, true_ms: int) -> BatchEvent:
        """Record one button press, evicting the oldest entry on overflow."""
        uptime = self.uptime_at(true_ms)
        self._last_true_ms = true_ms
        event = BatchEvent(seq=self.next_seq, boot_id=self.boot_id, uptime_ms=uptime)
        self.next_seq += 1
        self._buffer.append(event)
        self.press_log.append(
            PressFact(seq=event.seq, boot_id=event.boot_id, uptime_ms=uptime, true_t_ms=true_ms)
        )
        if len(self._buffer) > self.capacity:
            evicted = self._buffer.popleft()
            self.evicted_seqs.append(evicted.seq)
            self.overflowed = True
        return event

    def reboot(self, true_ms: int) -> None:
        """Restart the firmware: uptime restarts, buffer and seq counter persist."""
        if true_ms < self._last_true_ms:
            raise ValueError("simulated time must not run backwards")
        self.boot_id += 1
        self._boot_true_ms = true_ms
        self._last_true_ms = true_ms

    def hello(self, true_ms: int) -> Hello:
        """Handshake message for the current connection."""
        uptime = self.uptime_at(true_ms)
        self._last_true_ms = true_ms
        return Hello(
            device_id=self.device_id,
            boot_id=self.boot_id,
            uptime_now_ms=uptime,
            buffered_count=len(self._buffer),
            overflowed=self.overflowed,
        )

    def drain_batch(self, max_n: int) -> SyncBatch:
        """Oldest unacked presses, up to max_n, without removing them.

        Repeated drains without an intervening ack return the same batch;
        removal happens only in apply_ack.
        """
        if max_n < 0:
            raise ValueError("max_n must be non-negative")
        events = []
        for i, event in enumerate(self._buffer):
            if i >= max_n:
                break
            events.append(event)
        return SyncBatch(device_id=self.device_id, events=tuple(events))

    def apply_ack(self, acked_through_seq: int) -> int:
        """Drop buffered presses with seq <= the cumulative ack; returns count pruned."""
        pruned = 0
        while self._buffer and self._buffer[0].seq <= acked_through_seq:
            self._buffer.popleft()
            pruned += 1
        return pruned
