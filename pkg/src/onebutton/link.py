"""Unreliable-link simulation and the store-and-forward session loop.

The link alternates seeded connected/disconnected intervals; individual
messages can be dropped or die in flight when the link falls over. The
session loop drives one device against a host: handshake first, then batch
transfer with cumulative acks, retrying on timeout. Everything runs on
injected virtual time, so a (seed, schedule) pair replays identically.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field

from .device import ButtonDevice
from .protocol import SyncHost

DEFAULT_MAX_BATCH = 64
DEFAULT_RETRY_MS = 30_000


@dataclass(frozen=True)
class LinkSchedule:
    """Connectivity windows plus loss and latency behavior of the link.

    ``up_intervals`` are sorted, disjoint half-open [start, end) windows. A
    schedule whose last window covers the end of a run is eventually
    connected: every buffered press eventually gets a delivery opportunity.
    """

    up_intervals: tuple[tuple[int, int], ...]
    drop_prob: float = 0.0
    latency_range: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        prev_end = None
        for start, end in self.up_intervals:
            if start >= end:
                raise ValueError(f"empty link interval [{start}, {end})")
            if prev_end is not None and start < prev_end:
                raise ValueError("link intervals must be sorted and disjoint")
            prev_end = end
        if not 0.0 <= self.drop_prob < 1.0:
            raise ValueError("drop_prob must be in [0, 1)")
        lo, hi = self.latency_range
        if lo < 0 or hi < lo:
            raise ValueError("latency_range must be 0 <= lo <= hi")

    def is_up(self, t_ms: int) -> bool:
        i = bisect.bisect_right(self.up_intervals, (t_ms, float("inf"))) - 1
        return i >= 0 and self.up_intervals[i][0] <= t_ms < self.up_intervals[i][1]

    def connected_intervals(self, until_ms: int) -> list[tuple[int, int]]:
        out = []
        for start, end in self.up_intervals:
            if start >= until_ms:
                break
            out.append((start, min(end, until_ms)))
        return out

    @classmethod
    def always_up(cls, until_ms: int, **kwargs) -> "LinkSchedule":
        return cls(up_intervals=((0, until_ms),), **kwargs)

    @classmethod
    def random(
        cls,
        seed: int | str,
        horizon_ms: int,
        *,
        start_ms: int = 0,
        up_range_ms: tuple[int, int] = (30 * 60_000, 8 * 3_600_000),
        down_range_ms: tuple[int, int] = (5 * 60_000, 12 * 3_600_000),
        drop_prob: float = 0.0,
        latency_range: tuple[int, int] = (0, 0),
        tail_ms: int = 24 * 3_600_000,
    ) -> "LinkSchedule":
        """Seeded alternating up/down schedule ending with a connected tail.

        The tail keeps the schedule eventually connected past the horizon so
        a session run can always drain the device buffer.
        """
        rng = random.Random(seed)
        intervals: list[tuple[int, int]] = []
        t = start_ms
        up = rng.random() < 0.5
        while t < horizon_ms:
            duration = rng.randint(*(up_range_ms if up else down_range_ms))
            if up:
                intervals.append((t, min(t + duration, horizon_ms)))
            t += duration
            up = not up
        # Guarantee a connected tail from the horizon on.
        if intervals and intervals[-1][1] >= horizon_ms:
            intervals[-1] = (intervals[-1][0], horizon_ms + tail_ms)
        else:
            intervals.append((horizon_ms, horizon_ms + tail_ms))
        return cls(
            up_intervals=tuple(intervals),
            drop_prob=drop_prob,
            latency_range=latency_range,
        )


@dataclass(frozen=True, slots=True)
class TranscriptEntry:
    t_ms: int
    kind: str  # hello | hello_ack | batch | batch_ack
    delivered: bool
    info: int = 0  # batch size or acked_through_seq


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def add(self, t_ms: int, kind: str, delivered: bool, info: int = 0) -> None:
        self.entries.append(TranscriptEntry(t_ms=t_ms, kind=kind, delivered=delivered, info=info))

    def count(self, kind: str, delivered: bool | None = None) -> int:
        return sum(
            1
            for e in self.entries
            if e.kind == kind and (delivered is None or e.delivered == delivered)
        )


def run_session(
    device: ButtonDevice,
    host: SyncHost,
    press_times: list[int],
    schedule: LinkSchedule,
    *,
    seed: int | str = 0,
    until_ms: int,
    max_batch: int = DEFAULT_MAX_BATCH,
    retry_ms: int = DEFAULT_RETRY_MS,
) -> Transcript:
    """Drive a device against a host over the scheduled link until until_ms.

    Presses fire at their listed true times whether or not the link is up.
    Within a connected window the device handshakes once, then drains batches
    oldest-first; a lost message or ack is retried after retry_ms. Cumulative
    acks plus idempotent host ingestion make retransmission safe.
    """
    if retry_ms <= 0:
        raise ValueError("retry_ms must be positive")
    rng = random.Random(seed)
    lat_lo, lat_hi = schedule.latency_range
    drop_prob = schedule.drop_prob
    transcript = Transcript()

    times = sorted(press_times)
    n_presses = len(times)
    next_press = 0

    def feed(upto_ms: int) -> None:
        nonlocal next_press
        while next_press < n_presses and times[next_press] <= upto_ms:
            device.press(times[next_press])
            next_press += 1

    def flight(t: int, window_end: int) -> tuple[int, bool]:
        # One message leg. Crossing the window end means the link died mid-flight.
        arrival = t + (rng.randint(lat_lo, lat_hi) if lat_hi else 0)
        if arrival >= window_end:
            return arrival, False
        if drop_prob and rng.random() < drop_prob:
            return arrival, False
        return arrival, True

    for window_start, window_end in schedule.connected_intervals(until_ms):
        feed(window_start)
        t = window_start
        handshaken = False
        while t < window_end:
            feed(t)
            if not handshaken:
                sent_at = t
                hello = device.hello(sent_at)
                t, up_ok = flight(t, window_end)
                transcript.add(sent_at, "hello", up_ok)
                if up_ok:
                    ack = host.handle_hello(hello, wall_ms=t)
                    t, down_ok = flight(t, window_end)
                    transcript.add(t, "hello_ack", down_ok, ack.acked_through_seq)
                    if down_ok:
                        device.apply_ack(ack.acked_through_seq)
                        handshaken = True
                        continue
                t = sent_at + retry_ms
                continue
            batch = device.drain_batch(max_batch)
            if not batch.events:
                upcoming = times[next_press] if next_press < n_presses else None
                if upcoming is None or upcoming >= window_end:
                    break
                t = upcoming
                continue
            sent_at = t
            t, up_ok = flight(t, window_end)
            transcript.add(sent_at, "batch", up_ok, len(batch.events))
            if up_ok:
                _, ack = host.handle_batch(batch, wall_ms=t)
                t, down_ok = flight(t, window_end)
                transcript.add(t, "batch_ack", down_ok, ack.acked_through_seq)
                if down_ok:
                    device.apply_ack(ack.acked_through_seq)
                    continue
            t = sent_at + retry_ms
    feed(until_ms)
    return transcript
