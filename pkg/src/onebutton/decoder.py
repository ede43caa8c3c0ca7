"""Press-pattern decoding: maximal press bursts into observations.

The observation protocol signals one phenomenon occurrence with two
consecutive presses; a stray single press is a false positive. A burst is a
maximal run of presses where every inter-press gap is at most the configured
window. A burst of two or more presses is one observation (more than two sets
the irregular flag, preserving the evidence); a burst of one is a false
positive.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Observation, RawPress, UnsortedInput

DEFAULT_BURST_GAP_MS = 2_000


@dataclass(frozen=True, slots=True)
class Burst:
    """A maximal run of presses with inter-press gaps <= the window."""

    presses: tuple[RawPress, ...]

    @property
    def start_utc_ms(self) -> int:
        return self.presses[0].t_utc_ms

    @property
    def size(self) -> int:
        return len(self.presses)


def split_bursts(presses: list[RawPress], burst_gap_ms: int = DEFAULT_BURST_GAP_MS) -> list[Burst]:
    """Partition a time-ordered press stream into maximal bursts.

    Raises UnsortedInput unless presses are sorted by (t_utc_ms, seq).
    """
    if burst_gap_ms <= 0:
        raise ValueError("burst_gap_ms must be positive")
    bursts: list[Burst] = []
    run: list[RawPress] = []
    prev: RawPress | None = None
    for press in presses:
        if prev is not None:
            if (press.t_utc_ms, press.seq) < (prev.t_utc_ms, prev.seq):
                raise UnsortedInput(
                    f"press seq {press.seq} at {press.t_utc_ms} follows seq {prev.seq} at {prev.t_utc_ms}"
                )
            if press.t_utc_ms - prev.t_utc_ms > burst_gap_ms:
                bursts.append(Burst(tuple(run)))
                run = []
        run.append(press)
        prev = press
    if run:
        bursts.append(Burst(tuple(run)))
    return bursts


def decode(
    presses: list[RawPress], burst_gap_ms: int = DEFAULT_BURST_GAP_MS
) -> tuple[list[Observation], list[RawPress]]:
    """Decode a sorted press stream into (observations, false positives).

    Every press belongs to exactly one burst, so the press counts of the
    observations plus the false positives partition the input.
    """
    observations: list[Observation] = []
    false_positives: list[RawPress] = []
    for burst in split_bursts(presses, burst_gap_ms):
        if burst.size >= 2:
            observations.append(
                Observation(
                    t_utc_ms=burst.start_utc_ms,
                    press_count=burst.size,
                    irregular=burst.size > 2,
                    source_seqs=tuple(p.seq for p in burst.presses),
                )
            )
        else:
            false_positives.append(burst.presses[0])
    return observations, false_positives
