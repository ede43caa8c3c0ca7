"""Deterministic synthetic generator for the "pn" demo case.

The pn case is a 100-day single-device dataset with a contractual shape: a
fixed hourly observation profile totalling 647, an instrumentation outage
covering days 8-14, 25 therapy-session annotations at 2-3 per week outside
weeks 7-11, phone consultations inside weeks 7-11, a mild rate increase over
days 43-72, markedly fewer observations on weekends, every observation
signaled as exactly two presses 300-1200 ms apart, and a 5% sprinkling of
stray single presses. ``check_pn`` verifies all of that using the decoder and
analytics modules, never the generator's own bookkeeping; the generator
resamples (deterministically) until its output passes.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from datetime import date
from itertools import accumulate

from .analytics import daily_counts, gap_days, hourly, period_compare
from .decoder import decode
from .model import (
    Annotation,
    DatasetConfig,
    InfeasibleConstraints,
    MS_PER_DAY,
    MS_PER_HOUR,
    MS_PER_MINUTE,
    QUALITY_ANCHORED,
    RawPress,
    _raw_day_index,
    day_weekday,
    day_window_utc,
)

PN_SCENARIO = "pn"
PN_DEVICE_ID = "pn-button"
PN_DAY_COUNT = 100

# Observation count per local hour of day for the pn case; sums to 647.
PN_HOURLY_COUNTS = (
    11, 3, 0, 7, 2, 8, 16, 14, 32, 30, 20, 40,
    67, 33, 53, 30, 61, 44, 24, 54, 36, 15, 38, 9,
)
PN_TOTAL_OBSERVATIONS = sum(PN_HOURLY_COUNTS)  # 647

PN_GAP_DAYS = (8, 14)          # inclusive day range with no data collected
PN_BASELINE_DAYS = (15, 42)    # pre-crisis comparison period
PN_CRISIS_DAYS = (43, 72)      # acute period with a slight rate increase
PN_CONSULT_WEEKS = (7, 11)     # sessions paused; phone consultations instead
PN_SESSION_COUNT = 25
PN_FALSE_POSITIVE_RATE = 0.05
PN_SINGLE_PRESSES = round(PN_FALSE_POSITIVE_RATE * PN_TOTAL_OBSERVATIONS)  # 32
PN_PRESS_GAP_MS = (300, 1_200)  # inter-press gap inside one observation

# Seeded day-placement weights, in tenths.
_WEIGHT_WEEKDAY = 25
_WEIGHT_WEEKEND = 10
_CRISIS_FACTOR_TENTHS = 12

# Events inside one day keep their starts this far apart so bursts never
# merge: worst-case inter-event press gap is 4000 - 1200 = 2800 ms.
_MIN_EVENT_SEPARATION_MS = 4_000
_HOUR_START_MARGIN_MS = 1_500

_MAX_ATTEMPTS = 50


def pn_config() -> DatasetConfig:
    """Dataset parameters of the pn case: 100 days from Monday 2014-09-01, UTC+1."""
    return DatasetConfig(
        start_date=date(2014, 9, 1),
        utc_offset_minutes=60,
        burst_gap_ms=2_000,
        day_count=PN_DAY_COUNT,
    )


@dataclass(frozen=True)
class PnScenario:
    """Generated pn dataset: true press instants plus therapist annotations."""

    seed: int
    config: DatasetConfig
    press_times_utc: tuple[int, ...]
    annotations: tuple[Annotation, ...]
    device_id: str = PN_DEVICE_ID


def presses_from_times(
    times: list[int] | tuple[int, ...],
    device_id: str = PN_DEVICE_ID,
    boot_id: int = 0,
) -> list[RawPress]:
    """Wrap true press instants as an anchored, perfectly-synced press stream."""
    ordered = sorted(times)
    base = ordered[0] - 1 if ordered else 0
    return [
        RawPress(
            device_id=device_id,
            boot_id=boot_id,
            seq=i,
            uptime_ms=t - base,
            t_utc_ms=t,
            quality=QUALITY_ANCHORED,
        )
        for i, t in enumerate(ordered)
    ]


def _week_of_day(day: int) -> int:
    return (day + 6) // 7


def _weeks(first_day: int, last_day: int) -> range:
    return range(_week_of_day(first_day), _week_of_day(last_day) + 1)


def _weekday_days_of_week(week: int, config: DatasetConfig) -> list[int]:
    first = 7 * (week - 1) + 1
    return [
        d
        for d in range(first, min(first + 7, config.day_count + 1))
        if not day_weekday(config, d).is_weekend
    ]


def generate_pn(seed: int, config: DatasetConfig | None = None) -> PnScenario:
    """Generate the pn dataset for a seed; identical seeds give identical output."""
    if config is None:
        config = pn_config()
    if config.day_count != PN_DAY_COUNT:
        raise InfeasibleConstraints(f"pn scenario requires day_count={PN_DAY_COUNT}")
    if not PN_PRESS_GAP_MS[1] <= config.burst_gap_ms < _MIN_EVENT_SEPARATION_MS - PN_PRESS_GAP_MS[1]:
        raise InfeasibleConstraints(
            "pn scenario requires burst_gap_ms between "
            f"{PN_PRESS_GAP_MS[1]} and {_MIN_EVENT_SEPARATION_MS - PN_PRESS_GAP_MS[1] - 1}"
        )

    last_error: list[str] = []
    for attempt in range(_MAX_ATTEMPTS):
        rng = random.Random(f"{PN_SCENARIO}:{seed}:{attempt}")
        press_times = _draw_press_times(rng, config)
        annotations = _draw_annotations(rng, config)
        problems = check_pn(presses_from_times(press_times), annotations, config)
        if not problems:
            return PnScenario(
                seed=seed,
                config=config,
                press_times_utc=tuple(press_times),
                annotations=tuple(annotations),
            )
        last_error = problems
    raise InfeasibleConstraints(
        f"could not satisfy pn constraints after {_MAX_ATTEMPTS} attempts: {last_error[:3]}"
    )


def _eligible_days(config: DatasetConfig) -> list[int]:
    gap_lo, gap_hi = PN_GAP_DAYS
    return [d for d in range(1, config.day_count + 1) if not gap_lo <= d <= gap_hi]


def _day_weight(day: int, config: DatasetConfig) -> int:
    weight = _WEIGHT_WEEKEND if day_weekday(config, day).is_weekend else _WEIGHT_WEEKDAY
    if PN_CRISIS_DAYS[0] <= day <= PN_CRISIS_DAYS[1]:
        weight = weight * _CRISIS_FACTOR_TENTHS // 10
    return weight


def _draw_press_times(rng: random.Random, config: DatasetConfig) -> list[int]:
    days = _eligible_days(config)
    cumulative = list(accumulate(_day_weight(d, config) for d in days))
    total_weight = cumulative[-1]

    def pick_day() -> int:
        return days[bisect_right(cumulative, rng.randrange(total_weight))]

    # (kind, hour) event plan per day; hours iterate in order so the rng
    # stream is a pure function of the seed.
    plan: dict[int, list[tuple[str, int]]] = {d: [] for d in days}
    for hour, budget in enumerate(PN_HOURLY_COUNTS):
        for _ in range(budget):
            plan[pick_day()].append(("obs", hour))
    for _ in range(PN_SINGLE_PRESSES):
        plan[pick_day()].append(("single", rng.randrange(24)))

    local_day_base = (config.start_epoch_day - 1) * MS_PER_DAY
    press_times: list[int] = []
    start_lo = _HOUR_START_MARGIN_MS
    start_hi = MS_PER_HOUR - _MIN_EVENT_SEPARATION_MS
    for day in days:
        events = plan[day]
        if not events:
            continue
        starts = _draw_day_starts(rng, [hour for _, hour in events], start_lo, start_hi)
        day_local_ms = local_day_base + day * MS_PER_DAY
        ordered = sorted(zip(starts, events))
        for start_in_day, (kind, _) in ordered:
            t_utc = day_local_ms + start_in_day - config.utc_offset_ms
            press_times.append(t_utc)
            if kind == "obs":
                press_times.append(t_utc + rng.randint(*PN_PRESS_GAP_MS))
    press_times.sort()
    return press_times


def _draw_day_starts(
    rng: random.Random, hours: list[int], start_lo: int, start_hi: int
) -> list[int]:
    """In-day start offsets, one per event, pairwise >= the separation floor."""
    while True:
        starts = [h * MS_PER_HOUR + rng.randrange(start_lo, start_hi) for h in hours]
        ordered = sorted(starts)
        if all(b - a >= _MIN_EVENT_SEPARATION_MS for a, b in zip(ordered, ordered[1:])):
            return starts


def _draw_annotations(rng: random.Random, config: DatasetConfig) -> list[Annotation]:
    annotations: list[Annotation] = []
    gap_lo, gap_hi = PN_GAP_DAYS
    annotations.append(
        Annotation(
            kind="gap",
            start_utc_ms=day_window_utc(config, gap_lo)[0],
            end_utc_ms=day_window_utc(config, gap_hi)[1],
            label="device outage",
        )
    )

    consult_lo, consult_hi = PN_CONSULT_WEEKS
    session_weeks = [
        w
        for w in _weeks(1, config.day_count)
        if not consult_lo <= w <= consult_hi and _weekday_days_of_week(w, config)
    ]
    # 25 sessions over ten candidate weeks: five weeks of three, five of two.
    # The final, truncated week only has room for two.
    full_weeks = [w for w in session_weeks if len(_weekday_days_of_week(w, config)) >= 3]
    three_weeks = set(rng.sample(sorted(full_weeks), 5))
    for week in session_weeks:
        per_week = 3 if week in three_weeks else 2
        day_pool = _weekday_days_of_week(week, config)
        for day in sorted(rng.sample(day_pool, per_week)):
            start_local = rng.choice((13, 14, 15)) * MS_PER_HOUR + rng.choice((0, 30)) * MS_PER_MINUTE
            start = day_window_utc(config, day)[0] + start_local
            annotations.append(
                Annotation(
                    kind="session",
                    start_utc_ms=start,
                    end_utc_ms=start + 60 * MS_PER_MINUTE,
                    label="therapy session",
                )
            )

    for week in range(consult_lo, consult_hi + 1):
        day_pool = _weekday_days_of_week(week, config)
        for day in sorted(rng.sample(day_pool, rng.choice((1, 2)))):
            start_local = rng.choice((10, 11, 12, 13, 14, 15)) * MS_PER_HOUR
            start = day_window_utc(config, day)[0] + start_local
            annotations.append(
                Annotation(
                    kind="phone_consultation",
                    start_utc_ms=start,
                    end_utc_ms=start + 30 * MS_PER_MINUTE,
                    label="phone consultation",
                )
            )

    annotations.sort(key=lambda a: (a.start_utc_ms, a.kind))
    return annotations


def check_pn(
    presses: list[RawPress],
    annotations: list[Annotation],
    config: DatasetConfig,
) -> list[str]:
    """Verify every contractual property of a pn dataset.

    Returns a list of human-readable problems; empty means the dataset
    conforms. Decoding and statistics go through the decoder and analytics
    modules so this check is independent of how the data was produced.
    """
    problems: list[str] = []
    ordered = sorted(presses, key=lambda p: (p.t_utc_ms, p.seq))
    observations, singles = decode(ordered, config.burst_gap_ms)

    if len(observations) != PN_TOTAL_OBSERVATIONS:
        problems.append(f"expected {PN_TOTAL_OBSERVATIONS} observations, got {len(observations)}")
    if len(singles) != PN_SINGLE_PRESSES:
        problems.append(f"expected {PN_SINGLE_PRESSES} single presses, got {len(singles)}")

    histogram = hourly(observations, config)
    if histogram.counts != PN_HOURLY_COUNTS:
        diffs = [
            f"hour {h}: {got} != {want}"
            for h, (got, want) in enumerate(zip(histogram.counts, PN_HOURLY_COUNTS))
            if got != want
        ]
        problems.append("hourly profile mismatch: " + "; ".join(diffs[:4]))

    by_seq = {(p.device_id, p.seq): p for p in ordered}
    for obs in observations:
        if obs.press_count != 2:
            problems.append(f"observation at {obs.t_utc_ms} has {obs.press_count} presses")
            continue
        if obs.source_seqs is not None:
            device = ordered[0].device_id if ordered else PN_DEVICE_ID
            t1 = by_seq[(device, obs.source_seqs[0])].t_utc_ms
            t2 = by_seq[(device, obs.source_seqs[1])].t_utc_ms
            if not PN_PRESS_GAP_MS[0] <= t2 - t1 <= PN_PRESS_GAP_MS[1]:
                problems.append(f"observation at {obs.t_utc_ms} has press gap {t2 - t1} ms")

    gap_lo, gap_hi = PN_GAP_DAYS
    gap_start = day_window_utc(config, gap_lo)[0]
    gap_end = day_window_utc(config, gap_hi)[1]
    for press in ordered:
        if gap_start <= press.t_utc_ms < gap_end:
            problems.append(f"press at {press.t_utc_ms} falls inside the outage window")
            break
    gaps = [a for a in annotations if a.kind == "gap"]
    if len(gaps) != 1 or gaps[0].start_utc_ms != gap_start or gaps[0].end_utc_ms != gap_end:
        problems.append(f"expected one gap annotation covering days {gap_lo}-{gap_hi}")
    if any(a.kind == "weekend" for a in annotations):
        problems.append("weekend annotations must be derived, not stored")

    counts = daily_counts(observations, config)
    excluded = gap_days(annotations, config)
    weekday_sample = []
    weekend_sample = []
    for day in range(1, config.day_count + 1):
        if day in excluded:
            continue
        (weekend_sample if day_weekday(config, day).is_weekend else weekday_sample).append(counts[day])
    weekday_mean = sum(weekday_sample) / len(weekday_sample)
    weekend_mean = sum(weekend_sample) / len(weekend_sample)
    if weekend_mean > 0 and weekday_mean < 2 * weekend_mean:
        problems.append(
            f"weekday mean {weekday_mean:.2f} is under twice weekend mean {weekend_mean:.2f}"
        )

    comparison = period_compare(observations, annotations, config, PN_BASELINE_DAYS, PN_CRISIS_DAYS)
    if comparison.ratio is None or not 1.0 < comparison.ratio <= 1.5:
        problems.append(f"crisis/baseline rate ratio {comparison.ratio} outside (1.0, 1.5]")

    problems.extend(_check_session_plan(annotations, config))
    return problems


def _check_session_plan(annotations: list[Annotation], config: DatasetConfig) -> list[str]:
    problems: list[str] = []
    consult_lo, consult_hi = PN_CONSULT_WEEKS
    sessions = [a for a in annotations if a.kind == "session"]
    consults = [a for a in annotations if a.kind == "phone_consultation"]

    if len(sessions) != PN_SESSION_COUNT:
        problems.append(f"expected {PN_SESSION_COUNT} sessions, got {len(sessions)}")
    per_week: dict[int, int] = {}
    for session in sessions:
        day = _raw_day_index(session.start_utc_ms, config)
        week = _week_of_day(day)
        if consult_lo <= week <= consult_hi:
            problems.append(f"session on day {day} falls inside consultation weeks")
        if day_weekday(config, day).is_weekend:
            problems.append(f"session on day {day} falls on a weekend")
        per_week[week] = per_week.get(week, 0) + 1
    for week, count in sorted(per_week.items()):
        if not 2 <= count <= 3:
            problems.append(f"week {week} has {count} sessions, expected 2-3")

    if not consults:
        problems.append("expected phone consultations in the pause weeks")
    for consult in consults:
        day = _raw_day_index(consult.start_utc_ms, config)
        week = _week_of_day(day)
        if not consult_lo <= week <= consult_hi:
            problems.append(f"consultation on day {day} outside weeks {consult_lo}-{consult_hi}")
        if day_weekday(config, day).is_weekend:
            problems.append(f"consultation on day {day} falls on a weekend")
    return problems
