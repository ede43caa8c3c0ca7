"""Event-stream analytics: hourly histogram, weekday box statistics, daily series.

Days covered by a gap annotation are excluded from samples and means rather
than counted as zero, since an instrumentation outage says nothing about the
phenomenon. Quartiles are Tukey hinges (the median joins both halves for odd
sample sizes); whiskers reach the most extreme samples within 1.5 IQR of the
hinges.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from .model import (
    Annotation,
    DatasetConfig,
    EmptyPeriod,
    MS_PER_DAY,
    Observation,
    Weekday,
    _raw_day_index,
    day_local_date,
    day_weekday,
    day_window_utc,
    local_hour,
)

HOURS = 24
WHISKER_IQR_FACTOR = 1.5

BAND_KINDS = ("weekend", "session", "phone_consultation", "gap")


def round_percentage_tenths(count: int, total: int) -> int:
    """Share of total in tenths of a percent, rounded half away from zero.

    Pure integer arithmetic so the same counts always produce the same
    percentage, and re-deriving percentages from exported counts is exact.
    """
    if count < 0 or total < 0:
        raise ValueError("counts must be non-negative")
    if total == 0:
        return 0
    return (2_000 * count + total) // (2 * total)


@dataclass(frozen=True, slots=True)
class HourlyHistogram:
    counts: tuple[int, ...]
    percentages: tuple[float, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def hourly(observations: list[Observation], config: DatasetConfig) -> HourlyHistogram:
    """Observation counts per local hour plus one-decimal percentages."""
    counts = [0] * HOURS
    for obs in observations:
        counts[local_hour(obs.t_utc_ms, config.utc_offset_minutes)] += 1
    total = sum(counts)
    percentages = tuple(round_percentage_tenths(c, total) / 10.0 for c in counts)
    return HourlyHistogram(counts=tuple(counts), percentages=percentages)


def tukey_hinges(sample: list[float]) -> tuple[float, float, float]:
    """(Q1, median, Q3) as Tukey hinges.

    The lower/upper halves are medians of the sorted sample's halves, with the
    middle element included in both halves when the size is odd.
    """
    if not sample:
        raise ValueError("sample must be non-empty")
    xs = sorted(sample)
    n = len(xs)
    lower = xs[: (n + 1) // 2]
    upper = xs[n // 2 :]
    return _median(lower), _median(xs), _median(upper)


def _median(xs: list[float]) -> float:
    n = len(xs)
    mid = n // 2
    if n % 2:
        return xs[mid]
    return (xs[mid - 1] + xs[mid]) / 2


@dataclass(frozen=True, slots=True)
class BoxStats:
    """Five-number summary with 1.5 IQR whiskers and outliers."""

    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def box_stats(sample: list[float]) -> BoxStats:
    """Box-and-whisker statistics of one sample (Tukey hinges, 1.5 IQR fences)."""
    if not sample:
        raise ValueError("sample must be non-empty")
    xs = sorted(sample)
    q1, med, q3 = tukey_hinges(xs)
    iqr = q3 - q1
    low_fence = q1 - WHISKER_IQR_FACTOR * iqr
    high_fence = q3 + WHISKER_IQR_FACTOR * iqr
    inside = [x for x in xs if low_fence <= x <= high_fence]
    # Hinges always lie within the fences, so inside is never empty.
    whisker_low = inside[0]
    whisker_high = inside[-1]
    outliers = tuple(x for x in xs if x < whisker_low or x > whisker_high)
    return BoxStats(
        n=len(xs),
        min=xs[0],
        q1=q1,
        median=med,
        q3=q3,
        max=xs[-1],
        whisker_low=whisker_low,
        whisker_high=whisker_high,
        outliers=outliers,
    )


def gap_days(annotations: list[Annotation], config: DatasetConfig) -> set[int]:
    """Day indexes (1..day_count) overlapped by any gap annotation."""
    days: set[int] = set()
    for ann in annotations:
        if ann.kind != "gap" or ann.start_utc_ms == ann.end_utc_ms:
            continue
        first = max(1, _raw_day_index(ann.start_utc_ms, config))
        last = min(config.day_count, _raw_day_index(ann.end_utc_ms - 1, config))
        days.update(range(first, last + 1))
    return days


def daily_counts(observations: list[Observation], config: DatasetConfig) -> dict[int, int]:
    """Observation count per day index over the study window 1..day_count."""
    counts = {day: 0 for day in range(1, config.day_count + 1)}
    for obs in observations:
        day = _raw_day_index(obs.t_utc_ms, config)
        if 1 <= day <= config.day_count:
            counts[day] += 1
    return counts


@dataclass(frozen=True, slots=True)
class WeekdayStats:
    weekday: Weekday
    sample: tuple[int, ...]
    stats: BoxStats | None


@dataclass(frozen=True, slots=True)
class WeekdaySummary:
    entries: tuple[WeekdayStats, ...]

    def for_weekday(self, weekday: Weekday) -> WeekdayStats:
        return self.entries[weekday.value]


def weekday_summary(
    observations: list[Observation],
    annotations: list[Annotation],
    config: DatasetConfig,
) -> WeekdaySummary:
    """Per-weekday box statistics over daily observation counts.

    The sample for a weekday is the daily count of every non-gap day of the
    study window falling on that weekday.
    """
    counts = daily_counts(observations, config)
    excluded = gap_days(annotations, config)
    samples: dict[Weekday, list[int]] = {wd: [] for wd in Weekday}
    for day in range(1, config.day_count + 1):
        if day in excluded:
            continue
        samples[day_weekday(config, day)].append(counts[day])
    entries = tuple(
        WeekdayStats(
            weekday=wd,
            sample=tuple(samples[wd]),
            stats=box_stats(samples[wd]) if samples[wd] else None,
        )
        for wd in Weekday
    )
    return WeekdaySummary(entries=entries)


@dataclass(frozen=True, slots=True)
class DayCount:
    day_index: int
    local_date: date
    count: int
    excluded: bool


@dataclass(frozen=True, slots=True)
class Band:
    """A highlighted day range on the timeline, end-inclusive in days."""

    kind: str
    start_day: int
    end_day: int
    start_utc_ms: int
    end_utc_ms: int
    label: str | None = None


@dataclass(frozen=True, slots=True)
class DailySeries:
    days: tuple[DayCount, ...]
    bands: tuple[Band, ...]


def weekend_bands(config: DatasetConfig) -> list[Band]:
    """Derived Saturday/Sunday bands over the study window."""
    bands: list[Band] = []
    run_start: int | None = None
    for day in range(1, config.day_count + 2):
        in_window = day <= config.day_count
        is_weekend = in_window and day_weekday(config, day).is_weekend
        if is_weekend and run_start is None:
            run_start = day
        elif not is_weekend and run_start is not None:
            bands.append(_day_band("weekend", run_start, day - 1, config))
            run_start = None
    return bands


def _day_band(kind: str, start_day: int, end_day: int, config: DatasetConfig, label: str | None = None) -> Band:
    return Band(
        kind=kind,
        start_day=start_day,
        end_day=end_day,
        start_utc_ms=day_window_utc(config, start_day)[0],
        end_utc_ms=day_window_utc(config, end_day)[1],
        label=label,
    )


def annotation_bands(annotations: list[Annotation], config: DatasetConfig) -> list[Band]:
    """Session/consultation/gap annotations as clamped day-range bands."""
    bands: list[Band] = []
    window_end = day_window_utc(config, config.day_count)[1]
    for ann in annotations:
        if ann.kind not in ("session", "phone_consultation", "gap"):
            continue
        if ann.end_utc_ms <= day_window_utc(config, 1)[0] or ann.start_utc_ms >= window_end:
            continue
        start_day = max(1, _raw_day_index(ann.start_utc_ms, config))
        last_ms = max(ann.start_utc_ms, ann.end_utc_ms - 1)
        end_day = min(config.day_count, _raw_day_index(last_ms, config))
        bands.append(
            Band(
                kind=ann.kind,
                start_day=start_day,
                end_day=end_day,
                start_utc_ms=ann.start_utc_ms,
                end_utc_ms=ann.end_utc_ms,
                label=ann.label,
            )
        )
    return bands


def daily_series(
    observations: list[Observation],
    annotations: list[Annotation],
    config: DatasetConfig,
) -> DailySeries:
    """Per-day observation counts with weekend/session/consultation/gap bands."""
    counts = daily_counts(observations, config)
    excluded = gap_days(annotations, config)
    days = tuple(
        DayCount(
            day_index=day,
            local_date=day_local_date(config, day),
            count=counts[day],
            excluded=day in excluded,
        )
        for day in range(1, config.day_count + 1)
    )
    bands = weekend_bands(config) + annotation_bands(annotations, config)
    bands.sort(key=lambda b: (b.start_day, b.end_day, b.kind, b.start_utc_ms))
    return DailySeries(days=days, bands=tuple(bands))


@dataclass(frozen=True, slots=True)
class PeriodStats:
    start_day: int
    end_day: int
    days_counted: int
    observations: int
    mean_per_day: float


@dataclass(frozen=True, slots=True)
class PeriodComparison:
    a: PeriodStats
    b: PeriodStats
    ratio: float | None  # mean_b / mean_a; None when undefined (mean_a == 0, mean_b > 0)


def period_compare(
    observations: list[Observation],
    annotations: list[Annotation],
    config: DatasetConfig,
    period_a: tuple[int, int],
    period_b: tuple[int, int],
) -> PeriodComparison:
    """Mean observations per day for two day-index periods plus their ratio.

    Periods are inclusive day ranges. Gap-covered days do not count toward
    either denominator. A zero-rate base period makes the ratio undefined
    (None) unless both rates are zero, which compares as 1.0.
    """
    counts = daily_counts(observations, config)
    excluded = gap_days(annotations, config)
    a = _period_stats(period_a, counts, excluded, config)
    b = _period_stats(period_b, counts, excluded, config)
    if a.mean_per_day == 0:
        ratio = 1.0 if b.mean_per_day == 0 else None
    else:
        ratio = b.mean_per_day / a.mean_per_day
    return PeriodComparison(a=a, b=b, ratio=ratio)


def _period_stats(
    period: tuple[int, int],
    counts: dict[int, int],
    excluded: set[int],
    config: DatasetConfig,
) -> PeriodStats:
    start, end = period
    if start > end or start < 1 or end > config.day_count:
        raise EmptyPeriod(f"period {start}..{end} is outside days 1..{config.day_count}")
    days = [d for d in range(start, end + 1) if d not in excluded]
    if not days:
        raise EmptyPeriod(f"period {start}..{end} has no countable days")
    total = sum(counts[d] for d in days)
    return PeriodStats(
        start_day=start,
        end_day=end,
        days_counted=len(days),
        observations=total,
        mean_per_day=total / len(days),
    )
