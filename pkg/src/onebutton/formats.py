"""Interchange and report file formats.

All files are UTF-8 with LF newlines and decimal-integer timestamps. Press
files carry `device_id,seq,boot_id,t_utc_ms,quality` (uptime readings are
protocol-internal and not interchanged); observation files carry
`t_utc_ms,local_date,local_time,press_count,irregular`. Writers are pure
functions of their inputs, so identical data always produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import date, timedelta
from typing import Iterable

from .analytics import (
    BoxStats,
    DailySeries,
    HourlyHistogram,
    PeriodComparison,
    WeekdaySummary,
)
from .model import (
    Annotation,
    DatasetConfig,
    InvalidRecord,
    MS_PER_DAY,
    MS_PER_HOUR,
    MS_PER_MINUTE,
    MS_PER_SECOND,
    Observation,
    RawPress,
    _EPOCH,
)

PRESS_CSV_HEADER = "device_id,seq,boot_id,t_utc_ms,quality"
OBSERVATION_CSV_HEADER = "t_utc_ms,local_date,local_time,press_count,irregular"
HOURLY_CSV_HEADER = "hour,count,percentage"
WEEKDAY_CSV_HEADER = "weekday,min,q1,median,q3,max,whisker_low,whisker_high"
DAILY_CSV_HEADER = "day_index,local_date,count,excluded"
COMPARE_CSV_HEADER = (
    "a_start_day,a_end_day,a_days,a_observations,a_mean_per_day,"
    "b_start_day,b_end_day,b_days,b_observations,b_mean_per_day,ratio"
)


def _csv_writer(buf: io.StringIO) -> "csv.writer":
    return csv.writer(buf, lineterminator="\n")


def press_csv(presses: Iterable[RawPress]) -> str:
    buf = io.StringIO()
    writer = _csv_writer(buf)
    writer.writerow(PRESS_CSV_HEADER.split(","))
    for p in presses:
        writer.writerow([p.device_id, p.seq, p.boot_id, p.t_utc_ms, p.quality])
    return buf.getvalue()


def parse_press_csv(text: str) -> list[RawPress]:
    """Read a press CSV; uptime is not interchanged and reads back as 0."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return []
    if rows[0] != PRESS_CSV_HEADER.split(","):
        raise InvalidRecord(f"unexpected press CSV header: {rows[0]!r}")
    presses = []
    for row in rows[1:]:
        if not row:
            continue
        try:
            presses.append(
                RawPress(
                    device_id=row[0],
                    seq=int(row[1]),
                    boot_id=int(row[2]),
                    uptime_ms=0,
                    t_utc_ms=int(row[3]),
                    quality=row[4],
                )
            )
        except (IndexError, ValueError) as exc:
            raise InvalidRecord(f"bad press CSV row {row!r}: {exc}") from None
    return presses


def press_ndjson(presses: Iterable[RawPress]) -> str:
    lines = []
    for p in presses:
        lines.append(
            json.dumps(
                {
                    "device_id": p.device_id,
                    "seq": p.seq,
                    "boot_id": p.boot_id,
                    "t_utc_ms": p.t_utc_ms,
                    "quality": p.quality,
                },
                separators=(",", ":"),
            )
        )
    return "".join(line + "\n" for line in lines)


def parse_press_ndjson(text: str) -> list[RawPress]:
    presses = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            presses.append(
                RawPress(
                    device_id=obj["device_id"],
                    seq=obj["seq"],
                    boot_id=obj["boot_id"],
                    uptime_ms=0,
                    t_utc_ms=obj["t_utc_ms"],
                    quality=obj["quality"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidRecord(f"bad press record on line {line_no}: {exc}") from None
    return presses


def parse_press_file(text: str) -> list[RawPress]:
    """Sniff CSV vs NDJSON press files by their first non-empty line."""
    for line in text.splitlines():
        if line.strip():
            if line.startswith("device_id,"):
                return parse_press_csv(text)
            return parse_press_ndjson(text)
    return []


def _local_fields(t_utc_ms: int, utc_offset_minutes: int) -> tuple[str, str]:
    local_ms = t_utc_ms + utc_offset_minutes * MS_PER_MINUTE
    epoch_day = local_ms // MS_PER_DAY
    in_day = local_ms - epoch_day * MS_PER_DAY
    d = _EPOCH + timedelta(days=epoch_day)
    hh = in_day // MS_PER_HOUR
    mm = (in_day % MS_PER_HOUR) // MS_PER_MINUTE
    ss = (in_day % MS_PER_MINUTE) // MS_PER_SECOND
    return d.isoformat(), f"{hh:02d}:{mm:02d}:{ss:02d}"


def observation_csv(observations: Iterable[Observation], utc_offset_minutes: int) -> str:
    buf = io.StringIO()
    writer = _csv_writer(buf)
    writer.writerow(OBSERVATION_CSV_HEADER.split(","))
    for o in observations:
        local_date, local_time = _local_fields(o.t_utc_ms, utc_offset_minutes)
        writer.writerow(
            [o.t_utc_ms, local_date, local_time, o.press_count, "true" if o.irregular else "false"]
        )
    return buf.getvalue()


def parse_observation_csv(text: str) -> list[Observation]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return []
    if rows[0] != OBSERVATION_CSV_HEADER.split(","):
        raise InvalidRecord(f"unexpected observation CSV header: {rows[0]!r}")
    observations = []
    for row in rows[1:]:
        if not row:
            continue
        try:
            observations.append(
                Observation(
                    t_utc_ms=int(row[0]),
                    press_count=int(row[3]),
                    irregular=row[4] == "true",
                    source_seqs=None,
                )
            )
        except (IndexError, ValueError) as exc:
            raise InvalidRecord(f"bad observation CSV row {row!r}: {exc}") from None
    return observations


def annotation_ndjson(annotations: Iterable[Annotation]) -> str:
    lines = []
    for a in annotations:
        location = None
        if a.location is not None:
            location = {"lat": a.location[0], "lon": a.location[1]}
        lines.append(
            json.dumps(
                {
                    "kind": a.kind,
                    "start_utc_ms": a.start_utc_ms,
                    "end_utc_ms": a.end_utc_ms,
                    "label": a.label,
                    "location": location,
                },
                separators=(",", ":"),
            )
        )
    return "".join(line + "\n" for line in lines)


def parse_annotation_ndjson(text: str) -> list[Annotation]:
    annotations = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            location = obj.get("location")
            annotations.append(
                Annotation(
                    kind=obj["kind"],
                    start_utc_ms=obj["start_utc_ms"],
                    end_utc_ms=obj["end_utc_ms"],
                    label=obj.get("label"),
                    location=(location["lat"], location["lon"]) if location else None,
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidRecord(f"bad annotation on line {line_no}: {exc}") from None
    return annotations


def dataset_config_json(config: DatasetConfig, extra: dict | None = None) -> str:
    """Stable JSON form of a dataset config, optionally with provenance keys."""
    obj = {
        "start_date": config.start_date.isoformat(),
        "utc_offset_minutes": config.utc_offset_minutes,
        "burst_gap_ms": config.burst_gap_ms,
        "day_count": config.day_count,
    }
    if extra:
        obj.update(extra)
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def parse_dataset_config(text: str) -> DatasetConfig:
    try:
        obj = json.loads(text)
        return DatasetConfig(
            start_date=date.fromisoformat(obj["start_date"]),
            utc_offset_minutes=obj["utc_offset_minutes"],
            burst_gap_ms=obj["burst_gap_ms"],
            day_count=obj["day_count"],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InvalidRecord(f"bad dataset config: {exc}") from None


# -- report files -----------------------------------------------------------


def hourly_csv(histogram: HourlyHistogram) -> str:
    buf = io.StringIO()
    writer = _csv_writer(buf)
    writer.writerow(HOURLY_CSV_HEADER.split(","))
    for hour, (count, pct) in enumerate(zip(histogram.counts, histogram.percentages)):
        writer.writerow([hour, count, f"{pct:.1f}"])
    return buf.getvalue()


def _stat(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def weekday_csv(summary: WeekdaySummary) -> str:
    buf = io.StringIO()
    writer = _csv_writer(buf)
    writer.writerow(WEEKDAY_CSV_HEADER.split(","))
    for entry in summary.entries:
        stats = entry.stats
        if stats is None:
            writer.writerow([entry.weekday.label] + [""] * 7)
        else:
            writer.writerow(
                [
                    entry.weekday.label,
                    _stat(stats.min),
                    _stat(stats.q1),
                    _stat(stats.median),
                    _stat(stats.q3),
                    _stat(stats.max),
                    _stat(stats.whisker_low),
                    _stat(stats.whisker_high),
                ]
            )
    return buf.getvalue()


def daily_csv(series: DailySeries) -> str:
    buf = io.StringIO()
    writer = _csv_writer(buf)
    writer.writerow(DAILY_CSV_HEADER.split(","))
    for day in series.days:
        writer.writerow(
            [day.day_index, day.local_date.isoformat(), day.count, "true" if day.excluded else "false"]
        )
    return buf.getvalue()


def compare_csv(cmp: PeriodComparison) -> str:
    buf = io.StringIO()
    writer = _csv_writer(buf)
    writer.writerow(COMPARE_CSV_HEADER.split(","))
    writer.writerow(
        [
            cmp.a.start_day,
            cmp.a.end_day,
            cmp.a.days_counted,
            cmp.a.observations,
            f"{cmp.a.mean_per_day:.4f}",
            cmp.b.start_day,
            cmp.b.end_day,
            cmp.b.days_counted,
            cmp.b.observations,
            f"{cmp.b.mean_per_day:.4f}",
            "undefined" if cmp.ratio is None else f"{cmp.ratio:.4f}",
        ]
    )
    return buf.getvalue()


# -- aligned-text report tables ----------------------------------------------


def hourly_table(histogram: HourlyHistogram, bar_width: int = 40) -> str:
    """Human-readable hourly table with a proportional bar per hour."""
    peak = max(histogram.counts) if any(histogram.counts) else 1
    lines = [f"{'hour':>4}  {'count':>5}  {'pct':>5}  distribution"]
    for hour, (count, pct) in enumerate(zip(histogram.counts, histogram.percentages)):
        bar = "#" * round(bar_width * count / peak) if peak else ""
        lines.append(f"{hour:>4}  {count:>5}  {pct:>5.1f}  {bar}")
    lines.append(f"total {histogram.total}")
    return "".join(line + "\n" for line in lines)


def weekday_table(summary: WeekdaySummary) -> str:
    header = f"{'day':>3}  {'n':>3}  {'min':>6}  {'q1':>6}  {'med':>6}  {'q3':>6}  {'max':>6}  {'wlow':>6}  {'whigh':>6}"
    lines = [header]
    for entry in summary.entries:
        stats = entry.stats
        if stats is None:
            lines.append(f"{entry.weekday.label:>3}  {0:>3}" + "  " + "  ".join([f"{'-':>6}"] * 7))
        else:
            lines.append(
                f"{entry.weekday.label:>3}  {stats.n:>3}  "
                f"{_stat(stats.min):>6}  {_stat(stats.q1):>6}  {_stat(stats.median):>6}  "
                f"{_stat(stats.q3):>6}  {_stat(stats.max):>6}  "
                f"{_stat(stats.whisker_low):>6}  {_stat(stats.whisker_high):>6}"
            )
    return "".join(line + "\n" for line in lines)


def daily_table(series: DailySeries) -> str:
    lines = [f"{'day':>4}  {'date':>10}  {'count':>5}  flags"]
    band_kinds: dict[int, list[str]] = {}
    for band in series.bands:
        for day in range(band.start_day, band.end_day + 1):
            band_kinds.setdefault(day, []).append(band.kind)
    for day in series.days:
        flags = []
        if day.excluded:
            flags.append("excluded")
        flags.extend(sorted(set(band_kinds.get(day.day_index, [])) - {"gap"}))
        lines.append(
            f"{day.day_index:>4}  {day.local_date.isoformat():>10}  {day.count:>5}  {','.join(flags)}"
        )
    return "".join(line + "\n" for line in lines)


def compare_table(cmp: PeriodComparison) -> str:
    lines = [
        f"{'period':>8}  {'days':>4}  {'obs':>5}  {'mean/day':>8}",
        f"{f'{cmp.a.start_day}:{cmp.a.end_day}':>8}  {cmp.a.days_counted:>4}  {cmp.a.observations:>5}  {cmp.a.mean_per_day:>8.4f}",
        f"{f'{cmp.b.start_day}:{cmp.b.end_day}':>8}  {cmp.b.days_counted:>4}  {cmp.b.observations:>5}  {cmp.b.mean_per_day:>8.4f}",
        f"ratio (b/a): {'undefined' if cmp.ratio is None else f'{cmp.ratio:.4f}'}",
    ]
    return "".join(line + "\n" for line in lines)
