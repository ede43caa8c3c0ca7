"""Pydantic request/response models for the HTTP facade.

Every response body carries ``schema_version`` so clients can detect contract
drift.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class ApiModel(BaseModel):
    schema_version: int = SCHEMA_VERSION


class SyncResponse(ApiModel):
    device_id: str
    acked_through_seq: int
    new_presses: int


class PressOut(BaseModel):
    device_id: str
    seq: int
    boot_id: int
    t_utc_ms: int
    quality: str


class PressesResponse(ApiModel):
    presses: list[PressOut]


class ObservationOut(BaseModel):
    t_utc_ms: int
    press_count: int
    irregular: bool


class ObservationsResponse(ApiModel):
    observations: list[ObservationOut]
    false_positives: int


class AnnotationIn(BaseModel):
    kind: str
    start_utc_ms: int
    end_utc_ms: int
    label: str | None = None
    location: LocationIn | None = None


class LocationIn(BaseModel):
    lat: float
    lon: float


class AnnotationOut(BaseModel):
    id: int
    kind: str
    start_utc_ms: int
    end_utc_ms: int
    label: str | None = None
    location: LocationIn | None = None


class AnnotationResponse(ApiModel):
    annotation: AnnotationOut


class AnnotationsResponse(ApiModel):
    annotations: list[AnnotationOut]


class HourlyRow(BaseModel):
    hour: int
    count: int
    percentage: float


class HourlyReportResponse(ApiModel):
    total: int
    rows: list[HourlyRow]


class BoxStatsOut(BaseModel):
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: list[float]


class WeekdayRow(BaseModel):
    weekday: str
    sample_size: int
    stats: BoxStatsOut | None = None


class WeekdayReportResponse(ApiModel):
    rows: list[WeekdayRow]


class DayOut(BaseModel):
    day_index: int
    local_date: str
    count: int
    excluded: bool


class BandOut(BaseModel):
    kind: str
    start_day: int
    end_day: int
    start_utc_ms: int
    end_utc_ms: int
    label: str | None = None


class DailyReportResponse(ApiModel):
    days: list[DayOut]
    bands: list[BandOut]


class ConfigOut(BaseModel):
    start_date: str
    utc_offset_minutes: int
    burst_gap_ms: int
    day_count: int


class TimelineResponse(ApiModel):
    config: ConfigOut
    days: list[DayOut]
    bands: list[BandOut]
    observations: list[ObservationOut]


AnnotationIn.model_rebuild()
