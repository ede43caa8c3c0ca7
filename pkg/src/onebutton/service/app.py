"""HTTP facade over the event store: device sync, queries, reports, annotations.

The sync endpoint speaks the wire protocol directly: the request body is the
line-delimited handshake-then-batches encoding, and ingestion is idempotent,
so a client may flush the same queue repeatedly without duplicating presses.
Single-tenant by design; there is no auth.

Wall-clock readings come from an injectable clock so a recorded request
sequence replays to an identical store state.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict
from typing import Callable

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse

from .. import analytics
from ..decoder import decode
from ..model import (
    Annotation,
    DatasetConfig,
    DomainError,
    GapOverlap,
    MalformedBatch,
)
from ..protocol import Hello, SyncBatch, SyncHost, decode_stream
from ..store import EventStore
from .schemas import (
    SCHEMA_VERSION,
    AnnotationOut,
    AnnotationResponse,
    AnnotationsResponse,
    AnnotationIn,
    BandOut,
    BoxStatsOut,
    ConfigOut,
    DailyReportResponse,
    DayOut,
    HourlyReportResponse,
    HourlyRow,
    LocationIn,
    ObservationOut,
    ObservationsResponse,
    PressOut,
    PressesResponse,
    SyncResponse,
    TimelineResponse,
    WeekdayReportResponse,
    WeekdayRow,
)


def _real_clock_ms() -> int:
    return int(time.time() * 1000)


def create_app(
    store: EventStore,
    config: DatasetConfig,
    clock: Callable[[], int] = _real_clock_ms,
) -> FastAPI:
    app = FastAPI(title="onebutton", version="0.1.0")
    host = SyncHost(store)
    device_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
    locks_guard = threading.Lock()

    def device_lock(device_id: str) -> threading.Lock:
        with locks_guard:
            return device_locks[device_id]

    @app.exception_handler(DomainError)
    async def domain_error_handler(_request: Request, exc: DomainError) -> JSONResponse:
        status = 409 if isinstance(exc, GapOverlap) else 400
        return JSONResponse(
            status_code=status,
            content={"schema_version": SCHEMA_VERSION, "error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(HTTPException)
    async def http_error_handler(_request: Request, exc: HTTPException) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status_code,
            content={"schema_version": SCHEMA_VERSION, "error": "http_error", "detail": exc.detail},
        )

    @app.post("/api/devices/{device_id}/sync", response_model=SyncResponse)
    async def sync_device(device_id: str, request: Request) -> SyncResponse:
        raw = (await request.body()).decode("utf-8")
        messages = decode_stream(raw)
        if not messages or not isinstance(messages[0], Hello):
            raise MalformedBatch("sync body must start with a handshake line")
        hello = messages[0]
        if hello.device_id != device_id:
            raise MalformedBatch(
                f"handshake device_id {hello.device_id!r} does not match path {device_id!r}"
            )
        batches = []
        for msg in messages[1:]:
            if not isinstance(msg, SyncBatch):
                raise MalformedBatch("sync body lines after the handshake must be batches")
            if msg.device_id != device_id:
                raise MalformedBatch(
                    f"batch device_id {msg.device_id!r} does not match path {device_id!r}"
                )
            batches.append(msg)
        with device_lock(device_id):
            ack = host.handle_hello(hello, wall_ms=clock())
            new_count = 0
            for batch in batches:
                new, ack = host.handle_batch(batch, wall_ms=clock())
                new_count += len(new)
        return SyncResponse(
            device_id=device_id, acked_through_seq=ack.acked_through_seq, new_presses=new_count
        )

    @app.get("/api/presses", response_model=PressesResponse)
    def get_presses(
        from_ms: int | None = Query(default=None, alias="from"),
        to_ms: int | None = Query(default=None, alias="to"),
        device_id: str | None = None,
    ) -> PressesResponse:
        if device_id is not None and not host.known_device(device_id):
            raise HTTPException(status_code=404, detail=f"unknown device {device_id!r}")
        rows = store.presses(from_ms, to_ms, device_id)
        return PressesResponse(
            presses=[
                PressOut(
                    device_id=p.device_id,
                    seq=p.seq,
                    boot_id=p.boot_id,
                    t_utc_ms=p.t_utc_ms,
                    quality=p.quality,
                )
                for p in rows
            ]
        )

    def _decoded_observations(
        from_ms: int | None, to_ms: int | None, device_id: str | None = None
    ):
        # Decode over the full press history, then window the observations, so
        # a range boundary never splits a burst.
        presses = store.presses(device_id=device_id)
        observations, false_positives = decode(presses, config.burst_gap_ms)
        if from_ms is not None:
            observations = [o for o in observations if o.t_utc_ms >= from_ms]
        if to_ms is not None:
            observations = [o for o in observations if o.t_utc_ms < to_ms]
        return observations, false_positives

    @app.get("/api/observations", response_model=ObservationsResponse)
    def get_observations(
        from_ms: int | None = Query(default=None, alias="from"),
        to_ms: int | None = Query(default=None, alias="to"),
        device_id: str | None = None,
    ) -> ObservationsResponse:
        if device_id is not None and not host.known_device(device_id):
            raise HTTPException(status_code=404, detail=f"unknown device {device_id!r}")
        observations, false_positives = _decoded_observations(from_ms, to_ms, device_id)
        return ObservationsResponse(
            observations=[_obs_out(o) for o in observations],
            false_positives=len(false_positives),
        )

    @app.get("/api/reports/hourly", response_model=HourlyReportResponse)
    def report_hourly(
        from_ms: int | None = Query(default=None, alias="from"),
        to_ms: int | None = Query(default=None, alias="to"),
    ) -> HourlyReportResponse:
        observations, _ = _decoded_observations(from_ms, to_ms)
        histogram = analytics.hourly(observations, config)
        return HourlyReportResponse(
            total=histogram.total,
            rows=[
                HourlyRow(hour=h, count=c, percentage=p)
                for h, (c, p) in enumerate(zip(histogram.counts, histogram.percentages))
            ],
        )

    @app.get("/api/reports/weekday", response_model=WeekdayReportResponse)
    def report_weekday(
        from_ms: int | None = Query(default=None, alias="from"),
        to_ms: int | None = Query(default=None, alias="to"),
    ) -> WeekdayReportResponse:
        observations, _ = _decoded_observations(from_ms, to_ms)
        summary = analytics.weekday_summary(observations, store.annotations(), config)
        rows = []
        for entry in summary.entries:
            stats = entry.stats
            rows.append(
                WeekdayRow(
                    weekday=entry.weekday.label,
                    sample_size=len(entry.sample),
                    stats=BoxStatsOut(
                        n=stats.n,
                        min=stats.min,
                        q1=stats.q1,
                        median=stats.median,
                        q3=stats.q3,
                        max=stats.max,
                        whisker_low=stats.whisker_low,
                        whisker_high=stats.whisker_high,
                        outliers=list(stats.outliers),
                    )
                    if stats
                    else None,
                )
            )
        return WeekdayReportResponse(rows=rows)

    @app.get("/api/reports/daily", response_model=DailyReportResponse)
    def report_daily(
        from_ms: int | None = Query(default=None, alias="from"),
        to_ms: int | None = Query(default=None, alias="to"),
    ) -> DailyReportResponse:
        observations, _ = _decoded_observations(from_ms, to_ms)
        series = analytics.daily_series(observations, store.annotations(), config)
        return DailyReportResponse(
            days=[_day_out(d) for d in series.days],
            bands=[_band_out(b) for b in series.bands],
        )

    @app.get("/api/timeline", response_model=TimelineResponse)
    def timeline() -> TimelineResponse:
        observations, _ = _decoded_observations(None, None)
        series = analytics.daily_series(observations, store.annotations(), config)
        return TimelineResponse(
            config=ConfigOut(
                start_date=config.start_date.isoformat(),
                utc_offset_minutes=config.utc_offset_minutes,
                burst_gap_ms=config.burst_gap_ms,
                day_count=config.day_count,
            ),
            days=[_day_out(d) for d in series.days],
            bands=[_band_out(b) for b in series.bands],
            observations=[_obs_out(o) for o in observations],
        )

    @app.get("/api/annotations", response_model=AnnotationsResponse)
    def get_annotations(
        from_ms: int | None = Query(default=None, alias="from"),
        to_ms: int | None = Query(default=None, alias="to"),
        kind: str | None = None,
    ) -> AnnotationsResponse:
        rows = store.annotations(from_ms, to_ms, kind)
        return AnnotationsResponse(
            annotations=[_annotation_out(i + 1, a) for i, a in enumerate(rows)]
        )

    @app.post("/api/annotations", response_model=AnnotationResponse, status_code=201)
    def post_annotation(body: AnnotationIn) -> AnnotationResponse:
        annotation = Annotation(
            kind=body.kind,
            start_utc_ms=body.start_utc_ms,
            end_utc_ms=body.end_utc_ms,
            label=body.label,
            location=(body.location.lat, body.location.lon) if body.location else None,
        )
        record_id = store.append_annotation(annotation)
        return AnnotationResponse(annotation=_annotation_out(record_id, annotation))

    return app


def _obs_out(o) -> ObservationOut:
    return ObservationOut(t_utc_ms=o.t_utc_ms, press_count=o.press_count, irregular=o.irregular)


def _day_out(d) -> DayOut:
    return DayOut(
        day_index=d.day_index,
        local_date=d.local_date.isoformat(),
        count=d.count,
        excluded=d.excluded,
    )


def _band_out(b) -> BandOut:
    return BandOut(
        kind=b.kind,
        start_day=b.start_day,
        end_day=b.end_day,
        start_utc_ms=b.start_utc_ms,
        end_utc_ms=b.end_utc_ms,
        label=b.label,
    )


def _annotation_out(record_id: int, a: Annotation) -> AnnotationOut:
    return AnnotationOut(
        id=record_id,
        kind=a.kind,
        start_utc_ms=a.start_utc_ms,
        end_utc_ms=a.end_utc_ms,
        label=a.label,
        location=LocationIn(lat=a.location[0], lon=a.location[1]) if a.location else None,
    )
