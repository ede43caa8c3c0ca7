"""Operator command line: simulate, decode, report, export/import, serve.

Subcommands operate on plain files and a dataset directory layout:

    config.json        dataset parameters (written by simulate)
    store.ndjson       append-only event store log
    presses.csv        press export (device_id,seq,boot_id,t_utc_ms,quality)
    annotations.ndjson annotation export
    observations.csv   decoder output (written by decode)

Exit codes: 0 success, 1 usage error, 2 data error. All output is a pure
function of flags plus seed.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from pathlib import Path

import click

from . import formats, scenario
from .analytics import daily_series, hourly, period_compare, weekday_summary
from .decoder import decode as decode_presses
from .device import ButtonDevice
from .link import LinkSchedule, run_session
from .model import DatasetConfig, DomainError, MS_PER_DAY, MS_PER_HOUR, day_window_utc
from .protocol import SyncHost
from .store import EventStore

CONFIG_FILE = "config.json"
STORE_FILE = "store.ndjson"
PRESS_FILE = "presses.csv"
ANNOTATION_FILE = "annotations.ndjson"
OBSERVATION_FILE = "observations.csv"


@click.group()
def cli() -> None:
    """One-button self-tracking pipeline."""


@cli.command()
@click.option("--scenario", "scenario_name", type=click.Choice([scenario.PN_SCENARIO]), required=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--capacity", type=int, default=4096, show_default=True, help="Device buffer capacity.")
@click.option("--drop-rate", type=float, default=0.05, show_default=True, help="Per-message link drop probability.")
def simulate(scenario_name: str, seed: int, out_dir: Path, capacity: int, drop_rate: float) -> None:
    """Generate a scenario and replay it through the sync link into a store."""
    case = scenario.generate_pn(seed)
    config = case.config

    out_dir.mkdir(parents=True, exist_ok=True)
    store_path = out_dir / STORE_FILE
    if store_path.exists():
        store_path.unlink()

    with EventStore(store_path) as store:
        host = SyncHost(store)
        day1_start = day_window_utc(config, 1)[0]
        horizon = day_window_utc(config, config.day_count)[1]
        boot_ms = day1_start - MS_PER_HOUR
        device = ButtonDevice(case.device_id, boot_true_ms=boot_ms, capacity=capacity, drift_ppm=0)
        schedule = LinkSchedule.random(
            f"link:{seed}",
            horizon,
            start_ms=boot_ms,
            up_range_ms=(2 * MS_PER_HOUR, 10 * MS_PER_HOUR),
            down_range_ms=(15 * 60_000, 4 * MS_PER_HOUR),
            drop_prob=drop_rate,
            latency_range=(0, 0),
            tail_ms=2 * MS_PER_DAY,
        )
        run_session(
            device,
            host,
            list(case.press_times_utc),
            schedule,
            seed=f"session:{seed}",
            until_ms=horizon + 2 * MS_PER_DAY,
        )
        if device.buffered_count:
            raise DomainError(f"simulation ended with {device.buffered_count} presses unsynced")
        for annotation in case.annotations:
            store.append_annotation(annotation)

        (out_dir / CONFIG_FILE).write_text(
            formats.dataset_config_json(config, {"scenario": scenario_name, "seed": seed}),
            encoding="utf-8",
        )
        (out_dir / PRESS_FILE).write_text(store.export_presses("csv"), encoding="utf-8")
        (out_dir / ANNOTATION_FILE).write_text(
            formats.annotation_ndjson(store.annotations()), encoding="utf-8"
        )
        click.echo(
            f"scenario={scenario_name} seed={seed} presses={store.press_count} "
            f"annotations={len(store.annotations())} out={out_dir}"
        )


def _load_config(path: Path | None, utc_offset: int | None) -> DatasetConfig:
    if path is not None and path.exists():
        config = formats.parse_dataset_config(path.read_text(encoding="utf-8"))
    else:
        from datetime import date

        config = DatasetConfig(start_date=date(1970, 1, 1))
    if utc_offset is not None:
        config = dataclasses.replace(config, utc_offset_minutes=utc_offset)
    return config


@cli.command("decode")
@click.option("--dataset", type=click.Path(path_type=Path), default=None, help="Dataset directory with default file names.")
@click.option("--in", "in_file", type=click.Path(path_type=Path), default=None, help="Press file (CSV or NDJSON).")
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None, help="Observation CSV to write.")
@click.option("--config", "config_file", type=click.Path(path_type=Path), default=None)
@click.option("--burst-gap-ms", type=int, default=None, help="Burst window override.")
@click.option("--utc-offset", type=int, default=None, help="UTC offset minutes override.")
def decode_cmd(
    dataset: Path | None,
    in_file: Path | None,
    out_file: Path | None,
    config_file: Path | None,
    burst_gap_ms: int | None,
    utc_offset: int | None,
) -> None:
    """Decode a press file into an observation file."""
    if dataset is not None:
        in_file = in_file or dataset / PRESS_FILE
        out_file = out_file or dataset / OBSERVATION_FILE
        config_file = config_file or dataset / CONFIG_FILE
    if in_file is None or out_file is None:
        raise click.UsageError("decode needs --dataset or both --in and --out")
    config = _load_config(config_file, utc_offset)
    gap = burst_gap_ms if burst_gap_ms is not None else config.burst_gap_ms

    presses = formats.parse_press_file(in_file.read_text(encoding="utf-8"))
    presses.sort(key=lambda p: (p.t_utc_ms, p.seq))
    observations, false_positives = decode_presses(presses, gap)
    out_file.write_text(
        formats.observation_csv(observations, config.utc_offset_minutes), encoding="utf-8"
    )
    click.echo(f"observations={len(observations)} false_positives={len(false_positives)}")


def _report_inputs(
    dataset: Path | None,
    obs_file: Path | None,
    ann_file: Path | None,
    config_file: Path | None,
    utc_offset: int | None,
    from_ms: int | None,
    to_ms: int | None,
):
    if dataset is not None:
        obs_file = obs_file or dataset / OBSERVATION_FILE
        ann_file = ann_file or dataset / ANNOTATION_FILE
        config_file = config_file or dataset / CONFIG_FILE
    if obs_file is None:
        raise click.UsageError("report needs --dataset or --obs")
    config = _load_config(config_file, utc_offset)
    observations = formats.parse_observation_csv(obs_file.read_text(encoding="utf-8"))
    if from_ms is not None:
        observations = [o for o in observations if o.t_utc_ms >= from_ms]
    if to_ms is not None:
        observations = [o for o in observations if o.t_utc_ms < to_ms]
    annotations = []
    if ann_file is not None and ann_file.exists():
        annotations = formats.parse_annotation_ndjson(ann_file.read_text(encoding="utf-8"))
    return observations, annotations, config


def _emit(text: str, out_file: Path | None) -> None:
    if out_file is None:
        click.echo(text, nl=False)
    else:
        out_file.write_text(text, encoding="utf-8")


def _report_options(fn):
    fn = click.option("--dataset", type=click.Path(path_type=Path), default=None)(fn)
    fn = click.option("--obs", "obs_file", type=click.Path(path_type=Path), default=None)(fn)
    fn = click.option("--ann", "ann_file", type=click.Path(path_type=Path), default=None)(fn)
    fn = click.option("--config", "config_file", type=click.Path(path_type=Path), default=None)(fn)
    fn = click.option("--from", "from_ms", type=int, default=None, help="Window start, epoch ms (inclusive).")(fn)
    fn = click.option("--to", "to_ms", type=int, default=None, help="Window end, epoch ms (exclusive).")(fn)
    fn = click.option("--utc-offset", type=int, default=None)(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "table"]), default="csv", show_default=True)(fn)
    fn = click.option("--out", "out_file", type=click.Path(path_type=Path), default=None)(fn)
    return fn


@cli.group()
def report() -> None:
    """Analytics reports over a decoded dataset."""


@report.command("hourly")
@_report_options
def report_hourly(dataset, obs_file, ann_file, config_file, from_ms, to_ms, utc_offset, fmt, out_file) -> None:
    observations, _, config = _report_inputs(
        dataset, obs_file, ann_file, config_file, utc_offset, from_ms, to_ms
    )
    histogram = hourly(observations, config)
    text = formats.hourly_csv(histogram) if fmt == "csv" else formats.hourly_table(histogram)
    _emit(text, out_file)


@report.command("weekday")
@_report_options
def report_weekday(dataset, obs_file, ann_file, config_file, from_ms, to_ms, utc_offset, fmt, out_file) -> None:
    observations, annotations, config = _report_inputs(
        dataset, obs_file, ann_file, config_file, utc_offset, from_ms, to_ms
    )
    summary = weekday_summary(observations, annotations, config)
    text = formats.weekday_csv(summary) if fmt == "csv" else formats.weekday_table(summary)
    _emit(text, out_file)


@report.command("daily")
@_report_options
def report_daily(dataset, obs_file, ann_file, config_file, from_ms, to_ms, utc_offset, fmt, out_file) -> None:
    observations, annotations, config = _report_inputs(
        dataset, obs_file, ann_file, config_file, utc_offset, from_ms, to_ms
    )
    series = daily_series(observations, annotations, config)
    text = formats.daily_csv(series) if fmt == "csv" else formats.daily_table(series)
    _emit(text, out_file)


def _parse_period(value: str) -> tuple[int, int]:
    try:
        start, end = value.split(":")
        return int(start), int(end)
    except ValueError:
        raise click.UsageError(f"period must look like START:END, got {value!r}") from None


@report.command("compare")
@click.option("--a", "period_a", required=True, help="Base period as day range START:END.")
@click.option("--b", "period_b", required=True, help="Comparison period as day range START:END.")
@_report_options
def report_compare(period_a, period_b, dataset, obs_file, ann_file, config_file, from_ms, to_ms, utc_offset, fmt, out_file) -> None:
    observations, annotations, config = _report_inputs(
        dataset, obs_file, ann_file, config_file, utc_offset, from_ms, to_ms
    )
    comparison = period_compare(
        observations, annotations, config, _parse_period(period_a), _parse_period(period_b)
    )
    text = formats.compare_csv(comparison) if fmt == "csv" else formats.compare_table(comparison)
    _emit(text, out_file)


@cli.command("export")
@click.option("--store", "store_file", type=click.Path(path_type=Path), required=True)
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "ndjson"]), default="csv", show_default=True)
@click.option("--from", "from_ms", type=int, default=None)
@click.option("--to", "to_ms", type=int, default=None)
def export_cmd(store_file: Path, out_file: Path | None, fmt: str, from_ms, to_ms) -> None:
    """Export presses from a store file."""
    with EventStore(store_file) as store:
        text = store.export_presses(fmt, from_ms, to_ms)
    _emit(text, out_file)


@cli.command("import")
@click.option("--store", "store_file", type=click.Path(path_type=Path), required=True)
@click.option("--in", "in_file", type=click.Path(path_type=Path), required=True)
def import_cmd(store_file: Path, in_file: Path) -> None:
    """Import a press file into a store file; duplicates are no-ops."""
    presses = formats.parse_press_file(in_file.read_text(encoding="utf-8"))
    with EventStore(store_file) as store:
        before = store.press_count
        store.append_presses(presses)
        click.echo(f"imported={store.press_count - before} skipped={len(presses) - (store.press_count - before)}")


@cli.command("serve")
@click.option("--dataset", type=click.Path(path_type=Path), default=None)
@click.option("--store", "store_file", type=click.Path(path_type=Path), default=None)
@click.option("--config", "config_file", type=click.Path(path_type=Path), default=None)
@click.option("--port", type=int, default=None, help="Defaults to OBS_PORT or 8000.")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(dataset: Path | None, store_file: Path | None, config_file: Path | None, port: int | None, host: str) -> None:
    """Run the HTTP service over a store."""
    import uvicorn

    from .service import create_app

    if dataset is not None:
        store_file = store_file or dataset / STORE_FILE
        config_file = config_file or dataset / CONFIG_FILE
    if store_file is None:
        raise click.UsageError("serve needs --dataset or --store")
    if port is None:
        port = int(os.environ.get("OBS_PORT", "8000"))
    config = _load_config(config_file, None)
    store = EventStore(store_file)
    app = create_app(store, config)
    try:
        uvicorn.run(app, host=host, port=port)
    finally:
        store.close()


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DomainError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
