"""The `edf` command line: simulate, ingest, train, evaluate, replay, serve."""

from __future__ import annotations

import json
import time
from datetime import datetime
from pathlib import Path

import click

from . import forecaster, simulator
from .config import ServiceConfig
from .records import EventStore, parse_timestamp, write_records_csv
from .service import load_service
from .timeseries import TICK, build_frame


def _config(ctx) -> ServiceConfig:
    return ctx.obj


def _parse_span(span: str) -> tuple[datetime, datetime]:
    try:
        a, b = span.split("..")
        return _parse_date(a), _parse_date(b)
    except ValueError:
        raise click.BadParameter("span must look like 2014-01-01..2018-01-01")


def _parse_date(text: str) -> datetime:
    text = text.strip()
    if "T" in text:
        return parse_timestamp(text)
    return datetime.strptime(text, "%Y-%m-%d")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON/TOML config file; defaults to ./edf-data with defaults")
@click.option("--data-dir", type=click.Path(), default=None,
              help="override the data directory")
@click.pass_context
def main(ctx, config_path, data_dir):
    if config_path:
        cfg = ServiceConfig.load(config_path)
    else:
        cfg = ServiceConfig()
    if data_dir:
        cfg.data_dir = Path(data_dir)
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    ctx.obj = cfg


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.pass_context
def ingest(ctx, source):
    """Ingest a CSV/JSONL encounter file into the event store."""
    store = EventStore(_config(ctx).events_path)
    report = store.ingest(source)
    click.echo(json.dumps(report.as_dict(), indent=2))


@main.command()
@click.option("--profile", "profile_path", type=click.Path(exists=True), default=None,
              help="SimProfile JSON; defaults to the documented default profile")
@click.option("--span", required=True, help="generation span, e.g. 2014-01-01..2018-01-01")
@click.option("--seed", type=int, default=None,
              help="override the profile's seed (default profile: 0)")
@click.option("--out", type=click.Path(), default=None,
              help="output CSV (default: <data-dir>/simulated.csv)")
@click.pass_context
def simulate(ctx, profile_path, span, seed, out):
    """Generate a synthetic encounter stream."""
    start, end = _parse_span(span)
    if profile_path:
        profile = simulator.SimProfile.load(profile_path)
        if seed is not None:
            profile = simulator.shifted(profile, 1.0, seed=seed)
    else:
        profile = simulator.default_profile(0 if seed is None else seed)
    records = simulator.generate(profile, start, end)
    out = Path(out) if out else _config(ctx).data_dir / "simulated.csv"
    n = write_records_csv(records, out)
    click.echo(f"wrote {n} encounters to {out}")


@main.command()
@click.option("--split", required=True, help="train/test split date, e.g. 2017-11-01")
@click.option("--targets", default=None,
              help="comma-separated target keys (default: all 12)")
@click.option("--families", default=",".join(forecaster.FAMILIES), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def train(ctx, split, targets, families, seed):
    """Train the model grid on the ingested events and freeze test metrics."""
    cfg = _config(ctx)
    store = EventStore(cfg.events_path)
    snap = store.snapshot()
    if len(snap) == 0:
        raise click.ClickException("event store is empty; run `edf ingest` first")
    start = snap.epoch
    end_ts = max(r.arrival_time for r in snap.records)
    end = start + ((end_ts - start) // TICK) * TICK
    frame = build_frame(snap, start, end)
    target_list = None
    if targets:
        target_list = [forecaster.TargetSpec.from_key(k.strip()) for k in targets.split(",")]
    grid = forecaster.train_all(
        frame,
        _parse_date(split),
        targets=target_list,
        families=tuple(f.strip() for f in families.split(",")),
        seed=seed,
    )
    cfg.bundle_path.parent.mkdir(parents=True, exist_ok=True)
    cfg.bundle_path.write_text(grid.to_json())
    click.echo(f"trained {len(grid.entries)} entries -> {cfg.bundle_path}")
    click.echo(forecaster.render_report(forecaster.evaluation_report(grid)))


@main.command()
@click.option("--out", type=click.Path(), default=None, help="also write the JSON report here")
@click.pass_context
def evaluate(ctx, out):
    """Print the frozen test metrics of the trained grid."""
    cfg = _config(ctx)
    if not cfg.bundle_path.exists():
        raise click.ClickException("no model bundle; run `edf train` first")
    grid = forecaster.ModelGrid.from_json(cfg.bundle_path.read_text())
    rows = forecaster.evaluation_report(grid)
    if out:
        Path(out).write_text(json.dumps(rows, indent=2))
    click.echo(forecaster.render_report(rows))


@main.command()
@click.option("--from", "from_", required=True, help="first tick, e.g. 2018-01-01T00:00")
@click.option("--to", required=True, help="end of replay (exclusive)")
@click.pass_context
def replay(ctx, from_, to):
    """Replay ticks over a window against the stored events and models."""
    service = load_service(_config(ctx))
    n = service.replay(_parse_date(from_), _parse_date(to))
    filled = len([r for r in service.log.records() if r.actual is not None])
    click.echo(f"replayed {n} ticks; predictions: {len(service.log)}, reconciled: {filled}")


@main.command()
@click.option("--port", type=int, default=None, help="override the configured port")
@click.option("--clock", type=click.Choice(["real", "replay"]), default="real", show_default=True)
@click.option("--speed", type=float, default=60.0, show_default=True,
              help="replay acceleration factor; 0 = as fast as possible")
@click.option("--replay-from", default=None, help="replay start tick (default: store epoch)")
@click.option("--replay-to", default=None, help="replay end (default: last stored arrival)")
@click.option("--static-dir", type=click.Path(), default=None,
              help="serve the dashboard build from this directory")
@click.pass_context
def serve(ctx, port, clock, speed, replay_from, replay_to, static_dir):
    """Run the scoring loop and HTTP API."""
    import threading

    import uvicorn

    from .api import create_app

    cfg = _config(ctx)
    service = load_service(cfg)
    app = create_app(service, static_dir)

    def scheduler():
        grid = service.tick_grid
        if clock == "replay":
            start = _parse_date(replay_from) if replay_from else grid.epoch
            if replay_to:
                end = _parse_date(replay_to)
            else:
                snap = service.store.snapshot()
                last = max(r.arrival_time for r in snap.records)
                end = grid.floor(last).timestamp
            t = grid.at(start)
            end_ordinal = grid.at(end).ordinal
            while t.ordinal < end_ordinal:
                service.tick(t.timestamp)
                service.reconcile(t.timestamp)
                if speed > 0:
                    time.sleep(900.0 / speed)
                t = grid.tick(t.ordinal + 1)
        else:
            while True:
                now = datetime.now()
                tick_ts = grid.floor(now.replace(second=0, microsecond=0)).timestamp
                service.tick(tick_ts)
                service.reconcile(tick_ts)
                next_tick = tick_ts + TICK
                time.sleep(max(1.0, (next_tick - datetime.now()).total_seconds()))

    threading.Thread(target=scheduler, daemon=True).start()
    uvicorn.run(app, host="127.0.0.1", port=port or cfg.port, log_level="warning")


if __name__ == "__main__":
    main()
