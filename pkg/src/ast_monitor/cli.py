"""Command-line entry points: live runs, simulation, replay, analysis."""

import datetime as dt
import os
import signal
import sys
import uuid
from pathlib import Path

import click

from .gateway import DEFAULT_PORT, PORT_ENV_VAR, TelemetryHub, plan_payload
from .plan import PlanError, load_plan
from .replay import replay_session
from .runtime import (EXIT_CONFIG, EXIT_OK, EXIT_SOURCE, RunConfig,
                      SourceOpenError, run_session)
from .simulator import (RiderModel, RiderPolicy, Route, SimulationHarness,
                        default_route)
from .store import SessionStore, StoreError, read_summary

EXIT_REPLAY_MISMATCH = 3

SIM_STARTED_AT = "1970-01-01T00:00:00Z"


def _default_port() -> int:
    return int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))


def _load_plan_or_exit(plan_path: str):
    path = Path(plan_path)
    if not path.exists():
        click.echo(f"error: plan file not found: {path}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        return load_plan(path)
    except PlanError as exc:
        click.echo(f"error: invalid plan {path}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Head unit for interval training sessions."""


@main.command()
@click.option("--plan", "plan_path", required=True, help="Training plan file (JSON).")
@click.option("--out", "out_dir", default="sessions", show_default=True,
              help="Directory to create the session directory in.")
@click.option("--gps", "gps_source", default=None,
              help="GPS byte stream: file, pipe, or serial device.")
@click.option("--hr", "hr_source", default=None,
              help="Heart-rate byte stream: file, pipe, or serial device.")
@click.option("--hr-format", type=click.Choice(["ant", "plain"]), default="ant",
              show_default=True, help="HR stream framing.")
@click.option("--tolerance", type=float, default=5.0, show_default=True,
              help="Feedback band around the target, in bpm.")
@click.option("--port", type=int, default=None,
              help=f"Gateway port (default ${PORT_ENV_VAR} or {DEFAULT_PORT}); "
                   "negative disables the gateway.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", type=int, default=None, help="Accepted for parity; unused live.")
@click.option("--cockpit-dir", default=None,
              help="Static cockpit assets to serve at /.")
def run(plan_path, out_dir, gps_source, hr_source, hr_format, tolerance,
        port, host, seed, cockpit_dir):
    """Run a live session from real sensor streams until stop or poweroff."""
    plan = _load_plan_or_exit(plan_path)
    if tolerance <= 0:
        click.echo("error: --tolerance must be positive", err=True)
        sys.exit(EXIT_CONFIG)
    if port is None:
        port = _default_port()
    started = dt.datetime.now(dt.timezone.utc)
    config = RunConfig(
        plan=plan,
        output_dir=Path(out_dir),
        session_id=started.strftime("%Y%m%dT%H%M%S-") + uuid.uuid4().hex[:6],
        started_at=started.strftime("%Y-%m-%dT%H:%M:%SZ"),
        gps_source=gps_source,
        hr_source=hr_source,
        hr_format=hr_format,
        tolerance_bpm=tolerance,
        host=host,
        port=None if port < 0 else port,
        static_dir=cockpit_dir,
    )
    import queue as _queue
    commands: "_queue.Queue[str]" = _queue.Queue()

    def request_poweroff(*_args):
        # same path as the POWEROFF button: finalize, then exit
        commands.put("poweroff")

    previous = (signal.signal(signal.SIGINT, request_poweroff),
                signal.signal(signal.SIGTERM, request_poweroff))
    try:
        code = run_session(config, command_queue=commands)
    except SourceOpenError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SOURCE)
    except StoreError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    finally:
        signal.signal(signal.SIGINT, previous[0])
        signal.signal(signal.SIGTERM, previous[1])
    click.echo(f"session written to {config.output_dir / config.session_id}")
    sys.exit(code)


@main.command()
@click.option("--plan", "plan_path", required=True, help="Training plan file (JSON).")
@click.option("--out", "out_dir", default="sessions", show_default=True)
@click.option("--tolerance", type=float, default=5.0, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True,
              help="Rider RNG seed; fixed seed gives a byte-identical rerun.")
@click.option("--rest-s", type=int, default=60, show_default=True,
              help="Simulated rest between intervals, seconds.")
@click.option("--warmup-s", type=int, default=120, show_default=True,
              help="Warmup before the first interval, seconds.")
@click.option("--hr-rest", type=float, default=60.0, show_default=True)
@click.option("--hr-max", type=float, default=195.0, show_default=True)
@click.option("--tau", "tau_s", type=float, default=30.0, show_default=True,
              help="Heart-rate time constant, seconds.")
@click.option("--noise-sd", type=float, default=1.5, show_default=True,
              help="Per-second heart-rate noise (0 = deterministic plant).")
@click.option("--gain", type=float, default=0.05, show_default=True,
              help="Effort step per feedback tick.")
@click.option("--route", "route_path", default=None,
              help="Waypoint file (JSON list of {lat, lon, altitude_m}).")
@click.option("--port", type=int, default=None,
              help="Also serve the gateway while simulating.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--realtime", is_flag=True,
              help="Pace the loop at 1 Hz instead of running flat out.")
@click.option("--cockpit-dir", default=None,
              help="Static cockpit assets to serve at / (needs --port).")
def simulate(plan_path, out_dir, tolerance, seed, rest_s, warmup_s, hr_rest,
             hr_max, tau_s, noise_sd, gain, route_path, port, host, realtime,
             cockpit_dir):
    """Ride the whole plan with a virtual cyclist and write a session dir."""
    import time as _time

    plan = _load_plan_or_exit(plan_path)
    if tolerance <= 0:
        click.echo("error: --tolerance must be positive", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        route = Route.load(route_path) if route_path else default_route()
    except (OSError, ValueError) as exc:
        click.echo(f"error: cannot load route: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    model = RiderModel(hr_rest=hr_rest, hr_max=hr_max, tau_s=tau_s,
                       noise_sd=noise_sd, rng_seed=seed)
    policy = RiderPolicy(gain=gain)
    try:
        store = SessionStore(Path(out_dir), f"sim-{seed}", SIM_STARTED_AT, plan,
                             tolerance_bpm=tolerance).open()
    except StoreError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    gateway = None
    on_frame = None
    if port is not None:
        import queue as _queue

        from .gateway import Gateway
        hub = TelemetryHub(plan_payload(plan))
        gateway = Gateway(_queue.Queue(), hub, host=host, port=port,
                          static_dir=cockpit_dir)
        gateway.serve_background()

        def on_frame(frame):
            gateway.broadcast(frame)
            if realtime:
                _time.sleep(1.0)
    elif realtime:
        on_frame = lambda frame: _time.sleep(1.0)

    harness = SimulationHarness(plan, model, policy, route,
                                tolerance_bpm=tolerance, rest_s=rest_s,
                                warmup_s=warmup_s, store=store,
                                on_frame=on_frame)
    result = harness.run()
    store.finalize()
    store.close()
    if gateway is not None:
        gateway.stop()

    click.echo(f"{'id':>3} {'target':>7} {'achieved':>9} {'deviation':>10} done")
    for r in result.records:
        achieved = f"{r.achieved_avg_hr:.1f}" if r.achieved_avg_hr is not None else "-"
        deviation = f"{r.deviation_bpm:+.1f}" if r.deviation_bpm is not None else "-"
        click.echo(f"{r.exercise_id:>3} {r.target_hr:>7} {achieved:>9} "
                   f"{deviation:>10} {'yes' if r.completed else 'partial'}")
    click.echo(f"session written to {store.dir}")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("session_dir")
def replay(session_dir):
    """Re-derive interval records from samples.csv and diff the stored ones."""
    path = Path(session_dir)
    if not (path / "samples.csv").exists():
        click.echo(f"error: not a session directory: {path}", err=True)
        sys.exit(EXIT_CONFIG)
    result = replay_session(path)
    if result.ok:
        click.echo("replay: records match")
        sys.exit(EXIT_OK)
    click.echo(f"replay: divergence at {result.divergence}", err=True)
    sys.exit(EXIT_REPLAY_MISMATCH)


@main.command()
@click.argument("session_dir")
def analyze(session_dir):
    """Print per-interval outcomes and session aggregates from the summary."""
    path = Path(session_dir)
    if not (path / "summary.json").exists():
        click.echo(f"error: no summary.json in {path} (session not finalized)",
                   err=True)
        sys.exit(EXIT_CONFIG)
    summary = read_summary(path)
    click.echo(f"session {summary['session_id']}  plan '{summary['plan_name']}'"
               f"  started {summary['started_at']}")
    click.echo(f"{'id':>3} {'target':>7} {'achieved':>9} {'deviation':>10} status")
    for r in summary["intervals"]:
        achieved = "-" if r["achieved_avg_hr"] is None else f"{r['achieved_avg_hr']:.1f}"
        deviation = "-" if r["deviation_bpm"] is None else f"{r['deviation_bpm']:+.1f}"
        status = "completed" if r["completed"] else "partial"
        click.echo(f"{r['exercise_id']:>3} {r['target_hr']:>7} {achieved:>9} "
                   f"{deviation:>10} {status}")
    agg = summary["aggregates"]
    mad = agg["mean_abs_deviation_bpm"]
    click.echo(f"completed intervals : {agg['completed_intervals']}")
    click.echo(f"partial intervals   : {agg['partial_intervals']}")
    click.echo(f"interval time       : {agg['total_interval_time_s']} s")
    click.echo("mean abs deviation  : "
               + ("n/a" if mad is None else f"{mad:.1f} bpm"))
    click.echo(f"distance            : {agg['distance_m']:.1f} m")
    click.echo(f"ascent              : {agg['ascent_m']:.1f} m")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
