"""Hosts a live session: engine loop, sensor reader threads, gateway.

The engine runs in the calling thread as a 1 Hz event loop over a merged
stream of commands and sensor readings. Sensor readers are producer
threads stamping arrival times; the gateway (optional) runs its own
asyncio loop and only ever talks to this loop through the command queue
and the telemetry hub.
"""

import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .gateway import DEFAULT_PORT, Gateway, TelemetryHub, plan_payload
from .plan import TrainingPlan
from .sensors import (AntStreamDecoder, NmeaStreamDecoder, PlainHrDecoder,
                      SampleFuser)
from .session import Phase, SessionEngine
from .store import SessionStore

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOURCE = 2


class SourceOpenError(Exception):
    pass


@dataclass
class RunConfig:
    plan: TrainingPlan
    output_dir: Path
    session_id: str
    started_at: str
    gps_source: Optional[str] = None
    hr_source: Optional[str] = None
    hr_format: str = "ant"
    tolerance_bpm: float = 5.0
    host: str = "127.0.0.1"
    port: Optional[int] = DEFAULT_PORT
    static_dir: Optional[str] = None
    tick_interval_s: float = 1.0
    max_seconds: Optional[int] = None


class _Reader(threading.Thread):
    """Reads a sensor byte stream and pushes decoded readings, arrival-stamped.

    Arrival times are in tick-time milliseconds (the loop's virtual
    second times 1000) so staleness windows hold at any loop pace.
    """

    def __init__(self, stream, decoder, sink: "queue.Queue", now_ms,
                 kind: str, chunk: int = 512):
        super().__init__(daemon=True)
        self.stream = stream
        self.decoder = decoder
        self.sink = sink
        self.now_ms = now_ms
        self.kind = kind
        self.chunk = chunk
        self._stop = threading.Event()

    def run(self):
        while not self._stop.is_set():
            data = self.stream.read(self.chunk)
            if not data:
                return  # EOF: source exhausted, sensor goes silent
            stamp = self.now_ms()
            for item in self.decoder.feed(data, stamp):
                self.sink.put((self.kind, item))

    def stop(self):
        self._stop.set()


def _open_source(path: str):
    try:
        return open(path, "rb", buffering=0)
    except OSError as exc:
        raise SourceOpenError(f"cannot open sensor source {path}: {exc}") from None


def run_session(config: RunConfig,
                scripted_commands: Optional[List[Tuple[int, str]]] = None,
                scripted_readings: Optional[List[Tuple[int, str, object]]] = None,
                command_queue: Optional["queue.Queue[str]"] = None,
                ) -> int:
    """Run one session to completion; returns the process exit code.

    ``scripted_commands`` ([(at_second, action)]) and ``scripted_readings``
    ([(at_second, "hr"|"fix", reading)]) exist for harnesses that drive
    the loop without sockets or hardware. ``command_queue`` lets the caller
    inject commands from outside (signal handlers); the gateway shares it.
    """
    engine = SessionEngine(config.plan, tolerance_bpm=config.tolerance_bpm)
    store = SessionStore(config.output_dir, config.session_id,
                         config.started_at, config.plan,
                         tolerance_bpm=config.tolerance_bpm).open()
    hub = TelemetryHub(plan_payload(config.plan))
    commands: "queue.Queue[str]" = command_queue or queue.Queue()
    readings: "queue.Queue[tuple]" = queue.Queue()

    gateway = None
    if config.port is not None:
        gateway = Gateway(commands, hub, host=config.host, port=config.port,
                          static_dir=config.static_dir)
        gateway.serve_background()

    epoch = time.monotonic()
    pace = config.tick_interval_s if config.tick_interval_s > 0 else 1.0

    def now_ms():
        return int((time.monotonic() - epoch) / pace * 1000)

    readers = []
    try:
        if config.gps_source:
            readers.append(_Reader(_open_source(config.gps_source),
                                   NmeaStreamDecoder(), readings, now_ms, "fix"))
        if config.hr_source:
            decoder = PlainHrDecoder() if config.hr_format == "plain" \
                else AntStreamDecoder()
            readers.append(_Reader(_open_source(config.hr_source),
                                   decoder, readings, now_ms, "hr"))
    except SourceOpenError:
        store.close()
        if gateway:
            gateway.stop()
        raise
    for r in readers:
        r.start()

    fuser = SampleFuser()
    scripted = sorted(scripted_commands or [], key=lambda c: c[0])
    scripted_idx = 0
    feeds = sorted(scripted_readings or [], key=lambda c: c[0])
    feed_idx = 0
    was_tracking = False
    seconds = 0

    try:
        while True:
            while scripted_idx < len(scripted) and scripted[scripted_idx][0] <= seconds:
                commands.put(scripted[scripted_idx][1])
                scripted_idx += 1
            while True:
                try:
                    action = commands.get_nowait()
                except queue.Empty:
                    break
                record = engine.handle_command(action)
                if record is not None:
                    store.append_record(record)
                    hub.add_record(record)
                hub.update_phase(engine.phase.value)
            if engine.shutdown_requested or engine.phase is Phase.FINISHED:
                break
            if was_tracking and engine.phase is Phase.IDLE:
                break
            if config.max_seconds is not None and seconds >= config.max_seconds:
                break

            seconds += 1
            if config.tick_interval_s > 0:
                deadline = epoch + seconds * config.tick_interval_s
                delay = deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)

            while feed_idx < len(feeds) and feeds[feed_idx][0] <= seconds:
                _, kind, item = feeds[feed_idx]
                feed_idx += 1
                (fuser.offer_hr if kind == "hr" else fuser.offer_fix)(item)
            while True:
                try:
                    kind, item = readings.get_nowait()
                except queue.Empty:
                    break
                (fuser.offer_hr if kind == "hr" else fuser.offer_fix)(item)

            if engine.phase in (Phase.TRACKING, Phase.INTERVAL_ACTIVE, Phase.REST):
                was_tracking = True
                frame, record = engine.tick(fuser.sample_at(seconds * 1000))
                if frame is not None:
                    store.append_frame(frame)
                    hub.update_frame(frame)
                    if gateway is not None:
                        gateway.broadcast(frame)
                if record is not None:
                    store.append_record(record)
                    hub.add_record(record)
                hub.update_phase(engine.phase.value)
    finally:
        for r in readers:
            r.stop()
        store.finalize()
        store.close()
        if gateway is not None:
            gateway.stop()
    return EXIT_OK
