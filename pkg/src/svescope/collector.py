"""Region-of-interest counter collection.

A :class:`RoiSession` walks the state machine
``configured -> counting <-> paused -> stopped`` and accumulates per-event
counts across start/stop windows (resume semantics, never reset). Three
interchangeable backends feed it:

* live      -- Linux perf_event_open, events opened as one scheduled group
* replay    -- records read back verbatim from a measurement document
* synthetic -- scripted per-window increments, for tests and dry runs

Everything except the live backend works on any host.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

from .errors import BackendUnavailableError, DomainError, ParseError, StateError
from .machine import EventSet, PmuEvent, default_event_set

VARIANTS = ("baseline", "asimd", "sve")
ELEMENT_WIDTHS = (16, 32, 64)

# State machine nodes.
CONFIGURED = "configured"
COUNTING = "counting"
PAUSED = "paused"
STOPPED = "stopped"


@dataclass
class MeasurementRecord:
    """Counter values plus wall time for one (kernel, variant, threads) run.

    ``repetitions`` is the number of kernel repeats folded into the ROI;
    counters and wall time cover all of them.
    """

    kernel_name: str
    variant: str
    threads: int
    elen_bits: int
    counters: dict[str, int]
    wall_time_ns: int
    repetitions: int = 1

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise DomainError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.threads < 1:
            raise DomainError(f"threads must be >= 1, got {self.threads}")
        if self.elen_bits not in ELEMENT_WIDTHS:
            raise DomainError(
                f"elen_bits must be one of {ELEMENT_WIDTHS}, got {self.elen_bits}"
            )
        if self.wall_time_ns <= 0:
            raise DomainError(f"wall_time_ns must be > 0, got {self.wall_time_ns}")
        if self.repetitions < 1:
            raise DomainError(f"repetitions must be >= 1, got {self.repetitions}")
        for name in ("INST_RETIRED", "CPU_CYCLES"):
            if name not in self.counters:
                raise DomainError(f"counters must contain {name}")
        for name, value in self.counters.items():
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise DomainError(
                    f"counter {name} must be a non-negative integer, got {value!r}"
                )

    def to_dict(self) -> dict:
        return {
            "kernel_name": self.kernel_name,
            "variant": self.variant,
            "threads": self.threads,
            "elen_bits": self.elen_bits,
            "repetitions": self.repetitions,
            "wall_time_ns": self.wall_time_ns,
            "counters": dict(sorted(self.counters.items())),
        }


class SyntheticBackend:
    """Deterministic fake: each stop window adds the next scripted increment.

    ``windows`` is a list of (counters, wall_ns) pairs consumed in order;
    when exhausted the last window repeats, so a single window scripts any
    number of start/stop cycles. One backend may serve several sequential
    sessions, continuing through the script.
    """

    name = "synthetic"

    DEFAULT_WINDOW = (
        {
            "INST_RETIRED": 1_000_000,
            "CPU_CYCLES": 2_000_000,
            "LL_CACHE_MISS_RD": 1_000,
            "MEM_ACCESS_RD": 8_000,
            "STALL_BACKEND": 500_000,
            "VFP_SPEC": 250_000,
        },
        1_000_000,
    )

    def __init__(self, windows: list[tuple[dict[str, int], int]] | None = None):
        self._windows = list(windows) if windows else [self.DEFAULT_WINDOW]
        self._cursor = 0

    def configure(self, events: EventSet) -> None:
        pass

    def start(self) -> None:
        pass

    def stop(self) -> tuple[dict[str, int], int]:
        counts, wall = self._windows[min(self._cursor, len(self._windows) - 1)]
        self._cursor += 1
        return dict(counts), wall


class ReplayBackend:
    """Serves pre-recorded measurement records verbatim, one per session."""

    name = "replay"

    def __init__(self, records: list[MeasurementRecord]):
        self._records = list(records)
        self._cursor = 0

    @classmethod
    def from_file(cls, path: str) -> "ReplayBackend":
        with open(path) as fh:
            return cls(load_measurements(fh.read()))

    def configure(self, events: EventSet) -> None:
        pass

    def start(self) -> None:
        pass

    def stop(self) -> tuple[dict[str, int], int]:
        return {}, 1  # counts come from the record at read time

    def next_record(self) -> MeasurementRecord:
        if self._cursor >= len(self._records):
            raise DomainError(
                f"replay source exhausted after {len(self._records)} records"
            )
        record = self._records[self._cursor]
        self._cursor += 1
        return record


class LiveBackend:
    """perf_event_open group on the calling thread, children inherited."""

    name = "live"

    def __init__(self) -> None:
        self._group = None
        self._names: list[str] = []
        self._window_start: list[int] | None = None
        self._t0 = 0

    def configure(self, events: EventSet) -> None:
        from . import perf_linux

        self._names = events.names()
        self._group = perf_linux.PerfGroup([ev.hexcode for ev in events])

    def start(self) -> None:
        assert self._group is not None
        self._window_start = self._group.read()
        self._t0 = time.monotonic_ns()
        self._group.enable()

    def stop(self) -> tuple[dict[str, int], int]:
        assert self._group is not None and self._window_start is not None
        self._group.disable()
        wall = time.monotonic_ns() - self._t0
        now = self._group.read()
        increments = {
            name: now[i] - self._window_start[i] for i, name in enumerate(self._names)
        }
        return increments, max(wall, 1)

    def close(self) -> None:
        if self._group is not None:
            self._group.close()
            self._group = None


Backend = SyntheticBackend | ReplayBackend | LiveBackend


def _resolve_backend(selector: str | Backend) -> Backend:
    if isinstance(selector, str):
        if selector == "synthetic":
            return SyntheticBackend()
        if selector == "live":
            return LiveBackend()
        if selector == "replay":
            raise DomainError(
                "replay backend needs a source; use ReplayBackend.from_file()"
            )
        raise DomainError(f"unknown backend {selector!r}")
    return selector


@dataclass
class RoiSession:
    """One region-of-interest measurement; owned by a single thread."""

    event_set: EventSet
    backend: Backend
    state: str = CONFIGURED
    accumulated: dict[str, int] = field(default_factory=dict)
    wall_time_ns: int = 0
    _replay_record: MeasurementRecord | None = None

    @property
    def backend_name(self) -> str:
        return self.backend.name


def configure_measure(
    events: EventSet | list[PmuEvent] | None = None,
    backend: str | Backend = "synthetic",
) -> RoiSession:
    """Configure and initialize counters; returns a session ready to start.

    Events are opened as one scheduled group on the live backend so all of
    them count simultaneously (no multiplexing). Raises CapacityError for
    more than six events and BackendUnavailableError when the live backend
    cannot open counters on this host.
    """
    if events is None:
        event_set = default_event_set()
    elif isinstance(events, EventSet):
        event_set = events
    else:
        event_set = EventSet(tuple(events))
    resolved = _resolve_backend(backend)
    resolved.configure(event_set)
    session = RoiSession(event_set=event_set, backend=resolved)
    session.accumulated = {name: 0 for name in event_set.names()}
    return session


def start_measure(session: RoiSession) -> RoiSession:
    """Enable (or resume) counting. Legal from configured and paused."""
    if session.state not in (CONFIGURED, PAUSED):
        raise StateError(f"cannot start a session in state {session.state!r}")
    session.backend.start()
    session.state = COUNTING
    return session


def stop_measure(session: RoiSession) -> RoiSession:
    """Pause counting and fold the window into the accumulated totals."""
    if session.state != COUNTING:
        raise StateError(f"cannot stop a session in state {session.state!r}")
    increments, wall = session.backend.stop()
    for name in session.accumulated:
        session.accumulated[name] += int(increments.get(name, 0))
    session.wall_time_ns += wall
    session.state = PAUSED
    if isinstance(session.backend, ReplayBackend) and session._replay_record is None:
        session._replay_record = session.backend.next_record()
    return session


def read_results(
    session: RoiSession,
    kernel_name: str = "roi",
    variant: str = "baseline",
    threads: int = 1,
    elen_bits: int = 64,
    repetitions: int = 1,
) -> MeasurementRecord:
    """Finalize the session and return one record covering all windows.

    Requires the session to be paused (measurement complete) or already
    stopped; reading again returns an identical record. On the replay
    backend the stored record is returned verbatim and the metadata
    arguments are ignored.
    """
    if session.state == PAUSED:
        session.state = STOPPED
    if session.state != STOPPED:
        raise StateError(
            f"cannot read results from a session in state {session.state!r}"
        )
    if session._replay_record is not None:
        return replace(session._replay_record)
    if isinstance(session.backend, LiveBackend):
        session.backend.close()
    return MeasurementRecord(
        kernel_name=kernel_name,
        variant=variant,
        threads=threads,
        elen_bits=elen_bits,
        counters=dict(session.accumulated),
        wall_time_ns=session.wall_time_ns,
        repetitions=repetitions,
    )


_RECORD_KEYS = {
    "kernel_name": str,
    "variant": str,
    "threads": int,
    "elen_bits": int,
    "repetitions": int,
    "wall_time_ns": int,
    "counters": dict,
}


def record_from_dict(doc: dict, where: str = "record") -> MeasurementRecord:
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - set(_RECORD_KEYS)
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(_RECORD_KEYS) - set(doc)
    if missing:
        raise ParseError(f"{where}: missing keys {sorted(missing)}")
    for key, typ in _RECORD_KEYS.items():
        if not isinstance(doc[key], typ) or isinstance(doc[key], bool):
            raise ParseError(
                f"{where}: field {key!r} must be {typ.__name__}, "
                f"got {type(doc[key]).__name__}"
            )
    try:
        return MeasurementRecord(**doc)
    except DomainError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def load_measurements(text: str) -> list[MeasurementRecord]:
    """Parse a measurement document (JSON array of records)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"measurement document is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise ParseError(
            f"measurement document must be a JSON array, got {type(doc).__name__}"
        )
    records = []
    for i, entry in enumerate(doc):
        records.append(record_from_dict(entry, where=f"record {i}"))
    return records


def dump_measurements(records: list[MeasurementRecord]) -> str:
    """Serialize records to the measurement document format (stable bytes)."""
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"
