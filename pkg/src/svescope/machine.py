"""Platform description and PMU event registry.

A :class:`MachineModel` carries the handful of hardware parameters every
other module consults: vector register length, core frequency, FP pipeline
layout, the memory-bandwidth-vs-threads curve, and LLC geometry. The module
also owns the registry of raw ARM PMU events used for profiling, including
events known to be too unstable to feed into derived metrics.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .errors import CapacityError, DomainError, ParseError

MB = 1024 * 1024


@dataclass(frozen=True)
class MachineModel:
    """Immutable description of one target platform.

    Bandwidth is modeled as a piecewise-linear curve: per-thread bandwidth
    accumulates linearly until it saturates at ``bw_peak_gbs`` (for the
    built-in Grace profile that happens between 8 and 9 threads).
    """

    name: str
    vlen_bits: int
    freq_mhz: float
    fpu_pipelines: int
    flops_per_pipeline_cycle: int
    bw_single_gbs: float
    bw_peak_gbs: float
    max_threads: int
    cache_line_bytes: int
    llc_bytes: int

    def __post_init__(self) -> None:
        if self.vlen_bits < 128 or self.vlen_bits % 128 != 0:
            raise DomainError(
                f"vlen_bits must be a positive multiple of 128, got {self.vlen_bits}"
            )
        for fname in (
            "freq_mhz",
            "fpu_pipelines",
            "flops_per_pipeline_cycle",
            "bw_single_gbs",
            "bw_peak_gbs",
            "max_threads",
            "cache_line_bytes",
            "llc_bytes",
        ):
            value = getattr(self, fname)
            if not value > 0:
                raise DomainError(f"{fname} must be > 0, got {value}")
        if self.bw_single_gbs > self.bw_peak_gbs:
            raise DomainError(
                f"bw_single_gbs ({self.bw_single_gbs}) exceeds "
                f"bw_peak_gbs ({self.bw_peak_gbs})"
            )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


#: Nvidia Grace (Neoverse V2): 128-bit SVE, 3447 MHz, four FP pipelines,
#: STREAM-measured 30 GB/s single-thread and 250 GB/s saturated bandwidth.
GRACE = MachineModel(
    name="grace",
    vlen_bits=128,
    freq_mhz=3447.0,
    fpu_pipelines=4,
    flops_per_pipeline_cycle=2,
    bw_single_gbs=30.0,
    bw_peak_gbs=250.0,
    max_threads=72,
    cache_line_bytes=64,
    llc_bytes=117 * MB,
)

BUILTIN_MODELS = {"grace": GRACE}


def bandwidth_at(model: MachineModel, threads: int) -> float:
    """Sustained memory bandwidth in GB/s at the given thread count.

    Piecewise linear with hard saturation: min(threads * bw_single, bw_peak).
    """
    if not 1 <= threads <= model.max_threads:
        raise DomainError(
            f"threads must be in [1, {model.max_threads}], got {threads}"
        )
    return min(threads * model.bw_single_gbs, model.bw_peak_gbs)


def peak_scalar_flops(model: MachineModel, threads: int) -> float:
    """Peak scalar FP throughput in GFLOP/s at the given thread count."""
    if not 1 <= threads <= model.max_threads:
        raise DomainError(
            f"threads must be in [1, {model.max_threads}], got {threads}"
        )
    return (
        model.freq_mhz
        / 1000.0
        * model.fpu_pipelines
        * model.flops_per_pipeline_cycle
        * threads
    )


_REQUIRED_KEYS = {
    "name",
    "vlen_bits",
    "freq_mhz",
    "fpu_pipelines",
    "bw_single_gbs",
    "bw_peak_gbs",
    "max_threads",
    "cache_line_bytes",
    "llc_bytes",
}
_OPTIONAL_KEYS = {"flops_per_pipeline_cycle"}  # defaults to 2 (FMA = 2 FLOPs)


def machine_model_from_dict(doc: dict) -> MachineModel:
    """Validate a configuration mapping and build a MachineModel."""
    if not isinstance(doc, dict):
        raise ParseError(f"machine model document must be an object, got {type(doc).__name__}")
    keys = set(doc)
    unknown = keys - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise ParseError(f"unknown machine model keys: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - keys
    if missing:
        raise ParseError(f"missing machine model keys: {sorted(missing)}")
    fields = dict(doc)
    fields.setdefault("flops_per_pipeline_cycle", 2)
    try:
        return MachineModel(**fields)
    except (TypeError, DomainError) as exc:
        raise ParseError(f"invalid machine model: {exc}") from exc


def load_machine_model(source: str) -> MachineModel:
    """Resolve a machine model from a built-in name or a JSON document.

    ``source`` is either the name of a built-in profile ("grace") or the
    text of a JSON object with exactly the MachineModel field names.
    """
    name = source.strip()
    if name in BUILTIN_MODELS:
        return BUILTIN_MODELS[name]
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"machine model source is neither a built-in name "
            f"({sorted(BUILTIN_MODELS)}) nor valid JSON: {exc}"
        ) from exc
    return machine_model_from_dict(doc)


@dataclass(frozen=True)
class PmuEvent:
    """One raw PMU event: hexcode, canonical name, and a reliability note."""

    hexcode: int
    name: str
    description: str
    reliable: bool = True
    note: str = ""


# Core profiling set for Neoverse V2. These six are scheduled together as
# one group; the PMU cannot co-schedule more than six.
INST_RETIRED = PmuEvent(0x8, "INST_RETIRED", "Instruction architecturally executed")
LL_CACHE_MISS_RD = PmuEvent(0x37, "LL_CACHE_MISS_RD", "Last-level cache read miss")
MEM_ACCESS_RD = PmuEvent(0x66, "MEM_ACCESS_RD", "Memory access, load")
STALL_BACKEND = PmuEvent(0x24, "STALL_BACKEND", "Cycles with no dispatch due to backend stall")
CPU_CYCLES = PmuEvent(0x11, "CPU_CYCLES", "Processor cycles")
VFP_SPEC = PmuEvent(0x75, "VFP_SPEC", "Floating-point instruction speculatively executed")

# Validated but rejected for metric use; kept so reports can warn.
STALL_BACKEND_MEM = PmuEvent(
    0x4005,
    "STALL_BACKEND_MEM",
    "Backend stall cycles attributed to memory",
    reliable=False,
    note="high run-to-run variance; slot-based attribution is ambiguous",
)
L3D_CACHE_LMISS_RD = PmuEvent(
    0x400B,
    "L3D_CACHE_LMISS_RD",
    "L3 cache long-latency read miss",
    reliable=False,
    note="observed identical to plain L3 misses; 'long latency' is undefined",
)
SVE_INST_SPEC = PmuEvent(
    0x8006,
    "SVE_INST_SPEC",
    "SVE instruction speculatively executed",
    reliable=False,
    note="counts predicated instructions only; unpredicated SVE ops are missed",
)

TABLE_EVENTS = (
    INST_RETIRED,
    LL_CACHE_MISS_RD,
    MEM_ACCESS_RD,
    STALL_BACKEND,
    CPU_CYCLES,
    VFP_SPEC,
)

DEFAULT_REGISTRY_EVENTS = TABLE_EVENTS + (
    STALL_BACKEND_MEM,
    L3D_CACHE_LMISS_RD,
    SVE_INST_SPEC,
)

#: Maximum events the Neoverse V2 PMU schedules simultaneously.
MAX_GROUP_EVENTS = 6


class EventRegistry:
    """Lookup table of PMU events by name or hexcode."""

    def __init__(self, events: tuple[PmuEvent, ...] = DEFAULT_REGISTRY_EVENTS):
        self._by_name: dict[str, PmuEvent] = {}
        self._by_hexcode: dict[int, PmuEvent] = {}
        for ev in events:
            if ev.hexcode in self._by_hexcode:
                raise DomainError(f"duplicate event hexcode {ev.hexcode:#x}")
            if ev.name in self._by_name:
                raise DomainError(f"duplicate event name {ev.name}")
            self._by_name[ev.name] = ev
            self._by_hexcode[ev.hexcode] = ev

    def by_name(self, name: str) -> PmuEvent:
        try:
            return self._by_name[name]
        except KeyError:
            raise DomainError(f"unknown PMU event name {name!r}") from None

    def by_hexcode(self, hexcode: int) -> PmuEvent:
        try:
            return self._by_hexcode[hexcode]
        except KeyError:
            raise DomainError(f"unknown PMU event hexcode {hexcode:#x}") from None

    def all_events(self) -> list[PmuEvent]:
        return list(self._by_name.values())


REGISTRY = EventRegistry()


@dataclass(frozen=True)
class EventSet:
    """An ordered group of events collected simultaneously (1 to 6)."""

    events: tuple[PmuEvent, ...]

    def __post_init__(self) -> None:
        if len(self.events) > MAX_GROUP_EVENTS:
            raise CapacityError(
                f"{len(self.events)} events requested but at most "
                f"{MAX_GROUP_EVENTS} can be collected simultaneously on this PMU"
            )
        if not self.events:
            raise DomainError("event set must contain at least one event")
        names = [ev.name for ev in self.events]
        if len(set(names)) != len(names):
            raise DomainError(f"event set contains duplicates: {names}")

    def names(self) -> list[str]:
        return [ev.name for ev in self.events]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def default_event_set() -> EventSet:
    """The six-event profiling group used throughout the toolkit."""
    return EventSet(TABLE_EVENTS)
