"""Benchmark orchestration: calibrated, repeated ROI measurements.

A bench run executes one kernel at least five times, each repetition a
fresh ROI session, and reports the per-counter median so scheduler outliers
do not skew results. Before measuring, the region of interest is calibrated:
whole-kernel repetitions are folded in until one ROI lasts at least 0.1 s.
A warning is attached whenever the relative standard deviation of any
counter (or of wall time) across repetitions exceeds 5%.

For hosts without PMU access the synthetic backend scripts counters from a
deterministic analytic model of the built-in kernels (FP ops, compulsory
line traffic, an instruction-shrink factor per variant), which keeps the
whole pipeline runnable and byte-reproducible anywhere.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

from .collector import (
    LiveBackend,
    MeasurementRecord,
    SyntheticBackend,
    configure_measure,
)
from .errors import DomainError
from .machine import EventSet, MachineModel, default_event_set
from .metrics import vectorization_bound
from .workloads import (
    SpmvParams,
    StreamParams,
    run_instrumented,
    spmv_flop_count,
    spmv_input,
    stream_flop_count,
)

MIN_ROI_SECONDS = 0.1
MIN_REPETITIONS = 5
MAX_CALIBRATION_ROUNDS = 10
REL_STDDEV_LIMIT = 0.05

# Fraction of the instruction stream the compiler can vectorize in the
# synthetic model; SpMV's irregular trip counts defeat fixed-width SIMD.
_VECTORIZABLE = {
    ("spmv", "sve"): 0.9,
    ("spmv", "asimd"): 0.0,
    ("stream_copy", "sve"): 0.95,
    ("stream_copy", "asimd"): 0.95,
    ("stream_triad", "sve"): 0.95,
    ("stream_triad", "asimd"): 0.95,
}


def model_counters(
    kernel: str,
    params: SpmvParams | StreamParams,
    variant: str,
    model: MachineModel,
    repetitions: int,
) -> tuple[dict[str, int], int]:
    """Analytic counter estimates for one ROI of ``repetitions`` kernel runs.

    The estimates follow the kernels' operation model: FP ops scale with the
    compute-repeat knob while LLC misses cover only first-touch streaming of
    the operand arrays, so estimated arithmetic intensity responds to the
    knob exactly as the real kernel's does.
    """
    line = model.cache_line_bytes
    elen_bytes = params.elen_bits // 8
    if kernel == "spmv":
        assert isinstance(params, SpmvParams)
        A, _ = spmv_input(params)
        nnz = A.nnz
        flops = spmv_flop_count(nnz, params.repeat)
        misses = max(1, (nnz * elen_bytes) // line + (nnz * 4) // line)
        mem_rd = 3 * nnz * params.repeat
        inst_scalar = 2 * flops + mem_rd
    else:
        assert isinstance(params, StreamParams)
        flops = stream_flop_count(params)
        streams = 2 if params.op == "copy" else 3
        reads = params.n * (streams - 1)
        misses = max(1, (reads * elen_bytes) // line)
        mem_rd = reads
        inst_scalar = streams * params.n + params.n + flops

    vb = vectorization_bound(model.vlen_bits, params.elen_bits)
    frac = _VECTORIZABLE.get((kernel, variant), 0.0)
    shrink = (1.0 - frac) + frac / vb  # Amdahl over the instruction stream
    inst = int(round(inst_scalar * shrink))
    vfp = flops if variant == "baseline" else int(math.ceil(flops * shrink))

    peak_gflops = (
        model.freq_mhz / 1000.0
        * model.fpu_pipelines
        * model.flops_per_pipeline_cycle
        * min(params.threads, model.max_threads)
    )
    bw_gbs = min(params.threads * model.bw_single_gbs, model.bw_peak_gbs)
    compute_s = flops * shrink / (peak_gflops * 1e9) if flops else 0.0
    memory_s = misses * line / (bw_gbs * 1e9)
    wall_ns = max(1, int(round(max(compute_s, memory_s) * 1e9)))
    cycles = max(1, int(round(wall_ns * model.freq_mhz / 1000.0)))
    stall = int(cycles * (memory_s / max(compute_s, memory_s)) * 0.8)

    counters = {
        "INST_RETIRED": inst * repetitions,
        "CPU_CYCLES": cycles * repetitions,
        "LL_CACHE_MISS_RD": misses * repetitions,
        "MEM_ACCESS_RD": mem_rd * repetitions,
        "STALL_BACKEND": stall * repetitions,
        "VFP_SPEC": vfp * repetitions,
    }
    return counters, wall_ns * repetitions


@dataclass
class BenchOutcome:
    """Aggregated result of one bench invocation."""

    record: MeasurementRecord
    warnings: list[str] = field(default_factory=list)
    calibrated_repetitions: int = 1
    raw_records: list[MeasurementRecord] = field(default_factory=list)


def _rel_stddev(values: list[float]) -> float:
    mean = statistics.fmean(values)
    if mean == 0:
        return 0.0
    return statistics.pstdev(values) / mean


def run_bench(
    kernel: str,
    params: SpmvParams | StreamParams,
    model: MachineModel,
    backend: str | object = "synthetic",
    variant: str = "baseline",
    events: EventSet | None = None,
    repetitions: int = MIN_REPETITIONS,
    min_roi_s: float = MIN_ROI_SECONDS,
) -> BenchOutcome:
    """Calibrate, measure, and aggregate one (kernel, variant) bench run."""
    if repetitions < MIN_REPETITIONS:
        raise DomainError(
            f"at least {MIN_REPETITIONS} repetitions are required, got {repetitions}"
        )
    event_set = events or default_event_set()

    def make_backend(inner: int):
        if backend == "synthetic":
            counters, wall = model_counters(kernel, params, variant, model, inner)
            return SyntheticBackend([(counters, wall)])
        if backend == "live":
            return LiveBackend()
        if isinstance(backend, str):
            raise DomainError(
                f"bench supports the live and synthetic backends, not {backend!r}; "
                "use 'analyze' with --backend replay for existing measurements"
            )
        return backend  # scripted backend instance shared across sessions

    warnings: list[str] = []
    min_roi_ns = int(min_roi_s * 1e9)

    # Calibration: grow whole-kernel repetitions until one ROI is long enough.
    inner = 1
    for _ in range(MAX_CALIBRATION_ROUNDS):
        session = configure_measure(event_set, make_backend(inner))
        probe = run_instrumented(kernel, params, session, variant, repetitions=inner)
        if probe.wall_time_ns >= min_roi_ns:
            break
        grow = math.ceil(inner * min_roi_ns / max(probe.wall_time_ns, 1) * 1.2)
        inner = max(inner * 2, grow)
    else:
        warnings.append(
            f"ROI stayed below {min_roi_s} s after {MAX_CALIBRATION_ROUNDS} "
            f"calibration rounds; proceeding with {inner} repetitions"
        )

    raw: list[MeasurementRecord] = []
    for _ in range(repetitions):
        session = configure_measure(event_set, make_backend(inner))
        raw.append(run_instrumented(kernel, params, session, variant, repetitions=inner))

    names = event_set.names()
    counters = {
        name: int(statistics.median(rec.counters.get(name, 0) for rec in raw))
        for name in names
    }
    wall = int(statistics.median(rec.wall_time_ns for rec in raw))
    for name in names:
        rel = _rel_stddev([float(rec.counters.get(name, 0)) for rec in raw])
        if rel > REL_STDDEV_LIMIT:
            warnings.append(
                f"counter {name}: relative std dev {rel:.1%} exceeds "
                f"{REL_STDDEV_LIMIT:.0%} across {repetitions} repetitions"
            )
    rel_wall = _rel_stddev([float(rec.wall_time_ns) for rec in raw])
    if rel_wall > REL_STDDEV_LIMIT:
        warnings.append(
            f"wall time: relative std dev {rel_wall:.1%} exceeds "
            f"{REL_STDDEV_LIMIT:.0%} across {repetitions} repetitions"
        )

    record = MeasurementRecord(
        kernel_name=kernel,
        variant=variant,
        threads=params.threads,
        elen_bits=params.elen_bits,
        counters=counters,
        wall_time_ns=wall,
        repetitions=inner,
    )
    return BenchOutcome(
        record=record,
        warnings=warnings,
        calibrated_repetitions=inner,
        raw_records=raw,
    )
