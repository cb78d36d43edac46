"""Analytical metrics derived from measurement records.

All operations are pure functions. The central quantities:

* vectorization bound   VB = vlen_bits / elen_bits, the ceiling on how much
  vector execution can shrink the instruction stream;
* instruction reduction R = retired instructions (scalar) / retired
  instructions (vectorized), the achieved shrink;
* estimated arithmetic intensity, FP ops per byte of memory traffic,
  approximated as FP ops per LLC read miss over one cache line;
* LLC read-miss ratio, which separates streaming access (near the ideal
  elen/line ratio) from pointer chasing (far above it).

FP-op counts are taken from the scalar build's VFP_SPEC so that vector
instructions, each covering several operations, do not deflate the count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataQualityError, DomainError
from .collector import MeasurementRecord
from .machine import MachineModel

#: Sentinel arithmetic intensity for kernels with zero observed LLC read
#: misses: unbounded, treated as compute-bound downstream.
AI_UNBOUNDED = math.inf


@dataclass
class KernelAnalysis:
    """Derived metrics for one (kernel, thread count) measurement group."""

    kernel_name: str
    threads: int
    elen_bits: int
    vb: float
    r_ins_reduction_sve: float | None = None
    r_ins_reduction_asimd: float | None = None
    speedup_sve: float | None = None
    speedup_asimd: float | None = None
    ai_est_flop_per_byte: float | None = None
    r_llc: float | None = None

    @property
    def ai_unbounded(self) -> bool:
        return self.ai_est_flop_per_byte == AI_UNBOUNDED

    def to_dict(self) -> dict:
        ai = self.ai_est_flop_per_byte
        return {
            "kernel_name": self.kernel_name,
            "threads": self.threads,
            "elen_bits": self.elen_bits,
            "vb": self.vb,
            "r_ins_reduction_sve": self.r_ins_reduction_sve,
            "r_ins_reduction_asimd": self.r_ins_reduction_asimd,
            "speedup_sve": self.speedup_sve,
            "speedup_asimd": self.speedup_asimd,
            "ai_est_flop_per_byte": None if ai == AI_UNBOUNDED else ai,
            "ai_unbounded": self.ai_unbounded,
            "r_llc": self.r_llc,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelAnalysis":
        fields = dict(doc)
        unbounded = fields.pop("ai_unbounded", False)
        if unbounded:
            fields["ai_est_flop_per_byte"] = AI_UNBOUNDED
        return cls(**fields)


def vectorization_bound(vlen_bits: int, elen_bits: int) -> float:
    """Upper bound on vectorization gain: elements per vector register."""
    if vlen_bits <= 0 or elen_bits <= 0:
        raise DomainError("vlen_bits and elen_bits must be positive")
    if elen_bits > vlen_bits:
        raise DomainError(
            f"element width {elen_bits} exceeds vector length {vlen_bits}; "
            "sub-register elements are unsupported"
        )
    return vlen_bits / elen_bits


def instruction_reduction(ins_nonvec: float, ins_vec: float) -> float:
    """Ratio of retired instructions, scalar build over vectorized build."""
    if ins_nonvec <= 0 or ins_vec <= 0:
        raise DomainError("instruction counts must be > 0")
    return ins_nonvec / ins_vec


def speedup(time_nonvec_ns: float, time_vec_ns: float) -> float:
    """Wall-time ratio, scalar over vectorized; < 1 means a slowdown."""
    if time_nonvec_ns <= 0 or time_vec_ns <= 0:
        raise DomainError("times must be > 0")
    return time_nonvec_ns / time_vec_ns


def estimated_ai(
    fp_ops: float, llc_read_misses: float, cache_line_bytes: int
) -> float:
    """Estimated arithmetic intensity in FLOP per byte.

    Each LLC read miss is charged one cache line of memory traffic. Zero
    misses yield the AI_UNBOUNDED sentinel (effectively compute-bound)
    rather than an error.
    """
    if fp_ops < 0:
        raise DomainError(f"fp_ops must be >= 0, got {fp_ops}")
    if cache_line_bytes <= 0:
        raise DomainError("cache_line_bytes must be > 0")
    if llc_read_misses < 0:
        raise DomainError(f"llc_read_misses must be >= 0, got {llc_read_misses}")
    if llc_read_misses == 0:
        return AI_UNBOUNDED
    return fp_ops / (llc_read_misses * cache_line_bytes)


def llc_miss_ratio(llc_read_misses: float, mem_access_rd: float) -> float:
    """Fraction of load accesses that miss the last-level cache."""
    if mem_access_rd <= 0:
        raise DomainError(f"mem_access_rd must be > 0, got {mem_access_rd}")
    if llc_read_misses < 0:
        raise DomainError(f"llc_read_misses must be >= 0, got {llc_read_misses}")
    if llc_read_misses > mem_access_rd:
        raise DataQualityError(
            f"LLC read misses ({llc_read_misses}) exceed load accesses "
            f"({mem_access_rd}); counters are inconsistent"
        )
    return llc_read_misses / mem_access_rd


def _per_rep(record: MeasurementRecord, counter: str) -> float:
    return record.counters[counter] / record.repetitions


def analyze(
    records: list[MeasurementRecord], model: MachineModel
) -> KernelAnalysis:
    """Derive every available metric for one kernel at one thread count.

    Requires exactly one baseline record; SVE and ASIMD records are
    optional and leave their ratios unset when absent. Counter values and
    wall times are normalized per ROI repetition before cross-variant
    ratios are formed.
    """
    if not records:
        raise DomainError("no records given")
    by_variant: dict[str, MeasurementRecord] = {}
    for rec in records:
        if rec.variant in by_variant:
            raise DomainError(
                f"duplicate {rec.variant!r} record for kernel {rec.kernel_name!r}"
            )
        by_variant[rec.variant] = rec
    if "baseline" not in by_variant:
        raise DomainError(
            f"no scalar reference: kernel {records[0].kernel_name!r} has no "
            "baseline record"
        )
    base = by_variant["baseline"]
    names = {r.kernel_name for r in records}
    if len(names) != 1:
        raise DomainError(f"records mix kernels: {sorted(names)}")
    threads = {r.threads for r in records}
    if len(threads) != 1:
        raise DomainError(f"records mix thread counts: {sorted(threads)}")
    widths = {r.elen_bits for r in records}
    if len(widths) != 1:
        raise DomainError(
            f"records disagree on elen_bits: {sorted(widths)} "
            f"(kernel {base.kernel_name!r})"
        )

    analysis = KernelAnalysis(
        kernel_name=base.kernel_name,
        threads=base.threads,
        elen_bits=base.elen_bits,
        vb=vectorization_bound(model.vlen_bits, base.elen_bits),
    )
    for variant, r_field, s_field in (
        ("sve", "r_ins_reduction_sve", "speedup_sve"),
        ("asimd", "r_ins_reduction_asimd", "speedup_asimd"),
    ):
        vec = by_variant.get(variant)
        if vec is None:
            continue
        setattr(
            analysis,
            r_field,
            instruction_reduction(
                _per_rep(base, "INST_RETIRED"), _per_rep(vec, "INST_RETIRED")
            ),
        )
        setattr(
            analysis,
            s_field,
            speedup(
                base.wall_time_ns / base.repetitions,
                vec.wall_time_ns / vec.repetitions,
            ),
        )

    # AI and miss ratio come from the scalar record only: repetitions cancel
    # inside one record, and scalar VFP_SPEC counts one op per instruction.
    counters = base.counters
    if "VFP_SPEC" in counters and "LL_CACHE_MISS_RD" in counters:
        analysis.ai_est_flop_per_byte = estimated_ai(
            counters["VFP_SPEC"],
            counters["LL_CACHE_MISS_RD"],
            model.cache_line_bytes,
        )
    if "LL_CACHE_MISS_RD" in counters and "MEM_ACCESS_RD" in counters:
        analysis.r_llc = llc_miss_ratio(
            counters["LL_CACHE_MISS_RD"], counters["MEM_ACCESS_RD"]
        )
    return analysis


def group_records(
    records: list[MeasurementRecord],
) -> dict[tuple[str, int], list[MeasurementRecord]]:
    """Bucket records by (kernel_name, threads), preserving input order."""
    groups: dict[tuple[str, int], list[MeasurementRecord]] = {}
    for rec in records:
        groups.setdefault((rec.kernel_name, rec.threads), []).append(rec)
    return groups


def analyze_all(
    records: list[MeasurementRecord], model: MachineModel
) -> tuple[list[KernelAnalysis], list[tuple[str, str]]]:
    """Analyze every (kernel, threads) group; collect per-group errors.

    Returns (analyses, errors) where each error is (group label, message).
    """
    analyses: list[KernelAnalysis] = []
    errors: list[tuple[str, str]] = []
    for (kernel, threads), group in group_records(records).items():
        label = f"{kernel}@{threads}t"
        try:
            analyses.append(analyze(group, model))
        except (DomainError, DataQualityError) as exc:
            errors.append((label, str(exc)))
    return analyses, errors
