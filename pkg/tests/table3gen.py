"""Generator for the 26-case classification fixture.

Thirteen workload profiles at two thread counts, with counter values
constructed so the derived metrics land each case in its published
performance class. Regenerate the shipped JSON with:

    python tests/table3gen.py
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

FIXTURE_DIR = Path(__file__).parent / "fixtures"

GRACE_FREQ_MHZ = 3447
BASE_WALL_NS = 1_000_000_000
SVE_INST = 1_000_000_000


@dataclass(frozen=True)
class Case:
    kernel: str
    elen_bits: int
    # (value at 1 thread, value at 72 threads)
    r_sve: tuple[float, float]
    speedup_sve: tuple[float, float]
    expected_class: tuple[int, int]
    ai: float
    r_llc: float
    misses: int
    mem_access: int
    r_asimd: float | None = None


# Misses/mem_access are chosen so ai == VFP/(misses*64) and
# r_llc == misses/mem_access hold exactly in integer arithmetic.
CASES = [
    Case("yolov3", 32, (3.6, 2.2), (3.2, 2.8), (4, 4), ai=30.0, r_llc=0.0625,
         misses=1_000_000, mem_access=16_000_000),
    Case("llm_training", 32, (3.8, 2.0), (3.0, 1.9), (4, 4), ai=40.0, r_llc=0.0625,
         misses=1_000_000, mem_access=16_000_000),
    Case("llm_inference", 32, (3.7, 1.9), (2.4, 1.8), (4, 4), ai=35.0, r_llc=0.0625,
         misses=1_000_000, mem_access=16_000_000),
    Case("qc_simulator", 64, (1.8, 1.7), (1.5, 1.0), (4, 2), ai=1.5, r_llc=0.125,
         misses=1_000_000, mem_access=8_000_000),
    Case("fft1d", 64, (1.02, 1.02), (1.0, 1.0), (1, 1), ai=1.5, r_llc=0.3,
         misses=300_000, mem_access=1_000_000),
    Case("fft2d", 64, (1.05, 1.04), (1.0, 1.0), (1, 1), ai=1.2, r_llc=0.3,
         misses=300_000, mem_access=1_000_000),
    Case("stream", 64, (1.8, 1.8), (1.05, 1.0), (2, 2), ai=0.0, r_llc=0.125,
         misses=1_000_000, mem_access=8_000_000),
    Case("dgemm", 64, (1.7, 1.6), (1.8, 1.6), (4, 4), ai=100.0, r_llc=0.01,
         misses=100_000, mem_access=10_000_000),
    Case("sgemm", 32, (3.6, 3.4), (3.5, 3.2), (4, 4), ai=200.0, r_llc=0.01,
         misses=100_000, mem_access=10_000_000),
    Case("spmv", 64, (1.99, 1.9), (1.02, 1.0), (3, 3), ai=0.1, r_llc=0.9,
         misses=900_000, mem_access=1_000_000, r_asimd=1.0),
    Case("jacobi2d", 64, (1.6, 1.1), (1.02, 0.95), (2, 1), ai=0.25, r_llc=0.125,
         misses=1_000_000, mem_access=8_000_000),
    Case("alexnet", 32, (3.7, 2.5), (2.9, 2.4), (4, 4), ai=25.0, r_llc=0.0625,
         misses=1_000_000, mem_access=16_000_000),
    Case("autodock", 64, (1.6, 1.6), (1.5, 1.4), (4, 4), ai=12.0, r_llc=0.05,
         misses=500_000, mem_access=10_000_000),
]

CLASS_LABELS = {1: "NotVectorized", 2: "BandwidthBound", 3: "LatencyBound", 4: "Speedup"}


def _cycles(wall_ns: int) -> int:
    return wall_ns * GRACE_FREQ_MHZ // 1000


def _record(kernel, variant, threads, elen_bits, counters, wall_ns) -> dict:
    return {
        "kernel_name": kernel,
        "variant": variant,
        "threads": threads,
        "elen_bits": elen_bits,
        "repetitions": 1,
        "wall_time_ns": wall_ns,
        "counters": dict(sorted(counters.items())),
    }


def build_records() -> list[dict]:
    records = []
    for case in CASES:
        fp_ops = round(case.ai * 64 * case.misses)
        assert abs(fp_ops - case.ai * 64 * case.misses) < 1e-9, case.kernel
        assert abs(case.misses / case.mem_access - case.r_llc) < 1e-12, case.kernel
        for ti, threads in enumerate((1, 72)):
            base_inst = round(case.r_sve[ti] * SVE_INST)
            records.append(
                _record(
                    case.kernel, "baseline", threads, case.elen_bits,
                    {
                        "INST_RETIRED": base_inst,
                        "CPU_CYCLES": _cycles(BASE_WALL_NS),
                        "LL_CACHE_MISS_RD": case.misses,
                        "MEM_ACCESS_RD": case.mem_access,
                        "STALL_BACKEND": _cycles(BASE_WALL_NS) // 3,
                        "VFP_SPEC": fp_ops,
                    },
                    BASE_WALL_NS,
                )
            )
            sve_wall = round(BASE_WALL_NS / case.speedup_sve[ti])
            records.append(
                _record(
                    case.kernel, "sve", threads, case.elen_bits,
                    {"INST_RETIRED": SVE_INST, "CPU_CYCLES": _cycles(sve_wall)},
                    sve_wall,
                )
            )
            if case.r_asimd is not None:
                asimd_inst = round(base_inst / case.r_asimd)
                records.append(
                    _record(
                        case.kernel, "asimd", threads, case.elen_bits,
                        {"INST_RETIRED": asimd_inst, "CPU_CYCLES": _cycles(BASE_WALL_NS)},
                        BASE_WALL_NS,
                    )
                )
    return records


def expected_classes() -> list[dict]:
    expected = []
    for case in CASES:
        for ti, threads in enumerate((1, 72)):
            number = case.expected_class[ti]
            expected.append(
                {
                    "kernel_name": case.kernel,
                    "threads": threads,
                    "class_number": number,
                    "label": CLASS_LABELS[number],
                }
            )
    return expected


def write_fixtures() -> None:
    FIXTURE_DIR.mkdir(exist_ok=True)
    measurements = FIXTURE_DIR / "table3_measurements.json"
    expected = FIXTURE_DIR / "table3_expected.json"
    measurements.write_text(json.dumps(build_records(), indent=2) + "\n")
    expected.write_text(json.dumps(expected_classes(), indent=2) + "\n")
    print(f"wrote {measurements} and {expected}")


if __name__ == "__main__":
    write_fixtures()
