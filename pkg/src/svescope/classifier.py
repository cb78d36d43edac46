"""Decision tree mapping kernel metrics to four performance classes.

The tree asks three questions in order:

1. Did vectorization shrink the retired-instruction stream at all?
   (instruction reduction below the threshold -> NotVectorized)
2. Is the kernel compute-bound on the scalar roofline? (estimated
   arithmetic intensity at or above the scalar inflection -> Speedup,
   with a warning when the vectorized roof would push it back under)
3. For memory-bound kernels, does the LLC read-miss ratio look like
   streaming (near the ideal elen/line ratio -> BandwidthBound) or like
   pointer chasing (above it -> LatencyBound)?

Class numbers default to 1=NotVectorized, 2=BandwidthBound,
3=LatencyBound, 4=Speedup; the mapping is configurable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import DomainError, MissingFieldError
from .metrics import KernelAnalysis
from .roofline import RooflineConfig, inflection_scalar, inflection_vector

NOT_VECTORIZED = "NotVectorized"
BANDWIDTH_BOUND = "BandwidthBound"
LATENCY_BOUND = "LatencyBound"
SPEEDUP = "Speedup"

LABELS = (NOT_VECTORIZED, BANDWIDTH_BOUND, LATENCY_BOUND, SPEEDUP)

DEFAULT_CLASS_NUMBERS = {
    NOT_VECTORIZED: 1,
    BANDWIDTH_BOUND: 2,
    LATENCY_BOUND: 3,
    SPEEDUP: 4,
}

#: Warning attached when a compute-bound kernel sits below the vector
#: inflection: successful vectorization would make it memory-bound.
SHIFTED_MEMORY_BOUND_WARNING = "vectorization-shifted memory bound"


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for the decision tree.

    ``rllc_threshold`` of None means the ideal streaming ratio is computed
    per kernel as elen_bytes / cache_line_bytes (0.125, i.e. the 13% rule,
    for 8-byte elements on 64-byte lines).
    """

    reduction_threshold: float = 1.2
    rllc_threshold: float | None = None
    use_vector_inflection_warning: bool = True
    class_numbers: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_NUMBERS)
    )

    def __post_init__(self) -> None:
        if not self.reduction_threshold > 1:
            raise DomainError(
                f"reduction_threshold must be > 1, got {self.reduction_threshold}"
            )
        if self.rllc_threshold is not None and not 0 < self.rllc_threshold < 1:
            raise DomainError(
                f"rllc_threshold must be in (0, 1), got {self.rllc_threshold}"
            )
        if set(self.class_numbers) != set(LABELS):
            raise DomainError(
                f"class_numbers must map exactly the labels {LABELS}"
            )

    def effective_rllc_threshold(self, elen_bits: int, cache_line_bytes: int) -> float:
        if self.rllc_threshold is not None:
            return self.rllc_threshold
        return (elen_bits / 8) / cache_line_bytes


@dataclass
class Classification:
    """The class assigned to one kernel plus the quantities that led there."""

    kernel_name: str
    threads: int
    label: str
    class_number: int
    evidence: dict[str, float]
    warnings: list[str] = field(default_factory=list)


def classify(
    analysis: KernelAnalysis,
    config: RooflineConfig,
    cconfig: ClassifierConfig | None = None,
) -> Classification:
    """Run the decision tree on one analysis.

    Inflection points are evaluated at the analysis's own thread count and
    element width; ``config`` supplies the machine model. The evidence dict
    records every threshold comparison on the path actually taken.
    """
    cconfig = cconfig or ClassifierConfig()
    r = analysis.r_ins_reduction_sve
    if r is None:
        raise MissingFieldError(
            "r_ins_reduction_sve", f"kernel {analysis.kernel_name!r}"
        )
    ai = analysis.ai_est_flop_per_byte
    if ai is None:
        raise MissingFieldError(
            "ai_est_flop_per_byte", f"kernel {analysis.kernel_name!r}"
        )

    evidence: dict[str, float] = {
        "r_ins_reduction_sve": r,
        "reduction_threshold": cconfig.reduction_threshold,
    }
    warnings: list[str] = []

    def done(label: str) -> Classification:
        return Classification(
            kernel_name=analysis.kernel_name,
            threads=analysis.threads,
            label=label,
            class_number=cconfig.class_numbers[label],
            evidence=evidence,
            warnings=warnings,
        )

    # Branch 1: effective vectorization at all?
    if r < cconfig.reduction_threshold:
        return done(NOT_VECTORIZED)

    # Branch 2: compute- vs memory-bound on the scalar roof.
    eff = replace(config, elen_bits=analysis.elen_bits, threads=analysis.threads)
    ai_irr = inflection_scalar(eff)
    evidence["ai_est"] = ai
    evidence["ai_irr"] = ai_irr
    if ai >= ai_irr:
        if cconfig.use_vector_inflection_warning:
            ai_irv = inflection_vector(eff)
            evidence["ai_irv"] = ai_irv
            if ai < ai_irv:
                warnings.append(SHIFTED_MEMORY_BOUND_WARNING)
        return done(SPEEDUP)

    # Branch 3: bandwidth- vs latency-bound within memory-bound.
    r_llc = analysis.r_llc
    if r_llc is None:
        raise MissingFieldError("r_llc", f"kernel {analysis.kernel_name!r}")
    threshold = cconfig.effective_rllc_threshold(
        analysis.elen_bits, config.model.cache_line_bytes
    )
    evidence["r_llc"] = r_llc
    evidence["rllc_threshold"] = threshold
    if r_llc <= threshold:
        return done(BANDWIDTH_BOUND)
    return done(LATENCY_BOUND)


@dataclass
class ClassificationTable:
    """Batch classification result: one row per analyzable input."""

    rows: list[Classification]
    errors: list[tuple[str, str]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [
            "kernel,threads,class_number,label,r_ins_reduction,ai_est,"
            "ai_irr,ai_irv,r_llc,warnings"
        ]
        for row in self.rows:
            ev = row.evidence
            cells = [
                row.kernel_name,
                str(row.threads),
                str(row.class_number),
                row.label,
                _cell(ev.get("r_ins_reduction_sve")),
                _cell(ev.get("ai_est")),
                _cell(ev.get("ai_irr")),
                _cell(ev.get("ai_irv")),
                _cell(ev.get("r_llc")),
                ";".join(row.warnings),
            ]
            lines.append(",".join(cells))
        for label, message in self.errors:
            lines.append(f"{label},,,error: {message.replace(',', ';')},,,,,,")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        headers = ["kernel", "threads", "class", "label", "r_ins", "ai_est", "r_llc", "warnings"]
        body = []
        for row in self.rows:
            ev = row.evidence
            body.append(
                [
                    row.kernel_name,
                    str(row.threads),
                    str(row.class_number),
                    row.label,
                    _cell(ev.get("r_ins_reduction_sve")),
                    _cell(ev.get("ai_est")),
                    _cell(ev.get("r_llc")),
                    ";".join(row.warnings) or "-",
                ]
            )
        widths = [
            max(len(headers[i]), *(len(r[i]) for r in body)) if body else len(headers[i])
            for i in range(len(headers))
        ]
        lines = [
            "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
            "  ".join("-" * w for w in widths),
        ]
        for r in body:
            lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
        for label, message in self.errors:
            lines.append(f"{label}: ERROR: {message}")
        return "\n".join(lines) + "\n"


def _cell(value: float | None) -> str:
    if value is None:
        return ""
    if value == float("inf"):
        return "inf"
    return f"{value:.6g}"


def classify_suite(
    analyses: list[KernelAnalysis],
    config: RooflineConfig,
    cconfig: ClassifierConfig | None = None,
) -> ClassificationTable:
    """Classify a list of analyses, collecting per-item errors non-fatally."""
    table = ClassificationTable(rows=[])
    for analysis in analyses:
        label = f"{analysis.kernel_name}@{analysis.threads}t"
        try:
            table.rows.append(classify(analysis, config, cconfig))
        except (DomainError, MissingFieldError) as exc:
            table.errors.append((label, str(exc)))
    return table
