"""Pydantic request/response models for the analysis service.

These are the wire forms of the core dataclasses. One representational
difference: an unbounded arithmetic-intensity estimate (zero observed LLC
misses) is carried as ``null`` plus an ``ai_unbounded`` flag, because JSON
has no infinity.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from .. import classifier, metrics, roofline
from ..collector import MeasurementRecord
from ..machine import MachineModel, PmuEvent, machine_model_from_dict


class MachineModelSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    vlen_bits: int
    freq_mhz: float
    fpu_pipelines: int
    flops_per_pipeline_cycle: int = 2
    bw_single_gbs: float
    bw_peak_gbs: float
    max_threads: int
    cache_line_bytes: int
    llc_bytes: int

    def to_core(self) -> MachineModel:
        return machine_model_from_dict(self.model_dump())

    @classmethod
    def from_core(cls, model: MachineModel) -> "MachineModelSchema":
        return cls(
            name=model.name,
            vlen_bits=model.vlen_bits,
            freq_mhz=model.freq_mhz,
            fpu_pipelines=model.fpu_pipelines,
            flops_per_pipeline_cycle=model.flops_per_pipeline_cycle,
            bw_single_gbs=model.bw_single_gbs,
            bw_peak_gbs=model.bw_peak_gbs,
            max_threads=model.max_threads,
            cache_line_bytes=model.cache_line_bytes,
            llc_bytes=model.llc_bytes,
        )


class MeasurementRecordSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kernel_name: str
    variant: Literal["baseline", "asimd", "sve"]
    threads: int = Field(ge=1)
    elen_bits: Literal[16, 32, 64]
    repetitions: int = Field(default=1, ge=1)
    wall_time_ns: int = Field(gt=0)
    counters: dict[str, int]

    def to_core(self) -> MeasurementRecord:
        return MeasurementRecord(**self.model_dump())

    @classmethod
    def from_core(cls, record: MeasurementRecord) -> "MeasurementRecordSchema":
        return cls(**record.to_dict())


class KernelAnalysisSchema(BaseModel):
    kernel_name: str
    threads: int
    elen_bits: int
    vb: float
    r_ins_reduction_sve: float | None = None
    r_ins_reduction_asimd: float | None = None
    speedup_sve: float | None = None
    speedup_asimd: float | None = None
    ai_est_flop_per_byte: float | None = None
    ai_unbounded: bool = False
    r_llc: float | None = None

    def to_core(self) -> metrics.KernelAnalysis:
        return metrics.KernelAnalysis.from_dict(self.model_dump())

    @classmethod
    def from_core(cls, analysis: metrics.KernelAnalysis) -> "KernelAnalysisSchema":
        return cls(**analysis.to_dict())


class ErrorEntry(BaseModel):
    item: str
    message: str


class EventInfoSchema(BaseModel):
    hexcode: str
    name: str
    description: str
    reliable: bool
    note: str = ""

    @classmethod
    def from_core(cls, event: PmuEvent) -> "EventInfoSchema":
        return cls(
            hexcode=f"{event.hexcode:#x}",
            name=event.name,
            description=event.description,
            reliable=event.reliable,
            note=event.note,
        )


class ClassificationSchema(BaseModel):
    kernel_name: str
    threads: int
    label: str
    class_number: int
    evidence: dict[str, float | None]
    warnings: list[str] = Field(default_factory=list)

    @classmethod
    def from_core(cls, c: classifier.Classification) -> "ClassificationSchema":
        evidence = {
            key: (None if math.isinf(value) else value)
            for key, value in c.evidence.items()
        }
        return cls(
            kernel_name=c.kernel_name,
            threads=c.threads,
            label=c.label,
            class_number=c.class_number,
            evidence=evidence,
            warnings=list(c.warnings),
        )


class RooflinePointSchema(BaseModel):
    kernel_name: str
    threads: int
    ai: float
    attainable_scalar: float
    attainable_vector: float
    region: str

    @classmethod
    def from_core(cls, p: roofline.RooflinePoint) -> "RooflinePointSchema":
        return cls(
            kernel_name=p.kernel_name,
            threads=p.threads,
            ai=p.ai,
            attainable_scalar=p.attainable_scalar,
            attainable_vector=p.attainable_vector,
            region=p.region,
        )


class AnalyzeRequest(BaseModel):
    machine: str | MachineModelSchema = "grace"
    measurements: list[MeasurementRecordSchema]


class AnalyzeResponse(BaseModel):
    machine: str
    analyses: list[KernelAnalysisSchema]
    errors: list[ErrorEntry] = Field(default_factory=list)


class ClassifyRequest(BaseModel):
    machine: str | MachineModelSchema = "grace"
    measurements: list[MeasurementRecordSchema] | None = None
    analyses: list[KernelAnalysisSchema] | None = None
    reduction_threshold: float | None = None
    rllc_threshold: float | None = None
    warn_vector_inflection: bool = True


class ClassifyResponse(BaseModel):
    machine: str
    rows: list[ClassificationSchema]
    errors: list[ErrorEntry] = Field(default_factory=list)
    text_table: str
    csv_table: str


class RooflineRequest(BaseModel):
    machine: str | MachineModelSchema = "grace"
    elen_bits: int = 64
    threads: int = Field(default=1, ge=1)
    normalize: bool = False
    svg: bool = False
    analyses: list[KernelAnalysisSchema] = Field(default_factory=list)


class RooflineResponse(BaseModel):
    machine: str
    csv_table: str
    svg: str | None = None
    points: list[RooflinePointSchema] = Field(default_factory=list)
    skipped: list[str] = Field(default_factory=list)


class BenchRequest(BaseModel):
    kernel: Literal["spmv", "stream_copy", "stream_triad"]
    variant: Literal["baseline", "asimd", "sve"] = "baseline"
    backend: Literal["live", "synthetic"] = "synthetic"
    machine: str | MachineModelSchema = "grace"
    threads: int = Field(default=1, ge=1)
    elen_bits: Literal[16, 32, 64] = 64
    repetitions: int = Field(default=5, ge=5)
    # SpMV knobs
    repeat: int = Field(default=1, ge=1)
    n: int | None = Field(default=None, ge=1)
    density: float = Field(default=0.01, gt=0.0, le=1.0)
    seed: int = 42
    # STREAM knobs
    stream_scalar: float = 3.0


class BenchResponse(BaseModel):
    measurements: list[MeasurementRecordSchema]
    warnings: list[str] = Field(default_factory=list)
    calibrated_repetitions: int


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
