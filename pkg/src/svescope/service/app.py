"""FastAPI service wrapping the analysis pipeline.

Measurement documents are collected wherever the kernels run (typically on
ARM hosts via the CLI) and posted here for analysis, classification, and
roofline rendering. Every handler is a plain function over the pydantic
schemas, so the CLI can call the same code in-process when no server is
configured.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import run_bench
from ..classifier import ClassifierConfig, classify_suite
from ..errors import BackendUnavailableError, SvescopeError
from ..machine import BUILTIN_MODELS, MachineModel, REGISTRY
from ..metrics import KernelAnalysis, analyze_all
from ..roofline import RooflineConfig, render_svg, roofline_dataset
from ..workloads import SpmvParams, StreamParams
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    BenchRequest,
    BenchResponse,
    ClassificationSchema,
    ClassifyRequest,
    ClassifyResponse,
    ErrorEntry,
    EventInfoSchema,
    HealthResponse,
    KernelAnalysisSchema,
    MachineModelSchema,
    MeasurementRecordSchema,
    RooflinePointSchema,
    RooflineRequest,
    RooflineResponse,
)

app = FastAPI(
    title="svescope",
    description="Vectorization-effectiveness analysis for ARM SVE platforms",
)


@app.exception_handler(BackendUnavailableError)
async def _backend_unavailable(request: Request, exc: BackendUnavailableError):
    return JSONResponse(status_code=409, content={"detail": str(exc)})


@app.exception_handler(SvescopeError)
async def _domain_error(request: Request, exc: SvescopeError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


def _resolve_machine(machine: str | MachineModelSchema) -> MachineModel:
    if isinstance(machine, MachineModelSchema):
        return machine.to_core()
    from ..machine import load_machine_model

    return load_machine_model(machine)


@app.get("/healthz", response_model=HealthResponse)
def healthz() -> HealthResponse:
    return HealthResponse(version=__version__)


@app.get("/events", response_model=list[EventInfoSchema])
def list_events() -> list[EventInfoSchema]:
    """The PMU event registry, including events flagged as unreliable."""
    return [EventInfoSchema.from_core(ev) for ev in REGISTRY.all_events()]


@app.get("/machines/{name}", response_model=MachineModelSchema)
def get_machine(name: str) -> MachineModelSchema:
    if name not in BUILTIN_MODELS:
        raise HTTPException(
            status_code=404,
            detail=f"unknown machine {name!r}; built-ins: {sorted(BUILTIN_MODELS)}",
        )
    return MachineModelSchema.from_core(BUILTIN_MODELS[name])


@app.post("/machines/validate", response_model=MachineModelSchema)
def validate_machine(machine: MachineModelSchema) -> MachineModelSchema:
    """Validate a machine document; returns the normalized form."""
    return MachineModelSchema.from_core(machine.to_core())


@app.post("/analyze", response_model=AnalyzeResponse)
def analyze_measurements(request: AnalyzeRequest) -> AnalyzeResponse:
    """Derive per-(kernel, threads) metrics from raw measurement records."""
    model = _resolve_machine(request.machine)
    records = [m.to_core() for m in request.measurements]
    analyses, errors = analyze_all(records, model)
    return AnalyzeResponse(
        machine=model.name,
        analyses=[KernelAnalysisSchema.from_core(a) for a in analyses],
        errors=[ErrorEntry(item=item, message=msg) for item, msg in errors],
    )


def _analyses_from_request(
    request: ClassifyRequest, model: MachineModel
) -> tuple[list[KernelAnalysis], list[ErrorEntry]]:
    if request.analyses is not None:
        return [a.to_core() for a in request.analyses], []
    if request.measurements is not None:
        records = [m.to_core() for m in request.measurements]
        analyses, errors = analyze_all(records, model)
        return analyses, [ErrorEntry(item=i, message=m) for i, m in errors]
    raise SvescopeError("classify needs either measurements or analyses")


@app.post("/classify", response_model=ClassifyResponse)
def classify_measurements(request: ClassifyRequest) -> ClassifyResponse:
    """Run the four-class decision tree over analyses or raw measurements."""
    model = _resolve_machine(request.machine)
    analyses, errors = _analyses_from_request(request, model)
    cconfig_kwargs = {"use_vector_inflection_warning": request.warn_vector_inflection}
    if request.reduction_threshold is not None:
        cconfig_kwargs["reduction_threshold"] = request.reduction_threshold
    if request.rllc_threshold is not None:
        cconfig_kwargs["rllc_threshold"] = request.rllc_threshold
    cconfig = ClassifierConfig(**cconfig_kwargs)
    table = classify_suite(analyses, RooflineConfig(model=model), cconfig)
    table.errors = [(e.item, e.message) for e in errors] + table.errors
    return ClassifyResponse(
        machine=model.name,
        rows=[ClassificationSchema.from_core(row) for row in table.rows],
        errors=[ErrorEntry(item=item, message=msg) for item, msg in table.errors],
        text_table=table.to_text(),
        csv_table=table.to_csv(),
    )


@app.post("/roofline", response_model=RooflineResponse)
def roofline_chart(request: RooflineRequest) -> RooflineResponse:
    """Emit the roofline dataset (CSV, optionally SVG) for a configuration."""
    model = _resolve_machine(request.machine)
    config = RooflineConfig(
        model=model, elen_bits=request.elen_bits, threads=request.threads
    )
    dataset = roofline_dataset(
        config,
        [a.to_core() for a in request.analyses],
        normalize=request.normalize,
    )
    return RooflineResponse(
        machine=model.name,
        csv_table=dataset.to_csv(),
        svg=render_svg(dataset) if request.svg else None,
        points=[RooflinePointSchema.from_core(p) for p in dataset.points],
        skipped=dataset.skipped,
    )


@app.post("/bench", response_model=BenchResponse)
def bench_kernel(request: BenchRequest) -> BenchResponse:
    """Run one built-in kernel on the service host and return its records.

    The live backend counts on the machine serving this request; remote
    callers normally use the synthetic backend here and run live benches
    through the CLI on the target host.
    """
    model = _resolve_machine(request.machine)
    if request.kernel == "spmv":
        params = SpmvParams(
            repeat=request.repeat,
            elen_bits=request.elen_bits,
            threads=request.threads,
            n=request.n or 2048,
            density=request.density,
            seed=request.seed,
        )
    else:
        params = StreamParams(
            n=request.n or 1_000_000,
            elen_bits=request.elen_bits,
            op="copy" if request.kernel == "stream_copy" else "triad",
            threads=request.threads,
            scalar=request.stream_scalar,
        )
    outcome = run_bench(
        request.kernel,
        params,
        model,
        backend=request.backend,
        variant=request.variant,
        repetitions=request.repetitions,
    )
    return BenchResponse(
        measurements=[MeasurementRecordSchema.from_core(outcome.record)],
        warnings=outcome.warnings,
        calibrated_repetitions=outcome.calibrated_repetitions,
    )
