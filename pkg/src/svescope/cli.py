"""Command-line front end: collect -> analyze -> classify -> report.

Each subcommand builds the same request models the HTTP service consumes
and either executes them in-process (default) or posts them to a running
service given via ``--server``. Benching with the live backend always
happens on the local host, since hardware counters cannot be read remotely.

Exit codes: 0 success, 1 input error, 2 counter backend unavailable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from pydantic import ValidationError

from .errors import BackendUnavailableError, SvescopeError
from .machine import load_machine_model
from .service import app as service_app
from .service.schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    BenchRequest,
    BenchResponse,
    ClassifyRequest,
    ClassifyResponse,
    EventInfoSchema,
    KernelAnalysisSchema,
    MachineModelSchema,
    MeasurementRecordSchema,
    RooflineRequest,
    RooflineResponse,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BACKEND = 2


def _fail(message: str, code: int) -> int:
    print(f"svescope: error: {message}", file=sys.stderr)
    return code


def _resolve_machine_arg(value: str) -> str | MachineModelSchema:
    """Turn --machine into a built-in name or a full model document."""
    if os.path.exists(value):
        with open(value) as fh:
            text = fh.read()
        return MachineModelSchema.from_core(load_machine_model(text))
    if value.lstrip().startswith("{"):
        return MachineModelSchema.from_core(load_machine_model(value))
    return value  # built-in name; validated downstream


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _post(args, path: str, request, response_model):
    """Dispatch one request: in-process by default, HTTP with --server."""
    if args.server:
        import httpx

        url = args.server.rstrip("/") + path
        try:
            resp = httpx.post(
                url, json=request.model_dump(mode="json"), timeout=300.0
            )
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(
                f"cannot reach server {args.server}: {exc}", kind="capability"
            ) from exc
        if resp.status_code == 409:
            raise BackendUnavailableError(resp.json().get("detail", resp.text))
        if resp.status_code >= 400:
            detail = resp.json().get("detail", resp.text)
            raise SvescopeError(f"server rejected request: {detail}")
        return response_model.model_validate(resp.json())
    handler = {
        "/analyze": service_app.analyze_measurements,
        "/classify": service_app.classify_measurements,
        "/roofline": service_app.roofline_chart,
        "/bench": service_app.bench_kernel,
    }[path]
    return handler(request)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SvescopeError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SvescopeError(f"{path} is not valid JSON: {exc}") from exc


def _measurements_from_doc(doc, where: str) -> list[MeasurementRecordSchema]:
    if not isinstance(doc, list):
        raise SvescopeError(f"{where}: expected a JSON array of records")
    return [MeasurementRecordSchema.model_validate(entry) for entry in doc]


def _split_input_doc(doc, where: str):
    """Accept either a measurement array or an analyses document."""
    if isinstance(doc, dict) and "analyses" in doc:
        analyses = [
            KernelAnalysisSchema.model_validate(entry) for entry in doc["analyses"]
        ]
        return None, analyses
    return _measurements_from_doc(doc, where), None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_events(args) -> int:
    if args.server:
        import httpx

        resp = httpx.get(args.server.rstrip("/") + "/events", timeout=60.0)
        resp.raise_for_status()
        events = [EventInfoSchema.model_validate(e) for e in resp.json()]
    else:
        events = service_app.list_events()
    if args.format == "json":
        text = json.dumps([e.model_dump() for e in events], indent=2) + "\n"
    elif args.format == "csv":
        lines = ["hexcode,name,description,reliable,note"]
        for e in events:
            lines.append(
                f"{e.hexcode},{e.name},{e.description.replace(',', ';')},"
                f"{str(e.reliable).lower()},{e.note.replace(',', ';')}"
            )
        text = "\n".join(lines) + "\n"
    else:
        width = max(len(e.name) for e in events)
        lines = []
        for e in events:
            flag = "" if e.reliable else "  [unreliable: " + e.note + "]"
            lines.append(f"{e.hexcode:>8}  {e.name.ljust(width)}  {e.description}{flag}")
        text = "\n".join(lines) + "\n"
    _write_out(text, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.backend == "replay":
        return _fail(
            "bench generates measurements and supports --backend live|synthetic; "
            "use 'analyze' on an existing measurement document instead",
            EXIT_INPUT,
        )
    request = BenchRequest(
        kernel=args.kernel,
        variant=args.variant,
        backend=args.backend,
        machine=_resolve_machine_arg(args.machine),
        threads=args.threads,
        elen_bits=args.elen,
        repetitions=args.repetitions,
        repeat=args.repeat,
        n=args.n,
        density=args.density,
        seed=args.seed,
    )
    response: BenchResponse = _post(args, "/bench", request, BenchResponse)
    for warning in response.warnings:
        print(f"svescope: warning: {warning}", file=sys.stderr)
    doc = [m.model_dump() for m in response.measurements]
    _write_out(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


_ANALYSIS_COLUMNS = (
    "kernel_name",
    "threads",
    "elen_bits",
    "vb",
    "r_ins_reduction_sve",
    "r_ins_reduction_asimd",
    "speedup_sve",
    "speedup_asimd",
    "ai_est_flop_per_byte",
    "r_llc",
)


def _analyses_table(analyses: list[KernelAnalysisSchema], csv: bool) -> str:
    def cell(a: KernelAnalysisSchema, col: str) -> str:
        value = getattr(a, col)
        if col == "ai_est_flop_per_byte" and a.ai_unbounded:
            return "unbounded"
        if value is None:
            return "" if csv else "-"
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    if csv:
        lines = [",".join(_ANALYSIS_COLUMNS)]
        for a in analyses:
            lines.append(",".join(cell(a, col) for col in _ANALYSIS_COLUMNS))
        return "\n".join(lines) + "\n"
    rows = [[cell(a, col) for col in _ANALYSIS_COLUMNS] for a in analyses]
    widths = [
        max(len(_ANALYSIS_COLUMNS[i]), *(len(r[i]) for r in rows)) if rows else len(c)
        for i, c in enumerate(_ANALYSIS_COLUMNS)
    ]
    lines = ["  ".join(c.ljust(widths[i]) for i, c in enumerate(_ANALYSIS_COLUMNS))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(r))))
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    measurements = _measurements_from_doc(
        _load_json(args.measurements), args.measurements
    )
    request = AnalyzeRequest(
        machine=_resolve_machine_arg(args.machine), measurements=measurements
    )
    response: AnalyzeResponse = _post(args, "/analyze", request, AnalyzeResponse)
    for err in response.errors:
        print(f"svescope: warning: {err.item}: {err.message}", file=sys.stderr)
    if args.format == "json":
        text = json.dumps(response.model_dump(), indent=2) + "\n"
    else:
        text = _analyses_table(response.analyses, csv=args.format == "csv")
    _write_out(text, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    measurements, analyses = _split_input_doc(_load_json(args.input), args.input)
    request = ClassifyRequest(
        machine=_resolve_machine_arg(args.machine),
        measurements=measurements,
        analyses=analyses,
        reduction_threshold=args.reduction_threshold,
        rllc_threshold=args.rllc_threshold,
        warn_vector_inflection=not args.no_inflection_warning,
    )
    response: ClassifyResponse = _post(args, "/classify", request, ClassifyResponse)
    if args.format == "json":
        text = json.dumps(response.model_dump(), indent=2) + "\n"
    elif args.format == "csv":
        text = response.csv_table
    else:
        text = response.text_table
    _write_out(text, args.out)
    return EXIT_OK


def cmd_roofline(args) -> int:
    analyses: list[KernelAnalysisSchema] = []
    if args.analyses:
        measurements, parsed = _split_input_doc(_load_json(args.analyses), args.analyses)
        if parsed is not None:
            analyses = parsed
        else:
            analyze_req = AnalyzeRequest(
                machine=_resolve_machine_arg(args.machine),
                measurements=measurements,
            )
            analyses = _post(args, "/analyze", analyze_req, AnalyzeResponse).analyses
    request = RooflineRequest(
        machine=_resolve_machine_arg(args.machine),
        elen_bits=args.elen,
        threads=args.threads,
        normalize=args.normalize,
        svg=args.svg is not None,
        analyses=analyses,
    )
    response: RooflineResponse = _post(args, "/roofline", request, RooflineResponse)
    for kernel in response.skipped:
        print(
            f"svescope: warning: {kernel}: unbounded arithmetic intensity, "
            "not plottable",
            file=sys.stderr,
        )
    _write_out(response.csv_table, args.out)
    if args.svg is not None and response.svg is not None:
        with open(args.svg, "w") as fh:
            fh.write(response.svg)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(service_app.app, host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _default_threads() -> int:
    env = os.environ.get("OMP_NUM_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svescope",
        description="Vectorization-effectiveness analysis for ARM SVE platforms",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--machine",
        default="grace",
        help="built-in profile name, JSON file path, or inline JSON (default: grace)",
    )
    common.add_argument(
        "--server", default=None, help="base URL of a running svescope service"
    )
    common.add_argument(
        "--out", default=None, help="output path (default: stdout)"
    )
    formats = argparse.ArgumentParser(add_help=False)
    formats.add_argument(
        "--format", choices=("text", "csv", "json"), default="text"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "events", parents=[common, formats], help="print the PMU event registry"
    )
    p.set_defaults(func=cmd_events)

    p = sub.add_parser(
        "bench", parents=[common], help="run a built-in kernel and emit measurements"
    )
    p.add_argument("--kernel", choices=("spmv", "stream_copy", "stream_triad"),
                   default="spmv")
    p.add_argument("--variant", choices=("baseline", "asimd", "sve"),
                   default="baseline")
    p.add_argument("--backend", choices=("live", "replay", "synthetic"),
                   default="synthetic")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (default: OMP_NUM_THREADS or 1)")
    p.add_argument("--elen", type=int, choices=(16, 32, 64), default=64)
    p.add_argument("--repetitions", type=int, default=5,
                   help="measurement repetitions (minimum 5)")
    p.add_argument("--repeat", type=int, default=1,
                   help="SpMV compute repetitions per nonzero")
    p.add_argument("--n", type=int, default=None, help="problem size")
    p.add_argument("--density", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser(
        "analyze", parents=[common, formats],
        help="derive metrics from a measurement document",
    )
    p.add_argument("--measurements", required=True, help="measurement JSON path")
    p.add_argument("--backend", choices=("live", "replay", "synthetic"),
                   default="replay", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser(
        "classify", parents=[common, formats],
        help="classify kernels into the four performance classes",
    )
    p.add_argument("--input", required=True,
                   help="measurement document or analyses document (JSON)")
    p.add_argument("--reduction-threshold", type=float, default=None)
    p.add_argument("--rllc-threshold", type=float, default=None)
    p.add_argument("--no-inflection-warning", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser(
        "roofline", parents=[common], help="emit roofline CSV (and optional SVG)"
    )
    p.add_argument("--analyses", default=None,
                   help="analyses or measurement document (JSON)")
    p.add_argument("--elen", type=int, choices=(16, 32, 64), default=64)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--normalize", action="store_true",
                   help="scale throughput so the scalar peak reads 1.0")
    p.add_argument("--svg", default=None, help="also render an SVG chart here")
    p.set_defaults(func=cmd_roofline)

    p = sub.add_parser("serve", help="run the HTTP analysis service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8337)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BackendUnavailableError as exc:
        return _fail(str(exc), EXIT_BACKEND)
    except ValidationError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except SvescopeError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except OSError as exc:
        return _fail(str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
