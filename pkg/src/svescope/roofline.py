"""Roofline model extended with a vectorized performance roof.

Two roofs are drawn for a platform: the scalar FP peak and the vector peak,
which sits a factor VB = vlen/elen higher. Their intersections with the
memory-bandwidth line give two inflection points:

* the scalar inflection (peak scalar throughput / peak bandwidth), left of
  which a kernel is memory-bound and vectorization cannot help, and
* the vector inflection, VB times further right.

Kernels whose arithmetic intensity falls between the two are compute-bound
today but become memory-bound once vectorized (the transition region), the
actionable diagnostic this model adds to the classic single-roof picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError
from .machine import MachineModel, bandwidth_at, peak_scalar_flops
from .metrics import AI_UNBOUNDED, KernelAnalysis, vectorization_bound

MEMORY_BOUND = "memory_bound"
TRANSITION = "transition"
COMPUTE_BOUND = "compute_bound"


@dataclass(frozen=True)
class RooflineConfig:
    """Platform, element width, and thread count a roofline is drawn for."""

    model: MachineModel
    elen_bits: int = 64
    threads: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.threads <= self.model.max_threads:
            raise DomainError(
                f"threads must be in [1, {self.model.max_threads}], "
                f"got {self.threads}"
            )
        # raises if elen exceeds vlen
        vectorization_bound(self.model.vlen_bits, self.elen_bits)

    @property
    def vb(self) -> float:
        return vectorization_bound(self.model.vlen_bits, self.elen_bits)


@dataclass(frozen=True)
class RooflinePoint:
    """One kernel placed on the roofline."""

    kernel_name: str
    threads: int
    ai: float
    attainable_scalar: float
    attainable_vector: float
    region: str


def inflection_scalar(config: RooflineConfig) -> float:
    """Scalar-roof inflection in FLOP/byte: peak throughput / peak bandwidth."""
    return peak_scalar_flops(config.model, config.threads) / bandwidth_at(
        config.model, config.threads
    )


def inflection_vector(config: RooflineConfig) -> float:
    """Vector-roof inflection: the scalar inflection scaled by VB."""
    return inflection_scalar(config) * config.vb


def attainable(config: RooflineConfig, ai: float) -> tuple[float, float, str]:
    """Attainable (scalar, vector) GFLOP/s at the given intensity, plus region.

    Region boundaries are left-closed: ai == the scalar inflection already
    counts as transition, ai == the vector inflection as compute-bound.
    An unbounded (infinite) ai is compute-bound at both peaks.
    """
    if not (ai >= 0):  # also rejects NaN
        raise DomainError(f"arithmetic intensity must be >= 0, got {ai}")
    peak_s = peak_scalar_flops(config.model, config.threads)
    peak_v = config.vb * peak_s
    bw = bandwidth_at(config.model, config.threads)
    roof_s = min(peak_s, ai * bw)
    roof_v = min(peak_v, ai * bw)
    irr = inflection_scalar(config)
    irv = inflection_vector(config)
    if ai < irr:
        region = MEMORY_BOUND
    elif ai < irv:
        region = TRANSITION
    else:
        region = COMPUTE_BOUND
    return roof_s, roof_v, region


def place_kernel(config: RooflineConfig, analysis: KernelAnalysis) -> RooflinePoint:
    """Place one analyzed kernel on the roofline, honoring its element width."""
    eff = replace(config, elen_bits=analysis.elen_bits)
    ai = analysis.ai_est_flop_per_byte
    if ai is None:
        raise DomainError(
            f"kernel {analysis.kernel_name!r} has no estimated arithmetic intensity"
        )
    roof_s, roof_v, region = attainable(eff, ai)
    return RooflinePoint(
        kernel_name=analysis.kernel_name,
        threads=analysis.threads,
        ai=ai,
        attainable_scalar=roof_s,
        attainable_vector=roof_v,
        region=region,
    )


@dataclass
class RooflineDataset:
    """Plot-ready roofline: roof polylines, inflection markers, kernel points.

    ``rows`` serialize as CSV columns (series, ai_flop_per_byte, gflops,
    label). Kernels with an unbounded intensity estimate cannot be placed at
    a finite abscissa and are listed in ``skipped`` instead.
    """

    config: RooflineConfig
    normalized: bool
    rows: list[tuple[str, float, float, str]]
    points: list[RooflinePoint]
    skipped: list[str]

    def to_csv(self) -> str:
        lines = ["series,ai_flop_per_byte,gflops,label"]
        for series, ai, gflops, label in self.rows:
            lines.append(f"{series},{ai!r},{gflops!r},{label}")
        return "\n".join(lines) + "\n"


def roofline_dataset(
    config: RooflineConfig,
    analyses: list[KernelAnalysis] | None = None,
    normalize: bool = False,
) -> RooflineDataset:
    """Build the plot dataset for one configuration.

    With ``normalize`` every throughput value is divided by the scalar peak,
    so the scalar plateau reads 1.0 and the vector plateau reads VB.
    """
    analyses = analyses or []
    peak_s = peak_scalar_flops(config.model, config.threads)
    peak_v = config.vb * peak_s
    bw = bandwidth_at(config.model, config.threads)
    irr = inflection_scalar(config)
    irv = inflection_vector(config)
    scale = 1.0 / peak_s if normalize else 1.0

    ai_lo = irr / 100.0
    ai_hi = irv * 100.0
    marker_floor = peak_s / 1000.0  # keeps log axes happy

    rows: list[tuple[str, float, float, str]] = []

    def add(series: str, ai: float, gflops: float, label: str = "") -> None:
        rows.append((series, ai, gflops * scale, label))

    add("scalar_roof", ai_lo, ai_lo * bw)
    add("scalar_roof", irr, peak_s)
    add("scalar_roof", ai_hi, peak_s)
    add("vector_roof", ai_lo, ai_lo * bw)
    add("vector_roof", irv, peak_v)
    add("vector_roof", ai_hi, peak_v)
    add("inflection_scalar", irr, marker_floor, "AI_IRR")
    add("inflection_scalar", irr, peak_s, "AI_IRR")
    add("inflection_vector", irv, marker_floor, "AI_IRV")
    add("inflection_vector", irv, peak_v, "AI_IRV")

    points: list[RooflinePoint] = []
    skipped: list[str] = []
    for analysis in analyses:
        ai = analysis.ai_est_flop_per_byte
        if ai is None or ai == AI_UNBOUNDED:
            skipped.append(analysis.kernel_name)
            continue
        point = place_kernel(config, analysis)
        points.append(point)
        label = f"{point.kernel_name}@{point.threads}t:{point.region}"
        add("kernel", point.ai, point.attainable_vector, label.replace(",", "_"))

    return RooflineDataset(
        config=config,
        normalized=normalize,
        rows=rows,
        points=points,
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# Standalone SVG rendering (deterministic byte-for-byte).
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 760, 520
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 30, 30, 55

_SERIES_STYLE = {
    "scalar_roof": 'stroke="#1f77b4" stroke-width="2" fill="none"',
    "vector_roof": 'stroke="#d62728" stroke-width="2" fill="none"',
    "inflection_scalar": 'stroke="#1f77b4" stroke-width="1" stroke-dasharray="5,4" fill="none"',
    "inflection_vector": 'stroke="#d62728" stroke-width="1" stroke-dasharray="5,4" fill="none"',
}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(dataset: RooflineDataset) -> str:
    """Render the dataset as a self-contained log-log SVG line chart."""
    xs = [ai for _, ai, _, _ in dataset.rows if ai > 0]
    ys = [g for _, _, g, _ in dataset.rows if g > 0]
    if not xs or not ys:
        raise DomainError("dataset has no positive coordinates to plot")
    lx0, lx1 = math.floor(math.log10(min(xs))), math.ceil(math.log10(max(xs)))
    ly0, ly1 = math.floor(math.log10(min(ys))), math.ceil(math.log10(max(ys)))
    if lx1 == lx0:
        lx1 += 1
    if ly1 == ly0:
        ly1 += 1
    plot_w = _SVG_W - _MARGIN_L - _MARGIN_R
    plot_h = _SVG_H - _MARGIN_T - _MARGIN_B

    def px(ai: float) -> float:
        ai = max(ai, 10.0**lx0)
        return _MARGIN_L + (math.log10(ai) - lx0) / (lx1 - lx0) * plot_w

    def py(g: float) -> float:
        g = max(g, 10.0**ly0)
        return _MARGIN_T + plot_h - (math.log10(g) - ly0) / (ly1 - ly0) * plot_h

    unit = "peak-normalized throughput" if dataset.normalized else "GFLOP/s"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}" font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
    ]
    for d in range(lx0, lx1 + 1):
        x = px(10.0**d)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{_MARGIN_T}" x2="{_fmt(x)}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{_MARGIN_T + plot_h + 18}" font-size="11" '
            f'text-anchor="middle">1e{d}</text>'
        )
    for d in range(ly0, ly1 + 1):
        y = py(10.0**d)
        out.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(y)}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{_fmt(y)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(y + 4)}" font-size="11" '
            f'text-anchor="end">1e{d}</text>'
        )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2}" y="{_SVG_H - 12}" font-size="13" '
        'text-anchor="middle">arithmetic intensity (FLOP/byte)</text>'
    )
    out.append(
        f'<text x="16" y="{_MARGIN_T + plot_h / 2}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 16 {_MARGIN_T + plot_h / 2})">'
        f"{unit}</text>"
    )

    series_points: dict[str, list[tuple[float, float]]] = {}
    for series, ai, g, _ in dataset.rows:
        if series != "kernel":
            series_points.setdefault(series, []).append((ai, g))
    for series, style in _SERIES_STYLE.items():
        pts = series_points.get(series)
        if not pts:
            continue
        coords = " ".join(f"{_fmt(px(ai))},{_fmt(py(g))}" for ai, g in pts)
        out.append(f'<polyline points="{coords}" {style}/>')

    for series, ai, g, label in dataset.rows:
        if series != "kernel":
            continue
        x, y = px(ai), py(g)
        out.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="#2ca02c" '
            'stroke="#145214" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(x + 6)}" y="{_fmt(y - 6)}" font-size="10">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
