"""Built-in calibration workloads: a tunable CSR SpMV and a STREAM-style kernel.

The SpMV kernel computes y = A*x with a configurable compute-repeat knob:
every row contribution is accumulated ``repeat`` times, so FP work scales
with ``repeat`` while first-touch memory traffic does not. Raising it moves
the kernel from memory-latency-bound toward compute-bound, which makes it
the calibration workload for the roofline and the classifier. The repeat
passes are executed for real (the accumulator is carried across passes),
so retired-instruction and FP-op counts measured around the kernel scale
with the knob.

The STREAM-style kernel (copy / triad) provides the bandwidth-bound,
zero-to-low-FLOP end of the spectrum at 16/32/64-bit element widths.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .collector import MeasurementRecord, RoiSession, read_results, start_measure, stop_measure
from .errors import DomainError, ParseError, UnsupportedPrecisionError

DTYPES = {16: np.float16, 32: np.float32, 64: np.float64}

# Half precision is gated: flip this off to emulate toolchains without
# usable FP16 support; the kernels then fail gracefully instead of emitting
# a misleading result.
_HALF_ENABLED = True


def half_precision_supported() -> bool:
    return _HALF_ENABLED and hasattr(np, "float16")


def _dtype_for(elen_bits: int, allow_half: bool = False) -> np.dtype:
    widths = (16, 32, 64) if allow_half else (32, 64)
    if elen_bits not in widths:
        raise DomainError(f"elen_bits must be one of {widths}, got {elen_bits}")
    if elen_bits == 16 and not half_precision_supported():
        raise UnsupportedPrecisionError(
            "16-bit floating point is not supported by this build"
        )
    return np.dtype(DTYPES[elen_bits])


@dataclass
class CsrMatrix:
    """Compressed sparse row matrix."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_ind: np.ndarray
    val: np.ndarray

    def __post_init__(self) -> None:
        self.row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        self.col_ind = np.asarray(self.col_ind, dtype=np.int64)
        self.val = np.asarray(self.val)
        if self.n_rows < 1 or self.n_cols < 1:
            raise DomainError("matrix dimensions must be >= 1")
        rp = self.row_ptr
        if rp.shape != (self.n_rows + 1,):
            raise DomainError(
                f"row_ptr must have length n_rows+1={self.n_rows + 1}, "
                f"got {rp.shape[0]}"
            )
        if rp[0] != 0 or np.any(np.diff(rp) < 0) or rp[-1] != len(self.val):
            raise DomainError("row_ptr must be nondecreasing from 0 to nnz")
        if len(self.col_ind) != len(self.val):
            raise DomainError("col_ind and val must have equal length")
        if self.nnz and (
            self.col_ind.min() < 0 or self.col_ind.max() >= self.n_cols
        ):
            raise DomainError("column index out of range")
        if self.nnz > 1:
            # within each row, column indices must be strictly increasing
            row_of = np.repeat(np.arange(self.n_rows), np.diff(rp))
            same_row = row_of[1:] == row_of[:-1]
            if np.any(np.diff(self.col_ind)[same_row] <= 0):
                raise DomainError("column indices must strictly increase per row")

    @property
    def nnz(self) -> int:
        return len(self.val)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_rows, self.n_cols), dtype=self.val.dtype)
        for i in range(self.n_rows):
            s, e = self.row_ptr[i], self.row_ptr[i + 1]
            dense[i, self.col_ind[s:e]] = self.val[s:e]
        return dense


@dataclass
class SpmvParams:
    """Knobs for the SpMV calibration kernel."""

    repeat: int = 1
    elen_bits: int = 64
    threads: int = 1
    n: int = 2048
    density: float = 0.01
    seed: int = 42

    def __post_init__(self) -> None:
        if self.repeat < 1:
            raise DomainError(f"repeat must be >= 1, got {self.repeat}")
        if self.threads < 1:
            raise DomainError(f"threads must be >= 1, got {self.threads}")
        _dtype_for(self.elen_bits)


@dataclass
class StreamParams:
    """Knobs for the STREAM-style kernel."""

    n: int = 1_000_000
    elen_bits: int = 64
    op: str = "copy"
    threads: int = 1
    scalar: float = 3.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.op not in ("copy", "triad"):
            raise DomainError(f"op must be 'copy' or 'triad', got {self.op!r}")
        if self.threads < 1:
            raise DomainError(f"threads must be >= 1, got {self.threads}")


def generate_matrix(
    n: int,
    density: float | None = None,
    seed: int = 42,
    pattern: str | None = None,
    elen_bits: int = 64,
) -> CsrMatrix:
    """Deterministic seeded CSR matrix with irregular per-row fill.

    Row lengths are geometrically distributed around density*n (minimum 1),
    so vectorized inner loops see varying trip counts. ``pattern="identity"``
    yields the n-by-n identity; density 1.0 yields a fully dense matrix.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    dtype = _dtype_for(elen_bits)
    if pattern == "identity":
        return CsrMatrix(
            n_rows=n,
            n_cols=n,
            row_ptr=np.arange(n + 1),
            col_ind=np.arange(n),
            val=np.ones(n, dtype=dtype),
        )
    if pattern is not None:
        raise DomainError(f"unknown pattern {pattern!r}")
    if density is None or not 0 < density <= 1:
        raise DomainError(f"density must be in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    if density == 1.0:
        lengths = np.full(n, n, dtype=np.int64)
    else:
        mean = max(density * n, 1.0)
        lengths = np.minimum(rng.geometric(1.0 / mean, size=n), n).astype(np.int64)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=row_ptr[1:])
    col_ind = np.empty(row_ptr[-1], dtype=np.int64)
    for i in range(n):
        k = lengths[i]
        cols = rng.choice(n, size=k, replace=False) if k < n else np.arange(n)
        col_ind[row_ptr[i] : row_ptr[i + 1]] = np.sort(cols)
    val = rng.uniform(-1.0, 1.0, size=int(row_ptr[-1])).astype(dtype)
    return CsrMatrix(n_rows=n, n_cols=n, row_ptr=row_ptr, col_ind=col_ind, val=val)


def load_matrix_market(text: str, elen_bits: int = 64) -> CsrMatrix:
    """Parse a Matrix Market coordinate document (real/integer, general)."""
    dtype = _dtype_for(elen_bits)
    lines = text.splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise ParseError("missing %%MatrixMarket header")
    header = lines[0].split()
    if len(header) < 5 or header[1] != "matrix" or header[2] != "coordinate":
        raise ParseError(f"unsupported Matrix Market header: {lines[0]!r}")
    if header[3] not in ("real", "integer"):
        raise ParseError(f"unsupported value type {header[3]!r} (need real/integer)")
    if header[4] != "general":
        raise ParseError(f"unsupported symmetry {header[4]!r} (need general)")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise ParseError("missing size line")
    try:
        n_rows, n_cols, nnz = (int(tok) for tok in body[0].split())
    except ValueError as exc:
        raise ParseError(f"bad size line {body[0]!r}") from exc
    entries = body[1:]
    if len(entries) != nnz:
        raise ParseError(f"expected {nnz} entries, found {len(entries)}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    for k, ln in enumerate(entries):
        toks = ln.split()
        if len(toks) != 3:
            raise ParseError(f"entry {k}: expected 'row col value', got {ln!r}")
        rows[k], cols[k] = int(toks[0]) - 1, int(toks[1]) - 1  # 1-indexed format
        vals[k] = float(toks[2])
    if nnz and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
        raise ParseError("entry index out of range")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if nnz > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
        raise ParseError("duplicate (row, col) entry")
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(row_ptr, rows + 1, 1)
    np.cumsum(row_ptr, out=row_ptr)
    return CsrMatrix(
        n_rows=n_rows,
        n_cols=n_cols,
        row_ptr=row_ptr,
        col_ind=cols,
        val=vals.astype(dtype),
    )


def spmv_input(params: SpmvParams) -> tuple[CsrMatrix, np.ndarray]:
    """Seeded matrix/vector pair for one parameter set."""
    A = generate_matrix(
        params.n, density=params.density, seed=params.seed, elen_bits=params.elen_bits
    )
    rng = np.random.default_rng(params.seed + 1)
    x = rng.uniform(-1.0, 1.0, size=params.n).astype(DTYPES[params.elen_bits])
    return A, x


def _row_chunks(n_rows: int, threads: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n_rows, num=min(threads, n_rows) + 1, dtype=np.int64)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(len(bounds) - 1)]


def spmv_kernel(A: CsrMatrix, x: np.ndarray, params: SpmvParams) -> np.ndarray:
    """y = repeat * (A @ x), with each repetition re-accumulated.

    Rows are partitioned across worker threads; every row is owned by
    exactly one thread and its accumulation order does not depend on the
    partition, so results are bitwise identical for any thread count.
    """
    if len(x) != A.n_cols:
        raise DomainError(
            f"x has length {len(x)}, matrix has {A.n_cols} columns"
        )
    dtype = _dtype_for(params.elen_bits)
    if A.val.dtype != dtype or x.dtype != dtype:
        raise DomainError(
            f"matrix/vector dtype must match elen_bits={params.elen_bits}"
        )
    y = np.zeros(A.n_rows, dtype=dtype)
    row_ptr, col_ind, val = A.row_ptr, A.col_ind, A.val

    def run_rows(lo: int, hi: int) -> None:
        # repeat passes genuinely recompute and re-add the row product
        for _ in range(params.repeat):
            for i in range(lo, hi):
                s, e = row_ptr[i], row_ptr[i + 1]
                y[i] += val[s:e] @ x[col_ind[s:e]]

    chunks = _row_chunks(A.n_rows, params.threads)
    if len(chunks) == 1:
        run_rows(*chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            for future in [pool.submit(run_rows, lo, hi) for lo, hi in chunks]:
                future.result()
    return y


def spmv_flop_count(nnz: int, repeat: int) -> int:
    """FP operations the kernel performs: one multiply + one add per
    nonzero, per repetition."""
    return 2 * repeat * nnz


@dataclass
class StreamResult:
    """Outcome of one STREAM-style run."""

    op: str
    n: int
    elen_bits: int
    bytes_moved: int
    checksum: float


def stream_arrays(params: StreamParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic operand arrays (a, b, c) for the STREAM kernel."""
    dtype = _dtype_for(params.elen_bits, allow_half=True)
    idx = np.arange(params.n)
    a = ((idx % 7) * 0.25 + 1.0).astype(dtype)
    b = ((idx % 5) * 0.5 + 1.0).astype(dtype)
    c = ((idx % 3) * 0.25).astype(dtype)
    return a, b, c


def stream_kernel(
    params: StreamParams,
    arrays: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> StreamResult:
    """Run copy (c[i] = a[i]) or triad (a[i] = b[i] + s*c[i]).

    Returns the bytes moved (2 or 3 streams of n elements) and an
    order-independent checksum of the destination array, accumulated in
    float64 so it is comparable across element widths.
    """
    a, b, c = arrays if arrays is not None else stream_arrays(params)
    elen_bytes = params.elen_bits // 8
    chunks = _row_chunks(params.n, params.threads)

    if params.op == "copy":
        def run(lo: int, hi: int) -> None:
            c[lo:hi] = a[lo:hi]
        streams = 2
        dst = c
    else:
        s = a.dtype.type(params.scalar)
        def run(lo: int, hi: int) -> None:
            a[lo:hi] = b[lo:hi] + s * c[lo:hi]
        streams = 3
        dst = a

    if len(chunks) == 1:
        run(*chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            for future in [pool.submit(run, lo, hi) for lo, hi in chunks]:
                future.result()
    return StreamResult(
        op=params.op,
        n=params.n,
        elen_bits=params.elen_bits,
        bytes_moved=streams * params.n * elen_bytes,
        checksum=float(np.sum(dst, dtype=np.float64)),
    )


def stream_flop_count(params: StreamParams) -> int:
    """FP operations per run: triad does one multiply + one add per element."""
    return 0 if params.op == "copy" else 2 * params.n


KERNELS = ("spmv", "stream_copy", "stream_triad")


def run_instrumented(
    kernel: str,
    params: SpmvParams | StreamParams,
    session: RoiSession,
    variant: str = "baseline",
    repetitions: int = 1,
) -> MeasurementRecord:
    """Run one kernel with counters active only around the compute loop.

    Input generation and allocation happen before the region of interest is
    opened, so counters cover the kernel itself. ``repetitions`` whole-kernel
    repeats are folded into the single region.
    """
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if kernel == "spmv":
        assert isinstance(params, SpmvParams)
        A, x = spmv_input(params)
        start_measure(session)
        for _ in range(repetitions):
            spmv_kernel(A, x, params)
        stop_measure(session)
    else:
        assert isinstance(params, StreamParams)
        op = "copy" if kernel == "stream_copy" else "triad"
        if params.op != op:
            raise DomainError(
                f"kernel {kernel!r} does not match params.op={params.op!r}"
            )
        arrays = stream_arrays(params)
        start_measure(session)
        for _ in range(repetitions):
            stream_kernel(params, arrays)
        stop_measure(session)
    return read_results(
        session,
        kernel_name=kernel,
        variant=variant,
        threads=params.threads,
        elen_bits=params.elen_bits,
        repetitions=repetitions,
    )
