import numpy as np
import pytest

import svescope.workloads as workloads
from svescope.collector import SyntheticBackend, configure_measure
from svescope.errors import DomainError, ParseError, UnsupportedPrecisionError
from svescope.workloads import (
    CsrMatrix,
    SpmvParams,
    StreamParams,
    generate_matrix,
    load_matrix_market,
    run_instrumented,
    spmv_flop_count,
    spmv_input,
    spmv_kernel,
    stream_arrays,
    stream_flop_count,
    stream_kernel,
)


def dense_oracle(A: CsrMatrix, x: np.ndarray, repeat: int) -> np.ndarray:
    """Independent reference: repeat * (dense(A) @ x), in matching precision."""
    return (A.to_dense() @ x) * A.val.dtype.type(repeat)


class TestCsrInvariants:
    def test_identity_pattern(self):
        A = generate_matrix(4, pattern="identity")
        assert list(A.row_ptr) == [0, 1, 2, 3, 4]
        assert list(A.col_ind) == [0, 1, 2, 3]
        assert A.nnz == 4

    def test_dense_as_csr(self):
        A = generate_matrix(5, density=1.0)
        assert A.nnz == 25

    def test_seeded_generation_reproducible(self):
        a = generate_matrix(128, density=0.05, seed=42)
        b = generate_matrix(128, density=0.05, seed=42)
        assert a.nnz == b.nnz
        assert np.array_equal(a.row_ptr, b.row_ptr)
        assert np.array_equal(a.col_ind, b.col_ind)
        assert np.array_equal(a.val, b.val)

    def test_different_seed_differs(self):
        a = generate_matrix(128, density=0.05, seed=1)
        b = generate_matrix(128, density=0.05, seed=2)
        assert not (
            a.nnz == b.nnz and np.array_equal(a.col_ind, b.col_ind)
        )

    def test_row_lengths_vary(self):
        A = generate_matrix(256, density=0.05, seed=3)
        lengths = np.diff(A.row_ptr)
        assert lengths.min() >= 1
        assert len(np.unique(lengths)) > 3  # irregular trip counts

    def test_zero_density_rejected(self):
        with pytest.raises(DomainError):
            generate_matrix(8, density=0.0)

    def test_bad_row_ptr_rejected(self):
        with pytest.raises(DomainError):
            CsrMatrix(2, 2, [0, 2, 1], [0, 1, 0], np.ones(1))

    def test_nonincreasing_columns_rejected(self):
        with pytest.raises(DomainError, match="strictly increase"):
            CsrMatrix(1, 4, [0, 2], [2, 1], np.ones(2))

    def test_column_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            CsrMatrix(1, 2, [0, 1], [5], np.ones(1))


class TestSpmvKernel:
    def test_identity_returns_x(self):
        A = generate_matrix(16, pattern="identity")
        x = np.linspace(-1, 1, 16)
        y = spmv_kernel(A, x, SpmvParams(repeat=1, n=16))
        assert np.array_equal(y, x)

    def test_hand_checked_2x2_repeat_20(self):
        # A = [[1, 2], [0, 3]], x = [1, 1]: A@x = [3, 3], scaled by 20
        A = CsrMatrix(2, 2, [0, 2, 3], [0, 1, 1], np.array([1.0, 2.0, 3.0]))
        y = spmv_kernel(A, np.array([1.0, 1.0]), SpmvParams(repeat=20, n=2))
        assert np.allclose(y, [60.0, 60.0], rtol=1e-12)

    @pytest.mark.parametrize("repeat", [1, 3, 20])
    @pytest.mark.parametrize("elen", [32, 64])
    def test_oracle_equivalence(self, repeat, elen):
        rtol = 1e-12 if elen == 64 else 1e-5
        for seed in range(5):
            n = 8 + seed * 12
            A = generate_matrix(n, density=0.2, seed=seed, elen_bits=elen)
            rng = np.random.default_rng(seed + 100)
            x = rng.uniform(-1, 1, size=n).astype(A.val.dtype)
            params = SpmvParams(repeat=repeat, elen_bits=elen, n=n)
            y = spmv_kernel(A, x, params)
            expected = dense_oracle(A, x, repeat)
            np.testing.assert_allclose(y, expected, rtol=rtol, atol=rtol)

    def test_thread_count_invariance_bitwise(self):
        A = generate_matrix(64, density=0.3, seed=5)
        x = np.random.default_rng(0).uniform(-1, 1, 64)
        y1 = spmv_kernel(A, x, SpmvParams(repeat=3, threads=1, n=64))
        for threads in (2, 3, 8):
            yt = spmv_kernel(A, x, SpmvParams(repeat=3, threads=threads, n=64))
            assert np.array_equal(y1, yt)

    def test_deterministic_across_runs(self):
        params = SpmvParams(repeat=2, n=48, density=0.2, seed=9)
        A, x = spmv_input(params)
        assert np.array_equal(spmv_kernel(A, x, params), spmv_kernel(A, x, params))

    def test_dimension_mismatch(self):
        A = generate_matrix(8, pattern="identity")
        with pytest.raises(DomainError, match="columns"):
            spmv_kernel(A, np.ones(9), SpmvParams(n=8))

    def test_dtype_mismatch(self):
        A = generate_matrix(8, pattern="identity")
        with pytest.raises(DomainError, match="dtype"):
            spmv_kernel(A, np.ones(8, dtype=np.float32), SpmvParams(n=8))

    def test_flop_model(self):
        assert spmv_flop_count(100, 1) == 200
        assert spmv_flop_count(100, 20) == 4000


class TestStreamKernel:
    def test_copy_bytes_and_checksum(self):
        params = StreamParams(n=1000, elen_bits=64, op="copy")
        a, b, c = stream_arrays(params)
        result = stream_kernel(params, (a, b, c))
        assert result.bytes_moved == 16_000
        assert result.checksum == pytest.approx(float(np.sum(a, dtype=np.float64)))
        assert np.array_equal(c, a)

    def test_triad_with_zero_scalar(self):
        params = StreamParams(n=512, elen_bits=64, op="triad", scalar=0.0)
        a, b, c = stream_arrays(params)
        result = stream_kernel(params, (a, b, c))
        assert np.array_equal(a, b)
        assert result.bytes_moved == 3 * 512 * 8

    def test_triad_bytes_fp32(self):
        result = stream_kernel(StreamParams(n=100, elen_bits=32, op="triad"))
        assert result.bytes_moved == 1200

    def test_threaded_copy_matches_single(self):
        p1 = StreamParams(n=10_000, op="copy", threads=1)
        p4 = StreamParams(n=10_000, op="copy", threads=4)
        assert stream_kernel(p1).checksum == stream_kernel(p4).checksum

    def test_fp16_supported_path(self):
        result = stream_kernel(StreamParams(n=64, elen_bits=16, op="copy"))
        assert result.bytes_moved == 2 * 64 * 2

    def test_fp16_gate(self, monkeypatch):
        monkeypatch.setattr(workloads, "_HALF_ENABLED", False)
        with pytest.raises(UnsupportedPrecisionError, match="16-bit"):
            stream_kernel(StreamParams(n=64, elen_bits=16, op="copy"))

    def test_flop_model(self):
        assert stream_flop_count(StreamParams(n=100, op="copy")) == 0
        assert stream_flop_count(StreamParams(n=100, op="triad")) == 200


MM_TEXT = """%%MatrixMarket matrix coordinate real general
% comment line
3 3 4
1 1 2.0
1 3 -1.5
2 2 4.0
3 1 1.0
"""


class TestMatrixMarket:
    def test_parse_and_multiply(self):
        A = load_matrix_market(MM_TEXT)
        assert (A.n_rows, A.n_cols, A.nnz) == (3, 3, 4)
        x = np.array([1.0, 2.0, 3.0])
        y = spmv_kernel(A, x, SpmvParams(repeat=1, n=3))
        np.testing.assert_allclose(y, A.to_dense() @ x, rtol=1e-15)

    def test_unsorted_entries_accepted(self):
        shuffled = MM_TEXT.replace("1 1 2.0\n1 3 -1.5", "1 3 -1.5\n1 1 2.0")
        A = load_matrix_market(shuffled)
        np.testing.assert_allclose(A.to_dense(), load_matrix_market(MM_TEXT).to_dense())

    def test_missing_header(self):
        with pytest.raises(ParseError, match="header"):
            load_matrix_market("3 3 1\n1 1 5.0\n")

    def test_wrong_entry_count(self):
        with pytest.raises(ParseError, match="entries"):
            load_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 5.0\n")

    def test_duplicate_entry(self):
        text = (
            "%%MatrixMarket matrix coordinate real general\n"
            "2 2 2\n1 1 5.0\n1 1 6.0\n"
        )
        with pytest.raises(ParseError, match="duplicate"):
            load_matrix_market(text)

    def test_symmetric_unsupported(self):
        text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 5.0\n"
        with pytest.raises(ParseError, match="symmetry"):
            load_matrix_market(text)


class TestRunInstrumented:
    def test_spmv_with_synthetic_backend(self):
        backend = SyntheticBackend([({"INST_RETIRED": 500, "CPU_CYCLES": 900}, 77)])
        session = configure_measure(backend=backend)
        params = SpmvParams(repeat=2, n=32, density=0.2, threads=1)
        record = run_instrumented("spmv", params, session, variant="sve")
        assert record.kernel_name == "spmv"
        assert record.variant == "sve"
        assert record.elen_bits == 64
        assert record.threads == 1
        assert record.counters["INST_RETIRED"] == 500
        assert record.wall_time_ns == 77

    def test_repetitions_recorded(self):
        session = configure_measure(backend="synthetic")
        record = run_instrumented(
            "stream_copy", StreamParams(n=128, op="copy"), session, repetitions=3
        )
        assert record.repetitions == 3

    def test_unknown_kernel(self):
        session = configure_measure(backend="synthetic")
        with pytest.raises(DomainError, match="unknown kernel"):
            run_instrumented("dgemm", SpmvParams(), session)

    def test_mismatched_stream_op(self):
        session = configure_measure(backend="synthetic")
        with pytest.raises(DomainError, match="does not match"):
            run_instrumented("stream_triad", StreamParams(op="copy"), session)
