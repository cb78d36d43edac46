import random

import pytest

from svescope.classifier import (
    BANDWIDTH_BOUND,
    LABELS,
    LATENCY_BOUND,
    NOT_VECTORIZED,
    SHIFTED_MEMORY_BOUND_WARNING,
    SPEEDUP,
    ClassifierConfig,
    classify,
    classify_suite,
)
from svescope.errors import DomainError, MissingFieldError
from svescope.machine import GRACE
from svescope.metrics import AI_UNBOUNDED, KernelAnalysis
from svescope.roofline import RooflineConfig, inflection_scalar

CONFIG = RooflineConfig(model=GRACE)


def _analysis(
    name="kernel",
    threads=1,
    elen=64,
    r=1.8,
    ai=0.5,
    r_llc=0.125,
):
    return KernelAnalysis(
        kernel_name=name,
        threads=threads,
        elen_bits=elen,
        vb=128 / elen,
        r_ins_reduction_sve=r,
        ai_est_flop_per_byte=ai,
        r_llc=r_llc,
    )


class TestDecisionTree:
    def test_fft_like_not_vectorized(self):
        c = classify(_analysis(r=1.02), CONFIG)
        assert c.label == NOT_VECTORIZED and c.class_number == 1
        assert c.evidence["r_ins_reduction_sve"] == 1.02
        assert c.evidence["reduction_threshold"] == 1.2
        # branch 1 stopped the walk; later thresholds were never compared
        assert "ai_irr" not in c.evidence

    def test_stream_like_bandwidth_bound(self):
        c = classify(_analysis(r=1.8, ai=0.0, r_llc=0.125), CONFIG)
        assert c.label == BANDWIDTH_BOUND and c.class_number == 2
        assert c.evidence["rllc_threshold"] == pytest.approx(0.125)

    def test_spmv_like_latency_bound(self):
        c = classify(_analysis(r=1.99, ai=0.1, r_llc=0.9), CONFIG)
        assert c.label == LATENCY_BOUND and c.class_number == 3
        assert c.evidence["r_llc"] == 0.9

    def test_qc_like_speedup_then_bandwidth_at_72_threads(self):
        ai = 4.0  # between the 1-thread and 72-thread scalar inflections
        one = classify(_analysis(threads=1, r=1.8, ai=ai), CONFIG)
        many = classify(_analysis(threads=72, r=1.8, ai=ai), CONFIG)
        assert one.label == SPEEDUP and one.class_number == 4
        assert many.label == BANDWIDTH_BOUND and many.class_number == 2

    def test_transition_region_warning(self):
        irr = inflection_scalar(RooflineConfig(model=GRACE, elen_bits=64, threads=1))
        c = classify(_analysis(ai=irr * 1.5), CONFIG)  # below 2x irr
        assert c.label == SPEEDUP
        assert SHIFTED_MEMORY_BOUND_WARNING in c.warnings
        assert "ai_irv" in c.evidence

    def test_warning_can_be_disabled(self):
        irr = inflection_scalar(RooflineConfig(model=GRACE, elen_bits=64, threads=1))
        cconfig = ClassifierConfig(use_vector_inflection_warning=False)
        c = classify(_analysis(ai=irr * 1.5), CONFIG, cconfig)
        assert c.warnings == []
        assert "ai_irv" not in c.evidence

    def test_unbounded_ai_takes_speedup_path(self):
        c = classify(_analysis(ai=AI_UNBOUNDED), CONFIG)
        assert c.label == SPEEDUP

    def test_missing_reduction_errors_with_field_name(self):
        a = _analysis()
        a.r_ins_reduction_sve = None
        with pytest.raises(MissingFieldError, match="r_ins_reduction_sve"):
            classify(a, CONFIG)

    def test_missing_ai_errors_with_field_name(self):
        a = _analysis()
        a.ai_est_flop_per_byte = None
        with pytest.raises(MissingFieldError, match="ai_est_flop_per_byte"):
            classify(a, CONFIG)

    def test_missing_rllc_only_matters_on_memory_path(self):
        a = _analysis(ai=50.0)
        a.r_llc = None
        assert classify(a, CONFIG).label == SPEEDUP
        a = _analysis(ai=0.1)
        a.r_llc = None
        with pytest.raises(MissingFieldError, match="r_llc"):
            classify(a, CONFIG)

    def test_fp32_defaults_rllc_threshold(self):
        c = classify(_analysis(elen=32, ai=0.1, r_llc=0.07), CONFIG)
        assert c.evidence["rllc_threshold"] == pytest.approx(0.0625)
        assert c.label == LATENCY_BOUND  # 0.07 > 4/64

    def test_custom_class_numbers(self):
        cconfig = ClassifierConfig(
            class_numbers={
                NOT_VECTORIZED: 1,
                LATENCY_BOUND: 2,
                BANDWIDTH_BOUND: 3,
                SPEEDUP: 4,
            }
        )
        c = classify(_analysis(r=1.8, ai=0.0, r_llc=0.125), CONFIG, cconfig)
        assert c.label == BANDWIDTH_BOUND and c.class_number == 3


class TestConfigValidation:
    def test_reduction_threshold_must_exceed_one(self):
        with pytest.raises(DomainError):
            ClassifierConfig(reduction_threshold=1.0)

    def test_rllc_threshold_range(self):
        with pytest.raises(DomainError):
            ClassifierConfig(rllc_threshold=1.5)

    def test_class_numbers_must_cover_labels(self):
        with pytest.raises(DomainError):
            ClassifierConfig(class_numbers={"Speedup": 4})


def _random_analysis(rng: random.Random) -> KernelAnalysis:
    ai = rng.choice([rng.uniform(0, 50), AI_UNBOUNDED if rng.random() < 0.02 else 0.0])
    return _analysis(
        name=f"k{rng.randrange(1000)}",
        threads=rng.choice((1, 2, 8, 72)),
        elen=rng.choice((16, 32, 64)),
        r=rng.uniform(0.5, 6.0),
        ai=ai,
        r_llc=rng.uniform(0.0, 1.0),
    )


class TestProperties:
    def test_totality_and_determinism(self):
        rng = random.Random(1234)
        for _ in range(2000):
            a = _random_analysis(rng)
            first = classify(a, CONFIG)
            second = classify(a, CONFIG)
            assert first.label in LABELS
            assert (first.label, first.class_number, first.warnings) == (
                second.label,
                second.class_number,
                second.warnings,
            )

    def test_monotone_branch_one(self):
        rng = random.Random(99)
        for _ in range(2000):
            a = _random_analysis(rng)
            before = classify(a, CONFIG)
            bumped = _analysis(
                name=a.kernel_name,
                threads=a.threads,
                elen=a.elen_bits,
                r=a.r_ins_reduction_sve + rng.uniform(0.01, 3.0),
                ai=a.ai_est_flop_per_byte,
                r_llc=a.r_llc,
            )
            after = classify(bumped, CONFIG)
            if before.label != NOT_VECTORIZED:
                assert after.label == before.label
            if bumped.r_ins_reduction_sve >= 1.2:
                assert after.label != NOT_VECTORIZED

    def test_rllc_flip_only_swaps_memory_labels(self):
        rng = random.Random(7)
        for _ in range(2000):
            threshold = 0.125
            below = classify(
                _analysis(ai=rng.uniform(0, 0.9), r_llc=threshold - 0.01), CONFIG
            )
            above = classify(
                _analysis(ai=below.evidence["ai_est"], r_llc=threshold + 0.01), CONFIG
            )
            if below.label == BANDWIDTH_BOUND:
                assert above.label == LATENCY_BOUND
            else:
                assert below.label == above.label  # branch 1/2 unaffected


class TestSuite:
    def test_stable_order_and_errors_collected(self):
        good = _analysis(name="a", ai=0.0)
        broken = _analysis(name="b")
        broken.r_ins_reduction_sve = None
        table = classify_suite([good, broken, _analysis(name="c", ai=9.9)], CONFIG)
        assert [row.kernel_name for row in table.rows] == ["a", "c"]
        assert len(table.errors) == 1
        assert table.errors[0][0] == "b@1t"

    def test_empty(self):
        table = classify_suite([], CONFIG)
        assert table.rows == [] and table.errors == []

    def test_csv_layout(self):
        table = classify_suite([_analysis(name="a", ai=0.0)], CONFIG)
        lines = table.to_csv().splitlines()
        assert lines[0] == (
            "kernel,threads,class_number,label,r_ins_reduction,ai_est,"
            "ai_irr,ai_irv,r_llc,warnings"
        )
        assert lines[1].startswith("a,1,2,BandwidthBound,")

    def test_text_layout_mentions_errors(self):
        broken = _analysis(name="b")
        broken.r_ins_reduction_sve = None
        text = classify_suite([broken], CONFIG).to_text()
        assert "ERROR" in text and "b@1t" in text
