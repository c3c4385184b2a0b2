import numpy as np
import pytest

from acuity import belief as bel
from acuity import exams
from acuity import policy as pol
from acuity.belief import GumbelPrior, Observation
from acuity.exams import (
    ChartSpec,
    ExamAborted,
    ExamConfig,
    FixedLength,
    FlatPrior,
    UntilConfident,
)
from acuity.units import arcmin_to_logmar


def scripted_oracle(answers):
    """Oracle replaying a fixed list of responses."""
    it = iter(answers)
    return lambda size: next(it)


def always(value):
    return lambda size: value


class TestAdaptiveExam:
    def test_deterministic_under_fixed_seed(self):
        cfg = ExamConfig(max_questions=10)
        responses = [True, False, True, True, True, False, True, True, False, True]
        rng_a, _ = exams.exam_rngs(42)
        rng_b, _ = exams.exam_rngs(42)
        a = exams.run_adaptive(scripted_oracle(responses), cfg, rng_a)
        b = exams.run_adaptive(scripted_oracle(responses), cfg, rng_b)
        assert a.trace == b.trace
        assert a.predicted_k1 == b.predicted_k1
        assert a.confidence == b.confidence

    def test_zero_questions_returns_prior_mode(self):
        cfg = ExamConfig(max_questions=0)
        rng, _ = exams.exam_rngs(1)
        res = exams.run_adaptive(always(True), cfg, rng)
        assert res.questions_asked == 0
        assert res.trace == ()
        # KDE mode of 5000 prior draws sits near the analytic prior mode
        assert res.predicted_k1 == pytest.approx(cfg.prior.mode_arcmin, rel=0.15)
        # confidence equals the prior mass in the +/-10% band around it
        analytic = cfg.prior.mass_in_arcmin_interval(
            res.predicted_k1 / 1.1, res.predicted_k1 / 0.9
        )
        assert res.confidence == pytest.approx(analytic, abs=0.03)

    def test_trace_length_equals_questions(self):
        cfg = ExamConfig(max_questions=7)
        rng, _ = exams.exam_rngs(2)
        res = exams.run_adaptive(always(True), cfg, rng)
        assert res.questions_asked == 7 == len(res.trace)

    def test_oracle_failure_preserves_partial_trace(self):
        def flaky(size):
            if flaky.calls >= 3:
                raise RuntimeError("device went away")
            flaky.calls += 1
            return True

        flaky.calls = 0
        cfg = ExamConfig(max_questions=10)
        rng, _ = exams.exam_rngs(3)
        with pytest.raises(ExamAborted) as exc_info:
            exams.run_adaptive(flaky, cfg, rng)
        assert len(exc_info.value.trace) == 3

    def test_prediction_inside_particle_hull(self):
        cfg = ExamConfig(max_questions=15)
        for seed in range(5):
            rng, _ = exams.exam_rngs(seed)
            engine = exams.AdaptiveExamEngine(cfg, rng)
            resp_rng = np.random.default_rng(seed)
            while not engine.finished:
                engine.observe(bool(resp_rng.random() < 0.7))
            res = engine.result()
            assert engine.belief.k1.min() <= res.predicted_k1 <= engine.belief.k1.max()

    def test_pending_size_is_cached(self):
        cfg = ExamConfig(max_questions=5)
        rng, _ = exams.exam_rngs(4)
        engine = exams.AdaptiveExamEngine(cfg, rng)
        assert engine.pending_size == engine.pending_size

    def test_fract_policy_rejected_by_engine(self):
        with pytest.raises(ValueError):
            exams.AdaptiveExamEngine(
                ExamConfig(policy=pol.FractMaxInfo()), np.random.default_rng(0)
            )

    def test_fixed_sequence_policy(self):
        cfg = ExamConfig(policy=pol.FixedSequence((8.0, 4.0, 2.0)), max_questions=5)
        rng, _ = exams.exam_rngs(5)
        res = exams.run_adaptive(always(True), cfg, rng)
        assert [o.size for o in res.trace] == [8.0, 4.0, 2.0, 8.0, 4.0]


class TestUntilConfident:
    def test_stops_with_reported_confidence_above_threshold(self):
        cfg = ExamConfig(
            max_questions=0, mode=UntilConfident(rel_eps=0.10, confidence=0.95, cap=200)
        )
        rng, _ = exams.exam_rngs(6)
        resp = np.random.default_rng(6)
        res = exams.run_adaptive(lambda s: bool(resp.random() < (0.9 if s > 2 else 0.25)), cfg, rng)
        assert res.converged
        assert res.confidence >= 0.95
        assert res.questions_asked <= 200

    def test_cap_reached_reports_unconverged(self):
        cfg = ExamConfig(max_questions=0, mode=UntilConfident(cap=3))
        rng, _ = exams.exam_rngs(7)
        resp = np.random.default_rng(7)
        res = exams.run_adaptive(lambda s: bool(resp.random() < 0.5), cfg, rng)
        assert res.questions_asked == 3
        assert not res.converged

    def test_cap_below_max_questions_rejected(self):
        with pytest.raises(ValueError):
            ExamConfig(max_questions=50, mode=UntilConfident(cap=20))


class TestConst:
    def test_predicts_prior_mode(self):
        res = exams.run_const(GumbelPrior(mu=0.3, beta=0.5))
        assert res.predicted_k1 == pytest.approx(10**0.3, rel=1e-12)
        assert res.predicted_k1 == pytest.approx(1.995, abs=0.005)

    def test_asks_nothing(self):
        res = exams.run_const(GumbelPrior())
        assert res.questions_asked == 0
        assert res.trace == ()
        assert res.converged


def chart_oracle_by_size(fail_below):
    """Reads every letter at sizes >= fail_below, misses all below."""
    return lambda size: size >= fail_below


class TestCharts:
    def test_snellen_layout(self):
        spec = exams.snellen_chart()
        sizes = [s for s, _ in spec.lines]
        counts = [n for _, n in spec.lines]
        assert sizes[0] == 10.0 and sizes[-1] == 0.75
        assert counts == [1, 2, 3, 4, 5, 6, 7, 8, 8]

    def test_etdrs_layout(self):
        spec = exams.etdrs_chart()
        assert len(spec.lines) == 14
        assert all(n == 5 for _, n in spec.lines)
        assert arcmin_to_logmar(spec.lines[0][0]) == pytest.approx(1.0)
        assert arcmin_to_logmar(spec.lines[-1][0]) == pytest.approx(-0.3)

    def test_perfect_reader_hits_ceiling(self):
        res = exams.run_chart(always(True), exams.snellen_chart(), "snellen")
        assert res.predicted_k1 == 0.75
        assert "chart_ceiling" in res.flags

    def test_total_failure_hits_floor(self):
        res = exams.run_chart(always(False), exams.snellen_chart(), "snellen")
        assert res.predicted_k1 == 10.0
        assert "chart_floor" in res.flags
        assert res.questions_asked == 1  # stops on the single-letter top line

    def test_snellen_scores_last_passed_line(self):
        res = exams.run_chart(
            chart_oracle_by_size(2.0), exams.snellen_chart(), "snellen"
        )
        assert res.predicted_k1 == 2.0

    def test_exactly_half_correct_passes_line(self):
        # 4-letter line with 2 right: not more than half wrong, so continue
        spec = ChartSpec(lines=((4.0, 4), (2.0, 1)))
        responses = [True, True, False, False, False]
        res = exams.run_chart(scripted_oracle(responses), spec, "snellen")
        assert res.questions_asked == 5
        assert res.predicted_k1 == 4.0

    def test_etdrs_interpolates_letters_on_failed_line(self):
        # passes the 1.0 logMAR line, reads 2 letters on the 0.9 line
        spec = exams.etdrs_chart()
        responses = [True] * 5 + [True, True, False, False, False]
        res = exams.run_chart(scripted_oracle(responses), spec, "etdrs")
        expected_logmar = 1.0 - 0.02 * 2
        assert arcmin_to_logmar(res.predicted_k1) == pytest.approx(expected_logmar)

    def test_chart_spec_validation(self):
        with pytest.raises(ValueError):
            ChartSpec(lines=((1.0, 5), (2.0, 5)))
        with pytest.raises(ValueError):
            ChartSpec(lines=((2.0, 0),))

    def test_unknown_scoring_rejected(self):
        with pytest.raises(ValueError):
            exams.run_chart(always(True), exams.snellen_chart(), "bogus")


class TestFract:
    def test_deterministic_trace(self):
        cfg = ExamConfig(policy=pol.FractMaxInfo(), max_questions=12)
        resp = list(np.random.default_rng(8).random(12) < 0.7)
        a = exams.run_fract(scripted_oracle(resp), cfg)
        b = exams.run_fract(scripted_oracle(resp), cfg)
        assert a.trace == b.trace
        assert a.predicted_k1 == b.predicted_k1

    def test_opens_at_chart_top_and_staircases_down(self):
        cfg = ExamConfig(policy=pol.FractMaxInfo(), max_questions=4)
        res = exams.run_fract(always(True), cfg)
        assert [o.size for o in res.trace] == [10.0, 5.0, 2.5, 1.25]
        assert "boundary_mle" in res.flags

    def test_staircases_up_on_total_failure(self):
        cfg = ExamConfig(policy=pol.FractMaxInfo(), max_questions=4)
        res = exams.run_fract(always(False), cfg)
        assert [o.size for o in res.trace] == [10.0, 20.0, 40.0, 80.0]
        assert "boundary_mle" in res.flags

    def test_prediction_clamped_into_bounds(self):
        cfg = ExamConfig(policy=pol.FractMaxInfo(), max_questions=6)
        res = exams.run_fract(always(True), cfg)
        assert cfg.size_min <= res.predicted_k1 <= cfg.size_max

    def test_zero_questions_flagged(self):
        cfg = ExamConfig(policy=pol.FractMaxInfo(), max_questions=0)
        res = exams.run_fract(always(True), cfg)
        assert "no_data" in res.flags

    def test_run_exam_dispatch(self):
        rng, _ = exams.exam_rngs(9)
        res = exams.run_exam(
            always(True), ExamConfig(policy=pol.FractMaxInfo(), max_questions=3), rng
        )
        assert res.questions_asked == 3
        res2 = exams.run_exam(always(True), ExamConfig(max_questions=3), rng)
        assert res2.questions_asked == 3


class TestConfigValidation:
    def test_optotype_count_floor(self):
        with pytest.raises(ValueError):
            ExamConfig(optotype_count=1)

    def test_guess_rate(self):
        assert ExamConfig(optotype_count=4).guess_rate == 0.25
        assert ExamConfig(optotype_count=19).guess_rate == pytest.approx(1 / 19)

    def test_flat_prior_bounds(self):
        with pytest.raises(ValueError):
            FlatPrior(lo=1.0, hi=0.0)

    def test_question_limit(self):
        assert ExamConfig(max_questions=20, mode=FixedLength()).question_limit == 20
        assert (
            ExamConfig(max_questions=0, mode=UntilConfident(cap=123)).question_limit
            == 123
        )
