"""Exam orchestration.

The adaptive exam keeps a particle belief over (k0, k1), picks each letter
size with a configurable policy, reweights on every answer, and reads the
final acuity off the posterior mode. It runs either for a fixed number of
questions or until the posterior mass within a +/-10% relative band around
the current mode reaches a confidence threshold.

Chart baselines (Snellen and ETDRS layouts), the FrACT-style MLE exam, and
the prior-mode constant predictor live here too, all driven through the
same response-oracle interface so simulated patients and live sessions are
interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np

from . import belief as bel
from . import policy as pol
from .belief import GumbelPrior, K0RatioPrior, Observation
from .units import arcmin_to_logmar, logmar_to_arcmin

__all__ = [
    "FixedLength",
    "UntilConfident",
    "FlatPrior",
    "ExamConfig",
    "ExamResult",
    "ChartSpec",
    "ExamAborted",
    "AdaptiveExamEngine",
    "run_adaptive",
    "run_const",
    "run_chart",
    "run_fract",
    "run_exam",
    "snellen_chart",
    "etdrs_chart",
    "exam_rngs",
]

Oracle = Callable[[float], bool]


@dataclass(frozen=True)
class FixedLength:
    """Stop after exactly max_questions answers."""


@dataclass(frozen=True)
class UntilConfident:
    """Stop once the belief puts `confidence` mass within +/-rel_eps of its
    mode, or at `cap` questions with converged=False."""

    rel_eps: float = 0.10
    confidence: float = 0.95
    cap: int = 200

    def __post_init__(self) -> None:
        if not 0 < self.rel_eps < 1:
            raise ValueError("rel_eps must be in (0, 1)")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.cap < 1:
            raise ValueError("cap must be positive")


@dataclass(frozen=True)
class FlatPrior:
    """Uniform prior over a logMAR interval (the no-information baseline)."""

    lo: float = -0.5
    hi: float = 2.0

    def __post_init__(self) -> None:
        if self.hi <= self.lo:
            raise ValueError("need lo < hi")

    def sample_logmar(self, rng, n: int):
        return rng.uniform(self.lo, self.hi, n)

    @property
    def mode_arcmin(self) -> float:
        return 10.0 ** (0.5 * (self.lo + self.hi))


@dataclass(frozen=True)
class ExamConfig:
    """Settings for one exam.

    slip_model is the slip rate the belief assumes, deliberately a little
    above the nominal rate users actually slip at: a conservative slip
    tempers the likelihood so that a couple of unlucky lapses early in a
    short exam cannot irreversibly crush the posterior mass near the true
    acuity. The simulation harness keeps the true rate at its nominal
    value independently of this assumption.
    """

    policy: pol.PolicyKind = pol.PosteriorMatching()
    max_questions: int = 20
    optotype_count: int = 4
    tau: float = 0.8
    slip_model: float = 0.10
    prior: Union[GumbelPrior, FlatPrior] = GumbelPrior()
    k0_ratio: K0RatioPrior = K0RatioPrior()
    mode: Union[FixedLength, UntilConfident] = FixedLength()
    n_particles: int = bel.DEFAULT_N_PARTICLES
    size_min: float = pol.SIZE_MIN
    size_max: float = pol.SIZE_MAX
    belief_vrf: str = "floored_exp"

    def __post_init__(self) -> None:
        if self.optotype_count < 2:
            raise ValueError("need at least two optotype choices")
        if self.max_questions < 0:
            raise ValueError("max_questions must be >= 0")
        if not 0 <= self.slip_model <= 1:
            raise ValueError("slip_model must be a probability")
        if isinstance(self.mode, UntilConfident) and self.mode.cap < self.max_questions:
            raise ValueError("cap must be >= max_questions")

    @property
    def guess_rate(self) -> float:
        return 1.0 / self.optotype_count

    @property
    def question_limit(self) -> int:
        if isinstance(self.mode, UntilConfident):
            return self.mode.cap
        return self.max_questions


@dataclass(frozen=True)
class ExamResult:
    predicted_k1: float
    confidence: float
    questions_asked: int
    trace: tuple[Observation, ...]
    converged: bool
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.questions_asked != len(self.trace):
            raise ValueError("questions_asked must equal trace length")
        if not 0 <= self.confidence <= 1:
            raise ValueError("confidence must be in [0, 1]")


class ExamAborted(RuntimeError):
    """Oracle failure mid-exam; carries the partial trace."""

    def __init__(self, trace: tuple[Observation, ...]):
        super().__init__(f"exam aborted after {len(trace)} observations")
        self.trace = trace


def exam_rngs(seed: int):
    """(inference/policy rng, optotype rng) pair derived from one seed.

    The split keeps stimulus cosmetics (which letter is shown) out of the
    inference stream, so a service-run exam and a library-run exam with the
    same seed walk identical belief trajectories.
    """
    children = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(children[0]), np.random.default_rng(children[1])


class AdaptiveExamEngine:
    """Incremental posterior-update exam loop.

    Drives one exam a step at a time: ``pending_size`` proposes (and caches)
    the next letter size, ``observe`` folds in the answer and evaluates the
    stopping rule. Both the batch runner and the live service sit on top of
    this, so their behavior is identical by construction.
    """

    def __init__(self, cfg: ExamConfig, rng):
        if isinstance(cfg.policy, pol.FractMaxInfo):
            raise ValueError("the MLE exam has its own loop; use run_fract")
        self.cfg = cfg
        self.rng = rng
        self.belief = bel.init_particles(
            cfg.prior, cfg.k0_ratio, cfg.n_particles, cfg.guess_rate, cfg.tau, rng
        )
        self.trace: list[Observation] = []
        self._pending: float | None = None
        self._converged = False
        self._stopped_early = False

    @property
    def steps_taken(self) -> int:
        return len(self.trace)

    @property
    def finished(self) -> bool:
        return self._stopped_early or self.steps_taken >= self.cfg.question_limit

    @property
    def pending_size(self) -> float:
        """Next letter size; cached so repeated reads don't re-draw."""
        if self.finished:
            raise RuntimeError("exam already finished")
        if self._pending is None:
            self._pending = self._propose()
        return self._pending

    def _propose(self) -> float:
        cfg = self.cfg
        if isinstance(cfg.policy, pol.PosteriorMatching):
            return pol.next_size_posterior_matching(
                self.belief, self.rng, cfg.size_min, cfg.size_max
            )
        if isinstance(cfg.policy, pol.GreedyMap):
            return pol.next_size_greedy_map(self.belief, cfg.size_min, cfg.size_max)
        return pol.fixed_sequence_size(cfg.policy, self.steps_taken)

    def observe(self, correct: bool) -> None:
        """Record the answer for the pending stimulus and update the belief."""
        size = self.pending_size
        self._pending = None
        obs = Observation(size=size, correct=bool(correct))
        self.trace.append(obs)
        self.belief = bel.update(
            self.belief, obs, self.cfg.slip_model, belief_vrf=self.cfg.belief_vrf
        )
        mode = self.cfg.mode
        if isinstance(mode, UntilConfident):
            center = bel.posterior_map(self.belief)
            if bel.credible_mass(self.belief, center, mode.rel_eps) >= mode.confidence:
                self._converged = True
                self._stopped_early = True

    def result(self) -> ExamResult:
        prediction = bel.posterior_map(self.belief)
        rel_eps = (
            self.cfg.mode.rel_eps if isinstance(self.cfg.mode, UntilConfident) else 0.10
        )
        confidence = bel.credible_mass(self.belief, prediction, rel_eps)
        converged = (
            self._converged if isinstance(self.cfg.mode, UntilConfident) else True
        )
        return ExamResult(
            predicted_k1=prediction,
            confidence=confidence,
            questions_asked=self.steps_taken,
            trace=tuple(self.trace),
            converged=converged,
        )


def run_adaptive(oracle: Oracle, cfg: ExamConfig, rng) -> ExamResult:
    """Run the posterior-update exam to completion against an oracle."""
    engine = AdaptiveExamEngine(cfg, rng)
    while not engine.finished:
        size = engine.pending_size
        try:
            correct = bool(oracle(size))
        except Exception as exc:
            raise ExamAborted(tuple(engine.trace)) from exc
        engine.observe(correct)
    return engine.result()


def run_const(prior: GumbelPrior, rel_eps: float = 0.10) -> ExamResult:
    """Predict the prior mode without asking anything."""
    prediction = prior.mode_arcmin
    confidence = prior.mass_in_arcmin_interval(
        prediction / (1.0 + rel_eps), prediction / (1.0 - rel_eps)
    )
    return ExamResult(
        predicted_k1=prediction,
        confidence=confidence,
        questions_asked=0,
        trace=(),
        converged=True,
        flags=("prior_only",),
    )


@dataclass(frozen=True)
class ChartSpec:
    """Ordered chart lines, coarsest first: (size arcmin, letters on line)."""

    lines: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        sizes = [s for s, _ in self.lines]
        if not sizes:
            raise ValueError("chart needs at least one line")
        if any(s2 >= s1 for s1, s2 in zip(sizes, sizes[1:])):
            raise ValueError("line sizes must be strictly decreasing")
        if any(n < 1 for _, n in self.lines):
            raise ValueError("each line needs at least one letter")


def snellen_chart() -> ChartSpec:
    """Traditional Snellen layout: 20/200 down to 20/15."""
    denominators = (200, 100, 70, 50, 40, 30, 25, 20, 15)
    counts = (1, 2, 3, 4, 5, 6, 7, 8, 8)
    return ChartSpec(
        lines=tuple((d / 20.0, n) for d, n in zip(denominators, counts))
    )


def etdrs_chart() -> ChartSpec:
    """ETDRS layout: 14 lines of 5 letters, 0.1 logMAR steps from +1.0 to -0.3."""
    return ChartSpec(
        lines=tuple(
            (logmar_to_arcmin(1.0 - 0.1 * i), 5) for i in range(14)
        )
    )


def run_chart(
    oracle: Oracle,
    spec: ChartSpec,
    scoring: Literal["snellen", "etdrs"],
) -> ExamResult:
    """March down the chart until a line with more than half the letters wrong.

    A line is failed when strictly more than half its letters are misread;
    reading exactly half keeps the exam going. Snellen scores the last
    passed line's size. ETDRS credits partial reads: logMAR of the last
    passed line minus 0.02 per letter correct on the failed line (5 letters
    x 0.02 = one 0.1 logMAR line).
    """
    if scoring not in ("snellen", "etdrs"):
        raise ValueError(f"unknown scoring {scoring!r}")
    trace: list[Observation] = []
    last_passed: float | None = None
    failed_correct = 0
    failed = False
    for size, count in spec.lines:
        n_correct = 0
        for _ in range(count):
            try:
                ok = bool(oracle(size))
            except Exception as exc:
                raise ExamAborted(tuple(trace)) from exc
            trace.append(Observation(size=size, correct=ok))
            n_correct += ok
        if 2 * (count - n_correct) <= count:
            last_passed = size
        else:
            failed = True
            failed_correct = n_correct
            break

    flags: tuple[str, ...]
    if not failed:
        prediction = spec.lines[-1][0]
        flags = ("chart_ceiling", "no_belief")
    elif last_passed is None:
        prediction = spec.lines[0][0]
        flags = ("chart_floor", "no_belief")
    elif scoring == "snellen":
        prediction = last_passed
        flags = ("no_belief",)
    else:
        prediction = logmar_to_arcmin(
            arcmin_to_logmar(last_passed) - 0.02 * failed_correct
        )
        flags = ("no_belief",)
    return ExamResult(
        predicted_k1=prediction,
        confidence=0.0,
        questions_asked=len(trace),
        trace=tuple(trace),
        converged=True,
        flags=flags,
    )


# Opening probe for the MLE exam: the classic top-of-chart letter (20/200).
FRACT_START_SIZE = 10.0


def run_fract(oracle: Oracle, cfg: ExamConfig) -> ExamResult:
    """FrACT-style exam: refit the logistic MLE after every answer and probe
    its steepest point; predict where the fitted curve crosses tau.

    Opens like the original test: start at a large letter and halve on
    correct answers (double on wrong ones) until the history contains both
    outcomes; only then is the fit informative enough to drive the
    steepest-point query. One-sided histories later in the exam fall back to
    the same geometric staircase past the extreme size shown.
    """
    c = cfg.guess_rate
    size = pol.clamp_size(FRACT_START_SIZE, cfg.size_min, cfg.size_max)
    trace: list[Observation] = []
    fit = None
    for _ in range(cfg.max_questions):
        try:
            correct = bool(oracle(size))
        except Exception as exc:
            raise ExamAborted(tuple(trace)) from exc
        trace.append(Observation(size=size, correct=correct))
        fit = pol.fract_mle(trace, c)
        if all(o.correct for o in trace):
            size = pol.clamp_size(
                min(o.size for o in trace) / 2.0, cfg.size_min, cfg.size_max
            )
        elif not any(o.correct for o in trace):
            size = pol.clamp_size(
                max(o.size for o in trace) * 2.0, cfg.size_min, cfg.size_max
            )
        else:
            size = pol.fract_next_size(fit.params, cfg.size_min, cfg.size_max)

    flags: tuple[str, ...] = ("no_belief",)
    if cfg.max_questions == 0 or fit is None:
        prediction = pol.clamp_size(cfg.prior.mode_arcmin, cfg.size_min, cfg.size_max)
        flags += ("no_data",)
    else:
        prediction = pol.fract_acuity(fit.params, cfg.tau)
        if fit.boundary:
            flags += ("boundary_mle",)
        if not cfg.size_min <= prediction <= cfg.size_max:
            prediction = pol.clamp_size(prediction, cfg.size_min, cfg.size_max)
            flags += ("prediction_clamped",)
    return ExamResult(
        predicted_k1=prediction,
        confidence=0.0,
        questions_asked=len(trace),
        trace=tuple(trace),
        converged=True,
        flags=flags,
    )


def run_exam(oracle: Oracle, cfg: ExamConfig, rng) -> ExamResult:
    """Dispatch on the configured policy."""
    if isinstance(cfg.policy, pol.FractMaxInfo):
        return run_fract(oracle, cfg)
    return run_adaptive(oracle, cfg, rng)
