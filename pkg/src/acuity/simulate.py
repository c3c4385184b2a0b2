"""Virtual patients and the benchmark/evaluation harness.

Every study here is a pure function of the master seed: per-run generators
are derived by hashing (master_seed, stream label, run index), so runs are
independent, reproducible, and insensitive to execution order. Policies are
compared on the *same* sampled patients (paired runs), which keeps the
Monte Carlo noise in policy gaps small.

Ground truth is only ever known here: a sampled patient's floored-exp
parameters (plus slip) answer stimulus queries through an oracle closure,
and predictions are scored by relative error in linear arcmin space.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from . import exams
from . import policy as pol
from . import vrf
from .belief import GumbelPrior, K0RatioPrior

__all__ = [
    "TruePatient",
    "LogisticPatient",
    "SimConfig",
    "RunRecord",
    "MetricsRow",
    "SweepPoint",
    "CalibrationBin",
    "rng_for",
    "sample_patient",
    "with_guess_rate",
    "logistic_world",
    "simulate_response",
    "make_oracle",
    "relative_error",
    "collect_runs",
    "run_benchmark",
    "run_length_sweep",
    "run_calibration",
    "bin_calibration",
    "run_ablations",
    "run_slip_sweep",
    "run_optotype_sweep",
    "run_cross_model",
    "metrics_to_csv",
    "sweep_to_csv",
    "calibration_to_csv",
]

BENCHMARK_POLICIES = ("const", "snellen", "etdrs", "fract", "adaptive")
ABLATION_POLICIES = (
    "adaptive",
    "adaptive_no_slip",
    "adaptive_greedy",
    "adaptive_logistic",
    "adaptive_flat_prior",
)
KNOWN_POLICIES = BENCHMARK_POLICIES + ABLATION_POLICIES[1:] + (
    "adaptive_good_prior",
    "adaptive_until_confident",
    "adaptive_logistic_patients",
    "fract_logistic_patients",
)


@dataclass(frozen=True)
class TruePatient:
    """Hidden simulation ground truth: a floored-exp VRF plus slip rate."""

    params: vrf.VrfParams
    slip: float

    def __post_init__(self) -> None:
        if not 0 <= self.slip <= 0.5:
            raise ValueError(f"slip must be in [0, 0.5], got {self.slip}")

    @property
    def k1(self) -> float:
        return self.params.k1

    def response_probability(self, size: float) -> float:
        v = vrf.floored_exp(size, self.params)
        return float(vrf.with_slip(v, self.slip, self.params.c))


@dataclass(frozen=True)
class LogisticPatient:
    """Ground truth whose VRF is the logistic family instead."""

    params: vrf.FractParams
    tau: float
    slip: float

    @property
    def k1(self) -> float:
        return pol.fract_acuity(self.params, self.tau)

    def response_probability(self, size: float) -> float:
        v = vrf.fract_logistic(size, self.params, increasing=True)
        return float(vrf.with_slip(v, self.slip, self.params.c))


@dataclass(frozen=True)
class SimConfig:
    """Population and harness settings.

    truth_beta is deliberately different from the exam prior's spread (0.5)
    so the belief never matches the generating distribution exactly. The
    generating Gumbel keeps its mode at 2 arcmin. slip is the rate patients
    actually slip at; model_slip is what the exam's belief assumes (see
    ExamConfig).
    """

    n_patients: int = 1000
    truth_mu: float = math.log10(2.0)
    truth_beta: float = 0.45
    k0_ratio: K0RatioPrior = K0RatioPrior()
    slip: float = 0.05
    model_slip: float = 0.10
    optotype_count: int = 4
    tau: float = 0.8
    chart_optotype_count: int = 19
    good_prior_beta: float = 0.1
    # The constant baseline predicts the mode of the population data prior
    # (the tight fit to archival scores), not the deliberately widened prior
    # the adaptive exam starts from.
    const_prior: GumbelPrior = GumbelPrior(mu=-0.1, beta=0.3)
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_patients < 1:
            raise ValueError("need at least one patient")
        if not 0 <= self.slip <= 0.5:
            raise ValueError("slip must be in [0, 0.5]")

    @property
    def truth_prior(self) -> GumbelPrior:
        return GumbelPrior(mu=self.truth_mu, beta=self.truth_beta)


def rng_for(master_seed: int, *labels) -> np.random.Generator:
    """Independent generator for one (seed, label...) stream.

    Streams are derived by hashing, not by sequential spawning, so adding or
    reordering studies never shifts existing results.
    """
    key = "|".join([str(master_seed), *map(str, labels)])
    digest = hashlib.sha256(key.encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "little"))


def sample_patient(cfg: SimConfig, rng) -> TruePatient:
    """One ground-truth patient: k1 from the truth Gumbel, k0 as a ratio of k1."""
    g = cfg.truth_prior.sample_logmar(rng)
    k1 = 10.0**g
    r = rng.uniform(cfg.k0_ratio.lo, cfg.k0_ratio.hi)
    params = vrf.VrfParams(
        k0=r * k1, k1=k1, c=1.0 / cfg.optotype_count, tau=cfg.tau
    )
    return TruePatient(params=params, slip=cfg.slip)


def with_guess_rate(patient: TruePatient, c: float) -> TruePatient:
    """Same eyes, different optotype set: swap the guessing floor."""
    return TruePatient(params=replace(patient.params, c=c), slip=patient.slip)


def logistic_world(patient: TruePatient) -> LogisticPatient:
    """Re-base a patient on the logistic VRF with matched acuity and slope."""
    return LogisticPatient(
        params=vrf.logistic_equivalent(patient.params),
        tau=patient.params.tau,
        slip=patient.slip,
    )


def simulate_response(patient, size: float, rng) -> bool:
    """One Bernoulli answer at the patient's response probability."""
    if size <= 0:
        raise ValueError("size must be positive")
    return bool(rng.random() < patient.response_probability(size))


def make_oracle(patient, rng) -> exams.Oracle:
    return lambda size: simulate_response(patient, size, rng)


def relative_error(pred: float, truth: float) -> float:
    """|pred - truth| / truth in linear arcmin space."""
    if truth <= 0:
        raise ValueError("truth must be positive")
    return abs(pred - truth) / truth


@dataclass(frozen=True)
class RunRecord:
    policy: str
    index: int
    true_k1: float
    predicted_k1: float
    error: float
    length: int
    confidence: float
    converged: bool
    failed: bool = False


@dataclass(frozen=True)
class MetricsRow:
    policy: str
    mean_error: float
    mean_length: float
    stderr: float
    n_runs: int
    failures: int


@dataclass(frozen=True)
class SweepPoint:
    policy: str
    x: float
    y: float
    stderr: float
    n_runs: int


@dataclass(frozen=True)
class CalibrationBin:
    lo: float
    hi: float
    n: int
    empirical_rate: float | None
    mean_confidence: float | None


def _exam_config(cfg: SimConfig, policy: str, questions: int, patient) -> exams.ExamConfig:
    base = dict(
        max_questions=questions,
        optotype_count=cfg.optotype_count,
        tau=cfg.tau,
        slip_model=cfg.model_slip,
        k0_ratio=cfg.k0_ratio,
    )
    if policy in ("adaptive", "adaptive_logistic_patients"):
        return exams.ExamConfig(**base)
    if policy in ("fract", "fract_logistic_patients"):
        return exams.ExamConfig(policy=pol.FractMaxInfo(), **base)
    if policy == "adaptive_greedy":
        return exams.ExamConfig(policy=pol.GreedyMap(), **base)
    if policy == "adaptive_no_slip":
        base["slip_model"] = 0.0
        return exams.ExamConfig(**base)
    if policy == "adaptive_logistic":
        return exams.ExamConfig(belief_vrf="logistic", **base)
    if policy == "adaptive_flat_prior":
        return exams.ExamConfig(prior=exams.FlatPrior(-0.5, 2.0), **base)
    if policy == "adaptive_good_prior":
        prior = GumbelPrior(mu=math.log10(patient.k1), beta=cfg.good_prior_beta)
        return exams.ExamConfig(prior=prior, **base)
    if policy == "adaptive_until_confident":
        base["max_questions"] = 0
        return exams.ExamConfig(mode=exams.UntilConfident(), **base)
    raise ValueError(f"unknown policy {policy!r}")


def _run_policy(
    policy: str, patient: TruePatient, cfg: SimConfig, questions: int, index: int
) -> tuple[exams.ExamResult, float]:
    exam_rng = rng_for(cfg.master_seed, "exam", policy, index)
    oracle_rng = rng_for(cfg.master_seed, "oracle", policy, index)

    if policy == "const":
        return exams.run_const(cfg.const_prior), patient.k1
    if policy in ("snellen", "etdrs"):
        chart_patient = with_guess_rate(patient, 1.0 / cfg.chart_optotype_count)
        oracle = make_oracle(chart_patient, oracle_rng)
        spec = exams.snellen_chart() if policy == "snellen" else exams.etdrs_chart()
        return exams.run_chart(oracle, spec, policy), patient.k1

    subject = patient
    if policy.endswith("_logistic_patients"):
        subject = logistic_world(patient)
    oracle = make_oracle(subject, oracle_rng)
    exam_cfg = _exam_config(cfg, policy, questions, subject)
    if isinstance(exam_cfg.policy, pol.FractMaxInfo):
        return exams.run_fract(oracle, exam_cfg), subject.k1
    return exams.run_adaptive(oracle, exam_cfg, exam_rng), subject.k1


def collect_runs(
    cfg: SimConfig, policy: str, questions: int = 20, n_runs: int | None = None
) -> list[RunRecord]:
    """Per-run records for one policy over independently sampled patients.

    Patient i is the same across policies (paired comparisons); a failing
    run is recorded with failed=True and excluded from aggregates.
    """
    if policy not in KNOWN_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; known: {sorted(KNOWN_POLICIES)}")
    n = cfg.n_patients if n_runs is None else n_runs
    out: list[RunRecord] = []
    for i in range(n):
        patient = sample_patient(cfg, rng_for(cfg.master_seed, "patient", i))
        try:
            result, true_k1 = _run_policy(policy, patient, cfg, questions, i)
            out.append(
                RunRecord(
                    policy=policy,
                    index=i,
                    true_k1=true_k1,
                    predicted_k1=result.predicted_k1,
                    error=relative_error(result.predicted_k1, true_k1),
                    length=result.questions_asked,
                    confidence=result.confidence,
                    converged=result.converged,
                )
            )
        except Exception:
            out.append(
                RunRecord(
                    policy=policy,
                    index=i,
                    true_k1=patient.k1,
                    predicted_k1=math.nan,
                    error=math.nan,
                    length=0,
                    confidence=0.0,
                    converged=False,
                    failed=True,
                )
            )
    return out


def aggregate(records: list[RunRecord]) -> MetricsRow:
    good = [r for r in records if not r.failed]
    failures = len(records) - len(good)
    errors = np.array([r.error for r in good])
    lengths = np.array([r.length for r in good])
    stderr = float(errors.std(ddof=1) / math.sqrt(len(errors))) if len(errors) > 1 else 0.0
    return MetricsRow(
        policy=records[0].policy,
        mean_error=float(errors.mean()) if len(errors) else math.nan,
        mean_length=float(lengths.mean()) if len(lengths) else math.nan,
        stderr=stderr,
        n_runs=len(good),
        failures=failures,
    )


def paired_gap_stderr(a: list[RunRecord], b: list[RunRecord]) -> float:
    """Stderr of mean(a.error - b.error) over shared patients."""
    da = {r.index: r.error for r in a if not r.failed}
    db = {r.index: r.error for r in b if not r.failed}
    diffs = np.array([da[i] - db[i] for i in sorted(set(da) & set(db))])
    return float(diffs.std(ddof=1) / math.sqrt(len(diffs)))


def run_benchmark(
    cfg: SimConfig, policies=BENCHMARK_POLICIES, questions: int = 20
) -> list[MetricsRow]:
    """Mean relative error and test length per policy over cfg.n_patients."""
    if not policies:
        raise ValueError("need at least one policy")
    return [aggregate(collect_runs(cfg, p, questions)) for p in policies]


def run_length_sweep(cfg: SimConfig, policies, lengths) -> list[SweepPoint]:
    """Error as a function of exam length, long format (policy, x, y, stderr)."""
    lengths = list(lengths)
    if lengths != sorted(lengths):
        raise ValueError("lengths must be ascending")
    out = []
    for p in policies:
        for n_q in lengths:
            row = aggregate(collect_runs(cfg, p, questions=n_q))
            out.append(SweepPoint(p, float(n_q), row.mean_error, row.stderr, row.n_runs))
    return out


def bin_calibration(confidences, successes) -> list[CalibrationBin]:
    """Decile reliability bins; the last bin is closed at 1.0."""
    confidences = np.asarray(confidences, dtype=float)
    successes = np.asarray(successes, dtype=bool)
    out = []
    for b in range(10):
        lo, hi = b / 10.0, (b + 1) / 10.0
        mask = (
            (confidences >= lo) & (confidences <= hi)
            if b == 9
            else (confidences >= lo) & (confidences < hi)
        )
        n = int(mask.sum())
        out.append(
            CalibrationBin(
                lo=lo,
                hi=hi,
                n=n,
                empirical_rate=float(successes[mask].mean()) if n else None,
                mean_confidence=float(confidences[mask].mean()) if n else None,
            )
        )
    return out


def run_calibration(
    cfg: SimConfig, n_runs: int = 10000, questions: int = 20
) -> list[CalibrationBin]:
    """Reliability of the reported band confidence over n_runs fresh exams.

    Per run: confidence = posterior mass within the +/-10% band around the
    prediction; success = relative error actually below 0.10.
    """
    if n_runs < 1000:
        raise ValueError("need at least 1000 runs for stable bins")
    records = collect_runs(cfg, "adaptive", questions=questions, n_runs=n_runs)
    good = [r for r in records if not r.failed]
    conf = [r.confidence for r in good]
    succ = [r.error < 0.10 for r in good]
    return bin_calibration(conf, succ)


def run_ablations(cfg: SimConfig, questions: int = 20) -> list[MetricsRow]:
    """Full algorithm vs. each design decision turned off, on shared patients."""
    return run_benchmark(cfg, ABLATION_POLICIES, questions)


def run_slip_sweep(cfg: SimConfig, slips) -> list[SweepPoint]:
    """Error vs. true slip rate; the belief keeps its nominal slip model."""
    out = []
    for s in slips:
        if not 0 <= s <= 0.5:
            raise ValueError("slip must be in [0, 0.5]")
        row = aggregate(collect_runs(replace(cfg, slip=float(s)), "adaptive"))
        out.append(SweepPoint("adaptive", float(s), row.mean_error, row.stderr, row.n_runs))
    return out


def run_optotype_sweep(cfg: SimConfig, counts) -> list[SweepPoint]:
    """Error vs. number of optotype choices (guess rate 1/count for both
    the patient and the belief)."""
    out = []
    for n_opt in counts:
        if n_opt < 2:
            raise ValueError("need at least two optotype choices")
        row = aggregate(
            collect_runs(replace(cfg, optotype_count=int(n_opt)), "adaptive")
        )
        out.append(
            SweepPoint("adaptive", float(n_opt), row.mean_error, row.stderr, row.n_runs)
        )
    return out


def run_cross_model(cfg: SimConfig, questions: int = 20) -> list[MetricsRow]:
    """Both exams on patients whose true VRF is the logistic family."""
    return run_benchmark(
        cfg, ("adaptive_logistic_patients", "fract_logistic_patients"), questions
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return str(x)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def metrics_to_csv(rows: list[MetricsRow]) -> str:
    return _csv(
        ["policy", "mean_relative_error", "mean_test_length", "stderr", "n_runs", "failures"],
        [[r.policy, r.mean_error, r.mean_length, r.stderr, r.n_runs, r.failures] for r in rows],
    )


def sweep_to_csv(points: list[SweepPoint]) -> str:
    return _csv(
        ["policy", "x", "y", "stderr", "n_runs"],
        [[p.policy, p.x, p.y, p.stderr, p.n_runs] for p in points],
    )


def calibration_to_csv(bins: list[CalibrationBin]) -> str:
    return _csv(
        ["bin_lo", "bin_hi", "n", "empirical_rate", "mean_confidence"],
        [[b.lo, b.hi, b.n, b.empirical_rate, b.mean_confidence] for b in bins],
    )
