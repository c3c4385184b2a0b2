"""Live exam sessions: the exam engine plus stimulus identity, idempotent
response handling, and log-backed recovery.

Correctness is judged here, server-side, from (shown, chosen), so a client
cannot claim an answer was right. The inference stream and the optotype
stream are separate RNGs derived from one logged seed, which makes replay
exact and keeps service-run exams identical to library-run ones.
"""

from __future__ import annotations

import secrets
import string
import threading
import uuid
from datetime import datetime, timezone

from .. import belief as bel
from ..exams import (
    AdaptiveExamEngine,
    ExamConfig,
    FixedLength,
    UntilConfident,
    exam_rngs,
)
from ..belief import GumbelPrior
from ..policy import GreedyMap, PosteriorMatching
from ..units import arcmin_to_logmar, arcmin_to_snellen_denominator
from . import models

TUMBLING_E = ("up", "down", "left", "right")


class UnknownSession(KeyError):
    pass


class StepConflict(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SessionFinished(Exception):
    pass


def optotype_set(count: int) -> tuple[str, ...]:
    """Tumbling-E orientations for four choices, letters otherwise."""
    if count == 4:
        return TUMBLING_E
    if not 2 <= count <= 26:
        raise ValueError("optotype_count must be between 2 and 26")
    return tuple(string.ascii_uppercase[:count])


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def config_from_request(req: models.CreateSessionRequest) -> ExamConfig:
    prior = GumbelPrior(req.prior.mu, req.prior.beta) if req.prior else GumbelPrior()
    if req.mode.kind == "until_confident":
        mode = UntilConfident(
            rel_eps=req.mode.rel_eps, confidence=req.mode.confidence, cap=req.mode.cap
        )
        max_questions = min(req.max_questions, req.mode.cap)
    else:
        mode = FixedLength()
        max_questions = req.max_questions
    policy = GreedyMap() if req.policy == "greedy_map" else PosteriorMatching()
    return ExamConfig(
        policy=policy,
        max_questions=max_questions,
        optotype_count=req.optotype_count,
        tau=req.tau,
        slip_model=req.slip_model,
        prior=prior,
        mode=mode,
    )


def config_out(cfg: ExamConfig) -> models.SessionConfigOut:
    if isinstance(cfg.mode, UntilConfident):
        mode = models.ModeSpec(
            kind="until_confident",
            rel_eps=cfg.mode.rel_eps,
            confidence=cfg.mode.confidence,
            cap=cfg.mode.cap,
        )
    else:
        mode = models.ModeSpec(kind="fixed_length")
    return models.SessionConfigOut(
        prior=models.PriorSpec(mu=cfg.prior.mu, beta=cfg.prior.beta),
        max_questions=cfg.max_questions,
        optotype_count=cfg.optotype_count,
        tau=cfg.tau,
        slip_model=cfg.slip_model,
        policy="greedy_map" if isinstance(cfg.policy, GreedyMap) else "posterior_matching",
        mode=mode,
    )


class LiveSession:
    """One exam in progress; all mutation happens under the session lock."""

    def __init__(self, session_id: str, cfg: ExamConfig, seed: int, store=None):
        self.id = session_id
        self.cfg = cfg
        self.seed = seed
        self.store = store
        engine_rng, optotype_rng = exam_rngs(seed)
        self.engine = AdaptiveExamEngine(cfg, engine_rng)
        self.optotype_rng = optotype_rng
        self.optotypes = optotype_set(cfg.optotype_count)
        self.replies: dict[int, models.SubmitResponse] = {}
        self._pending_optotype: str | None = None
        self.created_at = _now()
        self.updated_at = self.created_at
        self.flags: list[str] = []
        self.lock = threading.Lock()

    @property
    def finished(self) -> bool:
        return self.engine.finished

    @property
    def pending_step(self) -> int:
        return self.engine.steps_taken + 1

    def current_stimulus(self) -> models.StimulusOut | None:
        if self.engine.finished:
            return None
        size = self.engine.pending_size
        if self._pending_optotype is None:
            self._pending_optotype = self.optotypes[
                int(self.optotype_rng.integers(len(self.optotypes)))
            ]
        return models.StimulusOut(
            step=self.pending_step,
            size_arcmin=size,
            size_logmar=arcmin_to_logmar(size),
            optotype=self._pending_optotype,
        )

    def _result_out(self) -> models.ResultOut:
        res = self.engine.result()
        return models.ResultOut(
            predicted_arcmin=res.predicted_k1,
            predicted_logmar=arcmin_to_logmar(res.predicted_k1),
            snellen_denominator=arcmin_to_snellen_denominator(res.predicted_k1),
            confidence=res.confidence,
            questions_asked=res.questions_asked,
            converged=res.converged,
            trace=[
                models.TraceItemOut(
                    step=i + 1,
                    size_arcmin=o.size,
                    size_logmar=arcmin_to_logmar(o.size),
                    correct=o.correct,
                )
                for i, o in enumerate(res.trace)
            ],
        )

    def submit(
        self, step: int, chosen: str | None, timeout: bool = False, *, record: bool = True
    ) -> models.SubmitResponse:
        with self.lock:
            if step in self.replies:
                # duplicate delivery: same reply, no second belief update
                return self.replies[step]
            if self.engine.finished:
                raise SessionFinished()
            if step != self.pending_step:
                raise StepConflict(
                    f"response targets step {step} but step {self.pending_step} is pending"
                )
            if not timeout and chosen not in self.optotypes:
                raise StepConflict(f"chosen must be one of {list(self.optotypes)}")
            stimulus = self.current_stimulus()
            correct = (not timeout) and chosen == stimulus.optotype
            self.engine.observe(correct)
            self._pending_optotype = None
            self.updated_at = _now()
            if record and self.store is not None:
                self.store.append(
                    self.id,
                    {
                        "type": "response",
                        "step": step,
                        "size_arcmin": stimulus.size_arcmin,
                        "shown": stimulus.optotype,
                        "chosen": chosen,
                        "timeout": timeout,
                        "correct": correct,
                        "at": self.updated_at,
                    },
                )
            if self.engine.finished:
                reply = models.SubmitResponse(status="finished", result=self._result_out())
            else:
                reply = models.SubmitResponse(
                    status="in_progress", stimulus=self.current_stimulus()
                )
            self.replies[step] = reply
            return reply

    def belief_out(self) -> models.BeliefOut:
        ps = self.engine.belief
        rel_eps = (
            self.cfg.mode.rel_eps
            if isinstance(self.cfg.mode, UntilConfident)
            else 0.10
        )
        center = bel.posterior_map(ps)
        qs = [0.05, 0.25, 0.5, 0.75, 0.95]
        values = bel.posterior_quantiles(ps, qs)
        return models.BeliefOut(
            map_arcmin=center,
            map_logmar=arcmin_to_logmar(center),
            confidence_in_band=bel.credible_mass(ps, center, rel_eps),
            rel_eps=rel_eps,
            quantiles=[
                models.QuantileOut(q=q, arcmin=v, logmar=arcmin_to_logmar(v))
                for q, v in zip(qs, values)
            ],
            histogram=[
                models.HistogramBinOut(logmar_lo=lo, logmar_hi=hi, mass=mass)
                for lo, hi, mass in bel.belief_histogram(ps)
            ],
        )

    def result_out(self) -> models.ResultOut:
        if not self.engine.finished:
            raise StepConflict("exam still in progress")
        return self._result_out()

    def state_out(self) -> models.SessionStateOut:
        return models.SessionStateOut(
            session_id=self.id,
            state="finished" if self.finished else "awaiting_response",
            steps_taken=self.engine.steps_taken,
            optotypes=list(self.optotypes),
            config=config_out(self.cfg),
            stimulus=self.current_stimulus(),
            created_at=self.created_at,
            updated_at=self.updated_at,
            flags=list(self.flags),
        )


def _created_event(session: LiveSession, req: models.CreateSessionRequest) -> dict:
    return {
        "type": "created",
        "session_id": session.id,
        "seed": session.seed,
        "request": req.model_dump(),
        "at": session.created_at,
    }


class SessionRegistry:
    """Registry of live sessions; inserts and lookups are atomic."""

    def __init__(self, store):
        self.store = store
        self._sessions: dict[str, LiveSession] = {}
        self._lock = threading.Lock()

    def create(self, req: models.CreateSessionRequest) -> LiveSession:
        session_id = uuid.uuid4().hex
        seed = req.seed if req.seed is not None else secrets.randbits(63)
        session = LiveSession(session_id, config_from_request(req), seed, self.store)
        self.store.append(session_id, _created_event(session, req))
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> LiveSession:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    def __len__(self) -> int:
        return len(self._sessions)

    def recover(self) -> int:
        """Rebuild every session from its event log; returns the count.

        Replay re-runs the exam from the logged seed, feeding back the
        logged responses; the regenerated stimuli are cross-checked against
        the logged ones, and a mismatching or truncated tail restores the
        session to the last consistent step with a flag.
        """
        n = 0
        for session_id in self.store.session_ids():
            events, truncated = self.store.read(session_id)
            if not events or events[0].get("type") != "created":
                continue
            head = events[0]
            req = models.CreateSessionRequest(**head["request"])
            session = LiveSession(
                session_id, config_from_request(req), head["seed"], self.store
            )
            session.created_at = head["at"]
            if truncated:
                session.flags.append("recovered_truncated_log")
            for event in events[1:]:
                if event.get("type") != "response":
                    continue
                stimulus = session.current_stimulus()
                if (
                    stimulus is None
                    or event["step"] != stimulus.step
                    or event["shown"] != stimulus.optotype
                ):
                    session.flags.append("recovered_inconsistent_tail")
                    break
                session.submit(
                    event["step"],
                    event["chosen"],
                    timeout=event.get("timeout", False),
                    record=False,
                )
                session.updated_at = event["at"]
            with self._lock:
                self._sessions[session_id] = session
            n += 1
        return n
