"""Request/response schemas for the live exam service.

All sizes travel in arcmin with logMAR mirrors; fields are snake_case;
errors come back as {code, message}.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class PriorSpec(BaseModel):
    mu: float = Field(description="best-guess acuity in logMAR")
    beta: float = Field(gt=0, description="prior spread in logMAR")


class ModeSpec(BaseModel):
    kind: Literal["fixed_length", "until_confident"] = "fixed_length"
    rel_eps: float = Field(0.10, gt=0, lt=1)
    confidence: float = Field(0.95, gt=0, lt=1)
    cap: int = Field(200, ge=1)


class CreateSessionRequest(BaseModel):
    prior: Optional[PriorSpec] = None
    max_questions: int = Field(20, ge=0)
    optotype_count: int = Field(4, ge=2, le=26)
    tau: float = Field(0.8, gt=0, lt=1)
    slip_model: float = Field(0.10, ge=0, le=1)
    policy: Literal["posterior_matching", "greedy_map"] = "posterior_matching"
    mode: ModeSpec = ModeSpec()
    seed: Optional[int] = Field(
        None, description="session RNG seed; one is generated when omitted"
    )


class StimulusOut(BaseModel):
    step: int
    size_arcmin: float
    size_logmar: float
    optotype: str


class SessionConfigOut(BaseModel):
    prior: PriorSpec
    max_questions: int
    optotype_count: int
    tau: float
    slip_model: float
    policy: str
    mode: ModeSpec


class CreateSessionResponse(BaseModel):
    session_id: str
    optotypes: list[str]
    config: SessionConfigOut
    stimulus: StimulusOut


class SubmitRequest(BaseModel):
    step: int = Field(ge=1)
    chosen: Optional[str] = None
    timeout: bool = False


class TraceItemOut(BaseModel):
    step: int
    size_arcmin: float
    size_logmar: float
    correct: bool


class ResultOut(BaseModel):
    predicted_arcmin: float
    predicted_logmar: float
    snellen_denominator: float
    confidence: float
    questions_asked: int
    converged: bool
    trace: list[TraceItemOut]


class SubmitResponse(BaseModel):
    status: Literal["in_progress", "finished"]
    stimulus: Optional[StimulusOut] = None
    result: Optional[ResultOut] = None


class QuantileOut(BaseModel):
    q: float
    arcmin: float
    logmar: float


class HistogramBinOut(BaseModel):
    logmar_lo: float
    logmar_hi: float
    mass: float


class BeliefOut(BaseModel):
    map_arcmin: float
    map_logmar: float
    confidence_in_band: float
    rel_eps: float
    quantiles: list[QuantileOut]
    histogram: list[HistogramBinOut]


class SessionStateOut(BaseModel):
    session_id: str
    state: Literal["awaiting_response", "finished"]
    steps_taken: int
    optotypes: list[str]
    config: SessionConfigOut
    stimulus: Optional[StimulusOut] = None
    created_at: str
    updated_at: str
    flags: list[str] = []


class ErrorBody(BaseModel):
    code: str
    message: str
