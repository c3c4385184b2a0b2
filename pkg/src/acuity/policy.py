"""Next-letter-size selection strategies.

Three families: posterior matching (sample the current belief over k1,
Thompson-style), greedy MAP (always probe the current mode), and the
FrACT-style rule that refits a logistic VRF by maximum likelihood after
every answer and probes its steepest point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import belief as bel
from . import vrf

__all__ = [
    "SIZE_MIN",
    "SIZE_MAX",
    "PosteriorMatching",
    "GreedyMap",
    "FractMaxInfo",
    "FixedSequence",
    "PolicyKind",
    "parse_policy",
    "policy_name",
    "clamp_size",
    "next_size_posterior_matching",
    "next_size_greedy_map",
    "fract_mle",
    "fract_next_size",
    "fract_steepest_size",
    "fract_acuity",
]

log = logging.getLogger(__name__)

# Displayable stimulus bounds in arcmin; policies never emit outside these.
SIZE_MIN = 0.1
SIZE_MAX = 200.0


@dataclass(frozen=True)
class PosteriorMatching:
    """Sample the next size from the current posterior over k1."""


@dataclass(frozen=True)
class GreedyMap:
    """Probe the current posterior mode."""


@dataclass(frozen=True)
class FractMaxInfo:
    """Refit the logistic VRF each step and probe its steepest point."""


@dataclass(frozen=True)
class FixedSequence:
    """Preset sizes, cycled if the exam outlasts them."""

    sizes: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.sizes:
            raise ValueError("fixed sequence may not be empty")
        if any(s <= 0 for s in self.sizes):
            raise ValueError("sizes must be positive")


PolicyKind = Union[PosteriorMatching, GreedyMap, FractMaxInfo, FixedSequence]


def parse_policy(name: str) -> PolicyKind:
    """Policy from a config/CLI string, e.g. "fixed:8,4,2,1"."""
    if name == "posterior_matching":
        return PosteriorMatching()
    if name == "greedy_map":
        return GreedyMap()
    if name == "fract":
        return FractMaxInfo()
    if name.startswith("fixed:"):
        sizes = tuple(float(s) for s in name[len("fixed:") :].split(","))
        return FixedSequence(sizes)
    raise ValueError(f"unknown policy {name!r}")


def policy_name(kind: PolicyKind) -> str:
    if isinstance(kind, PosteriorMatching):
        return "posterior_matching"
    if isinstance(kind, GreedyMap):
        return "greedy_map"
    if isinstance(kind, FractMaxInfo):
        return "fract"
    return "fixed:" + ",".join(f"{s:g}" for s in kind.sizes)


def clamp_size(size: float, lo: float = SIZE_MIN, hi: float = SIZE_MAX) -> float:
    if size < lo or size > hi:
        log.debug("clamping proposed size %.4g to [%g, %g]", size, lo, hi)
        return min(max(size, lo), hi)
    return size


def next_size_posterior_matching(
    ps: bel.ParticleSet, rng, lo: float = SIZE_MIN, hi: float = SIZE_MAX
) -> float:
    return clamp_size(bel.posterior_sample(ps, rng), lo, hi)


def next_size_greedy_map(
    ps: bel.ParticleSet, lo: float = SIZE_MIN, hi: float = SIZE_MAX
) -> float:
    return clamp_size(bel.posterior_map(ps), lo, hi)


def _history_to_summaries(history: list[bel.Observation]) -> list[vrf.SizeTrialSummary]:
    counts: dict[float, list[int]] = {}
    for obs in history:
        succ, tot = counts.setdefault(obs.size, [0, 0])
        counts[obs.size][0] = succ + (1 if obs.correct else 0)
        counts[obs.size][1] = tot + 1
    return [
        vrf.SizeTrialSummary(size=s, successes=sc, trials=t)
        for s, (sc, t) in sorted(counts.items())
    ]


# With <=200 observations the slope is weakly identified; the ridge keeps it
# at plausible psychometric steepness while remaining data-overridable.
SLOPE_RIDGE = (8.0, 0.6)


def fract_mle(history: list[bel.Observation], c: float) -> vrf.FitResult:
    """Maximum-likelihood (v0, slope) for the observed history.

    Uses the bigger-letters-easier orientation of the logistic, with the
    slope lightly regularized (see SLOPE_RIDGE). All-correct or
    all-incorrect histories push the optimum to the search-box edge; the
    clamped params come back with the boundary flag set.
    """
    if not history:
        raise ValueError("history must be non-empty")
    return vrf.fit_fract_logistic(
        _history_to_summaries(history), c, increasing=True, slope_ridge=SLOPE_RIDGE
    )


def fract_steepest_size(p: vrf.FractParams) -> float:
    """Unclamped size where |dv/dx| peaks: ((s-1)/(s+1))^(1/s) / v0.

    For slope <= 1 the magnitude increases without bound as x -> 0, so the
    steepest displayable point is the lower size bound; 0 is returned and
    the caller's clamp applies. Both logistic orientations share the same
    |dv/dx|, so this holds for either.
    """
    s = p.slope
    if s <= 1.0:
        return 0.0
    return ((s - 1.0) / (s + 1.0)) ** (1.0 / s) / p.v0


def fract_next_size(
    p: vrf.FractParams, lo: float = SIZE_MIN, hi: float = SIZE_MAX
) -> float:
    return clamp_size(fract_steepest_size(p), lo, hi)


def fract_acuity(p: vrf.FractParams, tau: float) -> float:
    """Size where the (increasing-orientation) logistic crosses tau."""
    if not p.c < tau < 1:
        raise ValueError(f"need c < tau < 1, got c={p.c}, tau={tau}")
    rho = (tau - p.c) / (1.0 - p.c)
    u = rho / (1.0 - rho)
    return u ** (1.0 / p.slope) / p.v0


def fixed_sequence_size(seq: FixedSequence, step: int) -> float:
    return clamp_size(seq.sizes[step % len(seq.sizes)])
