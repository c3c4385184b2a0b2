"""Particle representation of the joint (k0, k1) posterior.

Particles are drawn once from the prior (k1 from a Gumbel over logMAR,
k0 as a uniform ratio of k1) and never moved or resampled afterwards:
observations only reweight them by their response likelihood. Updates are
therefore O(n_particles) regardless of exam length, and the posterior over
k1 is read out of the weighted cloud (mode, quantiles, band masses).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.ndimage import gaussian_filter1d

from . import vrf

__all__ = [
    "GumbelPrior",
    "K0RatioPrior",
    "Particle",
    "ParticleSet",
    "Observation",
    "sample_gumbel",
    "init_particles",
    "update",
    "posterior_map",
    "posterior_sample",
    "credible_mass",
    "posterior_quantiles",
]

DEFAULT_N_PARTICLES = 5000

# Below this total weight the set is rescaled before the next multiply so a
# long exam cannot underflow every particle at once.
_RENORM_FLOOR = 1.0


@dataclass(frozen=True)
class GumbelPrior:
    """Prior over log10(k1): Gumbel(mu, beta) in logMAR units."""

    mu: float = 0.3
    beta: float = 0.5

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def mode_arcmin(self) -> float:
        return 10.0**self.mu

    @property
    def median_logmar(self) -> float:
        return self.mu - self.beta * math.log(math.log(2.0))

    def cdf_logmar(self, g: float) -> float:
        return math.exp(-math.exp(-(g - self.mu) / self.beta))

    def mass_in_arcmin_interval(self, lo: float, hi: float) -> float:
        """Prior probability that k1 falls in [lo, hi] arcmin."""
        if hi <= lo:
            return 0.0
        hi_cdf = self.cdf_logmar(math.log10(hi)) if math.isfinite(hi) else 1.0
        return hi_cdf - self.cdf_logmar(math.log10(lo))

    def sample_logmar(self, rng, n: int | None = None):
        return sample_gumbel(self, rng, n)


@dataclass(frozen=True)
class K0RatioPrior:
    """k0 = r * k1 with r ~ Uniform(lo, hi); scale-free across acuities.

    The default range keeps the guessing-to-seeing transition narrow
    relative to the acuity itself, matching the sharply floored response
    curves measured on real patients.
    """

    lo: float = 0.75
    hi: float = 0.97

    def __post_init__(self) -> None:
        if not 0 < self.lo < self.hi < 1:
            raise ValueError(f"need 0 < lo < hi < 1, got {self.lo}, {self.hi}")


@dataclass(frozen=True)
class Particle:
    k0: float
    k1: float
    weight: float


@dataclass(frozen=True)
class Observation:
    """One exam step: letter size shown (arcmin) and whether it was read."""

    size: float
    correct: bool

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError(f"size must be positive, got {self.size}")


@dataclass(frozen=True)
class ParticleSet:
    """Weighted (k0, k1) cloud; positions immutable, only weights change."""

    k0: np.ndarray
    k1: np.ndarray
    weights: np.ndarray
    c: float
    tau: float
    total_weight: float = field(default=0.0)

    def __post_init__(self) -> None:
        if len(self.k1) == 0:
            raise ValueError("particle set may not be empty")
        self.k0.setflags(write=False)
        self.k1.setflags(write=False)
        object.__setattr__(self, "total_weight", float(self.weights.sum()))

    def __len__(self) -> int:
        return len(self.k1)

    def __getitem__(self, i: int) -> Particle:
        return Particle(float(self.k0[i]), float(self.k1[i]), float(self.weights[i]))

    @cached_property
    def log10_k1(self) -> np.ndarray:
        return np.log10(self.k1)

    @property
    def effective_sample_size(self) -> float:
        """Kish ESS; logged as a diagnostic, never acted upon (no resampling)."""
        s = self.weights.sum()
        q = self.weights @ self.weights
        return float(s * s / q) if q > 0 else 0.0

    def normalized_weights(self) -> np.ndarray:
        if self.total_weight <= 0:
            raise ValueError("all particle weights are zero")
        return self.weights / self.total_weight


def sample_gumbel(prior: GumbelPrior, rng, n: int | None = None):
    """Inverse-CDF Gumbel draws in logMAR: mu - beta*ln(-ln U)."""
    u = np.clip(rng.random(n), 1e-300, None)
    g = prior.mu - prior.beta * np.log(-np.log(u))
    return float(g) if n is None else g


def init_particles(
    prior,
    k0p: K0RatioPrior,
    n: int,
    c: float,
    tau: float,
    rng,
) -> ParticleSet:
    """Draw n particles from the joint prior with unit weights.

    ``prior`` is anything with a ``sample_logmar(rng, n)`` method: the
    Gumbel prior, or the flat no-information prior. Draw order is fixed
    (all k1, then all ratios) so a seeded generator reproduces the same
    cloud byte for byte.
    """
    if n < 1:
        raise ValueError("need at least one particle")
    g = prior.sample_logmar(rng, n)
    k1 = 10.0**g
    r = rng.uniform(k0p.lo, k0p.hi, n)
    return ParticleSet(k0=r * k1, k1=k1, weights=np.ones(n), c=c, tau=tau)


# Slope assumed by the logistic-belief variant: the classic psychometric
# default prior work built its exams on, deliberately not informed by the
# sharp transitions the floored-exp model encodes via k0.
CLASSIC_LOGISTIC_SLOPE = 3.5


def _logistic_belief_likelihood(ps: ParticleSet, size: float) -> np.ndarray:
    """Per-particle logistic VRF: the prior-work belief assumption.

    Crosses tau at each particle's k1 with the classic fixed slope, so the
    belief keeps the same acuity latent but reverts to the gradual
    logistic shape: no hard guessing floor, wide transition. The particle's
    k0 plays no role here, exactly because the old model had no notion of a
    discernment onset.
    """
    c, tau = ps.c, ps.tau
    rho = (tau - c) / (1.0 - c)
    u_tau = rho / (1.0 - rho)
    log_u = math.log(u_tau) + CLASSIC_LOGISTIC_SLOPE * (
        math.log(size) - np.log(ps.k1)
    )
    log_u = np.clip(log_u, -700.0, 700.0)
    u = np.exp(log_u)
    return c + (1.0 - c) * u / (1.0 + u)


def response_likelihoods(
    ps: ParticleSet, obs: Observation, slip: float, *, belief_vrf: str = "floored_exp"
) -> np.ndarray:
    """p(observation | particle) for every particle."""
    if belief_vrf == "floored_exp":
        v = vrf.floored_exp_arrays(obs.size, ps.k0, ps.k1, ps.c, ps.tau)
    elif belief_vrf == "logistic":
        v = _logistic_belief_likelihood(ps, obs.size)
    else:
        raise ValueError(f"unknown belief VRF {belief_vrf!r}")
    v = vrf.with_slip(v, slip, ps.c)
    return v if obs.correct else 1.0 - v


def update(
    ps: ParticleSet, obs: Observation, slip: float, *, belief_vrf: str = "floored_exp"
) -> ParticleSet:
    """Reweight every particle by its likelihood for one observation.

    Positions are never touched. If the incoming total weight has decayed
    below a safe floor the weights are rescaled first (pure renormalization,
    relative masses unchanged) so products cannot underflow to zero.
    """
    w = ps.weights
    if 0 < ps.total_weight < _RENORM_FLOOR:
        w = w * (len(ps) / ps.total_weight)
    lik = response_likelihoods(ps, obs, slip, belief_vrf=belief_vrf)
    return ParticleSet(k0=ps.k0, k1=ps.k1, weights=w * lik, c=ps.c, tau=ps.tau)


def _weighted_quantiles(values: np.ndarray, weights: np.ndarray, qs) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    total = cw[-1]
    idx = np.searchsorted(cw, np.asarray(qs) * total, side="left")
    idx = np.minimum(idx, len(values) - 1)
    return values[order[idx]]


def posterior_map(ps: ParticleSet) -> float:
    """Posterior mode of k1 via weighted Gaussian KDE over log10(k1).

    The density is binned onto a fine grid, smoothed with a
    weighted-Silverman bandwidth, read back at the particle locations, and
    the best particle's k1 returned, so the estimate always lies inside the
    particle cloud. A raw max-weight particle would be noisy at 5000
    particles; histogram-only modes carry bin artifacts.
    """
    w = ps.normalized_weights()
    lg = ps.log10_k1
    lo, hi = float(lg.min()), float(lg.max())
    if hi - lo < 1e-12:
        return float(ps.k1[0])

    mean = float(w @ lg)
    sigma = math.sqrt(max(float(w @ (lg - mean) ** 2), 0.0))
    q25, q75 = _weighted_quantiles(lg, w, [0.25, 0.75])
    spread = min(sigma, (q75 - q25) / 1.34) if q75 > q25 else sigma
    if spread <= 0:
        return float(ps.k1[int(np.argmax(w))])
    n_eff = 1.0 / float(w @ w)
    bw = max(0.9 * spread * n_eff ** (-0.2), (hi - lo) * 1e-4)

    n_bins = 512
    edges = np.linspace(lo - 4 * bw, hi + 4 * bw, n_bins + 1)
    hist, _ = np.histogram(lg, bins=edges, weights=w)
    step = edges[1] - edges[0]
    density = gaussian_filter1d(hist, sigma=bw / step, mode="constant")
    centers = 0.5 * (edges[:-1] + edges[1:])
    at_particles = np.interp(lg, centers, density)
    return float(ps.k1[int(np.argmax(at_particles))])


def posterior_sample(ps: ParticleSet, rng) -> float:
    """Draw one particle's k1 with probability proportional to weight."""
    if ps.total_weight <= 0:
        raise ValueError("all particle weights are zero")
    cs = np.cumsum(ps.weights)
    u = rng.random() * cs[-1]
    idx = min(int(np.searchsorted(cs, u, side="right")), len(ps) - 1)
    return float(ps.k1[idx])


def credible_mass(ps: ParticleSet, center: float, rel_eps: float) -> float:
    """Posterior mass of the set of true k1 within relative error rel_eps.

    |center - true|/true <= eps is equivalent to
    true in [center/(1+eps), center/(1-eps)], endpoints included.
    """
    if rel_eps <= 0:
        raise ValueError("rel_eps must be positive")
    if ps.total_weight <= 0:
        raise ValueError("all particle weights are zero")
    lo = center / (1.0 + rel_eps)
    hi = center / (1.0 - rel_eps) if rel_eps < 1 else math.inf
    inside = (ps.k1 >= lo) & (ps.k1 <= hi)
    return float(ps.weights[inside].sum() / ps.total_weight)


def posterior_quantiles(ps: ParticleSet, qs) -> list[float]:
    """Weighted empirical quantiles of k1; ties resolve to the lower value."""
    qs = list(qs)
    if any(not 0 < q < 1 for q in qs) or sorted(qs) != qs:
        raise ValueError("quantiles must be sorted and strictly inside (0, 1)")
    if ps.total_weight <= 0:
        raise ValueError("all particle weights are zero")
    vals = _weighted_quantiles(ps.k1, ps.weights, qs)
    return [float(v) for v in vals]


def belief_histogram(ps: ParticleSet, n_bins: int = 40) -> list[tuple[float, float, float]]:
    """Normalized weight histogram over logMAR, as (lo, hi, mass) bins."""
    w = ps.normalized_weights()
    lg = ps.log10_k1
    lo, hi = float(lg.min()), float(lg.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.05, hi + 0.05
    hist, edges = np.histogram(lg, bins=n_bins, range=(lo, hi), weights=w)
    return [
        (float(edges[i]), float(edges[i + 1]), float(hist[i])) for i in range(n_bins)
    ]
