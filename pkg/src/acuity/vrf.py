"""Visual response functions (VRFs) and maximum-likelihood curve fitting.

A VRF maps optotype size (arcmin) to the probability of a correct answer.
Two families live here:

* the floored exponential: a constant guessing floor ``c`` below ``k0`` and
  an exponential approach to 1 above it, anchored so that ``v(k1) = tau``;
* the classic logistic used by FrACT-style exams, ``c + (1-c)/(1+(v0*x)^s)``.

The logistic is kept verbatim in its published orientation, which *decreases*
with letter size (it was written for decimal units, the reciprocal of visual
angle). Callers that want bigger-letters-easier semantics pass
``increasing=True``, which mirrors the exponent; the half-way point ``1/v0``
and the scale covariance in ``v0*x`` are identical either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "VrfParams",
    "LocationScaleParams",
    "FractParams",
    "SizeTrialSummary",
    "UnfittableDataError",
    "floored_exp",
    "floored_exp_arrays",
    "reparameterize",
    "location_scale_of",
    "fract_logistic",
    "fract_logistic_arrays",
    "with_slip",
    "logistic_equivalent",
    "fit_floored_exp",
    "fit_fract_logistic",
    "FitResult",
]

# Clamps below keep v(x) < 1 exactly in float64 for every finite x, even
# when k1 ~ k0: the exponential tail is floored at ~1e-15 (a few ulps of
# 1.0) rather than letting it underflow and round 1 - tail up to 1.0.
_MIN_TAIL = 1e-15
_MAX_EXP_MAGNITUDE = 700.0


class UnfittableDataError(ValueError):
    """Raised when trial data carries no signal above the guessing floor."""


@dataclass(frozen=True)
class VrfParams:
    """Floored-exponential parameters.

    k0: size where discernment begins (floor ends), arcmin.
    k1: acuity, the size seen correctly with probability tau, arcmin.
    c:  random-guess success rate, 1/(number of optotype choices).
    tau: target probability defining k1.
    """

    k0: float
    k1: float
    c: float
    tau: float

    def __post_init__(self) -> None:
        if not 0 < self.k0 < self.k1:
            raise ValueError(f"need 0 < k0 < k1, got k0={self.k0}, k1={self.k1}")
        if not 0 < self.c < self.tau <= 1:
            raise ValueError(f"need 0 < c < tau <= 1, got c={self.c}, tau={self.tau}")


@dataclass(frozen=True)
class LocationScaleParams:
    """Raw exponential parameterization: v = max(c, 1 - (1-c) exp(-lam(x-b)))."""

    b: float
    lam: float
    c: float

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError(f"scale lam must be positive, got {self.lam}")


@dataclass(frozen=True)
class FractParams:
    """Logistic VRF parameters: v0 (1/arcmin) and the slope exponent."""

    v0: float
    slope: float
    c: float

    def __post_init__(self) -> None:
        if self.v0 <= 0 or self.slope <= 0:
            raise ValueError(f"v0 and slope must be positive, got {self.v0}, {self.slope}")


@dataclass(frozen=True)
class SizeTrialSummary:
    """Binomial summary of repeated presentations at one size."""

    size: float
    successes: int
    trials: int

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError("size must be positive")
        if self.trials <= 0 or not 0 <= self.successes <= self.trials:
            raise ValueError(f"bad counts: {self.successes}/{self.trials}")

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def floored_exp_arrays(x, k0, k1, c: float, tau: float):
    """Floored exponential, broadcasting over x and/or (k0, k1) arrays."""
    base = (1.0 - tau) / (1.0 - c)
    log_base = math.log(base)  # < 0 for tau > c
    max_exponent = math.log(_MIN_TAIL / (1.0 - c)) / log_base
    exponent = (np.asarray(x) - k0) / (k1 - k0)
    exponent = np.clip(exponent, 0.0, max_exponent)
    v = 1.0 - (1.0 - c) * np.exp(exponent * log_base)
    return np.maximum(v, c)


def floored_exp(x, p: VrfParams):
    """Probability of a correct answer at size x under floored-exp params."""
    out = floored_exp_arrays(x, p.k0, p.k1, p.c, p.tau)
    return float(out) if np.isscalar(x) else out


def reparameterize(ls: LocationScaleParams, tau: float) -> VrfParams:
    """Convert (location b, scale lam) to the (k0, k1) anchor form.

    k0 = b and k1 = k0 + ln((1-c)/(1-tau)) / lam, so that the exponential
    branch crosses tau exactly at k1.
    """
    if not ls.c < tau < 1:
        raise ValueError(f"need c < tau < 1, got c={ls.c}, tau={tau}")
    k1 = ls.b + math.log((1.0 - ls.c) / (1.0 - tau)) / ls.lam
    return VrfParams(k0=ls.b, k1=k1, c=ls.c, tau=tau)


def location_scale_of(p: VrfParams) -> LocationScaleParams:
    """Inverse of reparameterize: recover (b, lam) from (k0, k1)."""
    lam = math.log((1.0 - p.c) / (1.0 - p.tau)) / (p.k1 - p.k0)
    return LocationScaleParams(b=p.k0, lam=lam, c=p.c)


def fract_logistic_arrays(x, v0, slope, c: float, *, increasing: bool = False):
    """Logistic VRF, broadcasting over x and/or parameter arrays.

    Verbatim orientation (increasing=False) decreases with x; the mirrored
    orientation flips the exponent sign so probability rises with size.
    """
    x = np.asarray(x, dtype=float)
    sign = -1.0 if increasing else 1.0
    # (v0*x)^(sign*s) computed in log space; clamp against overflow.
    log_u = sign * slope * np.log(v0 * x)
    log_u = np.clip(log_u, -_MAX_EXP_MAGNITUDE, _MAX_EXP_MAGNITUDE)
    return c + (1.0 - c) / (1.0 + np.exp(log_u))


def fract_logistic(x, p: FractParams, *, increasing: bool = False):
    if np.any(np.asarray(x) <= 0):
        raise ValueError("size must be positive")
    out = fract_logistic_arrays(x, p.v0, p.slope, p.c, increasing=increasing)
    return float(out) if np.isscalar(x) else out


def with_slip(v, slip: float, c: float):
    """Mix a slip process into a response probability: slip*c + (1-slip)*v."""
    return slip * c + (1.0 - slip) * v


def logistic_equivalent(p: VrfParams) -> FractParams:
    """The logistic VRF playing the same role as a floored-exp curve.

    Shares the curve's two interpretable anchors: it crosses tau at k1, and
    its rise is centered on k0, the size where discernment begins
    (v = c + (1-c)/2 there). The shapes then differ exactly where the two
    families disagree: the logistic drifts down to the guessing floor
    asymptotically instead of sitting on it below k0.
    """
    if p.k0 >= p.k1:
        raise ValueError("k0 must be below k1")
    rho = (p.tau - p.c) / (1.0 - p.c)
    u_tau = rho / (1.0 - rho)
    s = math.log(u_tau) / math.log(p.k1 / p.k0)
    v0 = u_tau ** (1.0 / s) / p.k1
    return FractParams(v0=v0, slope=s, c=p.c)


@dataclass(frozen=True)
class FitResult:
    """Maximum-likelihood fit plus mean log-likelihood per trial."""

    params: object
    mean_loglik: float
    boundary: bool


def _binom_loglik(rates_pred, data: list[SizeTrialSummary]) -> np.ndarray:
    """Total Binomial log-likelihood; rates_pred has shape (..., n_sizes)."""
    succ = np.array([d.successes for d in data], dtype=float)
    fail = np.array([d.trials - d.successes for d in data], dtype=float)
    p = np.clip(rates_pred, 1e-12, 1.0 - 1e-12)
    return succ * np.log(p) + fail * np.log1p(-p)


def fit_floored_exp(data: list[SizeTrialSummary], c: float, tau: float) -> FitResult:
    """Binomial ML fit of (k0, k1) on per-size trial summaries.

    Coarse grid over (log10 k1, k0/k1 ratio) followed by Nelder-Mead in the
    same coordinates. Data where every empirical rate sits at the guessing
    floor is rejected as unfittable; data answered perfectly everywhere fits
    at the small-size boundary and is flagged.
    """
    sizes = np.array([d.size for d in data], dtype=float)
    if len(np.unique(sizes)) < 3:
        raise ValueError("need trials at >= 3 distinct sizes")
    rates = np.array([d.rate for d in data])
    if np.all(rates <= c + 0.05):
        raise UnfittableDataError(
            "every empirical rate is at the guessing floor; k1 is unidentifiable"
        )

    n_trials = float(sum(d.trials for d in data))
    lo, hi = sizes.min(), sizes.max()
    log_k1_grid = np.linspace(math.log10(lo) - 1.2, math.log10(hi) + 0.8, 60)
    ratio_grid = np.linspace(0.05, 0.98, 24)

    def loglik(log_k1: float, ratio: float) -> float:
        k1 = 10.0**log_k1
        k0 = ratio * k1
        v = floored_exp_arrays(sizes, k0, k1, c, tau)
        return float(_binom_loglik(v, data).sum())

    kk, rr = np.meshgrid(log_k1_grid, ratio_grid, indexing="ij")
    k1s = 10.0**kk[..., None]
    k0s = rr[..., None] * k1s
    v = floored_exp_arrays(sizes[None, None, :], k0s, k1s, c, tau)
    ll = _binom_loglik(v, data).sum(axis=-1)
    i, j = np.unravel_index(np.argmax(ll), ll.shape)

    box_lo = (log_k1_grid[0], 0.02)
    box_hi = (log_k1_grid[-1], 0.995)

    def neg(theta) -> float:
        lk1 = min(max(theta[0], box_lo[0]), box_hi[0])
        r = min(max(theta[1], box_lo[1]), box_hi[1])
        return -loglik(lk1, r)

    res = optimize.minimize(
        neg,
        x0=[log_k1_grid[i], ratio_grid[j]],
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 2000},
    )
    lk1 = min(max(res.x[0], box_lo[0]), box_hi[0])
    ratio = min(max(res.x[1], box_lo[1]), box_hi[1])
    k1 = 10.0**lk1
    params = VrfParams(k0=ratio * k1, k1=k1, c=c, tau=tau)
    boundary = k1 <= lo or k1 >= 10.0 ** box_hi[0] or np.all(rates >= 1.0 - 1e-12)
    return FitResult(params=params, mean_loglik=-res.fun / n_trials, boundary=boundary)


def fit_fract_logistic(
    data: list[SizeTrialSummary],
    c: float,
    *,
    increasing: bool = True,
    slope_ridge: tuple[float, float] | None = None,
) -> FitResult:
    """Binomial ML fit of the logistic VRF (v0, slope) on trial summaries.

    slope_ridge=(s0, sigma) adds a log-normal penalty on the slope,
    ((ln s - ln s0)/sigma)^2 / 2, turning the fit into a MAP estimate. With
    a handful of observations the (v0, slope) likelihood has long flat
    ridges (a shallow curve at a distant acuity explains near-floor data as
    well as a steep one nearby); the penalty keeps the slope at
    psychometrically plausible values while 200+ trials can still override
    it. The reported mean_loglik is the raw data likelihood.
    """
    sizes = np.array([d.size for d in data], dtype=float)
    if len(sizes) == 0:
        raise ValueError("no data")
    n_trials = float(sum(d.trials for d in data))

    lo, hi = sizes.min(), sizes.max()
    # a = 1/v0 is the half-way size in arcmin; search around the data range.
    log_a_grid = np.linspace(math.log10(lo) - 1.5, math.log10(hi) + 1.5, 50)
    log_s_grid = np.linspace(math.log10(0.25), math.log10(60.0), 18)

    def penalty(slopes) -> np.ndarray:
        if slope_ridge is None:
            return np.zeros(np.shape(slopes))
        s0, sigma = slope_ridge
        return 0.5 * ((np.log(slopes) - math.log(s0)) / sigma) ** 2

    aa, ss = np.meshgrid(log_a_grid, log_s_grid, indexing="ij")
    v0s = 10.0 ** -aa[..., None]
    slopes = 10.0 ** ss[..., None]
    v = fract_logistic_arrays(sizes[None, None, :], v0s, slopes, c, increasing=increasing)
    ll = _binom_loglik(v, data).sum(axis=-1) - penalty(slopes[..., 0])
    i, j = np.unravel_index(np.argmax(ll), ll.shape)

    def neg(theta) -> float:
        la = min(max(theta[0], log_a_grid[0]), log_a_grid[-1])
        ls = min(max(theta[1], log_s_grid[0]), log_s_grid[-1])
        s = 10.0**ls
        v = fract_logistic_arrays(sizes, 10.0**-la, s, c, increasing=increasing)
        return -float(_binom_loglik(v, data).sum()) + float(penalty(s))

    res = optimize.minimize(
        neg,
        x0=[log_a_grid[i], log_s_grid[j]],
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 2000},
    )
    la = min(max(res.x[0], log_a_grid[0]), log_a_grid[-1])
    ls = min(max(res.x[1], log_s_grid[0]), log_s_grid[-1])
    eps = 1e-9
    boundary = (
        la <= log_a_grid[0] + eps
        or la >= log_a_grid[-1] - eps
        or np.all([d.successes == d.trials for d in data])
        or np.all([d.successes == 0 for d in data])
    )
    params = FractParams(v0=10.0**-la, slope=10.0**ls, c=c)
    raw_ll = float(
        _binom_loglik(
            fract_logistic_arrays(sizes, params.v0, params.slope, c, increasing=increasing),
            data,
        ).sum()
    )
    return FitResult(params=params, mean_loglik=raw_ll / n_trials, boundary=boundary)
