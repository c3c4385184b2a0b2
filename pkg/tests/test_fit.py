"""Generate-then-fit oracles for the curve-fitting routines."""

import numpy as np
import pytest

from acuity import vrf
from acuity.vrf import SizeTrialSummary, UnfittableDataError, VrfParams


def synth_data(params, sizes, trials, rng, slip=0.0):
    out = []
    for s in sizes:
        p = vrf.with_slip(vrf.floored_exp(s, params), slip, params.c)
        out.append(
            SizeTrialSummary(size=float(s), successes=int(rng.binomial(trials, p)), trials=trials)
        )
    return out


class TestFitFlooredExp:
    def test_recovers_known_params(self):
        truth = VrfParams(k0=1.0, k1=2.0, c=0.25, tau=0.8)
        rng = np.random.default_rng(7)
        data = synth_data(truth, np.geomspace(0.5, 4.0, 8), 500, rng)
        fit = vrf.fit_floored_exp(data, c=0.25, tau=0.8)
        assert not fit.boundary
        assert fit.params.k1 == pytest.approx(2.0, rel=0.05)

    def test_all_perfect_is_boundary_below_smallest_size(self):
        data = [
            SizeTrialSummary(size=s, successes=50, trials=50) for s in (2.0, 4.0, 8.0)
        ]
        fit = vrf.fit_floored_exp(data, c=0.25, tau=0.8)
        assert fit.boundary
        assert fit.params.k1 <= 2.0

    def test_floor_only_data_unfittable(self):
        rng = np.random.default_rng(3)
        data = [
            SizeTrialSummary(size=s, successes=int(rng.binomial(400, 0.25)), trials=400)
            for s in (0.5, 1.0, 2.0, 4.0)
        ]
        with pytest.raises(UnfittableDataError):
            vrf.fit_floored_exp(data, c=0.25, tau=0.8)

    def test_needs_three_distinct_sizes(self):
        data = [SizeTrialSummary(size=1.0, successes=10, trials=20)] * 3
        with pytest.raises(ValueError):
            vrf.fit_floored_exp(data, c=0.25, tau=0.8)

    def test_beats_logistic_on_floored_exp_data(self):
        # same data, both families: the generating family should win on
        # mean log-likelihood (the logistic misfits the hard floor)
        truth = VrfParams(k0=1.2, k1=1.8, c=0.25, tau=0.8)
        rng = np.random.default_rng(11)
        data = synth_data(truth, np.geomspace(0.4, 5.0, 10), 500, rng)
        fexp = vrf.fit_floored_exp(data, c=0.25, tau=0.8)
        logi = vrf.fit_fract_logistic(data, c=0.25)
        assert fexp.mean_loglik >= logi.mean_loglik


class TestFitFractLogistic:
    def test_recovers_known_params(self):
        truth = vrf.FractParams(v0=0.5, slope=4.0, c=0.25)
        rng = np.random.default_rng(5)
        data = []
        for s in np.geomspace(0.4, 10.0, 10):
            p = vrf.fract_logistic(float(s), truth, increasing=True)
            data.append(
                SizeTrialSummary(size=float(s), successes=int(rng.binomial(400, p)), trials=400)
            )
        fit = vrf.fit_fract_logistic(data, c=0.25)
        assert fit.params.v0 == pytest.approx(0.5, rel=0.10)

    def test_one_sided_data_is_boundary(self):
        data = [
            SizeTrialSummary(size=s, successes=20, trials=20) for s in (1.0, 2.0, 4.0)
        ]
        fit = vrf.fit_fract_logistic(data, c=0.25)
        assert fit.boundary

    def test_ridge_is_overridden_by_enough_data(self):
        # 200+ trials at informative sizes pull the slope away from the
        # ridge center toward the generating value
        truth = vrf.FractParams(v0=0.5, slope=3.0, c=0.25)
        rng = np.random.default_rng(9)
        data = []
        for s in np.geomspace(0.5, 8.0, 12):
            p = vrf.fract_logistic(float(s), truth, increasing=True)
            data.append(
                SizeTrialSummary(size=float(s), successes=int(rng.binomial(300, p)), trials=300)
            )
        fit = vrf.fit_fract_logistic(data, c=0.25, slope_ridge=(8.0, 0.6))
        assert fit.params.slope == pytest.approx(3.0, rel=0.25)
