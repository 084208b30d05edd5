import math

import numpy as np
import pytest

from gcinverse.bukhgeim import SpectralParam
from gcinverse.errors import InvalidArgument
from gcinverse.fields import BoundaryField, constant_field
from gcinverse.forward import dtn_difference
from gcinverse.geometry import make_disc, make_ellipse
from gcinverse.verify import (alessandrini_residual, condbord_integral, condbord_study, harmonic_field,
                              rate_report, rate_study, uniqueness_experiment, zero_noise_floor)

LAMS = [10.0, 40.0, 160.0, 640.0]


def test_rate_report_pass_and_fail():
    fast = [math.log(3 * x) / x for x in LAMS]
    slow = [math.log(3 * x) / x ** 0.5 for x in LAMS]
    assert rate_report(LAMS, fast, 1.0).passed
    r = rate_report(LAMS, slow, 1.0)
    assert not r.passed and r.monotone and r.fitted_slope == pytest.approx(-0.5, abs=1e-12)
    assert rate_study(lambda x: 1 / x, 1.0, LAMS, log_power=0).passed


def test_rate_report_non_monotone():
    r = rate_report(LAMS, [1e-1, 1e-3, 2e-3, 1e-5], 1.0, log_power=0)
    assert not r.monotone and not r.passed


def test_rate_report_bad_errors():
    assert not rate_report(LAMS, [1.0, 0.0, 0.1, 0.01], 1.0).passed


@pytest.mark.parametrize("lams", [[10, 20, 40], [10, 20, 40, 80], [10, 40, 20, 640]])
def test_lambda_span_validation(lams):
    with pytest.raises(InvalidArgument):
        rate_report(lams, [1.0] * len(lams), 1.0)


def test_condbord_zero_weight():
    g = make_ellipse(2.0, 1.0, 64, 256)
    w = BoundaryField(g, np.zeros((g.M, 1, 1)))
    rep = condbord_study(g, w, 0.1, [10.0, 30.0, 100.0, 300.0])
    assert rep.passed and rep.fitted_slope == -math.inf


def test_condbord_constant_on_circle():
    # int_{|z|=1} exp(phi) |dz| at z0 = 0 is 2 pi J0(2 |lam|)
    from scipy.special import j0
    g = make_disc(1.0, 64, 8)
    w = BoundaryField(g, np.ones((g.M, 1, 1)))
    for lam in (3.0, 17.0):
        val = condbord_integral(g, w, SpectralParam(0.0, lam))[0, 0]
        assert abs(val - 2 * math.pi * j0(2 * lam)) < 1e-12


def test_alessandrini_zero_potential():
    g = make_disc(1.0, 64, 16)
    v = constant_field(g, [[0.0]], boundary=True)
    u0 = harmonic_field(g, lambda z: 1 + z ** 2)
    assert alessandrini_residual(v, u0, dtn_difference(v)) == 0.0


def test_alessandrini_rejects_non_harmonic():
    g = make_disc(1.0, 64, 16)
    v = constant_field(g, [[1.0]], boundary=True)
    with pytest.raises(InvalidArgument):
        alessandrini_residual(v, harmonic_field(g, lambda z: np.abs(z) ** 2), dtn_difference(v))


def test_noise_floor_and_uniqueness():
    # 16 radial nodes resolve r^k for every angular mode |k| < 16
    g = make_disc(1.0, 32, 16)
    floor = zero_noise_floor(g)
    assert 0 < floor < 1e-12
    v = constant_field(g, [[1.0]], boundary=True)
    same = uniqueness_experiment(v, v)
    assert same["at_floor"] and same["kernel_difference"] == 0
    diff = uniqueness_experiment(v, 1.5 * v)
    assert diff["distinct"]
