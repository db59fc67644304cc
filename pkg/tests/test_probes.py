import numpy as np
import pytest

from stablemv import (
    EmpiricalMeasure,
    MeasureFlow,
    RngStream,
    frac_deriv_decay_probe,
    grad_decay_probe,
)
from stablemv.models import build_model

LAGS = np.geomspace(0.05, 2.0, 6)


def _flow():
    grid = np.array([0.0, float(LAGS[-1])])
    return MeasureFlow.constant(EmpiricalMeasure.from_points(np.zeros(1)), grid)


def _f(pts):
    return np.linalg.norm(pts, axis=1) ** 0.5


def test_grad_probe_recovers_exponent():
    setup = build_model("pure_stable", alpha=1.0, eta=0.5)
    res = grad_decay_probe(
        setup.coeffs, _flow(), _f, 1.0, LAGS, 60_000, RngStream(60)
    )
    assert res.target_exponent == pytest.approx(-0.5)
    assert not res.inconclusive
    assert res.fitted_slope == pytest.approx(-0.5, abs=0.2)
    assert res.slope_ci[0] <= res.fitted_slope <= res.slope_ci[1]


def test_frac_probe_recovers_exponent():
    setup = build_model("pure_stable", alpha=1.0, eta=0.5)
    res = frac_deriv_decay_probe(
        setup.coeffs, _flow(), _f, 0.0, LAGS, 40_000, RngStream(61)
    )
    assert res.target_exponent == pytest.approx(-0.5)
    assert not res.inconclusive
    assert res.fitted_slope == pytest.approx(-0.5, abs=0.2)
    assert max(res.diagnostics["cutoff_sensitivity"]) <= 0.2


def test_gradient_vanishes_at_symmetry_point():
    # even test function, base point 0: the estimate is pure noise and the
    # probe must say so instead of fitting a slope through it
    setup = build_model("pure_stable", alpha=1.0, eta=0.5)
    res = grad_decay_probe(
        setup.coeffs, _flow(), _f, 0.0, LAGS, 20_000, RngStream(62)
    )
    assert res.inconclusive


def test_probe_deterministic():
    setup = build_model("pure_stable", alpha=1.2, eta=0.5)
    a = grad_decay_probe(setup.coeffs, _flow(), _f, 1.0, LAGS, 10_000, RngStream(63))
    b = grad_decay_probe(setup.coeffs, _flow(), _f, 1.0, LAGS, 10_000, RngStream(63))
    np.testing.assert_array_equal(a.estimates, b.estimates)
    np.testing.assert_array_equal(a.stderrs, b.stderrs)


def test_holder_seminorm_enforced():
    setup = build_model("pure_stable", alpha=1.0, eta=0.5)

    def too_big(pts):
        return 3.0 * np.linalg.norm(pts, axis=1) ** 0.5

    with pytest.raises(ValueError):
        grad_decay_probe(setup.coeffs, _flow(), too_big, 1.0, LAGS, 1000, RngStream(64))


def test_lag_span_guard():
    setup = build_model("pure_stable", alpha=1.0, eta=0.5)
    short = np.geomspace(0.5, 1.0, 4)
    with pytest.raises(ValueError):
        grad_decay_probe(setup.coeffs, _flow(), _f, 1.0, short, 1000, RngStream(65))


def test_frac_probe_rejects_bad_inputs():
    setup = build_model("pure_stable", alpha=1.0, dim=2, eta=0.5)
    grid = np.array([0.0, float(LAGS[-1])])
    flow2 = MeasureFlow.constant(EmpiricalMeasure.from_points(np.zeros((1, 2))), grid)
    with pytest.raises(ValueError):
        frac_deriv_decay_probe(
            setup.coeffs, flow2, _f, 0.0, LAGS, 1000, RngStream(66)
        )
    setup1 = build_model("pure_stable", alpha=0.8, eta=0.4)
    with pytest.raises(ValueError):
        frac_deriv_decay_probe(
            setup1.coeffs, _flow(), _f, 0.0, LAGS, 1000, RngStream(67), eta=0.9
        )
