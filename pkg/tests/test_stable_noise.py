import numpy as np
import pytest
from scipy import stats

from stablemv import (
    Convention,
    RngStream,
    StableSpec,
    empirical_char_fn,
    sample_subordinated,
    sample_subordinator,
    sample_sym_stable,
    stable_density_1d,
    stable_interval_mass,
)


def test_char_fn_match_1d():
    spec = StableSpec(1.3, 1, Convention.GENERATOR_HALF)
    n = 200_000
    x = sample_sym_stable(spec, 1.0, n, RngStream(5))
    xi = np.linspace(0.2, 4.0, 9)
    err = np.abs(empirical_char_fn(x, xi) - spec.char_fn(xi, 1.0))
    assert err.max() <= 5.0 / np.sqrt(n)


def test_unit_cauchy_is_standard_cauchy():
    # UNIT alpha=1 has CF e^{-t|xi|}: standard Cauchy at t=1
    spec = StableSpec(1.0, 1, Convention.UNIT)
    x = sample_sym_stable(spec, 1.0, 200_000, RngStream(6))[:, 0]
    assert stats.kstest(x, stats.cauchy.cdf).pvalue > 1e-3


def test_exact_time_scaling_same_stream():
    spec = StableSpec(0.7, 1, Convention.GENERATOR_HALF)
    a = sample_sym_stable(spec, 1.0, 1000, RngStream(7))
    b = sample_sym_stable(spec, 2.0, 1000, RngStream(7))
    np.testing.assert_allclose(b, a * 2.0 ** (1.0 / 0.7), rtol=1e-13)


def test_unit_equals_generator_half_at_double_time():
    unit = StableSpec(1.4, 1, Convention.UNIT)
    gh = StableSpec(1.4, 1, Convention.GENERATOR_HALF)
    a = sample_sym_stable(unit, 0.6, 500, RngStream(8))
    b = sample_sym_stable(gh, 1.2, 500, RngStream(8))
    np.testing.assert_array_equal(a, b)


def test_multivariate_rotational_invariance():
    spec = StableSpec(1.5, 3, Convention.GENERATOR_HALF)
    x = sample_sym_stable(spec, 1.0, 200_000, RngStream(9))
    gen = np.random.default_rng(0)
    u = gen.normal(size=3)
    u /= np.linalg.norm(u)
    v = gen.normal(size=3)
    v /= np.linalg.norm(v)
    p = stats.ks_2samp(x @ u, x @ v).pvalue
    assert p > 1e-3


def test_subordinated_matches_direct():
    spec = StableSpec(0.9, 1, Convention.GENERATOR_HALF)
    a = sample_sym_stable(spec, 1.0, 50_000, RngStream(10))[:, 0]
    b = sample_subordinated(spec, 1.0, 50_000, RngStream(11))[:, 0]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_subordinator_laplace_transform():
    # E e^{-r S_t} = exp(-t/2 (2r)^{alpha/2})
    alpha, t, r = 0.8, 1.3, 0.7
    s = sample_subordinator(alpha, t, 400_000, RngStream(12))
    h = np.exp(-r * s)
    target = np.exp(-t / 2.0 * (2.0 * r) ** (alpha / 2.0))
    se = h.std(ddof=1) / np.sqrt(h.size)
    assert abs(h.mean() - target) <= 4 * se


def test_subordinated_unit_needs_explicit_rescale():
    spec = StableSpec(1.2, 2, Convention.UNIT)
    with pytest.raises(ValueError):
        sample_subordinated(spec, 1.0, 100, RngStream(13))
    x = sample_subordinated(spec, 1.0, 100, RngStream(13), allow_rescale=True)
    assert x.shape == (100, 2)


def test_density_against_reference():
    xs = np.array([-3.0, -1.0, 0.0, 0.5, 2.0])
    p = stable_density_1d(1.3, Convention.GENERATOR_HALF, 1.0, xs)
    scale = 0.5 ** (1.0 / 1.3)
    ref = stats.levy_stable.pdf(xs, 1.3, 0.0, scale=scale)
    np.testing.assert_allclose(p, ref, atol=1e-6)


def test_density_cauchy_closed_form():
    xs = np.linspace(-6, 6, 7)
    p = stable_density_1d(1.0, Convention.UNIT, 1.0, xs)
    np.testing.assert_allclose(p, 1.0 / (np.pi * (1.0 + xs**2)), atol=1e-9)


def test_density_normalization():
    xs = np.linspace(-60, 60, 2001)
    p = stable_density_1d(1.6, Convention.GENERATOR_HALF, 1.0, xs)
    assert abs(np.trapezoid(p, xs) - 1.0) < 1e-3


def test_density_coarse_grid_rejected():
    xs = np.linspace(-50, 50, 9)  # spacing 12.5 >> scale
    with pytest.raises(ValueError):
        stable_density_1d(1.0, Convention.GENERATOR_HALF, 1.0, xs)


def test_interval_mass_matches_density_integral():
    mass = stable_interval_mass(1.2, Convention.GENERATOR_HALF, 1.0, 2.0)
    xs = np.linspace(-2.0, 2.0, 801)
    p = stable_density_1d(1.2, Convention.GENERATOR_HALF, 1.0, xs)
    assert abs(mass - np.trapezoid(p, xs)) < 1e-4


def test_spec_validation():
    with pytest.raises(ValueError):
        StableSpec(2.0, 1)
    with pytest.raises(ValueError):
        StableSpec(0.0, 1)
    with pytest.raises(ValueError):
        StableSpec(1.0, 0)
    with pytest.raises(ValueError):
        sample_sym_stable(StableSpec(1.0, 1), -1.0, 10, RngStream(1))
    with pytest.raises(ValueError):
        sample_sym_stable(StableSpec(1.0, 1), 1.0, 0, RngStream(1))


def test_empirical_char_fn_dim_mismatch():
    x = np.zeros((50, 2))
    with pytest.raises(ValueError):
        empirical_char_fn(x, np.zeros((3, 3)))


def test_rng_stream_split_independence():
    r = RngStream(3, (1,))
    a = r.split(0).generator().normal(size=4)
    b = r.split(1).generator().normal(size=4)
    a2 = RngStream(3, (1,)).split(0).generator().normal(size=4)
    np.testing.assert_array_equal(a, a2)
    assert not np.allclose(a, b)
