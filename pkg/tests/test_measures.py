import itertools

import numpy as np
import pytest

from stablemv import (
    EmpiricalMeasure,
    MeasureFlow,
    RngStream,
    flow_distance,
    holder_dual_lb,
    resample_flow,
    subsample,
    wasserstein_kappa,
)


def brute_force(xs, ys, kappa):
    n = xs.shape[0]
    cost = np.linalg.norm(xs[:, None, :] - ys[None, :, :], axis=2) ** kappa
    rows = np.arange(n)
    return min(cost[rows, list(p)].mean() for p in itertools.permutations(range(n)))


def test_identical_clouds_zero():
    mu = EmpiricalMeasure.from_points(np.array([[0.0], [1.0], [-2.0]]))
    assert wasserstein_kappa(mu, mu, 0.5) == 0.0


def test_symmetry_and_scaling():
    gen = np.random.default_rng(1)
    xs, ys = gen.normal(size=(6, 2)), gen.normal(size=(6, 2))
    mu, nu = EmpiricalMeasure.from_points(xs), EmpiricalMeasure.from_points(ys)
    w = wasserstein_kappa(mu, nu, 0.6)
    assert wasserstein_kappa(nu, mu, 0.6) == pytest.approx(w, rel=1e-12)
    mu3 = EmpiricalMeasure.from_points(3.0 * xs)
    nu3 = EmpiricalMeasure.from_points(3.0 * ys)
    # concave cost is homogeneous of order kappa
    assert wasserstein_kappa(mu3, nu3, 0.6) == pytest.approx(3.0**0.6 * w, rel=1e-10)


def test_exact_against_brute_force():
    gen = np.random.default_rng(2)
    for _ in range(30):
        n = int(gen.integers(2, 7))
        d = int(gen.integers(1, 3))
        kappa = float(gen.uniform(0.2, 1.0))
        xs, ys = gen.normal(size=(n, d)), 2.0 * gen.normal(size=(n, d))
        mu, nu = EmpiricalMeasure.from_points(xs), EmpiricalMeasure.from_points(ys)
        assert wasserstein_kappa(mu, nu, kappa) == pytest.approx(
            brute_force(xs, ys, kappa), abs=1e-9
        )


def test_sorted_coupling_is_not_optimal_in_general():
    # monotone rearrangement solves convex costs on the line; for
    # kappa < 1 it must lose on some instances
    gen = np.random.default_rng(3)
    slack = []
    for _ in range(200):
        xs = np.sort(gen.normal(size=5)) * gen.uniform(0.5, 3.0)
        ys = np.sort(gen.normal(size=5)) * gen.uniform(0.5, 3.0) + gen.normal()
        mu = EmpiricalMeasure.from_points(xs)
        nu = EmpiricalMeasure.from_points(ys)
        lp = wasserstein_kappa(mu, nu, 0.4)
        sorted_cost = float(np.mean(np.abs(xs - ys) ** 0.4))
        assert lp <= sorted_cost + 1e-12
        slack.append(sorted_cost - lp)
    assert max(slack) > 1e-6


def test_weighted_mass_splitting_invariance():
    # duplicating a support point and splitting its weight changes nothing
    nu = EmpiricalMeasure.from_points(np.array([0.2, 1.4, -0.7]))
    a = EmpiricalMeasure(np.array([[0.0], [2.0]]), np.array([2.0 / 3.0, 1.0 / 3.0]))
    b = EmpiricalMeasure(
        np.array([[0.0], [0.0], [2.0]]), np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
    )
    wa = wasserstein_kappa(a, nu, 0.5)
    wb = wasserstein_kappa(b, nu, 0.5)
    assert wa == pytest.approx(wb, abs=1e-9)


def test_two_diracs_closed_form():
    mu = EmpiricalMeasure.from_points(np.array([1.0]))
    nu = EmpiricalMeasure.from_points(np.array([-2.0]))
    w = wasserstein_kappa(mu, nu, 0.7)
    assert w == pytest.approx(3.0**0.7, rel=1e-12)
    # the witness |x - a|^kappa attains the two-dirac distance
    assert holder_dual_lb(mu, nu, 0.7) == pytest.approx(w, rel=1e-9)


def test_weak_duality_random():
    gen = np.random.default_rng(4)
    for _ in range(25):
        n, m = int(gen.integers(2, 9)), int(gen.integers(2, 9))
        xs, ys = gen.normal(size=(n, 1)), gen.normal(size=(m, 1)) + 1.0
        wx = gen.uniform(0.1, 1.0, n)
        wy = gen.uniform(0.1, 1.0, m)
        mu = EmpiricalMeasure(xs, wx / wx.sum())
        nu = EmpiricalMeasure(ys, wy / wy.sum())
        kappa = float(gen.uniform(0.2, 1.0))
        assert holder_dual_lb(mu, nu, kappa) <= wasserstein_kappa(mu, nu, kappa) + 1e-9


def test_large_clouds_need_rng():
    gen = np.random.default_rng(5)
    mu = EmpiricalMeasure.from_points(gen.normal(size=(5000, 1)))
    nu = EmpiricalMeasure.from_points(gen.normal(size=(5000, 1)))
    with pytest.raises(ValueError):
        wasserstein_kappa(mu, nu, 0.5)


def test_subsample_reproducible():
    gen = np.random.default_rng(6)
    mu = EmpiricalMeasure.from_points(gen.normal(size=(300, 2)))
    a = subsample(mu, 50, RngStream(1))
    b = subsample(mu, 50, RngStream(1))
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.shape == (50, 2)


def test_flow_distance_two_node_example():
    # flows agreeing at t=0 and differing delta_0 vs delta_1 at t=1:
    # sup_t e^{-delta t} W = e^{-1} * |1-0|^eta = e^{-1}
    grid = np.array([0.0, 1.0])
    d0 = EmpiricalMeasure.from_points(np.array([0.0]))
    d1 = EmpiricalMeasure.from_points(np.array([1.0]))
    f1 = MeasureFlow(grid, (d0, d0))
    f2 = MeasureFlow(grid, (d0, d1))
    w = flow_distance(f1, f2, eta=0.5, delta=1.0)
    assert w == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_flow_distance_grid_mismatch():
    d0 = EmpiricalMeasure.from_points(np.array([0.0]))
    f1 = MeasureFlow(np.array([0.0, 1.0]), (d0, d0))
    f2 = MeasureFlow(np.array([0.0, 2.0]), (d0, d0))
    with pytest.raises(ValueError):
        flow_distance(f1, f2, 0.5, 1.0)


def test_flow_distance_details_and_argmax():
    gen = np.random.default_rng(7)
    grid = np.linspace(0.0, 1.0, 4)
    ms1 = tuple(EmpiricalMeasure.from_points(gen.normal(size=(40, 1))) for _ in grid)
    ms2 = tuple(EmpiricalMeasure.from_points(gen.normal(size=(40, 1))) for _ in grid)
    f1, f2 = MeasureFlow(grid, ms1), MeasureFlow(grid, ms2)
    w, det = flow_distance(f1, f2, 0.5, 2.0, return_details=True)
    assert w == pytest.approx(det.weighted_values.max(), rel=1e-12)
    assert det.node_values.shape == grid.shape
    assert not det.subsampled
    np.testing.assert_array_equal(det.node_stderr, 0.0)


def test_resample_flow_left_endpoint():
    grid = np.array([0.0, 1.0])
    d0 = EmpiricalMeasure.from_points(np.array([0.0]))
    d1 = EmpiricalMeasure.from_points(np.array([1.0]))
    flow = MeasureFlow(grid, (d0, d1))
    fine = resample_flow(flow, np.array([0.0, 0.5, 1.0]))
    # piecewise-constant from the left: t=0.5 reads the t=0 measure
    np.testing.assert_array_equal(fine.measures[1].points, d0.points)
    np.testing.assert_array_equal(fine.measures[2].points, d1.points)


def test_measure_validation():
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([[0.0]]), np.array([0.5]))  # mass != 1
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([[0.0], [1.0]]), np.array([1.5, -0.5]))
    with pytest.raises(ValueError):
        MeasureFlow(np.array([0.5, 1.0]),
                    tuple(EmpiricalMeasure.from_points(np.zeros(1)) for _ in range(2)))
    with pytest.raises(ValueError):
        wasserstein_kappa(
            EmpiricalMeasure.from_points(np.zeros(1)),
            EmpiricalMeasure.from_points(np.zeros(1)),
            1.5,
        )
