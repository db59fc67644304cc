"""Euler schemes driven by exact stable increments.

Two simulation modes share one step rule:

  * euler_frozen_flow: the measure argument of the coefficients is read from
    an external MeasureFlow at the step's left endpoint (never from the
    particles).  This realizes the distribution-independent auxiliary
    equation whose solution map the Picard solver iterates.
  * euler_mckean_particles: the measure argument is the running empirical
    law of the N particles (the mean-field interacting system).

Increments over a step of length dt are exact stable draws (no Gaussian
small-jump surrogate), so constant-coefficient simulation is exact in law and
sum-stability lets callers couple refinements by pairwise-summing fine
increments into coarse ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Estimate, RngStream
from .measures import EmpiricalMeasure, MeasureFlow, wasserstein_kappa
from .stable_noise import StableSpec, sample_sym_stable

__all__ = [
    "CoefficientSet",
    "PathBundle",
    "euler_frozen_flow",
    "euler_mckean_particles",
    "sup_moment",
    "validate_coefficients",
]


@dataclass(frozen=True)
class CoefficientSet:
    """Drift, diffusion and the driving noise, with declared regularity.

    drift(t, x, measure) takes x of shape (N, d) and may return a scalar,
    (d,), or (N, d); diffusion(t, x, measure) may return a scalar (multiple
    of I), (d,) diagonal, (d, d), or (N, d, d).  Coefficients receive the
    measure as an EmpiricalMeasure and may query integrals or moments of it;
    they never see densities.

    K, beta, eta declare the ellipticity window [1/K, K] for sigma sigma*,
    the drift Holder exponent in x, and the measure-Lipschitz exponent (the
    W_eta cost).  The declarations are validated statistically by
    validate_coefficients, not assumed.  Constructor warns when
    2 beta + alpha <= 2 or when a measure-dependent drift is declared with
    alpha + eta <= 1: both leave the well-posedness regime.
    """

    drift: callable
    diffusion: callable
    noise: StableSpec
    K: float
    beta: float
    eta: float
    measure_dependent_drift: bool = False

    def __post_init__(self):
        if not self.K > 1.0:
            raise ValueError(f"K must exceed 1, got {self.K}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0.0 < self.eta < self.noise.alpha:
            raise ValueError(
                f"eta must lie in (0, alpha) = (0, {self.noise.alpha}), got {self.eta}"
            )
        if 2.0 * self.beta + self.noise.alpha <= 2.0:
            warnings.warn(
                f"2*beta + alpha = {2 * self.beta + self.noise.alpha:.3f} <= 2: "
                "outside the declared well-posedness regime",
                stacklevel=2,
            )
        if self.measure_dependent_drift and self.noise.alpha + self.eta <= 1.0:
            warnings.warn(
                f"alpha + eta = {self.noise.alpha + self.eta:.3f} <= 1 with "
                "measure-dependent drift: uniqueness may fail",
                stacklevel=2,
            )

    @property
    def dim(self) -> int:
        return self.noise.dim


def _eval_drift(coeffs, t, x, mu) -> np.ndarray:
    n, d = x.shape
    b = np.asarray(coeffs.drift(t, x, mu), dtype=float)
    if b.ndim == 0:
        return np.full((n, d), float(b))
    if b.shape == (d,):
        return np.broadcast_to(b, (n, d))
    if b.shape == (n,) and d == 1:
        return b[:, None]
    if b.shape == (n, d):
        return b
    raise ValueError(f"drift returned shape {b.shape}; expected scalar, ({d},) or ({n}, {d})")


def _eval_diffusion(coeffs, t, x, mu):
    """Normalize diffusion output to ('const', (d, d)) or ('per', (n, d, d))."""
    n, d = x.shape
    s = np.asarray(coeffs.diffusion(t, x, mu), dtype=float)
    if s.ndim == 0:
        return "const", float(s) * np.eye(d)
    if s.shape == (d,):
        return "const", np.diag(s)
    if s.shape == (d, d):
        return "const", s
    if s.shape == (n, d, d):
        return "per", s
    raise ValueError(
        f"diffusion returned shape {s.shape}; expected scalar, ({d},), "
        f"({d}, {d}) or ({n}, {d}, {d})"
    )


def _apply_sigma(kind, sigma, dl):
    if kind == "const":
        return dl @ sigma.T
    return np.einsum("nij,nj->ni", sigma, dl)


def _euler_step(coeffs, t, x, mu, dt, dl):
    b = _eval_drift(coeffs, t, x, mu)
    kind, sigma = _eval_diffusion(coeffs, t, x, mu)
    return x + b * dt + _apply_sigma(kind, sigma, dl)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValueError("grid must be a 1-d array with at least 2 nodes")
    if abs(g[0]) > 1e-12:
        raise ValueError(f"grid must start at 0, got {g[0]}")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return g


def _resolve_init(init, n, d, rng: RngStream) -> np.ndarray:
    """Initial particle positions: measure (resampled unless already an
    n-point uniform cloud, which is passed through unchanged), a fixed
    point, a raw (n, d) array, or a sampler callable(n, generator)."""
    if isinstance(init, EmpiricalMeasure):
        if init.dim != d:
            raise ValueError(f"init dimension {init.dim} != {d}")
        if init.size == n and init.has_uniform_weights():
            return init.points.copy()
        gen = rng.generator()
        idx = gen.choice(init.size, size=n, replace=True, p=init.weights)
        return init.points[idx]
    if callable(init):
        pts = np.asarray(init(n, rng.generator()), dtype=float)
        if pts.shape != (n, d):
            raise ValueError(f"init sampler returned shape {pts.shape}, want ({n}, {d})")
        return pts
    pts = np.asarray(init, dtype=float)
    if pts.ndim == 0 and d == 1:
        return np.full((n, 1), float(pts))
    if pts.shape == (d,):
        return np.tile(pts, (n, 1))
    if pts.shape == (n, d):
        return pts.copy()
    raise ValueError(f"cannot interpret init of shape {pts.shape} for ({n}, {d})")


@dataclass(frozen=True)
class PathBundle:
    """N Euler paths on a grid: paths has shape (N, M+1, d)."""

    grid: np.ndarray
    paths: np.ndarray
    stream: RngStream | None = None
    alpha: float | None = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        p = np.asarray(self.paths, dtype=float)
        if p.ndim != 3 or p.shape[1] != g.size:
            raise ValueError(f"paths shape {p.shape} inconsistent with grid of {g.size}")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "paths", p)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def dim(self) -> int:
        return self.paths.shape[2]

    def marginal(self, k: int) -> EmpiricalMeasure:
        return EmpiricalMeasure.from_points(self.paths[:, k, :])

    def to_flow(self) -> MeasureFlow:
        return MeasureFlow(self.grid, tuple(self.marginal(k) for k in range(self.grid.size)))


def _draw_increments(coeffs, grid, n, rng, increments):
    m = grid.size - 1
    d = coeffs.dim
    if increments is not None:
        inc = np.asarray(increments, dtype=float)
        if inc.shape != (n, m, d):
            raise ValueError(f"increments shape {inc.shape}, want ({n}, {m}, {d})")
        return inc
    inc = np.empty((n, m, d))
    for k in range(m):
        dt = grid[k + 1] - grid[k]
        inc[:, k, :] = sample_sym_stable(coeffs.noise, dt, n, rng.split(k + 1))
    return inc


def euler_frozen_flow(
    coeffs: CoefficientSet,
    flow: MeasureFlow,
    init,
    grid,
    n_paths: int,
    rng: RngStream,
    increments: np.ndarray | None = None,
) -> PathBundle:
    """Explicit Euler for the SDE with the measure argument frozen to `flow`.

    X_{k+1} = X_k + b(t_k, X_k, flow(t_k)) dt + sigma(t_k, X_k, flow(t_k)) dL_k
    with dL_k an exact stable increment over dt.  The flow grid must contain
    every simulation node (resample_flow is the explicit regridding step).
    Substream rng.split(0) draws the initial cloud, rng.split(k+1) the step-k
    increments; pass `increments` of shape (N, M, d) to drive the scheme
    with externally coupled noise instead.
    """
    g = _check_grid(grid)
    if int(n_paths) != n_paths or n_paths < 1:
        raise ValueError(f"n_paths must be an integer >= 1, got {n_paths}")
    d = coeffs.dim
    if flow.dim != d:
        raise ValueError(f"flow dimension {flow.dim} != coefficient dimension {d}")
    node_measures = []
    for t in g[:-1]:
        try:
            node_measures.append(flow.measures[flow.node_index(t)])
        except KeyError:
            raise ValueError(
                f"flow grid does not contain simulation node t = {t}; "
                "resample_flow to the simulation grid first"
            ) from None
    x = _resolve_init(init, n_paths, d, rng.split(0))
    inc = _draw_increments(coeffs, g, n_paths, rng, increments)
    paths = np.empty((n_paths, g.size, d))
    paths[:, 0, :] = x
    for k in range(g.size - 1):
        dt = g[k + 1] - g[k]
        x = _euler_step(coeffs, g[k], x, node_measures[k], dt, inc[:, k, :])
        paths[:, k + 1, :] = x
    return PathBundle(g, paths, stream=rng, alpha=coeffs.noise.alpha)


def euler_mckean_particles(
    coeffs: CoefficientSet,
    init,
    grid,
    n_paths: int,
    rng: RngStream,
    increments: np.ndarray | None = None,
):
    """Mean-field particle system: the coefficients see the running
    empirical law of the N particles at each step's left endpoint.

    Returns (PathBundle, MeasureFlow of the empirical marginals).
    """
    g = _check_grid(grid)
    if int(n_paths) != n_paths or n_paths < 1:
        raise ValueError(f"n_paths must be an integer >= 1, got {n_paths}")
    if coeffs.measure_dependent_drift and n_paths < 2:
        raise ValueError("measure-dependent coefficients need at least 2 particles")
    d = coeffs.dim
    x = _resolve_init(init, n_paths, d, rng.split(0))
    inc = _draw_increments(coeffs, g, n_paths, rng, increments)
    paths = np.empty((n_paths, g.size, d))
    paths[:, 0, :] = x
    for k in range(g.size - 1):
        dt = g[k + 1] - g[k]
        mu_k = EmpiricalMeasure.from_points(x)
        x = _euler_step(coeffs, g[k], x, mu_k, dt, inc[:, k, :])
        paths[:, k + 1, :] = x
    bundle = PathBundle(g, paths, stream=rng, alpha=coeffs.noise.alpha)
    return bundle, bundle.to_flow()


def sup_moment(bundle: PathBundle, eta: float, n_boot: int = 200, rng=None) -> Estimate:
    """Monte-Carlo estimate of E sup_k |X_{t_k}|^eta with bootstrap stderr."""
    if bundle.paths.size == 0:
        raise ValueError("empty path bundle")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if bundle.alpha is not None and eta >= bundle.alpha:
        raise ValueError(
            f"eta = {eta} >= alpha = {bundle.alpha}: the eta-moment need not be finite"
        )
    per_path = np.max(np.linalg.norm(bundle.paths, axis=2), axis=1) ** eta
    n = per_path.size
    if rng is None:
        rng = RngStream(0, (717171,))
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    boots = np.empty(n_boot)
    for b in range(n_boot):
        boots[b] = per_path[gen.integers(0, n, size=n)].mean()
    return Estimate(float(per_path.mean()), float(boots.std(ddof=1)))


def validate_coefficients(
    coeffs: CoefficientSet,
    rng: RngStream | None = None,
    n_samples: int = 1000,
    t_max: float = 1.0,
    x_scale: float = 1.0,
) -> list[str]:
    """Statistical check of the declared (K, eta) constants on sampled tuples.

    Draws (t, x, measure) tuples with heavy-tailed x (standard Cauchy times
    x_scale, so the growth bound is probed in the tails) and paired random
    measures, then checks on each:

      * ellipticity: eigenvalues of sigma sigma* inside [1/K, K],
      * measure-Lipschitz: |sigma(gamma) - sigma(gamma~)| <= K W_eta(gamma, gamma~),
      * drift growth: |b| <= 2K (1 + |x| + gamma(|.|^eta)).

    Violations are reported as warnings (models may satisfy the assumptions
    only locally) and returned as strings; an empty list means all checks
    passed.
    """
    if rng is None:
        rng = RngStream(0, (424242,))
    gen = rng.generator()
    d = coeffs.dim
    n_groups = 10
    per_group = max(n_samples // n_groups, 1)
    tol = 1e-9
    worst = {"ellipticity": 0.0, "measure_lipschitz": 0.0, "drift_growth": 0.0}
    counts = {k: 0 for k in worst}
    for _ in range(n_groups):
        t = float(gen.uniform(0.0, t_max))
        x = x_scale * gen.standard_cauchy(size=(per_group, d))
        cloud_a = gen.standard_cauchy(size=(8, d))
        cloud_b = cloud_a + gen.normal(scale=0.5, size=(8, d))
        mu = EmpiricalMeasure.from_points(cloud_a)
        mu_b = EmpiricalMeasure.from_points(cloud_b)

        kind, sigma = _eval_diffusion(coeffs, t, x, mu)
        mats = sigma[None, :, :] if kind == "const" else sigma
        gram = np.einsum("nij,nkj->nik", mats, mats)
        eigs = np.linalg.eigvalsh(gram)
        hi = eigs.max() / coeffs.K
        lo = (1.0 / coeffs.K) / max(eigs.min(), 1e-300)
        ratio = max(hi, lo)
        if ratio > 1.0 + tol:
            counts["ellipticity"] += 1
            worst["ellipticity"] = max(worst["ellipticity"], ratio)

        w = wasserstein_kappa(mu, mu_b, coeffs.eta)
        kind_a, sa = _eval_diffusion(coeffs, t, x[:1], mu)
        kind_b, sb = _eval_diffusion(coeffs, t, x[:1], mu_b)
        da = sa if kind_a == "const" else sa[0]
        db = sb if kind_b == "const" else sb[0]
        gap = np.linalg.norm(da - db, 2)
        if gap > coeffs.K * w + tol:
            counts["measure_lipschitz"] += 1
            worst["measure_lipschitz"] = max(
                worst["measure_lipschitz"], gap / max(coeffs.K * w, 1e-300)
            )

        b = _eval_drift(coeffs, t, x, mu)
        bound = 2.0 * coeffs.K * (
            1.0 + np.linalg.norm(x, axis=1) + mu.abs_moment(coeffs.eta)
        )
        growth = np.max(np.linalg.norm(b, axis=1) / bound)
        if growth > 1.0 + tol:
            counts["drift_growth"] += 1
            worst["drift_growth"] = max(worst["drift_growth"], growth)

    messages = []
    for key in worst:
        if counts[key]:
            messages.append(
                f"{key} violated in {counts[key]}/{n_groups} sampled groups "
                f"(worst ratio {worst[key]:.3g})"
            )
    for msg in messages:
        warnings.warn(msg, stacklevel=2)
    return messages
