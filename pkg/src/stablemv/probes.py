"""Monte-Carlo probes of heat-kernel decay rates.

Both probes estimate P_{0,tau} f quantities for the frozen-flow semigroup
over a range of lags tau and fit a log-log slope:

  * grad_decay_probe: central finite differences of x -> E f(X_tau^x),
    target exponent (eta - 1)/alpha for eta-Holder f.
  * frac_deriv_decay_probe (d = 1 only): second differences
    Pf(x+y) + Pf(x-y) - 2 Pf(x) integrated against |y|^{-1-alpha},
    target exponent eta/alpha - 1.

Finite-difference design: the decay exponents are exponents of the lag in
SELF-SIMILAR coordinates, so by default the evaluation point, the FD step
(h = h_base * lag^{1/alpha}) and the y-integration window all scale with
lag^{1/alpha} (track_scale).  With a fixed step and point the small-lag end
measures a different, steeper rate and the fit is meaningless; that design
is available (track_scale=False) but not the default.

Variance design: for each lag, ALL shifted initial points are evolved with
one shared increment array (common random numbers), so differences of means
see the coupling and the estimator variance drops by orders of magnitude
versus independent draws.  Standard errors come from batch means, which
respect that coupling.

Only exponents are fitted; constants in the underlying bounds are never
asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import RngStream
from .measures import MeasureFlow, resample_flow
from .sde import CoefficientSet, _euler_step
from .stable_noise import sample_sym_stable

__all__ = ["ProbeResult", "grad_decay_probe", "frac_deriv_decay_probe"]


@dataclass
class ProbeResult:
    """Per-lag decay estimates and the fitted log-log slope."""

    case: str
    lags: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    fitted_slope: float | None
    slope_ci: tuple | None
    target_exponent: float
    inconclusive: bool
    notes: list
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        if np.any(lags <= 0) or np.any(np.diff(lags) <= 0):
            raise ValueError("lags must be positive and strictly increasing")
        object.__setattr__(self, "lags", lags)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "lags": [float(v) for v in self.lags],
            "estimates": [float(v) for v in self.estimates],
            "stderrs": [float(v) for v in self.stderrs],
            "fitted_slope": None if self.fitted_slope is None else float(self.fitted_slope),
            "slope_ci": None if self.slope_ci is None else [float(v) for v in self.slope_ci],
            "target_exponent": float(self.target_exponent),
            "inconclusive": bool(self.inconclusive),
            "notes": list(self.notes),
        }


def _check_lags(lags) -> np.ndarray:
    lags = np.asarray(lags, dtype=float)
    if lags.ndim != 1 or lags.size < 3:
        raise ValueError("need at least 3 lags")
    if np.any(lags <= 0) or np.any(np.diff(lags) <= 0):
        raise ValueError("lags must be positive and strictly increasing")
    if np.log10(lags[-1] / lags[0]) < 1.5:
        raise ValueError("lags must span at least 1.5 decades for a slope fit")
    return lags


def _check_holder(f, eta: float, x: np.ndarray, spread: float):
    """Pairwise [f]_eta <= 1 verification on a fixed sample grid around x."""
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(0xF0A11)))
    pts = x[None, :] + spread * gen.standard_normal(size=(32, x.size))
    pts = np.vstack([x[None, :], pts])
    vals = np.asarray(f(pts), dtype=float).reshape(pts.shape[0])
    diff = pts[:, None, :] - pts[None, :, :]
    dk = np.linalg.norm(diff, axis=2) ** eta
    gap = np.abs(vals[:, None] - vals[None, :]) - dk
    if np.max(gap) > 1e-9:
        raise ValueError(
            f"test function violates [f]_eta <= 1 (eta = {eta}) on the sample grid"
        )


def _semigroup_batch_means(
    coeffs: CoefficientSet,
    flow: MeasureFlow,
    f,
    base_points: np.ndarray,
    lag: float,
    n_steps: int,
    n_samples: int,
    rng: RngStream,
    n_batches: int,
) -> np.ndarray:
    """Batch means of f(X_lag^{x_j}) for every base point x_j, all points
    driven by ONE shared increment array (the probes' coupling).

    Returns (J, n_batches).  One Euler step is exact for constant
    coefficients; raise n_steps for state-dependent ones.
    """
    n = (n_samples // n_batches) * n_batches
    grid = np.linspace(0.0, lag, n_steps + 1)
    sub = resample_flow(flow, grid)
    d = coeffs.dim
    inc = np.empty((n, n_steps, d))
    for k in range(n_steps):
        dt = grid[k + 1] - grid[k]
        inc[:, k, :] = sample_sym_stable(coeffs.noise, dt, n, rng.split(k + 1))
    out = np.empty((base_points.shape[0], n_batches))
    for j, x0 in enumerate(base_points):
        x = np.tile(x0, (n, 1))
        for k in range(n_steps):
            dt = grid[k + 1] - grid[k]
            x = _euler_step(coeffs, grid[k], x, sub.measures[k], dt, inc[:, k, :])
        vals = np.asarray(f(x), dtype=float).reshape(n)
        out[j] = vals.reshape(n_batches, -1).mean(axis=1)
    return out


def _fit_slope(lags, est, se, n_boot, gen):
    mask = est > 0
    notes = []
    if mask.sum() < 3:
        return None, None, ["too few positive estimates for a slope fit"]
    lx, ly = np.log(lags[mask]), np.log(est[mask])
    rel = np.maximum(se[mask] / est[mask], 1e-12)
    slope = np.polyfit(lx, ly, 1, w=1.0 / rel)[0]
    boots = []
    for _ in range(n_boot):
        y = est + gen.normal(size=est.size) * se
        m = y > 0
        if m.sum() >= 3:
            r = np.maximum(se[m] / y[m], 1e-12)
            boots.append(np.polyfit(np.log(lags[m]), np.log(y[m]), 1, w=1.0 / r)[0])
    if boots:
        ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
    else:
        ci = None
        notes.append("bootstrap produced no valid refits")
    return float(slope), ci, notes


def grad_decay_probe(
    coeffs: CoefficientSet,
    flow: MeasureFlow,
    f,
    x,
    lags,
    n_samples: int,
    rng: RngStream,
    *,
    h_base: float = 0.1,
    track_scale: bool = True,
    n_steps: int = 1,
    n_batches: int = 20,
    n_boot: int = 400,
    eta: float | None = None,
) -> ProbeResult:
    """Fitted decay rate of |grad P_{0,tau} f| over the given lags.

    f must be eta-Holder with seminorm <= 1 (eta defaults to coeffs.eta;
    verified pairwise on a sample grid, rejected otherwise).  Per lag, the
    gradient at x * lag^{1/alpha} is estimated by central differences with
    step h_base * lag^{1/alpha} and common random numbers across the +/-h
    shifts.  A lag whose estimate has signal-to-noise below 3 marks the
    result inconclusive (flagged, not raised).
    """
    lags = _check_lags(lags)
    eta = coeffs.eta if eta is None else eta
    alpha = coeffs.noise.alpha
    d = coeffs.dim
    x = np.broadcast_to(np.asarray(x, dtype=float), (d,))
    max_scale = lags[-1] ** (1.0 / alpha)
    _check_holder(f, eta, x, spread=2.0 * (1.0 + max_scale))

    estimates = np.empty(lags.size)
    stderrs = np.empty(lags.size)
    notes = []
    for i, lag in enumerate(lags):
        s = lag ** (1.0 / alpha) if track_scale else 1.0
        xc, h = x * s, h_base * s
        shifts = np.vstack([np.eye(d) * h, -np.eye(d) * h])  # +h e_i rows then -h e_i
        means = _semigroup_batch_means(
            coeffs, flow, f, xc[None, :] + shifts, lag, n_steps, n_samples, rng.split(i), n_batches
        )
        grads = (means[:d] - means[d:]) / (2.0 * h)  # (d, B) per-batch partials
        norms = np.linalg.norm(grads, axis=0)
        estimates[i] = np.linalg.norm(grads.mean(axis=1))
        stderrs[i] = norms.std(ddof=1) / np.sqrt(n_batches)

    snr = estimates / np.maximum(stderrs, 1e-300)
    inconclusive = bool(np.any(snr < 3.0))
    if inconclusive:
        notes.append(f"signal-to-noise below 3 at lags {lags[snr < 3.0].tolist()}")
    slope, ci, fit_notes = _fit_slope(lags, estimates, stderrs, n_boot, rng.split(90001).generator())
    notes.extend(fit_notes)
    if slope is None:
        inconclusive = True
    return ProbeResult(
        case="grad",
        lags=lags,
        estimates=estimates,
        stderrs=stderrs,
        fitted_slope=slope,
        slope_ci=ci,
        target_exponent=(eta - 1.0) / alpha,
        inconclusive=inconclusive,
        notes=notes,
        diagnostics={"h_base": h_base, "track_scale": track_scale, "snr_min": float(snr.min())},
    )


def frac_deriv_decay_probe(
    coeffs: CoefficientSet,
    flow: MeasureFlow,
    f,
    x,
    lags,
    n_samples: int,
    rng: RngStream,
    *,
    eps_base: float = 0.05,
    y_max_base: float = 40.0,
    n_y: int = 200,
    track_scale: bool = True,
    n_steps: int = 1,
    n_batches: int = 20,
    n_boot: int = 400,
    eta: float | None = None,
) -> ProbeResult:
    """Fitted decay rate of the order-alpha fractional derivative of
    P_{0,tau} f at x (d = 1 only).

    Per lag, Pf is tabulated on x +/- y for a log-spaced y-grid spanning
    [eps_base, y_max_base] * lag^{1/alpha} with shared noise across all
    offsets; |Pf(x+y) + Pf(x-y) - 2 Pf(x)| is integrated against
    |y|^{-1-alpha} (both half-lines, trapezoid in y).  The tail beyond the
    window is bounded by 2 (y_max)^{eta-alpha} / (alpha - eta) using the
    eta-Holder growth of Pf and reported, not added.  The inner cutoff is
    halved and the estimate recomputed: relative shifts above 20% mark the
    result inconclusive, as does signal-to-noise below 3.
    """
    if coeffs.dim != 1:
        raise ValueError("the fractional-derivative probe is one-dimensional only")
    lags = _check_lags(lags)
    eta = coeffs.eta if eta is None else eta
    alpha = coeffs.noise.alpha
    if not eta < alpha:
        raise ValueError(f"need eta < alpha for a finite tail bound, got {eta} >= {alpha}")
    x = np.broadcast_to(np.asarray(x, dtype=float), (1,))
    max_scale = lags[-1] ** (1.0 / alpha)
    _check_holder(f, eta, x, spread=2.0 * (1.0 + max_scale))

    n_lo = 12  # extra nodes extending the grid down to eps_base / 2
    estimates = np.empty(lags.size)
    stderrs = np.empty(lags.size)
    halved = np.empty(lags.size)
    notes = []
    for i, lag in enumerate(lags):
        s = lag ** (1.0 / alpha) if track_scale else 1.0
        y_main = np.geomspace(eps_base, y_max_base, n_y) * s
        y_lo = np.geomspace(eps_base / 2.0, eps_base, n_lo, endpoint=False) * s
        y_all = np.concatenate([y_lo, y_main])
        base = np.concatenate([x[None, :], x[None, :] + y_all[:, None], x[None, :] - y_all[:, None]])
        means = _semigroup_batch_means(
            coeffs, flow, f, base, lag, n_steps, n_samples, rng.split(i), n_batches
        )
        center = means[0]  # (B,)
        plus = means[1 : 1 + y_all.size]
        minus = means[1 + y_all.size :]
        second = np.abs(plus + minus - 2.0 * center)  # (J_y, B)
        kern = y_all ** (-1.0 - alpha)
        lo_n = y_lo.size
        per_batch = 2.0 * np.trapezoid(second[lo_n:] * kern[lo_n:, None], y_main, axis=0)
        per_batch_half = 2.0 * np.trapezoid(second * kern[:, None], y_all, axis=0)
        estimates[i] = per_batch.mean()
        stderrs[i] = per_batch.std(ddof=1) / np.sqrt(n_batches)
        halved[i] = per_batch_half.mean()

    tail_bounds = 2.0 * (y_max_base * lags ** (1.0 / alpha)) ** (eta - alpha) / (alpha - eta)
    sens = np.abs(halved - estimates) / np.maximum(estimates, 1e-300)
    snr = estimates / np.maximum(stderrs, 1e-300)
    inconclusive = False
    if np.any(sens > 0.2):
        inconclusive = True
        notes.append(
            f"inner-cutoff sensitivity above 20% at lags {lags[sens > 0.2].tolist()}"
        )
    if np.any(snr < 3.0):
        inconclusive = True
        notes.append(f"signal-to-noise below 3 at lags {lags[snr < 3.0].tolist()}")
    slope, ci, fit_notes = _fit_slope(lags, estimates, stderrs, n_boot, rng.split(90002).generator())
    notes.extend(fit_notes)
    if slope is None:
        inconclusive = True
    return ProbeResult(
        case="frac",
        lags=lags,
        estimates=estimates,
        stderrs=stderrs,
        fitted_slope=slope,
        slope_ci=ci,
        target_exponent=eta / alpha - 1.0,
        inconclusive=inconclusive,
        notes=notes,
        diagnostics={
            "cutoff_sensitivity": sens.tolist(),
            "tail_bounds": tail_bounds.tolist(),
            "snr_min": float(snr.min()),
        },
    )
