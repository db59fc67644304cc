"""Rotationally invariant alpha-stable noise: exact samplers and densities.

Two characteristic-function conventions coexist in the literature and both are
needed here, so every entry point is explicit about which one it uses:

    GENERATOR_HALF   E exp(i<xi, L_t>) = exp(-t |xi|^alpha / 2)
    UNIT             E exp(i<xi, L_t>) = exp(-t |xi|^alpha)

GENERATOR_HALF is the convention generated by -(1/2)(-Delta)^{alpha/2} and is
the default; UNIT is what the nonuniqueness construction in counterexample.py
is calibrated against.  A UNIT process at time t equals a GENERATOR_HALF
process at time 2t in law, which is how dimensions >= 2 are handled.

Sampling is exact (Chambers-Mallows-Stuck in d = 1, Gaussian subordination in
d >= 2), never a truncated-series or tempered approximation.  Time enters only
as a deterministic scale factor on time-independent draws, so resampling the
same stream at two horizons t and s yields arrays related exactly by
(t/s)^{1/alpha}.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from enum import Enum
from dataclasses import dataclass

from .core import RngStream

__all__ = [
    "Convention",
    "StableSpec",
    "RngStream",
    "sample_sym_stable",
    "sample_subordinator",
    "sample_subordinated",
    "stable_density_1d",
    "stable_interval_mass",
    "levy_measure_constant",
    "empirical_char_fn",
]


class Convention(Enum):
    """Characteristic-function normalization of the driving stable process."""

    GENERATOR_HALF = "generator_half"
    UNIT = "unit"


def _as_convention(value) -> Convention:
    if isinstance(value, Convention):
        return value
    try:
        return Convention(str(value).lower())
    except ValueError:
        raise ValueError(
            f"unknown convention {value!r}; use 'generator_half' or 'unit'"
        ) from None


@dataclass(frozen=True)
class StableSpec:
    """Stability index, dimension and normalization of the noise."""

    alpha: float
    dim: int = 1
    convention: Convention = Convention.GENERATOR_HALF

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be an integer >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "convention", _as_convention(self.convention))

    @property
    def cf_scale(self) -> float:
        """c in E exp(i<xi, L_t>) = exp(-c t |xi|^alpha)."""
        return 0.5 if self.convention is Convention.GENERATOR_HALF else 1.0

    def time_scale(self, t: float) -> float:
        """Factor mapping a standard CMS draw (UNIT at t = 1) to time t.

        Under either convention the law at time t is the law at time 1
        scaled by t^{1/alpha}; the convention fixes the time-1 scale.
        """
        return float(self.cf_scale * t) ** (1.0 / self.alpha)

    def char_fn(self, xi: np.ndarray, t: float) -> np.ndarray:
        """Target characteristic function at frequency rows xi, time t."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        norms = np.abs(xi) if xi.ndim == 1 else np.linalg.norm(xi, axis=-1)
        return np.exp(-self.cf_scale * t * norms**self.alpha)


def _check_t_n(t: float, n: int):
    if not (np.isfinite(t) and t > 0):
        raise ValueError(f"time must be finite and > 0, got {t}")
    if int(n) != n or n < 1:
        raise ValueError(f"sample count must be an integer >= 1, got {n}")


def _cms_symmetric(alpha: float, n: int, gen: np.random.Generator) -> np.ndarray:
    """Standard symmetric alpha-stable draws, char. fn exp(-|xi|^alpha).

    Chambers-Mallows-Stuck transform: U uniform on (-pi/2, pi/2), W unit
    exponential, independent.  alpha = 1 reduces to tan(U) (Cauchy).
    """
    u = gen.uniform(-np.pi / 2, np.pi / 2, size=n)
    w = np.maximum(gen.standard_exponential(size=n), 1e-300)
    if alpha == 1.0:
        return np.tan(u)
    x = np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
    x *= (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
    return x


def _kanter_onesided(a: float, n: int, gen: np.random.Generator) -> np.ndarray:
    """Standard one-sided a-stable draws, a in (0,1): E e^{-s X} = e^{-s^a}.

    Kanter's form of the CMS transform with U uniform on (0, pi).
    """
    u = gen.uniform(0.0, np.pi, size=n)
    u = np.clip(u, 1e-15, np.pi - 1e-15)
    w = np.maximum(gen.standard_exponential(size=n), 1e-300)
    x = np.sin(a * u) / np.sin(u) ** (1.0 / a)
    x *= (np.sin((1.0 - a) * u) / w) ** ((1.0 - a) / a)
    return x


def sample_sym_stable(spec: StableSpec, t: float, n: int, rng: RngStream) -> np.ndarray:
    """n i.i.d. rotationally invariant alpha-stable samples at time t.

    Returns an (n, spec.dim) array.  d = 1 uses the CMS transform directly;
    d >= 2 goes through Gaussian subordination, because componentwise CMS
    draws would not be rotationally invariant.
    """
    _check_t_n(t, n)
    if spec.dim == 1:
        gen = rng.generator()
        x = _cms_symmetric(spec.alpha, n, gen)
        return spec.time_scale(t) * x[:, None]
    # UNIT at time t has the GENERATOR_HALF law at time 2t
    t_eff = t if spec.convention is Convention.GENERATOR_HALF else 2.0 * t
    gh = StableSpec(spec.alpha, spec.dim, Convention.GENERATOR_HALF)
    return sample_subordinated(gh, t_eff, n, rng)


def sample_subordinator(alpha: float, t: float, n: int, rng: RngStream) -> np.ndarray:
    """n samples of the (alpha/2)-stable subordinator S_t with
    E exp(-r S_t) = exp(-t (2r)^{alpha/2} / 2).

    A standard Kanter draw X0 with E e^{-s X0} = e^{-s^{alpha/2}} maps onto
    this transform via S_t = t^{2/alpha} 2^{1 - 2/alpha} X0.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    _check_t_n(t, n)
    gen = rng.generator()
    x0 = _kanter_onesided(alpha / 2.0, n, gen)
    return t ** (2.0 / alpha) * 2.0 ** (1.0 - 2.0 / alpha) * x0


def sample_subordinated(
    spec: StableSpec, t: float, n: int, rng: RngStream, allow_rescale: bool = False
) -> np.ndarray:
    """Stable samples via the time-changed Brownian representation
    L_t = sqrt(S_t) Z with Z standard normal in spec.dim dimensions.

    The representation is normalized for GENERATOR_HALF; pass
    allow_rescale=True to accept a UNIT spec (sampled at doubled time).
    """
    if spec.convention is not Convention.GENERATOR_HALF:
        if not allow_rescale:
            raise ValueError(
                "subordinated sampling is normalized for the GENERATOR_HALF "
                "convention; pass allow_rescale=True to sample a UNIT spec "
                "through the time-doubling identity"
            )
        gh = StableSpec(spec.alpha, spec.dim, Convention.GENERATOR_HALF)
        return sample_subordinated(gh, 2.0 * t, n, rng)
    _check_t_n(t, n)
    gen = rng.generator()
    x0 = _kanter_onesided(spec.alpha / 2.0, n, gen)
    z = gen.standard_normal(size=(n, spec.dim))
    s = t ** (2.0 / spec.alpha) * 2.0 ** (1.0 - 2.0 / spec.alpha) * x0
    return np.sqrt(s)[:, None] * z


def _density_point(alpha: float, c: float, t: float, x: float) -> float:
    # p_t(x) = (1/pi) Int_0^inf cos(x xi) exp(-c t xi^alpha) dxi
    cutoff = (45.0 / (c * t)) ** (1.0 / alpha)
    val, _ = integrate.quad(
        lambda xi: np.exp(-c * t * xi**alpha),
        0.0,
        cutoff,
        weight="cos",
        wvar=x,
        limit=400,
    )
    return val / np.pi


def stable_density_1d(alpha: float, convention, t: float, x_grid) -> np.ndarray:
    """Density of the 1-d symmetric alpha-stable law at time t on x_grid.

    Fourier inversion of the characteristic function by cosine-weighted
    adaptive quadrature, one point at a time; exactly even in x by
    construction (evaluated on |x|).  Raises if the grid is too coarse to
    resolve the distribution's own scale (c t)^{1/alpha}.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not (np.isfinite(t) and t > 0):
        raise ValueError(f"time must be finite and > 0, got {t}")
    c = StableSpec(alpha, 1, convention).cf_scale
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("x_grid must be a finite, nonempty 1-d array")
    # each point is evaluated by its own adaptive quadrature, so sparse
    # point sets are fine; a grid meant to REPRESENT the density must
    # still resolve its scale, or downstream integration is garbage
    scale = (c * t) ** (1.0 / alpha)
    if x.size >= 8:
        spacing = np.max(np.diff(np.sort(x)))
        if spacing > 0.5 * scale:
            raise ValueError(
                f"grid spacing {spacing:.3g} too coarse for distribution "
                f"scale {scale:.3g}; refine the grid below half the scale"
            )
    cache: dict[float, float] = {}
    out = np.empty_like(x)
    for i, xi in enumerate(np.abs(x)):
        if xi not in cache:
            cache[xi] = _density_point(alpha, c, t, xi)
        out[i] = cache[xi]
    return out


def stable_interval_mass(alpha: float, convention, t: float, radius: float) -> float:
    """P(|L_t| <= radius) for the 1-d law, by quadrature of
    (2/pi) Int_0^inf sin(radius xi)/xi exp(-c t xi^alpha) dxi.

    Complements stable_density_1d for tail corrections when checking
    normalization on a finite grid.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0.0:
        return 0.0
    c = StableSpec(alpha, 1, convention).cf_scale
    cutoff = (45.0 / (c * t)) ** (1.0 / alpha)
    val, _ = integrate.quad(
        lambda xi: np.exp(-c * t * xi**alpha) / xi,
        1e-12,
        cutoff,
        weight="sin",
        wvar=radius,
        limit=400,
    )
    # the removed (0, 1e-12) sliver contributes radius*xi/xi ~ radius * 1e-12
    return min(1.0, 2.0 * val / np.pi)


def levy_measure_constant(d: int, alpha: float) -> float:
    """Constant A with Levy measure A |y|^{-d-alpha} dy for the
    GENERATOR_HALF process: alpha Gamma((d+alpha)/2) /
    (2^{2-alpha} pi^{d/2} Gamma(1-alpha/2)).
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(
            f"alpha must lie in (0, 2) (Gamma(1-alpha/2) pole at 2), got {alpha}"
        )
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")
    num = alpha * gamma_fn((d + alpha) / 2.0)
    den = 2.0 ** (2.0 - alpha) * np.pi ** (d / 2.0) * gamma_fn(1.0 - alpha / 2.0)
    return num / den


def empirical_char_fn(samples: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Empirical characteristic function of sample rows at frequency rows xi."""
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    q = np.asarray(xi, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    if q.shape[1] != s.shape[1]:
        raise ValueError(f"frequency dim {q.shape[1]} != sample dim {s.shape[1]}")
    return np.exp(1j * s @ q.T).mean(axis=0)
