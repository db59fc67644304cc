"""Built-in coefficient sets for simulation and testing.

Every model declares constants (K, beta, eta) that its coefficients
actually satisfy; validate_coefficients is run against these declarations
in the test suite, so the catalog doubles as the validator's fixture set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .counterexample import drift_functional
from .sde import CoefficientSet
from .stable_noise import Convention, StableSpec

__all__ = ["ModelSetup", "MODEL_CATALOG", "build_model"]


@dataclass(frozen=True)
class ModelSetup:
    """A named coefficient set plus its default initial condition."""

    name: str
    coeffs: CoefficientSet
    init: np.ndarray
    params: dict


def pure_stable(alpha=1.0, dim=1, convention="generator_half", eta=None, x0=0.0):
    """b = 0, sigma = I: the driving noise itself (Euler is exact here)."""
    spec = StableSpec(alpha, dim, convention)
    eta = alpha / 2.0 if eta is None else float(eta)
    coeffs = CoefficientSet(
        drift=lambda t, x, mu: 0.0,
        diffusion=lambda t, x, mu: 1.0,
        noise=spec,
        K=2.0,
        beta=0.9,
        eta=eta,
        measure_dependent_drift=False,
    )
    init = np.full(dim, float(x0))
    return ModelSetup(
        "pure_stable",
        coeffs,
        init,
        {"alpha": alpha, "dim": dim, "convention": spec.convention.value, "eta": eta, "x0": x0},
    )


def stable_ou(alpha=1.0, dim=1, theta=1.0, convention="generator_half", eta=None, x0=0.0):
    """Linear pullback b(x) = -theta x, sigma = I."""
    spec = StableSpec(alpha, dim, convention)
    eta = alpha / 2.0 if eta is None else float(eta)
    theta = float(theta)
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    k_const = max(2.0, theta / 1.9)  # keeps |b| inside the declared growth bound
    coeffs = CoefficientSet(
        drift=lambda t, x, mu: -theta * x,
        diffusion=lambda t, x, mu: 1.0,
        noise=spec,
        K=k_const,
        beta=0.99,
        eta=eta,
        measure_dependent_drift=False,
    )
    init = np.full(dim, float(x0))
    return ModelSetup(
        "stable_ou",
        coeffs,
        init,
        {
            "alpha": alpha,
            "dim": dim,
            "theta": theta,
            "convention": spec.convention.value,
            "eta": eta,
            "x0": x0,
        },
    )


def mean_field_eta(
    alpha=0.9,
    eta=0.6,
    coupling=1.0,
    squash=True,
    dim=1,
    convention="generator_half",
    x0=0.0,
):
    """Measure-coupled pullback: b(x, mu) = -x + coupling * S(mu(|.|^eta)),
    sigma = I, with S = tanh (squash=True) or identity.

    |x|^eta has eta-Holder seminorm 1, so |mu(|.|^eta) - nu(|.|^eta)| <=
    W_eta(mu, nu) by duality and the declared measure-Lipschitz constant
    is honest for |coupling| <= K.  The squashed form keeps the drift
    growth bound valid even under heavy-tailed inputs.
    """
    spec = StableSpec(alpha, dim, convention)
    coupling = float(coupling)
    if not 0.0 < eta < alpha:
        raise ValueError(f"eta must lie in (0, alpha) = (0, {alpha}), got {eta}")

    def drift(t, x, mu, _c=coupling, _eta=eta, _squash=squash):
        m = mu.abs_moment(_eta)
        pull = np.tanh(m) if _squash else m
        return -x + _c * pull

    coeffs = CoefficientSet(
        drift=drift,
        diffusion=lambda t, x, mu: 1.0,
        noise=spec,
        K=max(2.0, abs(coupling)),
        beta=0.99,
        eta=float(eta),
        measure_dependent_drift=True,
    )
    init = np.full(dim, float(x0))
    return ModelSetup(
        "mean_field_eta",
        coeffs,
        init,
        {
            "alpha": alpha,
            "eta": eta,
            "coupling": coupling,
            "squash": bool(squash),
            "dim": dim,
            "convention": spec.convention.value,
            "x0": x0,
        },
    )


def counterexample_model(alpha=0.75, rho=0.05):
    """The nonuniqueness construction: b(gamma) = Int sgn(x)|x|^{1-alpha}
    gamma(dx), sigma = rho, UNIT convention, started at 0.

    Declares eta = 1 - alpha, so construction deliberately sits on the
    alpha + eta = 1 boundary and the constructor's warning fires: that is
    the model's purpose, not an accident.  The declared K is stretched to
    cover the ellipticity window of the small constant diffusion.
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"the construction needs alpha in (1/2, 1), got {alpha}")
    rho = float(rho)
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    spec = StableSpec(alpha, 1, Convention.UNIT)
    k_const = 1.01 * max(2.0, rho**2, rho**-2)

    def drift(t, x, mu, _a=alpha):
        return drift_functional(mu, _a)

    coeffs = CoefficientSet(
        drift=drift,
        diffusion=lambda t, x, mu: rho,
        noise=spec,
        K=k_const,
        beta=0.9,
        eta=1.0 - alpha,
        measure_dependent_drift=True,
    )
    return ModelSetup(
        "counterexample",
        coeffs,
        np.zeros(1),
        {"alpha": alpha, "rho": rho, "convention": spec.convention.value},
    )


MODEL_CATALOG = {
    "pure_stable": pure_stable,
    "stable_ou": stable_ou,
    "mean_field_eta": mean_field_eta,
    "counterexample": counterexample_model,
}


def build_model(name: str, **params) -> ModelSetup:
    """Instantiate a catalog model by name; unknown names list the catalog."""
    if name not in MODEL_CATALOG:
        raise ValueError(
            f"unknown model {name!r}; catalog: {sorted(MODEL_CATALOG)}"
        )
    return MODEL_CATALOG[name](**params)
