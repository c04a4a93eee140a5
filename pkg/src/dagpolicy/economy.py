"""Structural environment: parameters, joint assembly, loss and best response.

    theta ~ N(0, var_theta)
    a     = policy(theta)
    t     = w_theta * theta + w_a * a + nu,    nu  ~ N(0, var_nu)
    e     = forecast(t)
    pi    = a + eps,                           eps ~ N(0, var_eps)
    y     = pi - lam * e + eta,                eta ~ N(0, var_eta)

The central bank minimises E[y^2 + (pi - theta)^2] theta by theta, taking the
forecast rule as given.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bayesnet import LABELS
from .linalg_gauss import AffineFunction, GaussianJoint

EXOGENOUS = ("theta", "nu", "eps", "eta")


@dataclass(frozen=True)
class SignalSpec:
    """``t = w_theta * theta + w_a * a + N(0, var_nu)``."""

    w_theta: float = 0.0
    w_a: float = 1.0
    var_nu: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.w_theta, self.w_a, self.var_nu])):
            raise ValueError("signal weights must be finite")
        if self.var_nu < 0:
            raise ValueError("var_nu must be nonnegative")

    @property
    def is_identity(self) -> bool:
        return self.w_theta == 0.0 and self.w_a == 1.0 and self.var_nu == 0.0


@dataclass(frozen=True)
class ModelParams:
    lam: float = 0.5
    var_eps: float = 1.0
    var_eta: float = 1.0
    var_theta: float = 1.0
    signal: SignalSpec = field(default_factory=SignalSpec)

    def __post_init__(self):
        values = [self.lam, self.var_eps, self.var_eta, self.var_theta]
        if not all(np.isfinite(values)):
            raise ValueError("parameters must be finite")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")
        if self.var_eps < 0 or self.var_eta < 0:
            raise ValueError("var_eps and var_eta must be nonnegative")
        if self.var_theta <= 0:
            raise ValueError("var_theta must be positive")

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Policy:
    """``a(theta) = slope * theta + intercept``."""

    slope: float
    intercept: float = 0.0

    def __call__(self, theta):
        return self.slope * np.asarray(theta) + self.intercept

    @property
    def function(self) -> AffineFunction:
        return AffineFunction(("theta",), [self.slope], self.intercept)


@dataclass(frozen=True)
class ForecastRule:
    """``e(t) = slope * t + intercept``."""

    slope: float
    intercept: float = 0.0

    def __call__(self, t):
        return self.slope * np.asarray(t) + self.intercept

    @property
    def function(self) -> AffineFunction:
        return AffineFunction(("t",), [self.slope], self.intercept)


def structural_loadings(
    params: ModelParams, policy: Policy, forecast: ForecastRule
) -> tuple[np.ndarray, np.ndarray]:
    """Each variable in ``LABELS`` as ``const + L @ (theta, nu, eps, eta)``."""
    lam = params.lam
    s = params.signal
    rows = {}
    const = {}
    rows["theta"] = np.array([1.0, 0.0, 0.0, 0.0])
    const["theta"] = 0.0
    rows["a"] = policy.slope * rows["theta"]
    const["a"] = policy.intercept
    rows["t"] = s.w_theta * rows["theta"] + s.w_a * rows["a"] + np.array([0.0, 1.0, 0.0, 0.0])
    const["t"] = s.w_a * const["a"]
    rows["e"] = forecast.slope * rows["t"]
    const["e"] = forecast.slope * const["t"] + forecast.intercept
    rows["pi"] = rows["a"] + np.array([0.0, 0.0, 1.0, 0.0])
    const["pi"] = const["a"]
    rows["y"] = rows["pi"] - lam * rows["e"] + np.array([0.0, 0.0, 0.0, 1.0])
    const["y"] = const["pi"] - lam * const["e"]
    return (
        np.array([const[v] for v in LABELS]),
        np.stack([rows[v] for v in LABELS]),
    )


def exogenous_variances(params: ModelParams) -> np.ndarray:
    return np.array([params.var_theta, params.signal.var_nu, params.var_eps, params.var_eta])


def build_joint(params: ModelParams, policy: Policy, forecast: ForecastRule) -> GaussianJoint:
    """Exact joint of (theta, a, t, e, pi, y) implied by the strategies."""
    const, load = structural_loadings(params, policy, forecast)
    return GaussianJoint.from_factor(LABELS, const, load, exogenous_variances(params))


def _loss_terms(params: ModelParams, forecast: ForecastRule):
    # y given (theta, a) = c * a - m_theta * theta - m0 + (eps - lam*k1*nu + eta)
    lam, s = params.lam, params.signal
    k1, k0 = forecast.slope, forecast.intercept
    c = 1.0 - lam * k1 * s.w_a
    m_theta = lam * k1 * s.w_theta
    m0 = lam * k0
    # Both y and pi - theta carry eps; the loss adds their second moments
    # separately, so each contributes var_eps on its own.
    constant = 2.0 * params.var_eps + params.var_eta + (lam * k1) ** 2 * s.var_nu
    return c, m_theta, m0, constant


def expected_loss(params: ModelParams, forecast: ForecastRule, theta, action):
    """E[y^2 + (pi - theta)^2 | theta, a] with the forecast rule held fixed."""
    c, m_theta, m0, constant = _loss_terms(params, forecast)
    theta = np.asarray(theta, dtype=float)
    action = np.asarray(action, dtype=float)
    mean_y = c * action - m_theta * theta - m0
    return mean_y**2 + (action - theta) ** 2 + constant


def loss_gradient(params: ModelParams, forecast: ForecastRule, theta, action):
    """Derivative of :func:`expected_loss` with respect to the action."""
    c, m_theta, m0, _ = _loss_terms(params, forecast)
    theta = np.asarray(theta, dtype=float)
    action = np.asarray(action, dtype=float)
    return 2.0 * c * (c * action - m_theta * theta - m0) + 2.0 * (action - theta)


def best_response(params: ModelParams, forecast: ForecastRule) -> Policy:
    """Exact minimiser of the expected loss as an affine function of theta."""
    c, m_theta, m0, _ = _loss_terms(params, forecast)
    denom = c * c + 1.0
    return Policy((1.0 + c * m_theta) / denom, c * m0 / denom)
