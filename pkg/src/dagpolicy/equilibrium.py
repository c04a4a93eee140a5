"""Linear equilibria: a generic damped fixed-point solver and closed forms.

The generic solver alternates the two equilibrium conditions. Given the
current strategies it builds the objective joint, fits the private sector's
DAG to obtain a new forecast rule, and computes the central bank's best
response to that rule. The new pair is mixed with the old one.

The closed forms cover the rational-expectations benchmark, the uninformed
(fully rigid) case and the two reverse-causality examples, and serve as
oracles for the generic solver.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .bayesnet import Dag, forecast_rule
from .economy import (
    ForecastRule,
    ModelParams,
    Policy,
    SignalSpec,
    best_response,
    build_joint,
)
from .linalg_gauss import GaussianJoint, signal_extraction_weight

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 10_000
    damping: float = 0.5
    # Start from the fully informed forecast. A zero forecast slope makes e
    # constant, and a DAG whose only cause of pi is e then stays at e = 0.
    initial_policy: Policy = field(default_factory=lambda: Policy(0.5, 0.0))
    initial_forecast: ForecastRule = field(default_factory=lambda: ForecastRule(1.0, 0.0))

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class Equilibrium:
    params: ModelParams
    policy: Policy
    forecast: ForecastRule
    joint: GaussianJoint
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    method: str = "closed-form"

    def coefficients(self) -> tuple[float, float, float, float]:
        return (
            self.forecast.slope,
            self.forecast.intercept,
            self.policy.slope,
            self.policy.intercept,
        )


def _closed(params: ModelParams, policy: Policy, forecast: ForecastRule, method: str) -> Equilibrium:
    return Equilibrium(params, policy, forecast, build_joint(params, policy, forecast), method=method)


def _check_signal(params: ModelParams, dag: Dag):
    if dag.signal_node == "a" and not params.signal.is_identity:
        raise ValueError(
            "this DAG omits 't' and uses 'a' as the signal, which requires the identity signal t = a"
        )


def iterate_once(params: ModelParams, dag: Dag, policy: Policy, forecast: ForecastRule):
    """One undamped pass: new forecast from the fitted DAG, then best response."""
    joint = build_joint(params, policy, forecast)
    rule = forecast_rule(dag, joint)
    new_forecast = ForecastRule(float(rule.coefficients[0]), rule.intercept)
    return best_response(params, new_forecast), new_forecast


def solve(params: ModelParams, dag: Dag, config: SolverConfig | None = None) -> Equilibrium:
    """Damped fixed-point iteration on (forecast, policy) coefficients.

    Stops once the largest absolute coefficient change is at most
    ``config.tol``. Non-convergence is reported through ``converged=False``.
    """
    config = config or SolverConfig()
    _check_signal(params, dag)
    d = config.damping
    pol, fc = config.initial_policy, config.initial_forecast
    residual = math.inf
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        new_pol, new_fc = iterate_once(params, dag, pol, fc)
        mixed_pol = Policy(
            (1 - d) * pol.slope + d * new_pol.slope,
            (1 - d) * pol.intercept + d * new_pol.intercept,
        )
        mixed_fc = ForecastRule(
            (1 - d) * fc.slope + d * new_fc.slope,
            (1 - d) * fc.intercept + d * new_fc.intercept,
        )
        residual = max(
            abs(mixed_pol.slope - pol.slope),
            abs(mixed_pol.intercept - pol.intercept),
            abs(mixed_fc.slope - fc.slope),
            abs(mixed_fc.intercept - fc.intercept),
        )
        pol, fc = mixed_pol, mixed_fc
        if not math.isfinite(residual):
            break
        if residual <= config.tol:
            converged = True
            break
    if not converged:
        log.warning("solver stopped after %d iterations, residual %.3e", it, residual)
    joint = build_joint(params, pol, fc) if math.isfinite(residual) else None
    return Equilibrium(params, pol, fc, joint, it, residual, converged, method="fixed-point")


def re_policy_slope(lam: float) -> float:
    return 1.0 / ((1.0 - lam) ** 2 + 1.0)


def re_benchmark(params: ModelParams) -> Equilibrium:
    """Fully informed rational expectations: ``e = a``.

    The benchmark always uses the identity signal, whatever ``params`` says.
    """
    params = params.replace(signal=SignalSpec())
    return _closed(params, Policy(re_policy_slope(params.lam)), ForecastRule(1.0), "re-benchmark")


def uninformed_closed_form(params: ModelParams) -> Equilibrium:
    """Forecast fixed at the unconditional mean, so ``a(theta) = theta / 2``."""
    return _closed(params, Policy(0.5), ForecastRule(0.0), "uninformed")


def _require_identity(params: ModelParams):
    if not params.signal.is_identity:
        raise ValueError("closed form assumes the identity signal t = a")


def case1_forecast_slope(params: ModelParams) -> tuple[float, float]:
    """Case 1 forecast slope in its two algebraically equivalent forms."""
    beta = signal_extraction_weight(params.var_eps, params.var_eta)
    lam = params.lam
    ratio_form = (1.0 - beta) / (1.0 - beta * lam)
    denom = params.var_eta + (1.0 - lam) * params.var_eps
    weight_form = params.var_eta / denom if denom > 0 else 1.0
    return ratio_form, weight_form


def case1_closed_form(params: ModelParams) -> Equilibrium:
    """Unique linear equilibrium for theta -> a -> pi <- y."""
    _require_identity(params)
    slope, alt = case1_forecast_slope(params)
    if abs(slope - alt) > 1e-12:
        raise ArithmeticError(f"case 1 slope forms disagree: {slope!r} vs {alt!r}")
    beta = signal_extraction_weight(params.var_eps, params.var_eta)
    ratio = (1.0 - params.lam) / (1.0 - beta * params.lam)
    return _closed(params, Policy(1.0 / (ratio**2 + 1.0)), ForecastRule(slope), "case1")


def case2_rhs(gamma: float, params: ModelParams) -> float:
    """Right-hand side of the case 2 forecast-slope equation."""
    u = 1.0 - gamma * params.lam
    delta = 1.0 / (u * u + 1.0)
    signal_var = u * u * delta * delta * params.var_theta
    return (signal_var + u * params.var_eps) / (signal_var + params.var_eps + params.var_eta)


def case2_gamma(params: ModelParams, tol: float = 1e-13) -> tuple[float, float]:
    """Bisection for the case 2 forecast slope on [0, 1].

    Returns ``(gamma, |rhs(gamma) - gamma|)``. The residual is strictly
    positive at 0 and strictly negative at 1 for valid parameters.
    """
    lo, hi = 0.0, 1.0
    f_lo = case2_rhs(lo, params) - lo
    f_hi = case2_rhs(hi, params) - hi
    if not (f_lo > 0 > f_hi):
        raise ArithmeticError(f"bracket [0, 1] does not change sign ({f_lo}, {f_hi})")
    mid, f_mid = lo, f_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = case2_rhs(mid, params) - mid
        if abs(f_mid) < tol or mid in (lo, hi):
            break
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
    return mid, abs(f_mid)


def case2_closed_form(params: ModelParams) -> Equilibrium:
    """Unique strongly linear equilibrium for theta -> a -> y -> pi."""
    _require_identity(params)
    gamma, residual = case2_gamma(params)
    delta = 1.0 / ((1.0 - gamma * params.lam) ** 2 + 1.0)
    eq = _closed(params, Policy(delta), ForecastRule(gamma), "case2")
    return Equilibrium(
        eq.params, eq.policy, eq.forecast, eq.joint, residual=residual, method="case2-bisection"
    )


CLOSED_FORMS = {
    "true": re_benchmark,
    "case1": case1_closed_form,
    "case2": case2_closed_form,
    "rigid": uninformed_closed_form,
    "re-equivalent": re_benchmark,
}


def closed_form_for(name: str, params: ModelParams) -> Equilibrium | None:
    """Closed-form equilibrium for a named preset, if one applies."""
    fn = CLOSED_FORMS.get(name)
    if fn is None:
        return None
    if fn in (case1_closed_form, case2_closed_form, re_benchmark) and not params.signal.is_identity:
        return None
    return fn(params)
