"""Classification of causal models, comparative statics and Monte Carlo checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .bayesnet import Dag, GaussianBN, LinearGaussianCPD, bn_joint, fit, preset
from .economy import EXOGENOUS, ModelParams, exogenous_variances, structural_loadings
from .equilibrium import Equilibrium, SolverConfig, solve
from .linalg_gauss import GaussianJoint, condition, sample, signal_extraction_weight

DEFAULT_NOISE_GRID = tuple((ve, vh) for ve in (0.01, 1.0, 100.0) for vh in (0.01, 1.0, 100.0))
SWEEPABLE = ("lam", "var_eps", "var_eta", "var_theta")
SE_THRESHOLD = 4.0


class StructuralClass(str, Enum):
    RE_EQUIVALENT_INFORMED = "re_equivalent_informed"
    RE_EQUIVALENT_SIGNAL = "re_equivalent_signal"
    UNINFORMED_EQUIVALENT = "uninformed_equivalent"
    NOISE_SENSITIVE = "noise_sensitive"
    RIGID_NO_PATH = "rigid_no_path"

    def __str__(self) -> str:
        return self.value


def classify_dag(dag: Dag) -> StructuralClass:
    """Graph-only class of ``dag`` from the direct causes of ``pi``.

    Without reverse causality the class is exact. With ``y`` among the causes
    of ``pi`` only the no-path case is decided here; everything else is a
    candidate for noise sensitivity that :func:`invariance_test` settles.
    """
    causes = dag.parents["pi"]
    if "y" not in causes:
        if causes & {"a", "theta"}:
            return StructuralClass.RE_EQUIVALENT_INFORMED
        if causes & {"t", "e"}:
            return StructuralClass.RE_EQUIVALENT_SIGNAL
        return StructuralClass.UNINFORMED_EQUIVALENT
    if not dag.ancestors("pi") & {"theta", "a", "t", "e"}:
        return StructuralClass.RIGID_NO_PATH
    return StructuralClass.NOISE_SENSITIVE


@dataclass(frozen=True)
class GridPoint:
    var_eps: float
    var_eta: float
    forecast_slope: float
    forecast_intercept: float
    policy_slope: float
    policy_intercept: float
    converged: bool


@dataclass(frozen=True)
class ClassificationReport:
    dag_id: str
    reverse_causality: bool
    structural_class: StructuralClass
    numeric_invariance: bool | None
    verdict: str
    evidence: tuple[GridPoint, ...] = ()

    def __post_init__(self):
        if not self.reverse_causality and self.structural_class not in (
            StructuralClass.RE_EQUIVALENT_INFORMED,
            StructuralClass.RE_EQUIVALENT_SIGNAL,
            StructuralClass.UNINFORMED_EQUIVALENT,
        ):
            raise ValueError("a DAG without reverse causality must be in an RE or uninformed class")


def _check_noise_grid(grid):
    if len(grid) < 4:
        raise ValueError("noise grid needs at least 4 points")
    for k, name in enumerate(("var_eps", "var_eta")):
        vals = [g[k] for g in grid]
        if min(vals) <= 0 or max(vals) / min(vals) < 100.0:
            raise ValueError(f"noise grid must span two orders of magnitude in {name}")


def invariance_test(
    params_base: ModelParams,
    dag: Dag,
    noise_grid: Sequence[tuple[float, float]] = DEFAULT_NOISE_GRID,
    tol: float = 1e-8,
    config: SolverConfig | None = None,
    dag_id: str = "",
) -> ClassificationReport:
    """Solve on every (var_eps, var_eta) point and compare slopes.

    The verdict names the benchmark the invariant equilibrium coincides with:
    ``re-equivalent`` (the true-model equilibrium under the same signal),
    ``uninformed`` (forecast identically zero) or ``invariant-other``.
    Non-invariant models get ``noise-sensitive``; any failed solve gives
    ``undetermined`` and no invariance verdict.
    """
    _check_noise_grid(noise_grid)
    points = []
    for ve, vh in noise_grid:
        eq = solve(params_base.replace(var_eps=ve, var_eta=vh), dag, config)
        points.append(GridPoint(ve, vh, *eq.coefficients(), eq.converged))
    structural = classify_dag(dag)
    reverse = "y" in dag.parents["pi"]
    if not all(p.converged for p in points):
        return ClassificationReport(dag_id, reverse, structural, None, "undetermined", tuple(points))
    slopes = np.array([[p.forecast_slope, p.policy_slope] for p in points])
    invariant = bool(np.all(np.ptp(slopes, axis=0) <= tol))
    if not invariant:
        verdict = "noise-sensitive"
    else:
        ref = solve(params_base, preset("true"), config)
        fc, pol = slopes[0]
        if abs(fc - ref.forecast.slope) <= tol and abs(pol - ref.policy.slope) <= tol:
            verdict = "re-equivalent"
        elif abs(fc) <= tol and abs(pol - 0.5) <= tol:
            verdict = "uninformed"
        else:
            verdict = "invariant-other"
    return ClassificationReport(dag_id, reverse, structural, invariant, verdict, tuple(points))


@dataclass(frozen=True)
class SweepRecord:
    value: float
    forecast_slope: float
    forecast_intercept: float
    policy_slope: float
    policy_intercept: float
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class SweepResult:
    param: str
    records: tuple[SweepRecord, ...]

    @property
    def grid(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    @property
    def forecast_slopes(self) -> np.ndarray:
        return np.array([r.forecast_slope for r in self.records])

    @property
    def policy_slopes(self) -> np.ndarray:
        return np.array([r.policy_slope for r in self.records])


def sweep(
    params_base: ModelParams,
    dag: Dag,
    param_name: str,
    grid: Sequence[float],
    config: SolverConfig | None = None,
) -> SweepResult:
    if param_name == "lambda":
        param_name = "lam"
    if param_name not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param_name!r}; choose from {SWEEPABLE}")
    grid = [float(g) for g in grid]
    if not grid or min(grid) <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be positive and strictly increasing")
    records = []
    for value in grid:
        eq = solve(params_base.replace(**{param_name: value}), dag, config)
        records.append(SweepRecord(value, *eq.coefficients(), eq.converged, eq.iterations, eq.residual))
    return SweepResult(param_name, tuple(records))


# -- Monte Carlo validation ---------------------------------------------------


@dataclass(frozen=True)
class OLSFit:
    coefficients: np.ndarray  # intercept first
    standard_errors: np.ndarray
    residual_variance: float
    rank: int


def ols(x: np.ndarray, y: np.ndarray) -> OLSFit:
    """OLS of ``y`` on ``[1, x]`` with homoskedastic standard errors."""
    n = len(y)
    design = np.column_stack([np.ones(n), x]) if np.size(x) else np.ones((n, 1))
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(n - design.shape[1], 1)
    s2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.pinv(design.T @ design)
    se = np.sqrt(np.clip(np.diag(xtx_inv) * s2, 0.0, None))
    return OLSFit(coef, se, s2, int(rank))


@dataclass(frozen=True)
class CoefficientCheck:
    equation: str  # e.g. "pi|a,y"
    term: str  # "intercept" or a regressor label
    analytic: float
    sample: float
    se: float
    deviation_se: float
    flag: str = ""  # "", "collinear", "deterministic"

    @property
    def passed(self) -> bool:
        return abs(self.deviation_se) <= SE_THRESHOLD


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CoefficientCheck, ...]
    forecast_max_abs_dev: float
    seed: int
    n: int
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def max_deviation_se(self) -> float:
        return max(abs(c.deviation_se) for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def simulate(params: ModelParams, eq: Equilibrium, n: int, seed: int) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Draw exogenous shocks and push them through the structural equations.

    Returns ``(variables, shocks)`` keyed by label.
    """
    shocks_joint = GaussianJoint(EXOGENOUS, np.zeros(4), np.diag(exogenous_variances(params)))
    z = sample(shocks_joint, n, seed)
    shocks = dict(zip(EXOGENOUS, z.T))
    theta, nu, eps, eta = z.T
    s = params.signal
    a = eq.policy(theta)
    t = s.w_theta * theta + s.w_a * a + nu
    e = eq.forecast(t)
    pi = a + eps
    y = pi - params.lam * e + eta
    return {"theta": theta, "a": a, "t": t, "e": e, "pi": pi, "y": y}, shocks


def _independent_subset(joint: GaussianJoint, labels: list[str], rtol: float = 1e-12) -> list[str]:
    """Greedy maximal subset of ``labels`` with nonsingular covariance."""
    kept: list[str] = []
    scale = max([joint.var(lab) for lab in labels] + [1.0])
    for lab in labels:
        trial = kept + [lab]
        sub = joint.marginal(trial).cov
        if np.linalg.eigvalsh(sub).min() > rtol * scale:
            kept = trial
    return kept


def _check_equation(name, analytic_terms, analytic_values, fit_: OLSFit, deterministic, flag) -> list[CoefficientCheck]:
    out = []
    for term, want, got, se in zip(analytic_terms, analytic_values, fit_.coefficients, fit_.standard_errors):
        if deterministic:
            # No sampling noise: compare on a numerical scale instead of SEs.
            scale = 1e-9 * (1.0 + abs(want))
            out.append(CoefficientCheck(name, term, want, got, scale, (got - want) / scale, "deterministic"))
        else:
            out.append(CoefficientCheck(name, term, want, got, se, (got - want) / se, flag))
    return out


def validate(params: ModelParams, dag: Dag, eq: Equilibrium, n: int = 1_000_000, seed: int = 0) -> ValidationReport:
    """Regress every CPD of the fitted DAG on simulated data.

    Coefficients are compared with the analytic fit in standard-error units.
    A CPD whose parents are collinear under the equilibrium joint is refitted
    on a maximal independent subset of its parents, which leaves its predicted
    values unchanged, and flagged. Deterministic CPDs have no sampling noise
    and are compared on a 1e-9 relative scale.

    With the identity signal the projection of ``eps`` on ``(a, y)`` is also
    checked against the signal-extraction weight.
    """
    if not eq.converged:
        raise ValueError("validation needs a converged equilibrium")
    if n < 10_000:
        raise ValueError("validation needs at least 10^4 samples")
    data, shocks = simulate(params, eq, n, seed)
    joint = eq.joint
    bn = fit(dag, joint)
    checks: list[CoefficientCheck] = []
    notes: list[str] = []
    sample_cpds = []
    for cpd in bn.cpds:
        parents = list(cpd.parents)
        kept = _independent_subset(joint, parents) if parents else []
        flag = ""
        if len(kept) < len(parents):
            flag = "collinear"
            notes.append(f"{cpd.child}: parents {parents} collinear, validated on {kept}")
        maps, resid = condition(joint, [cpd.child], kept)
        ref = maps[cpd.child]
        x = np.column_stack([data[p] for p in kept]) if kept else np.empty((n, 0))
        res = ols(x, data[cpd.child])
        deterministic = resid[0, 0] <= 1e-12 * max(joint.var(cpd.child), 1e-300)
        name = f"{cpd.child}|{','.join(parents)}" if parents else cpd.child
        checks += _check_equation(
            name,
            ["intercept"] + kept,
            [ref.intercept, *ref.coefficients],
            res,
            deterministic,
            flag,
        )
        coef = np.zeros(len(parents))
        for lab, c in zip(kept, res.coefficients[1:]):
            coef[parents.index(lab)] = c
        sample_cpds.append(LinearGaussianCPD(cpd.child, cpd.parents, coef, res.coefficients[0], res.residual_variance))

    if params.signal.is_identity:
        beta = signal_extraction_weight(params.var_eps, params.var_eta)
        lam, k1, k0 = params.lam, eq.forecast.slope, eq.forecast.intercept
        # E[eps | a, y] = beta * (y - a + lam * e(a))
        want = [beta * lam * k0, beta * (lam * k1 - 1.0), beta]
        res = ols(np.column_stack([data["a"], data["y"]]), shocks["eps"])
        checks += _check_equation("eps|a,y", ["intercept", "a", "y"], want, res, False, "projection")

    sample_bn = GaussianBN(dag, tuple(sample_cpds))
    signal = dag.signal_node
    maps, _ = condition(bn_joint(sample_bn), ["pi"], [signal])
    implied = maps["pi"](data[signal][:, None])
    forecast_dev = float(np.max(np.abs(data["e"] - implied)))
    return ValidationReport(tuple(checks), forecast_dev, seed, n, tuple(notes))
