import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import random_params
from dagpolicy import (
    ForecastRule,
    ModelParams,
    Policy,
    SignalSpec,
    SolverConfig,
    case1_closed_form,
    case2_closed_form,
    preset,
    re_benchmark,
    solve,
    uninformed_closed_form,
)
from dagpolicy.bayesnet import forecast_rule
from dagpolicy.economy import best_response
from dagpolicy.equilibrium import case1_forecast_slope, case2_gamma, case2_rhs, iterate_once, re_policy_slope

# 40-digit mpmath root of the case 2 equation at lam = 1 and unit variances.
GAMMA_UNIT = 0.37536894877533076570


def case2_oracle(p: ModelParams) -> float:
    """Root of the single-equation form with delta substituted (independent of case2_rhs)."""
    lam, st, se, sh = p.lam, p.var_theta, p.var_eps, p.var_eta

    def h(g):
        q = (1 - g * lam) ** 2 / ((1 - g * lam) ** 2 + 1) ** 2 * st
        return (q + (1 - g * lam) * se) / (q + se + sh) - g

    return brentq(h, 0.0, 1.0, xtol=1e-15, rtol=1e-15)


def test_true_dag_gives_benchmark():
    for ve, vh in [(0.1, 3.0), (5.0, 0.2)]:
        eq = solve(ModelParams(lam=0.5, var_eps=ve, var_eta=vh), preset("true"))
        assert eq.converged
        assert eq.policy.slope == pytest.approx(0.8, abs=1e-10)
        assert eq.forecast.slope == pytest.approx(1.0, abs=1e-10)


def test_rigid_dag():
    eq = solve(ModelParams(), preset("rigid"))
    assert eq.forecast.slope == pytest.approx(0.0, abs=1e-10)
    assert eq.policy.slope == pytest.approx(0.5, abs=1e-10)


def test_case1_solver_example():
    eq = solve(ModelParams(lam=0.5), preset("case1"))
    assert eq.forecast.slope == pytest.approx(2 / 3, abs=1e-10)
    assert eq.policy.slope == pytest.approx(9 / 13, abs=1e-10)


def test_equilibrium_joint_is_consistent_with_strategies():
    from dagpolicy import build_joint

    eq = solve(ModelParams(lam=0.3), preset("case2"))
    again = build_joint(eq.params, eq.policy, eq.forecast)
    assert again.max_distance(eq.joint) <= 1e-12


def test_re_benchmark():
    assert re_benchmark(ModelParams(lam=1.0)).policy.slope == 1.0
    assert re_benchmark(ModelParams(lam=0.5)).policy.slope == pytest.approx(0.8)
    a = re_benchmark(ModelParams(var_eps=0.01, var_eta=50.0))
    b = re_benchmark(ModelParams(var_eps=70.0, var_eta=0.02))
    assert a.coefficients() == b.coefficients()


def test_case1_closed_form_limits():
    assert case1_closed_form(ModelParams(lam=1.0, var_eps=3.0, var_eta=0.5)).forecast.slope == pytest.approx(1.0)
    rigid = case1_closed_form(ModelParams(lam=0.5, var_eps=1.0, var_eta=0.0))
    assert rigid.forecast.slope == 0.0
    eq = case1_closed_form(ModelParams(lam=0.5))
    assert eq.forecast.slope == pytest.approx(2 / 3, abs=1e-15)
    assert eq.policy.slope == pytest.approx(9 / 13, abs=1e-15)


def test_case1_forms_agree():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a, b = case1_forecast_slope(random_params(rng))
        assert abs(a - b) <= 1e-12


def test_closed_forms_need_identity_signal():
    p = ModelParams(signal=SignalSpec(0.5, 1.0, 0.1))
    for fn in (case1_closed_form, case2_closed_form):
        with pytest.raises(ValueError):
            fn(p)
    with pytest.raises(ValueError):
        solve(p, preset("case1"))


def test_case2_unit_variances_against_oracle():
    p = ModelParams(lam=1.0)
    gamma, residual = case2_gamma(p)
    assert case2_oracle(p) == pytest.approx(GAMMA_UNIT, abs=1e-13)
    assert gamma == pytest.approx(GAMMA_UNIT, abs=1e-12)
    assert residual < 1e-12


def test_case2_noisy_inflation_gives_half():
    eq = case2_closed_form(ModelParams(lam=1.0, var_eps=1e6))
    assert eq.forecast.slope == pytest.approx(0.5, abs=1e-3)


def test_case2_large_target_variance_approaches_re():
    gammas = [case2_closed_form(ModelParams(lam=1.0, var_theta=v)).forecast.slope for v in (1e2, 1e4, 1e6, 1e9)]
    assert np.all(np.diff(gammas) > 0)
    assert gammas[2] == pytest.approx(case2_oracle(ModelParams(lam=1.0, var_theta=1e6)), abs=1e-12)
    assert gammas[2] == pytest.approx(0.98747885826190716, abs=1e-9)
    assert 1 - gammas[3] < 1e-2


def test_case2_bisection_bracket_single_crossing():
    rng = np.random.default_rng(9)
    grid = np.linspace(0, 1, 100)
    for _ in range(20):
        p = random_params(rng)
        h = np.array([case2_rhs(g, p) - g for g in grid])
        assert h[0] > 0 > h[-1]
        assert np.count_nonzero(np.diff(np.sign(h)) != 0) == 1


def test_uninformed_closed_form():
    for p in (ModelParams(), ModelParams(lam=0.9, var_eps=40.0, var_eta=0.01)):
        eq = uninformed_closed_form(p)
        assert eq.policy.slope == 0.5 and eq.forecast.slope == 0.0
    assert re_policy_slope(0.0) == 0.5
    gen = solve(ModelParams(lam=0.7), preset("rigid"))
    assert np.allclose(gen.coefficients(), uninformed_closed_form(ModelParams(lam=0.7)).coefficients(), atol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_generic_solver_matches_closed_forms(seed):
    p = random_params(np.random.default_rng(100 + seed))
    for name, oracle in (("case1", case1_closed_form), ("case2", case2_closed_form)):
        eq = solve(p, preset(name))
        assert eq.converged
        assert np.allclose(eq.coefficients(), oracle(p).coefficients(), atol=1e-8, rtol=0)
    assert case2_closed_form(p).forecast.slope == pytest.approx(case2_oracle(p), abs=1e-12)


@pytest.mark.parametrize("name", ["true", "case1", "case2", "rigid", "re-equivalent"])
def test_solution_satisfies_both_clauses(name):
    p = ModelParams(lam=0.6, var_eps=2.0, var_eta=0.5, var_theta=1.5)
    eq = solve(p, preset(name))
    rule = forecast_rule(preset(name), eq.joint)
    assert rule.coefficients[0] == pytest.approx(eq.forecast.slope, abs=1e-9)
    assert rule.intercept == pytest.approx(eq.forecast.intercept, abs=1e-9)
    pol = best_response(p, eq.forecast)
    assert pol.slope == pytest.approx(eq.policy.slope, abs=1e-9)
    new_pol, new_fc = iterate_once(p, preset(name), eq.policy, eq.forecast)
    step = max(abs(new_pol.slope - eq.policy.slope), abs(new_fc.slope - eq.forecast.slope))
    assert step <= 10 * SolverConfig().tol / SolverConfig().damping


@pytest.mark.parametrize("name", ["true", "case1", "case2", "re-equivalent"])
def test_intercepts_vanish_from_offset_start(name):
    cfg = SolverConfig(initial_policy=Policy(0.3, 0.7), initial_forecast=ForecastRule(0.4, -0.9))
    eq = solve(ModelParams(lam=0.8, var_eps=0.5), preset(name), cfg)
    assert eq.converged
    assert abs(eq.policy.intercept) <= 1e-10
    assert abs(eq.forecast.intercept) <= 1e-10


def test_non_convergence_is_reported():
    eq = solve(ModelParams(), preset("case1"), SolverConfig(max_iter=3))
    assert not eq.converged
    assert eq.iterations == 3
    assert eq.residual > SolverConfig().tol


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)


def test_case1_slope_monotone_in_noise():
    grid = np.geomspace(0.01, 100, 10)
    for lam in (0.2, 0.5, 0.9):
        by_eps = [case1_forecast_slope(ModelParams(lam=lam, var_eps=v))[1] for v in grid]
        by_eta = [case1_forecast_slope(ModelParams(lam=lam, var_eta=v))[1] for v in grid]
        assert np.all(np.diff(by_eps) < 0)
        assert np.all(np.diff(by_eta) > 0)


def test_case2_gamma_nondecreasing_in_target_variance():
    grid = np.geomspace(0.01, 100, 10)
    for lam in (0.3, 1.0):
        gammas = [case2_closed_form(ModelParams(lam=lam, var_theta=v)).forecast.slope for v in grid]
        assert np.all(np.diff(gammas) >= 0)


@pytest.mark.parametrize("name", ["case1", "case2"])
def test_multistart_agrees(name):
    p = ModelParams()
    results = []
    for s in (-1.0, 0.0, 0.25, 0.75, 1.5):
        cfg = SolverConfig(initial_policy=Policy(s), initial_forecast=ForecastRule(s))
        eq = solve(p, preset(name), cfg)
        assert eq.converged
        results.append(eq.coefficients())
    assert np.ptp(np.array(results), axis=0).max() <= 1e-8


def test_forecast_only_through_e_has_a_degenerate_fixed_point():
    # With e the sole cause of pi, a constant forecast makes e uninformative and
    # confirms itself; the default start reaches the informed equilibrium.
    from conftest import embedded_dag

    dag = embedded_dag(["e"])
    stuck = solve(ModelParams(), dag, SolverConfig(initial_forecast=ForecastRule(0.0)))
    assert stuck.forecast.slope == 0.0 and stuck.policy.slope == 0.5
    informed = solve(ModelParams(), dag)
    assert informed.forecast.slope == pytest.approx(1.0, abs=1e-10)
    assert informed.policy.slope == pytest.approx(0.8, abs=1e-10)
