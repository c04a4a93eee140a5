import numpy as np
import pytest

from dagpolicy import ForecastRule, ModelParams, Policy, SignalSpec, best_response, build_joint, expected_loss
from dagpolicy.economy import loss_gradient
from dagpolicy.linalg_gauss import condition


def test_params_validation():
    for bad in ({"lam": 0.0}, {"lam": 1.2}, {"var_eps": -1.0}, {"var_theta": 0.0}):
        with pytest.raises(ValueError):
            ModelParams(**bad)
    assert ModelParams(lam=1.0).lam == 1.0
    with pytest.raises(ValueError):
        SignalSpec(var_nu=-0.1)


def test_no_policy_moments():
    p = ModelParams(var_eps=0.7, var_eta=1.3)
    j = build_joint(p, Policy(0.0), ForecastRule(0.0))
    assert j.var("pi") == pytest.approx(0.7)
    assert j.var("y") == pytest.approx(2.0)
    assert j.covariance("pi", "y") == pytest.approx(0.7)


def test_rational_expectations_output():
    p = ModelParams(lam=0.5, var_eps=0.4, var_eta=0.9)
    j = build_joint(p, Policy(0.8), ForecastRule(1.0))
    maps, resid = condition(j, ["y"], ["a"])
    assert maps["y"].coefficients[0] == pytest.approx(0.5, abs=1e-12)
    assert resid[0, 0] == pytest.approx(1.3, abs=1e-12)


def test_identity_signal_copies_action():
    j = build_joint(ModelParams(var_theta=2.0), Policy(0.7, 0.1), ForecastRule(0.4))
    assert j.covariance("t", "a") == pytest.approx(j.var("a"))
    assert j.var("t") == pytest.approx(j.var("a"))


def test_means_follow_intercepts():
    p = ModelParams(lam=0.4, signal=SignalSpec(0.5, 2.0, 0.3))
    j = build_joint(p, Policy(0.7, 0.2), ForecastRule(0.3, -0.1))
    m = dict(zip(j.vars, j.mean))
    assert m["a"] == pytest.approx(0.2)
    assert m["t"] == pytest.approx(0.4)
    assert m["e"] == pytest.approx(0.3 * 0.4 - 0.1)
    assert m["y"] == pytest.approx(0.2 - 0.4 * m["e"])


@pytest.mark.slow
def test_build_joint_matches_simulation():
    p = ModelParams(lam=0.6, var_eps=0.8, var_eta=1.7, var_theta=2.5, signal=SignalSpec(0.4, 0.9, 0.6))
    pol, fc = Policy(0.7, 0.2), ForecastRule(0.45, -0.3)
    j = build_joint(p, pol, fc)
    rng = np.random.default_rng(2024)
    n = 10**6
    theta = rng.normal(0, np.sqrt(p.var_theta), n)
    nu = rng.normal(0, np.sqrt(p.signal.var_nu), n)
    eps = rng.normal(0, np.sqrt(p.var_eps), n)
    eta = rng.normal(0, np.sqrt(p.var_eta), n)
    a = pol(theta)
    t = 0.4 * theta + 0.9 * a + nu
    e = fc(t)
    pi = a + eps
    y = pi - p.lam * e + eta
    x = np.column_stack([theta, a, t, e, pi, y])
    mean_se = np.sqrt(np.diag(j.cov) / n)
    assert np.all(np.abs(x.mean(0) - j.mean) <= 4 * mean_se + 1e-12)
    d = np.sqrt(np.diag(j.cov))
    cov_se = np.sqrt((np.outer(d, d) ** 2 + j.cov**2) / n)
    assert np.all(np.abs(np.cov(x, rowvar=False) - j.cov) <= 4 * cov_se + 1e-12)


def test_re_loss_matches_textbook_form():
    p = ModelParams(lam=0.5, var_eps=0.3, var_eta=0.7)
    fc = ForecastRule(1.0)
    theta = np.linspace(-2, 2, 9)
    a = np.linspace(1.5, -1, 9)
    const = 2 * 0.3 + 0.7
    got = expected_loss(p, fc, theta, a)
    assert np.allclose(got - const, 0.25 * a**2 + (a - theta) ** 2, atol=1e-13)
    assert expected_loss(p, ForecastRule(0.0), 0.0, 0.0) == pytest.approx(const)


def test_offsetting_forecast_leaves_target_only():
    # lam * k1 = 1 under the identity signal: y no longer depends on a.
    p = ModelParams(lam=0.5)
    pol = best_response(p, ForecastRule(2.0))
    assert pol.slope == pytest.approx(1.0) and pol.intercept == pytest.approx(0.0)


@pytest.mark.parametrize(
    "k1,lam,want",
    [(1.0, 0.5, 0.8), (0.0, 0.5, 0.5), (0.0, 1.0, 0.5), (0.37, 1.0, 1 / ((1 - 0.37) ** 2 + 1))],
)
def test_best_response_slopes(k1, lam, want):
    assert best_response(ModelParams(lam=lam), ForecastRule(k1)).slope == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_best_response_first_order_condition(seed):
    rng = np.random.default_rng(seed)
    p = ModelParams(
        lam=float(rng.uniform(0.05, 1)),
        var_eps=float(rng.uniform(0.1, 3)),
        var_eta=float(rng.uniform(0.1, 3)),
        signal=SignalSpec(float(rng.normal()), float(rng.normal()), float(rng.uniform(0, 2))),
    )
    fc = ForecastRule(float(rng.normal()), float(rng.normal()))
    pol = best_response(p, fc)
    theta = rng.normal(size=20)
    a = pol(theta)
    assert np.max(np.abs(loss_gradient(p, fc, theta, a))) < 1e-10
    h = 1e-5
    fd = (expected_loss(p, fc, theta, a + h) - expected_loss(p, fc, theta, a - h)) / (2 * h)
    assert np.max(np.abs(fd)) < 1e-6
    # and it is a minimum
    assert np.all(expected_loss(p, fc, theta, a + 0.1) > expected_loss(p, fc, theta, a))


def test_loss_constant_is_action_free():
    p = ModelParams(lam=0.7, var_eps=1.1, var_eta=0.4, signal=SignalSpec(0.2, 0.8, 0.5))
    fc = ForecastRule(0.6, 0.2)
    lam, k1, k0 = 0.7, 0.6, 0.2
    c = 1 - lam * k1 * 0.8
    theta = np.array([-1.0, 0.3, 2.0])
    for a in (-1.0, 0.0, 0.5, 3.0):
        variable = (c * a - lam * k1 * 0.2 * theta - lam * k0) ** 2 + (a - theta) ** 2
        rest = expected_loss(p, fc, theta, a) - variable
        assert np.allclose(rest, 2 * 1.1 + 0.4 + (lam * k1) ** 2 * 0.5, atol=1e-12)
