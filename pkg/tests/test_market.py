import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import bisect

from lambertmc.errors import DomainError
from lambertmc.market import (
    AgentParams,
    MarketScenario,
    check_rho,
    derived,
    format_scenario_text,
    parse_scenario_text,
    preset,
)


def test_presets():
    sc, lam = preset("table1")
    assert (lam, sc.T, sc.s0) == (2.0, 0.25, 100.0)
    sc, lam = preset("table2")
    assert (sc.r, lam, sc.T, sc.s0, sc.nu, sc.eta, sc.mu, sc.sigma) == (0.001, 20.0, 0.3, 1.0, 0.35, 0.4, 0.1, 0.2)
    sc, lam = preset("table3")
    assert sc.eta == 0.3 and sc.T == 10.0 and lam == 10.0
    assert sc.vol2T == pytest.approx(0.9, rel=1e-15)
    with pytest.raises(DomainError):
        preset("tableX")


@pytest.mark.parametrize(
    "field,value", [("T", 0.0), ("s0", -1.0), ("eta", 0.0), ("sigma", -0.2), ("nu", math.nan), ("r", math.inf)]
)
def test_scenario_validation(field, value):
    sc, _ = preset("table1")
    with pytest.raises(DomainError):
        sc.with_(**{field: value})


@pytest.mark.parametrize("kw", [dict(gamma=0.0, lam=1.0), dict(gamma=1.0, lam=0.0), dict(gamma=1.0, lam=1.0, x0=math.nan)])
def test_agent_validation(kw):
    with pytest.raises(DomainError):
        AgentParams(**kw)


def test_drift_conventions(table1):
    sc, ag = table1
    dq = derived(sc, ag, 0.3)
    assert dq.delta_complete == pytest.approx(0.05150, abs=1e-12)
    assert dq.delta == pytest.approx(0.20 - 0.3 * 0.30 * 0.099 / 0.20, rel=1e-14)
    assert derived(sc, ag, 0.0).delta == sc.nu
    assert sc.drift(1.0) == pytest.approx(dq.delta_complete, rel=1e-15)


def test_theta(table1):
    sc, ag = table1
    assert derived(sc, ag, 0.0).theta == ag.lam * ag.gamma
    for rho in (0.2, 0.7, 0.95):
        assert derived(sc, ag, rho).theta == derived(sc, ag, -rho).theta


def test_w_bar_bisection_oracle(table2):
    sc, ag = table2
    dq = derived(sc, ag, 0.0)
    s_hat = math.exp((0.35 - 0.08) * 0.3)
    x = s_hat * 0.048 * 2.0
    w = bisect(lambda w: w * math.exp(w) - x, 0.0, 1.0, xtol=1e-300, rtol=8.9e-16)
    assert dq.s_hat0 == pytest.approx(s_hat, rel=1e-15)
    assert dq.w_bar == pytest.approx(w, rel=1e-14)


def test_rho_domain(table1):
    sc, ag = table1
    for rho in (1.0, -1.0, 1 - 1e-7, 1.5, math.nan):
        with pytest.raises(DomainError):
            derived(sc, ag, rho)
    assert check_rho(1 - 1e-6) == 1 - 1e-6


def test_scenario_text_roundtrip(table2):
    sc, ag = table2
    text = format_scenario_text(sc, ag, rho=0.25)
    vals = parse_scenario_text(text + "# trailing comment\n\n")
    assert vals["lambda"] == ag.lam and vals["rho"] == 0.25
    assert MarketScenario(**{k: vals[k] for k in ("r", "T", "s0", "nu", "eta", "mu", "sigma")}) == sc


@pytest.mark.parametrize("text", ["r 0.1", "zeta=1", "r=abc"])
def test_scenario_text_errors(text):
    with pytest.raises(DomainError):
        parse_scenario_text(text)


@given(
    rho=st.floats(min_value=-0.999, max_value=0.999),
    gamma=st.floats(min_value=1e-4, max_value=50),
    lam=st.floats(min_value=1e-4, max_value=100),
)
def test_derived_invariants(rho, gamma, lam):
    sc, _ = preset("table1")
    dq = derived(sc, AgentParams(gamma, lam), rho)
    assert dq.theta > 0
    assert dq.w_bar > 0
    x = dq.s_hat0 * sc.vol2T * dq.theta
    assert dq.w_bar * math.exp(dq.w_bar) == pytest.approx(x, rel=1e-13)
