import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lambertmc.errors import DomainError, NumericalError
from lambertmc.mc import (
    CHUNK,
    Z99,
    EstimatorResult,
    McConfig,
    log_mean_exp_price,
    mean_estimate,
    normals,
    normals_range,
    replicate,
    replication_variance,
    sample_normals,
    wilson_interval,
)


def test_config_validation():
    for kw in (dict(n_samples=1), dict(workers=0), dict(n_replications=0), dict(seed=-1)):
        with pytest.raises(DomainError):
            McConfig(**kw)


def test_deterministic():
    a = sample_normals(McConfig(n_samples=4, seed=42))
    b = sample_normals(McConfig(n_samples=4, seed=42))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_normals(McConfig(n_samples=4, seed=43)))


def test_streams_differ():
    assert not np.array_equal(normals_range(1, 0, 0, 8), normals_range(1, 1, 0, 8))


def test_antithetic_pairs():
    z = sample_normals(McConfig(n_samples=4, seed=3, antithetic=True))
    assert z[0] + z[1] == 0.0 and z[2] + z[3] == 0.0
    assert sample_normals(McConfig(n_samples=5, seed=3, antithetic=True)).size == 5


def test_moments():
    n = 10**6
    z = sample_normals(McConfig(n_samples=n, seed=42))
    assert abs(z.mean()) < 4 / math.sqrt(n)
    assert z.var() == pytest.approx(1.0, rel=0.01)


@given(start=st.integers(0, 10**6), n=st.integers(1, 50), cut=st.integers(0, 50))
def test_ranges_concatenate(start, n, cut):
    cut = min(cut, n)
    whole = normals_range(9, 2, start, n)
    parts = np.concatenate([normals_range(9, 2, start, cut), normals_range(9, 2, start + cut, n - cut)])
    assert np.array_equal(whole, parts)


def test_workers_do_not_change_samples():
    n = 3 * CHUNK + 17
    one = normals(5, 0, 0, n, workers=1)
    four = normals(5, 0, 0, n, workers=4)
    assert np.array_equal(one, four)
    cfg = McConfig(n_samples=n, seed=5)
    assert np.array_equal(sample_normals(cfg), sample_normals(cfg.with_(workers=3)))


def test_estimator_result_ci():
    r = EstimatorResult.from_mean_se(1.5, 0.1, 100)
    assert r.ci99[0] <= r.mean <= r.ci99[1]
    assert r.ci99[1] - r.ci99[0] == pytest.approx(2 * Z99 * 0.1, rel=1e-15)
    assert r.variance == pytest.approx(0.01)
    s = r.shifted(2.0)
    assert s.mean == 3.5 and s.std_error == 0.1


def test_log_mean_exp_constant():
    r = log_mean_exp_price(np.full(10, 3.0), 2.0)
    assert r.mean == pytest.approx(6.0, rel=1e-15)
    assert r.std_error == 0.0


def test_log_mean_exp_arithmetic():
    assert log_mean_exp_price([0.0, math.log(3.0)], 1.0).mean == pytest.approx(math.log(2.0), rel=1e-15)


def test_log_mean_exp_errors():
    with pytest.raises(NumericalError):
        log_mean_exp_price([-np.inf, -np.inf], 1.0)
    with pytest.raises(NumericalError):
        log_mean_exp_price([0.0, np.nan], 1.0)
    with pytest.raises(DomainError):
        log_mean_exp_price([], 1.0)


def test_log_mean_exp_extreme_no_overflow():
    r = log_mean_exp_price([1000.0, 999.0], 1.0)
    assert r.mean == pytest.approx(1000.0 + math.log((1 + math.exp(-1)) / 2), rel=1e-15)
    r = log_mean_exp_price([-2000.0, -2001.0], -1.0)
    assert math.isfinite(r.mean)


@given(c=st.floats(min_value=-700, max_value=700), scale=st.floats(min_value=-5, max_value=5))
def test_shift_stability(c, scale):
    t = sample_normals(McConfig(n_samples=64, seed=1))
    a = log_mean_exp_price(t + c, scale).mean
    b = log_mean_exp_price(t, scale).mean + scale * c
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_delta_method_se_against_replications():
    def est(cfg):
        return log_mean_exp_price(0.3 * sample_normals(cfg), -1.0, cfg.seed)

    cfg = McConfig(n_samples=10_000, seed=7, n_replications=200)
    reps = replicate(est, cfg)
    spread = np.std([r.mean for r in reps], ddof=1)
    assert np.mean([r.std_error for r in reps]) == pytest.approx(spread, rel=0.2)
    assert replication_variance(est, cfg) == pytest.approx(spread**2, rel=1e-12)


def test_mean_estimate():
    r = mean_estimate([1.0, 2.0, 3.0])
    assert r.mean == 2.0 and r.std_error == pytest.approx(1 / math.sqrt(3))


def test_wilson():
    lo, hi = wilson_interval(9990, 10000)
    assert lo < 0.999 < hi <= 1.0
    lo, hi = wilson_interval(10000, 10000)
    assert hi == 1.0 and lo > 0.999
    with pytest.raises(DomainError):
        wilson_interval(0, 0)


@pytest.mark.parametrize("n", [1, 7, 82, 10_000])
def test_wilson_endpoints_contain_extremes(n):
    assert wilson_interval(n, n)[1] == 1.0
    assert wilson_interval(0, n)[0] == 0.0
