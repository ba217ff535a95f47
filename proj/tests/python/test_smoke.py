"""Smoke tests for the compiled python module.

The test harness puts the built extension directory on PYTHONPATH, so the
module is importable either as the installed package or as the bare core.
"""

import math

import pytest

try:
    import potcast as m
except ImportError:
    import _core as m


def test_gp_density_cdf_quantile_roundtrip():
    sigma, gamma = 1.65, -0.34
    for q in (0.1, 0.5, 0.9, 0.975):
        x = m.gp_quantile(q, sigma, gamma)
        assert m.gp_cdf(x, sigma, gamma) == pytest.approx(q, abs=1e-10)
    assert m.gp_density(-1.0, sigma, gamma) == 0.0
    assert m.gp_density(0.0, sigma, gamma) == pytest.approx(1.0 / sigma)


def test_gp_sample_deterministic_and_in_support():
    xs = m.gp_sample(2.0, 0.1, 500, seed=42)
    ys = m.gp_sample(2.0, 0.1, 500, seed=42)
    assert xs == ys
    assert all(x > 0.0 for x in xs)


def test_extract_and_fit():
    xs = m.gp_sample(1.0, 0.2, 4000, seed=7)
    threshold, excesses = m.extract_excesses(xs, 400)
    assert len(excesses) == 400
    assert min(excesses) > 0.0
    assert threshold == sorted(xs)[4000 - 400 - 1]
    for method in ("ML", "GPWM"):
        fit = m.fit(xs, 400, method=method)
        assert fit["in_theta"]
        assert abs(fit["gamma"] - 0.2) < 0.25


def test_posterior_sampler_runs():
    xs = m.gp_sample(1.0, 0.1, 2000, seed=3)
    chain = m.sample_posterior(xs, 200, chain_length=500, burn_in=200, seed=9)
    assert len(chain["sigma"]) == 500
    assert len(chain["gamma"]) == 500
    assert 0.01 < chain["acceptance_rate"] < 0.99


def test_extreme_level_and_quantile():
    # c = 2, gamma = -0.5: p = c^{1/gamma} k/n = k/(4n) ... here 2^{-2} = 1/4.
    p = m.extreme_level(2.0, -0.5, 100, 1000)
    assert p == pytest.approx(0.025)
    q = m.extreme_quantile(1.65, -0.34, 34.0, 169, 3140, p=0.0070076873328005062)
    assert q == pytest.approx(36.4264705882, abs=1e-6)


def test_predictive_interval_orders():
    lo, hi = m.predictive_interval(1.65, -0.34, 34.0, 169, 3140,
                                   p=169 / 3140, alpha=0.05)
    assert lo < hi
    assert lo > 34.0
    d = m.peak_density(0.5 * (lo + hi), 1.65, -0.34, 34.0, 169, 3140,
                       p=169 / 3140)
    assert d > 0.0


def test_hellinger_known_value():
    # Two exponentials with rates 1 and 4.
    h = m.hellinger_gp(1.0, 0.0, 0.25, 0.0)
    assert h == pytest.approx(math.sqrt(1.0 - 0.8), abs=1e-9)
    assert m.hellinger_gp(1.3, -0.2, 1.3, -0.2) == pytest.approx(0.0, abs=1e-7)


def test_errors_are_typed():
    with pytest.raises(m.DomainError):
        m.gp_quantile(1.5, 1.0, 0.0)
    with pytest.raises(m.DomainError):
        m.gp_density(0.0, -1.0, 0.0)
