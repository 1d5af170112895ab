"""Price-model tests.

The conditional-mean closed form is the load-bearing piece: everything in the
waiting-interval optimisation calls it thousands of times, so it is checked
here against adaptive quadrature (scipy) on random draws, not just spot
values.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from pegstress.prices import (
    NormalSpec,
    PriceSeries,
    WalkSpec,
    cdf,
    cond_mean_above,
    cond_mean_below,
    derive_seed,
    load_csv,
    pdf,
    random_walk,
    sample_iid,
    step_stats,
    trunc_cdf,
)

STD = NormalSpec(mu=0.0, sigma2=1.0, support_lo=-40.0, support_hi=40.0)
EX1 = NormalSpec(mu=100.0, sigma2=100.0)


def quad_moment(spec, a, b):
    """Oracle: integral of x*f(x) over [a, b] by adaptive quadrature."""
    val, _ = integrate.quad(lambda x: x * pdf(spec, x), a, b, epsabs=1e-12, epsrel=1e-12, limit=400)
    return val


def quad_mass(spec, a, b):
    val, _ = integrate.quad(lambda x: pdf(spec, x), a, b, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


class TestDensity:
    def test_standard_normal_at_mode(self):
        assert pdf(STD, 0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-12)

    def test_wide_normal_at_mode(self):
        assert pdf(EX1, 100.0) == pytest.approx(1.0 / math.sqrt(200.0 * math.pi), abs=1e-12)

    def test_point_mass_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            pdf(NormalSpec(mu=5.0, sigma2=0.0), 5.0)

    def test_cdf_at_mean(self):
        assert cdf(EX1, 100.0) == pytest.approx(0.5, abs=1e-14)

    def test_cdf_standard_quantile(self):
        # 90th percentile of the standard normal.
        assert cdf(STD, 1.2816) == pytest.approx(0.9000, abs=1e-4)

    def test_cdf_far_left(self):
        assert cdf(STD, -39.0) < 1e-300 or cdf(STD, -39.0) == 0.0

    def test_cdf_monotone(self):
        rng = np.random.default_rng(5)
        xs = np.sort(rng.uniform(-30.0, 30.0, size=200))
        vals = [cdf(STD, float(x)) for x in xs]
        assert all(u <= v for u, v in zip(vals, vals[1:]))

    def test_trunc_cdf_clamps_and_renormalises(self):
        spec = NormalSpec(mu=100.0, sigma2=100.0, support_lo=90.0, support_hi=110.0)
        assert trunc_cdf(spec, 80.0) == 0.0
        assert trunc_cdf(spec, 120.0) == 1.0
        assert trunc_cdf(spec, 100.0) == pytest.approx(0.5, abs=1e-12)
        # Renormalisation pushes mass inward relative to the raw cdf.
        assert trunc_cdf(spec, 105.0) > cdf(spec, 105.0)


class TestConditionalMeans:
    def test_half_normal_below(self):
        # E[x | x <= 0] for the standard normal is -sqrt(2/pi).
        assert cond_mean_below(STD, 0.0) == pytest.approx(-0.7978845608, abs=1e-4)

    def test_half_normal_above(self):
        assert cond_mean_above(STD, 0.0) == pytest.approx(0.7978845608, abs=1e-4)

    def test_whole_support_gives_mean(self):
        assert cond_mean_below(EX1, EX1.support_hi) == pytest.approx(100.0, abs=1e-6)
        assert cond_mean_above(EX1, EX1.support_lo) == pytest.approx(100.0, abs=1e-6)

    def test_empty_event_errors(self):
        with pytest.raises(ValueError, match="empty conditioning event"):
            cond_mean_below(EX1, EX1.support_lo)
        with pytest.raises(ValueError, match="empty conditioning event"):
            cond_mean_above(EX1, EX1.support_hi)

    def test_symmetry_about_mean(self):
        for d in (3.0, 10.0, 25.0):
            above = cond_mean_above(EX1, 100.0 + d)
            below = cond_mean_below(EX1, 100.0 - d)
            assert above + below == pytest.approx(200.0, abs=1e-9)

    def test_sandwich_property(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            mu = rng.uniform(-50.0, 150.0)
            sigma2 = rng.uniform(0.25, 400.0)
            spec = NormalSpec(mu=mu, sigma2=sigma2, support_lo=mu - 8 * math.sqrt(sigma2),
                              support_hi=mu + 8 * math.sqrt(sigma2))
            x = rng.uniform(mu - 2 * math.sqrt(sigma2), mu + 2 * math.sqrt(sigma2))
            below = cond_mean_below(spec, x)
            above = cond_mean_above(spec, x)
            assert below <= x <= above
            assert below <= above

    def test_matches_quadrature(self):
        # The closed form mu*mass - sigma2*(f(b) - f(a)) against scipy.quad;
        # the acceptance suite runs the full 1,000-draw version.
        rng = np.random.default_rng(23)
        for _ in range(60):
            mu = rng.uniform(-20.0, 120.0)
            sigma2 = rng.uniform(0.5, 300.0)
            sigma = math.sqrt(sigma2)
            spec = NormalSpec(mu=mu, sigma2=sigma2, support_lo=mu - 9 * sigma, support_hi=mu + 9 * sigma)
            a, b = sorted(rng.uniform(mu - 5 * sigma, mu + 5 * sigma, size=2))
            if b - a < 1e-3 * sigma:
                continue
            closed = mu * (cdf(spec, b) - cdf(spec, a)) - sigma2 * (pdf(spec, b) - pdf(spec, a))
            oracle = quad_moment(spec, a, b)
            assert closed == pytest.approx(oracle, abs=1e-8 * max(1.0, abs(oracle)))

    def test_cond_mean_is_moment_ratio(self):
        spec = NormalSpec(mu=100.0, sigma2=100.0)
        for x in (92.0, 100.0, 113.0):
            mass = quad_mass(spec, spec.support_lo, x)
            oracle = quad_moment(spec, spec.support_lo, x) / mass
            assert cond_mean_below(spec, x) == pytest.approx(oracle, rel=1e-9)


class TestSampling:
    def test_point_mass_is_constant(self):
        series = sample_iid(NormalSpec(mu=7.0, sigma2=0.0), 5, seed=123)
        assert series.prices == (7.0,) * 5

    def test_sample_mean_near_mu(self):
        series = sample_iid(EX1, 100_000, seed=7)
        assert abs(sum(series.prices) / len(series.prices) - 100.0) < 0.2

    def test_samples_respect_support(self):
        spec = NormalSpec(mu=100.0, sigma2=100.0, support_lo=95.0, support_hi=105.0)
        series = sample_iid(spec, 2_000, seed=3)
        assert min(series.prices) >= 95.0
        assert max(series.prices) <= 105.0

    def test_deterministic_per_seed(self):
        a = sample_iid(EX1, 50, seed=11)
        b = sample_iid(EX1, 50, seed=11)
        c = sample_iid(EX1, 50, seed=12)
        assert a.prices == b.prices
        assert a.prices != c.prices

    def test_walk_pure_drift(self):
        series = random_walk(WalkSpec(mu_step=1.0, sigma_step=0.0, p0=10.0), 4, seed=0)
        assert series.prices == (10.0, 11.0, 12.0, 13.0)

    def test_walk_floor_clamp_counted(self):
        spec = WalkSpec(mu_step=-50.0, sigma_step=0.0, p0=10.0, floor=1.0)
        series = random_walk(spec, 5, seed=0)
        assert series.prices == (10.0, 1.0, 1.0, 1.0, 1.0)
        assert series.clamp_count == 4

    def test_walk_deterministic(self):
        spec = WalkSpec(mu_step=-0.056, sigma_step=16.7, p0=3047.70)
        a = random_walk(spec, 300, seed=9)
        b = random_walk(spec, 300, seed=9)
        assert a.prices == b.prices
        assert min(a.prices) > 0.0


class TestCsv:
    def test_loads_in_order(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("timestamp,price\n1,1.0\n2,2.0\n3,3.0\n")
        series = load_csv(str(f))
        assert series.prices == (1.0, 2.0, 3.0)
        assert series.source == "csv"

    def test_negative_price_names_row(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("timestamp,price\n1,1.0\n2,-5\n")
        with pytest.raises(ValueError, match="row 3"):
            load_csv(str(f))

    def test_non_numeric_names_row(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("timestamp,price\n1,abc\n")
        with pytest.raises(ValueError, match="row 2"):
            load_csv(str(f))

    def test_missing_column(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("timestamp,close\n1,1.0\n")
        with pytest.raises(ValueError, match="price"):
            load_csv(str(f))

    def test_empty_file(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("timestamp,price\n")
        with pytest.raises(ValueError, match="empty|no rows"):
            load_csv(str(f))

    def test_custom_column_names(self, tmp_path):
        f = tmp_path / "p.csv"
        f.write_text("ts,open\n1,42.5\n")
        series = load_csv(str(f), timestamp_column="ts", price_column="open")
        assert series.prices == (42.5,)


class TestStepStats:
    def test_single_step(self):
        series = PriceSeries(prices=(100.0, 110.0), source="literal")
        walk = step_stats(series)
        assert (walk.mu_step, walk.sigma_step, walk.p0) == (10.0, 0.0, 100.0)

    def test_constant_series(self):
        series = PriceSeries(prices=(5.0, 5.0, 5.0), source="literal")
        walk = step_stats(series)
        assert (walk.mu_step, walk.sigma_step, walk.p0) == (0.0, 0.0, 5.0)

    def test_too_short(self):
        with pytest.raises(ValueError):
            step_stats(PriceSeries(prices=(1.0,), source="literal"))

    def test_round_trips_a_drift_walk(self):
        series = random_walk(WalkSpec(mu_step=2.0, sigma_step=0.0, p0=50.0), 10, seed=0)
        walk = step_stats(series)
        assert walk.mu_step == pytest.approx(2.0)
        assert walk.sigma_step == pytest.approx(0.0)


class TestSeedDerivation:
    def test_stable(self):
        assert derive_seed(0, 0) == derive_seed(0, 0)
        assert derive_seed(123, 4) == derive_seed(123, 4)

    def test_distinct_streams(self):
        seeds = {derive_seed(99, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_distinct_masters(self):
        assert derive_seed(1, 0) != derive_seed(2, 0)

    def test_u64_range(self):
        for i in range(50):
            s = derive_seed(2**63, i)
            assert 0 <= s < 2**64


class TestSpecValidation:
    def test_default_support_six_sigma(self):
        assert EX1.support_lo == pytest.approx(40.0)
        assert EX1.support_hi == pytest.approx(160.0)

    def test_default_support_floored_positive(self):
        spec = NormalSpec(mu=1.0, sigma2=100.0)
        assert spec.support_lo > 0.0

    def test_bad_support_order(self):
        with pytest.raises(ValueError):
            NormalSpec(mu=0.0, sigma2=1.0, support_lo=2.0, support_hi=1.0)

    def test_negative_variance(self):
        with pytest.raises(ValueError):
            NormalSpec(mu=0.0, sigma2=-1.0)

    def test_walk_requires_positive_floor(self):
        with pytest.raises(ValueError):
            WalkSpec(mu_step=0.0, sigma_step=1.0, p0=10.0, floor=0.0)

    def test_series_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PriceSeries(prices=(1.0, 0.0), source="literal")

    def test_series_rejects_empty(self):
        with pytest.raises(ValueError):
            PriceSeries(prices=(), source="literal")
