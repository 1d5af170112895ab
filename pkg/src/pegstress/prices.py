"""Price models and series handling.

Three ways to produce a price path, all yielding strictly positive prices:

* i.i.d. draws from a (truncated) normal distribution,
* an additive Gaussian random walk clamped at a positive floor,
* a fixed series loaded from CSV or given literally.

The normal-distribution calculus lives here too.  Conditional means over an
interval never integrate ``x * f(x)`` numerically; they use the exact
expansion

    integral_a^b x f(x) dx = mu * integral_a^b f(x) dx - sigma^2 * (f(b) - f(a)),

which follows from f'(x) = -(x - mu) / sigma^2 * f(x).  Everything downstream
(waiting intervals, round matrices) leans on that identity, so it is kept in
one place and tested against quadrature.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NormalSpec",
    "WalkSpec",
    "PriceSeries",
    "pdf",
    "cdf",
    "trunc_cdf",
    "cond_mean_below",
    "cond_mean_above",
    "sample_iid",
    "random_walk",
    "load_csv",
    "step_stats",
    "derive_seed",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Conditioning events with less mass than this are treated as empty: the
# closed-form ratio below loses all significant digits well before the
# probability itself underflows.
_MIN_EVENT_PROB = 1e-13

_POSITIVE_FLOOR = 1e-6


@dataclass(frozen=True)
class NormalSpec:
    """Normal price model N(mu, sigma2) restricted to [support_lo, support_hi].

    Default support is mu +/- 6 sigma, with the lower edge floored at a small
    positive value so the model can be used as a price source.  Explicit bounds
    may place the support anywhere (tests exercise standard-normal cases);
    price-generating entry points reject non-positive lower bounds themselves.

    sigma2 == 0 denotes a point mass at mu.
    """

    mu: float
    sigma2: float
    support_lo: float = field(default=math.nan)
    support_hi: float = field(default=math.nan)

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not math.isfinite(self.sigma2) or self.sigma2 < 0.0:
            raise ValueError("sigma2 must be finite and >= 0")
        sigma = math.sqrt(self.sigma2)
        if math.isnan(self.support_lo):
            lo = max(self.mu - 6.0 * sigma, _POSITIVE_FLOOR)
            object.__setattr__(self, "support_lo", lo)
        if math.isnan(self.support_hi):
            object.__setattr__(self, "support_hi", self.mu + 6.0 * sigma)
        if not (self.support_lo < self.support_hi or self.sigma2 == 0.0):
            raise ValueError("support_lo must be < support_hi")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def is_point_mass(self) -> bool:
        return self.sigma2 == 0.0


@dataclass(frozen=True)
class WalkSpec:
    """Additive Gaussian random walk: p_{t+1} = max(p_t + step, floor)."""

    mu_step: float
    sigma_step: float
    p0: float
    floor: float = _POSITIVE_FLOOR

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu_step):
            raise ValueError("mu_step must be finite")
        if not math.isfinite(self.sigma_step) or self.sigma_step < 0.0:
            raise ValueError("sigma_step must be finite and >= 0")
        if not (self.p0 > 0.0 and math.isfinite(self.p0)):
            raise ValueError("p0 must be a finite positive price")
        if not (self.floor > 0.0):
            raise ValueError("floor must be positive so 1/p stays defined")


@dataclass(frozen=True)
class PriceSeries:
    """Immutable price path plus provenance (source tag, seed, clamp count)."""

    prices: tuple[float, ...]
    source: str
    seed: int | None = None
    clamp_count: int = 0

    def __post_init__(self) -> None:
        if len(self.prices) == 0:
            raise ValueError("price series must contain at least one price")
        for idx, p in enumerate(self.prices):
            if not (math.isfinite(p) and p > 0.0):
                raise ValueError(f"price at index {idx} must be finite and > 0, got {p!r}")

    def __len__(self) -> int:
        return len(self.prices)


def pdf(spec: NormalSpec, x: float) -> float:
    """Normal density of N(mu, sigma2) at x (no truncation renormalisation)."""
    if spec.is_point_mass:
        raise ValueError("degenerate distribution: pdf undefined for a point mass (sigma2 == 0)")
    z = (x - spec.mu) / spec.sigma
    return math.exp(-0.5 * z * z) / (spec.sigma * _SQRT2PI)


def cdf(spec: NormalSpec, x: float) -> float:
    """Normal CDF of N(mu, sigma2) at x (no truncation renormalisation)."""
    if spec.is_point_mass:
        return 0.0 if x < spec.mu else 1.0
    z = (x - spec.mu) / spec.sigma
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


def trunc_cdf(spec: NormalSpec, x: float) -> float:
    """CDF renormalised to the truncated support; 0 below it, 1 above it."""
    if spec.is_point_mass:
        return 0.0 if x < spec.mu else 1.0
    if x <= spec.support_lo:
        return 0.0
    if x >= spec.support_hi:
        return 1.0
    lo_mass = cdf(spec, spec.support_lo)
    z = cdf(spec, spec.support_hi) - lo_mass
    if z <= 0.0:
        raise ValueError("truncated support carries no probability mass")
    return (cdf(spec, x) - lo_mass) / z


def _cond_mean(spec: NormalSpec, a: float, b: float) -> float:
    """E[p | a <= p <= b] via the x*f expansion; a, b inside the support."""
    df = cdf(spec, b) - cdf(spec, a)
    if df <= _MIN_EVENT_PROB:
        # The interval is so thin that the expansion ratio is pure noise;
        # to second order the conditional mean is the midpoint.
        if b - a > 1e-6 * max(1.0, spec.sigma):
            raise ValueError("empty conditioning event (numerically zero probability)")
        return 0.5 * (a + b)
    return spec.mu - spec.sigma2 * (pdf(spec, b) - pdf(spec, a)) / df


def cond_mean_below(spec: NormalSpec, x: float) -> float:
    """E[p | p <= x] over the truncated support."""
    if spec.is_point_mass:
        if x < spec.mu:
            raise ValueError("empty conditioning event (zero probability)")
        return spec.mu
    if x <= spec.support_lo:
        raise ValueError("empty conditioning event: {p <= x} has no mass below the support")
    return _cond_mean(spec, spec.support_lo, min(x, spec.support_hi))


def cond_mean_above(spec: NormalSpec, x: float) -> float:
    """E[p | p >= x] over the truncated support."""
    if spec.is_point_mass:
        if x > spec.mu:
            raise ValueError("empty conditioning event (zero probability)")
        return spec.mu
    if x >= spec.support_hi:
        raise ValueError("empty conditioning event: {p >= x} has no mass above the support")
    return _cond_mean(spec, max(x, spec.support_lo), spec.support_hi)


def sample_iid(spec: NormalSpec, n: int, seed: int) -> PriceSeries:
    """Draw n i.i.d. prices, clipped to the truncated support.

    Identical (spec, n, seed) always yields the identical series: draws come
    from numpy's PCG64 generator seeded directly with ``seed``.
    """
    if n <= 0:
        raise ValueError("n must be >= 1")
    if spec.is_point_mass:
        values = np.full(n, spec.mu)
    else:
        rng = np.random.default_rng(seed)
        values = rng.normal(spec.mu, spec.sigma, size=n)
        np.clip(values, spec.support_lo, spec.support_hi, out=values)
    return PriceSeries(prices=tuple(float(v) for v in values), source="iid", seed=seed)


def random_walk(spec: WalkSpec, n: int, seed: int) -> PriceSeries:
    """Generate n prices of the clamped walk; clamp events are counted."""
    if n <= 0:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    steps = rng.normal(spec.mu_step, spec.sigma_step, size=n - 1)
    prices = [spec.p0]
    clamps = 0
    p = spec.p0
    for s in steps:
        p = p + float(s)
        if p < spec.floor:
            p = spec.floor
            clamps += 1
        prices.append(p)
    return PriceSeries(prices=tuple(prices), source="walk", seed=seed, clamp_count=clamps)


def load_csv(path: str, timestamp_column: str = "timestamp", price_column: str = "price") -> PriceSeries:
    """Load a price series from a CSV file with a header row.

    Rows are kept in file order; timestamps are not parsed, only required to
    be present.  Non-numeric or non-positive prices are rejected with the
    offending row number (1-based, header is row 1).
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file (missing header row)")
        for col in (timestamp_column, price_column):
            if col not in reader.fieldnames:
                raise ValueError(f"{path}: missing column {col!r} (header has {reader.fieldnames})")
        prices: list[float] = []
        for row_no, row in enumerate(reader, start=2):
            raw = row.get(price_column)
            if raw is None or raw.strip() == "":
                raise ValueError(f"{path}: row {row_no}: missing price value")
            try:
                p = float(raw)
            except ValueError:
                raise ValueError(f"{path}: row {row_no}: non-numeric price {raw!r}") from None
            if not (math.isfinite(p) and p > 0.0):
                raise ValueError(f"{path}: row {row_no}: price must be finite and > 0, got {raw!r}")
            prices.append(p)
    if not prices:
        raise ValueError(f"{path}: no data rows")
    return PriceSeries(prices=tuple(prices), source="csv")


def step_stats(series: PriceSeries) -> WalkSpec:
    """Fit a WalkSpec to a series: mean/population-std of first differences."""
    if len(series) < 2:
        raise ValueError("need at least 2 prices to compute step statistics")
    diffs = np.diff(np.asarray(series.prices))
    return WalkSpec(
        mu_step=float(diffs.mean()),
        sigma_step=float(diffs.std()),  # population std
        p0=series.prices[0],
    )


def derive_seed(master_seed: int, index: int) -> int:
    """Derive a per-trial seed from (master_seed, trial index).

    SplitMix64-style finalising mix: trial streams are decorrelated, stable
    across runs and platforms, and independent of execution order.
    """
    mask = (1 << 64) - 1
    z = (master_seed * 0x9E3779B97F4A7C15 + index + 1) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask
