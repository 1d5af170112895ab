"""Stability criteria and profit oracles.

The long-run stability of the window mechanism hinges on the tail of 1/p_t:
with constant fee rates the window survives a sensitive trader iff

    L := (1 + eps_alpha) liminf(1/p_t) - (1 - eps_beta) limsup(1/p_t) > 0

(and only if L >= 0).  With a symmetric fee eps on both legs the threshold is

    eps* = (limsup - liminf) / (limsup + liminf).

Finite data cannot produce true limits, so tail_spread reports trailing-window
min/max of 1/p as labelled estimates.

The profit oracles quantify what an omniscient trader could extract.  A
schedule is all-in/all-out: minting at price p turns one backing coin into
p / (1 + eps_alpha) stablecoins, redeeming turns one stablecoin into
(1 - eps_beta) / p backing coins, so a buy-sell pair multiplies wealth by
(p_buy / p_sell) * (1 - eps_beta) / (1 + eps_alpha).  The exhaustive oracle
enumerates every alternating schedule on short series; the linear-time ledger
(best all-out / best all-in wealth so far) provably attains the same maxima
and is used everywhere else.  Both build their products from the identical
per-action factor expressions so their outputs agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mechanism import MechanismState, apply_trade
from .prices import PriceSeries

__all__ = [
    "TailSpread",
    "tail_spread",
    "L_criterion",
    "stability_label",
    "min_fee",
    "converging_spread_series",
    "optimal_profit_bruteforce",
    "greedy_threshold_profit",
    "sensitivity_check",
    "realized_profit_trace",
    "OmniscientRun",
    "run_omniscient",
]

BRUTEFORCE_MAX_LEN = 14
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class TailSpread:
    """Trailing-window estimates of liminf/limsup of 1/p (heuristic proxies)."""

    inv_liminf_est: float
    inv_limsup_est: float
    tail_fraction: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.inv_liminf_est <= self.inv_limsup_est):
            raise ValueError("need 0 <= inv_liminf_est <= inv_limsup_est")
        if not (0.0 < self.tail_fraction <= 1.0):
            raise ValueError("tail_fraction must lie in (0, 1]")


def tail_spread(series: PriceSeries, tail_fraction: float = 0.5) -> TailSpread:
    """Estimate the 1/p tail spread from the trailing window of a series.

    The window holds the last ceil(tail_fraction * len) prices; min/max of
    1/p over it stand in for liminf/limsup.  Finite windows can only
    approximate true limits, so treat the output as an estimate.
    """
    if not (0.0 < tail_fraction <= 1.0):
        raise ValueError("tail_fraction must lie in (0, 1]")
    count = math.ceil(tail_fraction * len(series))
    tail = series.prices[len(series) - count :]
    if not tail:
        raise ValueError("empty tail")
    invs = [1.0 / p for p in tail]
    return TailSpread(
        inv_liminf_est=min(invs), inv_limsup_est=max(invs), tail_fraction=tail_fraction
    )


def L_criterion(eps_alpha: float, eps_beta: float, spread: TailSpread) -> float:
    """L = (1 + eps_alpha) * liminf(1/p) - (1 - eps_beta) * limsup(1/p)."""
    return (1 + eps_alpha) * spread.inv_liminf_est - (1 - eps_beta) * spread.inv_limsup_est


def stability_label(
    eps_alpha: float, eps_beta: float, spread: TailSpread, boundary_tol: float = BOUNDARY_TOL
) -> str:
    """Classify the L criterion: "stable", "boundary", or "at-risk".

    boundary_tol is relative to the magnitude of the two terms, so the label
    never flips on rounding noise.  Pass a larger tolerance when the spread
    itself is a rough finite-sample estimate.
    """
    value = L_criterion(eps_alpha, eps_beta, spread)
    scale = (1 + eps_alpha) * spread.inv_liminf_est + (1 - eps_beta) * spread.inv_limsup_est
    if abs(value) <= boundary_tol * max(scale, 1e-300):
        return "boundary"
    return "stable" if value > 0 else "at-risk"


def min_fee(spread: TailSpread):
    """Symmetric fee threshold (limsup - liminf) / (limsup + liminf) of 1/p."""
    total = spread.inv_limsup_est + spread.inv_liminf_est
    if total == 0:
        raise ValueError("degenerate spread: both tail estimates are zero")
    return (spread.inv_limsup_est - spread.inv_liminf_est) / total


def converging_spread_series(inv_lo: float, inv_hi: float, pairs: int) -> PriceSeries:
    """Series whose 1/p oscillates toward [inv_lo, inv_hi] from the outside.

    Pair k (k = 2..pairs+1) contributes inverse prices inv_lo - 1/k and
    inv_hi + 1/k, so every finite trailing window overstates the true spread:
    liminf(1/p) = inv_lo and limsup(1/p) = inv_hi in the limit, but min/max
    over any window land strictly outside.  Handy for exercising tolerance
    handling in the stability classifier.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    if not (0.0 < inv_lo <= inv_hi):
        raise ValueError("need 0 < inv_lo <= inv_hi")
    if inv_lo <= 0.5:
        raise ValueError("inv_lo must exceed 0.5 so every perturbed value stays positive")
    prices = []
    for k in range(2, pairs + 2):
        prices.append(1.0 / (inv_lo - 1.0 / k))
        prices.append(1.0 / (inv_hi + 1.0 / k))
    return PriceSeries(prices=tuple(prices), source="converging_spread")


def _buy_factor(p: float, eps_alpha: float) -> float:
    # Stablecoins minted per backing coin spent.
    return p / (1.0 + eps_alpha)


def _sell_factor(p: float, eps_beta: float) -> float:
    # Backing coins received per stablecoin redeemed.
    return (1.0 - eps_beta) / p


def optimal_profit_bruteforce(
    series: PriceSeries, eps_alpha: float, eps_beta: float, n0: float = 1.0
) -> tuple[float, ...]:
    """Optimal-trader profit trace by exhaustive schedule enumeration.

    Every alternating buy/sell schedule is a subset of timesteps read in
    order (odd positions buy, even positions sell); subsets ending on a buy
    never help backing profit and are skipped.  s_t is the best wealth
    multiple completed by step t, minus 1, scaled by n0.  Exponential in the
    length, so the series must have at most BRUTEFORCE_MAX_LEN prices.
    """
    t_len = len(series)
    if t_len > BRUTEFORCE_MAX_LEN:
        raise ValueError(f"series too long for exhaustive search (max {BRUTEFORCE_MAX_LEN})")
    prices = series.prices
    best_done_at = [1.0] * (t_len + 1)
    for mask in range(1 << t_len):
        if bin(mask).count("1") % 2 == 1:
            continue
        wealth = 1.0
        buying = True
        last = -1
        for idx in range(t_len):
            if mask >> idx & 1:
                p = prices[idx]
                wealth *= _buy_factor(p, eps_alpha) if buying else _sell_factor(p, eps_beta)
                buying = not buying
                last = idx
        if wealth > best_done_at[last + 1]:
            best_done_at[last + 1] = wealth
    trace = []
    running = 1.0
    for t in range(1, t_len + 1):
        running = max(running, best_done_at[t])
        trace.append(n0 * (running - 1.0))
    return tuple(trace)


def greedy_threshold_profit(
    series: PriceSeries, eps_alpha: float, eps_beta: float, n0: float = 1.0
) -> tuple[float, ...]:
    """Optimal-trader profit trace in linear time.

    Tracks the best achievable all-out wealth multiple and the best all-in
    stablecoin multiple; each price may extend either by one action.  This
    dynamic program ranges over exactly the alternating schedules the
    exhaustive oracle enumerates, so the traces agree exactly.
    """
    best_out = 1.0
    best_in = 0.0
    trace = []
    for p in series.prices:
        new_in = best_out * _buy_factor(p, eps_alpha)
        new_out = best_in * _sell_factor(p, eps_beta)
        if new_in > best_in:
            best_in = new_in
        if new_out > best_out:
            best_out = new_out
        trace.append(n0 * (best_out - 1.0))
    return tuple(trace)


def sensitivity_check(r_trace, s_trace, n0: float) -> float:
    """Smallest k >= 1 with r_t >= (n0 / k) * s_t for all t.

    s_trace is the unit-endowment optimal profit trace; r_trace is the profit
    actually realized by the trader under test.  Returns math.inf ("not
    sensitive") when some r_t <= 0 while s_t > 0.
    """
    if len(r_trace) != len(s_trace):
        raise ValueError("traces must have the same length")
    k = 1.0
    for r, s in zip(r_trace, s_trace):
        if s > 0.0:
            if r <= 0.0:
                return math.inf
            k = max(k, n0 * s / r)
    return k


def realized_profit_trace(prices, n_seq, m_seq, eps_beta: float, n0: float) -> tuple[float, ...]:
    """Realized profit per step: peak liquidation value so far, minus n0.

    Liquidation value marks stablecoins at the current redemption rate
    (1 - eps_beta) / p, ignoring reserve caps; the peak is what the trader
    could have banked by stopping at its best moment, the same convention the
    profit oracles use.
    """
    if not (len(prices) == len(n_seq) == len(m_seq)):
        raise ValueError("price and holdings sequences must have the same length")
    peak = n0
    out = []
    for p, n, m in zip(prices, n_seq, m_seq):
        value = n + m * _sell_factor(p, eps_beta)
        if value > peak:
            peak = value
        out.append(peak - n0)
    return tuple(out)


@dataclass(frozen=True)
class OmniscientRun:
    """Outcome of replaying an optimal schedule against finite reserves."""

    depleted: bool
    depletion_step: int | None
    r_min: float
    final_backing: float
    steps: int


def run_omniscient(
    series: PriceSeries, eps_alpha: float, eps_beta: float, reserves0: float, n0: float = 1.0
) -> OmniscientRun:
    """Plan the optimal schedule for the whole series, then settle it for real.

    Planning ignores reserve caps (the oracle's world); settlement does not:
    a redemption the reserves cannot cover pays out what is left and breaks
    the window, at which point the run stops.
    """
    prices = series.prices
    t_len = len(prices)
    # Forward pass of the profit ledger, remembering which action won.
    best_out, best_in = 1.0, 0.0
    out_from_sell = [False] * t_len
    in_from_buy = [False] * t_len
    for t, p in enumerate(prices):
        new_in = best_out * _buy_factor(p, eps_alpha)
        new_out = best_in * _sell_factor(p, eps_beta)
        if new_in > best_in:
            best_in = new_in
            in_from_buy[t] = True
        if new_out > best_out:
            best_out = new_out
            out_from_sell[t] = True
    # Backward reconstruction of one optimal schedule (all-out at the end).
    actions = [0] * t_len  # +1 buy, -1 sell
    state_out = True
    for t in range(t_len - 1, -1, -1):
        if state_out:
            if out_from_sell[t]:
                actions[t] = -1
                state_out = False
        else:
            if in_from_buy[t]:
                actions[t] = +1
                state_out = True
    # Settlement against the actual mechanism.
    mech = MechanismState(reserves=reserves0, eps_alpha=eps_alpha, eps_beta=eps_beta)
    backing = n0
    coins = 0.0
    r_min = reserves0
    for t, (p, act) in enumerate(zip(prices, actions), start=1):
        if act == +1 and backing > 0.0:
            delta = backing * _buy_factor(p, eps_alpha)
            mech, flow = apply_trade(mech, delta, p, t)
            backing = max(backing + flow, 0.0)
            coins += delta
        elif act == -1 and coins > 0.0:
            mech, flow = apply_trade(mech, -coins, p, t)
            backing += flow
            coins = 0.0
        r_min = min(r_min, mech.reserves)
        if mech.depleted_at is not None:
            return OmniscientRun(
                depleted=True,
                depletion_step=mech.depleted_at,
                r_min=0.0,
                final_backing=backing,
                steps=t,
            )
    return OmniscientRun(
        depleted=False, depletion_step=None, r_min=r_min, final_backing=backing, steps=t_len
    )
