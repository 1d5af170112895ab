"""Reserve-backed issuance mechanism with a price window.

The issuer quotes both sides of the peg in USD and settles in backing coins
at the going price p_t:

* minting one stablecoin costs (1 + eps_alpha) / p_t backing coins,
* redeeming one pays (1 - eps_beta) / p_t backing coins while reserves last;
  a redemption the reserves cannot cover pays out the entire reserves.

Fees are price adjustments on the two legs, never separate balances, so
every backing coin moves between the trader and the reserves and the sum
(reserves + trader backing) is conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = ["MechanismState", "mint_cost", "redeem_payout", "apply_trade"]


@dataclass(frozen=True)
class MechanismState:
    """Reserves (backing coins) plus the fee schedule.

    depleted_at records the timestep at which reserves first hit zero, and
    stays None while the window is intact.
    """

    reserves: float
    eps_alpha: float = 0.0
    eps_beta: float = 0.0
    depleted_at: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.reserves) and self.reserves >= 0.0):
            raise ValueError("reserves must be finite and >= 0")
        if not (self.eps_alpha >= 0.0 and math.isfinite(self.eps_alpha)):
            raise ValueError("eps_alpha must be >= 0")
        if not (0.0 <= self.eps_beta < 1.0):
            raise ValueError("eps_beta must lie in [0, 1)")


def mint_cost(state: MechanismState, p_t: float) -> float:
    """Backing coins charged per stablecoin minted at price p_t."""
    if not (p_t > 0.0):
        raise ValueError("price must be positive")
    return (1.0 + state.eps_alpha) / p_t


def redeem_payout(state: MechanismState, qty: float, p_t: float) -> float:
    """Backing coins paid for redeeming qty stablecoins at price p_t.

    Capped at the reserves: a redemption that would overdraw them instead
    empties them (and breaks the window).
    """
    if not (p_t > 0.0):
        raise ValueError("price must be positive")
    if qty < 0.0:
        raise ValueError("redeem quantity must be >= 0")
    return min(qty * (1.0 - state.eps_beta) / p_t, state.reserves)


def apply_trade(state: MechanismState, delta: float, p_t: float, t: int = 0) -> tuple[MechanismState, float]:
    """Settle a trade of delta stablecoins (buy > 0, sell < 0) at price p_t.

    Returns (new state, backing-coin flow to the trader): negative flow on a
    mint (the trader pays), positive on a redemption.  Reserve change and
    flow cancel exactly.  delta == 0 is the identity.
    """
    if delta == 0.0:
        return state, 0.0
    if delta > 0.0:
        cost = delta * mint_cost(state, p_t)
        return replace(state, reserves=state.reserves + cost), -cost
    payout = redeem_payout(state, -delta, p_t)
    reserves = state.reserves - payout
    depleted_at = state.depleted_at
    if reserves == 0.0 and depleted_at is None:
        depleted_at = t
    return replace(state, reserves=reserves, depleted_at=depleted_at), payout
