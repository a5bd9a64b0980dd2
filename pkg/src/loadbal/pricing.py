"""Dynamic posted prices on rounded-down speeds.

Speeds are rounded down to a power of ``rounding_base`` and announced.  Before
each arrival every speed class keeps a single *active* machine (the one with
the smallest makespan); the rest are priced at infinity.  Sorting the active
machines by speed, the fastest costs nothing and each slower machine costs

    increment_k = s_k / s_{k+1} * (C_{k+1} - C_k)

more than its faster neighbour.  The arriving job then picks the machine
minimising ``C_i + size / s_i + price_i``.  Prices never look at the incoming
job, so reporting the true size is a dominant strategy, and the resulting
schedule keeps makespans non-decreasing in speed.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Optional

from ._validation import InvalidInputError, Q, as_fraction, check_positive
from .base import BaseMechanism, register
from .core import INF, Instance, MechanismOutcome, ScheduleState, StructuralError, TieBreakOrder

COST_TIE_RULES = ("prefer-faster", "prefer-slower", "prefer-order")


class WellBehavedViolation(RuntimeError):
    """Prices were requested for a state whose makespans decrease with speed."""


@dataclass(frozen=True)
class PprConfig:
    rounding_base: Q = Q(2)
    tie_break: Optional[TieBreakOrder] = None
    cost_tie_rule: str = "prefer-faster"

    def __post_init__(self):
        base = as_fraction(self.rounding_base, "rounding_base")
        if base < 1:
            raise InvalidInputError(f"rounding_base must be >= 1, got {base}")
        object.__setattr__(self, "rounding_base", base)
        if self.cost_tie_rule not in COST_TIE_RULES:
            raise InvalidInputError(f"cost_tie_rule must be one of {COST_TIE_RULES}")


@dataclass(frozen=True)
class PriceVector:
    """Posted prices before one arrival.

    ``prices[i]`` is machine ``i``'s price (``math.inf`` when inactive);
    ``active`` lists the priced machines slowest first and ``increments`` the
    matching price steps (the last one is always 0).
    """

    prices: tuple
    active: tuple[int, ...]
    increments: tuple[Q, ...]


def round_speed(s, base=2) -> Q:
    """Largest integer power of ``base`` not exceeding ``s`` (``s`` itself if base is 1)."""
    s = check_positive(s, "speed")
    base = as_fraction(base, "base")
    if base < 1:
        raise InvalidInputError(f"base must be >= 1, got {base}")
    if base == 1:
        return s
    log_s = math.log(int(s.numerator)) - math.log(int(s.denominator))
    log_b = math.log(int(base.numerator)) - math.log(int(base.denominator))
    k = math.floor(log_s / log_b)
    # float estimate may be off by one near exact powers
    while base**k > s:
        k -= 1
    while base ** (k + 1) <= s:
        k += 1
    return base**k


def speed_classes(speeds) -> list[list[int]]:
    """Machine ids grouped by equal speed, slowest group first."""
    groups = {}
    for i, s in enumerate(speeds):
        groups.setdefault(s, []).append(i)
    return [groups[s] for s in sorted(groups)]


def active_machines(
    state: ScheduleState, order: TieBreakOrder, classes: Optional[list[list[int]]] = None
) -> list[int]:
    """The minimum-makespan machine of every speed class (ties by ``order``), slowest first."""
    if classes is None:
        classes = speed_classes(state.announced_speeds)
    spans, rank = state.makespans, order.rank
    return [min(g, key=lambda i: (spans[i], rank[i])) if len(g) > 1 else g[0] for g in classes]


def compute_prices(
    state: ScheduleState,
    order: Optional[TieBreakOrder] = None,
    active: Optional[list[int]] = None,
) -> PriceVector:
    """Prices from current makespans and announced speeds only (never the next job)."""
    if active is None:
        active = active_machines(state, order or TieBreakOrder.identity(state.m))
    speeds = state.announced_speeds
    spans = state.makespans
    for a, b in zip(active, active[1:]):
        if not speeds[a] < speeds[b]:
            raise StructuralError("active machines must have strictly increasing speeds")

    increments = [_ZERO] * len(active)
    prices = [INF] * state.m
    running = _ZERO
    prices[active[-1]] = running
    for k in range(len(active) - 2, -1, -1):
        i, nxt = active[k], active[k + 1]
        gap = spans[nxt] - spans[i]
        if gap < 0:
            raise WellBehavedViolation(
                f"machine {i} (speed {speeds[i]}) has makespan {spans[i]} above "
                f"faster machine {nxt} (speed {speeds[nxt]}, makespan {spans[nxt]})"
            )
        inc = _ratio(speeds[i], speeds[nxt]) * gap
        increments[k] = inc
        running += inc
        prices[i] = running
    return PriceVector(tuple(prices), tuple(active), tuple(increments))


_ZERO = Q(0)


@lru_cache(maxsize=65536)
def _ratio(a: Q, b: Q) -> Q:
    return a / b


def selfish_choice(
    state: ScheduleState,
    prices: PriceVector,
    reported_size,
    rule: str = "prefer-faster",
    order: Optional[TieBreakOrder] = None,
) -> int:
    """Machine minimising completion time plus price for a job of ``reported_size``."""
    q = check_positive(reported_size, "reported_size")
    if rule not in COST_TIE_RULES:
        raise InvalidInputError(f"cost_tie_rule must be one of {COST_TIE_RULES}")
    rank = (order or TieBreakOrder.identity(state.m)).rank
    speeds = state.announced_speeds
    spans = state.makespans
    candidates = [i for i in prices.active if prices.prices[i] is not INF]
    if not candidates:
        raise StructuralError("every machine is priced at infinity")

    best_cost, best = None, []
    for i in candidates:
        cost = spans[i] + q / speeds[i] + prices.prices[i]
        if best_cost is None or cost < best_cost:
            best_cost, best = cost, [i]
        elif cost == best_cost:
            best.append(i)
    if len(best) == 1:
        return best[0]
    if rule == "prefer-faster":
        return min(best, key=lambda i: (-speeds[i], rank[i]))
    if rule == "prefer-slower":
        return min(best, key=lambda i: (speeds[i], rank[i]))
    return min(best, key=lambda i: rank[i])


@register
class PostedPriceScheduler(BaseMechanism):
    """Posted prices for rounded-down speeds.

    Parameters
    ----------
    rounding_base : rational >= 1, default 2
        Announced speeds are rounded down to powers of this base; 1 disables
        rounding (the strictly well-behaved variant), 4 is the two-machine
        truthful variant.
    cost_tie_rule : {"prefer-faster", "prefer-slower", "prefer-order"}
        How exact cost ties between speed classes are resolved.
    seed : int or None
        Seed of the tie-break order; ``None`` uses the instance's seed.
    tie_break : {"seeded", "identity"}
    """

    name = "ppr"

    def __init__(self, rounding_base=2, cost_tie_rule="prefer-faster", seed=None, tie_break="seeded"):
        self.rounding_base = rounding_base
        self.cost_tie_rule = cost_tie_rule
        self.seed = seed
        self.tie_break = tie_break

    def announce(self, speeds):
        return tuple(round_speed(s, self.rounding_base) for s in speeds)

    def chooser(self, order):
        config = PprConfig(self.rounding_base, order, self.cost_tie_rule)
        classes = []

        def choose(state, job):
            if not classes:
                classes.extend(speed_classes(state.announced_speeds))
            active = active_machines(state, order, classes)
            pv = compute_prices(state, active=active)
            i = selfish_choice(state, pv, job.reported_size, config.cost_tie_rule, order)
            return i, pv.prices[i], pv.prices

        return choose


def run_ppr(instance: Instance, config: Optional[PprConfig] = None) -> MechanismOutcome:
    config = config or PprConfig()
    mech = PostedPriceScheduler(config.rounding_base, config.cost_tie_rule)
    return mech.run(instance, config.tie_break)
