"""Offline optimal makespan on related machines (Q||Cmax) for small instances.

The exact search works on integers: sizes and speeds are scaled by the
lcm of their denominators and makespans are compared by cross-multiplying.
Jobs are placed largest first; machines with the same speed and load are
interchangeable, so only one of them is branched on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

from ._validation import Q, as_fraction
from .core import Instance
from .pricing import round_speed

DEFAULT_MAX_JOBS = 18
DEFAULT_NODE_BUDGET = 2_000_000


class OracleError(AssertionError):
    """An oracle produced values that contradict a known inequality."""


@dataclass(frozen=True)
class OptResult:
    value: Q
    exact: bool
    lower_bound: Q
    upper_bound: Q
    witness: Optional[tuple[int, ...]] = None  # machine per job, arrival order


def _speeds(instance: Instance, rounding_base) -> list[Q]:
    return [round_speed(s, rounding_base) for s in instance.speeds]


def _schedule_makespan(sizes, speeds, assignment) -> Q:
    loads = [Q(0)] * len(speeds)
    for p, i in zip(sizes, assignment):
        loads[i] += p
    return max((w / s for w, s in zip(loads, speeds)), default=Q(0))


def lower_bound(sizes, speeds) -> Q:
    if not sizes:
        return Q(0)
    return max(sum(sizes) / sum(speeds), max(sizes) / max(speeds))


def _list_schedule(sizes, speeds, order) -> tuple[int, ...]:
    """Earliest-completion list scheduling in the given job order."""
    loads = [Q(0)] * len(speeds)
    assignment = [0] * len(sizes)
    for j in order:
        i = min(range(len(speeds)), key=lambda k: ((loads[k] + sizes[j]) / speeds[k], k))
        loads[i] += sizes[j]
        assignment[j] = i
    return tuple(assignment)


def opt_approx(instance: Instance, rounding_base=1) -> OptResult:
    """LPT bracket: ``lower <= OPT <= upper``; exact only if the bracket closes."""
    sizes = list(instance.sizes)
    speeds = _speeds(instance, rounding_base)
    lpt_order = sorted(range(len(sizes)), key=lambda j: (-sizes[j], j))
    witness = _list_schedule(sizes, speeds, lpt_order)
    upper = _schedule_makespan(sizes, speeds, witness)
    lower = lower_bound(sizes, speeds)
    exact = lower == upper
    return OptResult(upper, exact, lower, upper, witness if exact else None)


def opt_from_witness(instance: Instance, witness, rounding_base=1) -> OptResult:
    """Bracket OPT with a known schedule; exact when it meets the lower bound.

    Useful for constructed families whose optimum is known in closed form.
    """
    sizes = list(instance.sizes)
    speeds = _speeds(instance, rounding_base)
    witness = tuple(int(i) for i in witness)
    if len(witness) != len(sizes) or any(not 0 <= i < len(speeds) for i in witness):
        raise ValueError("witness must name a machine for every job")
    upper = _schedule_makespan(sizes, speeds, witness)
    lower = lower_bound(sizes, speeds)
    exact = lower == upper
    return OptResult(upper, exact, lower, upper, witness)


def _equal_size_opt(sizes, speeds) -> tuple[int, ...]:
    # identical jobs: earliest-completion greedy is optimal
    return _list_schedule(sizes, speeds, range(len(sizes)))


def opt_exact(
    instance: Instance,
    rounding_base=1,
    max_jobs: int = DEFAULT_MAX_JOBS,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> OptResult:
    """Optimal makespan, on true speeds (``rounding_base=1``) or rounded ones.

    Falls back to :func:`opt_approx` (``exact=False``) when the instance has
    more than ``max_jobs`` jobs or the search exceeds ``node_budget`` nodes.
    """
    sizes = list(instance.sizes)
    speeds = _speeds(instance, rounding_base)
    n = len(sizes)
    if n == 0:
        zero = Q(0)
        return OptResult(zero, True, zero, zero, ())
    lower = lower_bound(sizes, speeds)
    if len(set(sizes)) == 1:
        witness = _equal_size_opt(sizes, speeds)
        value = _schedule_makespan(sizes, speeds, witness)
        return OptResult(value, True, value, value, witness)

    approx = opt_approx(instance, rounding_base)
    if approx.exact:
        return approx
    if n > max_jobs:
        return approx

    result = _branch_and_bound(sizes, speeds, approx.witness or _list_schedule(
        sizes, speeds, sorted(range(n), key=lambda j: (-sizes[j], j))), lower, node_budget)
    if result is None:
        return approx
    value, witness = result
    return OptResult(value, True, value, value, witness)


def _branch_and_bound(sizes, speeds, incumbent, lower, node_budget):
    n, m = len(sizes), len(speeds)
    size_scale = math.lcm(*(p.denominator for p in sizes))
    speed_scale = math.lcm(*(s.denominator for s in speeds))
    P = [int(p * size_scale) for p in sizes]
    S = [int(s * speed_scale) for s in speeds]
    order = sorted(range(n), key=lambda j: (-P[j], j))
    jobs = [P[j] for j in order]
    suffix = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + jobs[k]
    total_speed = sum(S)

    # incumbent makespan as integer fraction best_num / best_den (scaled units)
    inc_loads = [0] * m
    for j, i in enumerate(incumbent):
        inc_loads[i] += P[j]
    best = max((Q(w, s) for w, s in zip(inc_loads, S)))
    best_num, best_den = best.numerator, best.denominator
    best_assign = [incumbent[j] for j in order]

    # scaled lower bound: once the incumbent reaches it we are done
    lb_scaled = lower * Q(size_scale) / Q(speed_scale)
    loads = [0] * m
    assign = [0] * n
    nodes = 0
    aborted = False

    def dfs(k: int, placed: int) -> bool:
        nonlocal best_num, best_den, best_assign, nodes, aborted
        if k == n:
            cur = max(Q(loads[i], S[i]) for i in range(m))
            if cur.numerator * best_den < best_num * cur.denominator:
                best_num, best_den = cur.numerator, cur.denominator
                best_assign = assign[:]
                if Q(best_num, best_den) <= lb_scaled:
                    return True
            return False
        nodes += 1
        if nodes > node_budget:
            aborted = True
            return True
        # remaining work cannot fit strictly below the incumbent
        if (placed + suffix[k]) * best_den >= best_num * total_speed:
            return False
        p = jobs[k]
        seen = set()
        cands = []
        for i in range(m):
            key = (S[i], loads[i])
            if key in seen:
                continue
            seen.add(key)
            w = loads[i] + p
            if w * best_den < best_num * S[i]:
                cands.append((w / S[i], i))
        cands.sort()
        for _, i in cands:
            if (loads[i] + p) * best_den >= best_num * S[i]:
                continue
            loads[i] += p
            assign[k] = i
            done = dfs(k + 1, placed + p)
            loads[i] -= p
            if done:
                return True
        return False

    dfs(0, 0)
    if aborted:
        return None
    witness = [0] * n
    for pos, j in enumerate(order):
        witness[j] = best_assign[pos]
    value = _schedule_makespan(sizes, speeds, witness)
    return value, tuple(witness)


def opt_enumerate(instance: Instance, rounding_base=1) -> Q:
    """Minimum makespan over all m**n assignments (independent check, tiny inputs only)."""
    sizes = list(instance.sizes)
    speeds = _speeds(instance, rounding_base)
    best = None
    for assignment in itertools.product(range(len(speeds)), repeat=len(sizes)):
        v = _schedule_makespan(sizes, speeds, assignment)
        if best is None or v < best:
            best = v
    return best if best is not None else Q(0)


def opt2_sandwich(instance: Instance, base=2, **kwargs) -> tuple[OptResult, OptResult]:
    """``(OPT, OPT_base)``; raises :class:`OracleError` if ``OPT <= OPT_base <= base*OPT`` fails."""
    base = as_fraction(base, "base")
    opt = opt_exact(instance, 1, **kwargs)
    opt_b = opt_exact(instance, base, **kwargs)
    if opt.exact and opt_b.exact:
        ok = opt.value <= opt_b.value <= base * opt.value
    else:
        ok = opt.lower_bound <= opt_b.upper_bound and opt_b.lower_bound <= base * opt.upper_bound
    if not ok:
        raise OracleError(
            f"sandwich violated: OPT in [{opt.lower_bound}, {opt.upper_bound}], "
            f"OPT_{base} in [{opt_b.lower_bound}, {opt_b.upper_bound}]"
        )
    return opt, opt_b
