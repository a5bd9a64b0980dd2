"""Machine payments from the workload curve, and machine utilities.

A machine claiming inverse speed ``b`` (time per unit of work) ends up with
workload ``L(b)``.  It is paid

    P(b) = b * L(b) + integral_b^inf L(t) dt

and its utility when the true inverse speed is ``b_true`` is
``P(b) - b_true * L(b)``.  When ``L`` is non-increasing in ``b`` the truthful
claim maximises utility.

Curves are piecewise constant.  For mechanisms that round speeds to powers of
a base the breakpoints are exactly the powers of that base, so the curve is
computed without sampling error; otherwise it is sampled on a grid.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from ._validation import Q, as_fraction, fraction_str
from .core import Instance

TRUNCATION_FACTOR = Q(2**20)


class CurveDomainError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadCurve:
    """``L(t) = loads[k]`` for ``t`` in ``(edges[k], edges[k+1]]``.

    The domain is ``(edges[0], edges[-1]]``.
    """

    edges: tuple[Q, ...]
    loads: tuple[Q, ...]
    machine_id: Optional[int] = None

    def __post_init__(self):
        if len(self.edges) != len(self.loads) + 1 or not self.loads:
            raise ValueError("a curve needs len(edges) == len(loads) + 1 >= 2")
        if any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("curve edges must be strictly increasing")
        if any(L < 0 for L in self.loads):
            raise ValueError("workloads must be nonnegative")

    @property
    def b_min(self) -> Q:
        return self.edges[0]

    @property
    def b_max(self) -> Q:
        return self.edges[-1]

    @property
    def divergent(self) -> bool:
        """The machine still gets work at ``b_max``: the tail integral is cut off."""
        return self.loads[-1] > 0

    @property
    def breakpoints(self) -> list[tuple[Q, Q]]:
        return list(zip(self.edges[1:], self.loads))

    def segment(self, b) -> int:
        b = as_fraction(b, "b")
        if not self.b_min < b <= self.b_max:
            raise CurveDomainError(f"b={b} outside ({self.b_min}, {self.b_max}]")
        return bisect.bisect_left(self.edges, b) - 1

    def __call__(self, b) -> Q:
        return self.loads[self.segment(b)]

    def is_non_increasing(self) -> bool:
        return all(a >= b for a, b in zip(self.loads, self.loads[1:]))

    def tail_integral(self, b) -> Q:
        b = as_fraction(b, "b")
        k = self.segment(b)
        total = (self.edges[k + 1] - b) * self.loads[k]
        for l in range(k + 1, len(self.loads)):
            total += (self.edges[l + 1] - self.edges[l]) * self.loads[l]
        return total


class Payment(NamedTuple):
    value: Q
    truncated: bool


def payment(curve: WorkloadCurve, b) -> Payment:
    b = as_fraction(b, "b")
    value = b * curve(b) + curve.tail_integral(b)
    return Payment(value, curve.divergent)


def utility(curve: WorkloadCurve, b_claimed, b_true) -> Q:
    b_true = as_fraction(b_true, "b_true")
    if not curve.b_min < b_true <= curve.b_max:
        raise CurveDomainError(f"b_true={b_true} outside the curve domain")
    return payment(curve, b_claimed).value - b_true * curve(b_claimed)


def default_b_range(instance: Instance, machine_id: int) -> tuple[Q, Q]:
    b_true = 1 / instance.speeds[machine_id]
    return 1 / (4 * max(instance.speeds)), TRUNCATION_FACTOR * b_true


def _power_edges(base: Q, lo: Q, hi: Q) -> list[Q]:
    """All integer powers of ``base`` strictly inside ``(lo, hi)``."""
    x = Q(1)
    if x > lo:
        while x / base > lo:
            x /= base
    else:
        while x <= lo:
            x *= base
    edges = []
    while x < hi:
        edges.append(x)
        x *= base
    return edges


def workload_curve(
    instance: Instance,
    mechanism,
    machine_id: int,
    b_range: Optional[tuple] = None,
    grid: Optional[Sequence] = None,
) -> WorkloadCurve:
    """Rerun ``mechanism`` with machine ``machine_id`` claiming ``1/b`` across ``b_range``.

    For a rounding mechanism the edges are the powers of its base in range,
    so ``L`` is exact; pass ``grid`` to sample a non-rounding mechanism.
    """
    lo, hi = default_b_range(instance, machine_id) if b_range is None else map(as_fraction, b_range)
    if not 0 < lo < hi:
        raise CurveDomainError("b_range must satisfy 0 < lo < hi")
    b_true = 1 / instance.speeds[machine_id]
    points = {lo, hi}
    if lo < b_true <= hi:
        points.add(b_true)
    base = getattr(mechanism, "rounding_base", None)
    base = None if base is None else as_fraction(base)
    if grid is not None:
        points.update(as_fraction(g) for g in grid if lo <= as_fraction(g) <= hi)
    elif base is not None and base > 1:
        points.update(_power_edges(base, lo, hi))
    else:
        ratio = Q(5, 4)
        x = lo
        while x < hi:
            points.add(x)
            x *= ratio
    edges = sorted(points)

    cache = {}

    def load_at(b):
        if b not in cache:
            out = mechanism.run(instance.with_speed(machine_id, 1 / b))
            cache[b] = out.state.workloads[machine_id]
        return cache[b]

    # each segment (e_k, e_{k+1}] is evaluated at its right end
    loads = tuple(load_at(b) for b in edges[1:])
    return WorkloadCurve(tuple(edges), loads, machine_id)


def utility_table(curve: WorkloadCurve) -> list[dict]:
    """For each edge taken as the true type: truthful utility and the best lie on the edges."""
    rows = []
    grid = curve.edges[1:]
    for b in grid:
        truth = utility(curve, b, b)
        best = max(utility(curve, c, b) for c in grid if c != b) if len(grid) > 1 else truth
        rows.append({
            "b": b,
            "L": curve(b),
            "P": payment(curve, b).value,
            "utility_truth": truth,
            "utility_best_lie": best,
        })
    return rows


def truthful_on_grid(curve: WorkloadCurve, b_true, grid: Optional[Sequence] = None) -> bool:
    """Utility at ``b_true`` is at least the utility of every claim in ``grid``."""
    grid = curve.edges[1:] if grid is None else grid
    truth = utility(curve, b_true, b_true)
    return all(utility(curve, b, b_true) <= truth for b in grid)


def machine_payments(instance: Instance, mechanism) -> tuple[Payment, ...]:
    """Payment to every machine at its submitted speed."""
    out = []
    for i, s in enumerate(instance.speeds):
        curve = workload_curve(instance, mechanism, i)
        out.append(payment(curve, 1 / s))
    return tuple(out)


def curve_csv(curve: WorkloadCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["b", "L", "P", "utility_truth", "utility_best_lie"]
    writer.writerow(cols + [c + "_float" for c in cols])
    for row in utility_table(curve):
        vals = [row[c] for c in cols]
        writer.writerow([fraction_str(v) for v in vals] + [f"{float(v):.12g}" for v in vals])
    return buf.getvalue()
