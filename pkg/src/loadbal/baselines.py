"""Simple truthful mechanisms used as reference points.

* ``VCGScheduler`` puts every job on the fastest claimed machine and pays it
  the reported total work at the second-highest claimed speed.
* ``GreedyIdenticalScheduler`` ignores speeds and balances workload.
* ``GreedyTrueScheduler`` is earliest-finish greedy on the submitted speeds;
  it is truthful for jobs but its schedules need not be well-behaved.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from ._validation import Q
from .base import BaseMechanism, register
from .core import Instance, MechanismOutcome, TieBreakOrder


@register
class VCGScheduler(BaseMechanism):
    name = "vcg"

    def __init__(self, seed=None, tie_break="seeded"):
        self.seed = seed
        self.tie_break = tie_break

    @staticmethod
    def winner(speeds, order: TieBreakOrder) -> int:
        return min(range(len(speeds)), key=lambda i: (-speeds[i], order.rank[i]))

    def chooser(self, order):
        def choose(state, job):
            return self.winner(state.announced_speeds, order), Q(0), None

        return choose

    def finalize(self, outcome):
        speeds = outcome.state.announced_speeds
        m = len(speeds)
        if m < 2:
            # second-highest speed does not exist
            return _with_payments(outcome, (None,))
        w = self.winner(speeds, outcome.order)
        second = max(s for i, s in enumerate(speeds) if i != w)
        total = sum((e.reported_size for e in outcome.state.log), Q(0))
        pay = [Q(0)] * m
        pay[w] = total / second
        return _with_payments(outcome, tuple(pay))


@register
class GreedyIdenticalScheduler(BaseMechanism):
    name = "greedy-identical"

    def __init__(self, seed=None, tie_break="seeded"):
        self.seed = seed
        self.tie_break = tie_break

    def announce(self, speeds):
        return tuple(Q(1) for _ in speeds)

    def chooser(self, order):
        def choose(state, job):
            w = state.workloads
            i = min(range(state.m), key=lambda k: (w[k], order.rank[k]))
            return i, Q(0), None

        return choose


@register
class GreedyTrueScheduler(BaseMechanism):
    name = "greedy-true"

    def __init__(self, seed=None, tie_break="identity"):
        self.seed = seed
        self.tie_break = tie_break

    def chooser(self, order):
        def choose(state, job):
            spans, speeds = state.makespans, state.announced_speeds
            q = job.reported_size
            i = min(range(state.m), key=lambda k: (spans[k] + q / speeds[k], order.rank[k]))
            return i, Q(0), None

        return choose


def _with_payments(outcome: MechanismOutcome, payments) -> MechanismOutcome:
    return replace(outcome, payments=payments)


def run_vcg(instance: Instance, order: Optional[TieBreakOrder] = None) -> MechanismOutcome:
    return VCGScheduler().run(instance, order)


def run_greedy_identical(instance: Instance, order: Optional[TieBreakOrder] = None) -> MechanismOutcome:
    return GreedyIdenticalScheduler().run(instance, order)


def run_greedy_true(instance: Instance, order: Optional[TieBreakOrder] = None) -> MechanismOutcome:
    return GreedyTrueScheduler().run(instance, order)
