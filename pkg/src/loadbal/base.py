"""Estimator-style base class shared by every mechanism.

A mechanism is fitted on the speeds the machines submit (phase one) and then
places jobs online (phase two)::

    >>> mech = PostedPriceScheduler(rounding_base=2).fit([1, 2, 4])
    >>> mech.predict([6, 4, 1, "3/5"]).tolist()
    [2, 2, 1, 1]

``get_params``/``set_params``/``clone`` come from scikit-learn, so mechanisms
can be stored in experiment configs and rebuilt from their parameters.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import InvalidInputError, Q, check_positive, check_sizes, check_speeds
from .core import (
    Instance,
    Job,
    MechanismOutcome,
    ScheduleState,
    Step,
    TieBreakOrder,
    apply_assignment,
    fixed_ordering,
)

# choose(state, job) -> (machine id, charge, prices seen or None)
ChooseFn = Callable[[ScheduleState, Job], tuple]


def simulate(
    name: str,
    instance: Instance,
    announced: tuple,
    order: TieBreakOrder,
    choose: ChooseFn,
    params: Optional[dict] = None,
) -> MechanismOutcome:
    """Run the online loop: each job in arrival order is placed by ``choose``."""
    state = ScheduleState.empty(announced, instance.speeds)
    steps = []
    for job in instance.jobs:
        machine, charge, prices = choose(state, job)
        before = state.makespans[machine]
        state = apply_assignment(state, job, machine, charge)
        cost = before + job.true_size / state.announced_speeds[machine] + charge
        steps.append(Step(job.id, prices, machine, charge, cost, state.makespans))
    return MechanismOutcome(name, instance, order, state, tuple(steps), dict(params or {}))


class BaseMechanism(BaseEstimator):
    """Common fit/predict plumbing; subclasses supply ``announce`` and ``chooser``."""

    name = "base"
    rounding_base = None

    def __init__(self, seed=None, tie_break="seeded"):
        self.seed = seed
        self.tie_break = tie_break

    # -- hooks -------------------------------------------------------------
    def announce(self, speeds: tuple) -> tuple:
        return tuple(speeds)

    def chooser(self, order: TieBreakOrder) -> ChooseFn:
        raise NotImplementedError

    def finalize(self, outcome: MechanismOutcome) -> MechanismOutcome:
        return outcome

    # -- helpers -----------------------------------------------------------
    def ordering(self, m: int, default_seed: int = 0) -> TieBreakOrder:
        if self.tie_break == "identity":
            return TieBreakOrder.identity(m)
        if self.tie_break != "seeded":
            raise InvalidInputError(f"unknown tie_break {self.tie_break!r}")
        seed = default_seed if self.seed is None else self.seed
        return fixed_ordering(seed, m)

    def run(self, instance: Instance, order: Optional[TieBreakOrder] = None) -> MechanismOutcome:
        """Simulate the mechanism on a whole instance (does not touch fitted state)."""
        if order is None:
            order = self.ordering(instance.m, instance.seed)
        elif len(order) != instance.m:
            raise InvalidInputError("tie-break order does not match the machine count")
        announced = self.announce(instance.speeds)
        outcome = simulate(
            self.name, instance, announced, order, self.chooser(order), self.get_params()
        )
        return self.finalize(outcome)

    # -- estimator API -----------------------------------------------------
    def fit(self, X, y=None):
        """Record the submitted speeds ``X`` and announce the rounded ones."""
        speeds = check_speeds(X)
        self.true_speeds_ = speeds
        self.announced_speeds_ = self.announce(speeds)
        self.n_machines_ = len(speeds)
        self.order_ = self.ordering(len(speeds))
        self._choose = self.chooser(self.order_)
        self.state_ = ScheduleState.empty(self.announced_speeds_, speeds)
        return self

    def assign(self, size) -> int:
        """Place one online job on the fitted schedule and return its machine."""
        check_is_fitted(self, "state_")
        job = Job(len(self.state_.log), check_positive(size, "size"))
        machine, charge, _ = self._choose(self.state_, job)
        self.state_ = apply_assignment(self.state_, job, machine, charge)
        return machine

    def schedule(self, X) -> MechanismOutcome:
        """Full outcome for the job sequence ``X`` starting from an empty schedule."""
        check_is_fitted(self, "state_")
        inst = Instance.from_values(self.true_speeds_, check_sizes(X))
        return self.run(inst, self.order_)

    def predict(self, X) -> np.ndarray:
        """Machine index chosen for each job of ``X``."""
        return np.asarray(self.schedule(X).assignments, dtype=int)

    def fit_predict(self, X, y) -> np.ndarray:
        return self.fit(X).predict(y)

    def makespan(self, X, use_true_speeds: bool = True) -> Q:
        outcome = self.schedule(X)
        return outcome.alg_true if use_true_speeds else outcome.alg


MECHANISMS: dict = {}


def register(cls):
    MECHANISMS[cls.name] = cls
    return cls


def make_mechanism(name: str, **params) -> BaseMechanism:
    try:
        cls = MECHANISMS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown mechanism {name!r}; choose from {sorted(MECHANISMS)}"
        ) from None
    return cls(**params)
