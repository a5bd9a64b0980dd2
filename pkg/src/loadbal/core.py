"""Domain types and schedule state transitions.

Machines and jobs are identified by their position in the instance (0-based).
All quantities are exact rationals (``Q`` from the validation helpers); floats only appear when a
result is rendered for humans or plotting.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

from ._validation import (
    InvalidInputError,
    Q,
    as_fraction,
    check_positive,
    check_sizes,
    check_speeds,
    fraction_str,
    is_rational,
)

SCHEMA_VERSION = 1
INF = math.inf


class StructuralError(ValueError):
    """A state transition referenced something that does not exist."""


@dataclass(frozen=True)
class Machine:
    id: int
    true_speed: Q
    announced_speed: Optional[Q] = None

    def __post_init__(self):
        object.__setattr__(self, "true_speed", check_positive(self.true_speed, "true_speed"))
        if self.announced_speed is None:
            object.__setattr__(self, "announced_speed", self.true_speed)
        else:
            object.__setattr__(
                self, "announced_speed", check_positive(self.announced_speed, "announced_speed")
            )


@dataclass(frozen=True)
class Job:
    id: int
    true_size: Q
    reported_size: Optional[Q] = None

    def __post_init__(self):
        object.__setattr__(self, "true_size", check_positive(self.true_size, "true_size"))
        if self.reported_size is None:
            object.__setattr__(self, "reported_size", self.true_size)
        else:
            object.__setattr__(
                self, "reported_size", check_positive(self.reported_size, "reported_size")
            )


@dataclass(frozen=True)
class Instance:
    """Machine speeds plus the online job sequence (list order is arrival order)."""

    machines: tuple[Machine, ...]
    jobs: tuple[Job, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if not self.machines:
            raise InvalidInputError("an instance needs at least one machine")

    @classmethod
    def from_values(cls, speeds, sizes, seed: int = 0) -> "Instance":
        speeds = check_speeds(speeds)
        sizes = check_sizes(sizes)
        return cls(
            tuple(Machine(i, s) for i, s in enumerate(speeds)),
            tuple(Job(j, p) for j, p in enumerate(sizes)),
            seed,
        )

    @property
    def m(self) -> int:
        return len(self.machines)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def speeds(self) -> tuple[Q, ...]:
        return tuple(mc.true_speed for mc in self.machines)

    @property
    def sizes(self) -> tuple[Q, ...]:
        return tuple(j.true_size for j in self.jobs)

    def with_speed(self, machine_id: int, speed) -> "Instance":
        """Copy of the instance where one machine claims a different speed."""
        machines = list(self.machines)
        machines[machine_id] = Machine(machine_id, as_fraction(speed))
        return replace(self, machines=tuple(machines))

    def with_report(self, job_index: int, reported) -> "Instance":
        jobs = list(self.jobs)
        jobs[job_index] = replace(jobs[job_index], reported_size=as_fraction(reported))
        return replace(self, jobs=tuple(jobs))

    def prefix(self, n_jobs: int) -> "Instance":
        return replace(self, jobs=self.jobs[:n_jobs])

    def permuted(self, sigma: Sequence[int]) -> "Instance":
        """Machine ``i`` of ``self`` becomes machine ``sigma[i]`` of the result."""
        new = [None] * self.m
        for i, mc in enumerate(self.machines):
            new[sigma[i]] = Machine(sigma[i], mc.true_speed)
        return replace(self, machines=tuple(new))

    def to_dict(self) -> dict:
        return {
            "machines": [{"speed": fraction_str(mc.true_speed)} for mc in self.machines],
            "jobs": [{"size": fraction_str(j.true_size)} for j in self.jobs],
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "Instance":
        if not isinstance(data, dict):
            raise InvalidInputError("instance: top level must be an object")
        try:
            machines = data["machines"]
        except KeyError:
            raise InvalidInputError("instance: missing field 'machines'") from None
        jobs = data.get("jobs", [])
        if not isinstance(machines, list) or not isinstance(jobs, list):
            raise InvalidInputError("instance: 'machines' and 'jobs' must be lists")
        speeds = []
        for i, mc in enumerate(machines):
            if not isinstance(mc, dict) or "speed" not in mc:
                raise InvalidInputError(f"instance: machines[{i}] needs a 'speed' field")
            speeds.append(check_positive(mc["speed"], f"machines[{i}].speed"))
        sizes = []
        for j, job in enumerate(jobs):
            if not isinstance(job, dict) or "size" not in job:
                raise InvalidInputError(f"instance: jobs[{j}] needs a 'size' field")
            sizes.append(check_positive(job["size"], f"jobs[{j}].size"))
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise InvalidInputError("instance: 'seed' must be an integer")
        return cls.from_values(speeds, sizes, seed)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(
                f"instance: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class TieBreakOrder:
    """Total order over machine ids; earlier in ``permutation`` wins ties."""

    permutation: tuple[int, ...]
    seed: Optional[int] = None
    rank: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        perm = tuple(int(i) for i in self.permutation)
        if sorted(perm) != list(range(len(perm))):
            raise InvalidInputError(f"tie-break order {perm} is not a permutation")
        object.__setattr__(self, "permutation", perm)
        rank = [0] * len(perm)
        for pos, i in enumerate(perm):
            rank[i] = pos
        object.__setattr__(self, "rank", tuple(rank))

    @classmethod
    def identity(cls, m: int) -> "TieBreakOrder":
        return cls(tuple(range(m)))

    def __len__(self):
        return len(self.permutation)

    def permuted(self, sigma: Sequence[int]) -> "TieBreakOrder":
        """The same order after renaming machine ``i`` to ``sigma[i]``."""
        return TieBreakOrder(tuple(sigma[i] for i in self.permutation), self.seed)


def fixed_ordering(seed: int, m: int) -> TieBreakOrder:
    """Deterministic pseudo-random machine order for tie-breaking."""
    if m < 1:
        raise InvalidInputError("fixed_ordering needs m >= 1")
    perm = list(range(m))
    random.Random(seed).shuffle(perm)
    return TieBreakOrder(tuple(perm), seed)


@dataclass(frozen=True)
class LogEntry:
    job: int
    machine: int
    charge: Q
    reported_size: Q
    true_size: Q


@dataclass(frozen=True)
class ScheduleState:
    """Per-machine workload under announced speeds, plus the assignment log.

    Workloads count *reported* sizes; true sizes are kept in the log for
    job-cost accounting.
    """

    announced_speeds: tuple[Q, ...]
    true_speeds: tuple[Q, ...]
    workloads: tuple[Q, ...]
    log: tuple[LogEntry, ...] = ()
    makespans: tuple[Q, ...] = None  # workload / announced speed, kept in sync

    def __post_init__(self):
        if self.makespans is None:
            spans = tuple(w / s for w, s in zip(self.workloads, self.announced_speeds))
            object.__setattr__(self, "makespans", spans)

    @classmethod
    def empty(cls, announced_speeds, true_speeds=None) -> "ScheduleState":
        announced = check_speeds(announced_speeds, "announced_speeds")
        true = announced if true_speeds is None else check_speeds(true_speeds, "true_speeds")
        if len(true) != len(announced):
            raise InvalidInputError("announced and true speed vectors differ in length")
        return cls(announced, true, tuple(Q(0) for _ in announced))

    @property
    def m(self) -> int:
        return len(self.announced_speeds)

    @property
    def true_makespans(self) -> tuple[Q, ...]:
        return tuple(w / s for w, s in zip(self.workloads, self.true_speeds))

    def jobs_on(self, machine_id: int) -> list[int]:
        return [e.job for e in self.log if e.machine == machine_id]

    def job_sets(self) -> list[frozenset]:
        sets = [set() for _ in range(self.m)]
        for e in self.log:
            sets[e.machine].add(e.job)
        return [frozenset(s) for s in sets]

    def job_counts(self) -> list[int]:
        counts = [0] * self.m
        for e in self.log:
            counts[e.machine] += 1
        return counts

    def last_job_size(self, machine_id: int) -> Q:
        for e in reversed(self.log):
            if e.machine == machine_id:
                return e.reported_size
        return Q(0)


def apply_assignment(state: ScheduleState, job: Job, machine_id: int, charge=0) -> ScheduleState:
    """Place ``job`` on ``machine_id``; returns a new state."""
    if not isinstance(machine_id, int) or not 0 <= machine_id < state.m:
        raise StructuralError(f"unknown machine id {machine_id!r} (m={state.m})")
    charge = as_fraction(charge, "charge")
    if charge < 0:
        raise InvalidInputError(f"charge must be nonnegative, got {charge}")
    workloads = list(state.workloads)
    workloads[machine_id] += job.reported_size
    spans = list(state.makespans)
    spans[machine_id] = workloads[machine_id] / state.announced_speeds[machine_id]
    entry = LogEntry(job.id, machine_id, charge, job.reported_size, job.true_size)
    return replace(
        state, workloads=tuple(workloads), makespans=tuple(spans), log=state.log + (entry,)
    )


def makespan(state: ScheduleState, use_true_speeds: bool = False) -> Q:
    spans = state.true_makespans if use_true_speeds else state.makespans
    return max(spans, default=Q(0))


def replay(initial: ScheduleState, log: Sequence[LogEntry]) -> Iterator[ScheduleState]:
    """Yield the state after each logged assignment, starting from ``initial``."""
    state = initial
    for e in log:
        job = Job(e.job, e.true_size, e.reported_size)
        state = apply_assignment(state, job, e.machine, e.charge)
        yield state


@dataclass(frozen=True)
class Step:
    """One online arrival: the prices the job saw and what it did."""

    job: int
    prices: Optional[tuple]
    chosen: int
    charge: Q
    cost: Q
    makespans: tuple[Q, ...]


@dataclass(frozen=True)
class MechanismOutcome:
    mechanism: str
    instance: Instance
    order: TieBreakOrder
    state: ScheduleState
    steps: tuple[Step, ...]
    params: dict = field(default_factory=dict)
    payments: Optional[tuple] = None

    @property
    def initial_state(self) -> ScheduleState:
        return ScheduleState.empty(self.state.announced_speeds, self.state.true_speeds)

    @property
    def assignments(self) -> tuple[int, ...]:
        return tuple(s.chosen for s in self.steps)

    @property
    def costs(self) -> tuple[Q, ...]:
        return tuple(s.cost for s in self.steps)

    @property
    def alg(self) -> Q:
        return makespan(self.state)

    @property
    def alg_true(self) -> Q:
        return makespan(self.state, use_true_speeds=True)

    def states(self) -> Iterator[ScheduleState]:
        """Every intermediate state, including the empty one."""
        yield self.initial_state
        yield from replay(self.initial_state, self.state.log)

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            if x == INF:
                return "inf"
            return fraction_str(x)

        steps = []
        for s in self.steps:
            steps.append({
                "job": s.job,
                "prices": None if s.prices is None else [num(p) for p in s.prices],
                "chosen": s.chosen,
                "charge": num(s.charge),
                "cost": num(s.cost),
                "makespans": [num(c) for c in s.makespans],
            })
        return {
            "schema_version": SCHEMA_VERSION,
            "mechanism": self.mechanism,
            "params": {k: (num(v) if is_rational(v) else v) for k, v in self.params.items()},
            "tie_break": list(self.order.permutation),
            "announced_speeds": [num(s) for s in self.state.announced_speeds],
            "steps": steps,
            "workloads": [num(w) for w in self.state.workloads],
            "makespans": [num(c) for c in self.state.makespans],
            "alg": num(self.alg),
            "alg_float": float(self.alg),
            "alg_true": num(self.alg_true),
            "alg_true_float": float(self.alg_true),
            "payments": None if self.payments is None else [num(p) for p in self.payments],
        }
