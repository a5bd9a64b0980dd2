"""Property checkers for schedules and mechanisms.

Each checker returns a :class:`VerificationReport`.  A failing report carries
a counterexample with enough information (instance, mechanism name and
parameters, step) for :func:`replay_report` to reproduce the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ._validation import Q, as_fraction, fraction_str, is_rational
from .base import BaseMechanism, make_mechanism
from .core import Instance, MechanismOutcome, ScheduleState, TieBreakOrder
from .pricing import round_speed

PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"


@dataclass
class VerificationReport:
    property: str
    verdict: str
    counterexample: Optional[dict] = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict != FAIL

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "counterexample": _jsonable(self.counterexample),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if is_rational(obj):
        return fraction_str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, frozenset):
        return sorted(obj)
    return obj


def _context(instance: Instance, mechanism: BaseMechanism) -> dict:
    return {
        "instance": instance.to_dict(),
        "mechanism": mechanism.name,
        "params": _jsonable(mechanism.get_params()),
    }


# -- state checks ---------------------------------------------------------

def check_well_behaved(state: ScheduleState, mode: str = "strong", speed_basis: str = "announced") -> VerificationReport:
    """Strong: makespan non-decreasing in speed.  Weak: workload non-decreasing in speed.

    Machines with equal speed are not compared with each other.
    """
    if mode not in ("strong", "weak") or speed_basis not in ("announced", "true"):
        raise ValueError("mode must be strong|weak and speed_basis announced|true")
    speeds = state.announced_speeds if speed_basis == "announced" else state.true_speeds
    if mode == "strong":
        values = [w / s for w, s in zip(state.workloads, speeds)]
    else:
        values = list(state.workloads)
    name = f"well-behaved-{mode}-{speed_basis}"

    idx = sorted(range(state.m), key=lambda i: speeds[i])
    slower_max = None  # (value, machine) over strictly slower classes
    k = 0
    while k < len(idx):
        s = speeds[idx[k]]
        group = []
        while k < len(idx) and speeds[idx[k]] == s:
            group.append(idx[k])
            k += 1
        low = min(group, key=lambda i: values[i])
        if slower_max is not None and values[low] < slower_max[0]:
            slow = slower_max[1]
            return VerificationReport(name, FAIL, {
                "slower": slow,
                "faster": low,
                "speeds": [speeds[slow], speeds[low]],
                "values": [values[slow], values[low]],
                "workloads": list(state.workloads),
                "announced_speeds": list(state.announced_speeds),
                "true_speeds": list(state.true_speeds),
            })
        high = max(group, key=lambda i: values[i])
        if slower_max is None or values[high] > slower_max[0]:
            slower_max = (values[high], high)
    return VerificationReport(name, PASS)


def check_fairness(state: ScheduleState) -> VerificationReport:
    """Equal-speed machines: ``W_i >= W_k - (last job on k)`` for every pair."""
    by_speed = {}
    for i, s in enumerate(state.announced_speeds):
        by_speed.setdefault(s, []).append(i)
    groups = [g for g in by_speed.values() if len(g) > 1]
    if not groups:
        return VerificationReport("fair", INAPPLICABLE)
    w = state.workloads
    for g in groups:
        for k in g:
            bound = w[k] - state.last_job_size(k)
            for i in g:
                if i != k and w[i] < bound:
                    return VerificationReport("fair", FAIL, {
                        "machine": i,
                        "other": k,
                        "workloads": [w[i], w[k]],
                        "last_job_on_other": state.last_job_size(k),
                        "speed": state.announced_speeds[i],
                    })
    return VerificationReport("fair", PASS)


def check_job_counts_increasing(state: ScheduleState, speed_basis: str = "true") -> VerificationReport:
    """Among loaded machines, job counts strictly increase with speed."""
    speeds = state.true_speeds if speed_basis == "true" else state.announced_speeds
    counts = state.job_counts()
    loaded = sorted((i for i in range(state.m) if counts[i] > 0), key=lambda i: speeds[i])
    for a, b in zip(loaded, loaded[1:]):
        if speeds[a] < speeds[b] and not counts[a] < counts[b]:
            return VerificationReport("job-counts-increasing", FAIL, {
                "slower": a, "faster": b, "counts": [counts[a], counts[b]],
            })
    return VerificationReport("job-counts-increasing", PASS)


# -- run-level checks -----------------------------------------------------

def check_run(outcome: MechanismOutcome, check, mechanism: Optional[BaseMechanism] = None, **kwargs) -> VerificationReport:
    """Apply a state check after every assignment; report the first failing step."""
    report = None
    for step, state in enumerate(outcome.states()):
        report = check(state, **kwargs)
        if report.verdict == FAIL:
            report.counterexample["step"] = step
            if mechanism is not None:
                report.counterexample.update(_context(outcome.instance, mechanism))
                report.counterexample["check"] = check.__name__
                report.counterexample["check_kwargs"] = dict(kwargs)
                report.counterexample["order"] = list(outcome.order.permutation)
            return report
    report.details["steps"] = len(outcome.steps)
    return report


def check_anonymity(instance: Instance, mechanism: BaseMechanism, sigma: Sequence[int]) -> VerificationReport:
    """Renaming machine ``i`` to ``sigma[i]`` (tie order included) renames the job sets."""
    sigma = list(sigma)
    if sorted(sigma) != list(range(instance.m)):
        raise ValueError("sigma must be a permutation of machine ids")
    order = mechanism.ordering(instance.m, instance.seed)
    base = mechanism.run(instance, order).state.job_sets()
    moved = mechanism.run(instance.permuted(sigma), order.permuted(sigma)).state.job_sets()
    for i in range(instance.m):
        if base[i] != moved[sigma[i]]:
            ce = _context(instance, mechanism)
            ce.update({"sigma": sigma, "machine": i, "jobs": sorted(base[i]),
                       "jobs_after_renaming": sorted(moved[sigma[i]])})
            return VerificationReport("anonymous", FAIL, ce)
    return VerificationReport("anonymous", PASS, details={"sigma": sigma})


def default_bid_grid(instance: Instance, mechanism: BaseMechanism, machine_id: int) -> list[Q]:
    """Every rounding breakpoint in ``[min speed / 4, max speed * 4]`` plus the true speed."""
    lo, hi = min(instance.speeds) / 4, max(instance.speeds) * 4
    rb = getattr(mechanism, "rounding_base", None)
    rb = Q(1) if rb is None else as_fraction(rb)
    base = rb if rb > 1 else Q(2)
    grid = {instance.speeds[machine_id]}
    x = round_speed(lo, base)
    if x < lo:
        x *= base
    while x <= hi:
        grid.add(x)
        x *= base
    if rb == 1:
        grid.update(s for s in instance.speeds if lo <= s <= hi)
    return sorted(grid)


def scan_machine_monotonicity(
    instance: Instance,
    mechanism: BaseMechanism,
    machine_id: int,
    bid_grid: Optional[Sequence] = None,
) -> VerificationReport:
    """Final workload of ``machine_id`` must be non-decreasing in its claimed speed."""
    bids = sorted({as_fraction(b) for b in (bid_grid or default_bid_grid(instance, mechanism, machine_id))})
    loads = [mechanism.run(instance.with_speed(machine_id, b)).state.workloads[machine_id] for b in bids]
    details = {"machine": machine_id, "bids": bids, "workloads": loads}
    for k in range(len(bids) - 1):
        if loads[k] > loads[k + 1]:
            ce = _context(instance, mechanism)
            ce.update({"machine": machine_id, "bids": [bids[k], bids[k + 1]],
                       "workloads": [loads[k], loads[k + 1]]})
            return VerificationReport("monotone-machine", FAIL, ce, details)
    return VerificationReport("monotone-machine", PASS, details=details)


def default_misreport_grid(instance: Instance, job_index: int) -> list[Q]:
    p = instance.jobs[job_index].true_size
    grid = {p * Q(2) ** k for k in range(-6, 7)}
    grid.update(instance.sizes)
    return sorted(grid)


def scan_job_truthfulness(
    instance: Instance,
    mechanism: BaseMechanism,
    job_index: int,
    misreport_grid: Optional[Sequence] = None,
) -> VerificationReport:
    """No misreport lowers the job's realized cost (true completion time plus charge)."""
    grid = misreport_grid or default_misreport_grid(instance, job_index)
    prefix = instance.prefix(job_index + 1)
    order = mechanism.ordering(instance.m, instance.seed)
    truth = mechanism.run(prefix, order).steps[job_index].cost
    details = {"job": job_index, "truthful_cost": truth}
    for q in grid:
        q = as_fraction(q)
        cost = mechanism.run(prefix.with_report(job_index, q), order).steps[job_index].cost
        if cost < truth:
            ce = _context(instance, mechanism)
            ce.update({"job": job_index, "misreport": q, "cost": cost, "truthful_cost": truth})
            return VerificationReport("truthful-job", FAIL, ce, details)
    return VerificationReport("truthful-job", PASS, details=details)


# -- replay ---------------------------------------------------------------

_STATE_CHECKS = {
    "check_well_behaved": check_well_behaved,
    "check_fairness": check_fairness,
    "check_job_counts_increasing": check_job_counts_increasing,
}


def replay_report(report: VerificationReport) -> VerificationReport:
    """Recompute a failing report from its counterexample."""
    ce = report.counterexample
    if not ce or "instance" not in ce:
        raise ValueError("report has no replayable counterexample")
    instance = Instance.from_dict(ce["instance"])
    mech = make_mechanism(ce["mechanism"], **ce["params"])
    if "check" in ce:
        order = TieBreakOrder(tuple(ce["order"]))
        outcome = mech.run(instance, order)
        return check_run(outcome, _STATE_CHECKS[ce["check"]], mech, **ce["check_kwargs"])
    if report.property == "anonymous":
        return check_anonymity(instance, mech, ce["sigma"])
    if report.property == "monotone-machine":
        return scan_machine_monotonicity(instance, mech, ce["machine"], ce["bids"])
    if report.property == "truthful-job":
        return scan_job_truthfulness(instance, mech, ce["job"], [ce["misreport"]])
    raise ValueError(f"cannot replay property {report.property!r}")
