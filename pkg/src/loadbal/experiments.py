"""Experiment harness: ratio sweeps against OPT and the verification battery.

A sweep cell is fully described by ``(mechanism, params, family spec)`` so
every CSV row can be regenerated on its own.  Cells run in a process pool
capped by ``LOADBAL_THREADS``; rows are sorted by ``(m, seed)`` before they
are written, so output does not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

from ._validation import Q, fraction_str
from .base import make_mechanism
from .baselines import GreedyTrueScheduler
from .core import Instance
from .generators import FamilySpec, gen_greedy_counter, generate
from .opt import OptResult, opt2_sandwich, opt_enumerate, opt_exact, opt_from_witness
from .payments import truthful_on_grid, workload_curve
from .verify import (
    FAIL,
    PASS,
    VerificationReport,
    check_anonymity,
    check_fairness,
    check_run,
    check_well_behaved,
    scan_job_truthfulness,
    scan_machine_monotonicity,
)

log = logging.getLogger(__name__)

THREADS_ENV = "LOADBAL_THREADS"


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


@dataclass
class ExperimentRow:
    mechanism: str
    family: str
    m: int
    n: int
    seed: int
    alg_makespan: Q  # true speeds
    opt: Q  # exact value, or the upper bound when inexact
    opt_exact: bool
    opt_lower: Q
    opt2: Optional[Q]
    opt2_exact: Optional[bool]
    ratio: Optional[Q]  # only when opt is exact
    ratio_low: Q
    ratio_high: Optional[Q]
    wb_strong: Optional[str] = None
    wb_weak: Optional[str] = None
    fair: Optional[str] = None
    anonymous: Optional[str] = None
    runtime_ms: Optional[float] = None
    params: dict = field(default_factory=dict)


def _opt_for(instance: Instance, family: str, rounding_base=1, **kw) -> OptResult:
    if family == "hardness":
        # job i on machine i finishes everything at time 1
        return opt_from_witness(instance, range(instance.n), rounding_base)
    return opt_exact(instance, rounding_base, **kw)


def run_cell(
    mechanism: str,
    params: dict,
    spec: FamilySpec,
    checks: bool = True,
    with_opt2: bool = True,
    timing: bool = False,
    opt_kwargs: Optional[dict] = None,
) -> ExperimentRow:
    """Generate one instance, run the mechanism, measure against OPT."""
    opt_kwargs = opt_kwargs or {}
    instance = generate(spec)
    mech = make_mechanism(mechanism, **params)
    t0 = time.perf_counter()
    outcome = mech.run(instance)
    elapsed = (time.perf_counter() - t0) * 1000

    opt = _opt_for(instance, spec.family, **opt_kwargs)
    opt2 = _opt_for(instance, spec.family, 2, **opt_kwargs) if with_opt2 else None
    alg = outcome.alg_true
    lo, hi = opt.lower_bound, opt.upper_bound
    row = ExperimentRow(
        mechanism=mechanism,
        family=spec.family,
        m=instance.m,
        n=instance.n,
        seed=spec.seed,
        alg_makespan=alg,
        opt=opt.value,
        opt_exact=opt.exact,
        opt_lower=lo,
        opt2=None if opt2 is None else opt2.value,
        opt2_exact=None if opt2 is None else opt2.exact,
        ratio=_div(alg, opt.value) if opt.exact else None,
        ratio_low=_div(alg, hi),
        ratio_high=_div(alg, lo) if lo > 0 else None,
        runtime_ms=round(elapsed, 3) if timing else None,
        params=dict(params),
    )
    if checks:
        row.wb_strong = check_run(outcome, check_well_behaved, mode="strong").verdict
        row.wb_weak = check_run(outcome, check_well_behaved, mode="weak").verdict
        row.fair = check_run(outcome, check_fairness).verdict
        sigma = list(range(instance.m))
        random.Random(f"anon:{spec.seed}:{instance.m}").shuffle(sigma)
        row.anonymous = check_anonymity(instance, mech, sigma).verdict
    return row


def _div(a: Q, b: Q) -> Q:
    # an empty instance has ALG = OPT = 0; call that ratio 1
    if b == 0:
        return Q(1) if a == 0 else None
    return a / b


def _cell_job(args):
    return run_cell(*args)


def seeded_n(family: str, m: int, seed: int, n_range: tuple[int, int]) -> int:
    lo, hi = n_range
    if lo == hi:
        return lo
    return random.Random(f"n:{family}:{m}:{seed}").randint(lo, hi)


def sweep(
    family: str,
    m_list: Sequence[int],
    seeds: Sequence[int],
    mechanism: str = "ppr",
    params: Optional[dict] = None,
    n_range: tuple[int, int] = (8, 8),
    spec_kwargs: Optional[dict] = None,
    checks: bool = True,
    with_opt2: bool = True,
    timing: bool = False,
    opt_kwargs: Optional[dict] = None,
    workers: Optional[int] = None,
) -> list[ExperimentRow]:
    """One row per ``(m, seed)``, sorted; run in parallel across cells."""
    params = dict(params or {})
    spec_kwargs = dict(spec_kwargs or {})
    jobs = []
    for m in m_list:
        for seed in seeds:
            n = seeded_n(family, m, seed, n_range)
            spec = FamilySpec(family=family, m=m, n=n, seed=seed, **spec_kwargs)
            jobs.append((mechanism, params, spec, checks, with_opt2, timing, opt_kwargs))
    workers = workers or max_workers()
    if workers == 1 or len(jobs) <= 1:
        rows = [_cell_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_cell_job, jobs, chunksize=4))
    rows.sort(key=lambda r: (r.m, r.seed))
    return rows


@dataclass(frozen=True)
class SummaryRow:
    mechanism: str
    family: str
    m: int
    cells: int
    exact_cells: int
    ratio_max: Optional[Q]
    ratio_mean: Optional[Q]
    inexact_seeds: tuple[int, ...]


def summarize(rows: Sequence[ExperimentRow]) -> list[SummaryRow]:
    """Per-m max and mean ratio over exact-OPT cells; inexact cells listed separately."""
    out = []
    for m in sorted({r.m for r in rows}):
        cell = [r for r in rows if r.m == m]
        exact = [r.ratio for r in cell if r.ratio is not None]
        out.append(SummaryRow(
            mechanism=cell[0].mechanism,
            family=cell[0].family,
            m=m,
            cells=len(cell),
            exact_cells=len(exact),
            ratio_max=max(exact) if exact else None,
            ratio_mean=sum(exact, Q(0)) / len(exact) if exact else None,
            inexact_seeds=tuple(r.seed for r in cell if r.ratio is None),
        ))
    return out


CSV_COLUMNS = [
    "kind", "mechanism", "family", "m", "n", "seed", "params",
    "alg_makespan", "opt", "opt_exact", "opt_lower", "opt2", "opt2_exact",
    "ratio", "ratio_low", "ratio_high", "ratio_mean", "cells", "exact_cells",
    "wb_strong", "wb_weak", "fair", "anonymous",
]
RATIONAL_COLUMNS = ("alg_makespan", "opt", "opt_lower", "opt2", "ratio", "ratio_low", "ratio_high", "ratio_mean")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    return v


def rows_to_csv(rows: Sequence[ExperimentRow], summary: bool = True, timing: bool = False) -> str:
    cols = list(CSV_COLUMNS)
    if timing:
        cols.append("runtime_ms")
    header = []
    for c in cols:
        header.append(c)
        if c in RATIONAL_COLUMNS:
            header.append(c + "_float")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)

    def emit(record: dict):
        line = []
        for c in cols:
            v = record.get(c)
            if c in RATIONAL_COLUMNS:
                line.append("" if v is None else fraction_str(v))
                line.append("" if v is None else f"{float(v):.12g}")
            else:
                line.append(_cell(v))
        writer.writerow(line)

    for r in rows:
        rec = {f.name: getattr(r, f.name) for f in fields(r)}
        rec["kind"] = "cell"
        rec["params"] = json.dumps(_plain(r.params), sort_keys=True)
        emit(rec)
    if summary:
        for s in summarize(rows):
            emit({
                "kind": "summary", "mechanism": s.mechanism, "family": s.family, "m": s.m,
                "ratio": s.ratio_max, "ratio_mean": s.ratio_mean,
                "cells": s.cells, "exact_cells": s.exact_cells,
            })
    return buf.getvalue()


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    return fraction_str(v)


def row_to_dict(row: ExperimentRow) -> dict:
    out = {}
    for f in fields(row):
        v = getattr(row, f.name)
        if f.name in RATIONAL_COLUMNS:
            out[f.name] = None if v is None else fraction_str(v)
            out[f.name + "_float"] = None if v is None else float(v)
        else:
            out[f.name] = _plain(v)
    return out


# -- verification battery ---------------------------------------------------

@dataclass
class SuiteConfig:
    seeds: Sequence[int] = tuple(range(10))
    m_max: int = 8
    n_max: int = 12
    families: Sequence[str] = ("random", "bounded", "unit")
    instances: Optional[Sequence[Instance]] = None  # replaces generated ones
    eps_grid: Sequence = (Q(1, 2), Q(1, 4), Q(1, 8))


@dataclass
class SuiteResult:
    counts: dict
    failures: list[VerificationReport]
    warnings: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "verdict": PASS if self.ok else FAIL,
            "counts": self.counts,
            "failures": [f.to_dict() for f in self.failures],
            "warnings": list(self.warnings),
        }


def _suite_instances(cfg: SuiteConfig) -> list[Instance]:
    if cfg.instances is not None:
        return list(cfg.instances)
    out = []
    for seed in cfg.seeds:
        rng = random.Random(f"suite:{seed}")
        for fam in cfg.families:
            m = rng.randint(1, cfg.m_max)
            n = rng.randint(0, cfg.n_max)
            spec = FamilySpec(family=fam, m=m, n=n, seed=seed, speed_max_exp=3, p_max=16)
            inst = generate(spec)
            if rng.random() < 0.5 and m > 1:
                # force an equal-speed group so fairness is exercised
                inst = inst.with_speed(1, inst.speeds[0])
            out.append(inst)
    return out


def verify_suite(cfg: Optional[SuiteConfig] = None) -> SuiteResult:
    """Run every property check over the configured instances."""
    cfg = cfg or SuiteConfig()
    counts: dict = {}
    failures: list = []
    warnings: list = []

    def record(report: VerificationReport):
        c = counts.setdefault(report.property, {PASS: 0, FAIL: 0, "inapplicable": 0})
        c[report.verdict] += 1
        if report.verdict == FAIL:
            failures.append(report)

    instances = _suite_instances(cfg)
    if not instances:
        warnings.append("no instances to check; the suite passes vacuously")

    ppr = make_mechanism("ppr")
    vcg = make_mechanism("vcg")
    gid = make_mechanism("greedy-identical")
    for inst in instances:
        out = ppr.run(inst)
        record(check_run(out, check_well_behaved, ppr, mode="strong"))
        record(check_run(out, check_fairness, ppr))
        sigma = list(range(inst.m))
        random.Random(inst.to_json()).shuffle(sigma)
        record(check_anonymity(inst, ppr, sigma))
        for mech in (ppr, vcg, gid):
            for j in range(inst.n):
                record(scan_job_truthfulness(inst, mech, j))
        if inst.n <= 6 and inst.m <= 4:
            exact, brute = opt_exact(inst), opt_enumerate(inst)
            record(VerificationReport(
                "opt-equivalence", PASS if exact.value == brute else FAIL,
                None if exact.value == brute else {"instance": inst.to_dict(),
                                                   "opt_exact": exact.value, "enumerated": brute},
            ))
        if inst.n <= 10:
            try:
                opt2_sandwich(inst)
                record(VerificationReport("opt-sandwich", PASS))
            except AssertionError as exc:
                record(VerificationReport("opt-sandwich", FAIL, {"instance": inst.to_dict(), "error": str(exc)}))

        # machine monotonicity where it is guaranteed
        unit = Instance.from_values(inst.speeds, [1] * inst.n, inst.seed)
        cases = [(unit, ppr)]
        if inst.m == 2:
            cases.append((inst, make_mechanism("ppr", rounding_base=4)))
        for case, mech in cases:
            for i in range(case.m):
                record(scan_machine_monotonicity(case, mech, i))
                curve = workload_curve(case, mech, i)
                if curve.is_non_increasing() and not curve.divergent:
                    ok = all(truthful_on_grid(curve, b) for b in curve.edges[1:])
                    record(VerificationReport(
                        "payment-truthful", PASS if ok else FAIL,
                        None if ok else {"instance": case.to_dict(), "machine": i},
                    ))

    # the verifier must catch the earliest-finish greedy counterexample
    greedy = GreedyTrueScheduler()
    for eps in cfg.eps_grid:
        inst = gen_greedy_counter(eps)
        rep = check_run(greedy.run(inst), check_well_behaved, greedy, mode="weak", speed_basis="true")
        caught = rep.verdict == FAIL
        record(VerificationReport(
            "greedy-counterexample-detected", PASS if caught else FAIL,
            None if caught else {"instance": inst.to_dict(), "eps": eps},
        ))
    return SuiteResult(counts, failures, warnings)
