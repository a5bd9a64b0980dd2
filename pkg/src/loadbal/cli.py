"""Command line entry point: ``loadbal <subcommand>`` (or ``python -m loadbal``).

Exit codes: 0 success, 1 a verification failed, 2 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ._validation import InvalidInputError, as_fraction, fraction_str
from .base import MECHANISMS, make_mechanism
from .core import SCHEMA_VERSION, INF, Instance
from .experiments import SuiteConfig, row_to_dict, rows_to_csv, summarize, sweep, verify_suite
from .generators import FAMILIES, FamilySpec, generate
from .opt import opt_exact
from .payments import CurveDomainError, curve_csv, payment, utility_table, workload_curve
from .pricing import COST_TIE_RULES
from .verify import (
    FAIL,
    check_anonymity,
    check_fairness,
    check_run,
    check_well_behaved,
    scan_job_truthfulness,
    scan_machine_monotonicity,
)

log = logging.getLogger("loadbal")

PROPERTIES = ("wb-strong", "wb-weak", "fair", "anon", "mono-machine", "truth-job")


class UsageError(Exception):
    pass


def _num(x):
    """Rational as both exact string and float."""
    if x is None:
        return None
    if x == INF:
        return {"exact": "inf", "float": None}
    return {"exact": fraction_str(x), "float": float(x)}


def _read_instance(path: str, seed: Optional[int]) -> Instance:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
    inst = Instance.from_json(text)
    if seed is not None:
        inst = Instance(inst.machines, inst.jobs, seed)
    return inst


def _mechanism(args):
    params = {}
    if args.mechanism == "ppr":
        params["rounding_base"] = as_fraction(args.rounding_base or 2, "rounding_base")
        params["cost_tie_rule"] = args.cost_tie_rule
    params["tie_break"] = args.tie_break
    return make_mechanism(args.mechanism, **params)


def _emit(args, payload: str):
    if not payload.endswith("\n"):
        payload += "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


# -- subcommands -----------------------------------------------------------

def cmd_run(args) -> int:
    inst = _read_instance(args.instance, args.seed)
    mech = _mechanism(args)
    outcome = mech.run(inst)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["job", "chosen", "charge", "cost", "cost_float", "prices", "makespans"])
        for s in outcome.steps:
            prices = "" if s.prices is None else " ".join(
                "inf" if p == INF else fraction_str(p) for p in s.prices)
            w.writerow([s.job, s.chosen, fraction_str(s.charge), fraction_str(s.cost),
                        f"{float(s.cost):.12g}", prices,
                        " ".join(fraction_str(c) for c in s.makespans)])
        _emit(args, buf.getvalue())
    else:
        data = outcome.to_dict()
        data["instance"] = inst.to_dict()
        _emit(args, _dump(data))
    return 0


def cmd_opt(args) -> int:
    inst = _read_instance(args.instance, args.seed)
    base = as_fraction(args.rounding_base or 1, "rounding_base")
    res = opt_exact(inst, base, max_jobs=args.max_jobs, node_budget=args.node_budget)
    data = {
        "schema_version": SCHEMA_VERSION,
        "rounding_base": fraction_str(base),
        "value": _num(res.value),
        "exact": res.exact,
        "lower_bound": _num(res.lower_bound),
        "upper_bound": _num(res.upper_bound),
        "witness": None if res.witness is None else list(res.witness),
    }
    if args.format == "csv":
        _emit(args, "value,value_float,exact,lower_bound,upper_bound\n"
              f"{data['value']['exact']},{data['value']['float']:.12g},{str(res.exact).lower()},"
              f"{data['lower_bound']['exact']},{data['upper_bound']['exact']}\n")
    else:
        _emit(args, _dump(data))
    return 0


def cmd_verify(args) -> int:
    if args.suite:
        cfg = SuiteConfig(seeds=range(args.seed or 0, (args.seed or 0) + args.seeds))
        if args.instances:
            cfg.instances = [_read_instance(p, None) for p in args.instances]
        result = verify_suite(cfg)
        for w in result.warnings:
            log.warning(w)
        data = {"schema_version": SCHEMA_VERSION, **result.to_dict()}
        if args.counterexamples and result.failures:
            d = Path(args.counterexamples)
            d.mkdir(parents=True, exist_ok=True)
            paths = []
            for k, rep in enumerate(result.failures):
                p = d / f"{k:04d}-{rep.property}.json"
                p.write_text(_dump(rep.to_dict()) + "\n")
                paths.append(str(p))
            data["counterexample_paths"] = paths
        _emit(args, _dump(data))
        return 1 if not result.ok else 0

    if not args.instance or not args.property:
        raise UsageError("verify needs an instance and --property (or --suite)")
    inst = _read_instance(args.instance, args.seed)
    mech = _mechanism(args)
    prop = args.property
    if prop in ("wb-strong", "wb-weak"):
        mode = prop.split("-")[1]
        basis = args.speed_basis or "announced"
        rep = check_run(mech.run(inst), check_well_behaved, mech, mode=mode, speed_basis=basis)
    elif prop == "fair":
        rep = check_run(mech.run(inst), check_fairness, mech)
    elif prop == "anon":
        sigma = args.sigma if args.sigma is not None else list(reversed(range(inst.m)))
        rep = check_anonymity(inst, mech, sigma)
    elif prop == "mono-machine":
        machines = [args.machine] if args.machine is not None else range(inst.m)
        rep = None
        for i in machines:
            rep = scan_machine_monotonicity(inst, mech, _machine_id(inst, i))
            if rep.verdict == FAIL:
                break
    else:
        jobs = [args.job] if args.job is not None else range(inst.n)
        rep = None
        for j in jobs:
            if not 0 <= j < inst.n:
                raise InvalidInputError(f"job {j} does not exist")
            rep = scan_job_truthfulness(inst, mech, j)
            if rep.verdict == FAIL:
                break
    if rep is None:
        raise InvalidInputError("nothing to check: the instance has no jobs")
    data = {"schema_version": SCHEMA_VERSION, **rep.to_dict()}
    _emit(args, _dump(data))
    return 1 if rep.verdict == FAIL else 0


def _machine_id(inst: Instance, i: int) -> int:
    if not 0 <= i < inst.m:
        raise InvalidInputError(f"machine {i} does not exist")
    return i


def cmd_payments(args) -> int:
    inst = _read_instance(args.instance, args.seed)
    mech = _mechanism(args)
    i = _machine_id(inst, args.machine)
    curve = workload_curve(inst, mech, i)
    if args.format == "json":
        rows = [{k: _num(v) for k, v in r.items()} for r in utility_table(curve)]
        pay = payment(curve, 1 / inst.speeds[i])
        _emit(args, _dump({
            "schema_version": SCHEMA_VERSION,
            "machine": i,
            "divergent": curve.divergent,
            "non_increasing": curve.is_non_increasing(),
            "payment": _num(pay.value),
            "truncated": pay.truncated,
            "rows": rows,
        }))
    else:
        _emit(args, curve_csv(curve))
    return 0


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _n_range(text: str) -> tuple[int, int]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return int(lo), int(hi)
    return int(text), int(text)


def cmd_sweep(args) -> int:
    try:
        m_list = _int_list(args.m)
        n_range = _n_range(args.n)
    except ValueError as exc:
        raise InvalidInputError(f"bad --m/--n value: {exc}") from exc
    if args.mechanism == "ppr":
        params = {"rounding_base": fraction_str(as_fraction(args.rounding_base or 2))}
        if args.cost_tie_rule != "prefer-faster":
            params["cost_tie_rule"] = args.cost_tie_rule
    else:
        params = {}
    if args.tie_break != "seeded":
        params["tie_break"] = args.tie_break
    start = args.seed or 0
    rows = sweep(
        args.family, m_list, range(start, start + args.seeds), args.mechanism, params,
        n_range=n_range, spec_kwargs=_spec_kwargs(args), checks=not args.no_checks,
        with_opt2=not args.no_opt2, timing=args.timing,
        opt_kwargs={"max_jobs": args.max_jobs, "node_budget": args.node_budget},
    )
    inexact = [r for r in rows if not r.opt_exact]
    if inexact:
        log.warning("%d cell(s) have inexact OPT; their ratios are bracketed and "
                    "left out of the summary rows", len(inexact))
    if args.format == "json":
        summary = [{
            "m": s.m, "cells": s.cells, "exact_cells": s.exact_cells,
            "ratio_max": _num(s.ratio_max), "ratio_mean": _num(s.ratio_mean),
            "inexact_seeds": list(s.inexact_seeds),
        } for s in summarize(rows)]
        data = {"schema_version": SCHEMA_VERSION, "rows": [row_to_dict(r) for r in rows],
                "summary": summary}
        if not args.timing:
            for r in data["rows"]:
                r.pop("runtime_ms")
        _emit(args, _dump(data))
    else:
        _emit(args, rows_to_csv(rows, timing=args.timing))
    return 0


def _spec_kwargs(args) -> dict:
    kw = {}
    if args.eps is not None:
        kw["eps"] = args.eps
    if args.p_min is not None:
        kw["p_min"] = args.p_min
    if args.p_max is not None:
        kw["p_max"] = args.p_max
    if args.speed_max_exp is not None:
        kw["speed_max_exp"] = args.speed_max_exp
    if args.raw_speeds:
        kw["raw_speeds"] = True
    return kw


def cmd_gen(args) -> int:
    spec = FamilySpec(family=args.family, m=args.m, n=args.n, seed=args.seed or 0, **_spec_kwargs(args))
    inst = generate(spec)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "index", "value", "value_float"])
        for i, s in enumerate(inst.speeds):
            w.writerow(["machine", i, fraction_str(s), f"{float(s):.12g}"])
        for j, p in enumerate(inst.sizes):
            w.writerow(["job", j, fraction_str(p), f"{float(p):.12g}"])
        _emit(args, buf.getvalue())
    else:
        _emit(args, _dump(inst.to_dict()))
    return 0


# -- parser ----------------------------------------------------------------

def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; the subcommand copy must not
    # overwrite a value given before it, hence SUPPRESS defaults there
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(None),
                        help="tie-break seed for run/verify/payments; generator seed for gen/sweep")
    common.add_argument("--rounding-base", default=d(None),
                        help="speed rounding base (mechanism default 2; opt default 1 = true speeds)")
    common.add_argument("--out", default=d(None), help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=d(None))
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)

    mech = argparse.ArgumentParser(add_help=False)
    mech.add_argument("--mechanism", choices=sorted(MECHANISMS), default="ppr")
    mech.add_argument("--tie-break", choices=("seeded", "identity"), default="seeded")
    mech.add_argument("--cost-tie-rule", choices=COST_TIE_RULES, default="prefer-faster")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", choices=FAMILIES, default="random")
    fam.add_argument("--eps", default=None, help="epsilon for greedy_counter")
    fam.add_argument("--p-min", default=None)
    fam.add_argument("--p-max", default=None)
    fam.add_argument("--speed-max-exp", type=int, default=None)
    fam.add_argument("--raw-speeds", action="store_true", help="arbitrary rational speeds")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--max-jobs", type=int, default=18)
    budget.add_argument("--node-budget", type=int, default=2_000_000)

    parser = argparse.ArgumentParser(prog="loadbal", parents=[_global_flags(suppress=False)],
                                     description="Online load balancing mechanisms on related machines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common, mech], help="simulate a mechanism, print the trace")
    p.add_argument("instance", help="instance JSON file ('-' for stdin)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("opt", parents=[common, budget], help="offline optimum")
    p.add_argument("instance")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("verify", parents=[common, mech], help="check a property (exit 1 on failure)")
    p.add_argument("instance", nargs="?")
    p.add_argument("--property", choices=PROPERTIES)
    p.add_argument("--speed-basis", choices=("announced", "true"), default=None)
    p.add_argument("--machine", type=int, default=None)
    p.add_argument("--job", type=int, default=None)
    p.add_argument("--sigma", type=_int_list, default=None, help="comma-separated permutation")
    p.add_argument("--suite", action="store_true", help="run the whole property battery")
    p.add_argument("--seeds", type=int, default=10, help="suite: number of seeds")
    p.add_argument("--instances", nargs="*", default=None, help="suite: instance files to use instead")
    p.add_argument("--counterexamples", default=None, help="suite: directory for failing reports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("payments", parents=[common, mech], help="workload curve, payments, utilities")
    p.add_argument("instance")
    p.add_argument("--machine", type=int, required=True)
    p.set_defaults(func=cmd_payments)

    p = sub.add_parser("sweep", parents=[common, mech, fam, budget], help="ratio experiment, CSV rows")
    p.add_argument("--m", required=True, help="machine counts, e.g. 2,4,8 or 2-8")
    p.add_argument("--n", default="8", help="job count or range lo-hi (drawn per seed)")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--no-checks", action="store_true", help="skip per-cell property checks")
    p.add_argument("--no-opt2", action="store_true", help="skip OPT on rounded speeds")
    p.add_argument("--timing", action="store_true", help="add runtime_ms (breaks byte-identical output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", parents=[common, fam], help="generate an instance")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=0)
    p.set_defaults(func=cmd_gen)
    return parser


_DEFAULT_FORMAT = {"payments": "csv", "sweep": "csv"}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.format is None:
        args.format = _DEFAULT_FORMAT.get(args.command, "json")
    try:
        return args.func(args)
    except (InvalidInputError, CurveDomainError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
