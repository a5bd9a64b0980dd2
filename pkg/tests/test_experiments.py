from fractions import Fraction as F

import pytest

import loadbal.pricing
from loadbal import FamilySpec, Instance, SuiteConfig, run_cell, summarize, sweep, verify_suite
from loadbal.experiments import max_workers, rows_to_csv, seeded_n


def test_run_cell_row():
    row = run_cell("ppr", {}, FamilySpec("random", m=4, n=6, seed=2))
    assert row.opt_exact and row.ratio == row.alg_makespan / row.opt
    assert row.ratio >= 1
    assert row.wb_strong == "pass" and row.anonymous == "pass"
    assert row.runtime_ms is None


def test_hardness_cell():
    row = run_cell("ppr", {"rounding_base": 1}, FamilySpec("hardness", m=16, n=16),
                   checks=False, with_opt2=False)
    assert row.opt == 1 and row.opt_exact
    assert row.ratio >= 2


def test_inexact_cells_flagged():
    row = run_cell("ppr", {}, FamilySpec("random", m=3, n=12, seed=0),
                   checks=False, opt_kwargs={"max_jobs": 4})
    if not row.opt_exact:
        assert row.ratio is None
        assert row.ratio_low <= row.ratio_high
    rows = [row]
    s = summarize(rows)[0]
    assert s.exact_cells == (1 if row.opt_exact else 0)


def test_sweep_sorted_and_deterministic():
    a = sweep("unit", [4, 2], [3, 1, 2], n_range=(1, 9), workers=1)
    assert [(r.m, r.seed) for r in a] == sorted((r.m, r.seed) for r in a)
    b = sweep("unit", [4, 2], [3, 1, 2], n_range=(1, 9), workers=2)
    assert rows_to_csv(a) == rows_to_csv(b)


def test_summary_rows():
    rows = sweep("random", [2, 3], range(4), checks=False, workers=1)
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert sum(1 for l in lines if l.startswith("summary")) == 2
    assert sum(1 for l in lines if l.startswith("cell")) == 8
    s = summarize(rows)
    assert all(x.ratio_mean <= x.ratio_max for x in s)


def test_row_is_replayable():
    rows = sweep("bounded", [3], [5], n_range=(2, 10), workers=1, checks=False)
    r = rows[0]
    again = run_cell("ppr", r.params, FamilySpec("bounded", m=r.m, n=r.n, seed=r.seed), checks=False)
    assert again.alg_makespan == r.alg_makespan and again.opt == r.opt


def test_seeded_n():
    assert seeded_n("unit", 2, 0, (5, 5)) == 5
    assert all(1 <= seeded_n("unit", 2, s, (1, 4)) <= 4 for s in range(50))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("LOADBAL_THREADS", "3")
    assert max_workers() == 3
    monkeypatch.setenv("LOADBAL_THREADS", "zero")
    assert max_workers() >= 1


def test_suite_passes_by_default():
    result = verify_suite(SuiteConfig(seeds=range(3)))
    assert result.ok, [f.to_dict() for f in result.failures]
    assert result.counts["greedy-counterexample-detected"]["pass"] == 3


def test_suite_empty_is_vacuous():
    result = verify_suite(SuiteConfig(instances=[], eps_grid=()))
    assert result.ok and result.warnings


def test_mutation_breaks_fairness(monkeypatch):
    # without the minimum-makespan rule inside a speed class the first
    # machine of each class takes every job
    def first_in_class(state, order, classes=None):
        classes = loadbal.pricing.speed_classes(state.announced_speeds)
        return [min(g, key=lambda i: order.rank[i]) for g in classes]

    monkeypatch.setattr(loadbal.pricing, "active_machines", first_in_class)
    inst = Instance.from_values([1, 1], [1] * 4)
    result = verify_suite(SuiteConfig(instances=[inst], eps_grid=()))
    assert not result.ok
    fair = [f for f in result.failures if f.property == "fair"]
    assert fair and "step" in fair[0].counterexample
