from fractions import Fraction as F
import random

import pytest

from loadbal import Instance, PostedPriceScheduler, WorkloadCurve, payment, utility, workload_curve
from loadbal.payments import CurveDomainError, curve_csv, machine_payments, truthful_on_grid, utility_table


def step_curve():
    # L = 2 on (1/8, 1/2], 0 on (1/2, 1]
    return WorkloadCurve((F(1, 8), F(1, 4), F(1, 2), F(1)), (F(2), F(2), F(0)))


def test_payment_step_function():
    pay = payment(step_curve(), F(1, 4))
    assert pay.value == 1
    assert not pay.truncated


def test_payment_zero_tail():
    curve = step_curve()
    b = F(3, 4)
    assert payment(curve, b).value == b * curve(b) == 0


def test_domain_errors():
    with pytest.raises(CurveDomainError):
        payment(step_curve(), 2)
    with pytest.raises(CurveDomainError):
        step_curve()(F(1, 8))  # left end is open
    with pytest.raises(ValueError):
        WorkloadCurve((F(1), F(1, 2)), (F(1),))


def test_utility_identity():
    curve = step_curve()
    for b in curve.edges[1:]:
        assert utility(curve, b, b) == payment(curve, b).value - b * curve(b)


def test_increasing_curve_lie_profitable():
    curve = WorkloadCurve((F(1, 4), F(1, 2), F(1)), (F(1), F(3)))
    assert not curve.is_non_increasing()
    b_true = F(3, 8)
    assert utility(curve, 1, b_true) > utility(curve, b_true, b_true)
    assert not truthful_on_grid(curve, b_true, [F(1)])


def random_curve(rng):
    k = rng.randint(1, 6)
    edges = sorted({F(rng.randint(1, 64), 8) for _ in range(k + 1)})
    while len(edges) < 2:
        edges.append(edges[-1] + 1)
    loads = sorted((F(rng.randint(0, 20), 2) for _ in range(len(edges) - 1)), reverse=True)
    return WorkloadCurve(tuple(edges), tuple(loads))


def test_midpoint_reintegration():
    rng = random.Random(2)
    for _ in range(200):
        curve = random_curve(rng)
        for b in curve.edges[1:]:
            total = F(0)
            for lo, hi in zip(curve.edges, curve.edges[1:]):
                if hi <= b:
                    continue
                lo = max(lo, b)
                width = (hi - lo) / 10
                for t in range(10):
                    total += curve(lo + width * (t + F(1, 2))) * width
            assert curve.tail_integral(b) == total


def test_non_increasing_truthful():
    rng = random.Random(5)
    for _ in range(200):
        curve = random_curve(rng)
        for b_true in curve.edges[1:]:
            assert truthful_on_grid(curve, b_true)


def test_single_machine_divergent():
    curve = workload_curve(Instance.from_values([1], [1, 2]), PostedPriceScheduler(), 0)
    assert set(curve.loads) == {3}
    assert curve.divergent
    assert payment(curve, 1).truncated


def test_curve_matches_reruns():
    inst = Instance.from_values([1, 1], [1] * 5)
    mech = PostedPriceScheduler()
    curve = workload_curve(inst, mech, 0)
    for b in curve.edges[1:]:
        assert curve(b) == mech.run(inst.with_speed(0, 1 / b)).state.workloads[0]
    # constant between consecutive powers of two
    assert curve(F(3, 8)) == curve(F(1, 2))
    assert curve.is_non_increasing()


def test_curve_breakpoints_are_powers():
    inst = Instance.from_values([1, 2], [1, 1, 1])
    curve = workload_curve(inst, PostedPriceScheduler(rounding_base=4), 1)
    inner = curve.edges[1:-1]
    assert all(e in {F(4) ** k for k in range(-8, 12)} or e == F(1, 2) for e in inner)


def test_base_one_uses_grid():
    inst = Instance.from_values([1, 3], [1, 2])
    grid = [F(1, 4), F(1, 3), F(1, 2), 1]
    curve = workload_curve(inst, PostedPriceScheduler(rounding_base=1), 0, b_range=(F(1, 8), 2), grid=grid)
    assert set(grid) <= set(curve.edges)


def test_utility_table_and_csv():
    curve = step_curve()
    rows = utility_table(curve)
    assert [r["b"] for r in rows] == list(curve.edges[1:])
    assert all(r["utility_truth"] >= r["utility_best_lie"] for r in rows)
    text = curve_csv(curve)
    assert text.splitlines()[0].startswith("b,L,P,utility_truth,utility_best_lie")


def test_machine_payments():
    inst = Instance.from_values([1, 2], [1, 1, 1])
    pays = machine_payments(inst, PostedPriceScheduler())
    assert len(pays) == 2
    assert all(p.value >= 0 for p in pays)
