"""Hypothesis properties of the posted-price mechanism and the oracles."""

from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from loadbal import (
    Instance,
    PostedPriceScheduler,
    active_machines,
    check_anonymity,
    check_fairness,
    check_run,
    check_well_behaved,
    compute_prices,
    opt_exact,
)

rationals = st.builds(F, st.integers(1, 40), st.sampled_from([1, 2, 3, 4, 8]))
bases = st.sampled_from([1, 2, 4])


@st.composite
def instances(draw, max_m=6, max_n=12):
    speeds = draw(st.lists(st.one_of(rationals, st.sampled_from([F(1), F(2), F(4)])),
                           min_size=1, max_size=max_m))
    sizes = draw(st.lists(rationals, max_size=max_n))
    return Instance.from_values(speeds, sizes, draw(st.integers(0, 1000)))


@settings(max_examples=150, deadline=None)
@given(instances(), bases)
def test_well_behaved_every_step(inst, base):
    out = PostedPriceScheduler(rounding_base=base).run(inst)
    assert check_run(out, check_well_behaved, mode="strong").verdict == "pass"


@settings(max_examples=150, deadline=None)
@given(instances(), bases)
def test_prices_are_a_function_of_state(inst, base):
    mech = PostedPriceScheduler(rounding_base=base)
    out = mech.run(inst)
    for pre, step in zip(out.states(), out.steps):
        active = active_machines(pre, out.order)
        pv = compute_prices(pre, active=active)
        assert pv.prices == step.prices
        assert all(inc >= 0 for inc in pv.increments)


@settings(max_examples=150, deadline=None)
@given(instances(), bases)
def test_acceptance_inequality(inst, base):
    # the chosen machine never finishes the job later than any faster
    # active machine's current makespan
    out = PostedPriceScheduler(rounding_base=base).run(inst)
    for pre, step, job in zip(out.states(), out.steps, inst.jobs):
        i = step.chosen
        s = pre.announced_speeds
        after = pre.makespans[i] + job.reported_size / s[i]
        for k in active_machines(pre, out.order):
            if s[k] > s[i]:
                assert after <= pre.makespans[k]


@settings(max_examples=100, deadline=None)
@given(instances(max_m=5, max_n=8))
def test_makespan_gap_between_adjacent_classes(inst):
    # machines one rounding class apart: if every machine at speed >= 2^k has
    # makespan >= C, every machine at 2^(k-1) has makespan >= C - 4*OPT_2
    out = PostedPriceScheduler(rounding_base=2).run(inst)
    opt2 = opt_exact(inst, rounding_base=2)
    if not opt2.exact:
        return
    for st_ in out.states():
        s, c = st_.announced_speeds, st_.makespans
        for speed in set(s):
            lower = [c[i] for i in range(st_.m) if s[i] == speed / 2]
            upper = [c[i] for i in range(st_.m) if s[i] >= speed]
            if lower and upper:
                assert min(lower) >= min(upper) - 4 * opt2.value


@settings(max_examples=100, deadline=None)
@given(instances(), bases, st.randoms(use_true_random=False))
def test_fair_and_anonymous(inst, base, rnd):
    # duplicate a speed so fairness has something to check
    if inst.m > 1:
        inst = inst.with_speed(inst.m - 1, inst.speeds[0])
    mech = PostedPriceScheduler(rounding_base=base)
    assert check_run(mech.run(inst), check_fairness).verdict != "fail"
    sigma = list(range(inst.m))
    rnd.shuffle(sigma)
    assert check_anonymity(inst, mech, sigma).verdict == "pass"


@settings(max_examples=100, deadline=None)
@given(instances(), bases)
def test_makespans_never_decrease(inst, base):
    out = PostedPriceScheduler(rounding_base=base).run(inst)
    prev = None
    for st_ in out.states():
        if prev is not None:
            assert all(a <= b for a, b in zip(prev.makespans, st_.makespans))
        assert all(c * s == w for c, s, w in zip(st_.makespans, st_.announced_speeds, st_.workloads))
        prev = st_
