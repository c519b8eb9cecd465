from fractions import Fraction as F

import pytest

from goodcase.core import val
from goodcase.scenarios import (
    ADVERSARIES, LOWER_BOUNDS, Setup, adversary_world, build_scenario, compare_local_history, generic_suite, lb_async, lb_psync,
)


@pytest.mark.parametrize("name", sorted(LOWER_BOUNDS))
def test_lower_bound_constructions_hold(name):
    _, verdicts = build_scenario(name).run()
    assert verdicts and all(v.ok for v in verdicts), [v.line() for v in verdicts if not v.ok]


@pytest.mark.parametrize("f", [1, 2])
def test_async_bound_in_region_keeps_agreement(f):
    results, verdicts = lb_async(f=f).run()
    assert all(v.ok for v in verdicts)
    assert {c[0] for c in results["E3"].honest_commits().values()} in ({val(0)}, {val(1)}, set())


def test_async_bound_below_region_splits_honest_parties():
    results, verdicts = lb_async(f=1, n=3).run()
    assert all(v.ok for v in verdicts)
    assert {c[0] for c in results["E3"].honest_commits().values()} == {val(0), val(1)}


def test_psync_bound_larger_f():
    _, verdicts = lb_psync(f=3).run()
    assert all(v.ok for v in verdicts)


def test_invalid_parameters_are_rejected():
    with pytest.raises(ValueError):
        build_scenario("LB-PSYNC", f=2, n=9)
    with pytest.raises(ValueError):
        build_scenario("LB-SYNC-DPLUSD", f=1, n=4)
    with pytest.raises(ValueError):
        build_scenario("NOPE")


def test_local_history_comparison_detects_difference():
    s = Setup("brb", 4, 1)
    a = s.world(inputs={0: val(0)}).run()
    b = s.world(inputs={0: val(1)}).run()
    assert compare_local_history(a, a, 1)[0]
    assert not compare_local_history(a, b, 1)[0]


@pytest.mark.parametrize("setup", [
    Setup("brb", 4, 1), Setup("brb", 7, 2), Setup("psync", 4, 1), Setup("psync", 9, 2),
], ids=lambda s: f"{s.protocol}-{s.n}-{s.f}")
def test_generic_adversaries(setup):
    results, verdicts = generic_suite(setup).run()
    assert set(results) == set(ADVERSARIES)
    assert all(v.ok for v in verdicts), [v.line() for v in verdicts if not v.ok]


def test_random_adversary_depends_only_on_seed():
    s = Setup("psync", 4, 1)
    kind = "random-delay-double-vote"
    a = adversary_world(s, kind, seed=3).run().trace.to_jsonl()
    b = adversary_world(s, kind, seed=3).run().trace.to_jsonl()
    c = adversary_world(s, kind, seed=4).run().trace.to_jsonl()
    assert a == b and a != c
