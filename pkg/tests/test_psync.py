import pytest
from hypothesis import given, settings, strategies as st

from goodcase.core import BOTTOM, Keyring, val
from goodcase.proto_psync import EMPTY, Certificate, check_certificate, leader_of
from goodcase.scenarios import Setup, agreement

from psync_cases import commit_views, leader_behaviors, lock_and_vote_violations

V0, V1 = val(0), val(1)


def entries(ring, w, n, by_party):
    """by_party: party -> value or None for ⊥; leader-signed then countersigned."""
    L = leader_of(w, n)
    out = []
    for j, v in by_party.items():
        if v is None:
            out.append(ring.signer(j).sign(("vw", BOTTOM, w)))
        else:
            out.append(ring.signer(j).sign(ring.signer(L).sign(("vw", v, w))))
    return tuple(out)


def status(ring, n, f, w, by_party):
    return check_certificate(Certificate(w, entries(ring, w, n, by_party)), n, f, ring.verify)


def test_empty_certificate_locks_anything():
    assert check_certificate(EMPTY, 4, 1, Keyring().verify).allows(val(9))


def test_unanimous_certificate_locks():
    ring = Keyring()
    st_ = status(ring, 9, 2, 1, {1: V0, 2: V0, 3: V0, 4: None, 5: None, 6: None, 7: None})
    assert (st_.kind, st_.value) == ("locks", V0)


def test_too_few_entries_is_invalid():
    ring = Keyring()
    assert status(ring, 9, 2, 1, {1: V0, 2: V0, 3: V0}).kind == "invalid"


def test_duplicate_signer_is_invalid():
    ring = Keyring()
    es = entries(ring, 1, 4, {1: V0, 2: V0})
    assert check_certificate(Certificate(1, es + es[:1]), 4, 1, ring.verify).kind == "invalid"


def test_mixed_values_need_non_leader_majority():
    ring = Keyring()
    # leader 0 signs both values; 2f non-leader entries for v0 still lock it
    by_party = {0: V1, 1: V0, 2: V0, 3: V0, 4: V0, 5: None, 6: None}
    assert status(ring, 9, 2, 1, by_party).value == V0
    by_party = {0: V1, 1: V0, 2: V0, 3: V0, 4: None, 5: None, 6: None}
    assert status(ring, 9, 2, 1, by_party).kind == "nolock"


def test_unverifiable_entry_is_invalid():
    ring, other = Keyring(), Keyring()
    es = entries(ring, 1, 4, {1: V0, 2: V0}) + entries(other, 1, 4, {3: V0})
    assert check_certificate(Certificate(1, es), 4, 1, ring.verify).kind == "invalid"


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3), st.data())
def test_certificate_cannot_lock_against_large_honest_vote(f, data):
    n = 5 * f - 1
    w = 1
    L = leader_of(w, n)
    parties = list(range(n))
    byz = set(data.draw(st.lists(st.sampled_from(parties), min_size=f, max_size=f, unique=True)))
    honest = [p for p in parties if p not in byz]
    voters = set(data.draw(st.lists(st.sampled_from(honest), min_size=3 * f - 1, max_size=3 * f - 1, unique=True)))
    # the remaining honest may vote v1 only if the leader is Byzantine
    alt = [V1, None] if L in byz else [None]
    by_party = {}
    for p in parties:
        if p in voters:
            by_party[p] = V0
        elif p in byz:
            by_party[p] = data.draw(st.sampled_from([V0, V1, None] if L in byz else [V0, None]))
        else:
            by_party[p] = data.draw(st.sampled_from(alt))
    chosen = data.draw(st.lists(st.sampled_from(parties), min_size=4 * f - 1, max_size=n, unique=True))
    ring = Keyring()
    st_ = status(ring, n, f, w, {p: by_party[p] for p in chosen})
    assert st_.kind != "locks" or st_.value == V0


CASES = [((4, 1), False), ((8, 2), True), ((9, 2), False)]


@pytest.mark.parametrize("nf,override", CASES, ids=["4-1", "8-2-override", "9-2"])
def test_byzantine_leader_behaviors(nf, override):
    worlds = leader_behaviors(*nf, override=override)
    assert len(worlds) >= 10
    for name, w in worlds.items():
        r = w.run()
        views = commit_views(r)
        assert set(views) == set(r.world.honest), name
        assert agreement(r)[0], name
        assert not lock_and_vote_violations(r), name
        first = {v for v, view in views.values() if view == 1}
        assert first <= {v for v, _ in views.values()} and len({v for v, _ in views.values()}) == 1, name


def test_good_case_commits_in_view_one_at_two_delta():
    setup = Setup("psync", 9, 2)
    r = setup.world(inputs={0: V0}).run()
    views = commit_views(r)
    assert {v for v, _ in views.values()} == {V0}
    assert max(c[2] for c in r.commits().values()) == 2 * setup.Delta


def test_out_of_region_refused_without_override():
    with pytest.raises(ValueError, match="5f"):
        Setup("psync", 8, 2).world()
