"""Scripted view-1 leader behaviors and trace scans for the partially synchronous protocol."""

from fractions import Fraction as F

from goodcase.core import SignedPayload, val
from goodcase.proto_psync import check_certificate
from goodcase.scenarios import Setup, equivocator, restricted, silent, start_only
from goodcase.simnet import FaceSpec


def _late(setup, extra):
    """Delay honest traffic towards `extra` parties until GST, Δ otherwise."""
    D = F(setup.Delta)

    def policy(env):
        if env.dst in extra and env.send_g < setup.gst:
            return setup.gst - env.send_g + D
        return D
    return policy


def leader_behaviors(n, f, override=False):
    """name -> World. Only the view-1 leader (party 0) is Byzantine."""
    base = Setup("psync", n, f, override=override)
    gst = Setup("psync", n, f, override=override, gst=6 * F(base.Delta))
    H = list(range(1, n))
    k, q = len(H), 4 * f - 1
    honest0 = base.node(0, val(0))
    worlds = {
        "silent": base.world({0: [FaceSpec(silent)]}),
        "split-half": base.world({0: equivocator(base, H[: k // 2], H[k // 2:])}),
        "split-one": base.world({0: equivocator(base, H[:-1], H[-1:])}),
        "to-f+1": base.world({0: [FaceSpec(restricted(honest0, n, H[: f + 1], ()))]}),
        "to-one": base.world({0: [FaceSpec(restricted(honest0, n, H[:1], ()))]}),
        "below-quorum": base.world({0: [FaceSpec(restricted(honest0, n, H[: q - 2], H[: q - 2]))]}),
        "propose-then-quit": base.world({0: [FaceSpec(start_only(honest0))]}),
        "late-second-value": base.world(
            {0: equivocator(base, H, H)},
            policy=lambda env: F(base.Delta) if env.src_face == 1 else F(1),
        ),
        "split-pre-gst": gst.world({0: equivocator(gst, H[:1], H[1:])}, policy=_late(gst, set(H[:1]))),
        "silent-pre-gst": gst.world({0: [FaceSpec(silent)]}, policy=_late(gst, set(H[: f + 1]))),
        "quit-slow-votes": gst.world({0: [FaceSpec(start_only(honest0))]}, policy=_late(gst, {H[-1]})),
        "minority-other-value": base.world(
            {0: equivocator(base, H[f:], H[:f])},
            policy=lambda env: F(1) if env.src_face == 1 else F(base.Delta),
        ),
    }
    for name, w in worlds.items():
        w.name = name
    return worlds


def honest_sends(result, kind):
    honest = set(result.world.honest)
    for e in result.trace.events:
        if e.kind == "send" and e.party in honest and isinstance(e.data, SignedPayload):
            p = e.data.payload
            if isinstance(p, tuple) and p and p[0] == kind:
                yield e, p


def honest_votes(result):
    """{(party, view, value)} of every honest vote."""
    return {(e.party, p[1].payload[2], p[1].payload[1]) for e, p in honest_sends(result, "vote")}


def commit_views(result):
    """party -> (value, view) for every honest commit, read from the forwarded vote quorum."""
    by_step = {}
    for e in result.trace.events:
        if e.kind == "send" and isinstance(e.data, tuple) and e.data[0] == "fwd_votes":
            by_step[e.step] = e.data[1][0].payload[1].payload[2]
    out = {}
    for e in result.trace.events:
        if e.kind == "commit" and e.party in result.world.honest:
            out[e.party] = (e.data, by_step[e.step])
    return out


def honest_locks(result):
    """(view, locked value) of every certificate an honest party reported in a status."""
    n, f = result.world.n, result.world.f
    out = []
    for e, p in honest_sends(result, "status"):
        st = check_certificate(p[2], n, f, result.keyring.verify)
        if st.kind == "locks":
            out.append((p[2].view, st.value))
    return out


def lock_and_vote_violations(result):
    """Messages contradicting an earlier commit or a large vote set."""
    f = result.world.f
    bad = []
    commits = commit_views(result)
    votes = honest_votes(result)
    locks = honest_locks(result)
    for p, (v, w) in commits.items():
        bad += [("vote", x) for x in votes if x[1] > w and x[2] != v]
        bad += [("lock", x) for x in locks if x[0] >= w and x[1] != v]
    tally = {}
    for _, w, v in votes:
        tally[(w, v)] = tally.get((w, v), 0) + 1
    for (w, v), c in tally.items():
        if c >= 3 * f - 1:
            bad += [("cert", x) for x in locks if x[0] == w and x[1] != v]
    return bad
