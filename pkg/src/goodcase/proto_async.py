"""Two-round Byzantine reliable broadcast and asynchronous round accounting."""

from __future__ import annotations

from .core import SignedPayload, Value
from .simnet import Commit, Multicast, Terminate


class BRB:
    """Vote on the first valid proposal; commit on n-f matching votes.

    The committing party forwards the quorum so that everyone else can
    commit after one more hop.
    """

    def __init__(self, signer, n, f, broadcaster, value=None, validity=None):
        self.signer = signer
        self.me = signer.party
        self.n, self.f = n, f
        self.leader = broadcaster
        self.value = value
        self.validity = validity or (lambda v: True)
        self.voted = False
        self.votes = {}
        self.done = False

    def on_start(self, now):
        if self.me == self.leader:
            return [Multicast(self.signer.sign(("propose", self.value)))]
        return []

    def on_timer(self, now, tag):
        return []

    def on_message(self, now, src, msg, face=None):
        if self.done:
            return []
        out = []
        if isinstance(msg, tuple) and len(msg) == 2 and msg[0] == "fwd":
            for vote in msg[1]:
                self._take_vote(vote)
        elif isinstance(msg, SignedPayload) and self.signer.verify(msg):
            kind = msg.payload[0] if isinstance(msg.payload, tuple) else None
            if kind == "propose" and self._is_proposal(msg) and not self.voted:
                self.voted = True
                vote = self.signer.sign(("vote", msg.payload[1]))
                out.append(Multicast(vote))
            elif kind == "vote":
                self._take_vote(msg)
        for v in sorted(self.votes):
            quorum = self.votes[v]
            if len(quorum) >= self.n - self.f:
                self.done = True
                bundle = tuple(quorum[i] for i in sorted(quorum))
                out += [Multicast(("fwd", bundle)), Commit(v), Terminate()]
                break
        return out

    def _is_proposal(self, sp):
        p = sp.payload
        return (
            sp.signers == (self.leader,)
            and len(p) == 2
            and isinstance(p[1], Value)
            and not p[1].is_bottom
            and self.validity(p[1])
        )

    def _take_vote(self, sp):
        if not (isinstance(sp, SignedPayload) and len(sp.chain) == 1 and self.signer.verify(sp)):
            return
        p = sp.payload
        if isinstance(p, tuple) and len(p) == 2 and p[0] == "vote" and isinstance(p[1], Value):
            self.votes.setdefault(p[1], {}).setdefault(sp.origin, sp)


def brb_factory(n, f, broadcaster, inputs, validity=None):
    return {
        p: (lambda signer, p=p: BRB(signer, n, f, broadcaster, inputs.get(p), validity))
        for p in range(n)
    }


# round accounting

STEP_KINDS = ("start", "deliver", "timer")


def steps_of(trace):
    """Abstract (is_start, delivered message id, sent message ids) per step."""
    sends = {}
    for e in trace.events:
        if e.kind == "send":
            sends.setdefault(e.step, []).append(e.idx)
    out, index = [], {}
    for e in trace.events:
        if e.kind in STEP_KINDS:
            index[e.idx] = len(out)
            out.append((e.kind == "start", e.cause if e.kind == "deliver" else None, tuple(sends.get(e.idx, ()))))
    # a message dropped only because its recipient already terminated would
    # still have arrived eventually; deliver it virtually after everything else
    delivered = {s[1] for s in out}
    stopped = {e.party for e in trace.events if e.kind == "terminate"}
    for e in trace.events:
        if e.kind == "send" and e.peer in stopped and e.idx not in delivered:
            out.append((False, e.idx, ()))
    return out, index


def _delivery_positions(steps):
    pos = {}
    for i, (_, msg, _) in enumerate(steps):
        if msg is not None:
            pos[msg] = i
    return pos


def _prefix_end(steps):
    starts = [i for i, s in enumerate(steps) if s[0]]
    return starts[-1] if starts else -1


def assign_rounds(steps):
    """Round of every step, scanning once with per-round high-water marks."""
    m = len(steps)
    pos = _delivery_positions(steps)
    rounds = [None] * m
    hi = {}

    def put(i, r):
        rounds[i] = r
        for msg in steps[i][2]:
            if msg in pos:
                hi[r] = max(hi.get(r, -1), pos[msg])

    b = _prefix_end(steps)
    for i in range(b + 1):
        put(i, 0)
    r = 0
    while b < m - 1:
        top = hi.get(r, -1)
        if top > b:
            for i in range(b + 1, top + 1):
                put(i, r + 1)
            b, r = top, r + 1
        else:
            b += 1
            put(b, r)
    return rounds


def assign_rounds_naive(steps):
    """Same assignment, recomputing each round boundary from scratch."""
    m = len(steps)
    pos = _delivery_positions(steps)
    rounds = [None] * m
    b = _prefix_end(steps)
    for i in range(b + 1):
        rounds[i] = 0
    r = 0
    while b < m - 1:
        top = -1
        for i in range(b + 1):
            if rounds[i] == r:
                for msg in steps[i][2]:
                    top = max(top, pos.get(msg, -1))
        if top > b:
            for i in range(b + 1, top + 1):
                rounds[i] = r + 1
            b, r = top, r + 1
        else:
            b += 1
            rounds[b] = r
    return rounds


def commit_rounds(trace, naive=False):
    """party -> round of the step in which it first committed."""
    steps, index = steps_of(trace)
    rounds = (assign_rounds_naive if naive else assign_rounds)(steps)
    out = {}
    for e in trace.events:
        if e.kind == "commit" and e.party not in out:
            out[e.party] = rounds[index[e.step]]
    return out
