"""Synchronous Byzantine broadcast protocols and the agreement fallback."""

from __future__ import annotations

import math
from fractions import Fraction

from .core import BOTTOM, SignedPayload, Value, walk_signed
from .simnet import Commit, Multicast, SetTimer, Terminate


class DolevStrongBA:
    """n parallel authenticated broadcasts in lock-step rounds of 2Δ.

    Every party broadcasts its input; a value is accepted in round r when
    its chain carries at least r distinct signers starting at the
    originator, and is relayed at once with one more signature. After
    f+1 rounds each instance with exactly one accepted value yields that
    value and the plurality of yields is the decision.
    """

    def __init__(self, signer, n, f, Delta):
        self.signer = signer
        self.me = signer.party
        self.n, self.f = n, f
        self.round_len = 2 * Fraction(Delta)
        self.start_at = None
        self.early = []
        self.accepted = {o: [] for o in range(n)}

    @property
    def end(self):
        return self.start_at + self.round_len * (self.f + 1)

    def start(self, now, value):
        self.start_at = now
        sp = self.signer.sign(("ba", value))
        self.accepted[self.me].append(value)
        out = [Multicast(sp)]
        for msg in self.early:
            out += self.on_message(now, msg)
        self.early = []
        return out

    @staticmethod
    def is_ba(msg):
        return isinstance(msg, SignedPayload) and isinstance(msg.payload, tuple) and msg.payload[:1] == ("ba",)

    def round_of(self, now):
        k = math.ceil((now - self.start_at) / self.round_len)
        return max(1, k)

    def on_message(self, now, msg):
        if self.start_at is None:
            self.early.append(msg)
            return []
        if now > self.end:
            return []
        p = msg.payload
        if len(p) != 2 or not isinstance(p[1], Value) or not self.signer.verify(msg):
            return []
        signers = msg.signers
        if len(set(signers)) != len(signers) or len(signers) < self.round_of(now):
            return []
        got = self.accepted[msg.origin]
        if p[1] in got or len(got) >= 2:
            return []
        got.append(p[1])
        if self.me in signers:
            return []
        return [Multicast(self.signer.sign(msg))]

    def decide(self):
        counts = {}
        for o in range(self.n):
            got = self.accepted[o]
            if len(got) == 1:
                counts[got[0]] = counts.get(got[0], 0) + 1
        if not counts:
            return BOTTOM
        best = max(counts.values())
        return min(v for v, c in counts.items() if c == best)


class SyncBB:
    """Shared plumbing: proposal parsing, equivocation tracking, BA hand-off."""

    ba_at_factor = (3, 2)  # BA starts at aΔ + bσ

    def __init__(self, signer, n, f, Delta, broadcaster, value=None, sigma=None, validity=None):
        self.signer = signer
        self.me = signer.party
        self.n, self.f = n, f
        self.Delta = Fraction(Delta)
        self.sigma = self.Delta if sigma is None else Fraction(sigma)
        self.leader = broadcaster
        self.value = value
        self.validity = validity or (lambda v: True)
        self.lock = BOTTOM
        self.committed = None
        self.seen_values = {}
        self.equiv_at = None
        self.ba = DolevStrongBA(signer, n, f, Delta)
        self.done = False

    @property
    def ba_time(self):
        a, b = self.ba_at_factor
        return a * self.Delta + b * self.sigma

    def proposal_value(self, sp):
        if not (isinstance(sp, SignedPayload) and sp.signers == (self.leader,)):
            return None
        p = sp.payload
        if not (isinstance(p, tuple) and len(p) == 2 and p[0] == "propose"):
            return None
        v = p[1]
        if not isinstance(v, Value) or v.is_bottom or not self.validity(v) or not self.signer.verify(sp):
            return None
        return v

    def note(self, now, msg):
        for sp in walk_signed(msg):
            v = self.proposal_value(sp)
            if v is not None:
                self.seen_values.setdefault(v, True)
        if self.equiv_at is None and len(self.seen_values) > 1:
            self.equiv_at = now

    def quiet_through(self, t):
        """No equivocation detected at or before local time t."""
        return self.equiv_at is None or self.equiv_at > t

    def commit(self, v):
        if self.committed is not None:
            return []
        self.committed = v
        return [Commit(v)]

    def on_start(self, now):
        out = [SetTimer(self.ba_time, "ba")]
        if self.me == self.leader:
            out.insert(0, Multicast(self.signer.sign(("propose", self.value))))
        return out

    def on_message(self, now, src, msg, face=None):
        if self.done:
            return []
        if DolevStrongBA.is_ba(msg):
            return self.ba.on_message(now, msg)
        self.note(now, msg)
        return self.handle(now, src, msg)

    def on_timer(self, now, tag):
        if self.done:
            return []
        if tag == "ba":
            out = self.before_ba(now)
            out += self.ba.start(now, self.lock)
            return out + [SetTimer(self.ba.end, "decide")]
        if tag == "decide":
            self.done = True
            return self.commit(self.ba.decide()) + [Terminate()]
        return self.timer(now, tag)

    def before_ba(self, now):
        return []

    def timer(self, now, tag):
        return []

    def handle(self, now, src, msg):
        return []

    def votes_in(self, msg):
        if isinstance(msg, tuple) and len(msg) == 2 and msg[0] == "fwd" and isinstance(msg[1], tuple):
            return list(msg[1])
        return [msg]

    def parse_vote(self, sp):
        """(d or None, value, proposal) of a valid vote, else None."""
        if not (isinstance(sp, SignedPayload) and len(sp.chain) == 1):
            return None
        p = sp.payload
        if not (isinstance(p, tuple) and p and p[0] == "vote"):
            return None
        d, prop = (None, p[1]) if len(p) == 2 else (p[1], p[2]) if len(p) == 3 else (None, None)
        v = self.proposal_value(prop)
        if v is None or not self.signer.verify(sp):
            return None
        return d, v, prop


class TwoDeltaBB(SyncBB):
    """Vote on the first proposal, commit on n-f votes by 2Δ+σ."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.voted = False
        self.tally = {}
        self.quorum = None

    def handle(self, now, src, msg):
        out = []
        v = self.proposal_value(msg)
        if v is not None and not self.voted:
            self.voted = True
            out.append(Multicast(self.signer.sign(("vote", msg))))
        for sp in self.votes_in(msg):
            parsed = self.parse_vote(sp)
            if parsed is None or parsed[0] is not None:
                continue
            box = self.tally.setdefault(parsed[1], {})
            box.setdefault(sp.origin, sp)
            if self.quorum is None and len(box) >= self.n - self.f:
                self.quorum = parsed[1]
                self.lock = parsed[1]
                out.append(Multicast(("fwd", tuple(box[j] for j in sorted(box)))))
                if now <= 2 * self.Delta + self.sigma:
                    out += self.commit(parsed[1])
        return out


class ThirdBB(SyncBB):
    """f ≤ n/3: the fast path arms only after a quiet Δ vote window."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.voted = False
        self.armed = False
        self.tally = {}
        self.forwarded = set()
        self.commit_msgs = {}

    def handle(self, now, src, msg):
        out = []
        v = self.proposal_value(msg)
        if v is not None and not self.voted:
            self.voted = True
            out.append(Multicast(self.signer.sign(("vote", msg))))
            out.append(SetTimer(now + self.Delta, "vote-timer"))
        if isinstance(msg, SignedPayload) and len(msg.chain) == 1 and msg.payload[:1] == ("commit",):
            cv = self.proposal_value(msg.payload[1]) if len(msg.payload) == 2 else None
            if cv is not None and self.signer.verify(msg):
                self.commit_msgs.setdefault(msg.origin, cv)
        for sp in self.votes_in(msg):
            parsed = self.parse_vote(sp)
            if parsed is not None and parsed[0] is None:
                self.tally.setdefault(parsed[1], {}).setdefault(sp.origin, sp)
        if self.armed:
            out += self._quorums(now)
        return out

    def timer(self, now, tag):
        if tag == "vote-timer" and self.equiv_at is None:
            self.armed = True
            return self._quorums(now)
        return []

    def _quorums(self, now):
        out = []
        for v in sorted(self.tally):
            box = self.tally[v]
            if v in self.forwarded or len(box) < self.n - self.f:
                continue
            self.forwarded.add(v)
            out.append(Multicast(("fwd", tuple(box[j] for j in sorted(box)))))
            if now <= 2 * self.Delta + self.sigma and self.committed is None:
                self.lock = v
                prop = next(iter(box.values())).payload[1]
                out += self.commit(v)
                out.append(Multicast(self.signer.sign(("commit", prop))))
        return out

    def before_ba(self, now):
        full = {v: frozenset(b) for v, b in self.tally.items() if len(b) >= self.n - self.f}
        if len(full) == 1:
            (v,) = full
            self.lock = v
            return []
        if len(full) < 2:
            return []
        values = sorted(full)
        doubles = set()
        for i, a in enumerate(values):
            for b in values[i + 1:]:
                doubles |= full[a] & full[b]
        trusted = sorted(cv for j, cv in self.commit_msgs.items() if j not in doubles)
        if not trusted:
            return []
        self.lock = trusted[0]
        return self.commit(trusted[0])


class SyncStartBB(SyncBB):
    """n/3 < f < n/2 with simultaneous start; votes carry receipt time d."""

    ba_at_factor = (4, 0)

    def __init__(self, *a, **kw):
        kw.setdefault("sigma", 0)
        super().__init__(*a, **kw)
        self.voted = False
        self.rank = self.Delta + 1
        self.tally = {}
        self.scheduled = {}

    def handle(self, now, src, msg):
        out = []
        v = self.proposal_value(msg)
        if v is not None and not self.voted and src == self.leader:
            self.voted = True
            if now <= self.Delta:
                out.append(Multicast(self.signer.sign(("vote", now, msg))))
        for sp in self.votes_in(msg):
            parsed = self.parse_vote(sp)
            if parsed is None or not isinstance(parsed[0], Fraction | int) or not 0 <= parsed[0] <= self.Delta:
                continue
            d, v, _ = parsed
            box = self.tally.setdefault(v, {})
            if sp.origin in box:
                continue
            box[sp.origin] = (Fraction(d), sp)
            out += self._check(now, v)
        return out

    def _t_min(self, v):
        ds = sorted(d for d, _ in self.tally[v].values())
        return ds[self.f] if len(ds) > self.f else None

    def _check(self, now, v):
        t_min = self._t_min(v)
        if t_min is None:
            return []
        t = max(t_min, now - 2 * self.Delta)
        if t <= self.Delta and self.rank > t:
            self.lock, self.rank = v, t
        at = max(now, t_min + self.Delta)
        if at <= 2 * self.Delta and (v not in self.scheduled or at < self.scheduled[v]):
            self.scheduled[v] = at
            return [SetTimer(at, ("commit", v, t_min))]
        return []

    def timer(self, now, tag):
        if not (isinstance(tag, tuple) and tag[0] == "commit"):
            return []
        _, v, t_min = tag
        if self.committed is not None or not self.quiet_through(t_min + self.Delta):
            return []
        box = self.tally[v]
        chosen = sorted(box, key=lambda j: (box[j][0], j))[: self.f + 1]
        return self.commit(v) + [Multicast(("fwd", tuple(box[j][1] for j in chosen)))]


def grid(Delta, m):
    Delta = Fraction(Delta)
    return tuple(Delta * k / m for k in range(m + 1))


class OneAndHalfBB(SyncBB):
    """n/3 ≤ f < n/2 with skewed start; votes are staggered over a d-grid."""

    ba_at_factor = (Fraction(13, 2), 2)

    def __init__(self, *a, m=5, **kw):
        super().__init__(*a, **kw)
        self.points = grid(self.Delta, m)
        self.rank = self.Delta + 1
        self.prop = None
        self.t_prop = None
        self.direct = False
        self.tally = {}
        self.complete = {}
        self.waiting = []

    def handle(self, now, src, msg):
        out = []
        if self.prop is None and self.proposal_value(msg) is not None:
            self.prop, self.t_prop = msg, now
            self.direct = src == self.leader and now <= self.Delta + self.sigma
            out.append(Multicast(msg))
            for d in self.points:
                out.append(SetTimer(now + self.Delta - d / 2, ("vote", d)))
            for key in self.waiting:
                out += self._evaluate(key)
            self.waiting = []
        for sp in self.votes_in(msg):
            parsed = self.parse_vote(sp)
            if parsed is None or parsed[0] not in self.points:
                continue
            d, v, _ = parsed
            box = self.tally.setdefault((d, v), {})
            if sp.origin in box:
                continue
            box[sp.origin] = sp
            if len(box) == self.f + 1:
                self.complete[(d, v)] = now
                out.append(Multicast(("fwd", tuple(box[j] for j in sorted(box)))))
                if self.t_prop is None:
                    self.waiting.append((d, v))
                else:
                    out += self._evaluate((d, v))
        return out

    def _evaluate(self, key):
        d, v = key
        t_votes = self.complete[key]
        gap = t_votes - self.t_prop
        out = []
        if gap <= self.Delta + Fraction(3, 2) * d and self.direct:
            out.append(SetTimer(max(t_votes, self.t_prop + self.Delta + d / 2), ("commit", d, v)))
        if gap <= Fraction(9, 2) * self.Delta and self.rank > d:
            self.lock, self.rank = v, d
        return out

    def timer(self, now, tag):
        if tag[0] == "vote":
            if self.equiv_at is not None:
                return []
            return [Multicast(self.signer.sign(("vote", tag[1], self.prop)))]
        if tag[0] == "commit":
            _, d, v = tag
            if self.quiet_through(self.t_prop + self.Delta + d / 2):
                return self.commit(v)
        return []


PROTOCOLS = {
    "2delta": TwoDeltaBB,
    "third": ThirdBB,
    "syncstart": SyncStartBB,
    "onehalf": OneAndHalfBB,
}


def sync_factory(kind, n, f, Delta, broadcaster, inputs, validity=None, **kw):
    cls = PROTOCOLS[kind]
    return {
        p: (lambda signer, p=p: cls(signer, n, f, Delta, broadcaster, inputs.get(p), validity=validity, **kw))
        for p in range(n)
    }
