"""View-based validated broadcast for partial synchrony with 2-round good case."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import BOTTOM, SignedPayload, Value, encode
from .simnet import Commit, Multicast, Send, SetTimer, Terminate


@dataclass(frozen=True)
class Certificate:
    view: int
    entries: tuple

    def __encode__(self):
        return b"C" + encode((self.view, self.entries))

    def __children__(self):
        return self.entries


EMPTY = Certificate(0, ())


@dataclass(frozen=True)
class CertStatus:
    kind: str  # invalid | nolock | locks | locks_any
    value: Value | None = None

    def allows(self, v):
        return self.kind == "locks_any" or (self.kind == "locks" and self.value == v)


INVALID = CertStatus("invalid")


def leader_of(w, n):
    return (w - 1) % n


def parse_entry(sp, w, n):
    """(value, outer signer) of a signed <v, w> entry, or None if malformed."""
    if not isinstance(sp, SignedPayload):
        return None
    p = sp.payload
    if not (isinstance(p, tuple) and len(p) == 3 and p[0] == "vw" and p[2] == w and isinstance(p[1], Value)):
        return None
    if p[1].is_bottom:
        return (BOTTOM, sp.outer) if len(sp.chain) == 1 else None
    if len(sp.chain) == 2 and sp.origin == leader_of(w, n):
        return (p[1], sp.outer)
    return None


def check_certificate(cert, n, f, verify, validity=lambda v: True) -> CertStatus:
    if not isinstance(cert, Certificate):
        return INVALID
    if cert == EMPTY:
        return CertStatus("locks_any")
    w, L = cert.view, leader_of(cert.view, n)
    seen, per_value, non_leader = set(), {}, {}
    for sp in cert.entries:
        parsed = parse_entry(sp, w, n)
        if parsed is None or not verify(sp):
            return INVALID
        v, j = parsed
        if j in seen:
            return INVALID
        seen.add(j)
        if v.is_bottom:
            continue
        if not validity(v):
            return INVALID
        per_value[v] = per_value.get(v, 0) + 1
        if j != L:
            non_leader[v] = non_leader.get(v, 0) + 1
    if len(seen) < 4 * f - 1:
        return INVALID
    if len(per_value) == 1:
        (v, c), = per_value.items()
        if c >= 2 * f - 1:
            return CertStatus("locks", v)
    for v in sorted(non_leader):
        if non_leader[v] >= 2 * f:
            return CertStatus("locks", v)
    return CertStatus("nolock")


class PsyncVBB:
    def __init__(self, signer, n, f, Delta, value=None, validity=None):
        self.signer = signer
        self.me = signer.party
        self.n, self.f = n, f
        self.Delta = Fraction(Delta)
        self.q = 4 * f - 1
        self.value = value
        self.validity = validity or (lambda v: True)
        self.view = 0
        self.ch = EMPTY
        self.voted = {}
        self.timed_out = set()
        self.leader_vals = {}
        self.pending = {}
        self.votes = {}
        self.timeouts = {}
        self.statuses = {}
        self.proposed = set()
        self.done = False

    def _verify(self, sp):
        return self.signer.verify(sp)

    def _cert(self, cert):
        return check_certificate(cert, self.n, self.f, self._verify, self.validity)

    # entry points

    def on_start(self, now):
        return self._enter(now, 1)

    def on_timer(self, now, tag):
        if self.done or tag != ("view", self.view) or self.view in self.timed_out:
            return []
        return self._timeout(self.view)

    def on_message(self, now, src, msg, face=None):
        if self.done:
            return []
        if isinstance(msg, tuple) and len(msg) == 2 and msg[0] in ("fwd_votes", "fwd_timeouts"):
            out = []
            for sp in msg[1] if isinstance(msg[1], tuple) else ():
                out += self._signed(now, sp)
                if self.done:
                    break
            return out
        return self._signed(now, msg)

    def _signed(self, now, sp):
        if not (isinstance(sp, SignedPayload) and len(sp.chain) == 1 and isinstance(sp.payload, tuple) and sp.payload):
            return []
        if not self._verify(sp):
            return []
        kind = sp.payload[0]
        if kind == "propose":
            return self._on_proposal(now, sp)
        if kind == "vote":
            return self._on_vote(sp)
        if kind == "timeout":
            return self._on_timeout(now, sp)
        if kind == "status":
            return self._on_status(now, sp)
        return []

    # views

    def _enter(self, now, w):
        self.view = w
        out = [SetTimer(now + 4 * self.Delta, ("view", w))]
        if w > 1:
            status = self.signer.sign(("status", w - 1, self.ch))
            out.append(Send(leader_of(w, self.n), status))
        if w == 1 and self.me == leader_of(1, self.n):
            out += self._propose(w, self.value, None)
        out += self._try_propose(w)
        for sp in self.pending.pop(w, []):
            out += self._on_proposal(now, sp)
        return out

    def _timeout(self, w):
        self.timed_out.add(w)
        entry = self.voted.get(w) or self.signer.sign(("vw", BOTTOM, w))
        return [Multicast(self.signer.sign(("timeout", entry)))]

    def _note_leader_value(self, w, v):
        if not v.is_bottom:
            self.leader_vals.setdefault(w, {})[v] = True

    # propose / vote

    def _propose(self, w, v, proof):
        if w in self.proposed or v is None:
            return []
        self.proposed.add(w)
        inner = self.signer.sign(("vw", v, w))
        return [Multicast(self.signer.sign(("propose", inner, proof)))]

    def _proposal_value(self, sp):
        p = sp.payload
        if len(p) != 3 or not isinstance(p[1], SignedPayload):
            return None
        inner = p[1]
        q = inner.payload
        if not (isinstance(q, tuple) and len(q) == 3 and q[0] == "vw" and isinstance(q[2], int)):
            return None
        w, L = q[2], leader_of(q[2], self.n)
        if sp.signers != (L,) or inner.signers != (L,):
            return None
        v = q[1]
        if not isinstance(v, Value) or v.is_bottom or not self.validity(v):
            return None
        return w, v

    def _justified(self, w, v, proof):
        if w == 1:
            return proof is None
        if isinstance(proof, Certificate):
            st = self._cert(proof)
            return proof.view == w - 1 and st.kind == "locks" and st.value == v
        certs = self._status_certs(w, proof)
        if certs is None:
            return False
        top = max(c.view for c, _ in certs)
        return any(st.allows(v) for c, st in certs if c.view == top)

    def _status_certs(self, w, statuses):
        """Certificates of a valid status set for view w, or None."""
        if not isinstance(statuses, tuple):
            return None
        seen, out = set(), []
        for s in statuses:
            c = self._valid_status(w, s)
            if c is None or s.origin in seen:
                return None
            seen.add(s.origin)
            out.append(c)
        return out if len(out) >= self.q else None

    def _valid_status(self, w, s):
        if not (isinstance(s, SignedPayload) and len(s.chain) == 1 and self._verify(s)):
            return None
        p = s.payload
        if not (isinstance(p, tuple) and len(p) == 3 and p[0] == "status" and p[1] == w - 1):
            return None
        cert = p[2]
        st = self._cert(cert)
        if st.kind not in ("locks", "locks_any") or cert.view > w - 1:
            return None
        return cert, st

    def _on_proposal(self, now, sp):
        parsed = self._proposal_value(sp)
        if parsed is None:
            return []
        w, v = parsed
        self._note_leader_value(w, v)
        if w > self.view:
            self.pending.setdefault(w, []).append(sp)
            return []
        if w < self.view or w in self.voted or w in self.timed_out:
            return []
        if len(self.leader_vals.get(w, {})) > 1:
            return []
        if not self._justified(w, v, sp.payload[2]):
            return []
        entry = self.signer.sign(sp.payload[1])
        self.voted[w] = entry
        return [Multicast(self.signer.sign(("vote", entry)))]

    def _on_vote(self, sp):
        entry = sp.payload[1] if len(sp.payload) == 2 else None
        w = entry.payload[2] if isinstance(entry, SignedPayload) and isinstance(entry.payload, tuple) and len(entry.payload) == 3 else None
        parsed = parse_entry(entry, w, self.n) if isinstance(w, int) else None
        if parsed is None or parsed[1] != sp.origin or parsed[0].is_bottom:
            return []
        v = parsed[0]
        self._note_leader_value(w, v)
        box = self.votes.setdefault((w, v), {})
        box.setdefault(sp.origin, sp)
        if len(box) < self.q:
            return []
        self.done = True
        bundle = tuple(box[j] for j in sorted(box))
        return [Multicast(("fwd_votes", bundle)), Commit(v), Terminate()]

    # view change

    def _on_timeout(self, now, sp):
        entry = sp.payload[1] if len(sp.payload) == 2 else None
        w = entry.payload[2] if isinstance(entry, SignedPayload) and isinstance(entry.payload, tuple) and len(entry.payload) == 3 else None
        parsed = parse_entry(entry, w, self.n) if isinstance(w, int) and w >= 1 else None
        if parsed is None or parsed[1] != sp.origin:
            return []
        v = parsed[0]
        if not v.is_bottom and not self.validity(v):
            return []
        self._note_leader_value(w, v)
        self.timeouts.setdefault(w, {}).setdefault(sp.origin, sp)
        if w < self.view:
            return []
        chosen = self._new_view_set(w)
        if chosen is None:
            return []
        cert = Certificate(w, tuple(t.payload[1] for t in chosen))
        st = self._cert(cert)
        out = [Multicast(("fwd_timeouts", chosen))]
        if st.kind == "locks" and w > self.ch.view:
            self.ch = cert
        if w not in self.timed_out:
            out += self._timeout(w)
        return out + self._enter(now, w + 1)

    def _new_view_set(self, w):
        box = self.timeouts.get(w, {})
        ts = [box[j] for j in sorted(box)]
        values = sorted({t.payload[1].payload[1] for t in ts if not t.payload[1].payload[1].is_bottom})
        for v in [BOTTOM] + values:
            subset = [t for t in ts if t.payload[1].payload[1] in (BOTTOM, v)]
            if len(subset) >= self.q:
                return tuple(subset[: self.q])
        L = leader_of(w, self.n)
        others = [t for t in ts if t.origin != L]
        if len(others) >= self.q:
            return tuple(others[: self.q])
        return None

    def _on_status(self, now, sp):
        p = sp.payload
        if len(p) != 3 or not isinstance(p[1], int):
            return []
        w = p[1] + 1
        if leader_of(w, self.n) != self.me:
            return []
        self.statuses.setdefault(w, {}).setdefault(sp.origin, sp)
        return self._try_propose(w)

    def _try_propose(self, w):
        if w != self.view or w in self.proposed or leader_of(w, self.n) != self.me or w == 1:
            return []
        box = self.statuses.get(w, {})
        good = []
        for j in sorted(box):
            c = self._valid_status(w, box[j])
            if c is not None:
                good.append((box[j], c))
        if len(good) < self.q:
            return []
        good = good[: self.q]
        last = sorted(st.value for _, (c, st) in good if c.view == w - 1 and st.kind == "locks")
        if last:
            cert = next(c for _, (c, st) in good if c.view == w - 1 and st.value == last[0])
            return self._propose(w, last[0], cert)
        top = max(c.view for _, (c, _) in good)
        locked = sorted(st.value for _, (c, st) in good if c.view == top and st.kind == "locks")
        v = locked[0] if locked else self.value
        return self._propose(w, v, tuple(s for s, _ in good))


def psync_factory(n, f, Delta, inputs, validity=None):
    return {
        p: (lambda signer, p=p: PsyncVBB(signer, n, f, Delta, inputs.get(p, Value(f"v{p}")), validity))
        for p in range(n)
    }
