"""Discrete-event network simulator with exact rational time."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .core import HarnessError, Keyring, SignedPayload, Value, encode, _h


class FairnessError(HarnessError):
    pass


class ModelViolation(HarnessError):
    pass


DROP = object()


# actions returned by protocol nodes

@dataclass(frozen=True)
class Send:
    to: int
    msg: object
    face: object = None


@dataclass(frozen=True)
class Multicast:
    msg: object


@dataclass(frozen=True)
class SetTimer:
    at: Fraction
    tag: object


@dataclass(frozen=True)
class Commit:
    value: Value


@dataclass(frozen=True)
class Terminate:
    pass


# timing models

@dataclass(frozen=True)
class Synchrony:
    delta: Fraction
    Delta: Fraction
    sigma: Fraction = Fraction(0)
    name = "sync"

    def __post_init__(self):
        if not (0 < self.delta <= self.Delta and 0 <= self.sigma <= self.delta):
            raise ValueError("synchrony needs 0 < δ ≤ Δ and 0 ≤ σ ≤ δ")

    def check(self, env, delay):
        if delay is DROP or not (0 <= delay <= self.delta):
            raise ModelViolation(f"honest delay {delay} outside [0, {self.delta}]")


@dataclass(frozen=True)
class PartialSynchrony:
    Delta: Fraction
    gst: Fraction = Fraction(0)
    name = "psync"

    def check(self, env, delay):
        if delay is DROP or delay < 0:
            raise ModelViolation("partial synchrony forbids dropping honest messages")
        if env.send_g + delay > max(env.send_g, self.gst) + self.Delta:
            raise ModelViolation(f"message sent at {env.send_g} delivered after GST+Δ bound")


@dataclass(frozen=True)
class Asynchrony:
    name = "async"

    def check(self, env, delay):
        if delay is DROP or delay < 0:
            raise ModelViolation("asynchrony requires eventual delivery of honest messages")


@dataclass(frozen=True)
class Envelope:
    src: int
    dst: int
    msg: object
    send_g: Fraction
    send_l: Fraction
    seq: int
    at_start: bool
    src_face: object = None


def constant(d):
    d = Fraction(d)
    return lambda env: d


# trace

@dataclass(frozen=True)
class Event:
    idx: int
    g: Fraction
    party: int
    l: Fraction
    kind: str
    data: object
    step: int
    peer: object = None
    cause: int = -1


def digest_of(msg) -> str:
    return _h(encode(msg)).hex() if msg is not None else ""


def _q(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


class Trace:
    def __init__(self, n):
        self.n = n
        self.events: list[Event] = []

    def add(self, *args, **kw):
        ev = Event(len(self.events), *args, **kw)
        self.events.append(ev)
        return ev

    def of(self, party, kind=None):
        return [e for e in self.events if e.party == party and (kind is None or e.kind == kind)]

    def commits(self):
        """party -> (value, local time, global time) of its first commit."""
        out = {}
        for e in self.events:
            if e.kind == "commit" and e.party not in out:
                out[e.party] = (e.data, e.l, e.g)
        return out

    def to_jsonl(self) -> str:
        lines = []
        for e in self.events:
            data = e.data
            rec = {
                "idx": e.idx,
                "g_time": _q(e.g),
                "l_time": _q(e.l),
                "party": e.party,
                "kind": e.kind,
                "peer": e.peer,
                "payload": repr(data) if isinstance(data, Value) else digest_of(data) if e.kind in ("send", "deliver") else repr(data),
            }
            lines.append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
        return "\n".join(lines) + ("\n" if lines else "")


# worlds

@dataclass(frozen=True)
class FaceSpec:
    """One honest-looking persona of a Byzantine party.

    ``accept(src, msg)`` filters inbound messages; ``targets`` limits
    outbound ones (None means everyone).
    """

    factory: object
    accept: object = None
    targets: tuple | None = None


def from_senders(senders):
    allowed = frozenset(senders)
    return lambda src, msg: src in allowed


@dataclass
class World:
    n: int
    f: int
    model: object
    roles: dict
    byzantine: dict = field(default_factory=dict)
    broadcaster: int = 0
    offsets: dict = field(default_factory=dict)
    policy: object = None
    horizon: Fraction = Fraction(10**4)
    validity: object = None
    name: str = ""

    @property
    def honest(self):
        return [p for p in range(self.n) if p not in self.byzantine]

    def offset(self, p):
        return Fraction(self.offsets.get(p, 0))

    def validate(self):
        if len(self.byzantine) > self.f:
            raise HarnessError(f"{len(self.byzantine)} Byzantine parties exceed f={self.f}")
        for p in self.honest:
            if p not in self.roles:
                raise HarnessError(f"honest party {p} has no role")
        sigma = getattr(self.model, "sigma", None)
        if sigma is not None:
            for p in self.honest:
                if not 0 <= self.offset(p) <= sigma:
                    raise ModelViolation(f"honest start offset of {p} exceeds σ={sigma}")

    def run(self):
        return Runner(self).run()


@dataclass
class RunResult:
    world: World
    trace: Trace
    terminated: dict
    keyring: Keyring | None = None

    def commits(self):
        return self.trace.commits()

    def honest_commits(self):
        c = self.commits()
        return {p: c[p] for p in self.world.honest if p in c}


START, DELIVER, TIMER = 0, 1, 2


class Runner:
    def __init__(self, world: World):
        world.validate()
        self.w = world
        self.keyring = Keyring()
        self.trace = Trace(world.n)
        self.queue = []
        self.seq = [0] * world.n
        self.terminated = {}
        self.nodes = {}
        self.faces = {}
        self.face_alive = {}
        for p in range(world.n):
            signer = self.keyring.signer(p)
            if p in world.byzantine:
                self.faces[p] = [(spec, spec.factory(signer)) for spec in world.byzantine[p]]
                self.face_alive[p] = [True] * len(self.faces[p])
            else:
                self.nodes[p] = world.roles[p](signer)

    def _push(self, g, cls, actor, item):
        s = self.seq[actor]
        self.seq[actor] += 1
        heapq.heappush(self.queue, (g, cls, actor, s, item))
        return s

    def run(self) -> RunResult:
        w = self.w
        for p in range(w.n):
            self._push(w.offset(p), START, p, (p,))
        while self.queue and self.queue[0][0] <= w.horizon:
            g, cls, actor, _, item = heapq.heappop(self.queue)
            if cls == START:
                self._start(g, item[0])
            elif cls == DELIVER:
                self._deliver(g, actor, *item)
            else:
                self._timer(g, actor, *item)
        if isinstance(w.model, Asynchrony):
            for g, cls, actor, _, item in self.queue:
                if cls == DELIVER and actor in self.nodes and item[0] in self.nodes and item[0] not in self.terminated:
                    raise FairnessError(f"honest message {actor}->{item[0]} still pending at horizon")
        return RunResult(w, self.trace, dict(self.terminated), self.keyring)

    def _local(self, p, g):
        return g - self.w.offset(p)

    def _start(self, g, p):
        ev = self.trace.add(g, p, self._local(p, g), "start", None, -1)
        self._step(p, ev, lambda node: node.on_start(self._local(p, g)))

    def _deliver(self, g, src, dst, msg, face, cause):
        if dst in self.terminated:
            return
        ev = self.trace.add(g, dst, self._local(dst, g), "deliver", msg, -1, peer=src, cause=cause)
        now = self._local(dst, g)
        if dst in self.faces:
            for k, (spec, node) in enumerate(self.faces[dst]):
                if face is not None and k != face:
                    continue
                if face is None and spec.accept is not None and not spec.accept(src, msg):
                    continue
                self._face_step(dst, k, ev, node.on_message(now, src, msg))
        else:
            self._step(dst, ev, lambda node: node.on_message(now, src, msg))

    def _timer(self, g, p, tag, face):
        if p in self.terminated:
            return
        ev = self.trace.add(g, p, self._local(p, g), "timer", tag, -1)
        now = self._local(p, g)
        if p in self.faces:
            self._face_step(p, face, ev, self.faces[p][face][1].on_timer(now, tag))
        else:
            self._step(p, ev, lambda node: node.on_timer(now, tag))

    def _step(self, p, ev, call):
        if p in self.faces:
            for k, (_, node) in enumerate(self.faces[p]):
                self._face_step(p, k, ev, call(node))
            return
        self._apply(p, None, ev, call(self.nodes[p]) or ())

    def _face_step(self, p, k, ev, actions):
        if self.face_alive[p][k]:
            self._apply(p, k, ev, actions or ())

    def _apply(self, p, face, ev, actions):
        now_g = ev.g
        for a in actions:
            if p in self.terminated or (face is not None and not self.face_alive[p][face]):
                break
            if isinstance(a, Multicast):
                for q in range(self.w.n):
                    self._send(p, face, q, a.msg, ev)
            elif isinstance(a, Send):
                self._send(p, face, a.to, a.msg, ev)
            elif isinstance(a, SetTimer):
                at_g = max(now_g, Fraction(a.at) + self.w.offset(p))
                self._push(at_g, TIMER, p, (a.tag, face))
            elif isinstance(a, Commit):
                if face is None:
                    self.trace.add(now_g, p, ev.l, "commit", a.value, ev.idx)
            elif isinstance(a, Terminate):
                if face is None:
                    self.terminated[p] = now_g
                    self.trace.add(now_g, p, ev.l, "terminate", None, ev.idx)
                else:
                    self.face_alive[p][face] = False
            else:
                raise HarnessError(f"unknown action {a!r}")

    def _send(self, p, face, to, msg, ev):
        w = self.w
        if face is not None:
            targets = self.faces[p][face][0].targets
            if to != p and targets is not None and to not in targets:
                return
        sent = self.trace.add(ev.g, p, ev.l, "send", msg, ev.idx, peer=to)
        if to == p:
            self._push(ev.g, DELIVER, p, (to, msg, face, sent.idx))
            return
        env = Envelope(p, to, msg, ev.g, ev.l, self.seq[p], ev.kind == "start", face)
        delay = w.policy(env) if w.policy is not None else Fraction(0)
        if p in self.nodes and to in self.nodes:
            w.model.check(env, delay)
        if delay is DROP:
            return
        at = max(ev.g + Fraction(delay), w.offset(to))
        self._push(at, DELIVER, p, (to, msg, None, sent.idx))


def local_history(result: RunResult, party, cutoff=None, strict=False):
    """Observable inputs of ``party`` up to a local-time cutoff."""
    out = []
    for e in result.trace.of(party):
        if e.kind not in ("start", "deliver", "timer"):
            continue
        if cutoff is not None and (e.l > cutoff or (strict and e.l == cutoff)):
            continue
        data = digest_of(e.data) if e.kind == "deliver" else repr(e.data)
        out.append((e.l, e.kind, e.peer, data))
    return out
