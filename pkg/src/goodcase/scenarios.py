"""Scripted worlds: lower-bound executions, generic adversaries and checkers."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .core import Resilience, SignedPayload, Value, extract_broadcaster_values, thresholds, val, walk_signed
from .proto_async import BRB
from .proto_psync import PsyncVBB
from .proto_sync import PROTOCOLS as SYNC_PROTOCOLS
from .simnet import (
    Send,
    DROP,
    Asynchrony,
    FaceSpec,
    PartialSynchrony,
    Synchrony,
    World,
    from_senders,
    local_history,
)

PROTOCOL_IDS = ("brb", "psync", "2delta", "third", "syncstart", "onehalf")

F = Fraction


@dataclass(frozen=True)
class Setup:
    """Protocol, size and timing parameters shared by every world of a run."""

    protocol: str
    n: int
    f: int
    Delta: Fraction = F(10)
    delta: Fraction = F(2)
    sigma: Fraction | None = None
    m: int = 5
    gst: Fraction = F(0)
    broadcaster: int = 0
    override: bool = False
    horizon: Fraction | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOL_IDS:
            raise ValueError(f"unknown protocol {self.protocol!r}")

    @property
    def setting(self):
        n, f = self.n, self.f
        if self.protocol == "brb":
            return "async-brb"
        if self.protocol == "psync":
            return "psync-fast"
        if self.protocol == "2delta":
            return "sync-third"
        if self.protocol == "third":
            return "sync-third" if 3 * f < n else "sync-eq-third"
        return "sync-minority"

    def check(self):
        return thresholds(Resilience(self.n, self.f, self.setting, self.override))

    @property
    def true_sigma(self):
        if self.protocol == "syncstart":
            return F(0)
        return F(self.delta) / 2 if self.sigma is None else F(self.sigma)

    def model(self):
        if self.protocol == "brb":
            return Asynchrony()
        if self.protocol == "psync":
            return PartialSynchrony(F(self.Delta), F(self.gst))
        return Synchrony(F(self.delta), F(self.Delta), self.true_sigma)

    @property
    def max_delay(self):
        if self.protocol == "brb":
            return F(1)
        if self.protocol == "psync":
            return F(self.Delta)
        return F(self.delta)

    def node(self, p, value=None, validity=None):
        n, f, b = self.n, self.f, self.broadcaster
        if self.protocol == "brb":
            return lambda s: BRB(s, n, f, b, value, validity)
        if self.protocol == "psync":
            if value is None:
                value = Value(f"v{p}")
            return lambda s: PsyncVBB(s, n, f, self.Delta, value, validity)
        cls = SYNC_PROTOCOLS[self.protocol]
        kw = {"m": self.m} if self.protocol == "onehalf" else {}
        return lambda s: cls(s, n, f, self.Delta, b, value, validity=validity, **kw)

    def roles(self, inputs=None, validity=None):
        inputs = inputs or {self.broadcaster: val(0)}
        return {p: self.node(p, inputs.get(p), validity) for p in range(self.n)}

    def world(self, byzantine=None, policy=None, offsets=None, inputs=None, name="", model=None):
        self.check()
        horizon = self.horizon
        if horizon is None:
            horizon = F(10**6) if self.protocol in ("brb", "psync") else 40 * F(self.Delta)
        return World(
            n=self.n,
            f=self.f,
            model=model or self.model(),
            roles=self.roles(inputs),
            byzantine=byzantine or {},
            broadcaster=self.broadcaster,
            offsets=offsets or {},
            policy=policy or (lambda env, d=self.max_delay: d),
            horizon=horizon,
            name=name,
        )


# Byzantine node wrappers

class Silent:
    def on_start(self, now):
        return []

    def on_message(self, now, src, msg, face=None):
        return []

    def on_timer(self, now, tag):
        return []


def silent(signer):
    return Silent()


class StartOnly:
    """Sends only what the wrapped honest node sends in its start step."""

    def __init__(self, inner):
        self.inner = inner

    def on_start(self, now):
        return self.inner.on_start(now)

    def on_message(self, now, src, msg, face=None):
        return []

    def on_timer(self, now, tag):
        return []


def start_only(factory):
    return lambda signer: StartOnly(factory(signer))


def consistent_with(broadcaster, allowed):
    """Accept a message only if every broadcaster-signed value in it is allowed."""
    allowed = frozenset(allowed)
    return lambda src, msg: extract_broadcaster_values([msg], broadcaster) <= allowed


def two_faced(setup, p, targets0, targets1, inputs=(val(0), val(1))):
    """Two honest personas split by message content."""
    b = setup.broadcaster
    return [
        FaceSpec(setup.node(p, inputs[0]), consistent_with(b, {inputs[0]}), tuple(targets0)),
        FaceSpec(setup.node(p, inputs[1]), consistent_with(b, {inputs[1]}), tuple(targets1)),
    ]


def equivocator(setup, targets0, targets1, accept0=None, accept1=None):
    """Broadcaster persona per value; each persona only talks to its side."""
    b = setup.broadcaster
    return [
        FaceSpec(setup.node(b, val(0)), accept0 or consistent_with(b, {val(0)}), tuple(targets0)),
        FaceSpec(setup.node(b, val(1)), accept1 or consistent_with(b, {val(1)}), tuple(targets1)),
    ]


# outcome checks

@dataclass
class Verdict:
    label: str
    ok: bool
    detail: str = ""

    def line(self):
        return f"{'pass' if self.ok else 'FAIL'} {self.label}" + (f": {self.detail}" if self.detail else "")


def honest_commit_values(result):
    """party -> list of values it committed (in order)."""
    out = {p: [] for p in result.world.honest}
    for e in result.trace.events:
        if e.kind == "commit" and e.party in out:
            out[e.party].append(e.data)
    return out


def agreement(result):
    vals = honest_commit_values(result)
    doubles = {p: v for p, v in vals.items() if len(set(v)) > 1}
    distinct = sorted({v[0] for v in vals.values() if v})
    return not doubles and len(distinct) <= 1, distinct, doubles


def validity(result, value):
    """With an honest broadcaster every honest commit is its input."""
    if result.world.broadcaster in result.world.byzantine:
        return True, ""
    bad = {p: v for p, v in honest_commit_values(result).items() if any(x != value for x in v)}
    return not bad, f"unexpected commits {bad}" if bad else ""


def terminated(result):
    missing = [p for p in result.world.honest if p not in result.terminated]
    return not missing, f"parties {missing} did not terminate" if missing else ""


@dataclass(frozen=True)
class Expectation:
    kind: str
    execution: str
    parties: tuple = ()
    value: object = None
    time: Fraction | None = None
    other: str | None = None
    strict: bool = False

    def label(self):
        bits = [self.kind, self.execution]
        if self.other:
            bits.append(f"vs {self.other}")
        if self.parties:
            bits.append(f"parties={list(self.parties)}")
        if self.value is not None:
            bits.append(f"value={self.value!r}")
        if self.time is not None:
            bits.append(("before " if self.strict else "by ") + str(self.time))
        return " ".join(bits)


def AgreementHolds(e):
    return Expectation("AgreementHolds", e)


def AgreementViolated(e):
    return Expectation("AgreementViolated", e)


def Terminates(e):
    return Expectation("Terminates", e)


def Validity(e, value):
    return Expectation("Validity", e, value=value)


def Totality(e):
    return Expectation("Totality", e)


def CommitsValue(e, parties, value):
    return Expectation("CommitsValue", e, tuple(parties), value)


def CommitsByTime(e, parties, t):
    return Expectation("CommitsByTime", e, tuple(parties), time=F(t))


def NoCommitBefore(e, parties, t):
    return Expectation("NoCommitBefore", e, tuple(parties), time=F(t), strict=True)


def LocalHistoryEqual(e, other, party, cutoff=None, strict=True):
    t = None if cutoff is None else F(cutoff)
    return Expectation("LocalHistoryEqual", e, (party,), time=t, other=other, strict=strict)


def compare_local_history(r1, r2, party, cutoff=None, strict=True):
    h1 = local_history(r1, party, cutoff, strict)
    h2 = local_history(r2, party, cutoff, strict)
    for i, (a, b) in enumerate(zip(h1, h2)):
        if a != b:
            return False, f"first difference at local event {i}: {a[:3]} vs {b[:3]}"
    if len(h1) != len(h2):
        return False, f"lengths differ: {len(h1)} vs {len(h2)}"
    return True, f"{len(h1)} events identical"


def check(exp: Expectation, results) -> Verdict:
    if exp.execution not in results or (exp.other and exp.other not in results):
        return Verdict(exp.label(), False, "missing execution")
    r = results[exp.execution]
    commits = r.commits()
    k = exp.kind
    if k in ("AgreementHolds", "AgreementViolated"):
        ok, distinct, doubles = agreement(r)
        detail = f"honest commits {distinct}" + (f", double commits {doubles}" if doubles else "")
        return Verdict(exp.label(), ok if k == "AgreementHolds" else not ok, detail)
    if k == "Terminates":
        return Verdict(exp.label(), *terminated(r))
    if k == "Validity":
        return Verdict(exp.label(), *validity(r, exp.value))
    if k == "Totality":
        vals = honest_commit_values(r)
        some = any(vals.values())
        missing = [p for p, v in vals.items() if not v]
        ok = not some or not missing
        return Verdict(exp.label(), ok, f"parties {missing} never committed" if not ok else "")
    if k == "CommitsValue":
        bad = {p: commits.get(p, (None,))[0] for p in exp.parties if commits.get(p, (None,))[0] != exp.value}
        return Verdict(exp.label(), not bad, f"got {bad}" if bad else "")
    if k == "CommitsByTime":
        bad = {p: (commits[p][2] if p in commits else None) for p in exp.parties if p not in commits or commits[p][2] > exp.time}
        return Verdict(exp.label(), not bad, f"late or missing {bad}" if bad else "")
    if k == "NoCommitBefore":
        bad = {p: commits[p][2] for p in exp.parties if p in commits and commits[p][2] < exp.time}
        return Verdict(exp.label(), not bad, f"early {bad}" if bad else "")
    if k == "LocalHistoryEqual":
        ok, detail = compare_local_history(r, results[exp.other], exp.parties[0], exp.time, exp.strict)
        return Verdict(exp.label(), ok, detail)
    raise ValueError(f"unknown expectation {k}")


@dataclass
class Scenario:
    name: str
    executions: dict
    expectations: list = field(default_factory=list)

    def run(self):
        results = {}
        for e, w in self.executions.items():
            # a callable builds its world from earlier executions (two-pass GST)
            world = w if isinstance(w, World) else w(results)
            results[e] = world.run()
        return results, [check(x, results) for x in self.expectations]


# lower-bound constructions

class Restricted:
    """Wrap an honest node so its start-step and later messages reach only given parties."""

    def __init__(self, inner, n, start_targets, targets):
        self.inner, self.n = inner, n
        self.start_targets = frozenset(start_targets)
        self.targets = frozenset(targets)

    def _filter(self, actions, allowed):
        out = []
        for a in actions or ():
            if type(a).__name__ == "Multicast":
                out += [Send(q, a.msg) for q in range(self.n) if q in allowed]
            elif type(a).__name__ == "Send":
                if a.to in allowed:
                    out.append(a)
            else:
                out.append(a)
        return out

    def on_start(self, now):
        return self._filter(self.inner.on_start(now), self.start_targets)

    def on_message(self, now, src, msg, face=None):
        return self._filter(self.inner.on_message(now, src, msg), self.targets)

    def on_timer(self, now, tag):
        return self._filter(self.inner.on_timer(now, tag), self.targets)


def restricted(factory, n, start_targets, targets):
    def make(signer):
        me = [signer.party]
        return Restricted(factory(signer), n, list(start_targets) + me, list(targets) + me)
    return make


def table_policy(table, default, group_of=None):
    """Delay from a (sender group, receiver group) table."""
    def policy(env):
        key = (env.src, env.dst) if group_of is None else (group_of[env.src], group_of[env.dst])
        return table.get(key, default)
    return policy


def lb_async(f=1, n=None, override=None, protocol="brb"):
    n = 3 * f + 1 if n is None else n
    if n < 3:
        raise ValueError("LB-ASYNC needs a broadcaster and two non-empty groups")
    in_region = n >= 3 * f + 1
    setup = Setup(protocol, n, f, override=not in_region if override is None else override)
    A = list(range(1, 1 + f))
    B = list(range(1 + f, n))
    if not B:
        raise ValueError("LB-ASYNC needs a non-empty group B")
    honest = [p for p in range(n)]
    split = equivocator(setup, A, B, from_senders(A), from_senders(B))
    ex = {
        "E1": setup.world(inputs={0: val(0)}, name="E1"),
        "E2": setup.world(inputs={0: val(1)}, name="E2"),
        "E3": setup.world(byzantine={0: split}, name="E3"),
    }
    exp = [
        CommitsValue("E1", honest, val(0)),
        CommitsValue("E2", honest, val(1)),
        AgreementHolds("E3") if in_region else AgreementViolated("E3"),
    ]
    return Scenario("LB-ASYNC", ex, exp)


def lb_sync_dplusd(f=1, n=None, Delta=10, delta=2, protocol="third"):
    n = 3 * f if n is None else n
    if not 2 * f < n <= 3 * f:
        raise ValueError("LB-SYNC-DPLUSD needs 2f < n ≤ 3f")
    C, A, B = list(range(0, n - 2 * f)), list(range(n - 2 * f, n - f)), list(range(n - f, n))
    Delta, delta = F(Delta), F(delta)
    setup = Setup(protocol, n, f, Delta=Delta, delta=delta, sigma=F(0))
    side = {p: "C" for p in C} | {p: "A" for p in A} | {p: "B" for p in B}

    def slow(group):
        def policy(env):
            if env.src != env.dst and (side[env.src] == group) != (side[env.dst] == group):
                return Delta
            return delta
        return policy

    e3_table = {("A", "B"): Delta, ("B", "A"): Delta}
    e3_model = Synchrony(Delta, Delta, F(0))
    e3_byz = {0: equivocator(setup, A + C, B + C)}
    for p in C[1:]:
        e3_byz[p] = two_faced(setup, p, A + C, B + C)
    ex = {
        "E1": setup.world(byzantine={p: [FaceSpec(setup.node(p))] for p in B}, policy=slow("B"), inputs={0: val(0)}, name="E1"),
        "E2": setup.world(byzantine={p: [FaceSpec(setup.node(p))] for p in A}, policy=slow("A"), inputs={0: val(1)}, name="E2"),
        "E3": setup.world(byzantine=e3_byz, policy=table_policy(e3_table, delta, side), model=e3_model, name="E3"),
    }
    bound = Delta + delta
    exp = [
        CommitsValue("E1", A + C, val(0)),
        CommitsByTime("E1", A + C, bound),
        CommitsValue("E2", B + C, val(1)),
        CommitsByTime("E2", B + C, bound),
    ]
    exp += [AgreementHolds(e) for e in ex]
    exp += [LocalHistoryEqual("E1", "E3", p, bound) for p in A]
    exp += [LocalHistoryEqual("E2", "E3", p, bound) for p in B]
    return Scenario("LB-SYNC-DPLUSD", ex, exp)


def lb_sync_15(f=2, Delta=10, delta=2, m=5, protocol="onehalf"):
    if f != 2:
        raise ValueError("LB-SYNC-1P5 is built for groups of one party (f=2, n=5)")
    Delta, delta = F(Delta), F(delta)
    B, A, C, g, h = 0, 1, 2, 3, 4
    n = 5
    half = delta / 2
    setup = Setup(protocol, n, f, Delta=Delta, delta=delta, sigma=half, m=m)

    def mirrored(table):
        swap = {A: C, C: A, g: h, h: g, B: B}
        return {(swap[s], swap[d]): t for (s, d), t in table.items()}

    e1 = {
        (C, g): Delta + half, (C, A): Delta - half, (g, C): Delta - half, (A, C): Delta - half,
        (h, A): Delta - half, (A, h): Delta + half, (g, h): DROP, (h, g): DROP,
        (C, B): Delta, (h, B): Delta, (B, C): delta, (B, h): delta, (C, h): delta, (h, C): delta,
    }
    e2 = {
        (g, A): delta, (A, g): delta, (g, C): Delta, (C, g): Delta, (C, A): Delta - delta, (A, C): Delta,
        (B, g): delta, (g, B): delta, (B, A): delta, (A, B): delta, (B, h): delta, (h, B): delta,
        (B, C): delta + half, (C, B): half,
        (h, g): DROP, (g, h): DROP, (C, h): half, (h, C): delta + half, (A, h): Delta + half, (h, A): Delta - half,
    }
    wide = Synchrony(Delta, Delta, half)

    def b_faces(side0, side1):
        return [
            FaceSpec(setup.node(B, val(0)), from_senders(side0), tuple(side0)),
            FaceSpec(setup.node(B, val(1)), from_senders(side1), tuple(side1)),
        ]

    honest_face = lambda p: [FaceSpec(setup.node(p))]
    ex = {
        "E1": setup.world(byzantine={C: honest_face(C), h: honest_face(h)}, policy=table_policy(e1, delta), inputs={B: val(0)}, name="E1"),
        "E2": setup.world(byzantine={B: b_faces([g, A], [C, h]), h: honest_face(h)}, policy=table_policy(e2, delta),
                          offsets={C: half}, model=wide, name="E2"),
        "E3": setup.world(byzantine={B: b_faces([g, A], [C, h]), g: honest_face(g)}, policy=table_policy(mirrored(e2), delta),
                          offsets={A: half}, model=wide, name="E3"),
        "E4": setup.world(byzantine={A: honest_face(A), g: honest_face(g)}, policy=table_policy(mirrored(e1), delta), inputs={B: val(1)}, name="E4"),
    }
    bound = Delta + 3 * half
    exp = [
        CommitsValue("E1", [g, A, B], val(0)),
        CommitsByTime("E1", [g, A, B], bound),
        CommitsValue("E4", [h, B, C], val(1)),
        CommitsByTime("E4", [h, B, C], bound),
    ]
    exp += [AgreementHolds(e) for e in ex]
    exp += [
        LocalHistoryEqual("E1", "E2", g, bound),
        LocalHistoryEqual("E4", "E3", h, bound),
        LocalHistoryEqual("E2", "E3", A, None),
        LocalHistoryEqual("E2", "E3", C, None),
    ]
    return Scenario("LB-SYNC-1P5", ex, exp)


def _is_proposal(broadcaster):
    def test(msg):
        return isinstance(msg, SignedPayload) and msg.signers == (broadcaster,) and msg.payload[:1] == ("propose",)
    return test


def lb_psync(f=2, n=None, Delta=10, protocol="psync"):
    n = 5 * f - 2 if n is None else n
    if f < 2 or n != 5 * f - 2:
        raise ValueError("LB-PSYNC needs f ≥ 2 and n = 5f−2")
    Delta = F(Delta)
    setup = Setup(protocol, n, f, Delta=Delta, override=True)
    s = 0
    A = list(range(1, f))
    B = list(range(f, 2 * f))
    Cg = list(range(2 * f, 3 * f - 1))
    D = list(range(3 * f - 1, 4 * f - 2))
    E = list(range(4 * f - 2, 5 * f - 2))
    everyone = list(range(n))
    without = lambda *gs: [p for p in everyone if not any(p in g for g in gs)]

    def start_only_to(p, targets, value=None):
        return [FaceSpec(start_only(setup.node(p, value)), None, tuple(targets))]

    def gst_policy(gst, slow):
        def policy(env):
            if slow(env) and env.send_g < gst:
                return gst - env.send_g
            return Delta
        return policy

    def from_to(srcs, dsts, start_ok=True):
        srcs, dsts = frozenset(srcs), frozenset(dsts)
        return lambda env: env.src in srcs and env.dst in dsts and env.src != env.dst and not (start_ok and env.at_start)

    def two_pass(build, watch):
        def make(results):
            probe = build(Delta * 10**4).run()
            times = [c[2] for p, c in probe.commits().items() if p in watch]
            return build(min(times) + Delta if times else Delta * 10**3)
        return make

    def mixed(e2):
        # E2 mirrors E1 toward A; E4 mirrors E5
        lo, hi = (val(0), val(1)) if e2 else (val(1), val(0))
        lo_side = A + B + Cg if e2 else A + D + E
        hi_side = E if e2 else B
        liar = D if e2 else Cg
        towards_A = [FaceSpec(setup.node(p, None), consistent_with(s, {lo}), tuple(A)) for p in liar]
        towards_rest = [FaceSpec(setup.node(p, None), consistent_with(s, {hi}), tuple(without(A))) for p in liar]
        byz = {s: [
            FaceSpec(setup.node(s, lo), consistent_with(s, {lo}), tuple(lo_side + liar)),
            FaceSpec(setup.node(s, hi), consistent_with(s, {hi}), tuple(hi_side + liar)),
        ]}
        for i, p in enumerate(liar):
            byz[p] = [towards_A[i], towards_rest[i]]
        silent_to_A = E if e2 else B
        slow = lambda env: from_to(A, without(A))(env) or from_to(silent_to_A, A, start_ok=False)(env)

        def build(gst):
            return setup.world(byzantine=byz, policy=gst_policy(gst, slow), model=PartialSynchrony(Delta, gst),
                               name="E2" if e2 else "E4")
        return two_pass(build, B + E)

    ex = {
        "E1": setup.world(byzantine={p: start_only_to(p, B + Cg + D) for p in E}, inputs={s: val(0)}, name="E1"),
        "E5": setup.world(byzantine={p: start_only_to(p, Cg + D + E) for p in B}, inputs={s: val(1)}, name="E5"),
        "E3": setup.world(
            byzantine={s: equivocator(setup, B + Cg, D + E)} | {p: start_only_to(p, B + Cg + D + E) for p in A},
            name="E3",
        ),
        "E2": mixed(True),
        "E4": mixed(False),
    }
    cutoff = 3 * Delta
    exp = [AgreementHolds(e) for e in ("E1", "E2", "E3", "E4", "E5")]
    exp += [LocalHistoryEqual("E1", "E2", p, cutoff) for p in A]
    exp += [LocalHistoryEqual("E5", "E4", p, cutoff) for p in A]
    return Scenario("LB-PSYNC", ex, exp)


def lb_dishonest(n=6, f=4, Delta=10, protocol="2delta"):
    h = n - f
    if not 0 < h <= n / 2:
        raise ValueError("LB-DISHONEST needs n/2 ≤ f < n")
    d = 2 * (n // h) - 1
    sizes = [1 if i % 2 == 0 else h - 1 for i in range(d)]
    sizes.append(n - sum(sizes))
    if sizes[-1] < h - 1 or any(s < 1 for s in sizes):
        raise ValueError("group sizes do not fit the construction")
    groups, p = [], 0
    for s in sizes:
        groups.append(list(range(p, p + s)))
        p += s
    Delta = F(Delta)
    setup = Setup(protocol, n, f, Delta=Delta, delta=Delta, sigma=F(0), override=True)
    group_of = {q: i for i, g in enumerate(groups) for q in g}
    mid = (d + 1) // 2
    is_prop = _is_proposal(0)

    def near(i):
        return [q for j in (i - 1, i, i + 1) for q in groups[j % (d + 1)]]

    def neighbourly(q):
        ns = frozenset(near(group_of[q]))
        return [FaceSpec(setup.node(q), lambda src, msg, ns=ns: src in ns or is_prop(msg), tuple(ns))]

    def split_broadcaster():
        zero = [q for j in range(1, mid) for q in groups[j]]
        one = [q for j in range(mid, d + 1) for q in groups[j]]
        return [
            FaceSpec(restricted(setup.node(0, val(0)), n, zero, groups[1]), from_senders(groups[1])),
            FaceSpec(restricted(setup.node(0, val(1)), n, one, groups[d]), from_senders(groups[d])),
        ]

    ex = {}
    for i in range(d + 1):
        honest = set(groups[0] + groups[1]) if i == 0 else set(groups[0] + groups[d]) if i == d else set(groups[i] + groups[i + 1])
        byz = {q: neighbourly(q) for q in range(n) if q not in honest and q != 0}
        if 0 not in honest:
            byz[0] = split_broadcaster()
        ex[f"E{i}"] = setup.world(byzantine=byz, inputs={0: val(0 if i < d else 1)}, policy=lambda env: Delta, name=f"E{i}")
    cutoff = (d - 1) * Delta / 2
    exp = [
        CommitsValue("E0", groups[0] + groups[1], val(0)),
        CommitsValue(f"E{d}", groups[0] + groups[d], val(1)),
        LocalHistoryEqual("E0", "E1", groups[1][0], cutoff),
        LocalHistoryEqual(f"E{d - 1}", f"E{d}", groups[d][0], cutoff),
    ]
    exp += [LocalHistoryEqual(f"E{i - 1}", f"E{i}", groups[i][0], None) for i in range(2, d)]
    return Scenario("LB-DISHONEST", ex, exp)


# generic adversaries

ADVERSARIES = (
    "silent",
    "equivocate",
    "equivocate-double-vote",
    "withhold",
    "max-delay",
    "late-equivocation",
    "split-delay",
    "broadcaster-silent",
    "partial-proposal",
    "random-delay-double-vote",
)


def _random_policy(setup, seed):
    rng = random.Random(seed)
    top = setup.max_delay

    def policy(env):
        if setup.protocol == "brb":
            return 1 + F(rng.randrange(1000), 1000)
        return top * F(rng.randrange(1001), 1000)
    return policy


def adversary_world(setup: Setup, kind: str, seed=0):
    n, f, b = setup.n, setup.f, setup.broadcaster
    others = [p for p in range(n) if p != b]
    byz_pool = others[::-1][:f]
    honest = [p for p in others if p not in byz_pool]
    side0, side1 = honest[: len(honest) // 2], honest[len(honest) // 2:]
    top = setup.max_delay
    skewed = setup.protocol in ("2delta", "third", "onehalf")
    skew = {p: setup.true_sigma for p in side1} if skewed else {}
    kw = {}
    if kind == "silent":
        byz = {p: [FaceSpec(silent)] for p in byz_pool}
    elif kind in ("equivocate", "equivocate-double-vote", "random-delay-double-vote"):
        rest = byz_pool[: f - 1]
        byz = {b: equivocator(setup, side0 + rest, side1 + rest)}
        for p in rest:
            byz[p] = [FaceSpec(silent)] if kind == "equivocate" else two_faced(setup, p, side0 + rest + [b], side1 + rest + [b])
        if kind == "random-delay-double-vote":
            kw = {"policy": _random_policy(setup, seed), "offsets": skew}
    elif kind == "withhold":
        byz = {p: [FaceSpec(setup.node(p), None, tuple(side0))] for p in byz_pool}
    elif kind == "max-delay":
        byz = {p: [FaceSpec(silent)] for p in byz_pool}
        kw = {"offsets": skew}
    elif kind == "late-equivocation":
        late = 3 * top if setup.protocol in ("brb", "psync") else F(setup.Delta) + top
        byz = {b: [
            FaceSpec(setup.node(b, val(0)), consistent_with(b, {val(0)}), None),
            FaceSpec(setup.node(b, val(1)), consistent_with(b, {val(1)}), tuple(side1)),
        ]}
        byz.update({p: [FaceSpec(silent)] for p in byz_pool[: f - 1]})
        kw = {"policy": lambda env: late if env.src == b and env.src_face == 1 else top}
    elif kind == "split-delay":
        fast = top / 2 if setup.protocol != "brb" else F(1)
        slow = top if setup.protocol != "brb" else F(5)
        byz = {p: [FaceSpec(setup.node(p))] for p in byz_pool}
        kw = {"policy": lambda env: fast if env.dst in side0 else slow, "offsets": skew}
    elif kind == "broadcaster-silent":
        byz = {b: [FaceSpec(silent)]}
    elif kind == "partial-proposal":
        first = honest[: f + 1]
        byz = {b: [FaceSpec(restricted(setup.node(b, val(0)), n, first, range(n)))]}
    else:
        raise ValueError(f"unknown adversary {kind!r}")
    return setup.world(byzantine=byz, name=kind, **kw)


def generic_suite(setup: Setup, seed=0):
    ex, exp = {}, []
    for kind in ADVERSARIES:
        w = adversary_world(setup, kind, seed)
        ex[kind] = w
        exp.append(AgreementHolds(kind))
        honest_b = setup.broadcaster not in w.byzantine
        if honest_b:
            exp.append(Validity(kind, val(0)))
        if honest_b or setup.protocol != "brb":
            exp.append(Terminates(kind))
        else:
            exp.append(Totality(kind))
    return Scenario(f"GENERIC-{setup.protocol}-n{setup.n}-f{setup.f}", ex, exp)


LOWER_BOUNDS = {
    "LB-ASYNC": lb_async,
    "LB-PSYNC": lb_psync,
    "LB-SYNC-DPLUSD": lb_sync_dplusd,
    "LB-SYNC-1P5": lb_sync_15,
    "LB-DISHONEST": lb_dishonest,
}


def build_scenario(name, **params):
    if name not in LOWER_BOUNDS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(LOWER_BOUNDS)}")
    params = {k: v for k, v in params.items() if v is not None}
    return LOWER_BOUNDS[name](**params)
