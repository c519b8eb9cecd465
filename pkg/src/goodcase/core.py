"""Identities, values, simulated signatures and quorum thresholds."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering


class HarnessError(Exception):
    """A run was aborted because the world or an adversary script is broken."""


class ForgeryError(HarnessError):
    pass


class ResilienceError(ValueError):
    pass


@total_ordering
class Value:
    """Opaque byte-string value. ``BOTTOM`` is the distinguished empty value."""

    __slots__ = ("payload",)

    def __init__(self, payload):
        if payload is not None and not isinstance(payload, bytes):
            payload = str(payload).encode()
        object.__setattr__(self, "payload", payload)

    def __setattr__(self, *_):
        raise AttributeError("Value is immutable")

    @property
    def is_bottom(self):
        return self.payload is None

    def _key(self):
        # bottom sorts after every application value
        return (1, b"") if self.payload is None else (0, self.payload)

    def __eq__(self, other):
        return isinstance(other, Value) and self.payload == other.payload

    def __lt__(self, other):
        return self._key() < other._key()

    def __hash__(self):
        return hash(("Value", self.payload))

    def __repr__(self):
        return "⊥" if self.payload is None else self.payload.decode(errors="replace")


BOTTOM = Value(None)


def val(x) -> Value:
    return x if isinstance(x, Value) else Value(x)


def encode(obj) -> bytes:
    """Canonical byte encoding used for content digests."""
    if isinstance(obj, SignedPayload):
        return b"S" + obj.digest
    if isinstance(obj, Value):
        return b"_" if obj.is_bottom else b"V" + len(obj.payload).to_bytes(4, "big") + obj.payload
    if obj is None:
        return b"N"
    if isinstance(obj, bool):
        return b"T" if obj else b"F"
    if isinstance(obj, int):
        return b"I" + str(obj).encode() + b";"
    if isinstance(obj, Fraction):
        return b"Q" + f"{obj.numerator}/{obj.denominator}".encode() + b";"
    if isinstance(obj, str):
        raw = obj.encode()
        return b"s" + len(raw).to_bytes(4, "big") + raw
    if isinstance(obj, bytes):
        return b"b" + len(obj).to_bytes(4, "big") + obj
    if isinstance(obj, (tuple, list)):
        return b"(" + b"".join(encode(x) for x in obj) + b")"
    if hasattr(obj, "__encode__"):
        return obj.__encode__()
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _h(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=16).digest()


@dataclass(frozen=True)
class Signature:
    signer: int
    digest: bytes


@dataclass(frozen=True, eq=False)
class SignedPayload:
    """A payload plus an ordered chain of signer attributions.

    Link k signs the payload together with links 0..k-1, so countersigning
    ``<v, w>_L`` by j yields chain ``[L, j]`` over the same payload.
    """

    payload: object
    chain: tuple
    digest: bytes = field(repr=False, default=b"")

    @property
    def signers(self):
        return tuple(s.signer for s in self.chain)

    @property
    def outer(self):
        return self.chain[-1].signer

    @property
    def origin(self):
        return self.chain[0].signer

    def __eq__(self, other):
        return isinstance(other, SignedPayload) and self.digest == other.digest

    def __hash__(self):
        return hash(self.digest)

    def __repr__(self):
        return f"<{self.payload!r}>_{list(self.signers)}"


def _link_digest(payload_digest, chain, signer):
    prev = b"".join(s.digest for s in chain)
    return _h(payload_digest + prev + signer.to_bytes(4, "big"))


def _attach(payload, chain, signer):
    base = _h(encode(payload))
    sig = Signature(signer, _link_digest(base, chain, signer))
    chain = chain + (sig,)
    return SignedPayload(payload, chain, sig.digest)


class Keyring:
    """Per-run record of issued signatures; enforces unforgeability."""

    def __init__(self):
        self._issued = set()

    def signer(self, party: int) -> "Signer":
        return Signer(self, party)

    def _issue(self, caller, party, payload):
        if caller != party:
            raise ForgeryError(f"party {caller} attempted to sign as party {party}")
        if isinstance(payload, SignedPayload):
            sp = _attach(payload.payload, payload.chain, party)
        else:
            sp = _attach(payload, (), party)
        self._issued.add((party, sp.chain[-1].digest))
        return sp

    def verify(self, sp: SignedPayload) -> bool:
        """Every link was issued in this run and recomputes correctly."""
        base = _h(encode(sp.payload))
        chain = ()
        for s in sp.chain:
            if s.digest != _link_digest(base, chain, s.signer):
                return False
            if (s.signer, s.digest) not in self._issued:
                return False
            chain = chain + (s,)
        return bool(sp.chain) and all(
            self.verify(inner) for inner in nested_signed(sp.payload)
        )


class Signer:
    def __init__(self, keyring: Keyring, party: int):
        self._keyring = keyring
        self.party = party

    def sign(self, payload, as_party=None) -> SignedPayload:
        party = self.party if as_party is None else as_party
        return self._keyring._issue(self.party, party, payload)

    def verify(self, sp) -> bool:
        return isinstance(sp, SignedPayload) and self._keyring.verify(sp)


def sign(party: int, payload, keyring: Keyring, caller: int) -> SignedPayload:
    return keyring._issue(caller, party, payload)


def nested_signed(obj):
    """Signed payloads directly inside ``obj`` (not inside those)."""
    if isinstance(obj, SignedPayload):
        yield obj
    elif isinstance(obj, (tuple, list)):
        for x in obj:
            yield from nested_signed(x)
    elif hasattr(obj, "__children__"):
        for x in obj.__children__():
            yield from nested_signed(x)


def _values_in(obj):
    if isinstance(obj, Value):
        yield obj
    elif isinstance(obj, (tuple, list)):
        for x in obj:
            yield from _values_in(x)


def walk_signed(obj):
    """Every signed payload at any nesting depth."""
    for sp in nested_signed(obj):
        yield sp
        yield from walk_signed(sp.payload)


def extract_broadcaster_values(received, broadcaster: int) -> set:
    out = set()
    for msg in received:
        for sp in walk_signed(msg):
            if sp.origin == broadcaster:
                out.update(v for v in _values_in(sp.payload) if not v.is_bottom)
    return out


SETTINGS = ("async-brb", "psync-fast", "sync-third", "sync-eq-third", "sync-minority", "sync-majority")


@dataclass(frozen=True)
class Resilience:
    n: int
    f: int
    setting: str
    override: bool = False

    def violation(self):
        n, f = self.n, self.f
        if n < 1 or f < 0:
            return "n ≥ 1, f ≥ 0"
        checks = {
            "async-brb": (n >= 3 * f + 1, "n ≥ 3f+1"),
            "psync-fast": (n >= 5 * f - 1, "n ≥ 5f−1"),
            "sync-third": (3 * f < n, "f < n/3"),
            "sync-eq-third": (3 * f == n, "f = n/3"),
            "sync-minority": (n < 3 * f and 2 * f < n, "n/3 < f < n/2"),
            "sync-majority": (n <= 2 * f < 2 * n, "n/2 ≤ f < n"),
        }
        if self.setting not in checks:
            raise ResilienceError(f"unknown setting {self.setting!r}")
        ok, text = checks[self.setting]
        return None if ok else text


@dataclass(frozen=True)
class ThresholdSet:
    n: int
    f: int
    q_nf: int
    q_f1: int
    q_cert: int
    q_lock_lo: int
    q_lock_hi: int


def thresholds(r: Resilience) -> ThresholdSet:
    bad = r.violation()
    if bad and not r.override:
        raise ResilienceError(f"resilience violated: {bad} does not hold for n={r.n}, f={r.f}")
    f = r.f
    return ThresholdSet(r.n, f, r.n - f, f + 1, 4 * f - 1, 2 * f - 1, 2 * f)
