"""Semi-honest n-party secure dot product over Z_{2^k}.

Inputs are additively secret shared, multiplications use dealer-supplied
Beaver triples, and every message travels over an in-process bus that
counts bytes, messages and sequential rounds.

Phases of :func:`run_dot_product`:

1. opening   -- ``ceil(L/b)`` rounds; each party broadcasts its masked
   ``d = x - a`` and ``e = y - b`` shares for one batch of ``b`` elements.
2. verify    -- ``R`` rounds; each party broadcasts its share of a public
   random linear combination of the masked values, which must reopen to
   the same combination of the already opened values.
3. output    -- one round; each party broadcasts its share of the result.

Dealer preprocessing (input sharing and triples) is free.
"""
from __future__ import annotations

import math
import random
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import ConfigError, ProtocolError, UsageError

SUPPORTED_BITS = (32, 64, 128)


def _as_rng(seed) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    return random.Random(seed)


def element_width(k: int) -> int:
    """Serialized size in bytes of one element of Z_{2^k}."""
    return math.ceil(k / 8)


@dataclass(frozen=True, slots=True)
class RingElement:
    """An element of Z_{2^k}, always stored reduced."""

    value: int
    k: int

    def __post_init__(self) -> None:
        if self.k not in SUPPORTED_BITS:
            raise ConfigError(f"security_bits must be one of {SUPPORTED_BITS}, got {self.k}")
        object.__setattr__(self, "value", self.value % (1 << self.k))

    def _other(self, other: RingElement | int) -> int:
        if isinstance(other, RingElement):
            if other.k != self.k:
                raise UsageError(f"mixed ring widths {self.k} and {other.k}")
            return other.value
        return other

    def __add__(self, other: RingElement | int) -> RingElement:
        return RingElement(self.value + self._other(other), self.k)

    __radd__ = __add__

    def __sub__(self, other: RingElement | int) -> RingElement:
        return RingElement(self.value - self._other(other), self.k)

    def __rsub__(self, other: int) -> RingElement:
        return RingElement(other - self.value, self.k)

    def __mul__(self, other: RingElement | int) -> RingElement:
        return RingElement(self.value * self._other(other), self.k)

    __rmul__ = __mul__

    def __neg__(self) -> RingElement:
        return RingElement(-self.value, self.k)

    def __int__(self) -> int:
        return self.value

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(element_width(self.k), "little")

    @classmethod
    def from_bytes(cls, data: bytes, k: int) -> RingElement:
        if len(data) != element_width(k):
            raise UsageError(f"expected {element_width(k)} bytes for k={k}, got {len(data)}")
        return cls(int.from_bytes(data, "little"), k)


def encode(elems: Sequence[RingElement]) -> bytes:
    """Concatenate fixed-width little-endian encodings; no framing."""
    return b"".join(e.to_bytes() for e in elems)


def decode(payload: bytes, k: int) -> list[RingElement]:
    w = element_width(k)
    if len(payload) % w:
        raise UsageError(f"payload length {len(payload)} is not a multiple of {w}")
    return [RingElement.from_bytes(payload[i:i + w], k) for i in range(0, len(payload), w)]


@dataclass(frozen=True)
class ProtocolParams:
    """One configuration of the tunable protocol."""

    parties: int = 3
    security_bits: int = 32
    block_size: int = 1
    verify_rounds: int = 1
    workload_len: int = 16

    def __post_init__(self) -> None:
        if not isinstance(self.parties, int) or self.parties < 2:
            raise ConfigError(f"parties must be an integer >= 2, got {self.parties!r}")
        if self.security_bits not in SUPPORTED_BITS:
            raise ConfigError(f"security_bits must be one of {SUPPORTED_BITS}, got {self.security_bits!r}")
        for name in ("block_size", "verify_rounds", "workload_len"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")

    @property
    def n_batches(self) -> int:
        return -(-self.workload_len // self.block_size)


@dataclass(frozen=True)
class BusLedger:
    total_bytes: int = 0
    total_messages: int = 0
    sequential_rounds: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.total_bytes, self.total_messages, self.sequential_rounds)


@dataclass(frozen=True)
class ShareVector:
    owner: int
    elems: tuple[RingElement, ...]


@dataclass(frozen=True)
class BeaverTriple:
    """Per-party additive shares of a triple ``(a, b, c)`` with ``c = a*b``."""

    a: tuple[RingElement, ...]
    b: tuple[RingElement, ...]
    c: tuple[RingElement, ...]

    def reconstruct(self) -> tuple[RingElement, RingElement, RingElement]:
        return reconstruct(self.a), reconstruct(self.b), reconstruct(self.c)


class MessageBus:
    """In-process point-to-point bus with exact byte/message/round counters.

    Messages may only be sent inside a :meth:`round` block; a round is
    counted once all parties have sent their messages for it.
    """

    def __init__(self, parties: int):
        self.parties = parties
        self._queues: dict[tuple[int, int], deque[bytes]] = {}
        self._bytes = 0
        self._messages = 0
        self._rounds = 0
        self._open = False

    @contextmanager
    def round(self) -> Iterator[MessageBus]:
        if self._open:
            raise UsageError("rounds cannot be nested")
        self._open = True
        try:
            yield self
        finally:
            self._open = False
        self._rounds += 1

    def send(self, src: int, dst: int, payload: bytes) -> None:
        if not self._open:
            raise UsageError("send outside of a round")
        if src == dst or not (0 <= src < self.parties and 0 <= dst < self.parties):
            raise UsageError(f"invalid route {src} -> {dst}")
        self._queues.setdefault((src, dst), deque()).append(payload)
        self._bytes += len(payload)
        self._messages += 1

    def broadcast(self, src: int, payload: bytes) -> None:
        for dst in range(self.parties):
            if dst != src:
                self.send(src, dst, payload)

    def recv(self, dst: int, src: int) -> bytes:
        try:
            return self._queues[(src, dst)].popleft()
        except (KeyError, IndexError):
            raise ProtocolError(f"party {dst} expected a message from {src}") from None

    @property
    def ledger(self) -> BusLedger:
        return BusLedger(self._bytes, self._messages, self._rounds)


def _share_int(x: int, n: int, k: int, rng: random.Random) -> list[int]:
    head = [rng.getrandbits(k) for _ in range(n - 1)]
    return head + [(x - sum(head)) % (1 << k)]


def share(x: RingElement, n: int, seed) -> list[RingElement]:
    """Split ``x`` into ``n`` additive shares; the first ``n-1`` are uniform."""
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"parties must be an integer >= 2, got {n!r}")
    return [RingElement(v, x.k) for v in _share_int(x.value, n, x.k, _as_rng(seed))]


def share_vector(values: Sequence[int], n: int, k: int, seed) -> list[ShareVector]:
    """Share a plaintext vector element-wise; one :class:`ShareVector` per party."""
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"parties must be an integer >= 2, got {n!r}")
    rng = _as_rng(seed)
    per_elem = [_share_int(RingElement(v, k).value, n, k, rng) for v in values]
    return [ShareVector(i, tuple(RingElement(sh[i], k) for sh in per_elem)) for i in range(n)]


def reconstruct(shares: Sequence[RingElement]) -> RingElement:
    if not shares:
        raise UsageError("cannot reconstruct from an empty share list")
    k = shares[0].k
    if any(s.k != k for s in shares):
        raise UsageError("shares have mixed bit widths")
    return RingElement(sum(s.value for s in shares), k)


def gen_beaver_triples(count: int, k: int, seed, n: int = 2) -> list[BeaverTriple]:
    """Trusted-dealer triples, shared among ``n`` parties."""
    if count < 0:
        raise ConfigError(f"count must be >= 0, got {count}")
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"parties must be an integer >= 2, got {n!r}")
    rng = _as_rng(seed)
    triples = []
    for a, b, c in _triples_int(count, k, n, rng):
        triples.append(BeaverTriple(*(tuple(RingElement(v, k) for v in sh) for sh in (a, b, c))))
    return triples


def _triples_int(count: int, k: int, n: int, rng: random.Random):
    mask = (1 << k) - 1
    out = []
    for _ in range(count):
        a = rng.getrandbits(k)
        b = rng.getrandbits(k)
        out.append((_share_int(a, n, k, rng), _share_int(b, n, k, rng), _share_int(a * b & mask, n, k, rng)))
    return out


def _encode_ints(values: Sequence[int], k: int) -> bytes:
    w = element_width(k)
    return b"".join(v.to_bytes(w, "little") for v in values)


def _decode_ints(payload: bytes, k: int) -> list[int]:
    w = element_width(k)
    return [int.from_bytes(payload[i:i + w], "little") for i in range(0, len(payload), w)]


def _open(bus: MessageBus, own: list[list[int]], k: int) -> list[int]:
    """Every party receives the others' shares and sums them with its own."""
    n, mask = bus.parties, (1 << k) - 1
    views = []
    for j in range(n):
        total = list(own[j])
        for i in range(n):
            if i == j:
                continue
            for idx, e in enumerate(_decode_ints(bus.recv(j, i), k)):
                total[idx] = (total[idx] + e) & mask
        views.append(total)
    for view in views[1:]:
        if view != views[0]:
            raise ProtocolError("parties disagree on an opened value")
    return views[0]


def run_dot_product(x: Sequence[int], y: Sequence[int], params: ProtocolParams,
                    seed) -> tuple[RingElement, BusLedger]:
    """Securely compute ``sum(x[i] * y[i]) mod 2^k`` among ``params.parties``."""
    L, n, k = params.workload_len, params.parties, params.security_bits
    if len(x) != L or len(y) != L:
        raise UsageError(f"input lengths {len(x)}, {len(y)} do not match workload_len={L}")
    mask = (1 << k) - 1
    rng = _as_rng(seed)
    bus = MessageBus(n)

    # dealer: input shares and triples; xs[j][i] is party i's share of x[j]
    xs = [_share_int(int(v) & mask, n, k, rng) for v in x]
    ys = [_share_int(int(v) & mask, n, k, rng) for v in y]
    triples = _triples_int(L, k, n, rng)
    # each party's masked values d_i = x_i - a_i, e_i = y_i - b_i
    d_sh = [[(xs[j][i] - triples[j][0][i]) & mask for j in range(L)] for i in range(n)]
    e_sh = [[(ys[j][i] - triples[j][1][i]) & mask for j in range(L)] for i in range(n)]

    d_open: list[int] = []
    e_open: list[int] = []
    for start in range(0, L, params.block_size):
        stop = min(start + params.block_size, L)
        masked = []
        with bus.round():
            for i in range(n):
                m = d_sh[i][start:stop] + e_sh[i][start:stop]
                masked.append(m)
                bus.broadcast(i, _encode_ints(m, k))
        opened = _open(bus, masked, k)
        d_open.extend(opened[:stop - start])
        e_open.extend(opened[stop - start:])

    z = []
    for i in range(n):
        acc = 0
        for j in range(L):
            a, b, c = triples[j][0][i], triples[j][1][i], triples[j][2][i]
            acc += c + d_open[j] * b + e_open[j] * a
            if i == 0:
                acc += d_open[j] * e_open[j]
        z.append(acc & mask)

    for _ in range(params.verify_rounds):
        rho = [rng.getrandbits(k) for _ in range(2 * L)]
        expected = sum(r * v for r, v in zip(rho, d_open + e_open)) & mask
        checks = []
        with bus.round():
            for i in range(n):
                t = sum(r * v for r, v in zip(rho, d_sh[i] + e_sh[i])) & mask
                checks.append([t])
                bus.broadcast(i, _encode_ints([t], k))
        if _open(bus, checks, k)[0] != expected:
            raise ProtocolError("verification round failed")

    with bus.round():
        for i in range(n):
            bus.broadcast(i, _encode_ints([z[i]], k))
    result = _open(bus, [[v] for v in z], k)[0]
    return RingElement(result, k), bus.ledger


def comm_closed_form(params: ProtocolParams) -> tuple[int, int, int]:
    """Predicted ``(bytes, messages, rounds)`` of :func:`run_dot_product`."""
    n, L, b = params.parties, params.workload_len, params.block_size
    w = element_width(params.security_bits)
    pairs = n * (n - 1)
    B = params.n_batches
    last = L - (B - 1) * b
    opening = pairs * 2 * w * ((B - 1) * b + last)
    verify = params.verify_rounds * pairs * w
    output = pairs * w
    rounds = B + params.verify_rounds + 1
    return opening + verify + output, rounds * pairs, rounds
