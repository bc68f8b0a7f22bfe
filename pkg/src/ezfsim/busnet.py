"""Decentralized precoding protocols over a simulated shared fronthaul bus.

Every exchange is an explicit :class:`Message` whose payload is the flat
vector of real numbers that would go on the wire, so the ledger is a count
of what was actually sent rather than a formula.  Counting rules:

* metrics: one real each;
* equalizer block ``(N_R, L)``: ``2*N_R*L - L`` reals.  Each column has its
  largest entry real and non-negative (canonical phase), so the imaginary
  part of that entry is implied and dropped; the pivot row index travels as
  framing metadata, like the sender id, and is not counted;
* Hermitian ``d x d`` matrices (Gram matrices): ``d**2`` reals, i.e. the
  real diagonal plus real/imag parts of the strict upper triangle;
* complex vectors: two reals per entry.

Messages are delivered in a fixed order (phase, then sender index).  Node
computations call the same functions as :mod:`ezfsim.precoder`, so the
protocols reproduce the direct pipelines bit for bit.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, SystemConfig
from .equalizer import (
    block_gram,
    block_metric,
    equalizer_from_gram,
    gram_equalizers,
    strongest_bcu,
)
from .numerics import hermitize, hpd_solve
from .precoder import (
    Precoder,
    build_precoder,
    local_effective_channel,
    local_precoder,
)

KINDS = (
    "Metric",
    "EqualizerBlock",
    "UserGram",
    "LocalGram",
    "AggregateBroadcast",
    "SymbolVector",
    "PrecodedVector",
)
SOURCE = "S"
FUSION = "F"
CPU = "CPU"

__all__ = [
    "KINDS",
    "BusLedger",
    "FronthaulBus",
    "Message",
    "ProtocolRun",
    "pack_equalizer",
    "pack_hermitian",
    "real_count",
    "run_apd",
    "run_centralized",
    "run_dezf",
    "unpack_equalizer",
    "unpack_hermitian",
]


def real_count(kind: str, dims: tuple[int, ...]) -> int:
    """Number of reals a message of ``kind`` with payload ``dims`` costs.

    ``dims`` per kind: Metric ``(n,)``; EqualizerBlock ``(N_R, L)``;
    UserGram/LocalGram/AggregateBroadcast ``(..., d, d)`` (leading axes
    count independent Hermitian matrices); SymbolVector/PrecodedVector
    ``(n,)`` complex entries.
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 0 for d in dims):
        raise ValueError(f"negative dimension in {dims}")
    if kind == "Metric":
        return int(np.prod(dims))
    if kind == "EqualizerBlock":
        n_r, l = dims
        return 2 * n_r * l - l
    if kind in ("UserGram", "LocalGram", "AggregateBroadcast"):
        *lead, d, d2 = dims
        if d != d2:
            raise ValueError(f"Hermitian payload must be square, got {dims}")
        return int(np.prod(lead)) * d * d
    if kind in ("SymbolVector", "PrecodedVector"):
        return 2 * int(np.prod(dims))
    raise ValueError(f"unknown message kind {kind!r}")


def pack_hermitian(a: np.ndarray) -> np.ndarray:
    """Real diagonal followed by (re, im) of the strict upper triangle."""
    d = a.shape[0]
    iu = np.triu_indices(d, 1)
    upper = a[iu]
    return np.concatenate([a.diagonal().real, np.column_stack([upper.real, upper.imag]).ravel()])


def unpack_hermitian(v: np.ndarray, d: int) -> np.ndarray:
    a = np.zeros((d, d), dtype=complex)
    a[np.diag_indices(d)] = v[:d]
    iu = np.triu_indices(d, 1)
    pairs = v[d:].reshape(-1, 2)
    upper = pairs[:, 0] + 1j * pairs[:, 1]
    a[iu] = upper
    a[iu[1], iu[0]] = upper.conj()
    return a


def pack_equalizer(u: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """Serialize an ``(N_R, L)`` block in canonical phase.

    Returns the real payload and the pivot row of every column.  The pivot
    is the largest entry among those with zero imaginary part, which is the
    canonical-phase pivot up to last-ulp magnitude ties.
    """
    real_nonneg = (u.imag == 0) & (u.real >= 0)
    pivots = tuple(int(i) for i in np.argmax(np.where(real_nonneg, np.abs(u), -1.0), axis=0))
    parts = []
    for j, piv in enumerate(pivots):
        col = u[:, j]
        parts.append([col[piv].real])
        others = np.delete(col, piv)
        parts.append(np.column_stack([others.real, others.imag]).ravel())
    return np.concatenate(parts), pivots


def unpack_equalizer(v: np.ndarray, pivots: tuple[int, ...], n_r: int) -> np.ndarray:
    l = len(pivots)
    u = np.empty((n_r, l), dtype=complex)
    per_col = 2 * n_r - 1
    for j, piv in enumerate(pivots):
        chunk = v[j * per_col:(j + 1) * per_col]
        pairs = chunk[1:].reshape(-1, 2)
        others = pairs[:, 0] + 1j * pairs[:, 1]
        u[:, j] = np.insert(others, piv, chunk[0])
    return u


@dataclass(frozen=True, eq=False)
class Message:
    sender: str
    kind: str
    dims: tuple[int, ...]
    payload: np.ndarray = field(repr=False)
    tag: object = None

    @property
    def real_count(self) -> int:
        return real_count(self.kind, self.dims)


@dataclass
class BusLedger:
    """Reals exchanged on the fronthaul bus during one coherence block."""

    per_kind: Counter = field(default_factory=Counter)
    messages: int = 0

    @property
    def total(self) -> int:
        return int(sum(self.per_kind.values()))

    def record(self, msg: Message) -> None:
        self.per_kind[msg.kind] += msg.real_count
        self.messages += 1

    def to_dict(self, scheme: str | None = None, cfg: SystemConfig | None = None) -> dict:
        out = {}
        if scheme is not None:
            out["scheme"] = scheme
        if cfg is not None:
            out["cfg"] = cfg.to_dict()
        out["per_kind"] = {k: int(self.per_kind.get(k, 0)) for k in KINDS}
        out["total"] = self.total
        return out

    def to_json(self, scheme: str | None = None, cfg: SystemConfig | None = None) -> str:
        return json.dumps(self.to_dict(scheme, cfg), indent=2)


class FronthaulBus:
    """Shared broadcast medium: every message is seen by every node."""

    def __init__(self):
        self.ledger = BusLedger()
        self.log: list[Message] = []

    def send(self, sender: str, kind: str, dims, payload, tag=None) -> Message:
        payload = np.asarray(payload)
        msg = Message(sender, kind, tuple(int(d) for d in dims), payload, tag)
        if payload.dtype.kind == "f" and payload.size != msg.real_count:
            raise AssertionError(
                f"{kind} payload carries {payload.size} reals, accounting says {msg.real_count}"
            )
        self.ledger.record(msg)
        self.log.append(msg)
        return msg


class BCU:
    """State of one basic component unit during a protocol run."""

    def __init__(self, index: int, ch: ChannelSet):
        cfg = ch.cfg
        self.index = index
        self.name = f"BCU{index}"
        self.cfg = cfg
        # local CSI only: H^p reshaped per user, (K, N_R, M)
        self.h = np.array(ch.h[:, :, index * cfg.m:(index + 1) * cfg.m])
        self.metrics: np.ndarray | None = None
        self.strongest: np.ndarray | None = None
        self.u: np.ndarray | None = None
        self.g: np.ndarray | None = None
        self.g_inv: np.ndarray | None = None
        self.w_local: np.ndarray | None = None
        self.q: np.ndarray | None = None

    @property
    def hp(self) -> np.ndarray:
        c = self.cfg
        return self.h.reshape(c.n_users * c.n_r, c.m)

    def user_gram(self, k: int) -> np.ndarray:
        return block_gram(self.h[k])

    def local_gram(self) -> np.ndarray:
        cp = local_effective_channel(self.u, self.hp)
        return hermitize(cp @ cp.conj().T)

    def solve(self, g: np.ndarray) -> None:
        """Invert the aggregate Gram and form the local block ``W_p``."""
        self.g = g
        self.g_inv = hpd_solve(g, np.eye(g.shape[0], dtype=complex))
        self.q = self.g_inv.diagonal().real.copy()
        cp = local_effective_channel(self.u, self.hp)
        self.w_local = local_precoder(cp, self.g_inv, self.q)


@dataclass(eq=False)
class ProtocolRun:
    """Outcome of one protocol execution over a coherence block."""

    precoder: Precoder
    ledger: BusLedger
    scheme: str
    nodes: list = field(default_factory=list, repr=False)
    log: list = field(default_factory=list, repr=False)
    x: np.ndarray | None = field(default=None, repr=False)

    def __iter__(self):
        yield self.precoder
        yield self.ledger


def _source_symbols(cfg: SystemConfig, symbols) -> np.ndarray:
    if symbols is None:
        return np.zeros((cfg.l_tot, cfg.tau), dtype=complex)
    s = np.asarray(symbols, dtype=complex)
    if s.shape != (cfg.l_tot, cfg.tau):
        raise ValueError(f"symbols must have shape {(cfg.l_tot, cfg.tau)}, got {s.shape}")
    return s


def _broadcast_symbols(bus: FronthaulBus, cfg: SystemConfig, s: np.ndarray) -> None:
    for t in range(cfg.tau):
        col = s[:, t]
        bus.send(SOURCE, "SymbolVector", (cfg.l_tot,),
                 np.column_stack([col.real, col.imag]).ravel(), tag=t)


def _sum_in_order(mats: list[np.ndarray]) -> np.ndarray:
    total = np.zeros_like(mats[0])
    for m in mats:
        total = total + m
    return total


def run_apd(ch: ChannelSet, cfg: SystemConfig | None = None, symbols=None) -> ProtocolRun:
    """Approximate partially decentralized EZF over the shared bus.

    Phases: (1) every BCU broadcasts its ``K`` metrics; (2) each user's
    strongest BCU broadcasts that user's equalizer block; (3) every BCU
    broadcasts its Hermitian local Gram ``G_p``; (4) the source broadcasts
    the ``tau`` symbol vectors.  Each BCU then forms ``x_p = W_p s``
    locally; that traffic uses the internal bus and is not counted.

    ``symbols`` has shape ``(L_tot, tau)``; zeros are sent if omitted.
    """
    cfg = cfg or ch.cfg
    bus = FronthaulBus()
    nodes = [BCU(p, ch) for p in range(cfg.n_bcu)]
    k_users, n_r, l = cfg.n_users, cfg.n_r, cfg.n_streams

    # (1) metrics
    for node in nodes:
        t_local = np.array([block_metric(node.h[k]) for k in range(k_users)])
        bus.send(node.name, "Metric", (k_users,), t_local, tag=node.index)
    table = np.column_stack([m.payload for m in bus.log if m.kind == "Metric"])
    for node in nodes:
        node.metrics = table.copy()
        node.strongest = strongest_bcu(node.metrics)

    # (2) equalizer blocks from each user's strongest BCU
    strongest = nodes[0].strongest
    received: dict[int, np.ndarray] = {}
    for node in nodes:
        for k in np.flatnonzero(strongest == node.index):
            u_k, _ = equalizer_from_gram(node.user_gram(int(k)), l)
            payload, pivots = pack_equalizer(u_k)
            msg = bus.send(node.name, "EqualizerBlock", (n_r, l), payload, tag=(int(k), pivots))
            received[int(k)] = unpack_equalizer(msg.payload, pivots, n_r)
    u = np.stack([received[k] for k in range(k_users)])
    for node in nodes:
        node.u = u.copy()

    # (3) local Grams
    for node in nodes:
        gp = node.local_gram()
        bus.send(node.name, "LocalGram", (cfg.l_tot, cfg.l_tot), pack_hermitian(gp), tag=node.index)
    local_grams = [unpack_hermitian(m.payload, cfg.l_tot) for m in bus.log if m.kind == "LocalGram"]
    for node in nodes:
        node.solve(_sum_in_order(local_grams))

    # (4) symbols, then local precoding on the internal bus
    s = _source_symbols(cfg, symbols)
    _broadcast_symbols(bus, cfg, s)
    x = np.concatenate([node.w_local @ s for node in nodes], axis=0)

    w = np.concatenate([node.w_local for node in nodes], axis=0)
    pre = Precoder(w, nodes[0].q.copy(), "APD", cfg.n_bcu).with_power(cfg)
    return ProtocolRun(pre, bus.ledger, "APD", nodes, bus.log, x)


def run_dezf(ch: ChannelSet, cfg: SystemConfig | None = None, symbols=None,
             topology: str = "fusion") -> ProtocolRun:
    """Distributed exact EZF.

    ``topology="fusion"`` (default): BCUs upload their ``K`` user Grams to a
    fusion node, which broadcasts the aggregates; the same is then done for
    the local effective-channel Grams ``G_p``.  ``topology="peer"``: BCUs
    broadcast to each other directly and there is no aggregate broadcast.
    """
    if topology not in ("fusion", "peer"):
        raise ValueError(f"unknown DEZF topology {topology!r}")
    cfg = cfg or ch.cfg
    bus = FronthaulBus()
    nodes = [BCU(p, ch) for p in range(cfg.n_bcu)]
    k_users, n_r, l = cfg.n_users, cfg.n_r, cfg.n_streams
    hdim = n_r * n_r

    # (1) per-user Grams, aggregated in BCU order
    uploads = []
    for node in nodes:
        grams = np.stack([node.user_gram(k) for k in range(k_users)])
        payload = np.concatenate([pack_hermitian(g) for g in grams])
        msg = bus.send(node.name, "UserGram", (k_users, n_r, n_r), payload, tag=node.index)
        uploads.append(np.stack([unpack_hermitian(msg.payload[k * hdim:(k + 1) * hdim], n_r)
                                 for k in range(k_users)]))
    aggregate = _sum_in_order(uploads)
    if topology == "fusion":
        payload = np.concatenate([pack_hermitian(g) for g in aggregate])
        msg = bus.send(FUSION, "AggregateBroadcast", (k_users, n_r, n_r), payload, tag="user")
        aggregate = np.stack([unpack_hermitian(msg.payload[k * hdim:(k + 1) * hdim], n_r)
                              for k in range(k_users)])
    bank = gram_equalizers(aggregate, l)
    for node in nodes:
        node.u = bank.u.copy()

    # (2) local Grams of the effective channel
    local_grams = []
    for node in nodes:
        msg = bus.send(node.name, "LocalGram", (cfg.l_tot, cfg.l_tot),
                       pack_hermitian(node.local_gram()), tag=node.index)
        local_grams.append(unpack_hermitian(msg.payload, cfg.l_tot))
    g = _sum_in_order(local_grams)
    if topology == "fusion":
        msg = bus.send(FUSION, "AggregateBroadcast", (cfg.l_tot, cfg.l_tot), pack_hermitian(g), tag="G")
        g = unpack_hermitian(msg.payload, cfg.l_tot)
    for node in nodes:
        node.solve(g)

    s = _source_symbols(cfg, symbols)
    _broadcast_symbols(bus, cfg, s)
    x = np.concatenate([node.w_local @ s for node in nodes], axis=0)
    w = np.concatenate([node.w_local for node in nodes], axis=0)
    pre = Precoder(w, nodes[0].q.copy(), "DEZF", cfg.n_bcu).with_power(cfg)
    return ProtocolRun(pre, bus.ledger, "DEZF", nodes, bus.log, x)


def run_centralized(ch: ChannelSet, cfg: SystemConfig | None = None, symbols=None) -> ProtocolRun:
    """Centralized EZF: the CPU holds all CSI and streams ``x = W s``.

    Precoder computation costs no fronthaul; every symbol interval sends the
    ``N_T`` complex antenna samples to the RF chains.
    """
    cfg = cfg or ch.cfg
    bus = FronthaulBus()
    pre, _ = build_precoder(ch, "CEN")
    s = _source_symbols(cfg, symbols)
    x = pre.w @ s
    for t in range(cfg.tau):
        col = x[:, t]
        bus.send(CPU, "PrecodedVector", (cfg.n_t,),
                 np.column_stack([col.real, col.imag]).ravel(), tag=t)
    return ProtocolRun(pre, bus.ledger, "CEN", [], bus.log, x)
