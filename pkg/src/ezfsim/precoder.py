"""EZF precoders: centralized, approximate partially decentralized (APD),
distributed exact (DEZF) and fully decentralized (FD).

Rows of the effective channel ``C`` are ordered user-major, stream-minor,
i.e. row ``k*L + l`` is ``u_{k,l}^H H_k``.  The BS antennas (columns) are
split into ``P`` BCU blocks and most quantities are kept per block so the
decentralized protocols in :mod:`ezfsim.busnet` can reuse the exact same
arithmetic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelSet, SystemConfig, bcu_block
from .equalizer import (
    EqualizerBank,
    approx_equalizers,
    bcu_metrics,
    block_gram,
    exact_equalizers,
    gram_equalizers,
    strongest_bcu,
)
from .errors import ZeroColumnWarning
from .numerics import hermitize, hpd_solve, pinv

SCHEMES = ("CEN", "APD", "DEZF", "FD")
ZERO_COLUMN_RTOL = 1e-12

__all__ = [
    "SCHEMES",
    "EffectiveChannel",
    "GramSet",
    "Precoder",
    "aggregate_user_grams",
    "build_precoder",
    "effective_channel",
    "ezf_precoder",
    "fd_precoder",
    "gram_accumulate",
    "local_effective_channel",
    "local_precoder",
    "power_loading",
]


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Equalized composite channel ``C = D [H^1 ... H^P]``.

    ``blocks`` has shape ``(P, L_tot, M)``; ``blocks[p]`` is ``C_p``.
    """

    blocks: np.ndarray = field(repr=False)
    equalizers: EqualizerBank = field(repr=False)

    @property
    def n_bcu(self) -> int:
        return self.blocks.shape[0]

    @property
    def c(self) -> np.ndarray:
        return np.concatenate(list(self.blocks), axis=1)


@dataclass(frozen=True, eq=False)
class GramSet:
    local: np.ndarray = field(repr=False)
    total: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class Precoder:
    """Composite precoder ``W`` of shape ``(N_T, L_tot)``.

    ``q`` holds ``diag(G^-1)`` (ones for FD, which has no shared Gram);
    ``gamma`` is the power loading factor once a power budget is applied.
    ``zero_columns`` lists ``(p, i)`` pairs where BCU ``p`` could not serve
    stream ``i`` (FD only).
    """

    w: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    scheme: str
    n_bcu: int
    gamma: float | None = None
    zero_columns: tuple[tuple[int, int], ...] = ()

    @property
    def blocks(self) -> np.ndarray:
        n_t, l_tot = self.w.shape
        return self.w.reshape(self.n_bcu, n_t // self.n_bcu, l_tot)

    def with_power(self, cfg: SystemConfig) -> "Precoder":
        return replace(self, gamma=power_loading(self, cfg))


def local_effective_channel(u: np.ndarray, hp: np.ndarray) -> np.ndarray:
    """``C_p = D H^p`` for a local channel ``hp`` of shape ``(K*N_R, M)``."""
    k, n_r, l = u.shape
    blocks = np.matmul(u.conj().transpose(0, 2, 1), hp.reshape(k, n_r, -1))
    return blocks.reshape(k * l, -1)


def effective_channel(ch: ChannelSet, eq: EqualizerBank) -> EffectiveChannel:
    cfg = ch.cfg
    if eq.u.shape != (cfg.n_users, cfg.n_r, cfg.n_streams):
        raise ValueError(f"equalizer bank shape {eq.u.shape} does not match the channel")
    blocks = np.stack([local_effective_channel(eq.u, ch.local(p)) for p in range(cfg.n_bcu)])
    return EffectiveChannel(blocks, eq)


def gram_accumulate(eff: EffectiveChannel) -> GramSet:
    local = np.stack([hermitize(cp @ cp.conj().T) for cp in eff.blocks])
    total = np.zeros_like(local[0])
    for gp in local:
        total = total + gp
    return GramSet(local, total)


def local_precoder(cp: np.ndarray, g_inv: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``W_p = C_p^H G^-1 Q^-1/2``."""
    return (cp.conj().T @ g_inv) / np.sqrt(q)


def ezf_precoder(eff: EffectiveChannel, grams: GramSet, scheme: str = "CEN",
                 *, normalize: bool = True) -> Precoder:
    """Zero-forcing precoder built block by block from the shared Gram.

    ``normalize=False`` skips the ``Q^-1/2`` column scaling and exists only
    as a fault-injection hook for the validation suite.

    Raises
    ------
    SingularGram
        If the aggregate Gram is not positive definite.
    """
    g = grams.total
    g_inv = hpd_solve(g, np.eye(g.shape[0], dtype=complex))
    q = g_inv.diagonal().real.copy()
    scale = q if normalize else np.ones_like(q)
    w = np.concatenate([local_precoder(cp, g_inv, scale) for cp in eff.blocks], axis=0)
    return Precoder(w, q, scheme, eff.n_bcu)


def fd_precoder(ch: ChannelSet, eq: EqualizerBank) -> Precoder:
    """Fully decentralized EZF: every BCU inverts only its own ``C_p``.

    Column ``i`` of BCU ``p`` is ``c_hat / (||c_hat|| sqrt(P))`` where
    ``c_hat`` is column ``i`` of ``pinv(C_p)``.  A column whose norm is
    negligible (relative 1e-12 to ``||pinv(C_p)||``) is left at zero and
    reported in ``zero_columns``.
    """
    eff = effective_channel(ch, eq)
    n_bcu = eff.n_bcu
    blocks = []
    zero = []
    for p, cp in enumerate(eff.blocks):
        c_hat = pinv(cp)
        norms = np.linalg.norm(c_hat, axis=0)
        dead = norms <= ZERO_COLUMN_RTOL * np.linalg.norm(c_hat)
        wp = np.zeros_like(c_hat)
        live = ~dead
        wp[:, live] = c_hat[:, live] / (norms[live] * np.sqrt(n_bcu))
        blocks.append(wp)
        zero.extend((p, int(i)) for i in np.flatnonzero(dead))
    if zero:
        warnings.warn(f"FD precoder has unservable streams {zero}", ZeroColumnWarning, stacklevel=2)
    w = np.concatenate(blocks, axis=0)
    return Precoder(w, np.ones(w.shape[1]), "FD", n_bcu, zero_columns=tuple(zero))


def power_loading(pre: Precoder | np.ndarray, cfg: SystemConfig) -> float:
    """``gamma = P_BS / tr(W^H W)`` for unit-energy independent symbols."""
    w = pre.w if isinstance(pre, Precoder) else np.asarray(pre)
    energy = float(np.sum(w.real**2 + w.imag**2))
    if energy == 0:
        raise ValueError("precoder has zero power")
    return cfg.p_bs / energy


def aggregate_user_grams(ch: ChannelSet) -> np.ndarray:
    """``sum_p H_kp H_kp^H`` per user, accumulated in BCU order."""
    cfg = ch.cfg
    out = np.zeros((cfg.n_users, cfg.n_r, cfg.n_r), dtype=complex)
    for p in range(cfg.n_bcu):
        for k in range(cfg.n_users):
            out[k] = out[k] + block_gram(bcu_block(ch, k, p))
    return out


def build_precoder(ch: ChannelSet, scheme: str) -> tuple[Precoder, EqualizerBank]:
    """Direct (non-protocol) pipeline for one scheme, power-loaded per ``ch.cfg``."""
    if scheme == "CEN":
        eq = exact_equalizers(ch)
    elif scheme == "APD":
        eq = approx_equalizers(ch, strongest_bcu(bcu_metrics(ch)))
    elif scheme == "DEZF":
        eq = gram_equalizers(aggregate_user_grams(ch), ch.cfg.n_streams)
    elif scheme == "FD":
        eq = exact_equalizers(ch)
        return fd_precoder(ch, eq).with_power(ch.cfg), eq
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    eff = effective_channel(ch, eq)
    pre = ezf_precoder(eff, gram_accumulate(eff), scheme)
    return pre.with_power(ch.cfg), eq
