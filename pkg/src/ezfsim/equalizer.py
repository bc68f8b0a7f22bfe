"""User equalization matrices.

Each user ``k`` receives its ``L`` streams through an ``(N_R, L)`` matrix
``U[k]`` with orthonormal columns.  Centralized EZF takes the dominant left
singular vectors of the full channel ``H_k``; the approximate scheme takes
the dominant eigenvectors of the Gram matrix of the block seen by the user's
strongest BCU only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, bcu_block
from .errors import RankDeficientWarning
from .numerics import hermitian_eig, hermitize, svd

RANK_RTOL = 1e-12
EIGENGAP_RTOL = 1e-10

__all__ = [
    "EqualizerBank",
    "approx_equalizers",
    "bcu_metrics",
    "block_gram",
    "equalizer_from_gram",
    "exact_equalizers",
    "gram_equalizers",
    "strongest_bcu",
]


@dataclass(frozen=True, eq=False)
class EqualizerBank:
    """Per-user equalizers ``u`` of shape ``(K, N_R, L)``.

    ``kind`` is ``"exact"`` or ``"approx"``; approximate banks also carry
    the strongest-BCU index per user.  ``degenerate`` lists users whose
    ``L``-th and ``(L+1)``-th eigenvalues coincide, for which the selected
    subspace is not unique.
    """

    u: np.ndarray = field(repr=False)
    kind: str = "exact"
    strongest: np.ndarray | None = None
    degenerate: tuple[int, ...] = ()

    @property
    def n_users(self) -> int:
        return self.u.shape[0]

    @property
    def n_streams(self) -> int:
        return self.u.shape[2]

    def blockdiag(self) -> np.ndarray:
        """``D = Blkdiag(U_1^H, ..., U_K^H)``, shape ``(K*L, K*N_R)``."""
        k, n_r, l = self.u.shape
        d = np.zeros((k * l, k * n_r), dtype=complex)
        for i in range(k):
            d[i * l:(i + 1) * l, i * n_r:(i + 1) * n_r] = self.u[i].conj().T
        return d


def _eigengap_degenerate(values: np.ndarray, l: int) -> bool:
    if l >= values.size:
        return False
    scale = max(abs(values[0]), np.finfo(float).tiny)
    return abs(values[l - 1] - values[l]) <= EIGENGAP_RTOL * scale


def exact_equalizers(ch: ChannelSet) -> EqualizerBank:
    """Dominant ``L`` left singular vectors of every full user channel."""
    cfg = ch.cfg
    l = cfg.n_streams
    u = np.empty((cfg.n_users, cfg.n_r, l), dtype=complex)
    degenerate = []
    for k in range(cfg.n_users):
        dec = svd(ch.h[k])
        u[k] = dec.u[:, :l]
        s2 = np.zeros(cfg.n_r)
        s2[:dec.s.size] = dec.s**2
        if _eigengap_degenerate(s2, l):
            degenerate.append(k)
    return EqualizerBank(u, "exact", None, tuple(degenerate))


def block_gram(block: np.ndarray) -> np.ndarray:
    return hermitize(block @ block.conj().T)


def equalizer_from_gram(gram: np.ndarray, l: int) -> tuple[np.ndarray, bool]:
    """Top-``l`` eigenvectors of a user Gram matrix and a degeneracy flag.

    Warns with :class:`RankDeficientWarning` if the ``l``-th eigenvalue is
    negligible relative to the trace.
    """
    dec = hermitian_eig(gram)
    trace = float(np.trace(gram).real)
    if dec.values[l - 1] < RANK_RTOL * trace or trace == 0:
        warnings.warn(
            f"{l} streams requested but local Gram has eigenvalues {dec.values}",
            RankDeficientWarning,
            stacklevel=3,
        )
    return dec.vectors[:, :l], _eigengap_degenerate(dec.values, l)


def gram_equalizers(user_grams: np.ndarray, l: int, kind: str = "exact") -> EqualizerBank:
    """Equalizers from per-user Gram matrices ``(K, N_R, N_R)``.

    With aggregate Grams ``sum_p H_kp H_kp^H = H_k H_k^H`` this yields the
    exact equalizers without access to ``H_k`` itself.
    """
    n_users, n_r, _ = user_grams.shape
    u = np.empty((n_users, n_r, l), dtype=complex)
    degenerate = []
    for k in range(n_users):
        u[k], flag = equalizer_from_gram(user_grams[k], l)
        if flag:
            degenerate.append(k)
    return EqualizerBank(u, kind, None, tuple(degenerate))


def bcu_metrics(ch: ChannelSet) -> np.ndarray:
    """``T[k, p] = tr(H_kp H_kp^H)``, the block energies, shape ``(K, P)``."""
    cfg = ch.cfg
    t = np.empty((cfg.n_users, cfg.n_bcu))
    for k in range(cfg.n_users):
        for p in range(cfg.n_bcu):
            t[k, p] = block_metric(bcu_block(ch, k, p))
    return t


def block_metric(block: np.ndarray) -> float:
    return float(np.sum(block.real**2 + block.imag**2))


def strongest_bcu(t: np.ndarray) -> np.ndarray:
    """Row-wise argmax of the metric table; ties go to the lowest index."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 2:
        raise ValueError(f"metric table must be 2-D, got shape {t.shape}")
    return np.argmax(t, axis=1)


def approx_equalizers(ch: ChannelSet, strongest) -> EqualizerBank:
    """Equalizers from the Gram of each user's strongest-BCU block."""
    cfg = ch.cfg
    strongest = np.asarray(strongest, dtype=int)
    if strongest.shape != (cfg.n_users,):
        raise ValueError(f"need one BCU index per user, got shape {strongest.shape}")
    l = cfg.n_streams
    u = np.empty((cfg.n_users, cfg.n_r, l), dtype=complex)
    degenerate = []
    for k in range(cfg.n_users):
        u[k], flag = equalizer_from_gram(block_gram(bcu_block(ch, k, int(strongest[k]))), l)
        if flag:
            degenerate.append(k)
    return EqualizerBank(u, "approx", strongest.copy(), tuple(degenerate))
