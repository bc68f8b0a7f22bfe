"""System configuration and synthetic downlink channels.

Channels are stored per user as ``H[k]`` with shape ``(N_R, N_T)``.  The
base station antennas are split into ``P`` contiguous clusters (BCUs) of
``M`` antennas, so the block of user ``k`` seen by BCU ``p`` is the column
slice ``H[k][:, p*M:(p+1)*M]``.  Indices are 0-based throughout.

Random draws use numpy's Philox counter-based generator so the stream is
fully specified by the seed (and, for Monte Carlo trials, by the trial index
through :class:`numpy.random.SeedSequence` spawn keys).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .errors import ConfigError

RNG_ALGORITHM = "numpy.random.Philox(SeedSequence)"

__all__ = [
    "RNG_ALGORITHM",
    "ChannelModel",
    "ChannelSet",
    "SystemConfig",
    "bcu_block",
    "generate_channels",
    "make_rng",
]


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and protocol parameters of one downlink scenario.

    Attributes
    ----------
    n_t : int
        Number of BS antennas, ``N_T``.
    n_bcu : int
        Number of BCUs, ``P``.
    m : int
        Antennas per BCU, ``M``; ``n_bcu * m`` must equal ``n_t``.
    n_users : int
        Number of users, ``K``.
    n_r : int
        Antennas per user, ``N_R``.
    n_streams : int
        Streams per user, ``L <= N_R``.
    tau : int
        Symbol intervals per coherence block.
    p_bs : float
        Total transmit power (linear).
    noise_var : float
        Receiver noise variance (linear).
    """

    n_t: int
    n_bcu: int
    m: int
    n_users: int
    n_r: int
    n_streams: int
    tau: int = 65
    p_bs: float = 1.0
    noise_var: float = 1.0

    def __post_init__(self):
        for name in ("n_t", "n_bcu", "m", "n_users", "n_r", "n_streams"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if int(self.tau) != self.tau or self.tau < 0:
            raise ConfigError(f"tau must be a non-negative integer, got {self.tau!r}")
        if self.n_bcu * self.m != self.n_t:
            raise ConfigError(
                f"P·M = N_T violated: P={self.n_bcu}, M={self.m}, N_T={self.n_t}"
            )
        if self.n_streams > self.n_r:
            raise ConfigError(f"L ≤ N_R violated: L={self.n_streams}, N_R={self.n_r}")
        if self.l_tot > self.n_t:
            raise ConfigError(f"L_tot = K·L ≤ N_T violated: L_tot={self.l_tot}, N_T={self.n_t}")
        if not (self.p_bs >= 0 and math.isfinite(self.p_bs)):
            raise ConfigError(f"p_bs must be finite and non-negative, got {self.p_bs!r}")
        if not (self.noise_var >= 0 and math.isfinite(self.noise_var)):
            raise ConfigError(f"noise_var must be finite and non-negative, got {self.noise_var!r}")

    @property
    def l_tot(self) -> int:
        return self.n_users * self.n_streams

    @property
    def eta(self) -> float:
        """System load, total streams over BS antennas."""
        return self.l_tot / self.n_t

    def replace(self, **changes) -> "SystemConfig":
        """Copy with fields changed; ``n_t`` follows ``n_bcu * m`` unless given."""
        values = asdict(self)
        values.update(changes)
        if "n_t" not in changes and ("n_bcu" in changes or "m" in changes):
            values["n_t"] = values["n_bcu"] * values["m"]
        return SystemConfig(**values)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ChannelModel:
    """Synthetic stand-in for a geometric channel simulator.

    ``iid-rayleigh`` draws every entry as CN(0, 1).  ``bcu-disparity``
    additionally scales each block ``H[k][:, BCU p]`` by a log-normal
    amplitude whose dB value has standard deviation ``spread_db``, with the
    mean chosen so that the expected power gain is one.
    """

    kind: Literal["iid-rayleigh", "bcu-disparity"] = "iid-rayleigh"
    spread_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("iid-rayleigh", "bcu-disparity"):
            raise ConfigError(f"unknown channel model {self.kind!r}")
        if not self.spread_db >= 0:
            raise ConfigError(f"gain spread must be >= 0 dB, got {self.spread_db!r}")


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Per-user channel matrices with their per-BCU block views."""

    cfg: SystemConfig
    h: np.ndarray = field(repr=False)
    gains: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        c = self.cfg
        expected = (c.n_users, c.n_r, c.n_t)
        if self.h.shape != expected:
            raise ConfigError(f"channel shape {self.h.shape} does not match config {expected}")
        self.h.setflags(write=False)

    def block(self, k: int, p: int) -> np.ndarray:
        return bcu_block(self, k, p)

    def local(self, p: int) -> np.ndarray:
        """``H^p``: the ``(K*N_R, M)`` channel seen by BCU ``p``, users stacked."""
        c = self.cfg
        _check_index(p, c.n_bcu, "BCU")
        hp = self.h[:, :, p * c.m:(p + 1) * c.m]
        return hp.reshape(c.n_users * c.n_r, c.m)

    def stacked(self) -> np.ndarray:
        """All users stacked, ``(K*N_R, N_T)``."""
        c = self.cfg
        return self.h.reshape(c.n_users * c.n_r, c.n_t)


def _check_index(i: int, n: int, what: str) -> None:
    if not 0 <= i < n:
        raise IndexError(f"{what} index {i} out of range [0, {n})")


def bcu_block(ch: ChannelSet, k: int, p: int) -> np.ndarray:
    """Channel between BCU ``p`` and user ``k`` (both 0-based), ``(N_R, M)``."""
    c = ch.cfg
    _check_index(k, c.n_users, "user")
    _check_index(p, c.n_bcu, "BCU")
    return ch.h[k, :, p * c.m:(p + 1) * c.m]


def generate_channels(cfg: SystemConfig, model: ChannelModel | None = None,
                      rng: np.random.Generator | None = None) -> ChannelSet:
    """Draw a channel set.

    The entries are drawn first, the disparity gains second, so a
    ``bcu-disparity`` model with zero spread reproduces ``iid-rayleigh``
    bit for bit.  If ``rng`` is given it overrides ``model.seed``.
    """
    model = model or ChannelModel()
    if rng is None:
        rng = make_rng(model.seed)
    shape = (cfg.n_users, cfg.n_r, cfg.n_t)
    ri = rng.standard_normal(shape + (2,))
    h = (ri[..., 0] + 1j * ri[..., 1]) * np.sqrt(0.5)
    gains = None
    if model.kind == "bcu-disparity":
        a = math.log(10.0) / 10.0
        sigma = model.spread_db
        db = rng.normal(-0.5 * a * sigma**2, sigma, size=(cfg.n_users, cfg.n_bcu))
        gains = 10.0 ** (db / 20.0)
        h = h * np.repeat(gains, cfg.m, axis=1)[:, None, :]
    return ChannelSet(cfg, h, gains)
