"""Uncoded 16-QAM BER simulation of the precoded downlink.

Transmission follows ``y_k = sqrt(gamma) H_k W s + n_k``; user ``k``
equalizes with ``r_k = U_k^H y_k``.  For the zero-forcing schemes the
noiseless output is ``sqrt(gamma) Q^-1/2 s`` and the receiver, which is
assumed to know ``gamma`` and ``Q``, rescales by ``sqrt(Q / gamma)`` before
slicing.  FD does not diagonalize the channel, so its receiver rescales by
the realized diagonal of ``C W`` instead (a genie-aided, optimistic choice).

Trials are independent: trial ``t`` uses the generator
``make_rng(seed, t, attempt)`` so results do not depend on how trials are
spread over worker processes.  The transmit power axis is ``P_BS`` in dB
with the noise variance held at ``cfg.noise_var``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import RNG_ALGORITHM, ChannelModel, ChannelSet, SystemConfig, generate_channels, make_rng
from .equalizer import EqualizerBank
from .errors import SingularGram
from .precoder import SCHEMES, Precoder, build_precoder, effective_channel

__all__ = [
    "BER_CSV_COLUMNS",
    "CONSTELLATION",
    "BerCurve",
    "NumericalFailure",
    "ber_sweep",
    "detect",
    "qam16_demap",
    "qam16_map",
    "transmit_and_equalize",
]

BER_CSV_COLUMNS = ("scheme", "power_db", "ber", "bits", "ci95")

_SCALE = math.sqrt(10.0)
# Gray code per dimension: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, indexed by
# the two-bit value
_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])
CONSTELLATION = np.array(
    [(_LEVELS[i >> 2] + 1j * _LEVELS[i & 3]) / _SCALE for i in range(16)]
)
_POPCOUNT = np.array([bin(i).count("1") for i in range(16)])
_BITS = np.array([[(i >> (3 - b)) & 1 for b in range(4)] for i in range(16)], dtype=np.uint8)


class NumericalFailure(RuntimeError):
    """Too many singular channel draws in a row for one trial."""


def _indices_from_bits(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 4:
        raise ValueError("bit count must be a multiple of 4")
    b = bits.reshape(-1, 4)
    return 8 * b[:, 0] + 4 * b[:, 1] + 2 * b[:, 2] + b[:, 3]


def qam16_map(bits) -> np.ndarray:
    """Map groups of four bits to unit-energy 16-QAM symbols.

    The first two bits select the in-phase level, the last two the
    quadrature level, each Gray coded.
    """
    return CONSTELLATION[_indices_from_bits(bits)]


def _slice_indices(symbols) -> np.ndarray:
    z = np.asarray(symbols, dtype=complex) * _SCALE
    re = np.argmin(np.abs(z.real[..., None] - _LEVELS), axis=-1)
    im = np.argmin(np.abs(z.imag[..., None] - _LEVELS), axis=-1)
    return 4 * re + im


def qam16_demap(symbols) -> np.ndarray:
    """Nearest-point decisions as a flat bit array.

    Ties go to the lowest constellation index, so a zero input decides
    ``(-1-1j)/sqrt(10)``, bits ``0101``.
    """
    idx = _slice_indices(symbols).ravel()
    return _BITS[idx].ravel()


def transmit_and_equalize(ch: ChannelSet, pre: Precoder, eq: EqualizerBank, s: np.ndarray,
                          noise: np.ndarray | None = None, gamma: float | None = None) -> np.ndarray:
    """Equalized outputs ``r`` of shape ``(L_tot, T)`` for symbols ``s``.

    ``noise`` holds the raw receiver noise ``n_k`` stacked as
    ``(K*N_R, T)``; ``None`` means noiseless.
    """
    gamma = pre.gamma if gamma is None else gamma
    if gamma is None:
        raise ValueError("precoder has no power loading; pass gamma")
    s = np.asarray(s, dtype=complex)
    squeeze = s.ndim == 1
    s = s.reshape(s.shape[0], -1)
    y = math.sqrt(gamma) * (ch.stacked() @ (pre.w @ s))
    if noise is not None:
        y = y + np.asarray(noise).reshape(y.shape)
    r = eq.blockdiag() @ y
    return r[:, 0] if squeeze else r


def _receiver_scale(pre: Precoder, a: np.ndarray) -> np.ndarray:
    """Per-stream factor mapping ``r / sqrt(gamma)`` back onto symbols."""
    if pre.scheme == "FD":
        g = np.diagonal(a).copy()
        out = np.zeros_like(g)
        nz = g != 0
        out[nz] = 1.0 / g[nz]
        return out
    return np.sqrt(pre.q).astype(complex)


def detect(r, gamma: float, q=None, gain=None) -> np.ndarray:
    """Rescale equalized outputs and slice them to bits.

    Pass ``q`` (``diag(G^-1)``) for the zero-forcing schemes, or the complex
    per-stream ``gain`` (diagonal of ``C W``) for FD.  Streams with zero
    gain decide on ``0``.
    """
    r = np.asarray(r, dtype=complex)
    if (q is None) == (gain is None):
        raise ValueError("pass exactly one of q or gain")
    if q is not None:
        scale = np.sqrt(np.asarray(q, dtype=float)).astype(complex)
    else:
        gain = np.asarray(gain, dtype=complex)
        scale = np.zeros_like(gain)
        nz = gain != 0
        scale[nz] = 1.0 / gain[nz]
    shape = (-1,) + (1,) * (r.ndim - 1)
    s_hat = r * scale.reshape(shape) / math.sqrt(gamma)
    return qam16_demap(s_hat)


@dataclass(eq=False)
class BerCurve:
    """Bit error counts per scheme and power point."""

    power_db: np.ndarray
    schemes: tuple[str, ...]
    errors: np.ndarray
    bits: int
    redraws: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def ber(self) -> np.ndarray:
        return self.errors / self.bits

    @property
    def ci95(self) -> np.ndarray:
        """Normal-approximation 95% half-width per point."""
        b = self.ber
        return 1.96 * np.sqrt(b * (1 - b) / self.bits)

    def curve(self, scheme: str) -> np.ndarray:
        return self.ber[self.schemes.index(scheme)]

    def radius(self, scheme: str) -> np.ndarray:
        return self.ci95[self.schemes.index(scheme)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BER_CSV_COLUMNS)
        ber, ci = self.ber, self.ci95
        for i, scheme in enumerate(self.schemes):
            for j, pdb in enumerate(self.power_db):
                writer.writerow([scheme, repr(float(pdb)), repr(float(ber[i, j])),
                                 self.bits, repr(float(ci[i, j]))])
        return buf.getvalue()


def _draw_precoders(cfg, model, schemes, seed, trial, max_redraws):
    for attempt in range(max_redraws + 1):
        rng = make_rng(seed, trial, attempt)
        ch = generate_channels(cfg, model, rng=rng)
        try:
            built = [build_precoder(ch, s) for s in schemes]
        except SingularGram:
            continue
        return ch, built, rng, attempt
    raise NumericalFailure(f"trial {trial}: {max_redraws + 1} singular channel draws in a row")


def _run_trial(cfg: SystemConfig, model: ChannelModel, schemes, power_lin, noise_std,
               seed: int, trial: int, max_redraws: int):
    ch, built, rng, redraws = _draw_precoders(cfg, model, schemes, seed, trial, max_redraws)
    tau = cfg.tau
    tx = rng.integers(0, 16, size=(cfg.l_tot, tau))
    s = CONSTELLATION[tx]
    raw = rng.standard_normal((cfg.n_users * cfg.n_r, tau, 2))
    noise = (raw[..., 0] + 1j * raw[..., 1]) * math.sqrt(0.5)
    errors = np.zeros((len(schemes), power_lin.size), dtype=np.int64)
    for i, (pre, eq) in enumerate(built):
        a = effective_channel(ch, eq).c @ pre.w
        signal = a @ s
        n_eq = noise_std * (eq.blockdiag() @ noise)
        scale = _receiver_scale(pre, a)[:, None]
        energy = float(np.sum(pre.w.real**2 + pre.w.imag**2))
        for j, p in enumerate(power_lin):
            sqrt_gamma = math.sqrt(p / energy)
            r = sqrt_gamma * signal + n_eq
            rx = _slice_indices(r * scale / sqrt_gamma)
            errors[i, j] = int(_POPCOUNT[tx ^ rx].sum())
    return errors, redraws


def _run_chunk(args):
    cfg, model, schemes, power_lin, noise_std, seed, trials, max_redraws = args
    total = np.zeros((len(schemes), power_lin.size), dtype=np.int64)
    redraws = 0
    for t in trials:
        e, r = _run_trial(cfg, model, schemes, power_lin, noise_std, seed, t, max_redraws)
        total += e
        redraws += r
    return total, redraws


def ber_sweep(cfg: SystemConfig, schemes=SCHEMES, power_db=(0.0,), model: ChannelModel | None = None,
              trials: int = 100, seed: int = 0, workers: int = 1, noiseless: bool = False,
              max_redraws: int = 10) -> BerCurve:
    """Monte Carlo BER for each scheme over a transmit-power grid.

    Every trial draws a fresh channel and ``cfg.tau`` symbol vectors; all
    schemes and power points share that trial's channel, symbols and noise.
    Trial ``t`` is assigned to worker ``t % workers``; error counts are
    summed as integers, so the result is identical for any worker count.

    Raises
    ------
    NumericalFailure
        If a trial exceeds ``max_redraws`` singular channel draws.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if cfg.tau < 1:
        raise ValueError("tau must be >= 1 to transmit symbols")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    schemes = tuple(schemes)
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    model = model or ChannelModel()
    power_db = np.asarray(power_db, dtype=float)
    power_lin = 10.0 ** (power_db / 10.0)
    noise_std = 0.0 if noiseless else math.sqrt(cfg.noise_var)
    chunks = [range(w, trials, workers) for w in range(workers)]
    jobs = [(cfg, model, schemes, power_lin, noise_std, seed, c, max_redraws) for c in chunks]
    if workers == 1:
        results = [_run_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))
    errors = sum((r[0] for r in results), np.zeros((len(schemes), power_db.size), dtype=np.int64))
    redraws = sum(r[1] for r in results)
    bits = trials * cfg.tau * cfg.l_tot * 4
    meta = {
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "model": {"kind": model.kind, "spread_db": model.spread_db},
        "trials": trials,
        "workers": workers,
        "redraws": redraws,
        "noiseless": noiseless,
        "cfg": cfg.to_dict(),
    }
    return BerCurve(power_db, schemes, errors, bits, redraws, meta)
