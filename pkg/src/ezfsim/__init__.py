"""Eigen-zero-forcing precoding over clustered antenna units.

Centralized, approximate partially decentralized (APD), distributed exact
(DEZF) and fully decentralized (FD) precoders, a fronthaul bus that counts
every real scalar exchanged, closed-form fronthaul loads and a Monte Carlo
BER engine.
"""

from .busnet import BusLedger, FronthaulBus, ProtocolRun, run_apd, run_centralized, run_dezf
from .channel import ChannelModel, ChannelSet, SystemConfig, generate_channels, make_rng
from .equalizer import EqualizerBank, approx_equalizers, bcu_metrics, exact_equalizers, strongest_bcu
from .errors import ConfigError, ContractViolation, RankDeficientWarning, SingularGram, ZeroColumnWarning
from .fronthaul import analytic_load, gain, reference_tables, table_report
from .mcsim import BerCurve, NumericalFailure, ber_sweep, detect, qam16_demap, qam16_map, transmit_and_equalize
from .precoder import SCHEMES, Precoder, build_precoder, effective_channel, ezf_precoder, fd_precoder, power_loading

__version__ = "0.1.0"

__all__ = [
    "SCHEMES",
    "BerCurve",
    "BusLedger",
    "ChannelModel",
    "ChannelSet",
    "ConfigError",
    "ContractViolation",
    "EqualizerBank",
    "FronthaulBus",
    "NumericalFailure",
    "Precoder",
    "ProtocolRun",
    "RankDeficientWarning",
    "SingularGram",
    "SystemConfig",
    "ZeroColumnWarning",
    "analytic_load",
    "approx_equalizers",
    "bcu_metrics",
    "ber_sweep",
    "build_precoder",
    "detect",
    "effective_channel",
    "exact_equalizers",
    "ezf_precoder",
    "fd_precoder",
    "gain",
    "generate_channels",
    "make_rng",
    "reference_tables",
    "power_loading",
    "qam16_demap",
    "qam16_map",
    "run_apd",
    "run_centralized",
    "run_dezf",
    "strongest_bcu",
    "table_report",
    "transmit_and_equalize",
]
