"""Exception and warning types shared across the package."""

import numpy as np


class ConfigError(ValueError):
    """A system configuration violates one of its invariants."""


class ContractViolation(ValueError):
    """An input does not satisfy the precondition of a numerical kernel."""


class SingularGram(np.linalg.LinAlgError):
    """The Gram matrix of an effective channel is not positive definite.

    Raised when the effective channel has rank below the number of
    streams, e.g. too many streams for the antennas, or a degenerate draw.
    """


class RankDeficientWarning(UserWarning):
    """A local channel block has fewer significant eigenmodes than streams."""


class ZeroColumnWarning(UserWarning):
    """A BCU cannot serve a stream with its local pseudo-inverse."""
