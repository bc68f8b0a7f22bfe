"""Complex matrix kernels used by every other module.

All routines are thin, deterministic wrappers over LAPACK (through numpy and
scipy) that add input checking, descending ordering, and a canonical phase
for singular/eigen vectors.  The phase convention is: in every column, the
first entry of largest magnitude is real and non-negative.  It makes the
factorizations reproducible and lets one real per column be dropped when an
equalizer is sent over the bus (see :mod:`ezfsim.busnet`).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ContractViolation, SingularGram

HERMITIAN_RTOL = 1e-12
PD_RTOL = 1e-12

__all__ = [
    "EigDecomposition",
    "SVD",
    "as_complex_matrix",
    "canonical_phase",
    "hermitian_eig",
    "hermitize",
    "hpd_solve",
    "is_hermitian",
    "pinv",
    "svd",
]


class EigDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class SVD(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolation(f"{name} has non-finite entries")
    return a


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = np.linalg.norm(a)
    return bool(np.linalg.norm(a - a.conj().T) <= rtol * scale)


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a^H) / 2`` with an exactly real diagonal."""
    h = 0.5 * (a + a.conj().T)
    idx = np.diag_indices_from(h)
    h[idx] = h[idx].real
    return h


def canonical_phase(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate every column so its first largest-magnitude entry is real >= 0.

    Returns the rotated copy and the unit-modulus factors that were applied
    (column ``j`` was multiplied by ``factors[j]``).  All-zero columns are
    left untouched with factor 1.
    """
    v = np.array(vectors, dtype=complex, copy=True)
    if v.size == 0:
        return v, np.ones(v.shape[1], dtype=complex)
    pivots = np.argmax(np.abs(v), axis=0)
    cols = np.arange(v.shape[1])
    lead = v[pivots, cols]
    mag = np.abs(lead)
    factors = np.ones(v.shape[1], dtype=complex)
    nz = mag > 0
    factors[nz] = lead[nz].conj() / mag[nz]
    v *= factors
    v[pivots[nz], cols[nz]] = mag[nz]
    return v, factors


def hermitian_eig(a) -> EigDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Raises
    ------
    ContractViolation
        If ``a`` is not square or not Hermitian within a relative tolerance
        of 1e-12.
    """
    a = as_complex_matrix(a)
    if a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ContractViolation(f"expected a non-empty square matrix, got {a.shape}")
    if not is_hermitian(a):
        raise ContractViolation("matrix is not Hermitian")
    w, v = np.linalg.eigh(a)
    # eigh is ascending; stable re-sort keeps LAPACK order inside ties
    order = np.argsort(-w, kind="stable")
    v, _ = canonical_phase(v[:, order])
    return EigDecomposition(w[order], v)


def svd(a) -> SVD:
    """Full SVD ``a = u @ diag(s) @ v^H`` with canonical phases on ``u``.

    The columns of ``v`` paired with a singular value are rotated by the
    same factor as their ``u`` partner so the product is unchanged; the
    remaining null-space columns of ``v`` get their own canonical phase.
    """
    a = as_complex_matrix(a)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    v = vh.conj().T
    u, factors = canonical_phase(u)
    r = s.size
    v[:, :r] *= factors[:r]
    if v.shape[1] > r:
        v[:, r:], _ = canonical_phase(v[:, r:])
    return SVD(u, s, v)


def hpd_solve(g, b) -> np.ndarray:
    """Solve ``g @ x = b`` for a Hermitian positive-definite ``g``.

    Positive definiteness is checked against a trace-relative threshold,
    ``lambda_min > 1e-12 * trace(g) / d``, so the test is independent of the
    power scale of the channel.

    Raises
    ------
    SingularGram
        If ``g`` fails the positive-definiteness check.
    """
    g = as_complex_matrix(g, "Gram matrix")
    b = np.asarray(b, dtype=complex)
    d = g.shape[0]
    if g.shape != (d, d) or d < 1:
        raise ContractViolation(f"expected a square Gram matrix, got {g.shape}")
    if b.shape[0] != d:
        raise ContractViolation(f"right-hand side has {b.shape[0]} rows, expected {d}")
    if not is_hermitian(g):
        raise ContractViolation("Gram matrix is not Hermitian")
    trace = float(np.trace(g).real)
    lam_min = float(np.linalg.eigvalsh(g)[0])
    if not trace > 0 or lam_min <= PD_RTOL * trace / d:
        raise SingularGram(
            f"Gram matrix not positive definite (lambda_min={lam_min:.3e}, trace={trace:.3e})"
        )
    factor = scipy.linalg.cho_factor(g, lower=False, check_finite=False)
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def pinv(a, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff.

    Singular values at or below ``tol * s_max`` are treated as zero.
    """
    a = as_complex_matrix(a)
    if tol < 0:
        raise ContractViolation("tol must be non-negative")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0:
        return np.zeros(a.shape[::-1], dtype=complex)
    keep = s > tol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * s_inv) @ u.conj().T
