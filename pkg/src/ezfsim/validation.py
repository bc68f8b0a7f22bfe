"""Seeded invariant suite behind ``ezfsim validate``.

Each check runs over random instances and reports its worst residual
against a fixed tolerance.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .busnet import run_apd, run_centralized, run_dezf
from .channel import ChannelModel, SystemConfig, generate_channels, make_rng
from .fronthaul import BCU_SWEEP, REFERENCE_BASE, USER_SWEEP, analytic_load
from .numerics import hermitian_eig, pinv, svd
from .precoder import build_precoder, effective_channel, ezf_precoder, gram_accumulate

FAULTS = ("skip-q",)

__all__ = ["FAULTS", "PropertyResult", "format_report", "random_complex", "random_config", "run_validation"]


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    instances: int

    def to_dict(self) -> dict:
        return asdict(self)


def random_complex(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    z = rng.standard_normal((m, n, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def random_config(rng: np.random.Generator, max_nt: int = 64, max_users: int = 8,
                  n_r: int = 4, n_streams: int = 2, n_bcu: int | None = None,
                  tau: int | None = None) -> SystemConfig:
    """Pick a valid configuration within the given bounds, with ``M >= L``."""
    while True:
        p = int(n_bcu if n_bcu is not None else rng.choice([1, 2, 4, 8]))
        if max_nt // p < n_streams:
            continue
        m = int(rng.integers(n_streams, max_nt // p + 1))
        k = int(rng.integers(1, max_users + 1))
        if k * n_streams <= p * m:
            t = int(rng.integers(0, 100)) if tau is None else tau
            return SystemConfig(p * m, p, m, k, n_r, n_streams, tau=t)


def _diag_residual(c: np.ndarray, w: np.ndarray, q: np.ndarray) -> float:
    target = 1.0 / np.sqrt(q)
    a = c @ w
    return float(np.abs(a - np.diag(target)).max() / target.max())


def run_validation(seed: int = 0, instances: int = 25, fault: str | None = None) -> list[PropertyResult]:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    rng = make_rng(seed, 0xA11)
    results: list[PropertyResult] = []

    def add(name, worst, tol, n):
        results.append(PropertyResult(name, bool(worst <= tol), float(worst), tol, n))

    # numerics
    svd_err = orth_err = eig_err = mp_err = 0.0
    deterministic = True
    for _ in range(instances):
        m, n = (int(x) for x in rng.integers(1, 33, size=2))
        a = random_complex(rng, m, n)
        u, s, v = svd(a)
        sig = np.zeros((m, n))
        sig[:s.size, :s.size] = np.diag(s)
        svd_err = max(svd_err, np.linalg.norm(u @ sig @ v.conj().T - a) / np.linalg.norm(a))
        orth_err = max(orth_err, np.abs(u.conj().T @ u - np.eye(m)).max(),
                       np.abs(v.conj().T @ v - np.eye(n)).max())
        g = a @ a.conj().T
        g = 0.5 * (g + g.conj().T)
        vals, vecs = hermitian_eig(g)
        eig_err = max(eig_err, np.abs(g @ vecs - vecs * vals).max() / (np.linalg.norm(g, 2) + 1))
        again = hermitian_eig(g)
        deterministic &= bool(np.array_equal(again.vectors, vecs) and np.array_equal(again.values, vals))
        x = pinv(a)
        scale = np.linalg.norm(a, 2) + 1
        mp_err = max(mp_err, max(
            np.abs(a @ x @ a - a).max(),
            np.abs(x @ a @ x - x).max(),
            np.abs((a @ x).conj().T - a @ x).max(),
            np.abs((x @ a).conj().T - x @ a).max(),
        ) / scale)
    add("svd round-trip (relative Frobenius)", svd_err, 1e-9, instances)
    add("svd factors unitary", orth_err, 1e-10, instances)
    add("hermitian_eig residual", eig_err, 1e-9, instances)
    add("phase convention deterministic", 0.0 if deterministic else 1.0, 0.0, instances)
    add("pinv Moore-Penrose conditions", mp_err, 1e-8, instances)

    # precoders
    diag_err = unit_err = route_err = dezf_err = apd1_err = 0.0
    for i in range(instances):
        cfg = random_config(rng)
        ch = generate_channels(cfg, ChannelModel(seed=seed), rng=make_rng(seed, 0xC4, i))
        for scheme in ("CEN", "APD", "DEZF"):
            pre, eq = build_precoder(ch, scheme)
            eff = effective_channel(ch, eq)
            if fault == "skip-q":
                pre = ezf_precoder(eff, gram_accumulate(eff), scheme, normalize=False)
            diag_err = max(diag_err, _diag_residual(eff.c, pre.w, pre.q))
            unit_err = max(unit_err, np.abs(np.linalg.norm(pre.w, axis=0) - 1).max())
            if scheme == "CEN":
                c_hat = pinv(eff.c)
                ref = c_hat / np.linalg.norm(c_hat, axis=0)
                route_err = max(route_err, np.abs(pre.w - ref).max())
                cen = pre.w
        dezf, _ = build_precoder(ch, "DEZF")
        dezf_err = max(dezf_err, np.abs(dezf.w - cen).max())
        one = cfg.replace(n_bcu=1, m=cfg.n_t)
        ch1 = generate_channels(one, rng=make_rng(seed, 0xC5, i))
        a1, _ = build_precoder(ch1, "APD")
        c1, _ = build_precoder(ch1, "CEN")
        apd1_err = max(apd1_err, np.abs(a1.w - c1.w).max())
    add("diagonalization C·W = Q^-1/2", diag_err, 1e-9, 3 * instances)
    add("unit-norm precoder columns", unit_err, 1e-12, 3 * instances)
    add("block route = pseudo-inverse route", route_err, 1e-9, instances)
    add("DEZF = centralized", dezf_err, 1e-10, instances)
    add("APD with P=1 = centralized", apd1_err, 1e-9, instances)

    # protocols vs closed forms
    cfgs = [REFERENCE_BASE.replace(**pt) for pt in USER_SWEEP + BCU_SWEEP]
    cfgs += [random_config(rng) for _ in range(instances)]
    ledger_diff = 0
    bit_identical = True
    for i, cfg in enumerate(cfgs):
        ch = generate_channels(cfg, rng=make_rng(seed, 0xB5, i))
        apd = run_apd(ch)
        ledger_diff = max(ledger_diff, abs(apd.ledger.total - analytic_load("APD", cfg)),
                          abs(run_dezf(ch).ledger.total - analytic_load("DEZF", cfg)),
                          abs(run_centralized(ch).ledger.total - analytic_load("CEN", cfg)))
        direct, _ = build_precoder(ch, "APD")
        bit_identical &= bool(np.array_equal(direct.w, apd.precoder.w))
    add("ledger total = closed-form load (integer diff)", ledger_diff, 0, len(cfgs))
    add("APD protocol = direct pipeline (bitwise)", 0.0 if bit_identical else 1.0, 0.0, len(cfgs))
    return results


def format_report(results: list[PropertyResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name:<{width}}  worst={r.worst:.3e}  tol={r.tolerance:.0e}  n={r.instances}")
    return "\n".join(lines)

