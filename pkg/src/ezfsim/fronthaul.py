"""Closed-form fronthaul loads and the relative gain over centralized EZF.

Loads are integer counts of real scalars per coherence block of ``tau``
symbols:

* centralized: ``2 tau N_T`` (precoded antenna samples),
* APD: ``P K + (2 N_R - 1) L_tot + P L_tot^2 + 2 tau L_tot``,
* DEZF (fusion node): ``(P + 1)(K N_R^2 + L_tot^2) + 2 tau L_tot``; the
  peer-broadcast variant drops the ``+1``.

The DEZF expression is the message breakdown of :func:`ezfsim.busnet.run_dezf`
and reproduces the known DEZF gains at all seven points of :data:`USER_SWEEP`
and :data:`BCU_SWEEP`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from .channel import SystemConfig
from .errors import ConfigError

__all__ = [
    "CSV_COLUMNS",
    "BCU_SWEEP",
    "REFERENCE_BASE",
    "USER_SWEEP",
    "LoadReport",
    "analytic_load",
    "format_percent",
    "gain",
    "reference_tables",
    "reports_to_csv",
    "table_report",
]

CSV_COLUMNS = ("scheme", "K", "P", "M", "L", "N_R", "tau", "eta", "zeta", "gain_percent")

REFERENCE_BASE = SystemConfig(n_t=256, n_bcu=4, m=64, n_users=16, n_r=4, n_streams=2, tau=65)
USER_SWEEP = [{"n_users": k} for k in (16, 24, 32, 36)]
BCU_SWEEP = [{"n_bcu": p, "m": m} for p, m in ((4, 64), (8, 32), (16, 16))]


def analytic_load(scheme: str, cfg: SystemConfig, dezf_topology: str = "fusion") -> int:
    p, k, n_r, l_tot, tau = cfg.n_bcu, cfg.n_users, cfg.n_r, cfg.l_tot, cfg.tau
    if scheme == "CEN":
        return 2 * tau * cfg.n_t
    if scheme == "APD":
        return p * k + 2 * l_tot * n_r - l_tot + p * l_tot**2 + 2 * tau * l_tot
    if scheme == "DEZF":
        fan = {"fusion": p + 1, "peer": p}.get(dezf_topology)
        if fan is None:
            raise ValueError(f"unknown DEZF topology {dezf_topology!r}")
        return fan * (k * n_r**2 + l_tot**2) + 2 * tau * l_tot
    raise ValueError(f"no closed-form load for scheme {scheme!r}")


def gain(zeta: int, zeta_cen: int) -> float:
    """Relative load reduction ``1 - zeta / zeta_cen``; negative if worse."""
    if zeta_cen <= 0:
        raise ValueError("centralized load must be positive")
    return float(1 - Fraction(zeta, zeta_cen))


def format_percent(zeta: int, zeta_cen: int) -> str:
    """Gain in percent, rounded half away from zero to two decimals."""
    exact = (1 - Fraction(zeta, zeta_cen)) * 100
    value = Decimal(exact.numerator) / Decimal(exact.denominator)
    return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class LoadReport:
    scheme: str
    cfg: SystemConfig | None
    zeta: int | None
    gain: float | None
    gain_percent: str | None
    eta: float | None
    error: str | None = None

    def row(self) -> dict:
        c = self.cfg
        return {
            "scheme": self.scheme,
            "K": c.n_users if c else None,
            "P": c.n_bcu if c else None,
            "M": c.m if c else None,
            "L": c.n_streams if c else None,
            "N_R": c.n_r if c else None,
            "tau": c.tau if c else None,
            "eta": self.eta,
            "zeta": self.zeta,
            "gain_percent": self.gain_percent,
        }


def _report(scheme: str, cfg: SystemConfig) -> LoadReport:
    zeta = analytic_load(scheme, cfg)
    zeta_cen = analytic_load("CEN", cfg)
    return LoadReport(scheme, cfg, zeta, gain(zeta, zeta_cen), format_percent(zeta, zeta_cen), cfg.eta)


def table_report(base: SystemConfig, sweep: list[dict],
                 schemes: tuple[str, ...] = ("APD", "DEZF")) -> list[list[LoadReport]]:
    """One list of per-scheme reports for every sweep point.

    Each sweep point is a dict of :class:`SystemConfig` field overrides.
    ``N_T`` stays at the base value unless the point sets it, so a point
    with ``P * M != N_T`` is rejected.  An invalid point yields error
    reports for that point only.
    """
    out = []
    for point in sweep:
        try:
            cfg = base.replace(**{"n_t": base.n_t, **point})
        except (ConfigError, TypeError) as exc:
            out.append([LoadReport(s, None, None, None, None, None, str(exc)) for s in schemes])
            continue
        out.append([_report(s, cfg) for s in schemes])
    return out


def reference_tables() -> dict[str, list[list[LoadReport]]]:
    """The two reference sweeps: varying ``K`` and varying ``(P, M)``."""
    return {
        "table1": table_report(REFERENCE_BASE, USER_SWEEP),
        "table2": table_report(REFERENCE_BASE, BCU_SWEEP),
    }


def reports_to_csv(rows: list[LoadReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        if r.error is None:
            writer.writerow(r.row())
    return buf.getvalue()
