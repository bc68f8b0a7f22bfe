"""Command-line front end.

Subcommands: ``fronthaul`` (load tables), ``ber`` (Monte Carlo curves),
``ledger`` (one protocol run, message accounting as JSON) and ``validate``
(invariant suite).  Settings resolve as preset, then ``--config`` file, then
flags.  Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 property failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import yaml

from .busnet import run_apd, run_centralized, run_dezf
from .channel import RNG_ALGORITHM, ChannelModel, SystemConfig, generate_channels
from .errors import ConfigError, SingularGram
from .fronthaul import (
    CSV_COLUMNS,
    BCU_SWEEP,
    REFERENCE_BASE,
    USER_SWEEP,
    reference_tables,
    reports_to_csv,
    table_report,
)
from .mcsim import NumericalFailure, ber_sweep
from .precoder import SCHEMES
from .validation import FAULTS, format_report, run_validation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PROPERTY = 0, 2, 3, 4

ALIASES = {"N_T": "n_t", "P": "n_bcu", "M": "m", "K": "n_users", "N_R": "n_r", "L": "n_streams"}
DEFAULT_POWER_DB = [-9.0, -6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0]
_FIG_BASE = {"n_t": 256, "n_bcu": 4, "m": 64, "n_users": 16, "n_r": 4, "n_streams": 2, "tau": 65}

PRESETS = {
    "table1": {"system": REFERENCE_BASE.to_dict(), "sweep": USER_SWEEP},
    "table2": {"system": REFERENCE_BASE.to_dict(), "sweep": BCU_SWEEP},
    "fig3": {"system": dict(_FIG_BASE), "cases": [{"n_bcu": 4, "m": 64}, {"n_bcu": 8, "m": 32}]},
    "fig4": {"system": dict(_FIG_BASE), "cases": [{"n_users": 32}, {"n_users": 64}]},
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _canon(d: dict) -> dict:
    return {ALIASES.get(k, k): v for k, v in d.items()}


def _scale_point(point: dict, scale: float) -> dict:
    out = dict(point)
    for key in ("m", "n_users"):
        if key in out:
            out[key] = max(1, int(round(out[key] * scale)))
    if "n_bcu" in out or "m" in out:
        out.pop("n_t", None)
    return out


def _apply_scale(settings: dict, scale: float) -> dict:
    settings = dict(settings)
    system = _scale_point(settings.get("system", {}), scale)
    if "m" in system and "n_bcu" in system:
        system["n_t"] = system["n_bcu"] * system["m"]
    settings["system"] = system
    for key in ("cases", "sweep"):
        if isinstance(settings.get(key), list):
            settings[key] = [_scale_point(p, scale) for p in settings[key]]
    return settings


def load_settings(args) -> dict:
    """Merge preset, config file and scale into one settings dict."""
    settings: dict = {}
    if getattr(args, "preset", None):
        preset = PRESETS[args.preset]
        settings = {k: (list(v) if isinstance(v, list) else dict(v)) for k, v in preset.items()}
    if getattr(args, "config", None):
        try:
            loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a mapping")
        for key, value in loaded.items():
            if key == "system":
                settings["system"] = {**settings.get("system", {}), **_canon(value)}
            else:
                settings[key] = value
    if getattr(args, "scale", None) is not None:
        settings = _apply_scale(settings, args.scale)
    return settings


def _system(settings: dict) -> SystemConfig:
    system = _canon(settings.get("system", {}))
    if not system:
        raise CliError("no system configuration given (use --preset or --config)")
    if "n_t" not in system and "n_bcu" in system and "m" in system:
        system["n_t"] = system["n_bcu"] * system["m"]
    try:
        return SystemConfig(**system)
    except TypeError as exc:
        raise CliError(f"bad system section: {exc}") from exc


def _sweep_points(raw) -> list[dict]:
    if raw is None:
        return [{}]
    if isinstance(raw, dict):
        raw = _canon(raw)
        keys = list(raw)
        lengths = {len(v) for v in raw.values()}
        if len(lengths) != 1:
            raise CliError("sweep lists must have equal lengths")
        return [{k: raw[k][i] for k in keys} for i in range(lengths.pop())]
    return [_canon(p) for p in raw]


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _row_json(label: str, report) -> dict:
    row = report.row()
    row["gain_percent"] = float(row["gain_percent"])
    return {"table": label, **row}


def cmd_fronthaul(args) -> int:
    if args.reference_tables:
        tables = reference_tables()
        settings = {"reference_tables": True}
    else:
        settings = load_settings(args)
        base = _system(settings)
        tables = {"sweep": table_report(base, _sweep_points(settings.get("sweep")))}
        settings = {"system": base.to_dict(), "sweep": _sweep_points(settings.get("sweep"))}
    flat, errors = [], []
    for label, points in tables.items():
        for reports in points:
            for r in reports:
                if r.error:
                    errors.append(r.error)
                else:
                    flat.append((label, r))
    if args.format == "json":
        doc = {"seed": args.seed, "config": settings, "columns": ["table", *CSV_COLUMNS],
               "rows": [_row_json(label, r) for label, r in flat], "errors": sorted(set(errors))}
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _write(reports_to_csv([r for _, r in flat]), args.out)
    if errors:
        for e in sorted(set(errors)):
            print(f"error: invalid sweep point: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _case_label(cfg: SystemConfig) -> str:
    return f"P{cfg.n_bcu}_M{cfg.m}_K{cfg.n_users}"


def cmd_ber(args) -> int:
    settings = load_settings(args)
    ber_opts = dict(settings.get("ber", {}))
    base = _system(settings)
    cases = [base.replace(**_canon(c)) for c in settings.get("cases", [{}])]
    schemes = tuple(args.scheme or ber_opts.get("schemes", SCHEMES))
    for s in schemes:
        if s not in SCHEMES:
            raise CliError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    power_db = args.power_db or ber_opts.get("power_db", DEFAULT_POWER_DB)
    trials = args.trials if args.trials is not None else int(ber_opts.get("trials", 50))
    if trials < 1:
        raise CliError("trials must be >= 1")
    seed = args.seed if args.seed is not None else int(settings.get("seed", 0))
    model_opts = dict(settings.get("model", {}))
    if args.model:
        model_opts["kind"] = args.model
    if args.spread_db is not None:
        model_opts["spread_db"] = args.spread_db
    model = ChannelModel(kind=model_opts.get("kind", "iid-rayleigh"),
                         spread_db=float(model_opts.get("spread_db", 0.0)), seed=seed)

    curves = []
    for cfg in cases:
        try:
            curves.append((cfg, ber_sweep(cfg, schemes, power_db, model, trials, seed,
                                          workers=args.workers, noiseless=args.noiseless)))
        except NumericalFailure as exc:
            raise CliError(str(exc), EXIT_NUMERIC) from exc
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    meta = {
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "preset": args.preset,
        "scale": args.scale,
        "model": {"kind": model.kind, "spread_db": model.spread_db},
        "schemes": list(schemes),
        "power_db": [float(p) for p in power_db],
        "trials": trials,
        "cases": [{"label": _case_label(cfg), "cfg": cfg.to_dict(), "redraws": c.redraws,
                   "bits_per_point": c.bits} for cfg, c in curves],
    }
    if args.format == "json":
        doc = {"meta": meta, "curves": {_case_label(cfg): _curve_rows(c) for cfg, c in curves}}
        _write(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        paths = [out] if len(curves) == 1 else [
            out.with_name(f"{out.stem}_{_case_label(cfg)}{out.suffix or '.csv'}") for cfg, _ in curves]
        for path, (_, c) in zip(paths, curves):
            path.write_text(c.to_csv())
        for case, path in zip(meta["cases"], paths):
            case["csv"] = path.name
        out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    else:
        for cfg, c in curves:
            if len(curves) > 1:
                sys.stdout.write(f"# {_case_label(cfg)}\n")
            sys.stdout.write(c.to_csv())
        print(json.dumps(meta), file=sys.stderr)
    return EXIT_OK


def _curve_rows(c) -> list[dict]:
    ber, ci = c.ber, c.ci95
    return [{"scheme": s, "power_db": float(p), "ber": float(ber[i, j]), "bits": c.bits,
             "ci95": float(ci[i, j])}
            for i, s in enumerate(c.schemes) for j, p in enumerate(c.power_db)]


def cmd_ledger(args) -> int:
    settings = load_settings(args)
    cfg = _system(settings)
    seed = args.seed if args.seed is not None else int(settings.get("seed", 0))
    ch = generate_channels(cfg, ChannelModel(seed=seed))
    docs = []
    try:
        for scheme in args.scheme or ("CEN", "APD", "DEZF"):
            if scheme == "APD":
                run = run_apd(ch)
            elif scheme == "DEZF":
                run = run_dezf(ch, topology=args.dezf_topology)
            elif scheme == "CEN":
                run = run_centralized(ch)
            else:
                raise CliError(f"no bus protocol for scheme {scheme!r}")
            docs.append({**run.ledger.to_dict(scheme, cfg), "seed": seed})
    except SingularGram as exc:
        raise CliError(str(exc), EXIT_NUMERIC) from exc
    _write(json.dumps(docs[0] if len(docs) == 1 else docs, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = run_validation(seed=seed, instances=args.instances, fault=args.inject_fault)
    if args.format == "json":
        doc = {"seed": seed, "instances": args.instances, "fault": args.inject_fault,
               "passed": all(r.passed for r in results), "properties": [r.to_dict() for r in results]}
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _write(format_report(results) + "\n", args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ezfsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("csv", "json")):
        p.add_argument("--config", metavar="PATH", help="YAML/JSON settings file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--scale", type=float, help="shrink M and K of the preset/config by this factor")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=formats, default=formats[0])

    p = sub.add_parser("fronthaul", help="fronthaul load tables")
    common(p)
    p.add_argument("--paper-tables", dest="reference_tables", action="store_true",
                   help="emit the reference K sweep and (P, M) sweep")
    p.set_defaults(func=cmd_fronthaul)

    p = sub.add_parser("ber", help="Monte Carlo uncoded BER curves")
    common(p)
    p.add_argument("--scheme", action="append", choices=SCHEMES)
    p.add_argument("--power-db", type=float, nargs="+", metavar="DB")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--model", choices=("iid-rayleigh", "bcu-disparity"))
    p.add_argument("--spread-db", type=float)
    p.add_argument("--noiseless", action="store_true", help="zero receiver noise")
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("ledger", help="run a bus protocol and print its message accounting")
    common(p, formats=("json",))
    p.add_argument("--scheme", action="append", choices=("CEN", "APD", "DEZF"))
    p.add_argument("--dezf-topology", choices=("fusion", "peer"), default="fusion")
    p.set_defaults(func=cmd_ledger)

    p = sub.add_parser("validate", help="run the invariant suite")
    p.add_argument("--seed", type=int)
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
