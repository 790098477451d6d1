"""Command-line experiment runner.

Every subcommand reads a JSON config (``--config``) and writes one CSV or
JSON artifact.  Outputs carry a metadata header with the config hash, seed
and precision; JSON outputs also carry a timestamp, which is the only field
that differs between repeated runs.

Exit codes: 0 success, 2 config error, 3 certificate failure,
4 horizon / precision violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import jsonschema
import mpmath

from . import __version__
from .arcs import ArcSet, format_rational, frac
from .config import ConfigError, ExperimentConfig, canonical_json
from .constructions import (BlockSumError, BudgetError, InfeasibleScheduleError, MeasureMismatchError,
                            almost_invariant_set, generic_small_sweep, invisible_target,
                            rearrangement_map, slow_sweep_complement, verify_certificate,
                            visible_target_dyadic)
from .covering import covering_profile, rate_report
from .maps import NotInvertibleError
from .random_covering import classify_lengths, coverage_probability, shepp_partial_sums
from .rates import HorizonError
from .schemas import OUTPUT_SCHEMAS
from .targets import hits, orbit_rows, scaled_distance_rows, tail_ball_union, tail_preimage_union

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_HORIZON = 0, 2, 3, 4


class CertificateFailure(Exception):
    pass


# --- output -------------------------------------------------------------------


def _meta(command: str, cfg: ExperimentConfig, timestamp: bool = True) -> dict:
    meta = {"command": command, "config_hash": cfg.config_hash, "seed": cfg.seed,
            "precision": cfg.precision, "version": __version__}
    if timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def _destination(args, cfg: ExperimentConfig):
    return args.out or cfg.get("output")


def _emit(text: str, dest) -> None:
    if dest in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(dest).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {dest}: {exc.strerror}") from None


def write_json(args, cfg, command: str, key: str, payload: dict, schema: str | None = None) -> dict:
    doc = {"meta": _meta(command, cfg), key: payload}
    jsonschema.validate(doc, OUTPUT_SCHEMAS[schema or command])
    _emit(json.dumps(doc, indent=1) + "\n", _destination(args, cfg))
    return doc


def write_csv(args, cfg, command: str, header, rows) -> None:
    buf = io.StringIO()
    buf.write("# meta " + canonical_json(_meta(command, cfg, timestamp=False)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _emit(buf.getvalue(), _destination(args, cfg))


def dec(v: Fraction) -> str:
    return f"{float(v):.12f}"


# --- subcommands -------------------------------------------------------------


def cmd_orbit(args, cfg):
    tau, x, n = cfg.circle_map(), cfg.point("x"), cfg.horizon
    rows = ([k, dec(y), format_rational(y)] for k, y in enumerate(tau.orbit(x, n), start=1))
    write_csv(args, cfg, "orbit", ["n", "point", "point_exact"], rows)


def cmd_hits(args, cfg):
    tau, n, targets = cfg.circle_map(), cfg.horizon, cfg.targets()
    targets.check_horizon(n)
    if cfg.get("sample") is None:
        rows = ([k, int(hit), dec(y), format_rational(y)]
                for k, hit, y in orbit_rows(tau, cfg.point("x"), targets, n))
        write_csv(args, cfg, "hits", ["n", "hit", "orbit_point", "orbit_point_exact"], rows)
        return
    records = []
    for x in cfg.sample():
        rec = hits(tau, x, targets, n).to_json()
        rec["x"] = format_rational(x)
        records.append(rec)
    write_json(args, cfg, "hits", "result", {"records": records})


def cmd_scaled_distance(args, cfg):
    tau, n = cfg.circle_map(), cfg.horizon
    rows = ([k, dec(v), format_rational(v)]
            for k, v in scaled_distance_rows(tau, cfg.point("x"), cfg.point("y"), n))
    write_csv(args, cfg, "scaled-distance", ["n", "n_d", "n_d_exact"], rows)


def cmd_cover_profile(args, cfg):
    tau, n = cfg.circle_map(), cfg.horizon
    prof = covering_profile(tau, cfg.point("x"), n)
    rows = ([k, format_rational(r), dec(r), dec(k * r)] for k, r in enumerate(prof.values, start=1))
    write_csv(args, cfg, "cover-profile", ["n", "r_n_exact", "r_n", "n_r_n"], rows)
    if args.report:
        report = rate_report(prof, int(cfg.get("n_min", 1)))
        doc = {"meta": _meta("cover-profile", cfg), "result": report}
        jsonschema.validate(doc, OUTPUT_SCHEMAS["cover-profile-report"])
        _emit(json.dumps(doc, indent=1) + "\n", args.report)


def cmd_tail_union(args, cfg):
    lo, hi = cfg.horizon, int(cfg.require("M"))
    tau = cfg.circle_map(horizon=hi)
    if cfg.get("targets") is not None:
        s, m = tail_preimage_union(tau, cfg.targets(), lo, hi)
    else:
        s, m = tail_ball_union(tau, cfg.point("x"), cfg.rates("radii"), lo, hi)
    out = {"N": lo, "M": hi, "measure": format_rational(m), "threshold_passed": None, "set": s.to_json()}
    if cfg.get("threshold") is not None:
        t = frac(cfg.get("threshold"))
        out["threshold"] = format_rational(t)
        out["threshold_passed"] = bool(m > t)
    write_json(args, cfg, "tail-union", "result", out)


def _certificate(args, cfg, command, cert):
    write_json(args, cfg, command, "certificate", cert.to_json())
    if not cert.passes:
        raise CertificateFailure(f"{command}: {cert.first_failure()}")


def cmd_construct_invisible(args, cfg):
    cert = invisible_target(cfg.rates(), cfg.horizon, frac(cfg.get("c", "1/2")))
    _certificate(args, cfg, "construct-invisible", cert)


def cmd_construct_visible(args, cfg):
    kwargs = {}
    if cfg.get("max_index") is not None:
        kwargs["max_index"] = int(cfg.get("max_index"))
    cert = visible_target_dyadic(cfg.rates(), int(cfg.require("blocks")), **kwargs)
    _certificate(args, cfg, "construct-visible", cert)


def cmd_construct_sweep(args, cfg):
    if cfg.get("delta") is not None:
        cert = almost_invariant_set(int(cfg.require("n")), frac(cfg.get("delta")),
                                    frac(cfg.require("epsilon")))
    elif cfg.get("seeds") is not None:
        cert = generic_small_sweep(cfg.arcset_list("seeds"), cfg.circle_map(horizon=1),
                                   frac(cfg.require("epsilon")))
    else:
        cert = slow_sweep_complement(cfg.rates(), cfg.horizon, frac(cfg.get("c", "1/2")))
    _certificate(args, cfg, "construct-sweep", cert)


def cmd_rearrange(args, cfg):
    sources, targets = cfg.arcset_list("sources"), cfg.arcset_list("target_sets")
    sigma = rearrangement_map(sources, targets)
    checks = [{"level": k, "measure": format_rational(b.measure()), "image_matches": sigma.image_set(b) == c}
              for k, (b, c) in enumerate(zip(sources, targets), start=1)]
    write_json(args, cfg, "rearrange", "result",
               {"rearrangement": sigma.to_json()["rearrangement"], "checks": checks})
    bad = next((c for c in checks if not c["image_matches"]), None)
    if bad:
        raise CertificateFailure(f"level {bad['level']}: sigma(B) differs from C")


def cmd_shepp(args, cfg):
    lengths = cfg.lengths()
    est = coverage_probability(int(cfg.require("seed")), lengths, cfg.horizon, int(cfg.require("trials")))
    out = est.to_json()
    out["classification"] = classify_lengths(lengths)
    out["N"] = cfg.horizon
    out["lengths"] = lengths.to_json()
    write_json(args, cfg, "shepp", "result", out)


def cmd_shepp_criterion(args, cfg):
    dps = cfg.precision["dps"]
    sums = shepp_partial_sums(cfg.lengths(), cfg.horizon, dps=dps)
    digits = dps - 5
    rows = ([n, f"{float(s):.12f}", mpmath.nstr(s, digits)] for n, s in enumerate(sums, start=1))
    write_csv(args, cfg, "shepp-criterion", ["n", "partial_sum", "partial_sum_hp"], rows)


def cmd_verify(args, cfg):
    try:
        data = json.loads(Path(args.certificate).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read certificate {args.certificate}: {exc}") from None
    cert = data.get("certificate", data) if isinstance(data, dict) else None
    if not isinstance(cert, dict):
        raise ConfigError("certificate file must hold a JSON object")
    try:
        res = verify_certificate(cert)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_json(args, cfg, "verify", "result", res.to_json())
    if not res.ok:
        raise CertificateFailure(f"verification failed: {res.first_failure}")


COMMANDS = {
    "orbit": cmd_orbit,
    "hits": cmd_hits,
    "scaled-distance": cmd_scaled_distance,
    "cover-profile": cmd_cover_profile,
    "tail-union": cmd_tail_union,
    "construct-invisible": cmd_construct_invisible,
    "construct-visible": cmd_construct_visible,
    "construct-sweep": cmd_construct_sweep,
    "rearrange": cmd_rearrange,
    "shepp": cmd_shepp,
    "shepp-criterion": cmd_shepp_criterion,
    "verify": cmd_verify,
}


def _flag_config(args) -> dict:
    """Config built from shepp-style flags, merged over the config file."""
    data = {}
    if args.family:
        data["lengths"] = {"family": args.family}
        if args.c is not None:
            data["lengths"]["c"] = args.c
        if args.table:
            data["lengths"]["table"] = args.table.split(",")
    for key in ("N", "trials", "seed"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    if args.dps is not None:
        data["precision"] = {"dps": args.dps}
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shrinktarget", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "verify":
            p.add_argument("certificate", help="certificate JSON file")
        else:
            p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--out", help="output path (default: config 'output' or stdout)")
        if name == "cover-profile":
            p.add_argument("--report", help="also write the checkpoint JSON here")
        if name in ("shepp", "shepp-criterion"):
            p.add_argument("--family", choices=["c/n", "log n/n", "table"])
            p.add_argument("--c")
            p.add_argument("--table", help="comma-separated lengths p/q")
            p.add_argument("--N", type=int)
            p.add_argument("--dps", type=int)
            if name == "shepp":
                p.add_argument("--trials", type=int)
                p.add_argument("--seed", type=int)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            cfg = ExperimentConfig.from_json({"output": args.out} if args.out else {})
        else:
            data = {}
            if args.config:
                data = ExperimentConfig.load(args.config).to_json()
            if args.command in ("shepp", "shepp-criterion"):
                flags = _flag_config(args)
                if "precision" in flags:
                    flags["precision"] = {**data.get("precision", {}), **flags["precision"]}
                data.update(flags)
            elif not args.config:
                raise ConfigError(f"{args.command} needs --config")
            cfg = ExperimentConfig.from_json(data)
        COMMANDS[args.command](args, cfg)
    except CertificateFailure as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (HorizonError, OverflowError, BlockSumError) as exc:
        print(f"horizon error: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except (ConfigError, InfeasibleScheduleError, BudgetError, MeasureMismatchError,
            NotInvertibleError, jsonschema.ValidationError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
