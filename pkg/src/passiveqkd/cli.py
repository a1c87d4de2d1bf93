"""Command-line front end.

Four subcommands: ``rate`` (loss sweep with per-point pump optimization,
CSV or JSON on stdout), ``simulate`` (one seeded session, report JSON plus
transcript log on disk), ``epsilon`` (reassignment solve and seed budget
table for given counts and rates), and ``optimize-mu``.

Parameter resolution order: built-in defaults, then a config file (the
``--params`` flag, falling back to the ``PASSIVEQKD_PARAMS`` environment
variable), then individual flags.  All output is locale-independent and
byte-stable for fixed inputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .optimize import optimize_mu, sweep_loss
from .rates import (
    binary_entropy,
    passive_final_key_length,
    reassignment_demand,
    solve_epsilon,
)
from .session import run_session
from .types import (
    CSV_COLUMNS,
    HashFamily,
    ParameterError,
    ProtocolParams,
    make_error_rates,
)

__all__ = ["main"]

_PARAMS_ENV = "PASSIVEQKD_PARAMS"

# (flag, ProtocolParams field, converter) for every overridable parameter
_PARAM_FLAGS = [
    ("--dark-count-prob", "dark_count_prob", float),
    ("--detector-efficiency", "detector_efficiency", float),
    ("--misalignment-error", "misalignment_error", float),
    ("--ec-efficiency", "ec_efficiency", float),
    ("--mean-pair-number", "mean_pair_number", float),
    ("--basis-reconciliation-factor", "basis_reconciliation_factor", float),
    ("--phase-est-failure-prob", "phase_est_failure_prob", float),
    ("--block-size", "block_size", int),
    ("--extractor-failure-prob", "extractor_failure_prob", float),
    ("--channel-loss-db", "channel_loss_db", float),
]


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--params", metavar="FILE", help="parameter file (JSON or key=value)")
    for flag, field_name, conv in _PARAM_FLAGS:
        sub.add_argument(flag, dest=field_name, type=conv, metavar="V")
    sub.add_argument(
        "--hash-family",
        "--family",
        dest="hash_family",
        metavar="NAME",
        help="seed hash family (f1r-f2r, f3r-f4r, toeplitz, trevisan, tssr, eps-almost-pairwise)",
    )


def _load_params(args: argparse.Namespace) -> ProtocolParams:
    path = args.params or os.environ.get(_PARAMS_ENV)
    params = ProtocolParams.from_file(path) if path else ProtocolParams()
    overrides = {}
    for _, field_name, _ in _PARAM_FLAGS:
        value = getattr(args, field_name)
        if value is not None:
            overrides[field_name] = value
    if args.hash_family is not None:
        overrides["hash_family"] = HashFamily.parse(args.hash_family)
    return params.replace(**overrides) if overrides else params


def _parse_loss_range(text: str, parser: argparse.ArgumentParser) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        parser.error(f"--loss expects start:end:step, got {text!r}")
    try:
        start, end, step = (float(p) for p in parts)
    except ValueError:
        parser.error(f"--loss expects numeric start:end:step, got {text!r}")
    if start < 0.0 or step <= 0.0 or end <= start:
        parser.error("--loss requires start >= 0, step > 0, end > start")
    count = int((end - start) / step + 1e-9) + 1
    return [start + i * step for i in range(count)]


def _cmd_rate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    params = _load_params(args)
    loss_points = _parse_loss_range(args.loss, parser)
    rows = sweep_loss(params, loss_points)
    if args.json:
        json.dump([r.to_json_dict() for r in rows], sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())
    return 0


def _cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    params = _load_params(args)
    result = run_session(params, args.pulses, args.seed)
    report_path = Path(f"{args.out}.report.json")
    report_path.write_text(json.dumps(result.to_json_dict(), indent=2) + "\n")
    Path(f"{args.out}.transcript.log").write_text(result.transcript_log())
    t = result.tally
    print(
        f"status={result.status} n_r={t.n_r} n_s={t.n_s} m_x={t.m_x} m_z={t.m_z} "
        f"epsilon={result.epsilon} k_final_bits={len(result.k_final)}"
    )
    return 0 if len(result.k_final) > 0 else 3


def _cmd_epsilon(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.n_s > args.n_r:
        raise ParameterError("n_s cannot exceed n_r")
    rates = make_error_rates(args.e_b_tilde, args.e_b_tilde, args.e_p_tilde, args.e_p_tilde)
    families = (
        [HashFamily.parse(args.hash_family)] if args.hash_family is not None else list(HashFamily)
    )
    supply_coeff = 1.0 - binary_entropy(rates.e_p_tilde)
    for family in families:
        eps = solve_epsilon(args.n_r, args.n_s, rates, args.ec_efficiency, family)
        n_f = max(0.0, passive_final_key_length(args.n_s, eps, rates, args.ec_efficiency))
        supply = (args.n_r - args.n_s + eps) * supply_coeff
        demand = reassignment_demand(family, args.n_s - eps, n_f)
        print(
            f"family={family.value} epsilon={eps} "
            f"seed_supply={supply!r} seed_demand={float(demand)!r}"
        )
    return 0


def _cmd_optimize_mu(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    params = _load_params(args)
    parts = args.mu_range.split(":")
    if len(parts) != 2:
        parser.error(f"--mu-range expects lo:hi, got {args.mu_range!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        parser.error(f"--mu-range expects numeric lo:hi, got {args.mu_range!r}")
    best = optimize_mu(params, (lo, hi))
    print(f"mu_opt={best.mu!r} rate_per_pulse={best.rate!r}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="passiveqkd",
        description="Certified key rates and simulated sessions for passively seeded entanglement QKD.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_rate = subs.add_parser("rate", help="loss sweep with per-point pump optimization")
    _add_param_flags(p_rate)
    p_rate.add_argument("--loss", default="0:40:2", metavar="S:E:T", help="loss sweep in dB, start:end:step inclusive")
    p_rate.add_argument("--json", action="store_true", help="emit a JSON array instead of CSV")
    p_rate.set_defaults(handler=_cmd_rate)

    p_sim = subs.add_parser("simulate", help="run one seeded session and write report files")
    _add_param_flags(p_sim)
    p_sim.add_argument("--pulses", type=int, default=1_000_000, help="pump windows to sample")
    p_sim.add_argument("--seed", type=int, default=0, help="session RNG seed")
    p_sim.add_argument("--out", default="session", metavar="PREFIX", help="output prefix for .report.json and .transcript.log")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_eps = subs.add_parser("epsilon", help="reassignment solve and seed budget table")
    p_eps.add_argument("--n-r", type=int, required=True, dest="n_r")
    p_eps.add_argument("--n-s", type=int, required=True, dest="n_s")
    p_eps.add_argument("--e-b-tilde", type=float, required=True, dest="e_b_tilde")
    p_eps.add_argument("--e-p-tilde", type=float, required=True, dest="e_p_tilde")
    p_eps.add_argument("--ec-efficiency", type=float, default=1.15, dest="ec_efficiency")
    p_eps.add_argument("--hash-family", "--family", dest="hash_family", metavar="NAME")
    p_eps.set_defaults(handler=_cmd_epsilon)

    p_opt = subs.add_parser("optimize-mu", help="best mean pair number at the configured loss")
    _add_param_flags(p_opt)
    p_opt.add_argument("--mu-range", default="1e-4:1", metavar="LO:HI")
    p_opt.set_defaults(handler=_cmd_optimize_mu)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, parser)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
