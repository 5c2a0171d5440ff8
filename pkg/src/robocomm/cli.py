"""Command-line entry point: ``robocomm simulate|bench|demo-trade|keygen``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .encoding import pack, sha256

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
SEED_ENV = "ROBOCOMM_SEED"

log = logging.getLogger("robocomm")


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


# simulate -------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    from .swarm_sim import InvalidConfig, Mode, SimConfig, compare, metrics_csv, run, summary_json, aggregate

    values = read_config_file(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    for key in ("runs", "steps", "seed"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    values.setdefault("seed", default_seed())
    try:
        config = SimConfig.from_mapping(values)
    except InvalidConfig as exc:
        raise UsageError(f"invalid simulation config: {exc}") from exc

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.mode == "both":
        result = compare(config, workers=args.workers)
        (out / "metrics_baseline.csv").write_text(metrics_csv(result.baseline))
        (out / "metrics_robocomm.csv").write_text(metrics_csv(result.enabled))
        (out / "summary.json").write_text(summary_json(result.summary))
        print(_comparison_text(result.summary))
        print(f"wrote {out / 'metrics_baseline.csv'}, {out / 'metrics_robocomm.csv'}, {out / 'summary.json'}")
        return EXIT_OK
    mode = Mode(args.mode)
    results = run(replace(config, mode=mode), workers=args.workers)
    csv_path = out / f"metrics_{mode.value}.csv"
    csv_path.write_text(metrics_csv(results))
    summary = {"mode": mode.value, "runs": config.runs, "steps": config.steps, "per_step": aggregate(results)}
    (out / f"summary_{mode.value}.json").write_text(summary_json(summary))
    final = [m.final() for m in results]
    n = max(len(final), 1)
    print(f"{mode.value}: mean deliveries {sum(r.total_deliveries for r in final) / n:.2f}, "
          f"mean stalled {sum(r.stalled for r in final) / n:.2f} at step {config.steps}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def _comparison_text(summary: dict) -> str:
    final, d = summary["final_step"], summary["directional"]
    lines = [f"{summary['runs']} paired runs x {summary['steps']} steps"]
    lines.append(f"{'metric':18}{'baseline':>10}{'robocomm':>10}")
    for name in ("total_deliveries", "stalled", "swarm_energy", "mean_energy"):
        lines.append(f"{name:18}{final['baseline'][name]:>10.3f}{final['robocomm'][name]:>10.3f}")
    lines.append(f"trades: {summary['trades']['count']} ({summary['trades']['units']} units)")
    conf = int(d["confidence"] * 100)
    dd, ds = d["deliveries"], d["stalled"]
    lines.append(
        f"deliveries robocomm >= baseline: {'yes' if dd['holds'] else 'no'} "
        f"(mean paired diff {dd['mean_paired_diff']:+.3f}, {conf}% lower bound {dd['bootstrap_lower_bound']:+.3f})"
    )
    lines.append(
        f"stalled robocomm <= baseline:    {'yes' if ds['holds'] else 'no'} "
        f"(mean paired diff {ds['mean_paired_diff']:+.3f}, {conf}% upper bound {ds['bootstrap_upper_bound']:+.3f})"
    )
    return "\n".join(lines)


# bench ----------------------------------------------------------------------


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import format_report, run_bench

    if args.iterations < 1:
        raise UsageError("--iterations must be >= 1")
    report = run_bench(args.iterations, seed=args.seed if args.seed is not None else default_seed())
    text = json.dumps(report.to_dict(), indent=2) if args.format == "json" else format_report(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


# demo-trade -----------------------------------------------------------------


def cmd_demo_trade(args: argparse.Namespace) -> int:
    from .scenarios import SCENARIOS, UnknownScenario, format_demo, run_demo
    from .trade import TradeError

    if args.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
    seed = args.seed if args.seed is not None else default_seed()
    try:
        result = run_demo(args.scenario, units=args.units, unit_price=args.price, seed=seed)
    except UnknownScenario as exc:
        raise UsageError(str(exc)) from exc
    except TradeError as exc:
        print(f"trade failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(format_demo(result))
    return EXIT_OK if result.matches else EXIT_RUNTIME


# keygen ---------------------------------------------------------------------


def cmd_keygen(args: argparse.Namespace) -> int:
    from .identity import build_did_document, generate_keypair, robot_multiaddr

    if args.seed is not None:
        seed = sha256(pack("robocomm/keygen", args.seed))
    else:
        seed = secrets.token_bytes(32)
    kp = generate_keypair(seed)
    doc = build_did_document(kp.did, kp, robot_multiaddr(kp.public_key, args.host, args.port), now=0)
    out = Path(args.out)
    files = {
        out / f"{args.name}.key": seed.hex() + "\n",
        out / f"{args.name}.did": str(kp.did) + "\n",
        out / f"{args.name}.did.json": doc.to_json() + "\n",
    }
    existing = [p for p in files if p.exists()]
    if existing and not args.force:
        print(f"refusing to overwrite {', '.join(map(str, existing))} (use --force)", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, content in files.items():
            if path.suffix == ".key":
                fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
                with os.fdopen(fd, "w") as fh:
                    fh.write(content)
                os.chmod(path, 0o600)
            else:
                path.write_text(content)
    except OSError as exc:
        print(f"cannot write key files: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(kp.did)
    for path in files:
        print(f"wrote {path}")
    return EXIT_OK


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robocomm",
        description="Robot identity, energy trading and swarm simulation tools.",
        epilog=f"Set {SEED_ENV} to change the default seed (0).",
    )
    parser.add_argument("--log-level", default="WARNING", help="logging level (default: WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the swarm experiment and write CSV/JSON metrics")
    p.add_argument("--mode", choices=("baseline", "robocomm", "both"), default="both",
                   help="which swarm to run (default: both, paired)")
    p.add_argument("--runs", type=int, help="independent runs per mode (default: 100)")
    p.add_argument("--steps", type=int, help="steps per run (default: 50)")
    p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--config", help="key=value file with simulation parameters")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter (repeatable)")
    p.add_argument("--out", default="sim_out", help="output directory (default: sim_out)")
    p.add_argument("--workers", type=int, default=1, help="worker processes for the run sweep (default: 1)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="time signing, verification and DID document generation")
    p.add_argument("--iterations", type=int, default=1000, help="samples per operation (default: 1000)")
    p.add_argument("--format", choices=("text", "json"), default="text", help="report format (default: text)")
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--seed", type=int, help="key seed (default: $%s or 0)" % SEED_ENV)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("demo-trade", help="run a scripted two-robot trade and print the transcript")
    p.add_argument("scenario", help="honest | buyer-withholds | seller-stale-close | peer-offline")
    p.add_argument("--units", type=int, default=3, help="energy units to trade (default: 3)")
    p.add_argument("--price", type=int, default=2, help="credits per unit (default: 2)")
    p.add_argument("--seed", type=int, help=f"key seed (default: ${SEED_ENV} or 0)")
    p.set_defaults(func=cmd_demo_trade)

    p = sub.add_parser("keygen", help="create a keypair, DID and DID document")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--name", default="robot", help="file name stem (default: robot)")
    p.add_argument("--seed", help="derive the key from this string instead of fresh randomness")
    p.add_argument("--host", default="127.0.0.1", help="ip4 address for the service endpoint")
    p.add_argument("--port", type=int, default=10333, help="tcp port for the service endpoint")
    p.add_argument("--force", action="store_true", help="overwrite existing files")
    p.set_defaults(func=cmd_keygen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level guard maps failures to exit 1
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
