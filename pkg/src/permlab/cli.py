"""``permlab`` command line.

    permlab <experiment> [--config PATH] [--seed U64] [--threads N] [--out PATH] [--stdout]

Experiments: perm2-bias, scaling, combined, conjecture-spread, verify-oracles.
The config is one JSON object whose keys match RunConfig fields; any flag
given on the command line overrides the matching key. Sweep keys (n, L1, d)
accept a scalar, a list, or an inclusive "lo..hi" range and expand as the
Cartesian product n x L1 x d.

Exit codes: 0 success, 1 config/usage error, 2 oracle-suite failure,
3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, NonUnitaryError, NumericalGuardError, PermlabError
from .experiments import EXPERIMENTS, RunConfig, run
from .matrix import load_matrix
from .oracles import run_all
from .report import sidecar_path, write_csv, write_json

log = logging.getLogger("permlab")

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="permlab",
        description="Phase-space Monte Carlo experiments on photonic-network permanents.",
        epilog="Sweeps over n, L1 and d expand as a Cartesian product, in that order.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON config file (keys as RunConfig fields)")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--out", help="CSV output path; a .json sidecar is written next to it")
    p.add_argument("--stdout", action="store_true", help="write the CSV table to standard output")
    p.add_argument("--n", help="photon numbers: 4, 4,6,8 or 4..10")
    p.add_argument("--k", type=float, help="channel ratio M / N")
    p.add_argument("--d", help="discretisations, e.g. 2,inf")
    p.add_argument("--L1", help="samples per sub-ensemble (sweepable)")
    p.add_argument("--L2", type=int, help="number of sub-ensembles (even)")
    p.add_argument("--n-matrices", dest="n_matrices", type=int, help="Haar matrices per point")
    p.add_argument("--t", type=float, help="uniform transmission in (0, 1]")
    p.add_argument("--deleted", help="deleted channels, comma separated; negative counts from the end")
    p.add_argument("--unitary", dest="unitary_path", help="pin a unitary from a JSON matrix file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> RunConfig:
    obj = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
    obj["experiment"] = args.experiment
    for key in ("seed", "threads", "n", "k", "d", "L1", "L2", "n_matrices", "t", "unitary_path"):
        value = getattr(args, key)
        if value is not None:
            obj[key] = value
    if args.deleted is not None:
        obj["deleted"] = [int(x) for x in args.deleted.split(",") if x.strip()]
    if args.out is not None:
        obj["output_path"] = args.out
    obj.setdefault("threads", os.cpu_count() or 1)
    try:
        return RunConfig.from_dict(obj)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, PermlabError):
            raise
        raise ConfigError(str(exc)) from None


def _verify(cfg: RunConfig) -> int:
    pinned = load_matrix(cfg.unitary_path) if cfg.unitary_path else None
    report = run_all(seed=cfg.seed, pinned=pinned)
    ok = all(s["passed"] for s in report.values())
    print(json.dumps({"passed": ok, "suites": report}, indent=2, sort_keys=True))
    for name, s in report.items():
        log.info("%-20s %s  %s", name, "PASS" if s["passed"] else "FAIL", s["detail"])
    return EXIT_OK if ok else EXIT_ORACLE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args)
        if cfg.experiment == "verify-oracles":
            return _verify(cfg)
        log.info("running %s", cfg.experiment)
        rows, wall = run(cfg)
        if args.stdout:
            write_csv(sys.stdout, rows)
        if cfg.output_path or not args.stdout:
            out = Path(cfg.output_path or f"permlab_{cfg.experiment.replace('-', '_')}.csv")
            with open(out, "w", newline="") as fh:
                write_csv(fh, rows)
            write_json(sidecar_path(out), rows, cfg, wall, __version__)
            log.info("wrote %s and %s", out, sidecar_path(out))
        return EXIT_OK
    except (NumericalGuardError, NonUnitaryError) as exc:
        print(f"permlab: numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PermlabError, ValueError, OSError) as exc:
        print(f"permlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
