"""
Command-line harness: run, sweep, attack and selftest.

Exit codes: 0 success, 1 selftest failure, 2 invalid configuration or parameters,
3 dim_cap exceeded, 4 numerical failure.
"""

import argparse
import contextlib
import csv
import io
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

from adversary.attacks import (AttackResult, classical_fooling_attack, entangled_no_proof_attack, prefix_bits_family,
                               separable_cut_paste_attack)
from adversary.dma import truncated_eq_dma
from cli.catalog import CatalogInstance, RunSettings, SoundnessBound, build_instance, scheme_for
from cli.config import AttackConfig, ExperimentConfig, SweepConfig, load_json
from cli.selftest import FAIL, run_selftest
from fingerprint.oneway import equality
from protocols.eq import EqPathParams, build_eq_path
from utils.bits import all_bitstrings
from utils.common import (ConfigError, DimensionCapError, NumericalError, dim_cap, fmt, get_dim_cap)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_DIM_CAP, EXIT_NUMERICAL = 0, 1, 2, 3, 4

CSV_COLUMNS = ["protocol", "r", "n", "k", "instance", "prover", "accept_prob", "lambda_max", "bound", "satisfied",
               "proof_dim", "seed", "wall_time_ms"]
ATTACK_COLUMNS = ["attack", "status", "cut_index", "pair_found", "accept_prob", "reference_line"]
SELFTEST_COLUMNS = ["check", "status", "detail"]
# sweeps append the reason a cell was skipped; the leading columns stay CSV_COLUMNS
SWEEP_COLUMNS = CSV_COLUMNS + ["skipped"]


def _opt(value: Optional[float]) -> Optional[float]:
    return None if value is None else fmt(value)


@dataclass(frozen=True)
class ExperimentResult:
    config: Dict[str, Any]
    protocol: str
    r: int
    n: int
    k: int
    instance: str
    prover: str
    accept_prob: float
    lambda_max: Optional[float]
    per_node_reject: Dict[str, float]
    bound: Optional[SoundnessBound]
    satisfied: Optional[bool]
    proof_dim: int
    wall_time_ms: float
    seed: int
    choice: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "protocol": self.protocol,
            "r": self.r,
            "n": self.n,
            "k": self.k,
            "instance": self.instance,
            "prover": self.prover,
            "accept_prob": fmt(self.accept_prob),
            "lambda_max": _opt(self.lambda_max),
            "per_node_reject": {v: fmt(p) for v, p in self.per_node_reject.items()},
            "bound": None if self.bound is None else {
                "formula": self.bound.formula,
                "value": fmt(self.bound.value),
                "satisfied": self.satisfied,
            },
            "proof_dimension": self.proof_dim,
            "wall_time_ms": fmt(self.wall_time_ms),
            "seed": self.seed,
            "choice": self.choice,
        }

    def csv_row(self) -> List[Any]:
        return [self.protocol, self.r, self.n, self.k, self.instance, self.prover, fmt(self.accept_prob),
                "" if self.lambda_max is None else fmt(self.lambda_max),
                "" if self.bound is None else fmt(self.bound.value),
                "" if self.satisfied is None else str(self.satisfied).lower(),
                self.proof_dim, self.seed, fmt(self.wall_time_ms)]


def run(config: ExperimentConfig, seed: int = 0, threads: int = 1, timing: bool = False) -> ExperimentResult:
    """Builds the configured instance, applies the prover and evaluates it exactly or by sampling."""
    with dim_cap(config.dim_cap or get_dim_cap()):
        return _evaluate(config, seed, threads, timing)


def _evaluate(config: ExperimentConfig, seed: int, threads: int, timing: bool) -> ExperimentResult:
    start = time.perf_counter()
    instance: CatalogInstance = build_instance(config)
    settings = RunSettings(config.prover, config.mode, seed, threads)
    ev = instance.instance.evaluate(settings)
    elapsed = (time.perf_counter() - start) * 1000 if timing else 0.0
    logger.info("%s %s: accept %.12g", config.protocol, config.prover["kind"], ev.accept_prob)
    return ExperimentResult(config.to_dict(), instance.protocol, instance.r, instance.n, instance.k,
                            "yes" if instance.yes else "no", config.prover["kind"], ev.accept_prob, ev.lambda_max,
                            ev.per_node_reject, instance.bound, instance.satisfied(ev.accept_prob), ev.proof_dim,
                            elapsed, settings.sample_seed if settings.sampled else seed, ev.choice)


def sweep_cells(sweep: SweepConfig) -> List[ExperimentConfig]:
    names = list(sweep.axes)
    if not names:
        return [sweep.template]
    return [sweep.template.with_params(**dict(zip(names, values)))
            for values in itertools.product(*(sweep.axes[name] for name in names))]


def sweep(config: SweepConfig, seed: int = 0, threads: int = 1, timing: bool = False) -> List[dict]:
    """
    One result per cell of the cartesian product of the axes, in cell order. Cells whose spaces
    exceed dim_cap are reported as skipped.
    """
    cells = sweep_cells(config)

    def one(indexed):
        index, cell = indexed
        try:
            return {"cell": index, "result": _evaluate(cell, seed, 1, timing)}
        except DimensionCapError as e:
            logger.info("sweep cell %d skipped: %s", index, e)
            return {"cell": index, "skipped": str(e), "config": cell.to_dict()}

    # the cap is process-wide; cells share the template's
    with dim_cap(config.template.dim_cap or get_dim_cap()):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(one, enumerate(cells)))
        return [one(c) for c in enumerate(cells)]


def sweep_csv_row(cell: dict, seed: int = 0) -> List[Any]:
    """A sweep cell as a SWEEP_COLUMNS row; skipped cells keep their protocol, sizes and prover."""
    if "result" in cell:
        return cell["result"].csv_row() + [""]
    config = cell["config"]
    params, mode = config["params"], config["mode"]
    if mode["kind"] == "sample" and mode.get("seed") is not None:
        seed = mode["seed"]
    row = {"protocol": config["protocol"], "r": params.get("r", ""), "n": params.get("n", ""),
           "k": params.get("k", ""), "prover": config["prover"]["kind"], "seed": seed, "skipped": cell["skipped"]}
    return [row.get(c, "") for c in SWEEP_COLUMNS]


def _eq_fooling_set(n: int):
    return [(x, x) for x in all_bitstrings(n)]


def attack(config: AttackConfig, threads: int = 1) -> AttackResult:
    p = config.params
    with dim_cap(config.dim_cap or get_dim_cap()):
        if config.attack == "classical_fooling":
            return classical_fooling_attack(truncated_eq_dma(p["n"], p["r"], p["bits"]), equality,
                                            _eq_fooling_set(p["n"]))
        if config.attack == "separable_cut_paste":
            bits = p["n"] if p["prefix_bits"] is None else p["prefix_bits"]
            family = prefix_bits_family(p["r"], scheme_for(p["scheme"], bits), bits, p["k"])
            return separable_cut_paste_attack(family, equality, _eq_fooling_set(p["n"]), p["i"], float(p["delta"]),
                                              threads)
        scheme = scheme_for(p["scheme"], p["n"])

        def family(x: str, y: str):
            return build_eq_path(EqPathParams(p["r"], scheme, x, y, p["k"], p["gap"]))

        return entangled_no_proof_attack(family, equality, _eq_fooling_set(p["n"]), p["i"], threads)


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_lines(items: Iterable[dict]) -> str:
    return "".join(json.dumps(item, sort_keys=True) + "\n" for item in items)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed {value} outside 0 .. 2^64-1")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, default=None, help="write output to this file instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default=None,
                        help="output format (default: the config's, else json)")
    common.add_argument("--seed", type=_seed, default=0, help="base seed, 0 .. 2^64-1 (default: 0)")
    common.add_argument("--threads", type=_positive, default=1, help="worker threads (default: 1)")
    common.add_argument("--dim-cap", type=_positive, default=None,
                        help="largest Hilbert space dimension that may be built (default: 4096)")
    common.add_argument("--timing", action="store_true", help="report wall_time_ms (otherwise 0)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")

    parser = argparse.ArgumentParser(
        prog="dqmasim",
        description="Simulator for distributed quantum Merlin-Arthur verification protocols",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py run --config eq.json
  python main.py sweep --config sweep.json --format csv --threads 4
  python main.py attack --config fooling.json
  python main.py selftest
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "evaluate one experiment config"),
                       ("sweep", "evaluate a config template over parameter axes"),
                       ("attack", "run a lower-bound attack construction")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--config", type=str, required=True, help="JSON config file")
    sub.add_parser("selftest", parents=[common], help="re-check the invariant suite at fixed seeds")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")


def _dispatch(args: argparse.Namespace) -> int:
    fmt_name = args.format
    if args.command == "selftest":
        results = run_selftest(args.seed, args.threads)
        if (fmt_name or "json") == "csv":
            text = _csv(SELFTEST_COLUMNS, ([r.check, r.status, r.detail] for r in results))
        else:
            summary = {"summary": {s: sum(r.status == s for r in results) for s in ("pass", "fail", "skip")}}
            text = _json_lines([r.to_dict() for r in results] + [summary])
        _emit(text, args.out)
        return EXIT_SELFTEST if any(r.status == FAIL for r in results) else EXIT_OK

    data = load_json(args.config)
    if args.command == "run":
        config = ExperimentConfig.from_dict(data)
        result = run(config, args.seed, args.threads, args.timing)
        if (fmt_name or config.format) == "csv":
            text = _csv(CSV_COLUMNS, [result.csv_row()])
        else:
            text = _json_lines([result.to_dict()])
    elif args.command == "sweep":
        config = SweepConfig.from_dict(data)
        cells = sweep(config, args.seed, args.threads, args.timing)
        if (fmt_name or config.template.format) == "csv":
            text = _csv(SWEEP_COLUMNS, (sweep_csv_row(c, args.seed) for c in cells))
        else:
            text = _json_lines({"cell": c["cell"], **c["result"].to_dict()} if "result" in c else c for c in cells)
    else:
        config = AttackConfig.from_dict(data)
        result = attack(config, args.threads)
        if (fmt_name or config.format) == "csv":
            d = result.to_dict()
            text = _csv(ATTACK_COLUMNS, [["" if d[c] is None else d[c] for c in ATTACK_COLUMNS]])
        else:
            text = _json_lines([result.to_dict()])
    _emit(text, args.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    cap = contextlib.nullcontext() if args.dim_cap is None else dim_cap(args.dim_cap)
    try:
        with cap:
            return _dispatch(args)
    except (ConfigError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except DimensionCapError as e:
        logger.error("%s", e)
        return EXIT_DIM_CAP
    except NumericalError as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL
