"""
Command-line surface of the toolkit.

Every subcommand is a thin wrapper: it parses flags, resolves defaults
(explicit flag, then the persisted settings file, then ``CONFIG``), calls the
controllers and writes files. Failures exit with status 1 and a one-line
diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from dkstp.config import CONFIG
from dkstp.controllers.experiment_controller import ExperimentController
from dkstp.controllers.pipeline_controller import PipelineController
from dkstp.core.analysis import (
    coherence,
    coherence_uniqueness_level,
    intra_group_check,
    rip_constant,
    uniqueness_bounds,
    welch_bound,
)
from dkstp.core.logging_config import configure_logging
from dkstp.core.measurement import generate_matrix, storage_report
from dkstp.core.metrics import increase_rate, summarize_benchmark
from dkstp.core.scenes import IMAGE_NAMES, synthetic_image
from dkstp.core.settings_manager import SettingsManager
from dkstp.core.stp_algebra import materialize_dkstp_matrix
from dkstp.exceptions import DkStpError
from dkstp.io.packet import HEADER_BYTES, read_descriptor, read_packet, write_descriptor, write_packet
from dkstp.io.pgm import read_pgm, write_pgm
from dkstp.io.reports import (
    write_benchmark_csv,
    write_heatmap,
    write_histogram_csv,
    write_json,
    write_report,
    to_jsonable,
    write_table_csv,
)
from dkstp.models import (
    BlockLayout,
    MatrixDescriptor,
    MatrixKind,
    Method,
    RipMode,
    Scaling,
    SensingScheme,
    SolverConfig,
    SolverKind,
)
from dkstp.utils import parse_methods, parse_range

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]

_KINDS = [kind.name.lower() for kind in MatrixKind]
_METHODS = [method.cli_name for method in Method]
_SOLVERS = [kind.value for kind in SolverKind]


def _setting(value: Any, key: str) -> Any:
    return value if value is not None else SettingsManager.get_setting(key)


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        kind=SolverKind(_setting(getattr(args, "solver", None), "solver")),
        max_iters=int(_setting(getattr(args, "max_iters", None), "max_iters")),
        abs_tol=float(_setting(getattr(args, "abs_tol", None), "abs_tol")),
        rel_tol=float(_setting(getattr(args, "rel_tol", None), "rel_tol")),
        rho=float(_setting(getattr(args, "rho", None), "rho")),
        lam=float(_setting(getattr(args, "lam", None), "lambda")),
        omp_sparsity=getattr(args, "omp_sparsity", None),
        debias=bool(getattr(args, "debias", False)),
    )


def _pipeline(args: argparse.Namespace) -> PipelineController:
    return PipelineController(workers=int(_setting(args.workers, "workers")))


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------
def cmd_gen_matrix(args: argparse.Namespace) -> int:
    descriptor = MatrixDescriptor(
        kind=MatrixKind.from_name(args.kind),
        rows=args.rows,
        cols=args.cols,
        seed=args.seed,
        scaling=Scaling[args.scaling.upper()],
    )
    write_descriptor(descriptor, args.out)
    if args.dump_matrix:
        dump = Path(args.dump_matrix)
        dump.parent.mkdir(parents=True, exist_ok=True)
        np.save(dump, generate_matrix(descriptor))
        logger.info("Dumped dense %dx%d matrix to %s", args.rows, args.cols, dump)
    print(f"descriptor {args.kind} {args.rows}x{args.cols} seed={args.seed} -> {args.out}")
    return 0


def cmd_compress(args: argparse.Namespace) -> int:
    image = read_pgm(args.image)
    block = int(_setting(args.block, "block"))
    layout = BlockLayout.square(image, block)
    method = Method.from_name(args.method)
    scheme = SensingScheme(
        method=method,
        gamma=args.gamma,
        descriptor=MatrixDescriptor(MatrixKind.from_name(args.kind), 1, 1, args.seed),
    )
    packet = _pipeline(args).compress(image, scheme, layout, args.cr)
    write_packet(packet, args.out)

    storage = storage_report(
        packet.scheme, layout.block_dim, packet.m, layout.block_count, header_bytes=HEADER_BYTES
    )
    logger.info(
        "Packet %d bytes; dense stored matrix would be %d bytes (%.3f of CS).",
        storage["packet_bytes"],
        storage["dense_matrix_bytes"],
        storage["matrix_ratio_vs_cs"],
    )
    print(f"{method.cli_name}: {layout.block_count} blocks x {packet.m} measurements -> {args.out}")
    return 0


def cmd_reconstruct(args: argparse.Namespace) -> int:
    packet = read_packet(args.packet)
    reference = read_pgm(args.reference) if args.reference else None
    report = _pipeline(args).reconstruct(packet, cfg=_solver_config(args), reference=reference)
    write_pgm(report.image, args.out)
    if args.report:
        write_report(report, args.report)

    converged = sum(1 for block in report.blocks if block.converged)
    line = f"reconstructed {len(report.blocks)} blocks ({converged} converged) -> {args.out}"
    if report.quality is not None:
        line += f"; PSNR {report.quality.psnr_db:.4f} dB"
    print(line)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    descriptor = read_descriptor(args.matrix_desc)
    matrix = generate_matrix(descriptor)
    if args.gamma > 1:
        matrix = materialize_dkstp_matrix(matrix, args.gamma)
    rows, cols = matrix.shape
    mu = coherence(matrix)

    result: dict[str, Any] = {
        "descriptor": descriptor.to_dict(),
        "gamma": args.gamma,
        "shape": [rows, cols],
        "spark": None,
        "spark_witness": None,
        "coherence": mu,
        "welch_bound": welch_bound(rows, cols),
        "k_spark": None,
        "k_mu": coherence_uniqueness_level(mu, cols),
        "rip": [],
        "intra_group": None,
    }
    if args.spark_limit is not None:
        bounds = uniqueness_bounds(matrix, args.spark_limit)
        result["spark"] = bounds.spark.spark
        result["spark_witness"] = list(bounds.spark.witness)
        result["spark_full"] = bounds.spark.full_spark
        result["spark_lower_bound"] = bounds.spark.lower_bound
        result["k_spark"] = bounds.k_spark
    for k in args.rip_k or []:
        rip = rip_constant(matrix, k, RipMode(args.rip_mode), seed=descriptor.seed)
        result["rip"].append(
            {
                "k": rip.order,
                "delta": rip.delta,
                "mode": rip.mode.value,
                "supports_checked": rip.supports_checked,
                "failed": rip.failed,
            }
        )
    if args.gamma > 1 or args.tau is not None:
        check = intra_group_check(matrix, args.gamma, args.tau)
        result["intra_group"] = {
            "within_group_equal": check.within_group_equal,
            "cross_group_coherence": check.cross_group_coherence,
            "tau": check.tau,
            "holds": check.holds,
        }

    if args.out:
        write_json(result, args.out)
    else:
        print(json.dumps(to_jsonable(result), indent=2, sort_keys=True))
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    image = read_pgm(args.image)
    experiments = ExperimentController(_pipeline(args), _solver_config(args))
    table = experiments.benchmark(
        image,
        methods=parse_methods(args.methods),
        cr_grid=parse_range(args.cr),
        gamma=args.gamma,
        trials=args.trials,
        seed=args.seed,
        block=int(_setting(args.block, "block")),
        kind=MatrixKind.from_name(args.kind),
        noise_var=args.noise_var,
    )
    write_benchmark_csv(table, args.csv)
    if args.summary:
        write_table_csv(summarize_benchmark(table), args.summary)
    if args.increase_rate:
        write_table_csv(increase_rate(table), args.increase_rate)
    print(f"benchmark: {len(table)} rows -> {args.csv}")
    return 0


def cmd_error_decomp(args: argparse.Namespace) -> int:
    image = read_pgm(args.image)
    error_map = ExperimentController().error_decomposition(image, args.gamma, args.block)
    if args.heatmap:
        write_heatmap(error_map, args.heatmap)
    if args.hist:
        write_histogram_csv(error_map, args.hist)
    print(f"equalization MAE {error_map.mae:.6f}")
    return 0


def cmd_mae_sweep(args: argparse.Namespace) -> int:
    image = read_pgm(args.image)
    experiments = ExperimentController(_pipeline(args), _solver_config(args))
    table, differences = experiments.mae_vs_cr_sweep(
        image,
        cr_grid=parse_range(args.cr),
        gamma=args.gamma,
        trials=args.trials,
        blocks=args.blocks,
        block=args.block,
        seed=args.seed,
        method=Method.from_name(args.method),
        kind=MatrixKind.from_name(args.kind),
    )
    csv_path = Path(args.csv)
    write_benchmark_csv(table, csv_path)
    write_table_csv(differences, diff_path(csv_path))
    print(f"mae-sweep: {len(table)} rows -> {csv_path}")
    return 0


def diff_path(csv_path: Path) -> Path:
    """Companion table ``<stem>_diff.csv`` next to ``csv_path``."""
    return csv_path.with_name(f"{csv_path.stem}_diff.csv")


def cmd_settings(args: argparse.Namespace) -> int:
    for assignment in args.set or []:
        key, sep, raw = assignment.partition("=")
        if not sep:
            raise ValueError(f"Expected KEY=VALUE, got {assignment!r}.")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        SettingsManager.save_setting(key.strip(), value)
    print(json.dumps(SettingsManager.load_settings(), indent=2, sort_keys=True))
    return 0


def cmd_make_image(args: argparse.Namespace) -> int:
    write_pgm(synthetic_image(args.name, args.size), args.out)
    print(f"{args.name} {args.size}x{args.size} -> {args.out}")
    return 0


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------
def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--solver", choices=_SOLVERS, default=None)
    parser.add_argument("--lambda", dest="lam", type=float, default=None, help="BPDN regularization weight")
    parser.add_argument("--max-iters", type=int, default=None)
    parser.add_argument("--rho", type=float, default=None, help="ADMM penalty parameter")
    parser.add_argument("--abs-tol", type=float, default=None)
    parser.add_argument("--rel-tol", type=float, default=None)
    parser.add_argument("--omp-sparsity", type=int, default=None)
    parser.add_argument("--debias", action="store_true", help="BPDN: least-squares refit on the selected support")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=CONFIG.app_name,
        description="Dimension-keeping semi-tensor product compressed sensing toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {CONFIG.version}")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    parser.add_argument("--log-dir", type=Path, default=CONFIG.log_directory)
    parser.add_argument("--settings", type=Path, default=None, help="settings JSON file")
    parser.add_argument("--workers", type=int, default=None, help="threads for block reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-matrix", help="write a measurement matrix descriptor")
    p.add_argument("--kind", choices=_KINDS, required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scaling", choices=["unit", "inv_sqrt_m"], default="inv_sqrt_m")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-matrix", default=None, help="also save the dense matrix (.npy)")
    p.set_defaults(handler=cmd_gen_matrix)

    p = sub.add_parser("compress", help="compress a PGM image into a packet")
    p.add_argument("--image", required=True)
    p.add_argument("--method", choices=_METHODS, required=True)
    p.add_argument("--cr", type=float, default=CONFIG.default_cr)
    p.add_argument("--gamma", type=int, default=CONFIG.default_gamma)
    p.add_argument("--block", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=_KINDS, default="gaussian")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_compress)

    p = sub.add_parser("reconstruct", help="reconstruct a PGM image from a packet")
    p.add_argument("--packet", required=True)
    _add_solver_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="JSON report path")
    p.add_argument("--reference", default=None, help="original PGM for quality figures")
    p.set_defaults(handler=cmd_reconstruct)

    p = sub.add_parser("analyze", help="coherence, spark, RIP and intra-group checks")
    p.add_argument("--matrix-desc", required=True)
    p.add_argument("--spark-limit", type=int, default=None)
    p.add_argument("--rip-k", type=int, action="append", default=None, help="RIP order; repeat for several")
    p.add_argument("--rip-mode", choices=[mode.value for mode in RipMode], default="exhaustive")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--gamma", type=int, default=1, help="analyze A (x) eps_gamma^T instead of A")
    p.add_argument("--out", default=None, help="JSON output path (stdout when omitted)")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("benchmark", help="PSNR/MSE/MAE over methods and compression ratios")
    p.add_argument("--image", required=True)
    p.add_argument("--methods", default="cs,stp,dkstp")
    p.add_argument("--cr", default="0.05:0.5:0.05")
    p.add_argument("--gamma", type=int, default=CONFIG.default_gamma)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--noise-var", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", choices=_KINDS, default="gaussian")
    p.add_argument("--block", type=int, default=None)
    p.add_argument("--summary", default=None, help="per (method, cr) mean/sem CSV")
    p.add_argument("--increase-rate", default=None, help="DK-STP-CS relative PSNR gain CSV")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_benchmark)

    p = sub.add_parser("error-decomp", help="equalization error heatmap and histogram")
    p.add_argument("--image", required=True)
    p.add_argument("--gamma", type=int, default=CONFIG.default_gamma)
    p.add_argument("--heatmap", default=None)
    p.add_argument("--hist", default=None)
    p.add_argument("--block", type=int, default=None, help="vectorize per block instead of per image")
    p.set_defaults(handler=cmd_error_decomp)

    p = sub.add_parser("mae-sweep", help="MAE against compression ratio on random blocks")
    p.add_argument("--image", required=True)
    p.add_argument("--gamma", type=int, default=CONFIG.default_gamma)
    p.add_argument("--cr", default="0.05:1.0:0.05")
    p.add_argument("--blocks", type=int, default=5)
    p.add_argument("--block", type=int, default=64)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=_METHODS, default="dkstp")
    p.add_argument("--kind", choices=_KINDS, default="gaussian")
    p.add_argument("--csv", required=True)
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_mae_sweep)

    p = sub.add_parser("make-image", help="write a procedural test image")
    p.add_argument("--name", choices=IMAGE_NAMES, required=True)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_make_image)

    p = sub.add_parser("settings", help="show or persist command-line defaults")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(handler=cmd_settings)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_dir, getattr(logging, args.log_level))
    if args.settings is not None:
        SettingsManager.use_path(args.settings)

    handler: Handler = args.handler
    try:
        return handler(args)
    except (DkStpError, OSError, ValueError) as exc:
        logger.debug("Command %s failed.", args.command, exc_info=True)
        print(f"{CONFIG.app_name} {args.command}: error: {exc}", file=sys.stderr)
        return 1
