"""
Command-line front end.

    speclink simulate  --pde advection-x --M 8 --dt 5e-4 --T 0.5
    speclink derive    --pde diffusion --nu 0.1
    speclink estimate  trajectories/trajectory_advection-x.json
    speclink compare   matrices/kstar_advection-x.json matrices/khat_advection-x.json
    speclink confusion --preset paper

Exit codes: 0 success, 2 usage/config error, 3 input-data error, 4 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from speclink.errors import ConfigError, SpeclinkError
from speclink.main import SpectrumLinkingEngine, default_workers, load_config, load_preset, setup_logging
from speclink.model_utils import ModelValidator
from speclink.operators import BUILTIN_NAMES
from speclink.schemas import BasisSpec, ExperimentConfig, InitialCondition, PdeSpec, PhysicalParams, Trajectory

logger = logging.getLogger(__name__)


def _add_problem_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--pde", help=f"builtin PDE name ({', '.join(BUILTIN_NAMES)})")
    group.add_argument("--spec", type=Path, help="JSON file holding a custom PdeSpec")
    group.add_argument("--preset", help="named preset from config/presets.yaml, e.g. 'paper'")
    group.add_argument("--M", type=int, dest="resolution", help="Chebyshev resolution per axis")
    group.add_argument("--dims", type=int, help="spatial dimensions (default 2)")
    group.add_argument("--dt", type=float, help="time step")
    group.add_argument("--cx", type=float, help="advection speed along x")
    group.add_argument("--cy", type=float, help="advection speed along y")
    group.add_argument("--nu", type=float, help="diffusivity")
    group.add_argument("--out", help="output file (relative to --out-dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speclink", description="Numerical spectrum linking of PDEs and data")
    parser.add_argument(
        "--out-dir", help="output directory (default: output, or the configured out_dir for confusion)"
    )
    parser.add_argument("--log-level", help="logging level (default from SPECLINK_LOG_LEVEL or INFO)")
    parser.add_argument("--log-dir", help="log directory (default <out-dir>/logs)")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="RK4 reference trajectory of a PDE")
    _add_problem_args(simulate)
    simulate.add_argument("--T", type=float, dest="horizon", help="time horizon")
    simulate.add_argument("--ic", choices=["gaussian", "random_smooth"], default="gaussian")
    simulate.add_argument("--seed", type=int, default=1)
    simulate.add_argument("--ensemble-size", type=int, default=1)
    simulate.add_argument("--sigma", type=float, default=0.3, help="gaussian width")
    simulate.add_argument("--amplitude", type=float, default=1.0, help="gaussian amplitude")
    simulate.add_argument("--center", type=float, nargs="+", help="gaussian center")
    simulate.add_argument("--decay", type=float, default=0.8, help="random_smooth spectral decay")

    derive = sub.add_parser("derive", help="equation-driven Koopman matrix K* = exp(dt N)")
    _add_problem_args(derive)

    estimate = sub.add_parser("estimate", help="data-driven Koopman matrix K_hat = A1 A0^+")
    estimate.add_argument("trajectories", nargs="+", type=Path, help="trajectory files (pooled)")
    estimate.add_argument("--out", help="output file (relative to --out-dir)")
    estimate.add_argument("--label", help="label stored with the matrix")

    compare = sub.add_parser("compare", help="d, s and Frobenius discrepancy of two Koopman matrices")
    compare.add_argument("star", type=Path, help="reference (equation-driven) matrix file")
    compare.add_argument("hat", type=Path, help="matrix file to compare against it")
    compare.add_argument(
        "--separation", type=float, help="diagonal shift used by both eigendecompositions (default from config)"
    )

    confusion = sub.add_parser("confusion", help="candidate-vs-truth confusion experiment")
    confusion.add_argument("--config", type=Path, help="ExperimentConfig JSON file")
    confusion.add_argument("--preset", help="named preset from config/presets.yaml")
    confusion.add_argument("--workers", type=int, help="parallel (truth, seed) tasks")
    confusion.add_argument("--seeds", type=int, nargs="+", help="override the IC seeds")
    confusion.add_argument("--ensemble-size", type=int, help="override ICs pooled per estimate")
    confusion.add_argument("--no-gaussian-reference", action="store_true", help="skip the single-gaussian run")
    return parser


def _base_config(args: argparse.Namespace) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    if args.preset:
        return load_preset(args.preset)
    return ExperimentConfig()


def _problem(args: argparse.Namespace, engine: SpectrumLinkingEngine):
    base = _base_config(args)
    dims = args.dims or base.basis.dims
    if args.resolution is not None or args.dims is not None:
        size = args.resolution or base.basis.sizes[0]
        basis = _basis(size, dims)
    else:
        basis = base.basis
    try:
        physics = PhysicalParams(
            c_x=base.physics.c_x if args.cx is None else args.cx,
            c_y=base.physics.c_y if args.cy is None else args.cy,
            nu=base.physics.nu if args.nu is None else args.nu,
        )
    except ValueError as e:
        raise ConfigError(f"invalid physical parameters: {e}") from e
    dt = base.dt if args.dt is None else args.dt
    horizon = base.horizon if getattr(args, "horizon", None) is None else args.horizon

    if args.spec is not None:
        spec = ModelValidator.validate_file(args.spec, PdeSpec)
    elif args.pde:
        spec = engine.pde(args.pde, dims, physics)
    else:
        raise ConfigError(f"either --pde ({', '.join(BUILTIN_NAMES)}) or --spec is required")
    return spec, basis, dt, horizon


def _basis(size: int, dims: int) -> BasisSpec:
    try:
        return BasisSpec.square(size, dims=dims)
    except ValueError as e:
        raise ConfigError(f"invalid basis: {e}") from e


def cmd_simulate(args: argparse.Namespace, engine: SpectrumLinkingEngine) -> int:
    spec, basis, dt, horizon = _problem(args, engine)
    try:
        ic = InitialCondition(
            kind=args.ic,
            center=tuple(args.center) if args.center else None,
            width=args.sigma,
            amplitude=args.amplitude,
            seed=args.seed,
            decay=args.decay,
        )
    except ValueError as e:
        raise ConfigError(f"invalid initial condition: {e}") from e

    paths = engine.simulate_trajectories(spec, ic, basis, dt, horizon, args.ensemble_size, args.out)
    for path in paths:
        trajectory = ModelValidator.validate_file(path, Trajectory)
        final_norm = float(np.linalg.norm(trajectory.snapshots[-1]))
        print(f"{path}: {trajectory.n_snapshots} snapshots, final-state norm {final_norm:.9g}")
    return 0


def cmd_derive(args: argparse.Namespace, engine: SpectrumLinkingEngine) -> int:
    spec, basis, dt, _ = _problem(args, engine)
    path = engine.derive(spec, basis, dt, args.out)
    print(path)
    return 0


def cmd_estimate(args: argparse.Namespace, engine: SpectrumLinkingEngine) -> int:
    path = engine.estimate_from_files(args.trajectories, args.out, args.label)
    print(path)
    return 0


def cmd_compare(args: argparse.Namespace, engine: SpectrumLinkingEngine) -> int:
    separation = ExperimentConfig().spectral_separation if args.separation is None else args.separation
    report = engine.compare_files(args.star, args.hat, separation)
    print(json.dumps({"star": report["star"], "hat": report["hat"], "d": report["d"], "s": report["s"],
                      "frobenius": report["frobenius"]}))
    print(json.dumps({"matrix": "star", "residuals": report["star_residuals"]}))
    print(json.dumps({"matrix": "hat", "residuals": report["hat_residuals"]}))
    return 0


def cmd_confusion(args: argparse.Namespace, engine: SpectrumLinkingEngine) -> int:
    data = _base_config(args).model_dump()
    if args.workers:
        data["workers"] = args.workers
    elif data["workers"] == 1:
        data["workers"] = default_workers()
    if args.seeds:
        data["initial_condition"]["seeds"] = args.seeds
    if args.ensemble_size:
        data["initial_condition"]["ensemble_size"] = args.ensemble_size
    try:
        config = ExperimentConfig.model_validate(data)
    except ValueError as e:
        raise ConfigError(f"invalid experiment configuration: {e}") from e
    if args.out_dir is None and Path(config.out_dir) != engine.output_dir:
        engine = SpectrumLinkingEngine(config.out_dir)

    def progress(done: int, total: int, label: str) -> None:
        logger.info(f"[{done}/{total}] {label}")

    result = engine.run_confusion(config, not args.no_gaussian_reference, progress)
    for metric, held in result.dominance().items():
        for true, ok in held.items():
            print(f"{metric}: column {true}: diagonal {'dominant' if ok else 'NOT dominant'}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "derive": cmd_derive,
    "estimate": cmd_estimate,
    "compare": cmd_compare,
    "confusion": cmd_confusion,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out_dir or "output")
    setup_logging(args.log_level, Path(args.log_dir or os.getenv("SPECLINK_LOG_DIR") or out_dir / "logs"))
    try:
        engine = SpectrumLinkingEngine(out_dir)
        return COMMANDS[args.command](args, engine)
    except SpeclinkError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
