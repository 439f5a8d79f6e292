#!/usr/bin/env python
"""
Engine for the speclink pipeline: simulate reference data, derive and
estimate Koopman matrices, compare them, and run confusion experiments.
The CLI is a thin layer over ``SpectrumLinkingEngine``.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml
from dotenv import load_dotenv

from speclink.errors import BasisMismatchError, ConfigError
from speclink.koopman import build_pairs, decompose, estimate
from speclink.linking import ProgressCallback, confusion_experiment, frobenius_discrepancy, link_score
from speclink.model_utils import ModelValidator
from speclink.operators import builtin_library, derive_koopman, library_by_name
from speclink.report_schema import ExperimentResult
from speclink.schemas import (
    BasisSpec,
    ExperimentConfig,
    InitialCondition,
    InitialConditionConfig,
    KoopmanMatrix,
    PdeSpec,
    PhysicalParams,
    Trajectory,
)
from speclink.simulate import ensemble, simulate_many
from speclink.utils.file_handler import FileHandler
from speclink.utils.report_writer import ReportWriter

load_dotenv()

logger = logging.getLogger(__name__)

PRESETS_FILE = Path(__file__).parent / "config" / "presets.yaml"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: Optional[str] = None, log_dir: Optional[Path] = None) -> None:
    """Log to ``<log_dir>/speclink.log`` and stderr."""
    level = (level or os.getenv("SPECLINK_LOG_LEVEL", "INFO")).upper()
    log_dir = Path(log_dir or os.getenv("SPECLINK_LOG_DIR", "logs"))
    log_dir.mkdir(parents=True, exist_ok=True)

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_dir / 'speclink.log'),
            logging.StreamHandler(),
        ],
        force=True,
    )


def default_workers() -> int:
    try:
        return max(1, int(os.getenv("SPECLINK_WORKERS", "1")))
    except ValueError as e:
        raise ConfigError(f"SPECLINK_WORKERS must be an integer: {e}") from e


def load_preset(name: str) -> ExperimentConfig:
    """Experiment configuration stored under ``name`` in config/presets.yaml."""
    with open(PRESETS_FILE, 'r', encoding='utf-8') as f:
        presets = yaml.safe_load(f) or {}
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    return ModelValidator.validate_dict(presets[name], ExperimentConfig)


def load_config(path: str | Path) -> ExperimentConfig:
    return ModelValidator.validate_file(path, ExperimentConfig)


class SpectrumLinkingEngine:
    """
    Orchestrates the speclink pipeline and owns its output directory.
    """

    def __init__(self, output_dir: str | Path = "output"):
        self.output_dir = Path(output_dir)
        self.file_handler = FileHandler(self.output_dir)
        self.file_handler.ensure_layout()
        self.report_writer = ReportWriter(self.output_dir)
        logger.info(f"Spectrum linking engine initialized with output directory: {self.output_dir}")

    def simulate_trajectories(
        self,
        spec: PdeSpec,
        ic: InitialCondition,
        basis: BasisSpec,
        dt: float,
        horizon: float,
        ensemble_size: int = 1,
        output: Optional[str | Path] = None,
    ) -> List[Path]:
        """Simulate ``spec`` and write one trajectory file per ensemble member."""
        trajectories = simulate_many(spec, ensemble(ic, ensemble_size), basis, dt, horizon)
        paths = []
        for member, trajectory in enumerate(trajectories):
            if output is not None and ensemble_size == 1:
                path = self.file_handler.resolve(output)
            else:
                path = self.file_handler.trajectory_path(
                    spec.name, ic.seed if ic.kind == "random_smooth" else None,
                    member if ensemble_size > 1 else None,
                )
            paths.append(ModelValidator.save_model_to_file(trajectory, path))
        return paths

    def derive(self, spec: PdeSpec, basis: BasisSpec, dt: float, output: Optional[str | Path] = None) -> Path:
        koopman = derive_koopman(spec, basis, dt)
        path = self.file_handler.resolve(output) if output else self.file_handler.matrix_path(spec.name, koopman.provenance)
        return ModelValidator.save_model_to_file(koopman, path)

    def estimate_from_files(
        self,
        trajectory_files: Sequence[str | Path],
        output: Optional[str | Path] = None,
        label: Optional[str] = None,
    ) -> Path:
        """Pool snapshot pairs of the given trajectory files into one K_hat."""
        trajectories = [ModelValidator.validate_file(path, Trajectory) for path in trajectory_files]
        label = label or trajectories[0].pde_name
        koopman = estimate(build_pairs(trajectories), trajectories[0].dt, label=label)
        path = self.file_handler.resolve(output) if output else self.file_handler.matrix_path(label, koopman.provenance)
        return ModelValidator.save_model_to_file(koopman, path)

    def compare_files(self, first: str | Path, second: str | Path, separation: float = 0.0) -> Dict[str, Any]:
        """d, s and Frobenius discrepancy of two Koopman matrix files (first plays K*)."""
        star = ModelValidator.validate_file(first, KoopmanMatrix)
        hat = ModelValidator.validate_file(second, KoopmanMatrix)
        if star.basis != hat.basis:
            raise BasisMismatchError(f"basis mismatch: {star.basis.sizes} vs {hat.basis.sizes}")
        return self.compare(star, hat, separation)

    def compare(self, star: KoopmanMatrix, hat: KoopmanMatrix, separation: float = 0.0) -> Dict[str, Any]:
        star_dec, hat_dec = decompose(star, separation), decompose(hat, separation)
        score = link_score(star_dec, hat_dec)
        return {
            "star": star.label,
            "hat": hat.label,
            "d": score.d,
            "s": score.s,
            "frobenius": frobenius_discrepancy(hat, star),
            "star_residuals": _residual_summary(star_dec.residuals),
            "hat_residuals": _residual_summary(hat_dec.residuals),
        }

    def run_confusion(
        self,
        config: ExperimentConfig,
        gaussian_reference: bool = True,
        progress_callback: Optional[ProgressCallback] = None,
    ) -> ExperimentResult:
        """Run the confusion experiment and write CSV/JSON/markdown reports.

        With ``gaussian_reference`` a single-gaussian-IC run is reported alongside.
        """
        result = confusion_experiment(config, progress_callback)
        reference = None
        if gaussian_reference and config.initial_condition.kind != "gaussian":
            ic = config.initial_condition
            gaussian = InitialConditionConfig(
                kind="gaussian", seeds=[ic.seeds[0]], ensemble_size=1,
                center=ic.center, width=ic.width, amplitude=ic.amplitude,
            )
            reference = confusion_experiment(config.model_copy(update={"initial_condition": gaussian}))
        self.report_writer.write_all(result, reference)
        return result

    def pde(self, name: str, dims: int, params: PhysicalParams) -> PdeSpec:
        return library_by_name(builtin_library(dims, params), name)


def _residual_summary(residuals: np.ndarray) -> Dict[str, float]:
    return {
        "max": float(residuals.max()),
        "median": float(np.median(residuals)),
        "min": float(residuals.min()),
    }
