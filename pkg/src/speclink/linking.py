"""
Numerical spectrum linking.

Compares the eigenvalue-scaled eigenvectors lambda_j v_j of an
equation-driven K* and a data-driven K_hat:

    d = 1/P sum_i min_j || lambda*_i v*_i - lambda^_j v^_j ||_2
    s = 1/P sum_i max_j |<lambda*_i v*_i, lambda^_j v^_j>| / (||.|| ||.||)

and runs the candidate-vs-truth confusion experiment built on them.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from speclink.errors import BasisMismatchError, InputDataError, PipelineError
from speclink.koopman import build_pairs, decompose, estimate
from speclink.operators import builtin_library, derive_koopman, library_by_name
from speclink.report_schema import (
    CandidateVerdict,
    CellDetail,
    ConfusionMatrix,
    ExperimentResult,
    IdentificationResult,
    LinkScore,
)
from speclink.schemas import ExperimentConfig, KoopmanMatrix, PdeSpec, SpectralDecomposition
from speclink.simulate import ensemble, simulate_many

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int, str], None]


def _check_dimensions(star: SpectralDecomposition, hat: SpectralDecomposition) -> None:
    if star.dimension != hat.dimension:
        raise BasisMismatchError(f"decompositions differ in dimension: {star.dimension} vs {hat.dimension}")


def _distance_table(star: SpectralDecomposition, hat: SpectralDecomposition) -> np.ndarray:
    ws, wh = star.scaled_vectors, hat.scaled_vectors
    return np.linalg.norm(ws[:, :, np.newaxis] - wh[:, np.newaxis, :], axis=0)


def _similarity_table(star: SpectralDecomposition, hat: SpectralDecomposition) -> np.ndarray:
    """Normalised |<w*_i, w^_j>|; NaN where either scaled vector vanishes."""
    ws, wh = star.scaled_vectors, hat.scaled_vectors
    norms = np.outer(np.linalg.norm(ws, axis=0), np.linalg.norm(wh, axis=0))
    inner = np.abs(ws.conj().T @ wh)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norms > 0.0, inner / np.where(norms > 0.0, norms, 1.0), np.nan)


def _best_similarities(table: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    best = np.zeros(table.shape[0])
    matches = []
    for i, row in enumerate(table):
        usable = ~np.isnan(row)
        if not usable.any():
            matches.append(-1)
            continue
        j = int(np.nanargmax(row))
        best[i] = min(row[j], 1.0)
        matches.append(j)
    return best, matches


def distance_d(star: SpectralDecomposition, hat: SpectralDecomposition) -> float:
    _check_dimensions(star, hat)
    return float(_distance_table(star, hat).min(axis=1).mean())


def similarity_s(star: SpectralDecomposition, hat: SpectralDecomposition) -> float:
    _check_dimensions(star, hat)
    best, _ = _best_similarities(_similarity_table(star, hat))
    return float(best.mean())


def link_score(star: SpectralDecomposition, hat: SpectralDecomposition) -> LinkScore:
    """d and s together with the per-pair matches behind them."""
    _check_dimensions(star, hat)
    distances = _distance_table(star, hat)
    best, s_matches = _best_similarities(_similarity_table(star, hat))
    return LinkScore(
        d=float(distances.min(axis=1).mean()),
        s=float(np.clip(best.mean(), 0.0, 1.0)),
        d_matches=[int(j) for j in distances.argmin(axis=1)],
        s_matches=s_matches,
    )


def frobenius_discrepancy(hat: KoopmanMatrix, star: KoopmanMatrix) -> float:
    if hat.basis != star.basis:
        raise BasisMismatchError(f"Koopman matrices live on different bases: {hat.basis.sizes} vs {star.basis.sizes}")
    return float(np.linalg.norm(hat.entries - star.entries, "fro"))


def identify(
    hat: KoopmanMatrix,
    candidates: Sequence[Tuple[PdeSpec, KoopmanMatrix]],
    hat_decomposition: Optional[SpectralDecomposition] = None,
    candidate_decompositions: Optional[Dict[str, SpectralDecomposition]] = None,
    separation: float = 0.0,
) -> IdentificationResult:
    """Score every candidate against K_hat and rank them three ways.

    The headline winner is the s-ranking leader; ``rankings_agree`` flags
    whether d, s and the Frobenius discrepancy pick the same candidate.
    Decompositions not supplied are computed with ``separation`` (see
    ``koopman.decompose``).
    """
    if not candidates:
        raise InputDataError("identify needs at least one candidate")
    hat_dec = hat_decomposition if hat_decomposition is not None else decompose(hat, separation)
    candidate_decompositions = candidate_decompositions or {}

    verdicts = []
    for spec, star in candidates:
        star_dec = candidate_decompositions.get(spec.name)
        if star_dec is None:
            star_dec = decompose(star, separation)
        score = link_score(star_dec, hat_dec)
        verdicts.append(
            CandidateVerdict(
                name=spec.name,
                d=score.d,
                s=score.s,
                frobenius=frobenius_discrepancy(hat, star),
                d_matches=score.d_matches,
                s_matches=score.s_matches,
            )
        )

    result = IdentificationResult.from_verdicts(verdicts)
    if not result.rankings_agree:
        logger.warning(
            f"Rankings disagree: d->{result.ranking_d[0]}, s->{result.ranking_s[0]}, "
            f"frobenius->{result.ranking_frobenius[0]}"
        )
    return result


def _resolve_library(config: ExperimentConfig) -> Tuple[List[PdeSpec], List[PdeSpec]]:
    library = list(config.candidates) if config.candidates else builtin_library(config.basis.dims, config.physics)
    true_names = config.truths or [spec.name for spec in library]
    truths = [library_by_name(library, name) for name in true_names]
    return library, truths


def _run_truth_seed(
    config: ExperimentConfig,
    truth: PdeSpec,
    seed: int,
    candidates: List[Tuple[PdeSpec, KoopmanMatrix, SpectralDecomposition]],
) -> List[CellDetail]:
    ic_config = config.initial_condition
    try:
        ics = ensemble(ic_config.for_seed(seed), ic_config.ensemble_size)
        trajectories = simulate_many(truth, ics, config.basis, config.dt, config.horizon)
        hat = estimate(build_pairs(trajectories), config.dt, label=f"{truth.name}/seed={seed}")
        hat_dec = decompose(hat, config.spectral_separation)
    except Exception as e:
        raise PipelineError(truth.name, None, seed, e) from e

    cells = []
    for spec, star, star_dec in candidates:
        try:
            score = link_score(star_dec, hat_dec)
            cells.append(
                CellDetail(
                    true_name=truth.name,
                    candidate_name=spec.name,
                    seed=seed,
                    d=score.d,
                    s=score.s,
                    frobenius=frobenius_discrepancy(hat, star),
                    data_rank=hat.data_rank or 0,
                    hat_max_residual=hat_dec.max_residual,
                    star_max_residual=star_dec.max_residual,
                )
            )
        except Exception as e:
            raise PipelineError(truth.name, spec.name, seed, e) from e
    return cells


def confusion_experiment(
    config: ExperimentConfig,
    progress_callback: Optional[ProgressCallback] = None,
) -> ExperimentResult:
    """Candidate-vs-truth confusion matrices for d, s and the Frobenius discrepancy.

    Rows are candidates, columns the PDEs that generated the data; each cell is
    the mean over the configured seeds.
    """
    library, truths = _resolve_library(config)
    seeds = list(config.initial_condition.seeds)

    candidates = []
    for spec in library:
        try:
            star = derive_koopman(spec, config.basis, config.dt)
            candidates.append((spec, star, decompose(star, config.spectral_separation)))
        except Exception as e:
            raise PipelineError(None, spec.name, None, e) from e

    tasks = [(truth, seed) for truth in truths for seed in seeds]
    logger.info(f"Confusion experiment: {len(truths)} truths x {len(library)} candidates x {len(seeds)} seeds")

    results: Dict[Tuple[str, int], List[CellDetail]] = {}
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                (truth.name, seed): pool.submit(_run_truth_seed, config, truth, seed, candidates)
                for truth, seed in tasks
            }
            for idx, (key, future) in enumerate(futures.items()):
                results[key] = future.result()
                if progress_callback:
                    progress_callback(idx + 1, len(tasks), f"{key[0]} seed {key[1]}")
    else:
        for idx, (truth, seed) in enumerate(tasks):
            results[(truth.name, seed)] = _run_truth_seed(config, truth, seed, candidates)
            if progress_callback:
                progress_callback(idx + 1, len(tasks), f"{truth.name} seed {seed}")

    # Fixed reduction order regardless of completion order.
    details = [cell for truth, seed in tasks for cell in results[(truth.name, seed)]]
    candidate_names = [spec.name for spec, _, _ in candidates]
    true_names = [truth.name for truth in truths]

    def table(metric: str) -> np.ndarray:
        values = np.zeros((len(candidate_names), len(true_names)))
        for i, candidate in enumerate(candidate_names):
            for j, true in enumerate(true_names):
                cells = [getattr(c, metric) for c in details if c.candidate_name == candidate and c.true_name == true]
                values[i, j] = float(np.mean(cells))
        return values

    distance = ConfusionMatrix(candidate_names=candidate_names, true_names=true_names, values=table("d"), metric="d")
    similarity = ConfusionMatrix(candidate_names=candidate_names, true_names=true_names, values=table("s"), metric="s")
    frobenius = ConfusionMatrix(
        candidate_names=candidate_names, true_names=true_names, values=table("frobenius"), metric="frobenius"
    )

    identification = {}
    for j, true in enumerate(true_names):
        verdicts = [
            CandidateVerdict(
                name=candidate,
                d=float(distance.values[i, j]),
                s=float(similarity.values[i, j]),
                frobenius=float(frobenius.values[i, j]),
            )
            for i, candidate in enumerate(candidate_names)
        ]
        identification[true] = IdentificationResult.from_verdicts(verdicts)

    for metric, matrix in (("d", distance), ("s", similarity), ("frobenius", frobenius)):
        for true, ok in matrix.diagonal_dominance().items():
            if not ok and true in candidate_names:
                logger.warning(f"{metric}: column {true} is optimal at {matrix.best_candidate(true)}, not on the diagonal")

    return ExperimentResult(
        config=config,
        distance=distance,
        similarity=similarity,
        frobenius=frobenius,
        identification=identification,
        details=details,
    )

