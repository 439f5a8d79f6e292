"""
Observation-driven Koopman matrices and their spectra.

K_hat = A1 A0^+ is the least-squares one-step map on coefficient snapshots.
Eigenpairs are normalised (unit norm, largest-modulus entry real and
non-negative) and ordered deterministically so that phase-sensitive
comparisons between spectra are reproducible.
"""

import logging
from typing import Sequence, Union

import numpy as np
from scipy import linalg

from speclink.chebyshev import dct_matrix
from speclink.errors import (
    BasisMismatchError,
    ConfigError,
    DegenerateDataError,
    EigensolverError,
    InputDataError,
    NonFiniteError,
)
from speclink.schemas import (
    BasisSpec,
    KoopmanMatrix,
    KoopmanModes,
    SnapshotPairs,
    SpectralDecomposition,
    Trajectory,
)

logger = logging.getLogger(__name__)


def build_pairs(trajectories: Union[Trajectory, Sequence[Trajectory]]) -> SnapshotPairs:
    """Shifted snapshot matrices, pooled column-wise over several trajectories.

    A single trajectory of a' = N a only spans the Krylov space of its initial
    condition, so recovering a full K needs pairs from several ICs.
    """
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    if not trajectories:
        raise InputDataError("no trajectories given")

    first = trajectories[0]
    blocks0, blocks1 = [], []
    for traj in trajectories:
        if traj.basis != first.basis:
            raise BasisMismatchError(f"trajectory bases differ: {first.basis.sizes} vs {traj.basis.sizes}")
        if not np.isclose(traj.dt, first.dt, rtol=1e-12, atol=0.0):
            raise InputDataError(f"trajectory time steps differ: {first.dt} vs {traj.dt}")
        if traj.n_snapshots < 2:
            raise InputDataError(f"trajectory {traj.pde_name!r} has fewer than 2 snapshots")
        blocks0.append(traj.snapshots[:-1].T)
        blocks1.append(traj.snapshots[1:].T)

    return SnapshotPairs(basis=first.basis, A0=np.hstack(blocks0), A1=np.hstack(blocks1))


def estimate(pairs: SnapshotPairs, dt: float, label: str | None = None) -> KoopmanMatrix:
    """K_hat = A1 A0^+ with singular values below P * eps * sigma_max dropped."""
    if pairs.n_pairs < 1:
        raise InputDataError("at least one snapshot pair is required")
    if not (np.all(np.isfinite(pairs.A0)) and np.all(np.isfinite(pairs.A1))):
        raise NonFiniteError("snapshot data contains non-finite values")
    if not np.any(pairs.A0):
        raise DegenerateDataError("snapshot matrix A0 is identically zero; nothing to regress on")

    size = pairs.basis.total_size
    u, sigma, vh = linalg.svd(pairs.A0, full_matrices=False)
    cutoff = size * np.finfo(float).eps * sigma[0]
    rank = int(np.count_nonzero(sigma > cutoff))
    pinv = (vh[:rank].T / sigma[:rank]) @ u[:, :rank].T
    entries = pairs.A1 @ pinv

    if rank < size:
        logger.warning(f"Snapshot data spans only {rank} of {size} directions; K_hat is the minimum-norm fit")
    logger.info(f"Estimated K_hat from {pairs.n_pairs} pairs (rank {rank}/{size})")
    return KoopmanMatrix(
        basis=pairs.basis,
        dt=dt,
        entries=entries,
        provenance="data_driven",
        label=label,
        data_rank=rank,
    )


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    vector = vector / np.linalg.norm(vector)
    pivot = vector[int(np.argmax(np.abs(vector)))]
    return vector * (np.conj(pivot) / abs(pivot))


def _order_key(eigenvalue: complex, vector: np.ndarray) -> tuple:
    entries = tuple(x for z in vector for x in (z.real, z.imag))
    return (-abs(eigenvalue), -eigenvalue.real, -eigenvalue.imag, entries)


def separation_shift(size: int) -> np.ndarray:
    """diag(0, 1/P, ..., (P-1)/P)."""
    return np.diag(np.arange(size) / size)


def decompose(koopman: KoopmanMatrix, separation: float = 0.0) -> SpectralDecomposition:
    """Normalised, deterministically ordered eigendecomposition with residuals.

    Order: descending |lambda|, then descending Re, then descending Im, then the
    phase-fixed vectors lexicographically.

    With ``separation`` > 0 the vectors are the eigenvectors of
    K + separation * separation_shift(P) and each eigenvalue is the Rayleigh
    quotient v^H K v. The builtin K* are unipotent and defective, so their
    literal eigenvectors collapse onto the kernel of N while those of a nearby
    K_hat scatter; the shared diagonal shift gives every matrix distinct
    eigenvalues and eigenvectors that move continuously with K.
    Residuals are always taken against K itself.
    """
    entries = koopman.entries
    if not np.all(np.isfinite(entries)):
        raise NonFiniteError("cannot decompose a matrix with non-finite entries")
    if not (np.isfinite(separation) and separation >= 0.0):
        raise ConfigError(f"spectral separation must be a non-negative number, got {separation}")

    target = entries + separation * separation_shift(entries.shape[0]) if separation else entries
    try:
        eigenvalues, eigenvectors = linalg.eig(target)
    except linalg.LinAlgError as e:
        cond = np.linalg.cond(target)
        norm = np.linalg.norm(target, "fro")
        raise EigensolverError(f"eigensolver failed ({e}); cond={cond:.3e}, ||K||_F={norm:.3e}") from e

    vectors = [_fix_phase(eigenvectors[:, j]) for j in range(eigenvectors.shape[1])]
    if separation:
        eigenvalues = np.asarray([np.vdot(v, entries @ v) for v in vectors], dtype=complex)
    order = sorted(range(len(vectors)), key=lambda j: _order_key(eigenvalues[j], vectors[j]))
    eigenvalues = np.asarray([eigenvalues[j] for j in order], dtype=complex)
    eigenvectors = np.column_stack([vectors[j] for j in order]).astype(complex)

    residuals = np.linalg.norm(entries @ eigenvectors - eigenvectors * eigenvalues[np.newaxis, :], axis=0)
    logger.debug(f"Decomposed {koopman.label or koopman.provenance}: max residual {residuals.max():.3e}")
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors, residuals=residuals)


def modes(decomposition: SpectralDecomposition, basis: BasisSpec) -> KoopmanModes:
    """Node-space modes xi_j = C^T v_j."""
    if decomposition.dimension != basis.total_size:
        raise BasisMismatchError(
            f"decomposition has dimension {decomposition.dimension}, basis has {basis.total_size}"
        )
    transform = dct_matrix(basis).T
    vectors = decomposition.eigenvectors
    return KoopmanModes(basis=basis, modes=transform @ vectors.real + 1j * (transform @ vectors.imag))
