import math

import numpy as np
import pytest

from speclink.schemas import BasisSpec, CoeffVector, KoopmanMatrix, SpectralDecomposition


def taylor_exponential(matrix: np.ndarray) -> np.ndarray:
    """exp(A) of a nilpotent A from its terminating power series."""
    size = matrix.shape[0]
    result = np.eye(size)
    term = np.eye(size)
    for j in range(1, size + 1):
        term = term @ matrix / j
        if not np.any(term):
            break
        result = result + term
    return result


def brute_force_scores(star: SpectralDecomposition, hat: SpectralDecomposition) -> tuple:
    """d and s by plain loops over every eigenpair combination."""
    size = star.dimension
    d_total, s_total = 0.0, 0.0
    for i in range(size):
        wi = star.eigenvalues[i] * star.eigenvectors[:, i]
        best_d, best_s = math.inf, None
        for j in range(size):
            wj = hat.eigenvalues[j] * hat.eigenvectors[:, j]
            diff = math.sqrt(sum(abs(x - y) ** 2 for x, y in zip(wi, wj)))
            best_d = min(best_d, diff)
            ni = math.sqrt(sum(abs(x) ** 2 for x in wi))
            nj = math.sqrt(sum(abs(y) ** 2 for y in wj))
            if ni == 0.0 or nj == 0.0:
                continue
            inner = abs(sum(x.conjugate() * y for x, y in zip(wi, wj))) / (ni * nj)
            best_s = inner if best_s is None else max(best_s, inner)
        d_total += best_d
        s_total += best_s or 0.0
    return d_total / size, s_total / size


def random_decomposition(rng: np.random.Generator, size: int) -> SpectralDecomposition:
    values = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    vectors = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    vectors /= np.linalg.norm(vectors, axis=0)
    return SpectralDecomposition(eigenvalues=values, eigenvectors=vectors, residuals=np.zeros(size))


def koopman(entries, dt: float = 0.1, provenance: str = "equation_driven", label=None) -> KoopmanMatrix:
    entries = np.asarray(entries, dtype=float)
    size = entries.shape[0]
    return KoopmanMatrix(
        basis=BasisSpec(dims=1, sizes=(size,)),
        dt=dt,
        entries=entries,
        provenance=provenance,
        label=label,
    )


@pytest.fixture
def basis_4x4() -> BasisSpec:
    return BasisSpec.square(4, dims=2)


@pytest.fixture
def basis_8x8() -> BasisSpec:
    return BasisSpec.square(8, dims=2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def random_coeffs(rng):
    def make(basis: BasisSpec) -> CoeffVector:
        return CoeffVector(basis=basis, values=rng.standard_normal(basis.total_size))
    return make
