"""
Tensor-product Chebyshev basis on [-1, 1]^D.

Samples live on the interior Chebyshev nodes; the orthonormal DCT-II maps them
to scaled coefficients a_m = gamma_m^-1 * (plain Chebyshev coefficient), and
differentiation acts on those coefficients through Kronecker-structured
matrices. All matrices are dense.

Flat ordering: axis 0 varies fastest, so a flat vector reshaped with
``order="F"`` gives an array indexed ``[n_0, n_1, ..., n_{D-1}]`` and the
full operators are ``A_{D-1} kron ... kron A_0``.
"""

from functools import reduce
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from speclink.errors import ConfigError, InputDataError
from speclink.schemas import BasisSpec, CoeffVector, LinearOperatorMatrix, NodeVector


def _check_resolution(size: int) -> int:
    if isinstance(size, bool) or not isinstance(size, (int, np.integer)):
        raise ConfigError(f"resolution must be an integer, got {size!r}")
    if size < 2 or size % 2:
        raise ConfigError(f"resolution must be even and >= 2, got {size}")
    return int(size)


def gamma_1d(size: int) -> np.ndarray:
    """Per-axis scaling factors gamma_0 = M^-1/2, gamma_m = (2/M)^1/2."""
    size = _check_resolution(size)
    gamma = np.full(size, np.sqrt(2.0 / size))
    gamma[0] = np.sqrt(1.0 / size)
    return gamma


def nodes_1d(size: int) -> np.ndarray:
    """Interior Chebyshev nodes p_n = cos((2n+1) pi / 2M), strictly decreasing."""
    size = _check_resolution(size)
    n = np.arange(size)
    return np.cos((2 * n + 1) * np.pi / (2 * size))


def dct_matrix_1d(size: int) -> np.ndarray:
    """Orthonormal DCT-II matrix C[m, n] = gamma_m cos(m (2n+1) pi / 2M)."""
    size = _check_resolution(size)
    m = np.arange(size)[:, np.newaxis]
    n = np.arange(size)[np.newaxis, :]
    return gamma_1d(size)[:, np.newaxis] * np.cos(m * (2 * n + 1) * np.pi / (2 * size))


def kron_axes(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product with the first matrix acting on the fastest axis."""
    return reduce(np.kron, reversed(list(mats)))


def dct_matrix(basis: BasisSpec) -> np.ndarray:
    """Full P x P transform C = C_{M_D} kron ... kron C_{M_1}."""
    return kron_axes([dct_matrix_1d(size) for size in basis.sizes])


def _apply_per_axis(values: np.ndarray, basis: BasisSpec, mats: Sequence[np.ndarray]) -> np.ndarray:
    grid = values.reshape(basis.sizes, order="F")
    for axis, mat in enumerate(mats):
        grid = np.moveaxis(np.tensordot(mat, grid, axes=([1], [axis])), 0, axis)
    return grid.reshape(-1, order="F")


def forward(u: NodeVector) -> CoeffVector:
    """Node samples to scaled coefficients, a = C u."""
    mats = [dct_matrix_1d(size) for size in u.basis.sizes]
    return CoeffVector(basis=u.basis, values=_apply_per_axis(u.values, u.basis, mats))


def inverse(a: CoeffVector) -> NodeVector:
    """Scaled coefficients to node samples, u = C^T a."""
    mats = [dct_matrix_1d(size).T for size in a.basis.sizes]
    return NodeVector(basis=a.basis, values=_apply_per_axis(a.values, a.basis, mats))


def node_grid(basis: BasisSpec) -> np.ndarray:
    """P x D array of node coordinates in flat order."""
    mesh = np.meshgrid(*[nodes_1d(size) for size in basis.sizes], indexing="ij")
    return np.stack([axis.ravel(order="F") for axis in mesh], axis=1)


def multi_indices(basis: BasisSpec) -> np.ndarray:
    """P x D array of coefficient multi-indices (m_1, ..., m_D) in flat order."""
    mesh = np.meshgrid(*[np.arange(size) for size in basis.sizes], indexing="ij")
    return np.stack([axis.ravel(order="F") for axis in mesh], axis=1)


def sample(basis: BasisSpec, func) -> NodeVector:
    """Sample ``func(q_1, ..., q_D)`` (vectorised over nodes) on the grid."""
    grid = node_grid(basis)
    values = np.asarray(func(*grid.T), dtype=float)
    return NodeVector(basis=basis, values=np.broadcast_to(values, (basis.total_size,)))


def eval_at(a: CoeffVector, q: Sequence[float]) -> float:
    """Evaluate sum_m a_m gamma_m prod_d T_{m_d}(q_d) at a point of the hypercube."""
    point = np.asarray(q, dtype=float).reshape(-1)
    if point.shape != (a.basis.dims,):
        raise InputDataError(f"point must have {a.basis.dims} coordinates, got {point.shape[0]}")
    if np.any(np.abs(point) > 1.0) or not np.all(np.isfinite(point)):
        raise InputDataError(f"point {tuple(point)} lies outside [-1, 1]^{a.basis.dims}")
    weights = [
        gamma_1d(size) * npcheb.chebvander(coord, size - 1)
        for size, coord in zip(a.basis.sizes, point)
    ]
    return float(kron_axes([w.reshape(-1) for w in weights]) @ a.values)


def diff_matrix_1d(size: int, scaled: bool = True) -> np.ndarray:
    """Chebyshev coefficient derivative matrix.

    Unscaled: D[m, n] = 2n / c_m for n > m with n - m odd (c_0 = 2, else 1).
    Scaled: Gamma^-1 D Gamma, acting on the DCT-II coefficients.
    Both are strictly upper triangular.
    """
    size = _check_resolution(size)
    m = np.arange(size)[:, np.newaxis]
    n = np.arange(size)[np.newaxis, :]
    c = np.where(m == 0, 2.0, 1.0)
    mask = (n > m) & ((n - m) % 2 == 1)
    unscaled = np.where(mask, 2.0 * n / c, 0.0)
    if not scaled:
        return unscaled
    gamma = gamma_1d(size)
    return unscaled * gamma[np.newaxis, :] / gamma[:, np.newaxis]


def diff_operator(basis: BasisSpec, axis: int) -> LinearOperatorMatrix:
    """Partial derivative along ``axis`` on flat coefficient vectors.

    ``axis`` is 0-based: axis d here is the mathematical d+1 (x is 0, y is 1).
    """
    if not 0 <= axis < basis.dims:
        raise ConfigError(f"axis {axis} out of range for a {basis.dims}-d basis")
    mats = [np.eye(size) for size in basis.sizes]
    mats[axis] = diff_matrix_1d(basis.sizes[axis])
    return LinearOperatorMatrix(basis=basis, entries=kron_axes(mats))


def node_derivative(u: NodeVector, axis: int, order: int = 1) -> NodeVector:
    """Node-space derivative C^T (D^(axis))^order C u."""
    op = np.linalg.matrix_power(diff_operator(u.basis, axis).entries, order)
    coeffs = forward(u)
    return inverse(CoeffVector(basis=u.basis, values=op @ coeffs.values))
