"""
Pydantic models for the speclink domain: Chebyshev bases, node/coefficient
vectors, PDE specifications, Koopman matrices, trajectories and the
configuration of identification experiments.

Numerical payloads are numpy arrays inside the models and plain (nested)
lists on the JSON side; complex numbers travel as two-element [re, im] arrays.
"""

from __future__ import annotations

import math
from typing import Annotated, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)


# =============================================================================
# Array field types
# =============================================================================

def _real_array(ndim: int):
    def coerce(value):
        if isinstance(value, np.ndarray) and np.iscomplexobj(value):
            raise ValueError("expected real values, got a complex array")
        arr = np.array(value, dtype=float)
        if arr.ndim != ndim:
            raise ValueError(f"expected a {ndim}-d real array, got shape {arr.shape}")
        return arr
    return coerce


def _complex_array(ndim: int):
    def coerce(value):
        arr = np.asarray(value)
        if np.iscomplexobj(arr) and arr.ndim == ndim:
            return arr.astype(complex)
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == ndim:
            return arr.astype(complex)
        if arr.ndim == ndim + 1 and arr.shape[-1] == 2:
            return arr[..., 0] + 1j * arr[..., 1]
        raise ValueError(f"expected a {ndim}-d complex array or [re, im] pairs, got shape {arr.shape}")
    return coerce


def _real_to_list(arr: np.ndarray) -> list:
    return arr.tolist()


def _complex_to_pairs(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


RealVector = Annotated[
    np.ndarray,
    BeforeValidator(_real_array(1)),
    PlainSerializer(_real_to_list, return_type=list, when_used="json"),
]
RealMatrix = Annotated[
    np.ndarray,
    BeforeValidator(_real_array(2)),
    PlainSerializer(_real_to_list, return_type=list, when_used="json"),
]
ComplexVector = Annotated[
    np.ndarray,
    BeforeValidator(_complex_array(1)),
    PlainSerializer(_complex_to_pairs, return_type=list, when_used="json"),
]
ComplexMatrix = Annotated[
    np.ndarray,
    BeforeValidator(_complex_array(2)),
    PlainSerializer(_complex_to_pairs, return_type=list, when_used="json"),
]


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# =============================================================================
# Chebyshev basis and vectors
# =============================================================================

class BasisSpec(BaseModel):
    """Tensor-product Chebyshev basis on [-1, 1]^D.

    Flat vectors are ordered with axis 0 varying fastest:
    n = n_0 + M_0 * n_1 + M_0 * M_1 * n_2 + ...
    """

    model_config = ConfigDict(frozen=True)

    dims: int = Field(ge=1, description="Number of spatial dimensions D")
    sizes: Tuple[int, ...] = Field(description="Per-axis resolution M_d, each even and >= 2")

    @model_validator(mode="after")
    def _check_sizes(self) -> "BasisSpec":
        if len(self.sizes) != self.dims:
            raise ValueError(f"sizes {self.sizes} do not match dims={self.dims}")
        for size in self.sizes:
            if size < 2 or size % 2:
                raise ValueError(f"every resolution must be even and >= 2, got {size}")
        return self

    @classmethod
    def square(cls, size: int, dims: int = 2) -> "BasisSpec":
        return cls(dims=dims, sizes=(size,) * dims)

    @property
    def total_size(self) -> int:
        return math.prod(self.sizes)


class NodeVector(_ArrayModel):
    """Samples u(p_n) of a field on the interior Chebyshev grid."""

    basis: BasisSpec
    values: RealVector

    @model_validator(mode="after")
    def _check_length(self) -> "NodeVector":
        if self.values.shape != (self.basis.total_size,):
            raise ValueError(f"expected {self.basis.total_size} node values, got {self.values.shape[0]}")
        return self


class CoeffVector(_ArrayModel):
    """Scaled Chebyshev coefficients (the orthonormal DCT-II of the node samples)."""

    basis: BasisSpec
    values: RealVector

    @model_validator(mode="after")
    def _check_length(self) -> "CoeffVector":
        if self.values.shape != (self.basis.total_size,):
            raise ValueError(f"expected {self.basis.total_size} coefficients, got {self.values.shape[0]}")
        return self


class LinearOperatorMatrix(_ArrayModel):
    """Dense P x P matrix acting on coefficient vectors of one basis."""

    basis: BasisSpec
    entries: RealMatrix

    @model_validator(mode="after")
    def _check_shape(self) -> "LinearOperatorMatrix":
        size = self.basis.total_size
        if self.entries.shape != (size, size):
            raise ValueError(f"expected a {size}x{size} matrix, got {self.entries.shape}")
        return self


class GeneratorMatrix(LinearOperatorMatrix):
    """Coefficient-space matrix N of a spatial differential operator."""


# =============================================================================
# PDE candidates and Koopman matrices
# =============================================================================

class PdeTerm(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    coefficient: float = Field(alias="coeff", description="Real weight of the term")
    derivative_orders: Tuple[int, ...] = Field(alias="orders", description="Derivative order per axis")

    @field_validator("derivative_orders")
    @classmethod
    def _non_negative(cls, orders: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(order < 0 for order in orders):
            raise ValueError(f"derivative orders must be non-negative, got {orders}")
        return orders


class PdeSpec(BaseModel):
    """Linear PDE u_t = sum_k c_k * d^(o_k) u as a weighted sum of derivative terms."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = Field(min_length=1)
    dims: int = Field(ge=1)
    terms: List[PdeTerm] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_terms(self) -> "PdeSpec":
        for term in self.terms:
            if len(term.derivative_orders) != self.dims:
                raise ValueError(
                    f"term orders {term.derivative_orders} do not match dims={self.dims} in {self.name!r}"
                )
        return self


class PhysicalParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    c_x: float = Field(default=1.0, description="Advection speed along x")
    c_y: float = Field(default=1.0, description="Advection speed along y")
    nu: float = Field(default=0.1, ge=0.0, description="Diffusivity")


Provenance = Literal["equation_driven", "data_driven"]


class KoopmanMatrix(_ArrayModel):
    """One-step Koopman matrix on scaled Chebyshev coefficients."""

    basis: BasisSpec
    dt: float = Field(gt=0.0)
    entries: RealMatrix
    provenance: Provenance
    label: Optional[str] = Field(default=None, description="PDE name or data source")
    data_rank: Optional[int] = Field(default=None, description="Retained singular values of A0 (data-driven only)")

    @model_validator(mode="after")
    def _check_shape(self) -> "KoopmanMatrix":
        size = self.basis.total_size
        if self.entries.shape != (size, size):
            raise ValueError(f"expected a {size}x{size} matrix, got {self.entries.shape}")
        return self


# =============================================================================
# Initial conditions and trajectories
# =============================================================================

class InitialCondition(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian", "random_smooth"] = "gaussian"
    center: Optional[Tuple[float, ...]] = Field(default=None, description="Gaussian center; origin when omitted")
    width: float = Field(default=0.3, gt=0.0, description="Gaussian width sigma")
    amplitude: float = Field(default=1.0, description="Gaussian amplitude A")
    seed: int = Field(default=1, ge=0, lt=2**64)
    decay: float = Field(default=0.8, gt=0.0, lt=1.0, description="Spectral decay rate rho")
    member: int = Field(default=0, ge=0, description="Ensemble member index")

    @field_validator("center")
    @classmethod
    def _inside_domain(cls, center: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if center is not None and any(abs(c) > 1.0 for c in center):
            raise ValueError(f"center {center} lies outside [-1, 1]^D")
        return center


class Trajectory(_ArrayModel):
    """Coefficient snapshots a_0 ... a_{N-1}, one row per snapshot."""

    basis: BasisSpec
    dt: float = Field(gt=0.0)
    pde_name: str
    snapshots: RealMatrix

    @model_validator(mode="after")
    def _check_snapshots(self) -> "Trajectory":
        if self.snapshots.shape[0] < 2:
            raise ValueError(f"a trajectory needs at least 2 snapshots, got {self.snapshots.shape[0]}")
        if self.snapshots.shape[1] != self.basis.total_size:
            raise ValueError(
                f"snapshot length {self.snapshots.shape[1]} does not match basis size {self.basis.total_size}"
            )
        return self

    @property
    def n_snapshots(self) -> int:
        return self.snapshots.shape[0]


# =============================================================================
# Koopman estimation and spectra
# =============================================================================

class SnapshotPairs(_ArrayModel):
    """Column-shifted snapshot matrices A0 = (a_0 ... a_{N-2}), A1 = (a_1 ... a_{N-1})."""

    basis: BasisSpec
    A0: RealMatrix
    A1: RealMatrix

    @model_validator(mode="after")
    def _check_shapes(self) -> "SnapshotPairs":
        if self.A0.shape != self.A1.shape:
            raise ValueError(f"A0 {self.A0.shape} and A1 {self.A1.shape} differ in shape")
        if self.A0.shape[0] != self.basis.total_size:
            raise ValueError(f"expected {self.basis.total_size} rows, got {self.A0.shape[0]}")
        return self

    @property
    def n_pairs(self) -> int:
        return self.A0.shape[1]


class SpectralDecomposition(_ArrayModel):
    """Eigenpairs with unit-norm, phase-fixed eigenvectors stored as columns."""

    eigenvalues: ComplexVector
    eigenvectors: ComplexMatrix
    residuals: RealVector

    @model_validator(mode="after")
    def _check_shapes(self) -> "SpectralDecomposition":
        size = self.eigenvalues.shape[0]
        if self.eigenvectors.shape != (size, size) or self.residuals.shape != (size,):
            raise ValueError("eigenvalues, eigenvectors and residuals disagree in dimension")
        return self

    @property
    def dimension(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    @property
    def scaled_vectors(self) -> np.ndarray:
        """Columns lambda_j * v_j."""
        return self.eigenvectors * self.eigenvalues[np.newaxis, :]


class KoopmanModes(_ArrayModel):
    """Node-space Koopman modes xi_j = C^T v_j stored as columns."""

    basis: BasisSpec
    modes: ComplexMatrix


# =============================================================================
# Experiment configuration
# =============================================================================

class InitialConditionConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian", "random_smooth"] = "random_smooth"
    seeds: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5], min_length=1)
    ensemble_size: int = Field(default=16, ge=1, description="ICs pooled into one estimate per seed")
    center: Optional[Tuple[float, ...]] = None
    width: float = Field(default=0.3, gt=0.0)
    amplitude: float = 1.0
    decay: float = Field(default=0.8, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_ensemble(self) -> "InitialConditionConfig":
        if self.kind == "gaussian" and self.ensemble_size != 1:
            raise ValueError("a gaussian initial condition cannot form an ensemble; use ensemble_size=1")
        return self

    def for_seed(self, seed: int) -> InitialCondition:
        return InitialCondition(
            kind=self.kind,
            center=self.center,
            width=self.width,
            amplitude=self.amplitude,
            seed=seed,
            decay=self.decay,
        )


class ExperimentConfig(BaseModel):
    """Everything a confusion experiment needs; JSON files validate into this model."""

    model_config = ConfigDict(frozen=True)

    basis: BasisSpec = Field(default_factory=lambda: BasisSpec.square(8, dims=2))
    dt: float = Field(default=5e-4, gt=0.0)
    horizon: float = Field(default=0.5, gt=0.0, description="Simulated horizon T")
    physics: PhysicalParams = Field(default_factory=PhysicalParams)
    candidates: Optional[List[PdeSpec]] = Field(default=None, description="Custom library; builtin when omitted")
    truths: Optional[List[str]] = Field(default=None, description="Generating PDE names; all candidates when omitted")
    initial_condition: InitialConditionConfig = Field(default_factory=InitialConditionConfig)
    spectral_separation: float = Field(
        default=1.0, ge=0.0, description="Shared diagonal shift for eigendecompositions; 0 is the literal eig"
    )
    workers: int = Field(default=1, ge=1)
    out_dir: str = "output"

    @model_validator(mode="after")
    def _check_config(self) -> "ExperimentConfig":
        if self.horizon < self.dt:
            raise ValueError(f"horizon {self.horizon} is shorter than dt {self.dt}")
        if self.candidates is not None:
            names = [spec.name for spec in self.candidates]
            if len(set(names)) != len(names):
                raise ValueError(f"candidate names must be unique, got {names}")
            for spec in self.candidates:
                if spec.dims != self.basis.dims:
                    raise ValueError(f"candidate {spec.name!r} has dims={spec.dims}, basis has {self.basis.dims}")
        if self.truths is not None and len(set(self.truths)) != len(self.truths):
            raise ValueError(f"true PDE names must be unique, got {self.truths}")
        return self
