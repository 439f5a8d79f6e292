"""
Candidate PDE library and equation-driven Koopman matrices.

A linear operator N[u] = sum_k c_k prod_d d^{o_kd}/dq_d^{o_kd} u is assembled
on scaled Chebyshev coefficients from the Kronecker derivative operators,
and K* = exp(dt N) is its one-step propagator.
"""

import logging
from typing import List

import numpy as np
from scipy import linalg

from speclink.chebyshev import diff_operator
from speclink.errors import BasisMismatchError, ConfigError, NonFiniteError
from speclink.schemas import (
    BasisSpec,
    GeneratorMatrix,
    KoopmanMatrix,
    PdeSpec,
    PdeTerm,
    PhysicalParams,
)

logger = logging.getLogger(__name__)

ADVECTION_X = "advection-x"
ADVECTION_Y = "advection-y"
DIFFUSION = "diffusion"
ADVECTION_DIFFUSION = "advection-diffusion"

BUILTIN_NAMES = (ADVECTION_X, ADVECTION_Y, DIFFUSION, ADVECTION_DIFFUSION)

DISPLAY_LABELS = {
    ADVECTION_X: "Adv-X",
    ADVECTION_Y: "Adv-Y",
    DIFFUSION: "Diffusion",
    ADVECTION_DIFFUSION: "Adv-Diff",
}


def builtin_library(dims: int = 2, params: PhysicalParams | None = None) -> List[PdeSpec]:
    """The four 2-D test PDEs.

    Advection follows u_t + c u_x = 0, i.e. N = -c d/dx.
    """
    if dims != 2:
        raise ConfigError(f"the builtin library is two-dimensional, got dims={dims}")
    params = params or PhysicalParams()

    adv_x = PdeTerm(coefficient=-params.c_x, derivative_orders=(1, 0))
    adv_y = PdeTerm(coefficient=-params.c_y, derivative_orders=(0, 1))
    diff_xx = PdeTerm(coefficient=params.nu, derivative_orders=(2, 0))
    diff_yy = PdeTerm(coefficient=params.nu, derivative_orders=(0, 2))

    return [
        PdeSpec(name=ADVECTION_X, dims=2, terms=[adv_x]),
        PdeSpec(name=ADVECTION_Y, dims=2, terms=[adv_y]),
        PdeSpec(name=DIFFUSION, dims=2, terms=[diff_xx, diff_yy]),
        PdeSpec(name=ADVECTION_DIFFUSION, dims=2, terms=[adv_x, adv_y, diff_xx, diff_yy]),
    ]


def library_by_name(library: List[PdeSpec], name: str) -> PdeSpec:
    for spec in library:
        if spec.name == name:
            return spec
    names = ", ".join(spec.name for spec in library)
    raise ConfigError(f"unknown PDE {name!r}; available: {names}")


def display_label(name: str) -> str:
    return DISPLAY_LABELS.get(name, name)


def assemble_generator(spec: PdeSpec, basis: BasisSpec) -> GeneratorMatrix:
    """N = sum_terms coefficient * prod_d (D^(d))^{o_d}."""
    if spec.dims != basis.dims:
        raise BasisMismatchError(f"PDE {spec.name!r} has dims={spec.dims}, basis has dims={basis.dims}")

    derivatives = [diff_operator(basis, axis).entries for axis in range(basis.dims)]
    size = basis.total_size
    entries = np.zeros((size, size))
    for term in spec.terms:
        product = np.eye(size)
        for axis, order in enumerate(term.derivative_orders):
            if order:
                product = product @ np.linalg.matrix_power(derivatives[axis], order)
        entries += term.coefficient * product

    logger.debug(f"Assembled generator for {spec.name} on sizes {basis.sizes}")
    return GeneratorMatrix(basis=basis, entries=entries)


def matrix_exponential(generator: GeneratorMatrix, dt: float, label: str | None = None) -> KoopmanMatrix:
    """K* = exp(dt N) by scaling and squaring with a Pade approximant."""
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if not np.all(np.isfinite(generator.entries)):
        raise NonFiniteError("generator matrix has non-finite entries")

    entries = linalg.expm(dt * generator.entries)
    if not np.all(np.isfinite(entries)):
        raise NonFiniteError(f"exp(dt N) overflowed for dt={dt}")
    return KoopmanMatrix(
        basis=generator.basis,
        dt=dt,
        entries=entries,
        provenance="equation_driven",
        label=label,
    )


def derive_koopman(spec: PdeSpec, basis: BasisSpec, dt: float) -> KoopmanMatrix:
    """Equation-driven Koopman matrix of one candidate PDE."""
    koopman = matrix_exponential(assemble_generator(spec, basis), dt, label=spec.name)
    logger.info(f"Derived K* for {spec.name} (P={basis.total_size}, dt={dt:g})")
    return koopman
