"""
Reference trajectories for the identification experiments.

Integration runs in coefficient space: a' = N a, advanced with classical RK4.
"""

import logging
import math
from typing import List, Sequence

import numpy as np

from speclink.chebyshev import forward, multi_indices, node_grid
from speclink.errors import BasisMismatchError, ConfigError, InputDataError, NonFiniteError
from speclink.operators import assemble_generator
from speclink.schemas import (
    BasisSpec,
    CoeffVector,
    GeneratorMatrix,
    InitialCondition,
    KoopmanMatrix,
    NodeVector,
    PdeSpec,
    Trajectory,
)

logger = logging.getLogger(__name__)

# Tolerance for T / dt landing a rounding error below an integer.
_STEP_TOLERANCE = 1e-9


def make_ic(ic: InitialCondition, basis: BasisSpec) -> CoeffVector:
    """Coefficients of an initial field."""
    if ic.kind == "gaussian":
        center = np.zeros(basis.dims) if ic.center is None else np.asarray(ic.center, dtype=float)
        if center.shape != (basis.dims,):
            raise ConfigError(f"gaussian center {ic.center} does not match dims={basis.dims}")
        sq_dist = np.sum((node_grid(basis) - center) ** 2, axis=1)
        values = ic.amplitude * np.exp(-sq_dist / (2.0 * ic.width**2))
        return forward(NodeVector(basis=basis, values=values))

    rng = np.random.default_rng([ic.seed, ic.member])
    decay = ic.decay ** multi_indices(basis).sum(axis=1)
    return CoeffVector(basis=basis, values=rng.standard_normal(basis.total_size) * decay)


def ensemble(ic: InitialCondition, size: int) -> List[InitialCondition]:
    """``size`` members sharing the seed of ``ic``."""
    if size < 1:
        raise ConfigError(f"ensemble size must be >= 1, got {size}")
    if ic.kind == "gaussian" and size > 1:
        raise ConfigError("a gaussian initial condition cannot form an ensemble")
    return [ic.model_copy(update={"member": member}) for member in range(size)]


def _rk4_update(entries: np.ndarray, state: np.ndarray, dt: float) -> np.ndarray:
    k1 = entries @ state
    k2 = entries @ (state + 0.5 * dt * k1)
    k3 = entries @ (state + 0.5 * dt * k2)
    k4 = entries @ (state + dt * k3)
    return state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(generator: GeneratorMatrix, a: CoeffVector, dt: float) -> CoeffVector:
    """One classical Runge-Kutta step for a' = N a."""
    if generator.basis != a.basis:
        raise BasisMismatchError(f"generator basis {generator.basis.sizes} != state basis {a.basis.sizes}")
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if not (np.all(np.isfinite(generator.entries)) and np.all(np.isfinite(a.values))):
        raise NonFiniteError("rk4_step received non-finite input")
    return CoeffVector(basis=a.basis, values=_rk4_update(generator.entries, a.values, dt))


def step_count(dt: float, horizon: float) -> int:
    """Number of steps floor(T / dt) covering the horizon."""
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if horizon < dt:
        raise ConfigError(f"horizon {horizon} is shorter than dt {dt}")
    return int(math.floor(horizon / dt + _STEP_TOLERANCE))


def integrate(generator: GeneratorMatrix, a0: CoeffVector, dt: float, steps: int, pde_name: str) -> Trajectory:
    """RK4 trajectory of ``steps`` steps from ``a0``."""
    if generator.basis != a0.basis:
        raise BasisMismatchError(f"generator basis {generator.basis.sizes} != state basis {a0.basis.sizes}")
    if not np.all(np.isfinite(generator.entries)):
        raise NonFiniteError(f"generator for {pde_name} has non-finite entries")

    snapshots = np.empty((steps + 1, a0.basis.total_size))
    snapshots[0] = a0.values
    for k in range(steps):
        snapshots[k + 1] = _rk4_update(generator.entries, snapshots[k], dt)

    if not np.all(np.isfinite(snapshots)):
        raise NonFiniteError(f"trajectory of {pde_name} became non-finite")
    return Trajectory(basis=a0.basis, dt=dt, pde_name=pde_name, snapshots=snapshots)


def simulate(spec: PdeSpec, ic: InitialCondition, basis: BasisSpec, dt: float, horizon: float) -> Trajectory:
    """Simulate ``spec`` from ``ic``: floor(T / dt) + 1 snapshots, the first being the IC."""
    steps = step_count(dt, horizon)
    generator = assemble_generator(spec, basis)
    trajectory = integrate(generator, make_ic(ic, basis), dt, steps, spec.name)
    logger.info(f"Simulated {spec.name}: {trajectory.n_snapshots} snapshots (dt={dt:g}, T={horizon:g})")
    return trajectory


def simulate_many(
    spec: PdeSpec,
    ics: Sequence[InitialCondition],
    basis: BasisSpec,
    dt: float,
    horizon: float,
) -> List[Trajectory]:
    steps = step_count(dt, horizon)
    generator = assemble_generator(spec, basis)
    return [integrate(generator, make_ic(ic, basis), dt, steps, spec.name) for ic in ics]


def exact_propagate(koopman: KoopmanMatrix, a0: CoeffVector, steps: int) -> Trajectory:
    """Snapshots a_{k+1} = K a_k; the noiseless oracle for estimation tests."""
    if steps < 1:
        raise InputDataError(f"steps must be >= 1, got {steps}")
    if koopman.basis != a0.basis:
        raise BasisMismatchError(f"Koopman basis {koopman.basis.sizes} != state basis {a0.basis.sizes}")

    snapshots = np.empty((steps + 1, a0.basis.total_size))
    snapshots[0] = a0.values
    for k in range(steps):
        snapshots[k + 1] = koopman.entries @ snapshots[k]
    return Trajectory(
        basis=a0.basis,
        dt=koopman.dt,
        pde_name=koopman.label or "exact",
        snapshots=snapshots,
    )
