"""POD basis construction from DNS snapshots via the method of snapshots.

Training wavefunctions are collected over a plan of parameter
configurations, reduced to the N_s x N_s Gram matrix of their weighted
inner products, and eigendecomposed; basis modes are the snapshot
combinations given by the Gram eigenvectors.  Eigenvalues are mean-square
quantities (the Gram matrix carries a 1/N_s factor), so for unit-norm
snapshots they sum to one and the truncated tail directly yields the
expected least-squares reconstruction error.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fdsolver import solve_structure
from .structure import (
    Array,
    BoundaryConditions,
    Grid,
    PotentialAssembly,
    ScenarioParams,
    assemble_potential,
)

# eigenvalues this far below the leading one are numerical noise; modes are
# dropped there even when no explicit floor is requested
_ABS_EIGENVALUE_GUARD = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class TrainingPlan:
    """Parameter configurations to sample and states to keep per config."""

    configs: tuple[ScenarioParams, ...]
    n_states: int

    def __post_init__(self):
        if not self.configs:
            raise ValueError("training plan needs at least one configuration")
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")

    @classmethod
    def of(cls, configs: Sequence[Sequence[float]], n_states: int) -> "TrainingPlan":
        return cls(tuple(ScenarioParams.of(c) for c in configs), n_states)

    @property
    def n_snapshots(self) -> int:
        return len(self.configs) * self.n_states


@dataclass(frozen=True)
class SnapshotSet:
    """Unit-norm training wavefunctions with per-column provenance."""

    columns: Array = field(repr=False)      # (N_s, ny, nx)
    meta: tuple[tuple[int, int], ...]       # (config index, state index)
    grid: Grid = field(repr=False)

    @property
    def n_snapshots(self) -> int:
        return self.columns.shape[0]


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal modes with descending mean-square eigenvalues."""

    modes: Array = field(repr=False)        # (M_max, ny, nx)
    lambdas: Array                          # (M_max,)
    snapshot_count: int
    grid: Grid = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]


def _solve_training_config(job):
    grid, mass, assembly, bc, params, n_states, tol = job
    potential = assemble_potential(assembly, params)
    return solve_structure(grid, mass, potential, bc, k=n_states, tol=tol)


def collect_snapshots(plan: TrainingPlan, grid: Grid, mass: Array,
                      assembly: PotentialAssembly, bc: BoundaryConditions,
                      tol: float = 1e-9, workers: int = 1) -> SnapshotSet:
    """Run DNS at every training configuration and stack the lowest states.

    Configurations are independent, so with workers > 1 they are solved in
    parallel processes; columns keep the (config, state) order either way.
    """
    jobs = [(grid, mass, assembly, bc, cfg, plan.n_states, tol) for cfg in plan.configs]
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                solutions = list(pool.map(_solve_training_config, jobs))
        else:
            solutions = [_solve_training_config(job) for job in jobs]
    except Exception as exc:
        raise RuntimeError(f"training DNS failed: {exc}") from exc

    columns = []
    meta = []
    for ic, sol in enumerate(solutions):
        for istate in range(plan.n_states):
            psi = sol.states[istate]
            columns.append(psi / grid.norm(psi))
            meta.append((ic, istate))
    return SnapshotSet(columns=np.stack(columns), meta=tuple(meta), grid=grid)


def gram_matrix(snapshots: SnapshotSet) -> Array:
    """G_ij = (psi_i . psi_j) / N_s under the weighted grid quadrature."""
    n = snapshots.n_snapshots
    if n == 0:
        raise ValueError("empty snapshot set")
    flat = snapshots.columns.reshape(n, -1)
    weighted = flat * snapshots.grid.weights.reshape(-1)
    g = (weighted @ flat.T) / n
    return 0.5 * (g + g.T)


def compute_modes(snapshots: SnapshotSet, gram: Array | None = None,
                  rel_floor: float = 1e-14) -> PodBasis:
    """Eigendecompose the Gram matrix and expand modes in snapshot space.

    Modes with lambda/lambda_1 < rel_floor are truncated (the default
    operationalizes the computer-precision plateau of the spectrum); pass
    rel_floor=0 to retain every numerically independent direction.  A
    two-pass Gram-Schmidt sweep removes the roundoff loss of orthogonality
    that snapshot-space expansion incurs for the weakest modes.
    """
    if gram is None:
        gram = gram_matrix(snapshots)
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]

    lam1 = evals[0]
    if lam1 <= 0:
        raise ValueError("snapshot set has no energy (all-zero columns?)")
    keep = evals > lam1 * max(rel_floor, _ABS_EIGENVALUE_GUARD)
    evals = evals[keep]
    evecs = evecs[:, keep]

    grid = snapshots.grid
    flat = snapshots.columns.reshape(snapshots.n_snapshots, -1)
    modes = (flat.T @ evecs).T.reshape(-1, *grid.shape)

    wflat = grid.weights.reshape(-1)
    flatm = modes.reshape(modes.shape[0], -1)
    for _ in range(2):  # MGS, second pass stabilizes near-noise modes
        for k in range(flatm.shape[0]):
            v = flatm[k]
            if k:
                coeffs = flatm[:k] @ (wflat * v)
                v = v - coeffs @ flatm[:k]
            flatm[k] = v / np.sqrt(v @ (wflat * v))
    modes = flatm.reshape(-1, *grid.shape)

    return PodBasis(modes=modes, lambdas=evals, snapshot_count=snapshots.n_snapshots,
                    grid=grid)


def theoretical_ls_error(lambdas: Array, m: int) -> float:
    """Expected least-squares error of an m-mode reconstruction:
    sqrt(tail eigenvalue mass / total eigenvalue mass)."""
    lambdas = np.asarray(lambdas, dtype=float)
    if not 1 <= m <= lambdas.size:
        raise ValueError(f"mode count {m} outside [1, {lambdas.size}]")
    total = lambdas.sum()
    tail = lambdas[m:].sum()
    return float(np.sqrt(max(tail, 0.0) / total))
