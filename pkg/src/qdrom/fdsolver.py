"""Finite-difference solver for the 2D effective-mass Schrodinger equation.

Discretizes -div(c grad psi) + U psi = E psi with c = K / (m*/m0) by a
flux-conservative 5-point scheme.  The assembly works with the energy
(quadratic-form) representation: a symmetric kinetic stiffness matrix S and
a diagonal potential term, so that the eigenproblem is the generalized
symmetric problem

    (S + diag(w U)) psi = E diag(w) psi

with w the trapezoidal quadrature weights.  Face coefficients are the
harmonic mean of c at the two adjacent nodes, which keeps the flux
continuous across GaAs/InAs heterojunctions.  Dirichlet sides eliminate
their boundary unknowns, Neumann sides get the mirror-flux (half control
volume) treatment, periodic sides wrap the stencil.

The same direct solves serve as the training-snapshot generator and as the
ground truth that reduced-order predictions are judged against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import KINETIC_SCALE
from .structure import DIRICHLET, Array, BoundaryConditions, Grid

# below this many unknowns a dense LAPACK solve replaces ARPACK
_DENSE_CUTOFF = 400


class AssemblyError(ValueError):
    """Raised when operator assembly inputs are invalid."""


class SolverError(RuntimeError):
    """Raised when the eigensolver fails to reach the requested residual."""


@dataclass(frozen=True)
class DiscreteHamiltonian:
    """Assembled operator restricted to the active (non-eliminated) nodes."""

    stiffness: sp.csr_matrix = field(repr=False)   # kinetic quadratic form, eV nm^2-weighted
    potential: Array = field(repr=False)           # U at active nodes [eV]
    weights: Array = field(repr=False)             # quadrature weights at active nodes [nm^2]
    active: Array = field(repr=False)              # flat indices of active nodes
    grid: Grid = field(repr=False)
    bc: BoundaryConditions = field(repr=False)

    @property
    def n_active(self) -> int:
        return self.active.size

    def weighted_matrix(self) -> sp.csr_matrix:
        """S + diag(w U): symmetric form of the operator in the weighted
        inner product."""
        return (self.stiffness + sp.diags(self.weights * self.potential)).tocsr()

    def symmetric_form(self) -> sp.csr_matrix:
        """Similarity-transformed standard symmetric matrix
        B = W^(-1/2) (S + diag(wU)) W^(-1/2); eigenvectors of B are
        W^(1/2) psi, so plain 2-norms become weighted norms."""
        d = 1.0 / np.sqrt(self.weights)
        dinv = sp.diags(d)
        return (dinv @ self.weighted_matrix() @ dinv).tocsr()

    def expand(self, vec_active: Array) -> Array:
        """Scatter an active-DoF vector to the full (ny, nx) grid."""
        full = np.zeros(self.grid.n_points)
        full[self.active] = vec_active
        return full.reshape(self.grid.shape)

    def restrict(self, psi: Array) -> Array:
        """Gather a full-grid (ny, nx) field to the active DoF vector."""
        return psi.reshape(-1)[self.active]


@dataclass(frozen=True)
class EigenSolution:
    """Lowest eigenpairs, ascending, unit-norm under the grid weights."""

    energies: Array
    states: Array           # (k, ny, nx); zeros on eliminated boundary nodes
    residual_norms: Array
    grid: Grid = field(repr=False)


def active_mask(grid: Grid, bc: BoundaryConditions) -> Array:
    """Boolean (ny, nx) mask of unknowns; Dirichlet sides are eliminated."""
    mask = np.ones(grid.shape, dtype=bool)
    if bc.left == DIRICHLET:
        mask[:, 0] = False
    if bc.right == DIRICHLET:
        mask[:, -1] = False
    if bc.bottom == DIRICHLET:
        mask[0, :] = False
    if bc.top == DIRICHLET:
        mask[-1, :] = False
    return mask


def _face_lists(grid: Grid):
    """All nearest-neighbour faces as (p, q, transverse_factor) index arrays.

    The factor is the fraction of the h^2 face weight: 1 in the interior,
    1/2 for faces lying on a non-periodic transverse boundary.
    """
    nx, ny = grid.nx, grid.ny
    idx = np.arange(nx * ny).reshape(ny, nx)

    faces_p, faces_q, factor = [], [], []

    # x-faces between columns i and i+1 (wrapping if periodic)
    cols = nx if grid.periodic_x else nx - 1
    if cols > 0:
        i = np.arange(cols)
        p = idx[:, i % nx]
        q = idx[:, (i + 1) % nx]
        f = np.ones((ny, cols))
        if not grid.periodic_y:
            f[0, :] = 0.5
            f[-1, :] = 0.5
        faces_p.append(p.ravel())
        faces_q.append(q.ravel())
        factor.append(f.ravel())

    # y-faces between rows j and j+1
    rows = ny if grid.periodic_y else ny - 1
    if rows > 0:
        j = np.arange(rows)
        p = idx[j % ny, :]
        q = idx[(j + 1) % ny, :]
        f = np.ones((rows, nx))
        if not grid.periodic_x:
            f[:, 0] = 0.5
            f[:, -1] = 0.5
        faces_p.append(p.ravel())
        faces_q.append(q.ravel())
        factor.append(f.ravel())

    return (np.concatenate(faces_p), np.concatenate(faces_q), np.concatenate(factor))


def assemble_hamiltonian(grid: Grid, mass: Array, potential: Array,
                         bc: BoundaryConditions) -> DiscreteHamiltonian:
    """Assemble the discrete Hamiltonian for given mass and potential fields."""
    if mass.shape != grid.shape or potential.shape != grid.shape:
        raise AssemblyError("mass/potential not sampled on this grid")
    if np.any(mass <= 0):
        raise AssemblyError("effective mass must be positive everywhere")
    if (grid.periodic_x != bc.periodic_x) or (grid.periodic_y != bc.periodic_y):
        raise AssemblyError("grid periodicity does not match boundary conditions")

    c = KINETIC_SCALE / mass.reshape(-1)
    mask = active_mask(grid, bc).reshape(-1)
    active = np.flatnonzero(mask)
    renum = np.full(grid.n_points, -1, dtype=np.int64)
    renum[active] = np.arange(active.size)

    p, q, factor = _face_lists(grid)
    cf = 2.0 * c[p] * c[q] / (c[p] + c[q])
    af = factor * cf  # = w_face * c_face / h^2

    p_act, q_act = mask[p], mask[q]
    rows, cols, vals = [], [], []

    both = p_act & q_act
    rp, rq, a = renum[p[both]], renum[q[both]], af[both]
    rows += [rp, rq, rp, rq]
    cols += [rp, rq, rq, rp]
    vals += [a, a, -a, -a]

    # faces reaching an eliminated Dirichlet node only stiffen the diagonal
    only_p = p_act & ~q_act
    rows.append(renum[p[only_p]])
    cols.append(renum[p[only_p]])
    vals.append(af[only_p])
    only_q = q_act & ~p_act
    rows.append(renum[q[only_q]])
    cols.append(renum[q[only_q]])
    vals.append(af[only_q])

    n = active.size
    stiffness = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()

    return DiscreteHamiltonian(
        stiffness=stiffness,
        potential=potential.reshape(-1)[active],
        weights=grid.weights.reshape(-1)[active],
        active=active,
        grid=grid,
        bc=bc,
    )


def solve_lowest(ham: DiscreteHamiltonian, k: int, tol: float = 1e-9) -> EigenSolution:
    """Solve for the k lowest eigenpairs with residual norm <= tol [eV].

    Uses shift-invert Lanczos with the shift just below the potential
    minimum (the kinetic form is positive semidefinite, so no eigenvalue
    lies below it); small problems fall back to a dense solve.  The start
    vector is fixed so repeated runs are bit-identical.
    """
    if k < 1:
        raise ValueError("need at least one eigenpair")
    n = ham.n_active
    if k > n:
        raise ValueError(f"requested {k} eigenpairs from a {n}-dim operator")

    bmat = ham.symmetric_form()
    if n <= max(_DENSE_CUTOFF, 3 * k + 20):
        evals, evecs = scipy.linalg.eigh(bmat.toarray(), subset_by_index=[0, k - 1])
    else:
        sigma = float(ham.potential.min()) - 0.1
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            evals, evecs = spla.eigsh(bmat.tocsc(), k=k, sigma=sigma, which="LM",
                                      v0=v0, tol=0)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"eigensolver did not converge: {exc}") from exc

    order = np.argsort(evals)
    evals = evals[order]
    evecs = evecs[:, order]

    residuals = np.linalg.norm(bmat @ evecs - evecs * evals, axis=0)
    if np.any(residuals > tol):
        raise SolverError(
            f"residuals {residuals.max():.3e} eV exceed tolerance {tol:.1e} eV"
        )

    # undo the similarity transform; plain-orthonormal evecs become
    # weighted-orthonormal states
    dinv = 1.0 / np.sqrt(ham.weights)
    states = np.stack([ham.expand(dinv * evecs[:, i]) for i in range(k)])
    return EigenSolution(energies=evals, states=states, residual_norms=residuals,
                         grid=ham.grid)


def solve_structure(grid: Grid, mass: Array, potential: Array,
                    bc: BoundaryConditions, k: int, tol: float = 1e-9) -> EigenSolution:
    """Assemble and solve in one call."""
    return solve_lowest(assemble_hamiltonian(grid, mass, potential, bc), k, tol=tol)
