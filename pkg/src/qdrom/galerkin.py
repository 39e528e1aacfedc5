"""Galerkin projection of the Schrodinger operator onto an orthonormal basis.

Produces the reduced M x M eigenproblem H a = E a with

    H(p) = T + U_base + sum_k p_k U_k + B

where T is the kinetic matrix, the U blocks are weighted quadratures of the
affine potential terms against mode pairs, and B collects the boundary
kinetic surface sums (identically small for the supported BCs).  Because
the potential enters affinely, all blocks are precomputed once and any
parameter setting is evaluated online by scaling and adding M x M blocks.

Kinetic assembly variants:
  "stiffness"  project the DNS kinetic operator itself (eta' S eta); the
               reduced energies then obey the Rayleigh-Ritz bound exactly.
  "fd"         quadrature of central-difference mode gradients.
  "analytic"   quadrature of exact mode gradients supplied by the basis
               (plane waves); isolates basis expressiveness from
               differencing error.
  "auto"       "analytic" when the basis provides gradients, else
               "stiffness".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .constants import KINETIC_SCALE
from .fdsolver import AssemblyError, assemble_hamiltonian
from .structure import DIRICHLET, NEUMANN, Array, BoundaryConditions, Grid, PotentialAssembly

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class ReducedModel:
    """Precomputed reduced matrices over the leading M_max modes [eV]."""

    kinetic: Array = field(repr=False)            # T
    potential_base: Array = field(repr=False)     # U_base
    potential_terms: tuple[Array, ...] = field(repr=False)
    boundary: Array = field(repr=False)           # B
    param_names: tuple[str, ...]
    basis: object = field(repr=False)             # PodBasis or PlaneWaveBasis

    @property
    def n_modes(self) -> int:
        return self.kinetic.shape[0]


@dataclass(frozen=True)
class ReducedSolution:
    """Eigenpairs of the reduced Hamiltonian, ascending."""

    energies: Array
    coeffs: Array      # (n_states, M) unit-norm mode weights
    n_modes: int


def _fd_gradients(modes: Array, grid: Grid) -> tuple[Array, Array]:
    """Central-difference mode gradients respecting the grid's BCs:
    wrapped stencils on periodic axes, one-sided second-order at
    non-periodic boundaries."""
    h = grid.h
    if grid.periodic_x:
        gx = (np.roll(modes, -1, axis=2) - np.roll(modes, 1, axis=2)) / (2 * h)
    else:
        gx = np.gradient(modes, h, axis=2, edge_order=2)
    if grid.periodic_y:
        gy = (np.roll(modes, -1, axis=1) - np.roll(modes, 1, axis=1)) / (2 * h)
    else:
        gy = np.gradient(modes, h, axis=1, edge_order=2)
    return gx, gy


def _symmetrize(name: str, mat: Array) -> Array:
    asym = np.abs(mat - mat.T).max()
    scale = max(np.abs(mat).max(), 1.0)
    if asym > _SYMMETRY_TOL * scale:
        raise AssemblyError(f"{name} asymmetry {asym:.2e} exceeds {_SYMMETRY_TOL:.0e} relative")
    logger.debug("%s assembly asymmetry %.3e (scale %.3e)", name, asym, scale)
    return 0.5 * (mat + mat.T)


def _side_normal_derivative(modes: Array, grid: Grid, side: str, bc_kind: str) -> Array:
    """Outward normal derivative of every mode along one boundary line.

    The derivative follows the BC's own discrete convention: mirror ghosts
    make it zero on Neumann sides, periodic sides use the wrapped central
    stencil, otherwise a one-sided second-order stencil.
    """
    h = grid.h
    if bc_kind == NEUMANN:
        npts = grid.ny if side in ("left", "right") else grid.nx
        return np.zeros((modes.shape[0], npts))
    if side == "left":
        if grid.periodic_x:
            return -(modes[:, :, 1] - modes[:, :, -1]) / (2 * h)
        return -(-3 * modes[:, :, 0] + 4 * modes[:, :, 1] - modes[:, :, 2]) / (2 * h)
    if side == "right":
        if grid.periodic_x:  # x=Lx is the same unique column as x=0
            return (modes[:, :, 1] - modes[:, :, -1]) / (2 * h)
        return (3 * modes[:, :, -1] - 4 * modes[:, :, -2] + modes[:, :, -3]) / (2 * h)
    if side == "bottom":
        if grid.periodic_y:
            return -(modes[:, 1, :] - modes[:, -1, :]) / (2 * h)
        return -(-3 * modes[:, 0, :] + 4 * modes[:, 1, :] - modes[:, 2, :]) / (2 * h)
    if grid.periodic_y:
        return (modes[:, 1, :] - modes[:, -1, :]) / (2 * h)
    return (3 * modes[:, -1, :] - 4 * modes[:, -2, :] + modes[:, -3, :]) / (2 * h)


def _boundary_matrix(modes: Array, grid: Grid, mass: Array, bc: BoundaryConditions) -> Array:
    """Surface sums -sum eta_i c dn(eta_j) ds over the four sides.

    Vanishes identically for the supported BCs (modes are zero on
    Dirichlet sides, the mirror convention zeroes Neumann normal
    derivatives, and periodic side pairs cancel); assembled anyway so the
    claim is checked, not assumed.
    """
    c = KINETIC_SCALE / mass
    line_x = np.full(grid.nx, grid.h)
    if not grid.periodic_x:
        line_x[0] = line_x[-1] = grid.h / 2
    line_y = np.full(grid.ny, grid.h)
    if not grid.periodic_y:
        line_y[0] = line_y[-1] = grid.h / 2

    b = np.zeros((modes.shape[0], modes.shape[0]))
    sides = (
        ("left", bc.left, modes[:, :, 0], c[:, 0], line_y),
        ("right", bc.right, modes[:, :, 0] if grid.periodic_x else modes[:, :, -1],
         c[:, 0] if grid.periodic_x else c[:, -1], line_y),
        ("bottom", bc.bottom, modes[:, 0, :], c[0, :], line_x),
        ("top", bc.top, modes[:, 0, :] if grid.periodic_y else modes[:, -1, :],
         c[0, :] if grid.periodic_y else c[-1, :], line_x),
    )
    for side, kind, vals, c_side, ds in sides:
        deriv = _side_normal_derivative(modes, grid, side, kind)
        b -= (vals * (c_side * ds)) @ deriv.T
    return b


def assemble_reduced(basis, mass: Array, assembly: PotentialAssembly, grid: Grid,
                     bc: BoundaryConditions, kinetic: str = "auto") -> ReducedModel:
    """Project kinetic, potential, and boundary operators onto the basis."""
    modes = basis.modes
    if modes.shape[1:] != grid.shape:
        raise AssemblyError("basis modes are not sampled on this grid")

    if kinetic == "auto":
        kinetic = "analytic" if hasattr(basis, "mode_gradients") else "stiffness"

    nm = modes.shape[0]
    flat = modes.reshape(nm, -1)
    wflat = grid.weights.reshape(-1)

    if kinetic == "stiffness":
        ham = assemble_hamiltonian(grid, mass, np.zeros(grid.shape), bc)
        act = flat[:, ham.active]
        t = act @ (ham.stiffness @ act.T)
    elif kinetic in ("fd", "analytic"):
        if kinetic == "analytic":
            if not hasattr(basis, "mode_gradients"):
                raise AssemblyError("basis does not provide analytic gradients")
            gx, gy = basis.mode_gradients()
        else:
            gx, gy = _fd_gradients(modes, grid)
        wc = wflat * (KINETIC_SCALE / mass.reshape(-1))
        gxf = gx.reshape(nm, -1)
        gyf = gy.reshape(nm, -1)
        t = (gxf * wc) @ gxf.T + (gyf * wc) @ gyf.T
    else:
        raise ValueError(f"unknown kinetic assembly variant {kinetic!r}")

    def project(fieldvals: Array) -> Array:
        return (flat * (wflat * fieldvals.reshape(-1))) @ flat.T

    u_base = project(assembly.base)
    u_terms = tuple(project(shape) for _, shape in assembly.affine_terms)
    b = _boundary_matrix(modes, grid, mass, bc)

    t = _symmetrize("kinetic", t)
    u_base = _symmetrize("potential base", u_base)
    u_terms = tuple(_symmetrize(f"potential term {name}", m)
                    for (name, _), m in zip(assembly.affine_terms, u_terms))
    b = _symmetrize("boundary", b)

    t_scale = np.abs(t).max()
    b_scale = np.abs(b).max()
    if b_scale > 1e-10 * t_scale:
        raise AssemblyError(
            f"boundary kinetic matrix {b_scale:.2e} not negligible vs kinetic {t_scale:.2e}"
        )

    return ReducedModel(kinetic=t, potential_base=u_base, potential_terms=u_terms,
                        boundary=b, param_names=assembly.param_names, basis=basis)


def evaluate_hamiltonian(model: ReducedModel, params, n_modes: int) -> Array:
    """Leading n_modes x n_modes block of T + U_base + sum p_k U_k + B."""
    if not 1 <= n_modes <= model.n_modes:
        raise ValueError(f"mode count {n_modes} outside [1, {model.n_modes}]")
    values = getattr(params, "values", params)
    if len(values) != len(model.potential_terms):
        raise ValueError(f"got {len(values)} parameters for {len(model.potential_terms)} terms")
    m = n_modes
    h = (model.kinetic[:m, :m] + model.potential_base[:m, :m] + model.boundary[:m, :m]).copy()
    for p, term in zip(values, model.potential_terms):
        h += p * term[:m, :m]
    return h


def solve_reduced(h: Array) -> ReducedSolution:
    """Dense symmetric eigensolve of the reduced Hamiltonian."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("reduced Hamiltonian must be square")
    asym = np.abs(h - h.T).max()
    if asym > _SYMMETRY_TOL * max(np.abs(h).max(), 1.0):
        raise ValueError(f"reduced Hamiltonian asymmetric by {asym:.2e}")
    energies, vecs = np.linalg.eigh(0.5 * (h + h.T))
    return ReducedSolution(energies=energies, coeffs=vecs.T.copy(), n_modes=h.shape[0])


def reconstruct(basis, coeffs: Array, n_modes: int | None = None) -> Array:
    """Combine modes into grid wavefunctions: psi = sum_j a_j eta_j.

    coeffs may be a single vector or a (n_states, M) stack.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    single = coeffs.ndim == 1
    if single:
        coeffs = coeffs[None, :]
    m = coeffs.shape[1] if n_modes is None else n_modes
    if coeffs.shape[1] != m:
        raise ValueError(f"got {coeffs.shape[1]} coefficients for {m} modes")
    if m > basis.modes.shape[0]:
        raise ValueError(f"basis has only {basis.modes.shape[0]} modes")
    out = np.tensordot(coeffs, basis.modes[:m], axes=(1, 0))
    return out[0] if single else out


def solve_at(model: ReducedModel, params, n_modes: int) -> ReducedSolution:
    """Evaluate the reduced Hamiltonian at params and solve it."""
    return solve_reduced(evaluate_hamiltonian(model, params, n_modes))
