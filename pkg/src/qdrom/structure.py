"""Quantum-dot structure geometry, grids, and parametric potentials.

Defines the rectangular domain with its grid of InAs dots in a GaAs
barrier, per-side boundary conditions, and the potential energy landscape
U(r) decomposed affinely as

    U(r; p) = U_base(r) + sum_k p_k * shape_k(r)

so that reduced-order matrices can be precomputed once per shape term.
All lengths are nm, all energies eV.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import EV_PER_NM_PER_KVCM

Array = np.ndarray

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
PERIODIC = "periodic"
_BC_NAMES = (DIRICHLET, NEUMANN, PERIODIC)


class ConfigurationError(ValueError):
    """Raised for self-inconsistent structure or scenario definitions."""


@dataclass(frozen=True)
class BoundaryConditions:
    """Per-side boundary condition; periodic sides must come in pairs."""

    left: str = DIRICHLET
    right: str = DIRICHLET
    bottom: str = DIRICHLET
    top: str = DIRICHLET

    def __post_init__(self):
        for side in (self.left, self.right, self.bottom, self.top):
            if side not in _BC_NAMES:
                raise ConfigurationError(f"unknown boundary condition {side!r}")
        if (self.left == PERIODIC) != (self.right == PERIODIC):
            raise ConfigurationError("periodic BC must be set on both x sides")
        if (self.bottom == PERIODIC) != (self.top == PERIODIC):
            raise ConfigurationError("periodic BC must be set on both y sides")

    @property
    def periodic_x(self) -> bool:
        return self.left == PERIODIC

    @property
    def periodic_y(self) -> bool:
        return self.bottom == PERIODIC

    @classmethod
    def all_dirichlet(cls) -> "BoundaryConditions":
        return cls()

    @classmethod
    def fully_periodic(cls) -> "BoundaryConditions":
        return cls(PERIODIC, PERIODIC, PERIODIC, PERIODIC)


@dataclass(frozen=True)
class MaterialParams:
    """Relative effective mass m*/m0 and conduction-band edge in eV."""

    mass_ratio: float
    band_edge: float

    def __post_init__(self):
        if not self.mass_ratio > 0:
            raise ConfigurationError("mass_ratio must be positive")
        if not np.isfinite(self.band_edge):
            raise ConfigurationError("band_edge must be finite")


@dataclass(frozen=True)
class DotLayout:
    """Regular rows x cols array of square dots, dimensions in nm."""

    rows: int
    cols: int
    dot_size: float
    gap: float
    spacer: float


@dataclass(frozen=True)
class StructureSpec:
    """Geometry, materials, BCs and grid spacing of one nanostructure."""

    domain_size: tuple[float, float]
    dot_layout: DotLayout
    barrier_material: MaterialParams
    well_material: MaterialParams
    bc: BoundaryConditions
    grid_spacing: float

    def __post_init__(self):
        lx, ly = self.domain_size
        lay = self.dot_layout
        want_x = lay.cols * lay.dot_size + (lay.cols - 1) * lay.gap + 2 * lay.spacer
        want_y = lay.rows * lay.dot_size + (lay.rows - 1) * lay.gap + 2 * lay.spacer
        if abs(want_x - lx) > 1e-9 or abs(want_y - ly) > 1e-9:
            raise ConfigurationError(
                f"dot layout spans ({want_x}, {want_y}) nm but domain is ({lx}, {ly}) nm"
            )
        for length, name in ((lx, "Lx"), (ly, "Ly")):
            n = length / self.grid_spacing
            if abs(n - round(n)) > 1e-9:
                raise ConfigurationError(f"{name}={length} is not a multiple of h={self.grid_spacing}")

    def dot_rectangles(self) -> list[tuple[float, float, float, float]]:
        """Closed (x0, x1, y0, y1) rectangles of every dot."""
        lay = self.dot_layout
        rects = []
        for r in range(lay.rows):
            y0 = lay.spacer + r * (lay.dot_size + lay.gap)
            for c in range(lay.cols):
                x0 = lay.spacer + c * (lay.dot_size + lay.gap)
                rects.append((x0, x0 + lay.dot_size, y0, y0 + lay.dot_size))
        return rects


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid with trapezoidal quadrature weights.

    For a periodic direction the duplicate boundary point is excluded, so
    nx = Lx/h unique points with uniform weights; otherwise nx = Lx/h + 1
    with half/quarter weights on edges/corners.
    """

    nx: int
    ny: int
    h: float
    lx: float
    ly: float
    periodic_x: bool
    periodic_y: bool
    weights: Array = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    @property
    def xs(self) -> Array:
        return np.arange(self.nx) * self.h

    @property
    def ys(self) -> Array:
        return np.arange(self.ny) * self.h

    def meshes(self) -> tuple[Array, Array]:
        """(X, Y) coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.xs, self.ys, indexing="xy")

    def inner(self, a: Array, b: Array) -> float | Array:
        """Weighted L2 inner product over the last two axes."""
        return np.sum(self.weights * a * b, axis=(-2, -1))

    def norm(self, a: Array) -> float | Array:
        return np.sqrt(self.inner(a, a))


def build_grid(spec: StructureSpec) -> Grid:
    """Build the uniform grid and quadrature weights for a structure."""
    lx, ly = spec.domain_size
    h = spec.grid_spacing
    bc = spec.bc
    nx = int(round(lx / h)) + (0 if bc.periodic_x else 1)
    ny = int(round(ly / h)) + (0 if bc.periodic_y else 1)

    wx = np.full(nx, h)
    if not bc.periodic_x:
        wx[0] = wx[-1] = h / 2
    wy = np.full(ny, h)
    if not bc.periodic_y:
        wy[0] = wy[-1] = h / 2
    weights = np.outer(wy, wx)

    return Grid(nx=nx, ny=ny, h=h, lx=lx, ly=ly,
                periodic_x=bc.periodic_x, periodic_y=bc.periodic_y,
                weights=weights)


def sample_mass_and_base(spec: StructureSpec, grid: Grid) -> tuple[Array, Array]:
    """Sample m*/m0 and the band-offset landscape on the grid.

    A point exactly on a dot edge belongs to the dot (closed rectangles);
    comparisons carry a tolerance of 1e-9*h so the rule survives the
    inexact binary representation of coordinates like 2.5 = 25*0.1.
    """
    x, y = grid.meshes()
    tol = 1e-9 * grid.h
    in_dot = np.zeros(grid.shape, dtype=bool)
    for x0, x1, y0, y1 in spec.dot_rectangles():
        in_dot |= ((x >= x0 - tol) & (x <= x1 + tol)
                   & (y >= y0 - tol) & (y <= y1 + tol))
    mass = np.where(in_dot, spec.well_material.mass_ratio, spec.barrier_material.mass_ratio)
    base = np.where(in_dot, spec.well_material.band_edge, spec.barrier_material.band_edge)
    return mass, base


def field_terms(grid: Grid) -> tuple[Array, Array]:
    """Unit-field tilt shapes sx, sy in eV per kV/cm.

    Zero-mean gauge: the tilt vanishes at the domain center, so a field
    only skews the landscape without shifting its average.
    """
    x, y = grid.meshes()
    sx = EV_PER_NM_PER_KVCM * (x - grid.lx / 2)
    sy = EV_PER_NM_PER_KVCM * (y - grid.ly / 2)
    return sx, sy


@dataclass(frozen=True)
class PyramidSpec:
    """Square-base unit-height pyramid: apex at (cx, cy), base edge in nm."""

    cx: float
    cy: float
    base: float


def default_pyramids(lx: float, ly: float, base: float) -> list[PyramidSpec]:
    """Four pyramids at the domain quarter-points plus one at the center."""
    qx, qy = lx / 4, ly / 4
    centers = [(qx, qy), (3 * qx, qy), (qx, 3 * qy), (3 * qx, 3 * qy), (2 * qx, 2 * qy)]
    return [PyramidSpec(cx, cy, base) for cx, cy in centers]


def pyramid_terms(pyramids: Sequence[PyramidSpec], grid: Grid) -> list[Array]:
    """Unit-height pyramid shapes: 1 at the apex, linear (max-norm profile)
    to 0 at the base edge, zero outside."""
    x, y = grid.meshes()
    shapes = []
    for p in pyramids:
        half = p.base / 2
        dist = np.maximum(np.abs(x - p.cx), np.abs(y - p.cy))
        shapes.append(np.maximum(0.0, 1.0 - dist / half))
    return shapes


@dataclass(frozen=True)
class PotentialAssembly:
    """Affine potential: base landscape plus named parameter-scaled shapes."""

    base: Array
    affine_terms: tuple[tuple[str, Array], ...]

    def __post_init__(self):
        for name, shape in self.affine_terms:
            if shape.shape != self.base.shape:
                raise ConfigurationError(f"shape term {name!r} not sampled on the base grid")

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.affine_terms)

    @property
    def n_params(self) -> int:
        return len(self.affine_terms)


@dataclass(frozen=True)
class ScenarioParams:
    """Ordered parameter values matching a PotentialAssembly's terms."""

    values: tuple[float, ...]

    @classmethod
    def of(cls, values: Sequence[float]) -> "ScenarioParams":
        return cls(tuple(float(v) for v in values))


def assemble_potential(assembly: PotentialAssembly,
                       params: ScenarioParams | Sequence[float]) -> Array:
    """Evaluate U = base + sum_k p_k * shape_k pointwise."""
    values = params.values if isinstance(params, ScenarioParams) else tuple(params)
    if len(values) != assembly.n_params:
        raise ConfigurationError(
            f"got {len(values)} parameters for {assembly.n_params} potential terms"
        )
    total = assembly.base.copy()
    for p, (_, shape) in zip(values, assembly.affine_terms):
        total += p * shape
    return total
