"""Real Fourier plane-wave basis for fully periodic domains.

The basis is {1} plus cos/sin pairs for one wavevector representative of
each +-k pair, ordered by ascending |k|^2 with deterministic tie-breaking,
so error-versus-mode-count curves are reproducible.  A real basis spans
the same space as complex exponentials while keeping every projected
matrix real-symmetric, so it feeds the same Galerkin machinery as the POD
basis.  Gradients are analytic, sampled on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .structure import Array, ConfigurationError, Grid

_CONST, _COS, _SIN = 0, 1, 2


@dataclass(frozen=True)
class PlaneWaveBasis:
    """Grid-sampled real plane-wave modes, first mode constant."""

    modes: Array = field(repr=False)               # (M, ny, nx)
    wavevectors: tuple[tuple[int, int], ...]       # (n_x, n_y) per mode
    kinds: tuple[int, ...]                         # const / cos / sin
    lambdas: Array                                 # |k|^2 per mode [1/nm^2]
    grid: Grid = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    def mode_gradients(self) -> tuple[Array, Array]:
        """Exact gradients of every mode, sampled on the grid."""
        x, y = self.grid.meshes()
        gx = np.zeros_like(self.modes)
        gy = np.zeros_like(self.modes)
        for i, ((nx_i, ny_i), kind) in enumerate(zip(self.wavevectors, self.kinds)):
            if kind == _CONST:
                continue
            kx = 2 * np.pi * nx_i / self.grid.lx
            ky = 2 * np.pi * ny_i / self.grid.ly
            phase = kx * x + ky * y
            # discrete trig orthogonality makes the grid norm of cos/sin
            # exactly sqrt(Lx Ly / 2), so the normalized amplitude is exact
            amp = np.sqrt(2.0 / (self.grid.lx * self.grid.ly))
            if kind == _COS:
                gx[i] = -amp * kx * np.sin(phase)
                gy[i] = -amp * ky * np.sin(phase)
            else:
                gx[i] = amp * kx * np.cos(phase)
                gy[i] = amp * ky * np.cos(phase)
        return gx, gy


def generate_fpw_basis(grid: Grid, n_modes: int) -> PlaneWaveBasis:
    """Lowest-|k|^2 real plane-wave modes, grid-normalized.

    Ordering: ascending |k|^2, ties by (n_x, n_y, cos before sin); one
    representative per +-k pair (n_x > 0, or n_x = 0 and n_y > 0).
    """
    if not (grid.periodic_x and grid.periodic_y):
        raise ConfigurationError("plane-wave basis requires a fully periodic grid")
    if n_modes < 1:
        raise ConfigurationError("need at least one mode")

    # enumerate enough representatives that the lowest n_modes shells are
    # complete: a box of half-width nmax covers the inscribed |k| disk
    nmax = int(np.ceil(np.sqrt(n_modes))) + 2
    if nmax >= min(grid.nx, grid.ny) / 2:
        raise ConfigurationError(
            f"{n_modes} plane-wave modes would alias on a {grid.nx}x{grid.ny} grid"
        )

    def ksq(nx_i: int, ny_i: int) -> float:
        return (2 * np.pi) ** 2 * ((nx_i / grid.lx) ** 2 + (ny_i / grid.ly) ** 2)

    entries = [(0.0, 0, 0, _CONST)]
    for nx_i in range(0, nmax + 1):
        for ny_i in range(-nmax, nmax + 1):
            if nx_i == 0 and ny_i <= 0:
                continue
            k2 = ksq(nx_i, ny_i)
            entries.append((k2, nx_i, ny_i, _COS))
            entries.append((k2, nx_i, ny_i, _SIN))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    entries = entries[:n_modes]

    x, y = grid.meshes()
    modes = np.empty((n_modes, grid.ny, grid.nx))
    for i, (k2, nx_i, ny_i, kind) in enumerate(entries):
        if kind == _CONST:
            vals = np.ones(grid.shape)
        else:
            phase = 2 * np.pi * (nx_i * x / grid.lx + ny_i * y / grid.ly)
            vals = np.cos(phase) if kind == _COS else np.sin(phase)
        modes[i] = vals / grid.norm(vals)

    return PlaneWaveBasis(
        modes=modes,
        wavevectors=tuple((e[1], e[2]) for e in entries),
        kinds=tuple(e[3] for e in entries),
        lambdas=np.array([e[0] for e in entries]),
        grid=grid,
    )
