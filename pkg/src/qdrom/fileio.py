"""On-disk artifact formats: wavefunction/basis dumps, reduced models, CSV.

Binary layouts (little-endian):

  QWF1 wavefunction dump
      magic "QWF1", u32 nx, u32 ny, u32 nstates,
      then per state: f64 energy, nx*ny f64 values (row-major, y rows).
      Basis dumps reuse the container with eigenvalues in the energy slot.

  PODH reduced model dump
      magic "PODH", u32 M, u32 n_terms,
      then f64 matrices (row-major, M x M each): kinetic, base potential,
      the n_terms parameter shapes, boundary.

Writes go through a temp file and an atomic rename so concurrent readers
never observe partial artifacts.  Round-trips are bit-exact.
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .galerkin import ReducedModel
from .structure import Array

QWF_MAGIC = b"QWF1"
PODH_MAGIC = b"PODH"


class FormatError(ValueError):
    """Raised when a dump file does not match its declared layout."""


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_wavefunctions(path: str | Path, energies: Sequence[float], states: Array) -> None:
    """Dump states (n, ny, nx) with their energies (or eigenvalues)."""
    states = np.asarray(states, dtype="<f8")
    energies = np.asarray(energies, dtype="<f8")
    n, ny, nx = states.shape
    if energies.shape != (n,):
        raise ValueError("one energy per state required")
    parts = [QWF_MAGIC, struct.pack("<III", nx, ny, n)]
    for i in range(n):
        parts.append(struct.pack("<d", energies[i]))
        parts.append(states[i].tobytes(order="C"))
    _atomic_write(Path(path), b"".join(parts))


def read_wavefunctions(path: str | Path) -> tuple[Array, Array]:
    """Read a QWF1 dump back as (energies, states)."""
    raw = Path(path).read_bytes()
    if raw[:4] != QWF_MAGIC:
        raise FormatError(f"{path}: not a QWF1 dump")
    nx, ny, n = struct.unpack_from("<III", raw, 4)
    rec = 8 + 8 * nx * ny
    if len(raw) != 16 + n * rec:
        raise FormatError(f"{path}: truncated dump")
    energies = np.empty(n)
    states = np.empty((n, ny, nx))
    off = 16
    for i in range(n):
        (energies[i],) = struct.unpack_from("<d", raw, off)
        states[i] = np.frombuffer(raw, dtype="<f8", count=nx * ny,
                                  offset=off + 8).reshape(ny, nx)
        off += rec
    return energies, states


def write_reduced_model(path: str | Path, model: ReducedModel) -> None:
    m = model.n_modes
    matrices = [model.kinetic, model.potential_base, *model.potential_terms, model.boundary]
    parts = [PODH_MAGIC, struct.pack("<II", m, len(model.potential_terms))]
    for mat in matrices:
        parts.append(np.asarray(mat, dtype="<f8").tobytes(order="C"))
    _atomic_write(Path(path), b"".join(parts))


def read_reduced_model(path: str | Path, basis,
                       param_names: Sequence[str]) -> ReducedModel:
    """Read a PODH dump; basis and parameter names are supplied by the
    caller since the dump stores only the projected matrices."""
    raw = Path(path).read_bytes()
    if raw[:4] != PODH_MAGIC:
        raise FormatError(f"{path}: not a PODH dump")
    m, n_terms = struct.unpack_from("<II", raw, 4)
    if len(param_names) != n_terms:
        raise FormatError(f"{path}: dump has {n_terms} terms, expected {len(param_names)}")
    block = 8 * m * m
    if len(raw) != 12 + (n_terms + 3) * block:
        raise FormatError(f"{path}: truncated dump")

    def mat(i: int) -> Array:
        off = 12 + i * block
        return np.frombuffer(raw, dtype="<f8", count=m * m, offset=off).reshape(m, m).copy()

    return ReducedModel(
        kinetic=mat(0),
        potential_base=mat(1),
        potential_terms=tuple(mat(2 + i) for i in range(n_terms)),
        boundary=mat(2 + n_terms),
        param_names=tuple(param_names),
        basis=basis,
    )


def write_energy_csv(stream: IO[str], energies: Array) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["state", "energy_ev"])
    for i, e in enumerate(energies, start=1):
        writer.writerow([i, f"{e:.6f}"])


def write_spectrum_csv(stream: IO[str], lambdas: Array) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["mode", "eigenvalue", "eigenvalue_rel"])
    lam1 = lambdas[0]
    for i, lam in enumerate(lambdas, start=1):
        writer.writerow([i, f"{lam:.9e}", f"{lam / lam1:.9e}"])


def write_coefficients_csv(stream: IO[str], energies: Array, coeffs: Array) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["state", "energy_ev"] + [f"a{j + 1}" for j in range(coeffs.shape[1])])
    for i in range(coeffs.shape[0]):
        writer.writerow([i + 1, f"{energies[i]:.6f}"]
                        + [f"{a:.9e}" for a in coeffs[i]])
