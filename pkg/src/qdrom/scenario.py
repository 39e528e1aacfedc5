"""Scenario files: flat key/value descriptions of a structure, its
parametric potential, and the training/test parameter lists.

Schema (one `key = value` pair per line, `#` comments, case-insensitive
keys; lengths nm, energies eV, fields kV/cm):

    structure.lx / structure.ly    domain size
    structure.h                    grid spacing
    layout.rows / layout.cols      dot array shape
    layout.dot_size / layout.gap / layout.spacer
    barrier.mass / barrier.band_edge
    well.mass / well.band_edge
    bc.all | bc.left/right/bottom/top   dirichlet | neumann | periodic
    potential.terms                efield | pyramids | none
    pyramid.base                   base edge (pyramids only)
    pyramid.centers = auto         quarter-points + center layout, or
    pyramid.center.<i> = x, y      explicit apex positions
    train.n_states                 states kept per training configuration
    train.config.<i> = p1, p2, ... one training configuration per line
    test.<name> = p1, p2, ...      named test parameter sets (optional)

Parameter vectors are ordered (Ex, Ey) for efield and (h1..hN) for
pyramids, matching `potential.terms`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pod import TrainingPlan
from .structure import (
    Array,
    BoundaryConditions,
    ConfigurationError,
    DotLayout,
    Grid,
    MaterialParams,
    PotentialAssembly,
    PyramidSpec,
    ScenarioParams,
    StructureSpec,
    build_grid,
    default_pyramids,
    field_terms,
    pyramid_terms,
    sample_mass_and_base,
)


@dataclass(frozen=True)
class Scenario:
    """Fully resolved scenario: structure, grid, fields, training plan."""

    name: str
    spec: StructureSpec
    grid: Grid
    mass: Array = field(repr=False)
    assembly: PotentialAssembly = field(repr=False)
    plan: TrainingPlan | None
    tests: dict[str, ScenarioParams]
    raw: dict[str, str] = field(repr=False, default_factory=dict)

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.assembly.param_names


def standard_assembly(spec: StructureSpec, grid: Grid, terms: str,
                      pyramid_base: float = 4.8,
                      pyramids: list[PyramidSpec] | None = None,
                      ) -> tuple[Array, PotentialAssembly]:
    """Sample mass and band offset, then attach the requested affine terms."""
    mass, base = sample_mass_and_base(spec, grid)
    if terms == "efield":
        sx, sy = field_terms(grid)
        affine = (("Ex", sx), ("Ey", sy))
    elif terms == "pyramids":
        if pyramids is None:
            pyramids = default_pyramids(grid.lx, grid.ly, pyramid_base)
        shapes = pyramid_terms(pyramids, grid)
        affine = tuple((f"h{i + 1}", s) for i, s in enumerate(shapes))
    elif terms == "none":
        affine = ()
    else:
        raise ConfigurationError(f"unknown potential terms {terms!r}")
    return mass, PotentialAssembly(base=base, affine_terms=affine)


def _parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().lower()] = value.strip()
    return out

def _floats(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad numeric list {value!r}") from exc


def _require(kv: dict[str, str], key: str) -> str:
    if key not in kv:
        raise ConfigurationError(f"missing required key {key!r}")
    return kv[key]


def scenario_from_dict(kv: dict[str, str], name: str = "scenario") -> Scenario:
    try:
        lx = float(_require(kv, "structure.lx"))
        ly = float(_require(kv, "structure.ly"))
        h = float(_require(kv, "structure.h"))
        layout = DotLayout(
            rows=int(_require(kv, "layout.rows")),
            cols=int(_require(kv, "layout.cols")),
            dot_size=float(_require(kv, "layout.dot_size")),
            gap=float(_require(kv, "layout.gap")),
            spacer=float(_require(kv, "layout.spacer")),
        )
        barrier = MaterialParams(float(_require(kv, "barrier.mass")),
                                 float(_require(kv, "barrier.band_edge")))
        well = MaterialParams(float(_require(kv, "well.mass")),
                              float(_require(kv, "well.band_edge")))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc

    default_bc = kv.get("bc.all", "dirichlet")
    bc = BoundaryConditions(
        left=kv.get("bc.left", default_bc),
        right=kv.get("bc.right", default_bc),
        bottom=kv.get("bc.bottom", default_bc),
        top=kv.get("bc.top", default_bc),
    )

    spec = StructureSpec(domain_size=(lx, ly), dot_layout=layout,
                         barrier_material=barrier, well_material=well,
                         bc=bc, grid_spacing=h)
    grid = build_grid(spec)

    terms = kv.get("potential.terms", "none")
    pyramids = None
    if terms == "pyramids":
        base_edge = float(kv.get("pyramid.base", "4.8"))
        centers = kv.get("pyramid.centers", "auto")
        explicit = sorted(k for k in kv if k.startswith("pyramid.center."))
        if explicit:
            pyramids = [PyramidSpec(*_floats(kv[k])[:2], base=base_edge) for k in explicit]
        elif centers == "auto":
            pyramids = default_pyramids(lx, ly, base_edge)
        else:
            raise ConfigurationError("pyramid.centers must be 'auto' or explicit pyramid.center.<i> keys")
    mass, assembly = standard_assembly(spec, grid, terms, pyramids=pyramids)

    plan = None
    config_keys = sorted(k for k in kv if k.startswith("train.config."))
    if config_keys:
        n_states = int(kv.get("train.n_states", "6"))
        configs = []
        for k in config_keys:
            values = _floats(kv[k])
            if len(values) != assembly.n_params:
                raise ConfigurationError(
                    f"{k}: got {len(values)} values for {assembly.n_params} parameters")
            configs.append(values)
        plan = TrainingPlan.of(configs, n_states)

    tests = {}
    for k in kv:
        if k.startswith("test."):
            values = _floats(kv[k])
            if len(values) != assembly.n_params:
                raise ConfigurationError(
                    f"{k}: got {len(values)} values for {assembly.n_params} parameters")
            tests[k[len("test."):]] = ScenarioParams.of(values)

    return Scenario(name=name, spec=spec, grid=grid, mass=mass,
                    assembly=assembly, plan=plan, tests=tests, raw=dict(kv))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"scenario file not found: {path}")
    return scenario_from_dict(_parse_kv(path.read_text()), name=path.stem)


def parse_param_overrides(text: str, param_names: tuple[str, ...]) -> ScenarioParams:
    """Parse 'Ex=25,Ey=-10' style CLI values; unset parameters are zero."""
    values = dict.fromkeys(param_names, 0.0)
    if text:
        for item in text.split(","):
            if "=" not in item:
                raise ConfigurationError(f"expected name=value, got {item!r}")
            name, val = item.split("=", 1)
            name = name.strip()
            if name not in values:
                raise ConfigurationError(
                    f"unknown parameter {name!r}; scenario has {', '.join(param_names)}")
            try:
                values[name] = float(val)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {name}: {val!r}") from exc
    return ScenarioParams.of([values[n] for n in param_names])
