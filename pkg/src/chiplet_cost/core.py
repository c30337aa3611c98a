"""Domain types: process nodes, modules, chiplets, integration technologies and systems.

A system is a package of chips; a chip is a set of modules at one process
node, plus (for chiplets) a die-to-die interface taking a fixed fraction of
the die area. All types are frozen and compare by value, so the same
chiplet used by several systems is recognised as one design.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from typing import ClassVar, Iterable, Sequence

from .errors import (
    EmptySystem,
    InvariantViolation,
    MonolithicWithD2D,
    NodeMismatchWithinChiplet,
)

DEFAULT_CLUSTER_PARAM = 3.0
DEFAULT_D2D_FRACTION = 0.10


def _check(cond: bool, message: str, key: str | None = None) -> None:
    if not cond:
        raise InvariantViolation(message, key)


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


@dataclass(frozen=True)
class ProcessNode:
    """Fabrication node economics.

    ``defect_density`` is stored per mm². Catalog documents give it per cm²;
    use :meth:`from_per_cm2` or the catalog loader to convert.
    """

    name: str
    defect_density: float
    wafer_cost: float
    cluster_param: float = DEFAULT_CLUSTER_PARAM
    wafer_diameter: float = 300.0
    edge_exclusion: float = 3.0
    nre_module_factor: float = 0.0
    nre_chip_factor: float = 0.0
    fixed_chip_nre: float = 0.0
    d2d_nre_cost: float = 0.0
    die_adder: float = 0.0  # wafer sort / bumping / test per die

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name != "name":
                _check(_finite(getattr(self, f.name)), f"{f.name} must be a finite number", f.name)
        _check(self.defect_density >= 0, "defect_density must be >= 0", "defect_density")
        _check(self.cluster_param > 0, "cluster_param must be > 0", "cluster_param")
        _check(self.edge_exclusion >= 0, "edge_exclusion must be >= 0", "edge_exclusion")
        _check(
            self.wafer_diameter > 2 * self.edge_exclusion,
            "wafer_diameter must exceed twice the edge exclusion",
            "wafer_diameter",
        )
        for name in ("wafer_cost", "nre_module_factor", "nre_chip_factor",
                     "fixed_chip_nre", "d2d_nre_cost", "die_adder"):
            _check(getattr(self, name) >= 0, f"{name} must be >= 0", name)

    @classmethod
    def from_per_cm2(cls, name: str, defect_density_per_cm2: float, **kwargs) -> "ProcessNode":
        return cls(name=name, defect_density=defect_density_per_cm2 / 100.0, **kwargs)

    @property
    def defect_density_per_cm2(self) -> float:
        return self.defect_density * 100.0

    @property
    def usable_radius(self) -> float:
        return self.wafer_diameter / 2.0 - self.edge_exclusion

    @property
    def wafer_area(self) -> float:
        return math.pi * (self.wafer_diameter / 2.0) ** 2

    def replace(self, **changes) -> "ProcessNode":
        return replace(self, **changes)


@dataclass(frozen=True)
class ModuleSpec:
    """An indivisible group of functional units at one node."""

    name: str
    area: float
    node: ProcessNode

    def __post_init__(self) -> None:
        _check(_finite(self.area) and self.area > 0, f"module {self.name!r}: area must be > 0", "area")


@dataclass(frozen=True)
class ChipletSpec:
    """A die built from modules of a single node.

    ``total_area`` includes the die-to-die interface, which occupies
    ``d2d_area_fraction`` of the finished die.
    """

    name: str
    modules: tuple[ModuleSpec, ...]
    d2d_area_fraction: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "modules", tuple(self.modules))
        _check(len(self.modules) > 0, f"chiplet {self.name!r} has no modules", "modules")
        _check(
            _finite(self.d2d_area_fraction) and 0 <= self.d2d_area_fraction < 1,
            f"chiplet {self.name!r}: d2d_area_fraction must be in [0, 1)",
            "d2d_area_fraction",
        )
        nodes = {m.node for m in self.modules}
        if len(nodes) > 1:
            raise NodeMismatchWithinChiplet(
                f"chiplet {self.name!r} mixes nodes {sorted(n.name for n in nodes)}", "modules"
            )

    @property
    def node(self) -> ProcessNode:
        return self.modules[0].node

    @property
    def module_area(self) -> float:
        return math.fsum(m.area for m in self.modules)

    @property
    def total_area(self) -> float:
        return self.module_area / (1.0 - self.d2d_area_fraction)

    @property
    def d2d_area(self) -> float:
        return self.total_area * self.d2d_area_fraction

    @property
    def distinct_modules(self) -> tuple[ModuleSpec, ...]:
        return tuple(dict.fromkeys(self.modules))

    def on_node(self, node: ProcessNode, name: str | None = None) -> "ChipletSpec":
        """Same modules (same areas) retargeted to another node."""
        mods = tuple(ModuleSpec(m.name, m.area, node) for m in self.modules)
        return ChipletSpec(name or self.name, mods, self.d2d_area_fraction)


class TechKind(str, enum.Enum):
    MONOLITHIC = "Monolithic"
    MCM = "MCM"
    INFO_CHIP_FIRST = "InFO_chip_first"
    INFO_CHIP_LAST = "InFO_chip_last"
    INTERPOSER_2P5D = "Interposer2p5D"

    @property
    def has_interposer(self) -> bool:
        return self in (TechKind.INFO_CHIP_FIRST, TechKind.INFO_CHIP_LAST, TechKind.INTERPOSER_2P5D)


@dataclass(frozen=True)
class IntegrationTech:
    """Packaging technology and its cost/yield parameters.

    For InFO and 2.5D the interposer (RDL or silicon) is costed as a die at
    ``interposer_node``; its yield follows the same defect model as chips.
    """

    name: str
    kind: TechKind
    substrate_cost_per_area: float = 0.0
    substrate_growth_factor: float = 1.0
    substrate_yield: float = 0.98
    chip_bond_yield: float = 0.99
    bond_cost_per_chip: float = 0.0
    interposer_node: ProcessNode | None = None
    interposer_area_factor: float = 1.1
    package_nre_factor: float = 0.0
    package_fixed_nre: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TechKind(self.kind))
        for name in ("substrate_cost_per_area", "bond_cost_per_chip",
                     "package_nre_factor", "package_fixed_nre"):
            v = getattr(self, name)
            _check(_finite(v) and v >= 0, f"{name} must be >= 0", name)
        for name in ("substrate_yield", "chip_bond_yield"):
            v = getattr(self, name)
            _check(_finite(v) and 0 < v <= 1, f"{name} must be in (0, 1]", name)
        for name in ("substrate_growth_factor", "interposer_area_factor"):
            v = getattr(self, name)
            _check(_finite(v) and v >= 1, f"{name} must be >= 1", name)
        if self.kind.has_interposer:
            _check(self.interposer_node is not None,
                   f"{self.kind.value} requires an interposer_node", "interposer_node")

    @property
    def y2(self) -> float:
        return self.chip_bond_yield

    @property
    def y3(self) -> float:
        return self.substrate_yield

    def replace(self, **changes) -> "IntegrationTech":
        return replace(self, **changes)


@dataclass(frozen=True)
class SystemSpec:
    """A package of chiplets (with multiplicity) under one technology.

    Systems with the same ``package_id`` share one package design; by
    default every system has its own package.
    """

    name: str
    chiplets: tuple[tuple[ChipletSpec, int], ...]
    tech: IntegrationTech
    package_area: float
    quantity: int = 1
    package_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "chiplets", tuple((c, int(n)) for c, n in self.chiplets))
        if not self.chiplets:
            raise EmptySystem(f"system {self.name!r} has no chiplets", "chiplets")
        for c, n in self.chiplets:
            _check(n >= 1, f"system {self.name!r}: chiplet {c.name!r} count must be >= 1", "chiplets")
        _check(isinstance(self.quantity, int) and self.quantity >= 1,
               f"system {self.name!r}: quantity must be an integer >= 1", "quantity")
        _check(_finite(self.package_area) and self.package_area > 0,
               f"system {self.name!r}: package_area must be > 0", "package_area")
        if self.tech.kind is TechKind.MONOLITHIC:
            if self.chip_count != 1:
                raise MonolithicWithD2D(
                    f"monolithic system {self.name!r} must contain exactly one chip", "chiplets")
            if self.chiplets[0][0].d2d_area_fraction != 0:
                raise MonolithicWithD2D(
                    f"monolithic system {self.name!r} cannot carry a D2D interface", "chiplets")

    @property
    def chip_count(self) -> int:
        return sum(n for _, n in self.chiplets)

    @property
    def chips_area(self) -> float:
        return math.fsum(c.total_area * n for c, n in self.chiplets)

    @property
    def package_key(self) -> str:
        return self.package_id or self.name

    @property
    def nodes(self) -> tuple[ProcessNode, ...]:
        return tuple(dict.fromkeys(c.node for c, _ in self.chiplets))

    def module_list(self) -> list[ModuleSpec]:
        """All module instances in the system, with multiplicity."""
        return [m for c, n in self.chiplets for _ in range(n) for m in c.modules]

    def replace(self, **changes) -> "SystemSpec":
        return replace(self, **changes)


def build_system(
    chiplets: Iterable[ChipletSpec | tuple[ChipletSpec, int]],
    tech: IntegrationTech,
    quantity: int = 1,
    name: str = "system",
    package_area: float | None = None,
    package_id: str | None = None,
) -> SystemSpec:
    """Assemble and validate a system.

    ``chiplets`` may list bare chiplets (count 1 each, repeats are merged)
    or ``(chiplet, count)`` pairs. When ``package_area`` is omitted it is
    the summed chip area times the technology's interposer area factor.
    """
    counts: dict[ChipletSpec, int] = {}
    for item in chiplets:
        c, n = item if isinstance(item, tuple) else (item, 1)
        counts[c] = counts.get(c, 0) + n
    if not counts:
        raise EmptySystem(f"system {name!r} has no chiplets", "chiplets")
    pairs = tuple(counts.items())
    if package_area is None:
        package_area = tech.interposer_area_factor * math.fsum(c.total_area * n for c, n in pairs)
    return SystemSpec(name, pairs, tech, package_area, quantity, package_id)


def make_chiplet(
    name: str,
    area: float,
    node: ProcessNode,
    d2d_area_fraction: float = DEFAULT_D2D_FRACTION,
    module_name: str | None = None,
) -> ChipletSpec:
    """Single-module chiplet shortcut."""
    return ChipletSpec(name, (ModuleSpec(module_name or name, area, node),), d2d_area_fraction)


def soc_equivalent(
    system: SystemSpec,
    tech: IntegrationTech,
    node: ProcessNode | None = None,
    name: str | None = None,
    quantity: int | None = None,
) -> SystemSpec:
    """The monolithic SoC implementing every module instance of ``system``.

    Modules keep their areas; all are placed at ``node`` (default: the node
    of the system's first chiplet). The D2D interface is dropped.
    """
    node = node or system.chiplets[0][0].node
    mods: Sequence[ModuleSpec] = [ModuleSpec(m.name, m.area, node) for m in system.module_list()]
    chip = ChipletSpec(f"{name or system.name + '_soc'}_die", tuple(mods), 0.0)
    return build_system([chip], tech, quantity or system.quantity, name=name or f"{system.name}_soc")


@dataclass(frozen=True)
class CostBreakdown:
    """Per-unit cost split into five RE and four amortized NRE components."""

    raw_chips: float = 0.0
    chip_defects: float = 0.0
    raw_package: float = 0.0
    package_defects: float = 0.0
    wasted_kgd: float = 0.0
    nre_modules: float = 0.0
    nre_chips: float = 0.0
    nre_packages: float = 0.0
    nre_d2d: float = 0.0

    RE_FIELDS: ClassVar[tuple[str, ...]] = (
        "raw_chips", "chip_defects", "raw_package", "package_defects", "wasted_kgd")
    NRE_FIELDS: ClassVar[tuple[str, ...]] = ("nre_modules", "nre_chips", "nre_packages", "nre_d2d")

    def __post_init__(self) -> None:
        for name in self.RE_FIELDS + self.NRE_FIELDS:
            v = getattr(self, name)
            _check(_finite(v) and v >= 0, f"cost component {name} must be finite and >= 0", name)

    @property
    def re_total(self) -> float:
        return math.fsum(getattr(self, f) for f in self.RE_FIELDS)

    @property
    def nre_total(self) -> float:
        return math.fsum(getattr(self, f) for f in self.NRE_FIELDS)

    @property
    def total(self) -> float:
        return math.fsum(getattr(self, f) for f in self.RE_FIELDS + self.NRE_FIELDS)

    @property
    def die_cost(self) -> float:
        return self.raw_chips + self.chip_defects

    @property
    def packaging(self) -> float:
        return self.raw_package + self.package_defects + self.wasted_kgd

    def with_nre(self, nre: "CostBreakdown") -> "CostBreakdown":
        return replace(self, **{f: getattr(nre, f) for f in self.NRE_FIELDS})

    def scaled(self, factor: float) -> "CostBreakdown":
        return CostBreakdown(**{f: getattr(self, f) * factor for f in self.RE_FIELDS + self.NRE_FIELDS})

    def as_dict(self) -> dict[str, float]:
        d = {f: getattr(self, f) for f in self.RE_FIELDS + self.NRE_FIELDS}
        d["total"] = self.total
        return d


__all__ = [
    "ProcessNode", "ModuleSpec", "ChipletSpec", "TechKind", "IntegrationTech",
    "SystemSpec", "CostBreakdown", "build_system", "make_chiplet", "soc_equivalent",
    "DEFAULT_CLUSTER_PARAM", "DEFAULT_D2D_FRACTION",
]
