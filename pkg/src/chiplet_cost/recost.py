"""Recurring (per-unit manufacturing) cost of a packaged system.

Five components are tracked separately: raw chips, chip defects, raw
package, package defects and known-good dies wasted by packaging failures.
Package yields follow the chip-last flow: dies are tested before bonding,
the interposer (if any) is tested before assembly, and any bonding failure
scraps the whole assembly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .core import ChipletSpec, CostBreakdown, SystemSpec, TechKind
from .errors import FlowNotSupported, ZeroYield
from .yieldmodel import DieCost, die_cost, die_yield


class Flow(str, enum.Enum):
    CHIP_FIRST = "chip-first"
    CHIP_LAST = "chip-last"


@dataclass(frozen=True)
class PackagingYields:
    y1: float  # interposer
    y2: float  # per-chip bond
    y3: float  # substrate / interposer attach
    n: int

    def __post_init__(self) -> None:
        for name in ("y1", "y2", "y3"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ZeroYield(f"packaging yield {name} must be in (0, 1], got {v}", name)
        if self.n < 1:
            raise ZeroYield("chip count must be >= 1", "n")

    @property
    def bonding(self) -> float:
        """Yield of bonding all n chips."""
        return self.y2 ** self.n

    @property
    def package(self) -> float:
        """Yield of the package itself (interposer and substrate attach)."""
        return self.y1 * self.y3


class PackagingCost(NamedTuple):
    raw_package: float
    package_defects: float
    wasted_kgd: float

    @property
    def total(self) -> float:
        return self.raw_package + self.package_defects + self.wasted_kgd


def chip_re_cost(chiplet: ChipletSpec) -> DieCost:
    return die_cost(chiplet.total_area, chiplet.node)


def kgd_cost(system: SystemSpec) -> float:
    """Summed known-good-die cost of every chip in the package."""
    return math.fsum(chip_re_cost(c).good * n for c, n in system.chiplets)


def interposer_area(system: SystemSpec) -> float:
    return system.package_area if system.tech.kind.has_interposer else 0.0


def interposer_cost(system: SystemSpec) -> float:
    """Raw interposer cost, priced as an untested die at the interposer node."""
    if not system.tech.kind.has_interposer:
        return 0.0
    return die_cost(system.package_area, system.tech.interposer_node).raw


def substrate_cost(system: SystemSpec) -> float:
    t = system.tech
    return t.substrate_cost_per_area * system.package_area * t.substrate_growth_factor


def bonding_cost(system: SystemSpec) -> float:
    t = system.tech
    if t.kind is TechKind.INFO_CHIP_FIRST:
        return 0.0
    # the interposer itself is bumped and bonded to the substrate once more
    bonds = system.chip_count + (1 if t.kind.has_interposer else 0)
    return t.bond_cost_per_chip * bonds


def packaging_yields(system: SystemSpec) -> PackagingYields:
    t = system.tech
    y1 = die_yield(system.package_area, t.interposer_node) if t.kind.has_interposer else 1.0
    if y1 <= 0:
        raise ZeroYield("interposer yield underflowed to zero", "interposer_node")
    return PackagingYields(y1, t.chip_bond_yield, t.substrate_yield, system.chip_count)


def packaging_cost(system: SystemSpec, kgd: float | None = None) -> PackagingCost:
    """Raw package cost plus the defect and wasted-KGD terms.

    interposer defects = interposer * (1/(y1*y2^n*y3) - 1)
    substrate defects  = substrate * (1/y3 - 1)
    wasted KGDs        = KGD * (1/(y2^n*y3) - 1)

    Chip-first InFO has no separate bonding step: the whole assembly, dies
    included, is scrapped at the package yield ``y1*y3``.
    """
    py = packaging_yields(system)
    kgd = kgd_cost(system) if kgd is None else kgd
    interposer = interposer_cost(system)
    substrate = substrate_cost(system)
    raw = substrate + interposer + bonding_cost(system)
    if system.tech.kind is TechKind.INFO_CHIP_FIRST:
        loss = 1.0 / py.package - 1.0
        return PackagingCost(raw, (interposer + substrate) * loss, kgd * loss)
    defects = (interposer * (1.0 / (py.y1 * py.bonding * py.y3) - 1.0)
               + substrate * (1.0 / py.y3 - 1.0))
    wasted = kgd * (1.0 / (py.bonding * py.y3) - 1.0)
    return PackagingCost(raw, defects, wasted)


def assembly_cost(system: SystemSpec, flow: Flow | str = Flow.CHIP_LAST) -> float:
    """Per-unit assembled cost under a chip-first or chip-last flow.

    chip-first: (sum(C_chip/Y_chip) + C_package) / Y_package
    chip-last:  (C_package/Y_package + sum(C_chip/Y_chip + C_bond)) / Y_bonding^n

    with ``Y_package = y1*y3`` and ``Y_bonding = y2``. The chip-last
    expression is evaluated as written: the package term is divided by
    ``Y_package`` and then, with the dies, by ``Y_bonding^n``.
    """
    flow = Flow(flow)
    if flow is Flow.CHIP_FIRST and system.tech.kind not in (
            TechKind.INFO_CHIP_FIRST, TechKind.INFO_CHIP_LAST):
        raise FlowNotSupported(f"{system.tech.kind.value} supports the chip-last flow only", "flow")
    py = packaging_yields(system)
    kgd = kgd_cost(system)
    c_package = interposer_cost(system) + substrate_cost(system)
    if flow is Flow.CHIP_FIRST:
        return (kgd + c_package) / py.package
    c_bond = system.tech.bond_cost_per_chip * system.chip_count
    return (c_package / py.package + kgd + c_bond) / py.bonding


def system_re_cost(system: SystemSpec) -> CostBreakdown:
    raw = defect = 0.0
    for c, n in system.chiplets:
        dc = chip_re_cost(c)
        raw += dc.raw * n
        defect += dc.defect * n
    pkg = packaging_cost(system, kgd=raw + defect)
    return CostBreakdown(
        raw_chips=raw,
        chip_defects=defect,
        raw_package=pkg.raw_package,
        package_defects=pkg.package_defects,
        wasted_kgd=pkg.wasted_kgd,
    )


RE_CSV_HEADER = ("system", *CostBreakdown.RE_FIELDS)
