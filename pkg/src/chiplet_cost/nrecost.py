"""Non-recurring engineering cost of chips and groups of systems.

A group ledger records every design item once (module, chip, package, D2D
interface per node) together with the systems that use it. Amortization
spreads each item over the units of its users in proportion to volume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import ChipletSpec, CostBreakdown, ModuleSpec, SystemSpec, TechKind
from .errors import InvariantViolation, NonMonolithicInSoCGroup, ZeroQuantity

CATEGORIES = ("module", "chip", "package", "d2d")
_BREAKDOWN_FIELD = {
    "module": "nre_modules",
    "chip": "nre_chips",
    "package": "nre_packages",
    "d2d": "nre_d2d",
}


def module_nre(module: ModuleSpec) -> float:
    return module.node.nre_module_factor * module.area


def chip_design_nre(chiplet: ChipletSpec) -> float:
    """Chip-level part only: ``K_c * S_c + C`` over the full die area."""
    node = chiplet.node
    return node.nre_chip_factor * chiplet.total_area + node.fixed_chip_nre


def chip_nre(chiplet: ChipletSpec) -> float:
    """Full NRE to design one chip from scratch.

    ``K_c * S_c + sum(K_m * S_m) + C``. The D2D interface adds to the die
    area ``S_c`` but is not a module here; its design cost is booked once
    per node separately.
    """
    return chip_design_nre(chiplet) + math.fsum(module_nre(m) for m in chiplet.distinct_modules)


def package_nre(system: SystemSpec) -> float:
    t = system.tech
    return t.package_nre_factor * system.package_area + t.package_fixed_nre


def module_key(m: ModuleSpec) -> str:
    return f"{m.name}@{m.node.name}"


@dataclass
class NreLedger:
    """Design items with their one-time cost and their users.

    ``costs[category][key]`` is the item's NRE; ``users[category][key]`` is
    the set of system names sharing it.
    """

    costs: dict[str, dict[str, float]] = field(
        default_factory=lambda: {c: {} for c in CATEGORIES})
    users: dict[str, dict[str, set[str]]] = field(
        default_factory=lambda: {c: {} for c in CATEGORIES})

    def add(self, category: str, key: str, cost: float, system: str) -> None:
        """Record ``system`` as a user of an item; the cost is booked once."""
        book = self.costs[category]
        if key in book:
            if not math.isclose(book[key], cost, rel_tol=1e-12, abs_tol=0.0):
                raise InvariantViolation(
                    f"{category} {key!r} is defined twice with different NRE "
                    f"({book[key]!r} vs {cost!r}); names must be unique", key)
        else:
            book[key] = cost
        self.users[category].setdefault(key, set()).add(system)

    @property
    def module_nre(self) -> dict[str, float]:
        return self.costs["module"]

    @property
    def chip_nre(self) -> dict[str, float]:
        return self.costs["chip"]

    @property
    def package_nre(self) -> dict[str, float]:
        return self.costs["package"]

    @property
    def d2d_nre(self) -> dict[str, float]:
        return self.costs["d2d"]

    def category_total(self, category: str) -> float:
        return math.fsum(self.costs[category].values())

    @property
    def total(self) -> float:
        return math.fsum(v for c in CATEGORIES for v in self.costs[c].values())

    def merge(self, other: "NreLedger") -> "NreLedger":
        out = NreLedger()
        for led in (self, other):
            for cat in CATEGORIES:
                for key, cost in led.costs[cat].items():
                    for user in sorted(led.users[cat][key]):
                        out.add(cat, key, cost, user)
        return out

    def as_dict(self) -> dict:
        return {
            cat: {
                key: {"nre": self.costs[cat][key], "users": sorted(self.users[cat][key])}
                for key in sorted(self.costs[cat])
            }
            for cat in CATEGORIES
        } | {"total": self.total}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def group_nre_soc(systems: Iterable[SystemSpec]) -> NreLedger:
    """NRE for a group of monolithic SoCs.

    Modules are designed once for the whole group; every SoC's chip and
    package are designed individually.
    """
    ledger = NreLedger()
    for s in systems:
        if s.tech.kind is not TechKind.MONOLITHIC:
            raise NonMonolithicInSoCGroup(
                f"system {s.name!r} uses {s.tech.kind.value}, not a monolithic SoC", s.name)
        chip = s.chiplets[0][0]
        for m in chip.distinct_modules:
            ledger.add("module", module_key(m), module_nre(m), s.name)
        ledger.add("chip", f"{s.name}:{chip.name}", chip_design_nre(chip), s.name)
        ledger.add("package", s.package_key, package_nre(s), s.name)
    return ledger


def group_nre_multichip(systems: Iterable[SystemSpec]) -> NreLedger:
    """NRE for a group of multi-chip systems sharing a chiplet catalog.

    Each distinct chiplet is designed once, each distinct module once, each
    package once per package id, and the D2D interface once per node that
    hosts a chiplet carrying one.
    """
    ledger = NreLedger()
    for s in systems:
        for chip, _ in s.chiplets:
            for m in chip.distinct_modules:
                ledger.add("module", module_key(m), module_nre(m), s.name)
            ledger.add("chip", chip.name, chip_design_nre(chip), s.name)
            if chip.d2d_area_fraction > 0:
                ledger.add("d2d", chip.node.name, chip.node.d2d_nre_cost, s.name)
        ledger.add("package", s.package_key, package_nre(s), s.name)
    return ledger


def group_nre(systems: Sequence[SystemSpec]) -> NreLedger:
    """SoC ledger when every system is monolithic, multi-chip ledger otherwise."""
    if systems and all(s.tech.kind is TechKind.MONOLITHIC for s in systems):
        return group_nre_soc(systems)
    return group_nre_multichip(systems)


def amortize(ledger: NreLedger, systems: Iterable[SystemSpec]) -> dict[str, CostBreakdown]:
    """Per-unit NRE for each system.

    An item's cost is divided by the total production volume of the
    systems that use it; every unit of every user carries the same share.
    """
    systems = list(systems)
    qty: Mapping[str, int] = {}
    for s in systems:
        if s.quantity < 1:
            raise ZeroQuantity(f"system {s.name!r} has quantity {s.quantity}", s.name)
        qty[s.name] = s.quantity
    parts: dict[str, dict[str, list[float]]] = {
        s.name: {f: [] for f in CostBreakdown.NRE_FIELDS} for s in systems}
    for cat in CATEGORIES:
        for key, cost in ledger.costs[cat].items():
            users = [u for u in ledger.users[cat][key] if u in qty]
            if not users:
                continue
            per_unit = cost / sum(qty[u] for u in users)
            for u in users:
                parts[u][_BREAKDOWN_FIELD[cat]].append(per_unit)
    return {
        name: CostBreakdown(**{f: math.fsum(v) for f, v in comps.items()})
        for name, comps in parts.items()
    }
