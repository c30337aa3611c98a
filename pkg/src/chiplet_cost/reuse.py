"""Chiplet-reuse scenarios.

Three schemes are supported:

* SCMS: one chiplet kind, systems differing only in how many copies they carry;
* OCME: a shared center die plus extension dies of one common footprint;
* FSMC: a package with ``k`` sockets filled by any multiset of ``n`` chiplet
  kinds that share a footprint.

``analyze`` prices every system of a scenario: RE per system, NRE from one
ledger covering the whole scenario, amortized by volume.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import (
    ChipletSpec,
    CostBreakdown,
    IntegrationTech,
    ProcessNode,
    SystemSpec,
    build_system,
)
from .errors import CountOverflow, EmptyCounts, FootprintMismatch, InvariantViolation
from .nrecost import NreLedger, amortize, group_nre
from .recost import system_re_cost

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class ReuseScenario:
    systems: tuple[SystemSpec, ...]
    package_reuse: bool = False
    shared_package_area: float | None = None
    name: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "systems", tuple(self.systems))
        if self.package_reuse:
            if self.shared_package_area is None:
                raise InvariantViolation("package reuse needs a shared_package_area",
                                         "shared_package_area")
            for s in self.systems:
                if s.package_area != self.shared_package_area:
                    raise InvariantViolation(
                        f"system {s.name!r} package area {s.package_area} differs from the "
                        f"shared package area {self.shared_package_area}", "package_area")

    @property
    def chiplets(self) -> tuple[ChipletSpec, ...]:
        return tuple(dict.fromkeys(c for s in self.systems for c, _ in s.chiplets))


def _reuse_packages(systems: Sequence[SystemSpec], package_id: str) -> tuple[list[SystemSpec], float]:
    """Resize every package to the largest footprint and mark it shared."""
    area = max(s.package_area for s in systems)
    return [s.replace(package_area=area, package_id=package_id) for s in systems], area


def _finish(name: str, systems: list[SystemSpec], package_reuse: bool) -> ReuseScenario:
    if package_reuse:
        systems, area = _reuse_packages(systems, f"{name}_pkg")
        return ReuseScenario(tuple(systems), True, area, name)
    return ReuseScenario(tuple(systems), False, None, name)


def scms(
    chiplet: ChipletSpec,
    counts: Sequence[int],
    tech: IntegrationTech,
    quantity_each: int,
    package_reuse: bool = False,
    name: str = "scms",
) -> ReuseScenario:
    """One system per multiplicity in ``counts``, all built from ``chiplet``."""
    if not counts:
        raise EmptyCounts("SCMS needs at least one chiplet count", "counts")
    systems = []
    for i, n in enumerate(counts):
        if n < 1:
            raise EmptyCounts(f"chiplet count must be >= 1, got {n}", f"counts[{i}]")
        systems.append(build_system([(chiplet, n)], tech, quantity_each, name=f"{name}_{n}x"))
    return _finish(name, systems, package_reuse)


def _check_footprint(chiplets: Sequence[ChipletSpec], what: str) -> None:
    areas = {c.total_area for c in chiplets}
    if len(areas) > 1 and not all(math.isclose(a, min(areas), rel_tol=1e-9) for a in areas):
        raise FootprintMismatch(
            f"{what} must share one footprint, got areas {sorted(round(a, 6) for a in areas)}", what)


def ocme_collocations(n_extensions: int, sockets: int) -> list[tuple[int, ...]]:
    """Extension multisets (as index tuples) for the OCME family.

    Center alone; center plus each single extension; and, when there are
    at least two extensions, center plus one of every extension with the
    remaining sockets filled by repeats of the last extension.
    """
    combos: list[tuple[int, ...]] = [()]
    if n_extensions == 0:
        return combos
    combos += [(i,) for i in range(n_extensions)]
    if n_extensions >= 2:
        full = tuple(range(n_extensions))
        if len(full) > sockets:
            raise InvariantViolation(
                f"{n_extensions} extensions do not fit in {sockets} sockets", "sockets")
        combos.append(full + (n_extensions - 1,) * (sockets - len(full)))
    return combos


def ocme(
    center: ChipletSpec,
    extensions: Sequence[ChipletSpec],
    sockets: int,
    tech: IntegrationTech,
    quantity_each: int,
    package_reuse: bool = False,
    center_node_override: ProcessNode | None = None,
    name: str = "ocme",
) -> ReuseScenario:
    if sockets < 1:
        raise InvariantViolation("sockets must be >= 1", "sockets")
    if extensions:
        _check_footprint(extensions, "extensions")
    if center_node_override is not None:
        center = center.on_node(center_node_override, name=f"{center.name}_{center_node_override.name}")
    systems = []
    for combo in ocme_collocations(len(extensions), sockets):
        parts: list[tuple[ChipletSpec, int]] = [(center, 1)]
        label = "C"
        for idx, grp in itertools.groupby(combo):
            k = len(list(grp))
            parts.append((extensions[idx], k))
            label += extensions[idx].name if k == 1 else f"{extensions[idx].name}{k}"
        systems.append(build_system(parts, tech, quantity_each, name=f"{name}_{label}"))
    return _finish(name, systems, package_reuse)


def fsmc_count(n: int, k: int, limit: int | None = INT64_MAX) -> int:
    """Number of non-empty multisets of size <= k over n kinds.

    ``sum(C(n+i-1, i) for i in 1..k)``, in exact integer arithmetic. Python
    integers do not wrap; ``limit`` (default: int64 range) turns results too
    large for fixed-width consumers into a CountOverflow.
    """
    if n < 1 or k < 1:
        raise InvariantViolation(f"need n >= 1 and k >= 1, got n={n}, k={k}", "n" if n < 1 else "k")
    total = sum(math.comb(n + i - 1, i) for i in range(1, k + 1))
    if limit is not None and total > limit:
        raise CountOverflow(f"fsmc_count({n}, {k}) = {total} exceeds {limit}", "k")
    return total


def fsmc_enumerate(
    chiplets: Sequence[ChipletSpec],
    k: int,
    tech: IntegrationTech,
    quantity_each: int,
    package_reuse: bool = True,
    name: str = "fsmc",
) -> ReuseScenario:
    """Every collocation of 1..k chiplets in a k-socket package.

    Systems are ordered by size, then lexicographically by chiplet index.
    By default all systems share the one k-socket package.
    """
    if not chiplets:
        raise EmptyCounts("FSMC needs at least one chiplet kind", "chiplets")
    if k < 1:
        raise InvariantViolation("sockets must be >= 1", "k")
    _check_footprint(chiplets, "chiplets")
    systems = []
    for size in range(1, k + 1):
        for combo in itertools.combinations_with_replacement(range(len(chiplets)), size):
            parts = [(chiplets[i], len(list(g))) for i, g in itertools.groupby(combo)]
            label = "".join(f"{chiplets[i].name}{len(list(g))}" for i, g in itertools.groupby(combo))
            systems.append(build_system(parts, tech, quantity_each, name=f"{name}_{label}"))
    if package_reuse:
        # the shared package is sized for k sockets, whatever the largest system
        area = tech.interposer_area_factor * k * max(c.total_area for c in chiplets)
        systems = [s.replace(package_area=area, package_id=f"{name}_pkg") for s in systems]
        return ReuseScenario(tuple(systems), True, area, name)
    return ReuseScenario(tuple(systems), False, None, name)


@dataclass(frozen=True)
class ScenarioResult:
    breakdowns: dict[str, CostBreakdown]
    ledger: NreLedger = field(compare=False)
    quantities: dict[str, int] = field(default_factory=dict)

    @property
    def scenario_total(self) -> float:
        return math.fsum(b.total * self.quantities[n] for n, b in self.breakdowns.items())

    @property
    def total_units(self) -> int:
        return sum(self.quantities.values())

    @property
    def mean_cost(self) -> float:
        """Volume-weighted mean per-unit total cost."""
        return self.scenario_total / self.total_units

    @property
    def average_normalized_cost(self) -> float:
        """Volume-weighted mean of total / RE per system (1.0 means no NRE burden)."""
        return math.fsum(b.total / b.re_total * self.quantities[n]
                         for n, b in self.breakdowns.items()) / self.total_units

    @property
    def nre_share(self) -> float:
        nre = math.fsum(b.nre_total * self.quantities[n] for n, b in self.breakdowns.items())
        return nre / self.scenario_total

    def summary(self) -> dict:
        return {
            "systems": len(self.breakdowns),
            "total_units": self.total_units,
            "scenario_total": self.scenario_total,
            "mean_cost": self.mean_cost,
            "average_normalized_cost": self.average_normalized_cost,
            "nre_share": self.nre_share,
            "nre_ledger_total": self.ledger.total,
        }


def evaluate_systems(systems: Sequence[SystemSpec], ledger: NreLedger | None = None,
                     jobs: int = 1) -> ScenarioResult:
    """RE per system plus NRE from a group ledger, amortized over the group."""
    systems = list(systems)
    names = [s.name for s in systems]
    if len(set(names)) != len(names):
        raise InvariantViolation("system names must be unique within a group", "systems")
    ledger = ledger if ledger is not None else group_nre(systems)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            re_costs = list(ex.map(system_re_cost, systems))
    else:
        re_costs = [system_re_cost(s) for s in systems]
    nre = amortize(ledger, systems)
    return ScenarioResult(
        {s.name: re.with_nre(nre[s.name]) for s, re in zip(systems, re_costs)},
        ledger,
        {s.name: s.quantity for s in systems},
    )


def analyze(scenario: ReuseScenario, jobs: int = 1) -> ScenarioResult:
    return evaluate_systems(scenario.systems, jobs=jobs)


def with_added_systems(scenario: ReuseScenario, extra: Iterable[SystemSpec]) -> ReuseScenario:
    systems = list(scenario.systems) + list(extra)
    if scenario.package_reuse:
        systems = [s.replace(package_area=scenario.shared_package_area,
                             package_id=scenario.systems[0].package_id) for s in systems]
    return ReuseScenario(tuple(systems), scenario.package_reuse, scenario.shared_package_area,
                         scenario.name)


def scenario_from_spec(spec, section: str = "scenario") -> ReuseScenario:
    """Build a scenario from the ``scenario`` section of a parsed spec document.

    ``scheme`` is one of ``scms``, ``ocme``, ``fsmc`` or ``custom``; a custom
    scenario is simply the document's system list.
    """
    from .errors import ParseError

    doc = spec.sections.get(section)
    if not isinstance(doc, dict):
        raise ParseError("spec has no scenario section", section)
    cat = spec.catalog
    scheme = doc.get("scheme")
    name = str(doc.get("name", scheme or "scenario"))
    allowed = {
        "scms": {"scheme", "name", "chiplet", "counts", "tech", "quantity_each", "package_reuse"},
        "ocme": {"scheme", "name", "center", "extensions", "sockets", "tech", "quantity_each",
                 "package_reuse", "center_node_override"},
        "fsmc": {"scheme", "name", "chiplets", "sockets", "tech", "quantity_each", "package_reuse"},
        "custom": {"scheme", "name", "package_reuse"},
    }
    if scheme not in allowed:
        raise ParseError(f"unknown scheme {scheme!r}; expected one of {sorted(allowed)}",
                         f"{section}.scheme")
    extra = sorted(set(doc) - allowed[scheme])
    if extra:
        raise ParseError(f"unknown field(s) {extra}", f"{section}.{extra[0]}")

    def need(key):
        if key not in doc:
            raise ParseError(f"missing required field {key!r}", f"{section}.{key}")
        return doc[key]

    def integer(key):
        v = need(key)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParseError(f"{key} must be an integer", f"{section}.{key}")
        return v

    reuse_pkg = bool(doc.get("package_reuse", scheme == "fsmc"))
    if scheme == "custom":
        systems = list(spec.systems)
        if not systems:
            raise ParseError("custom scenario needs systems", "systems")
        return _finish(name, systems, reuse_pkg)
    tech = cat.tech(need("tech"), f"{section}.tech")
    qty = integer("quantity_each")
    if scheme == "scms":
        counts = need("counts")
        if not isinstance(counts, list):
            raise ParseError("counts must be a list", f"{section}.counts")
        return scms(spec.chiplet(need("chiplet"), f"{section}.chiplet"), counts, tech, qty,
                    reuse_pkg, name=name)
    if scheme == "ocme":
        exts = [spec.chiplet(c, f"{section}.extensions[{i}]")
                for i, c in enumerate(doc.get("extensions", []))]
        override = doc.get("center_node_override")
        return ocme(spec.chiplet(need("center"), f"{section}.center"), exts, integer("sockets"),
                    tech, qty, reuse_pkg,
                    cat.node(override, f"{section}.center_node_override") if override else None,
                    name=name)
    chips = [spec.chiplet(c, f"{section}.chiplets[{i}]") for i, c in enumerate(need("chiplets"))]
    return fsmc_enumerate(chips, integer("sockets"), tech, qty, reuse_pkg, name=name)
