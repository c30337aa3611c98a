"""Design-space sweeps and decision procedures.

* ``partition_sweep``: split a fixed module area into equal chiplets and
  price every (count, technology) cell.
* ``granularity_marginal_series``: defect-cost saving of each extra split.
* ``break_even_quantity``: the production volume at which a multi-chip
  implementation becomes cheaper per unit than the SoC.

Bisection on quantity is sound because RE cost does not depend on
quantity and per-unit NRE is ``ledger_total / quantity``; the per-unit cost
difference ``dRE + dNRE/q`` is therefore monotone in ``q``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    ChipletSpec,
    CostBreakdown,
    IntegrationTech,
    ModuleSpec,
    ProcessNode,
    SystemSpec,
    TechKind,
    build_system,
)
from .errors import InvariantViolation, NoCrossover, RangeExhausted
from .nrecost import group_nre
from .recost import system_re_cost

REFERENCE_SOC_AREA = 100.0


def equal_partition(
    total_module_area: float,
    count: int,
    node: ProcessNode,
    d2d_fraction: float,
    prefix: str = "part",
) -> list[ChipletSpec]:
    """``count`` distinct chiplets of equal module area; no D2D when count is 1."""
    if count < 1:
        raise InvariantViolation(f"chiplet count must be >= 1, got {count}", "chiplet_counts")
    frac = 0.0 if count == 1 else d2d_fraction
    area = total_module_area / count
    return [
        ChipletSpec(f"{prefix}{count}_{i}", (ModuleSpec(f"{prefix}_m{i}of{count}", area, node),), frac)
        for i in range(count)
    ]


def partition_system(
    total_module_area: float,
    count: int,
    tech: IntegrationTech,
    node: ProcessNode,
    d2d_fraction: float = 0.10,
    quantity: int = 1,
) -> SystemSpec:
    chips = equal_partition(total_module_area, count, node, d2d_fraction)
    return build_system(chips, tech, quantity, name=f"{tech.name}_x{count}")


@dataclass(frozen=True)
class SweepResult:
    """Rows of ``(axis value, {variant: CostBreakdown})`` sorted by axis value.

    ``reference`` is the RE total every normalized column is divided by.
    """

    axis: str
    rows: tuple[tuple[float, dict[str, CostBreakdown]], ...]
    reference: float = 1.0
    meta: dict = field(default_factory=dict)

    def cell(self, value: float, variant: str) -> CostBreakdown:
        for v, cells in self.rows:
            if v == value:
                return cells[variant]
        raise KeyError(value)

    def normalized(self, value: float, variant: str) -> CostBreakdown:
        return self.cell(value, variant).scaled(1.0 / self.reference)

    def variants(self) -> list[str]:
        seen: dict[str, None] = {}
        for _, cells in self.rows:
            seen.update(dict.fromkeys(cells))
        return list(seen)


def reference_soc_cost(node: ProcessNode, soc_tech: IntegrationTech,
                       area: float = REFERENCE_SOC_AREA) -> float:
    """RE total of a monolithic SoC of ``area`` mm² (the sweep's normalizer)."""
    return system_re_cost(partition_system(area, 1, soc_tech, node)).re_total


def partition_sweep(
    total_module_area: float,
    chiplet_counts: Sequence[int],
    techs: Sequence[IntegrationTech],
    node: ProcessNode,
    d2d_fraction: float = 0.10,
    reference_tech: IntegrationTech | None = None,
    jobs: int = 1,
) -> SweepResult:
    """RE breakdown for every (count, tech) cell.

    Costs are normalized to a 100 mm² monolithic SoC at the same node,
    packaged with ``reference_tech`` (default: the first monolithic tech in
    ``techs``, else the first tech).
    """
    counts = sorted(set(chiplet_counts))
    if not counts or counts[0] < 1:
        raise InvariantViolation("chiplet counts must be >= 1", "chiplet_counts")
    if reference_tech is None:
        mono = [t for t in techs if t.kind is TechKind.MONOLITHIC]
        reference_tech = mono[0] if mono else techs[0]
    cells = [(n, t) for n in counts for t in techs]

    def price(cell):
        n, t = cell
        if t.kind is TechKind.MONOLITHIC and n > 1:
            return None
        return system_re_cost(partition_system(total_module_area, n, t, node, d2d_fraction))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            priced = list(ex.map(price, cells))
    else:
        priced = [price(c) for c in cells]
    rows: dict[int, dict[str, CostBreakdown]] = {n: {} for n in counts}
    for (n, t), b in zip(cells, priced):
        if b is not None:
            rows[n][t.name] = b
    return SweepResult(
        axis="chiplet_count",
        rows=tuple((n, rows[n]) for n in counts),
        reference=reference_soc_cost(node, reference_tech),
        meta={"node": node.name, "total_module_area": total_module_area,
              "d2d_fraction": d2d_fraction, "reference_tech": reference_tech.name},
    )


def monolithic_baseline(sweep: SweepResult) -> CostBreakdown:
    """Count-1 cell of the first monolithic variant (or of any variant)."""
    value, cells = sweep.rows[0]
    if value != 1:
        raise InvariantViolation("sweep has no single-chip row", "chiplet_counts")
    return next(iter(cells.values()))


def best_multichip_saving(sweep: SweepResult, baseline: CostBreakdown | None = None) -> tuple[float, int, str]:
    """Largest fractional RE saving over the baseline among count >= 2 cells."""
    base = (baseline or monolithic_baseline(sweep)).re_total
    best = (-math.inf, 0, "")
    for n, cells in sweep.rows:
        if n < 2:
            continue
        for name, b in cells.items():
            saving = 1.0 - b.re_total / base
            if saving > best[0]:
                best = (saving, n, name)
    return best


def packaging_overhead(breakdown: CostBreakdown) -> float:
    """Packaging cost (raw, defects and wasted KGDs) relative to the die cost."""
    return breakdown.packaging / breakdown.die_cost


def packaging_share(breakdown: CostBreakdown) -> float:
    """Packaging cost as a fraction of the RE total."""
    return breakdown.packaging / breakdown.re_total


def granularity_marginal_series(
    total_area: float,
    max_count: int,
    tech: IntegrationTech,
    node: ProcessNode,
    d2d_fraction: float = 0.10,
    soc_tech: IntegrationTech | None = None,
    counts: Sequence[int] | None = None,
) -> list[tuple[int, float]]:
    """Defect-cost saving of each split, as a fraction of the SoC RE total.

    Entry ``(k, s)``: chip-defect cost with the previous count minus that
    with ``k`` chiplets, divided by the RE total of the single-die system
    (built with ``soc_tech``, default ``tech``). ``counts`` defaults to
    ``2..max_count``; each entry compares against the preceding count.
    """
    if max_count < 2:
        raise InvariantViolation("max_count must be >= 2", "max_count")
    grid = list(counts) if counts is not None else list(range(2, max_count + 1))
    soc = system_re_cost(partition_system(total_area, 1, soc_tech or tech, node, d2d_fraction))
    prev_count, prev = 1, soc.chip_defects
    series = []
    for k in grid:
        if k <= prev_count:
            raise InvariantViolation("counts must be increasing and > 1", "counts")
        b = system_re_cost(partition_system(total_area, k, tech, node, d2d_fraction))
        series.append((k, (prev - b.chip_defects) / soc.re_total))
        prev_count, prev = k, b.chip_defects
    return series


@dataclass(frozen=True)
class UnitCost:
    re: float
    nre: float  # group NRE, before amortization

    def at(self, quantity: int) -> float:
        return self.re + self.nre / quantity


def single_system_cost(system: SystemSpec) -> UnitCost:
    return UnitCost(system_re_cost(system).re_total, group_nre([system]).total)


def cost_difference(soc: SystemSpec, multi: SystemSpec):
    """``f(q) = cost_multi(q) - cost_soc(q)``, both produced in quantity q."""
    a, b = single_system_cost(multi), single_system_cost(soc)
    d_re, d_nre = a.re - b.re, a.nre - b.nre
    return (lambda q: d_re + d_nre / q), d_re, d_nre


def break_even_quantity(
    soc: SystemSpec,
    multi: SystemSpec,
    search_range: tuple[int, int] = (1, 10**10),
) -> int:
    """Smallest quantity at which the multi-chip system costs no more per unit.

    Raises NoCrossover when the multi-chip system never catches up, and
    RangeExhausted (a NoCrossover) when it would, but only beyond the
    upper end of ``search_range``.
    """
    soc_modules = sorted((m.name, m.area) for m in soc.module_list())
    multi_modules = sorted((m.name, m.area) for m in multi.module_list())
    if soc_modules != multi_modules:
        raise InvariantViolation("SoC and multi-chip systems must implement the same modules",
                                 "modules")
    lo, hi = int(search_range[0]), int(search_range[1])
    if not 1 <= lo <= hi:
        raise InvariantViolation(f"bad search range {search_range}", "search_range")
    f, d_re, d_nre = cost_difference(soc, multi)
    if f(lo) <= 0:
        return lo
    if f(hi) > 0:
        if d_re < 0:
            raise RangeExhausted(
                f"crossover lies above {hi} (about {d_nre / -d_re:.4g} units)", "search_range")
        raise NoCrossover("multi-chip system is never cheaper", "search_range")
    # invariant: f(lo) > 0 >= f(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def calibrate_fixed_chip_nre(
    soc: SystemSpec,
    multi: SystemSpec,
    target_quantity: float,
) -> float:
    """Per-chip fixed NRE at the multi-chip node that puts break-even at ``target_quantity``.

    Both systems' fixed chip NRE is replaced by the same unknown ``C``. The
    multi-chip system designs one more chip per extra distinct chiplet, so
    the NRE gap grows linearly in ``C`` and the break-even equation
    ``dNRE(C) = -dRE * target`` has a closed-form solution.
    """
    node = multi.chiplets[0][0].node
    zero = _with_fixed_nre([soc, multi], node, 0.0)
    one = _with_fixed_nre([soc, multi], node, 1.0)
    _, d_re, d0 = cost_difference(*zero)
    _, _, d1 = cost_difference(*one)
    slope = d1 - d0
    if d_re >= 0 or slope <= 0:
        raise NoCrossover("fixed chip NRE cannot move the crossover for these systems")
    c = (-d_re * target_quantity - d0) / slope
    if c < 0:
        raise InvariantViolation("target break-even is unreachable with non-negative fixed NRE")
    return c


def _with_fixed_nre(systems: Sequence[SystemSpec], node: ProcessNode, value: float) -> list[SystemSpec]:
    new_node = node.replace(fixed_chip_nre=value)
    out = []
    for s in systems:
        parts = []
        for c, n in s.chiplets:
            mods = tuple(ModuleSpec(m.name, m.area, new_node if m.node == node else m.node)
                         for m in c.modules)
            parts.append((ChipletSpec(c.name, mods, c.d2d_area_fraction), n))
        out.append(s.replace(chiplets=tuple(parts)))
    return out
