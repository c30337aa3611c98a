"""Die yield, dies per wafer, per-die cost and cost/yield-area curves."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .core import ProcessNode
from .errors import DieLargerThanWafer, InvariantViolation, NegativeArea, OutOfRangeYield


def negative_binomial_yield(area: float, defect_density: float, cluster_param: float) -> float:
    """``(1 + D*S/c) ** -c``, evaluated through ``log1p`` so large ``c`` stays accurate."""
    if area < 0:
        raise NegativeArea(f"area must be >= 0, got {area}", "area")
    if defect_density < 0 or cluster_param <= 0:
        raise InvariantViolation("need defect_density >= 0 and cluster_param > 0")
    x = defect_density * area
    if x == 0:
        return 1.0
    return math.exp(-cluster_param * math.log1p(x / cluster_param))


def die_yield(area: float, node: ProcessNode) -> float:
    return negative_binomial_yield(area, node.defect_density, node.cluster_param)


def gross_dies(area: float, node: ProcessNode, aspect_ratio: float = 1.0) -> float:
    """Unfloored dies-per-wafer estimate.

    Usable disc area over die area, minus an edge-loss term proportional to
    the circumference. The edge term is scaled by the die's perimeter
    relative to a square of equal area, which is exactly 1 for square dies.
    """
    if area <= 0:
        raise NegativeArea(f"die area must be > 0, got {area}", "area")
    if not 0.2 <= aspect_ratio <= 5:
        raise InvariantViolation(f"aspect_ratio must be in [0.2, 5], got {aspect_ratio}", "aspect_ratio")
    r = node.usable_radius
    shape = (math.sqrt(aspect_ratio) + 1.0 / math.sqrt(aspect_ratio)) / 2.0
    return math.pi * r * r / area - shape * math.pi * 2.0 * r / math.sqrt(2.0 * area)


def dies_per_wafer(area: float, node: ProcessNode, aspect_ratio: float = 1.0) -> int:
    n = gross_dies(area, node, aspect_ratio)
    if n < 1:
        raise DieLargerThanWafer(
            f"a {area:g} mm² die does not fit on a {node.wafer_diameter:g} mm wafer", "area")
    return math.floor(n)


class DieCost(NamedTuple):
    raw: float
    defect: float

    @property
    def good(self) -> float:
        return self.raw + self.defect


def die_cost(area: float, node: ProcessNode, aspect_ratio: float = 1.0) -> DieCost:
    """Raw cost per die and the extra cost carried by yield loss.

    ``raw`` is the wafer cost shared by all gross dies plus the node's
    per-die adder; ``defect = raw * (1/Y - 1)`` so that ``raw + defect`` is
    the cost of one known good die.
    """
    raw = node.wafer_cost / dies_per_wafer(area, node, aspect_ratio) + node.die_adder
    y = die_yield(area, node)
    return DieCost(raw, raw * (1.0 / y - 1.0))


def overall_serial_yield(stage_yields: Iterable[float]) -> float:
    """Yield of a serial production line: the product of stage yields."""
    result = 1.0
    for i, y in enumerate(stage_yields):
        if not (0 < y <= 1):
            raise OutOfRangeYield(f"stage yield must be in (0, 1], got {y}", f"stage_yields[{i}]")
        result *= y
    return result


@dataclass(frozen=True)
class CurvePoint:
    area: float
    yield_: float
    normalized_cost: float  # good-die cost over raw-wafer cost per mm²

    def as_row(self) -> tuple[float, float, float]:
        return (self.area, self.yield_, self.normalized_cost)


def area_grid(lo: float, hi: float, step: float) -> list[float]:
    # i*step keeps shared points bit-identical when the step is halved
    if step <= 0:
        raise InvariantViolation("step must be > 0", "step")
    count = math.floor((hi - lo) / step + 1e-9)
    return [lo + i * step for i in range(count + 1)]


def cost_yield_curve(
    node: ProcessNode,
    area_range: tuple[float, float] = (10.0, 900.0),
    step: float = 10.0,
    aspect_ratio: float = 1.0,
    whole_dies: bool = False,
) -> list[CurvePoint]:
    """Yield and normalized good-die cost over an area grid.

    By default the die count is the unfloored packing estimate, which
    gives a smooth curve: rounding down to whole dies adds a sawtooth of
    up to ``1/dies_per_wafer`` that hides the trend at large areas. Pass
    ``whole_dies=True`` for the same count ``die_cost`` uses.
    """
    lo, hi = area_range
    if not (0 < lo <= hi <= 900):
        raise InvariantViolation(f"area range must lie within (0, 900] mm², got {area_range}", "area_range")
    points = []
    for a in area_grid(lo, hi, step):
        y = die_yield(a, node)
        dies = dies_per_wafer(a, node, aspect_ratio)  # also rejects dies that do not fit
        if not whole_dies:
            dies = gross_dies(a, node, aspect_ratio)
        # good-die cost over raw-wafer cost per mm²; the wafer cost cancels
        norm = node.wafer_area / dies / y
        if node.wafer_cost > 0 and node.die_adder:
            norm += node.die_adder / y / (node.wafer_cost / node.wafer_area)
        points.append(CurvePoint(a, y, norm))
    return points


CURVE_HEADER = ("area_mm2", "yield", "normalized_cost")


def curve_csv(points: Sequence[CurvePoint], node_column: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(CURVE_HEADER) if node_column is None else ["node", *CURVE_HEADER]
    w.writerow(header)
    for p in points:
        row = [repr(v) for v in p.as_row()]
        w.writerow(row if node_column is None else [node_column, *row])
    return buf.getvalue()
