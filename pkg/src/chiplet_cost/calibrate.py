"""Re-derive the calibrated fixed chip NRE of a catalog node.

The shipped 5nm ``fixed_chip_nre`` is the value at which an 800 mm² SoC
and the equivalent two-chiplet MCM break even at two million units::

    python -m chiplet_cost.calibrate                 # print the value
    python -m chiplet_cost.calibrate --write new.json

``--write`` stores a copy of the catalog with the node updated and the
value's provenance tag set to ``calibrated``.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .catalog import Catalog, default_catalog, load_catalog
from .core import soc_equivalent
from .explorer import break_even_quantity, calibrate_fixed_chip_nre, partition_system
from .report import atomic_write, to_json


def calibrate(catalog: Catalog, node: str = "5nm", area: float = 800.0, count: int = 2,
              multi_tech: str = "MCM", soc_tech: str = "SoC", target: float = 2e6) -> float:
    multi = partition_system(area, count, catalog.tech(multi_tech), catalog.node(node))
    soc = soc_equivalent(multi, catalog.tech(soc_tech))
    return calibrate_fixed_chip_nre(soc, multi, target)


@click.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--node", default="5nm", show_default=True)
@click.option("--area", type=float, default=800.0, show_default=True)
@click.option("--count", type=int, default=2, show_default=True)
@click.option("--target", type=float, default=2e6, show_default=True)
@click.option("--round-to", type=float, default=1e5, show_default=True,
              help="Round the result to a multiple of this amount (0 = exact).")
@click.option("--write", "write_path", type=click.Path(dir_okay=False), default=None)
def main(catalog_path, node, area, count, target, round_to, write_path):
    cat = load_catalog(Path(catalog_path)) if catalog_path else default_catalog()
    value = calibrate(cat, node, area, count, target=target)
    if round_to > 0:
        value = round(value / round_to) * round_to
    cal = cat.with_overrides({"nodes": {node: {"fixed_chip_nre": value}}})
    multi = partition_system(area, count, cal.tech("MCM"), cal.node(node))
    q = break_even_quantity(soc_equivalent(multi, cal.tech("SoC")), multi)
    click.echo(json.dumps({"node": node, "fixed_chip_nre": value, "break_even_quantity": q}))
    if write_path:
        doc = cal.to_dict()
        doc.setdefault("provenance", {})[f"nodes.{node}.fixed_chip_nre"] = (
            f"calibrated: break-even of {area:g} mm2 SoC vs {count}-chiplet MCM at {target:g} units")
        atomic_write(Path(write_path), to_json(doc))


if __name__ == "__main__":
    main()
