"""Command-line entry point: ``chiplet-cost <command> [options]``.

Every command writes its tables (CSV) and structured results (JSON) into
``--out`` together with ``manifest.json``, which pins the fully resolved
catalog (defaults applied) used for the run. Failures exit non-zero and
print a JSON error object naming the offending configuration key.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click

from . import __version__
from .catalog import Catalog, SpecDocument, bundled_example, default_catalog, load_catalog, load_spec
from .core import CostBreakdown, SystemSpec, TechKind, soc_equivalent
from .errors import CostModelError, NoCrossover, ParseError, RangeExhausted
from .explorer import break_even_quantity, partition_sweep, single_system_cost
from .report import (
    atomic_write,
    breakdown_csv,
    breakdown_json,
    curve_svg,
    stacked_bar_svg,
    to_csv,
    to_json,
)
from .reuse import evaluate_systems, scenario_from_spec
from .yieldmodel import CURVE_HEADER, cost_yield_curve

COMMANDS = ("analyze", "compare", "sweep", "reuse", "curves", "break-even")


@dataclass
class RunManifest:
    command: str
    catalog_path: str | None
    spec_path: str | None
    output_dir: Path
    normalize: str | None = None
    charts: bool = False
    jobs: int = 1
    written: list[str] = field(default_factory=list)

    def write(self, name: str, text: str) -> None:
        atomic_write(self.output_dir / name, text)
        self.written.append(name)

    def chart(self, name: str) -> Path:
        self.written.append(name)
        return self.output_dir / name

    def as_dict(self, catalog: Catalog) -> dict:
        # output_dir is left out so runs into different directories match
        return {
            "tool_version": __version__,
            "command": self.command,
            "catalog_path": self.catalog_path,
            "spec_path": self.spec_path,
            "normalize": self.normalize,
            "charts": self.charts,
            "jobs": self.jobs,
            "outputs": sorted(self.written),
            "resolved_catalog": catalog.to_dict(),
            "defaults_applied": list(catalog.defaults_applied),
        }


def _resolve_path(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_example(path)
    if bundled is not None:
        return bundled
    raise ParseError(f"no such file: {path}", "--spec")


def _load(m: RunManifest, need_spec: bool) -> tuple[Catalog, SpecDocument | None]:
    catalog = load_catalog(Path(m.catalog_path)) if m.catalog_path else default_catalog()
    spec = None
    if m.spec_path:
        spec = load_spec(_resolve_path(m.spec_path), catalog)
        catalog = spec.catalog
    elif need_spec:
        raise ParseError("this command needs --spec", "--spec")
    return catalog, spec


def _reference(m: RunManifest, breakdowns: dict) -> tuple[str, float]:
    name = m.normalize or next(iter(breakdowns))
    if name not in breakdowns:
        raise ParseError(f"--normalize names unknown system {name!r}", "--normalize")
    return name, breakdowns[name].re_total


def _soc_tech(catalog: Catalog, name: str | None, key: str):
    if name:
        return catalog.tech(name, key)
    for t in catalog.techs.values():
        if t.kind is TechKind.MONOLITHIC:
            return t
    raise ParseError("catalog has no monolithic technology for the SoC baseline", key)


# ---------------------------------------------------------------------------
# commands


def run_analyze(m: RunManifest) -> None:
    """Per-system cost breakdown, each system priced standalone."""
    catalog, spec = _load(m, True)
    if not spec.systems:
        raise ParseError("spec defines no systems", "systems")
    # each system stands alone: its own NRE, amortized over its own volume
    out = {s.name: evaluate_systems([s]).breakdowns[s.name] for s in spec.systems}
    ref_name, ref = _reference(m, out)
    m.write("breakdown.csv", breakdown_csv(out, ref))
    m.write("breakdown.json", to_json(breakdown_json(out, ref, ref_name)))
    if m.charts:
        stacked_bar_svg(list(out.items()), ref, "cost breakdown", m.chart("breakdown.svg"))
    _finish(m, catalog)


def _pairs(spec: SpecDocument, catalog: Catalog) -> list[tuple[SystemSpec, SystemSpec]]:
    section = spec.sections.get("compare")
    if section is None:
        tech = _soc_tech(catalog, None, "compare")
        return [(soc_equivalent(s, tech), s) for s in spec.systems
                if s.tech.kind is not TechKind.MONOLITHIC]
    if not isinstance(section, list):
        raise ParseError("compare must be a list of {soc, multi} pairs", "compare")
    pairs = []
    for i, p in enumerate(section):
        key = f"compare[{i}]"
        if not isinstance(p, dict) or "multi" not in p:
            raise ParseError("each pair needs 'multi' (and optionally 'soc')", key)
        multi = spec.system(p["multi"], f"{key}.multi")
        if "soc" in p:
            soc = spec.system(p["soc"], f"{key}.soc")
        else:
            node = catalog.node(p["soc_node"], f"{key}.soc_node") if "soc_node" in p else None
            soc = soc_equivalent(multi, _soc_tech(catalog, p.get("soc_tech"), f"{key}.soc_tech"), node)
        pairs.append((soc, multi))
    return pairs


def run_compare(m: RunManifest) -> None:
    """SoC vs multi-chip comparison table."""
    catalog, spec = _load(m, True)
    pairs = _pairs(spec, catalog)
    if not pairs:
        raise ParseError("nothing to compare: no multi-chip systems", "systems")
    rows, table, bars = [], {}, []
    for soc, multi in pairs:
        b_soc = evaluate_systems([soc]).breakdowns[soc.name]
        b_multi = evaluate_systems([multi]).breakdowns[multi.name]
        table[soc.name], table[multi.name] = b_soc, b_multi
        rows.append({
            "soc": soc.name, "multi": multi.name,
            "die_cost_saving": 1.0 - b_multi.die_cost / b_soc.die_cost,
            "re_saving": 1.0 - b_multi.re_total / b_soc.re_total,
            "total_saving": 1.0 - b_multi.total / b_soc.total,
            "multi_packaging_share": b_multi.packaging / b_multi.re_total,
        })
        bars += [(soc.name, b_soc), (multi.name, b_multi)]
    ref_name, ref = _reference(m, table)
    m.write("compare.csv", breakdown_csv(table, ref))
    header = ("soc", "multi", "die_cost_saving", "re_saving", "total_saving", "multi_packaging_share")
    m.write("compare_summary.csv", to_csv(header, ([r[h] for h in header] for r in rows)))
    m.write("compare.json", to_json({"pairs": rows} | breakdown_json(table, ref, ref_name)))
    if m.charts:
        stacked_bar_svg(bars, ref, "SoC vs multi-chip", m.chart("compare.svg"))
    _finish(m, catalog)


def run_sweep(m: RunManifest) -> None:
    """Equal-area partition sweep over chiplet counts and technologies."""
    catalog, spec = _load(m, True)
    doc = spec.sections.get("sweep")
    if not isinstance(doc, dict):
        raise ParseError("spec has no sweep section", "sweep")
    for req in ("total_module_area", "counts", "techs"):
        if req not in doc:
            raise ParseError(f"missing required field {req!r}", f"sweep.{req}")
    nodes = doc.get("nodes") or ([doc["node"]] if "node" in doc else None)
    if not nodes:
        raise ParseError("sweep needs 'node' or 'nodes'", "sweep.nodes")
    techs = [catalog.tech(t, f"sweep.techs[{i}]") for i, t in enumerate(doc["techs"])]
    ref_tech = _soc_tech(catalog, doc.get("reference_tech"), "sweep.reference_tech")
    header = ("node", "chiplet_count", "variant", "system", *CostBreakdown.RE_FIELDS,
              "re_total", "normalized_re_total")
    rows, summary = [], {}
    for i, node_name in enumerate(nodes):
        node = catalog.node(node_name, f"sweep.nodes[{i}]")
        sw = partition_sweep(float(doc["total_module_area"]), doc["counts"], techs, node,
                             float(doc.get("d2d_fraction", 0.10)), ref_tech, jobs=m.jobs)
        summary[node_name] = {"reference_re_total": sw.reference, "meta": sw.meta}
        bars = []
        for count, cells in sw.rows:
            for variant, b in cells.items():
                rows.append([node_name, count, variant, f"{variant}_x{count}",
                             *(getattr(b, f) for f in CostBreakdown.RE_FIELDS),
                             b.re_total, b.re_total / sw.reference])
                bars.append((f"{variant} x{count}", b))
        if m.charts:
            stacked_bar_svg(bars, sw.reference, f"{node_name}, {doc['total_module_area']} mm²",
                            m.chart(f"sweep_{node_name}.svg"))
    m.write("sweep.csv", to_csv(header, rows))
    m.write("sweep.json", to_json(summary))
    _finish(m, catalog)


def run_reuse(m: RunManifest) -> None:
    """Reuse-scenario analysis with a shared NRE ledger."""
    catalog, spec = _load(m, True)
    scenario = scenario_from_spec(spec)
    result = evaluate_systems(scenario.systems, jobs=m.jobs)
    ref_name, ref = _reference(m, result.breakdowns)
    m.write("reuse_systems.csv", breakdown_csv(result.breakdowns, ref))
    m.write("scenario_summary.json", to_json({
        "scenario": scenario.name,
        "package_reuse": scenario.package_reuse,
        "shared_package_area": scenario.shared_package_area,
        "quantities": result.quantities,
    } | result.summary() | breakdown_json(result.breakdowns, ref, ref_name)))
    m.write("nre_ledger.json", result.ledger.to_json())
    if m.charts:
        stacked_bar_svg(list(result.breakdowns.items()), ref, scenario.name,
                        m.chart("reuse.svg"))
    _finish(m, catalog)


def run_curves(m: RunManifest) -> None:
    """Yield and normalized good-die cost versus die area, one CSV per node."""
    catalog, spec = _load(m, False)
    doc = (spec.sections.get("curves") if spec else None) or {}
    names = doc.get("nodes") or list(catalog.nodes)
    lo, hi = doc.get("range", [10.0, 900.0])
    step = float(doc.get("step", 10.0))
    curves = {}
    for i, n in enumerate(names):
        node = catalog.node(n, f"curves.nodes[{i}]")
        curves[n] = pts = cost_yield_curve(node, (float(lo), float(hi)), step,
                                           whole_dies=bool(doc.get("whole_dies", False)))
        m.write(f"curve_{n}.csv", to_csv(CURVE_HEADER, (p.as_row() for p in pts)))
    if m.charts:
        curve_svg(curves, m.chart("curves.svg"))
    _finish(m, catalog)


def run_break_even(m: RunManifest) -> None:
    """Production quantity at which the multi-chip system pays back."""
    catalog, spec = _load(m, True)
    doc = spec.sections.get("break_even")
    if not isinstance(doc, dict) or "multi" not in doc:
        raise ParseError("spec needs a break_even section with 'multi'", "break_even.multi")
    multi = spec.system(doc["multi"], "break_even.multi")
    if "soc" in doc:
        soc = spec.system(doc["soc"], "break_even.soc")
    else:
        soc = soc_equivalent(multi, _soc_tech(catalog, doc.get("soc_tech"), "break_even.soc_tech"))
    lo, hi = doc.get("range", [1, 10**10])
    report = {"soc": soc.name, "multi": multi.name, "search_range": [int(lo), int(hi)]}
    for label, s in (("soc", soc), ("multi", multi)):
        uc = single_system_cost(s)
        report[f"{label}_re_total"] = uc.re
        report[f"{label}_nre_total"] = uc.nre
    try:
        report["quantity"] = break_even_quantity(soc, multi, (int(lo), int(hi)))
        report["outcome"] = "crossover"
    except RangeExhausted as exc:
        report["quantity"], report["outcome"], report["detail"] = None, "range_exhausted", exc.message
    except NoCrossover as exc:
        report["quantity"], report["outcome"], report["detail"] = None, "no_crossover", exc.message
    m.write("break_even.json", to_json(report))
    _finish(m, catalog)


def _finish(m: RunManifest, catalog: Catalog) -> None:
    m.written.append("manifest.json")
    atomic_write(m.output_dir / "manifest.json", to_json(m.as_dict(catalog)))
    for name in sorted(m.written):
        click.echo(str(m.output_dir / name))


RUNNERS = {
    "analyze": run_analyze,
    "compare": run_compare,
    "sweep": run_sweep,
    "reuse": run_reuse,
    "curves": run_curves,
    "break-even": run_break_even,
}


def run(manifest: RunManifest) -> int:
    """Execute one command; returns the process exit status."""
    try:
        RUNNERS[manifest.command](manifest)
    except CostModelError as exc:
        click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
        return 2
    except OSError as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc), "key": None}),
                   err=True)
        return 2
    return 0


_COMMON_OPTIONS = (
    click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), default=None,
                 help="Catalog JSON (default: the shipped catalog)."),
    click.option("--spec", "spec_path", default=None,
                 help="System/scenario JSON, or the name of a bundled example."),
    click.option("--out", "output_dir", type=click.Path(file_okay=False), default="out",
                 show_default=True, help="Output directory."),
    click.option("--normalize", default=None, help="Reference system for normalized columns."),
    click.option("--charts", is_flag=True, help="Also emit SVG charts."),
    click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                 help="Worker threads for sweeps and scenario analysis."),
)


def common_options(fn):
    for opt in reversed(_COMMON_OPTIONS):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Monolithic vs. multi-chip cost modeling."""


def _make_command(name: str):
    @main.command(name=name, help=RUNNERS[name].__doc__ or f"Run the {name} command.")
    @common_options
    def _cmd(catalog_path, spec_path, output_dir, normalize, charts, jobs):
        m = RunManifest(name, catalog_path, spec_path, Path(output_dir), normalize, charts, jobs)
        sys.exit(run(m))

    return _cmd


for _name in COMMANDS:
    _make_command(_name)


@main.command(name="examples")
def list_examples() -> None:
    """List bundled example documents."""
    from .catalog import bundled_examples

    for n in bundled_examples():
        click.echo(n)


if __name__ == "__main__":
    main()
