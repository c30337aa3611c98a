"""Process-node / packaging catalog and system documents (JSON).

Catalog documents give defect densities per cm²; they are stored per mm².
Optional fields fall back to defaults, and every default applied is
recorded in ``Catalog.defaults_applied`` so results can be traced back to
the exact values used.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .core import (
    DEFAULT_CLUSTER_PARAM,
    DEFAULT_D2D_FRACTION,
    ChipletSpec,
    IntegrationTech,
    ModuleSpec,
    ProcessNode,
    SystemSpec,
    TechKind,
    build_system,
)
from .errors import CostModelError, InvariantViolation, ParseError, UnknownNodeReference

NODE_REQUIRED = ("defect_density", "wafer_cost")
NODE_DEFAULTS: dict[str, float] = {
    "cluster_param": DEFAULT_CLUSTER_PARAM,
    "wafer_diameter": 300.0,
    "edge_exclusion": 3.0,
    "nre_module_factor": 0.0,
    "nre_chip_factor": 0.0,
    "fixed_chip_nre": 0.0,
    "d2d_nre_cost": 0.0,
    "die_adder": 0.0,
}
TECH_DEFAULTS: dict[str, Any] = {
    "substrate_cost_per_area": 0.0,
    "substrate_yield": 0.98,
    "chip_bond_yield": 0.99,
    "bond_cost_per_chip": 0.0,
    "interposer_area_factor": 1.1,
    "package_nre_factor": 0.0,
    "package_fixed_nre": 0.0,
}
MCM_GROWTH_FACTOR = 1.5

# currency-valued fields, used by Catalog.scaled
_NODE_MONEY = ("wafer_cost", "nre_module_factor", "nre_chip_factor", "fixed_chip_nre",
               "d2d_nre_cost", "die_adder")
_TECH_MONEY = ("substrate_cost_per_area", "bond_cost_per_chip", "package_nre_factor",
               "package_fixed_nre")


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ParseError(f"expected a finite number, got {value!r}", key)
    return float(value)


def _mapping(value: Any, key: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ParseError(f"expected an object, got {type(value).__name__}", key)
    return value


def _reject_unknown(doc: Mapping, allowed, key: str) -> None:
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ParseError(f"unknown field(s) {extra}", f"{key}.{extra[0]}")


def _with_key(exc: CostModelError, prefix: str) -> CostModelError:
    exc.key = f"{prefix}.{exc.key}" if exc.key else prefix
    return exc


@dataclass(frozen=True)
class Catalog:
    nodes: Mapping[str, ProcessNode]
    techs: Mapping[str, IntegrationTech]
    currency: str = "USD"
    provenance: Mapping[str, str] = field(default_factory=dict)
    defaults_applied: tuple[str, ...] = field(default=(), compare=False)

    def node(self, name: str, key: str | None = None) -> ProcessNode:
        try:
            return self.nodes[name]
        except KeyError:
            raise UnknownNodeReference(f"unknown process node {name!r}", key) from None

    def tech(self, name: str, key: str | None = None) -> IntegrationTech:
        try:
            return self.techs[name]
        except KeyError:
            raise UnknownNodeReference(f"unknown integration technology {name!r}", key) from None

    def to_dict(self) -> dict:
        """Fully explicit document: reloading it applies no defaults."""
        nodes = {}
        for name, n in self.nodes.items():
            d = {f.name: getattr(n, f.name) for f in fields(n) if f.name != "name"}
            d["defect_density"] = n.defect_density_per_cm2
            nodes[name] = d
        techs = {}
        for name, t in self.techs.items():
            d = {f.name: getattr(t, f.name) for f in fields(t) if f.name != "name"}
            d["kind"] = t.kind.value
            d["interposer_node"] = t.interposer_node.name if t.interposer_node else None
            techs[name] = d
        return {
            "currency": self.currency,
            "nodes": nodes,
            "techs": techs,
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_overrides(self, overrides: Mapping) -> "Catalog":
        """Deep-merge ``overrides`` (same schema as the catalog) and reload."""
        doc = self.to_dict()
        _deep_merge(doc, _mapping(overrides, "catalog_overrides"))
        out = load_catalog(doc)
        return Catalog(out.nodes, out.techs, out.currency, out.provenance,
                       self.defaults_applied + out.defaults_applied)

    def scaled(self, factor: float) -> "Catalog":
        """Every currency amount multiplied by ``factor``."""
        doc = self.to_dict()
        for n in doc["nodes"].values():
            for k in _NODE_MONEY:
                n[k] *= factor
        for t in doc["techs"].values():
            for k in _TECH_MONEY:
                t[k] *= factor
        return load_catalog(doc)


def _deep_merge(base: dict, extra: Mapping) -> None:
    for k, v in extra.items():
        if isinstance(v, Mapping) and isinstance(base.get(k), dict):
            _deep_merge(base[k], v)
        else:
            base[k] = copy.deepcopy(v)


def _parse_node(name: str, doc: Any, key: str, ledger: list[str]) -> ProcessNode:
    doc = _mapping(doc, key)
    _reject_unknown(doc, NODE_REQUIRED + tuple(NODE_DEFAULTS), key)
    values: dict[str, float] = {}
    for f in NODE_REQUIRED:
        if f not in doc:
            raise ParseError(f"missing required field {f!r}", f"{key}.{f}")
        values[f] = _number(doc[f], f"{key}.{f}")
    for f, default in NODE_DEFAULTS.items():
        if f in doc:
            values[f] = _number(doc[f], f"{key}.{f}")
        else:
            values[f] = default
            ledger.append(f"{key}.{f} = {default!r} (default)")
    values["defect_density"] /= 100.0  # per cm² -> per mm²
    try:
        return ProcessNode(name=name, **values)
    except CostModelError as exc:
        raise _with_key(exc, key) from None


def _parse_tech(name: str, doc: Any, key: str, nodes: Mapping[str, ProcessNode],
                ledger: list[str]) -> IntegrationTech:
    doc = _mapping(doc, key)
    allowed = ("kind", "substrate_growth_factor", "interposer_node", *TECH_DEFAULTS)
    _reject_unknown(doc, allowed, key)
    if "kind" not in doc:
        raise ParseError("missing required field 'kind'", f"{key}.kind")
    try:
        kind = TechKind(doc["kind"])
    except ValueError:
        raise ParseError(f"unknown kind {doc['kind']!r}; expected one of "
                         f"{[k.value for k in TechKind]}", f"{key}.kind") from None
    values: dict[str, Any] = {}
    for f, default in TECH_DEFAULTS.items():
        if f in doc:
            values[f] = _number(doc[f], f"{key}.{f}")
        else:
            values[f] = default
            ledger.append(f"{key}.{f} = {default!r} (default)")
    growth_default = MCM_GROWTH_FACTOR if kind is TechKind.MCM else 1.0
    if "substrate_growth_factor" in doc:
        values["substrate_growth_factor"] = _number(doc["substrate_growth_factor"],
                                                    f"{key}.substrate_growth_factor")
    else:
        values["substrate_growth_factor"] = growth_default
        ledger.append(f"{key}.substrate_growth_factor = {growth_default!r} (default)")
    inode = doc.get("interposer_node")
    if inode is not None:
        if not isinstance(inode, str):
            raise ParseError("interposer_node must be a node name", f"{key}.interposer_node")
        if inode not in nodes:
            raise UnknownNodeReference(f"unknown process node {inode!r}", f"{key}.interposer_node")
        values["interposer_node"] = nodes[inode]
    elif kind.has_interposer:
        raise ParseError(f"{kind.value} requires interposer_node", f"{key}.interposer_node")
    try:
        return IntegrationTech(name=name, kind=kind, **values)
    except CostModelError as exc:
        raise _with_key(exc, key) from None


def load_catalog(source: str | Path | Mapping) -> Catalog:
    """Load a catalog from a JSON string, a file path or an already-parsed mapping."""
    doc = _read_document(source)
    if not doc:
        raise ParseError("catalog document is empty", "")
    _reject_unknown(doc, ("currency", "nodes", "techs", "provenance", "description"), "catalog")
    nodes_doc = _mapping(doc.get("nodes", {}), "nodes")
    if not nodes_doc:
        raise ParseError("catalog defines no process nodes", "nodes")
    ledger: list[str] = []
    nodes = {name: _parse_node(name, nd, f"nodes.{name}", ledger) for name, nd in nodes_doc.items()}
    techs_doc = _mapping(doc.get("techs", {}), "techs")
    techs = {name: _parse_tech(name, td, f"techs.{name}", nodes, ledger)
             for name, td in techs_doc.items()}
    prov = _mapping(doc.get("provenance", {}), "provenance")
    currency = doc.get("currency", "USD")
    if "currency" not in doc:
        ledger.append("currency = 'USD' (default)")
    return Catalog(nodes, techs, str(currency), dict(prov), tuple(ledger))


def _read_document(source: str | Path | Mapping) -> Mapping:
    if isinstance(source, Mapping):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")
                                    and source.strip()):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc.strerror}", str(path)) from None
    else:
        text = source
    if not text.strip():
        raise ParseError("document is empty", "")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}",
                         "") from None
    return _mapping(doc, "")


def default_catalog() -> Catalog:
    """The shipped catalog (see ``data/default_catalog.json`` for provenance tags)."""
    text = resources.files("chiplet_cost").joinpath("data/default_catalog.json").read_text()
    return load_catalog(text)


def bundled_example(name: str) -> Path | None:
    """Path of a bundled example document, or None."""
    stem = name[:-5] if name.endswith(".json") else name
    ref = resources.files("chiplet_cost").joinpath(f"data/examples/{stem}.json")
    return Path(str(ref)) if ref.is_file() else None


def bundled_examples() -> list[str]:
    root = resources.files("chiplet_cost").joinpath("data/examples")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------------------
# system documents


@dataclass(frozen=True)
class SpecDocument:
    """A parsed system document: named modules, chiplets and systems plus
    the raw command sections (``scenario``, ``sweep``, ``curves``,
    ``break_even``, ``compare``) for the CLI to interpret."""

    catalog: Catalog
    modules: Mapping[str, ModuleSpec]
    chiplets: Mapping[str, ChipletSpec]
    systems: tuple[SystemSpec, ...]
    sections: Mapping[str, Any]

    def chiplet(self, name: str, key: str) -> ChipletSpec:
        try:
            return self.chiplets[name]
        except KeyError:
            raise ParseError(f"unknown chiplet {name!r}", key) from None

    def system(self, name: str, key: str) -> SystemSpec:
        for s in self.systems:
            if s.name == name:
                return s
        raise ParseError(f"unknown system {name!r}", key)


SPEC_SECTIONS = ("scenario", "sweep", "curves", "break_even", "compare")


def load_spec(source: str | Path | Mapping, catalog: Catalog) -> SpecDocument:
    doc = _read_document(source)
    if not doc:
        raise ParseError("spec document is empty", "")
    _reject_unknown(doc, ("description", "catalog_overrides", "modules", "chiplets", "systems",
                          *SPEC_SECTIONS), "spec")
    if "catalog_overrides" in doc:
        catalog = catalog.with_overrides(doc["catalog_overrides"])

    modules = {}
    for name, md in _mapping(doc.get("modules", {}), "modules").items():
        key = f"modules.{name}"
        md = _mapping(md, key)
        _reject_unknown(md, ("area", "node"), key)
        if "area" not in md or "node" not in md:
            raise ParseError("module needs 'area' and 'node'", key)
        node = catalog.node(md["node"], f"{key}.node")
        try:
            modules[name] = ModuleSpec(name, _number(md["area"], f"{key}.area"), node)
        except CostModelError as exc:
            raise _with_key(exc, key) from None

    chiplets = {}
    for name, cd in _mapping(doc.get("chiplets", {}), "chiplets").items():
        key = f"chiplets.{name}"
        cd = _mapping(cd, key)
        _reject_unknown(cd, ("modules", "d2d_area_fraction"), key)
        mod_names = cd.get("modules")
        if not isinstance(mod_names, list) or not mod_names:
            raise ParseError("chiplet needs a non-empty 'modules' list", f"{key}.modules")
        mods = []
        for i, mn in enumerate(mod_names):
            if mn not in modules:
                raise ParseError(f"unknown module {mn!r}", f"{key}.modules[{i}]")
            mods.append(modules[mn])
        frac = _number(cd.get("d2d_area_fraction", DEFAULT_D2D_FRACTION), f"{key}.d2d_area_fraction")
        try:
            chiplets[name] = ChipletSpec(name, tuple(mods), frac)
        except CostModelError as exc:
            raise _with_key(exc, key) from None

    systems = []
    sys_docs = doc.get("systems", [])
    if not isinstance(sys_docs, list):
        raise ParseError("'systems' must be a list", "systems")
    for i, sd in enumerate(sys_docs):
        key = f"systems[{i}]"
        sd = _mapping(sd, key)
        _reject_unknown(sd, ("name", "tech", "quantity", "chiplets", "package_area", "package_id"), key)
        for req in ("name", "tech", "chiplets"):
            if req not in sd:
                raise ParseError(f"missing required field {req!r}", f"{key}.{req}")
        tech = catalog.tech(sd["tech"], f"{key}.tech")
        parts = []
        for cname, count in _mapping(sd["chiplets"], f"{key}.chiplets").items():
            if not isinstance(count, int) or isinstance(count, bool):
                raise ParseError("chiplet count must be an integer", f"{key}.chiplets.{cname}")
            parts.append((_lookup(chiplets, cname, f"{key}.chiplets.{cname}"), count))
        qty = sd.get("quantity", 1)
        if not isinstance(qty, int) or isinstance(qty, bool):
            raise ParseError("quantity must be an integer", f"{key}.quantity")
        pa = sd.get("package_area")
        try:
            systems.append(build_system(
                parts, tech, qty, name=str(sd["name"]),
                package_area=None if pa is None else _number(pa, f"{key}.package_area"),
                package_id=sd.get("package_id")))
        except CostModelError as exc:
            raise _with_key(exc, key) from None
    names = [s.name for s in systems]
    if len(set(names)) != len(names):
        raise ParseError("system names must be unique", "systems")
    sections = {k: doc[k] for k in SPEC_SECTIONS if k in doc}
    return SpecDocument(catalog, modules, chiplets, tuple(systems), sections)


def _lookup(table: Mapping, name: str, key: str):
    try:
        return table[name]
    except KeyError:
        raise ParseError(f"unknown chiplet {name!r}", key) from None


def check_catalog_provenance(catalog: Catalog) -> list[str]:
    """Catalog value paths lacking a provenance tag."""
    doc = catalog.to_dict()
    missing = []
    for section in ("nodes", "techs"):
        for name, entry in doc[section].items():
            for k, v in entry.items():
                path = f"{section}.{name}.{k}"
                if v is not None and k != "kind" and path not in catalog.provenance:
                    missing.append(path)
    return missing


__all__ = [
    "Catalog", "SpecDocument", "load_catalog", "load_spec", "default_catalog",
    "bundled_example", "bundled_examples", "check_catalog_provenance",
]
