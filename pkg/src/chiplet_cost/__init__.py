"""Cost model for monolithic vs. multi-chip (MCM / InFO / 2.5D) VLSI systems."""

from .catalog import Catalog, default_catalog, load_catalog, load_spec
from .core import (
    ChipletSpec,
    CostBreakdown,
    IntegrationTech,
    ModuleSpec,
    ProcessNode,
    SystemSpec,
    TechKind,
    build_system,
    make_chiplet,
    soc_equivalent,
)
from .errors import CostModelError
from .explorer import break_even_quantity, granularity_marginal_series, partition_sweep
from .nrecost import amortize, chip_nre, group_nre_multichip, group_nre_soc
from .recost import assembly_cost, chip_re_cost, packaging_cost, system_re_cost
from .reuse import analyze, fsmc_count, fsmc_enumerate, ocme, scms
from .yieldmodel import cost_yield_curve, die_cost, die_yield, dies_per_wafer, overall_serial_yield

__version__ = "0.1.0"

__all__ = [
    "Catalog", "ChipletSpec", "CostBreakdown", "CostModelError", "IntegrationTech", "ModuleSpec",
    "ProcessNode", "SystemSpec", "TechKind", "amortize", "analyze", "assembly_cost",
    "break_even_quantity", "build_system", "chip_nre", "chip_re_cost", "cost_yield_curve",
    "default_catalog", "die_cost", "die_yield", "dies_per_wafer", "fsmc_count", "fsmc_enumerate",
    "granularity_marginal_series", "group_nre_multichip", "group_nre_soc", "load_catalog",
    "load_spec", "make_chiplet", "ocme", "overall_serial_yield", "packaging_cost",
    "partition_sweep", "scms", "soc_equivalent", "system_re_cost",
]
