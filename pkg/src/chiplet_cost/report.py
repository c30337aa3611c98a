"""Table/JSON writers and optional SVG charts.

Numbers are written with ``repr`` so repeated runs are byte-identical;
JSON is emitted with sorted keys. Files are written to a temporary sibling
and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import CostBreakdown

BREAKDOWN_HEADER = ("system", *CostBreakdown.RE_FIELDS, *CostBreakdown.NRE_FIELDS,
                    "re_total", "nre_total", "total", "normalized_total")


def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def breakdown_row(name: str, b: CostBreakdown, reference: float) -> list:
    return [name, *(getattr(b, f) for f in CostBreakdown.RE_FIELDS + CostBreakdown.NRE_FIELDS),
            b.re_total, b.nre_total, b.total, b.total / reference]


def breakdown_csv(breakdowns: Mapping[str, CostBreakdown], reference: float) -> str:
    return to_csv(BREAKDOWN_HEADER, (breakdown_row(n, b, reference) for n, b in breakdowns.items()))


def breakdown_json(breakdowns: Mapping[str, CostBreakdown], reference: float,
                   reference_name: str) -> dict:
    return {
        "normalized_to": {"system": reference_name, "re_total": reference},
        "systems": {
            n: b.as_dict() | {"re_total": b.re_total, "nre_total": b.nre_total,
                              "normalized_total": b.total / reference}
            for n, b in breakdowns.items()
        },
    }


# ---------------------------------------------------------------------------
# charts

STACK = (
    ("raw_chips", "raw chips", "#4c72b0"),
    ("chip_defects", "chip defects", "#dd8452"),
    ("raw_package", "raw package", "#55a868"),
    ("package_defects", "package defects", "#c44e52"),
    ("wasted_kgd", "wasted KGDs", "#8172b3"),
    ("nre_modules", "NRE modules", "#937860"),
    ("nre_chips", "NRE chips", "#da8bc3"),
    ("nre_packages", "NRE packages", "#8c8c8c"),
    ("nre_d2d", "NRE D2D", "#ccb974"),
)


def stacked_bar_svg(bars: Sequence[tuple[str, CostBreakdown]], reference: float, title: str,
                    path: Path) -> Path:
    """Stacked per-component bars, normalized to ``reference``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "chiplet-cost"
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(bars) + 2), 4))
    x = range(len(bars))
    bottom = [0.0] * len(bars)
    for field_name, label, color in STACK:
        vals = [getattr(b, field_name) / reference for _, b in bars]
        if any(vals):
            ax.bar(x, vals, bottom=bottom, label=label, color=color, width=0.7)
            bottom = [a + v for a, v in zip(bottom, vals)]
    ax.set_xticks(list(x))
    ax.set_xticklabels([n for n, _ in bars], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("normalized cost")
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=6, loc="upper left")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def curve_svg(curves: Mapping[str, Sequence], path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "chiplet-cost"
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.5))
    for name, pts in curves.items():
        ax1.plot([p.area for p in pts], [p.yield_ for p in pts], label=name)
        ax2.plot([p.area for p in pts], [p.normalized_cost / p.area for p in pts], label=name)
    ax1.set_xlabel("die area (mm²)")
    ax1.set_ylabel("yield")
    ax2.set_xlabel("die area (mm²)")
    ax2.set_ylabel("good-die cost per mm² / raw wafer cost per mm²")
    ax1.legend(fontsize=7)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
