"""Line charts rendered from CSV tables."""

import csv
import configparser
from collections import defaultdict
from pathlib import Path

import matplotlib

from .errors import PlotSpecError

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "mobiqueue"


def read_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotSpecError(f"{path} has no data rows")
    return rows


def load_plot_spec(path):
    """Read a plot spec: one ``[plot]`` section of ``key = value`` lines.

    Keys: ``x``, ``y`` (required); ``series``, ``ci_lo``, ``ci_hi``,
    ``where`` (space-separated ``column:value`` filters, ``|`` between
    alternatives), ``xscale``, ``yscale``, ``title``, ``xlabel``, ``ylabel``,
    ``kind`` (``line`` or ``step``), ``table`` and ``output`` (file names
    relative to a result directory).
    """
    cp = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    if "plot" not in cp:
        raise PlotSpecError("plot spec needs a [plot] section")
    return dict(cp["plot"])


def plot_table(rows, spec, out_path):
    """Render ``rows`` (list of dicts) to ``out_path`` following ``spec``."""
    for key in ("x", "y"):
        if key not in spec:
            raise PlotSpecError(f"plot spec is missing {key!r}")
    for cond in spec.get("where", "").split():
        col, _, val = cond.partition(":")
        if col not in rows[0]:
            raise PlotSpecError(f"missing column {col!r}")
        allowed = set(val.split("|"))
        rows = [r for r in rows if r[col] in allowed]
        if not rows:
            raise PlotSpecError(f"no rows with {col} in {sorted(allowed)}")
    needed = [spec[k] for k in ("x", "y", "series", "ci_lo", "ci_hi") if k in spec]
    missing = [c for c in needed if c not in rows[0]]
    if missing:
        raise PlotSpecError(f"missing columns: {', '.join(missing)}")

    groups = defaultdict(list)
    for r in rows:
        groups[r[spec["series"]] if "series" in spec else spec["y"]].append(r)

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(groups):
        pts = sorted(groups[name], key=lambda r: float(r[spec["x"]]))
        x = [float(r[spec["x"]]) for r in pts]
        y = [float(r[spec["y"]]) for r in pts]
        if spec.get("kind") == "step":
            ax.step(x, y, where="post", label=name)
            continue
        if "ci_lo" in spec and "ci_hi" in spec:
            lo = [yy - float(r[spec["ci_lo"]]) for yy, r in zip(y, pts)]
            hi = [float(r[spec["ci_hi"]]) - yy for yy, r in zip(y, pts)]
            ax.errorbar(x, y, yerr=[lo, hi], marker="o", capsize=3, label=name)
        else:
            ax.plot(x, y, marker="o", label=name)
    ax.set_xscale(spec.get("xscale", "linear"))
    ax.set_yscale(spec.get("yscale", "linear"))
    ax.set_xlabel(spec.get("xlabel", spec["x"]))
    ax.set_ylabel(spec.get("ylabel", spec["y"]))
    if "title" in spec:
        ax.set_title(spec["title"])
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    # fixed metadata keeps the SVG byte-stable across runs
    fig.savefig(out_path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return out_path


def plot(csv_path, spec_path, out_path=None, base_dir=None):
    """Render a CSV table as SVG according to the spec file.

    With ``csv_path`` None the spec's ``table`` key names the CSV inside
    ``base_dir``; the spec's ``output`` is likewise resolved there.
    """
    spec = load_plot_spec(spec_path)
    base = Path(base_dir) if base_dir is not None else None
    if csv_path is None:
        if "table" not in spec or base is None:
            raise PlotSpecError("plot spec needs a 'table' key and a result directory")
        csv_path = base / spec["table"]
    if out_path is None:
        if "output" in spec:
            out_path = (base or Path(csv_path).parent) / spec["output"]
        else:
            out_path = Path(csv_path).with_suffix(".svg")
    return plot_table(read_table(csv_path), spec, str(out_path))
