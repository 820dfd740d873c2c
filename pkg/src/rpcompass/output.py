"""CSV serialisation and vector-graphics rendering of results.

CSV files carry '#'-prefixed provenance comments, a header row and one data
row per point.  Floats are written with 17 significant digits so a re-parse
reproduces the original values bit for bit.  Plots are self-contained SVG
and are a convenience layer only; everything quantitative lives in the CSV.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402


@dataclass
class Table:
    """Column-oriented payload ready for CSV serialisation."""

    columns: dict
    comments: list = field(default_factory=list)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("columns have unequal lengths")


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(table, path):
    """Serialise a Table (or an object with .to_table()) to CSV."""
    if hasattr(table, "to_table"):
        table = table.to_table()
    path = Path(path)
    names = list(table.columns)
    arrays = [np.asarray(table.columns[n], dtype=float) for n in names]
    n_rows = arrays[0].shape[0] if arrays else 0
    lines = [f"# {c}" for c in table.comments]
    lines.append(",".join(names))
    for i in range(n_rows):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Parse a CSV written by write_csv; returns (comments, columns)."""
    comments = []
    names = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif names is None:
            names = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return comments, {n: data[:, i] for i, n in enumerate(names)}


def sweep_table(result):
    """Table for a SweepResult: angles, yields and optional reference."""
    comments = [f"scenario={result.name}",
                f"config_hash={result.provenance.get('config_hash', '')}",
                f"solver={result.provenance.get('solver', '')}",
                f"contrast={_fmt(result.contrast)}"]
    columns = {"theta_rad": result.thetas,
               "phi_s": result.phi_s, "phi_t": result.phi_t}
    if result.reference is not None:
        columns["phi_s_reference"] = result.reference.phi_s
        columns["phi_t_reference"] = result.reference.phi_t
    if result.rf_disruption is not None:
        comments.append(f"rf_disruption={_fmt(result.rf_disruption)}")
    return Table(columns=columns, comments=comments)


def trajectory_table(traj):
    comments = [f"method={traj.meta.get('method', '')}",
                f"dt={_fmt(traj.meta.get('dt', math.nan))}",
                f"residual={_fmt(traj.residual)}"]
    columns = {"time_s": traj.times, "shelf_s": traj.shelf_s,
               "shelf_t": traj.shelf_t, "singlet_prob": traj.singlet_prob}
    return Table(columns=columns, comments=comments)


def scan_table(scan):
    comments = [f"axis={scan.axis}"]
    comments += [f"{key}={_fmt(val)}" for key, val in scan.summary.items()]
    columns = {scan.axis: np.array([r.value for r in scan.rows]),
               "contrast": np.array([r.contrast for r in scan.rows])}
    if any(r.rf_disruption is not None for r in scan.rows):
        columns["rf_disruption"] = np.array(
            [math.nan if r.rf_disruption is None else r.rf_disruption
             for r in scan.rows])
    return Table(columns=columns, comments=comments)


def render_plot(table, style, path):
    """Render a Table to a self-contained SVG file.

    style 'sweep' plots every phi_s* column against theta (x axis in units
    of pi); 'trajectory' plots each series against time.  A single-point
    series is drawn as a marker.  style may also be a dict with keys
    kind / title / reference_offset.
    """
    if hasattr(table, "to_table"):
        table = table.to_table()
    if isinstance(style, str):
        style = {"kind": style}
    kind = style.get("kind", "sweep")
    if not table.columns:
        raise ValueError("cannot plot an empty table")
    names = list(table.columns)
    x_name = names[0]
    x = np.asarray(table.columns[x_name], dtype=float)
    if x.size == 0:
        raise ValueError("cannot plot an empty table")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    offset = style.get("reference_offset", 0.0)
    for name in names[1:]:
        y = np.asarray(table.columns[name], dtype=float)
        shift = offset if offset and "ref" in name else 0.0
        fmt = "o" if x.size == 1 else "-"
        if kind == "sweep":
            ax.plot(x / math.pi, y + shift, fmt, label=name, linewidth=1.2)
        else:
            ax.plot(x, y + shift, fmt, label=name, linewidth=1.2)
    if kind == "sweep":
        ax.set_xlabel(r"$\vartheta$ ($\pi$)")
        ax.set_ylabel("singlet yield")
    else:
        ax.set_xlabel("time (s)")
        ax.set_ylabel(style.get("ylabel", "value"))
    if style.get("title"):
        ax.set_title(style["title"])
    if len(names) > 2 or style.get("legend", True):
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return Path(path)


def write_figure(stem, comments, columns, style, outdir):
    """Write one preset figure as CSV plus SVG; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table = Table(columns=columns, comments=comments)
    csv_path = write_csv(table, outdir / f"{stem}.csv")
    svg_path = render_plot(table, style, outdir / f"{stem}.svg")
    return [csv_path, svg_path]
