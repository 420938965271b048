"""Plot-data emission and optional figure rendering.

The data path has no graphics dependency: each quantity becomes a two-column
series under ``data/`` plus a gnuplot script that reads them on log-log axes
against 1+t.  Figure rendering (PNG via matplotlib) is opt-in and imported
lazily so headless pipelines that only want the delimited output never load a
plotting stack.
"""

from __future__ import annotations

from pathlib import Path

PLOT_QUANTITIES = (
    ("norm_a12u2", "|A^(1/2)u|^2"),
    ("norm_au2", "|Au|^2"),
    ("norm_v2", "|u'|^2"),
    ("H", "H"),
)


def write_plot_data(out_dir: Path, snaps_by_kind: dict, gap_info=None) -> list[str]:
    """Write data/<kind>_<column>.dat series and a plots.gp driver script."""
    data_dir = out_dir / "data"
    data_dir.mkdir(exist_ok=True)
    entries = []
    for kind, snaps in snaps_by_kind.items():
        for column, _label in PLOT_QUANTITIES:
            name = f"{kind}_{column}.dat"
            with open(data_dir / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(f"# t  {column}\n")
                for s in snaps:
                    fh.write(f"{s.t!r} {getattr(s, column)!r}\n")
            entries.append(f"data/{name}")

    lines = [
        "# gnuplot driver for the emitted series (log-log against 1+t)",
        "set logscale xy",
        "set xlabel '1+t'",
        "set key left bottom",
    ]
    plot_terms = [
        f"'{entry}' using ($1+1):($2) with lines title '{Path(entry).stem}'"
        for entry in entries
    ]
    if gap_info is not None:
        plot_terms.append("'gap.csv' using ($1+1):($2) with lines title 'gap'")
    lines.append("plot \\\n  " + ", \\\n  ".join(plot_terms))
    with open(out_dir / "plots.gp", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    entries.append("plots.gp")
    return entries


def render_figures(out_dir: Path, snaps_by_kind: dict, manifest: dict) -> list[str]:
    """Render decay and energy figures to PNG files (matplotlib Agg)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_dir = out_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    written = []

    fits = manifest.get("fits", {})
    quantity_of_column = {"norm_a12u2": "a12u2", "norm_au2": "au2", "norm_v2": "v2"}

    for kind, snaps in snaps_by_kind.items():
        t1 = [1.0 + s.t for s in snaps]

        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        for column, label in PLOT_QUANTITIES[:3]:
            series = [getattr(s, column) for s in snaps]
            ax.loglog(t1, series, label=label)
            fit = fits.get(quantity_of_column.get(column, ""), None)
            if kind != "parabolic" and fit and "exponent" in fit:
                lo, hi = fit["window"]
                xs = [1.0 + lo, 1.0 + hi]
                ys = [fit["amplitude"] * x ** (-fit["exponent"]) for x in xs]
                ax.loglog(xs, ys, "k--", linewidth=0.8)
        ax.set_xlabel("1 + t")
        ax.set_title(f"{kind}: decay of the squared norms")
        ax.legend(fontsize=8)
        fig.tight_layout()
        name = f"{kind}_decay.png"
        fig.savefig(fig_dir / name, dpi=130)
        plt.close(fig)
        written.append(f"figures/{name}")

        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        for column in ("F", "P", "Q", "R", "H"):
            series = [abs(getattr(s, column)) for s in snaps]
            ax.loglog(t1, series, label=column)
        ax.set_xlabel("1 + t")
        ax.set_title(f"{kind}: energy functionals")
        ax.legend(fontsize=8)
        fig.tight_layout()
        name = f"{kind}_energies.png"
        fig.savefig(fig_dir / name, dpi=130)
        plt.close(fig)
        written.append(f"figures/{name}")

    return written
