"""Figures drawn from a run's ``metrics.csv`` and ``trades.csv``.

The simulator itself never imports matplotlib; only the report path does.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _read(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path: Path) -> Path:
    tmp = path.with_name(path.name + ".tmp.png")
    fig.savefig(tmp, bbox_inches="tight")
    plt.close(fig)
    os.replace(tmp, path)
    return path


def _slug(item: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in item).strip("_")


def plot_time_to_provide(trades: list[dict[str, str]], path: Path) -> Path:
    """Ticks per procurement, trade by trade, with the running mean."""
    fig, ax = plt.subplots()
    ticks = [int(t["elapsed_ticks"]) for t in trades]
    running, total = [], 0
    for n, v in enumerate(ticks, 1):
        total += v
        running.append(total / n)
    xs = range(1, len(ticks) + 1)
    ax.plot(xs, ticks, ".", ms=2, alpha=0.4, label="per trade")
    ax.plot(xs, running, "-", lw=1.5, label="running AITT")
    ax.set_xlabel("trade")
    ax.set_ylabel("ticks to provide")
    ax.legend()
    return _save(fig, path)


def plot_metric(rows: list[dict[str, str]], column: str, label: str, path: Path) -> Path:
    fig, ax = plt.subplots()
    pts = [(int(r["tick"]), float(r[column])) for r in rows if r[column] != ""]
    if pts:
        ax.plot([p[0] for p in pts], [p[1] for p in pts], lw=1.2)
    else:
        ax.text(0.5, 0.5, "undefined for the whole run", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("tick")
    ax.set_ylabel(label)
    return _save(fig, path)


def plot_item_price(trades: list[dict[str, str]], item: str, path: Path) -> Path:
    """Unit price paid for one item over successive trades, split by trade kind."""
    fig, ax = plt.subplots()
    sel = [t for t in trades if t["item"] == item]
    for kind, marker in (("internal", "s"), ("external", "o")):
        pts = [(n, float(t["price"])) for n, t in enumerate(sel, 1) if t["kind"] == kind]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker, ms=3, label=kind)
    if sel:
        ax.plot(range(1, len(sel) + 1), [float(t["price"]) for t in sel], "-", lw=0.6, color="0.5")
        ax.legend()
    ax.set_xlabel(f"{item} trade")
    ax.set_ylabel("unit price")
    ax.set_title(item)
    return _save(fig, path)


def render_figures(out_dir: Union[str, os.PathLike]) -> list[Path]:
    """Write PNG figures for the run whose CSV files live in ``out_dir``."""
    out = Path(out_dir)
    rows = _read(out / "metrics.csv")
    trades = _read(out / "trades.csv")
    fig_dir = out / "figures"
    fig_dir.mkdir(exist_ok=True)
    items = [c for c in (rows[0].keys() if rows else []) if c not in ("tick", "k", "aip", "aitt", "itr", "internal", "external")]
    written = []
    with plt.rc_context(STYLE):
        written.append(plot_time_to_provide(trades, fig_dir / "time_to_provide.png"))
        written.append(plot_metric(rows, "aip", "average item price", fig_dir / "aip.png"))
        written.append(plot_metric(rows, "aitt", "average ticks to provide", fig_dir / "aitt.png"))
        written.append(plot_metric(rows, "itr", "internal / external trades", fig_dir / "itr.png"))
        for item in items:
            written.append(plot_item_price(trades, item, fig_dir / f"price_{_slug(item)}.png"))
    return written
