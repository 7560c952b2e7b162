"""Render experiment CSVs as SVG. Pure presentation, nothing is recomputed."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pandas as pd

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("heatmap", "lines")


class PlotDataError(ValueError):
    pass


def _read(csv_path: Path) -> pd.DataFrame:
    try:
        df = pd.read_csv(csv_path, comment="#")
    except pd.errors.EmptyDataError:
        raise PlotDataError(f"{csv_path}: empty CSV") from None
    if df.empty:
        raise PlotDataError(f"{csv_path}: CSV has no data rows")
    return df


def _require(df: pd.DataFrame, cols, csv_path) -> None:
    for c in cols:
        if c not in df.columns:
            raise PlotDataError(f"{csv_path}: missing column {c!r}")


def _heatmap(df: pd.DataFrame, csv_path: Path):
    _require(df, ("x_m", "y_m"), csv_path)
    values = [c for c in df.columns if c not in ("x_m", "y_m") and pd.api.types.is_numeric_dtype(df[c])]
    if not values:
        raise PlotDataError(f"{csv_path}: no value column besides x_m, y_m")
    xs = np.sort(df["x_m"].unique())
    ys = np.sort(df["y_m"].unique())
    fig, axes = plt.subplots(1, len(values), figsize=(4.2 * len(values), 3.6), squeeze=False)
    for ax, col in zip(axes[0], values):
        grid = df.pivot(index="y_m", columns="x_m", values=col).reindex(index=ys, columns=xs)
        im = ax.pcolormesh(xs, ys, grid.to_numpy(), shading="nearest", rasterized=False)
        ax.set_title(col)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        fig.colorbar(im, ax=ax)
    return fig


def _lines(df: pd.DataFrame, csv_path: Path):
    xcol = df.columns[0]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if "label" in df.columns:
        _require(df, ("p",), csv_path)
        for label, part in df.groupby("label", sort=True):
            ax.plot(part[xcol], part["p"], label=str(label))
    else:
        ys = [c for c in df.columns[1:] if pd.api.types.is_numeric_dtype(df[c])]
        if not ys:
            raise PlotDataError(f"{csv_path}: no numeric series after {xcol!r}")
        for c in ys:
            ax.plot(df[xcol], df[c], marker="o", label=c)
    ax.set_xlabel(xcol)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    return fig


def emit_plotdata(csv_path, kind: str, out_path=None) -> Path:
    """Write ``<csv>.svg`` (or ``out_path``) and return its path.

    Output bytes depend only on the CSV content.
    """
    if kind not in KINDS:
        raise PlotDataError(f"unknown plot kind {kind!r}; expected one of {KINDS}")
    csv_path = Path(csv_path)
    df = _read(csv_path)
    fig = _heatmap(df, csv_path) if kind == "heatmap" else _lines(df, csv_path)
    out = Path(out_path) if out_path is not None else csv_path.with_suffix(".svg")
    buf = io.StringIO()
    with plt.rc_context({"svg.hashsalt": "isac-handover", "svg.fonttype": "path"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    out.write_text(buf.getvalue())
    return out
