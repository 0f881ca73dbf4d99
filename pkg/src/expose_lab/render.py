"""Deterministic SVG figures of planar curves.

Figures have a fixed canvas, fixed axis limits derived from the data, a fixed
hash salt for element ids and no timestamp, so the same data always gives
the same bytes.  :func:`render_curves` returns the data-to-pixel transform
so callers can check pixel-level claims.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

WIDTH_IN, HEIGHT_IN, DPI = 6.0, 6.0, 100


class EmptyDataError(ValueError):
    pass


@dataclass
class Curve:
    label: str
    points: np.ndarray
    closed: bool = False


@dataclass
class RenderInfo:
    path: Path
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    size_px: tuple[int, int]
    pixels: dict = field(default_factory=dict)

    def to_pixels(self, pts) -> np.ndarray:
        """Pixel coordinates (origin bottom-left) of complex points."""
        pts = np.asarray(pts, dtype=complex)
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        fx = (pts.real - x0) / (x1 - x0) * self._axes_px[2] + self._axes_px[0]
        fy = (pts.imag - y0) / (y1 - y0) * self._axes_px[3] + self._axes_px[1]
        return np.column_stack([fx, fy])

    _axes_px: tuple = (0.0, 0.0, 1.0, 1.0)


def _limits(curves, markers, pad=0.08):
    allpts = np.concatenate([c.points for c in curves] + [np.array([m[1] for m in markers], dtype=complex)])
    x0, x1 = allpts.real.min(), allpts.real.max()
    y0, y1 = allpts.imag.min(), allpts.imag.max()
    # square limits so that circles stay circles
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    half = max(x1 - x0, y1 - y0, 1e-9) * (0.5 + pad)
    return (cx - half, cx + half), (cy - half, cy + half)


def render_curves(curves: list[Curve], path, title: str = "", markers=(), limits=None) -> RenderInfo:
    """Draw curves (and labelled point markers) to an SVG file."""
    curves = [c for c in curves if c.points.size]
    if not curves:
        raise EmptyDataError("nothing to render")
    path = Path(path)
    xlim, ylim = limits if limits is not None else _limits(curves, list(markers))
    plt.rcParams["svg.hashsalt"] = "expose-lab"
    fig = plt.figure(figsize=(WIDTH_IN, HEIGHT_IN), dpi=DPI)
    ax = fig.add_axes((0.1, 0.1, 0.8, 0.8))
    for c in curves:
        p = np.append(c.points, c.points[:1]) if c.closed else c.points
        ax.plot(p.real, p.imag, lw=1.0, label=c.label)
    for label, z in markers:
        ax.plot([z.real], [z.imag], "o", ms=3, label=label)
    ax.set_xlim(*xlim)
    ax.set_ylim(*ylim)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=7)
    desc = f"xlim={xlim[0]:.12g},{xlim[1]:.12g}; ylim={ylim[0]:.12g},{ylim[1]:.12g}; size={WIDTH_IN * DPI:.0f}x{HEIGHT_IN * DPI:.0f}px"
    fig.savefig(path, format="svg", metadata={"Date": None, "Description": desc})
    bbox = ax.get_position()
    W, H = WIDTH_IN * DPI, HEIGHT_IN * DPI
    info = RenderInfo(path, tuple(map(float, xlim)), tuple(map(float, ylim)), (int(W), int(H)))
    info._axes_px = (bbox.x0 * W, bbox.y0 * H, bbox.width * W, bbox.height * H)
    plt.close(fig)
    for c in curves:
        info.pixels[c.label] = info.to_pixels(c.points)
    return info


def read_curves_csv(path) -> list[Curve]:
    """Curves from a CSV with columns ``index, re, im`` and an optional ``curve`` label."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise EmptyDataError(f"{path}: no rows")
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row.get("curve") or Path(path).stem, []).append(
            (int(row["index"]), float(row["re"]) + 1j * float(row["im"]))
        )
    return [Curve(k, np.array([v for _, v in sorted(g)], dtype=complex)) for k, g in groups.items()]


def write_curves_csv(path, curves: list[Curve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "index", "re", "im"])
        for c in curves:
            for k, z in enumerate(c.points):
                w.writerow([c.label, k, repr(float(z.real)), repr(float(z.imag))])
