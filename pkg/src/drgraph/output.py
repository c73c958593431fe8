"""Coordinate-file and SVG emission."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


def write_coords(positions: np.ndarray) -> str:
    """One "x y" line per node after a "#nodes N" header, 6 decimals."""
    positions = np.asarray(positions, dtype=np.float64)
    lines = [f"#nodes {len(positions)}"]
    lines.extend(f"{x:.6f} {y:.6f}" for x, y in positions)
    return "\n".join(lines) + "\n"


def read_coords(text: str) -> np.ndarray:
    """Inverse of write_coords."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#nodes"):
        raise ValueError("missing '#nodes N' header")
    n = int(lines[0].split()[1])
    rows = [tuple(map(float, ln.split())) for ln in lines[1:]]
    if len(rows) != n:
        raise ValueError(f"header says {n} nodes, found {len(rows)} lines")
    return np.array(rows, dtype=np.float64).reshape(n, 2)


@dataclass
class SvgStyle:
    """Rendering knobs. Edge color is linear in edge length from red
    (shortest) through green to blue (longest); a single-length edge set
    maps to red. Above edge_cap edges, a seeded uniform sample of exactly
    edge_cap edges is drawn."""

    canvas: int = 1000
    margin: float = 20.0
    node_radius: float = 2.0
    edge_width: float = 1.0
    edge_cap: int = 600_000


def _edge_color(t: float) -> str:
    if t <= 0.5:
        u = 2.0 * t
        r, g, b = 1.0 - u, u, 0.0
    else:
        u = 2.0 * t - 1.0
        r, g, b = 0.0, 1.0 - u, u
    return f"#{int(round(255 * r)):02x}{int(round(255 * g)):02x}{int(round(255 * b)):02x}"


def write_svg(g: Graph, positions: np.ndarray, style: SvgStyle | None = None,
              seed: int = 0) -> str:
    """Render the layout as an SVG document, nodes above edges.

    The layout is fitted to the canvas preserving the aspect ratio.
    """
    style = style or SvgStyle()
    positions = np.asarray(positions, dtype=np.float64)
    n = len(positions)
    size = float(style.canvas)
    inner = size - 2.0 * style.margin

    if n:
        mins = positions.min(axis=0)
        maxs = positions.max(axis=0)
        spans = maxs - mins
        span = float(spans.max())
        scale = inner / span if span > 0 else 0.0
        offset = style.margin + (inner - spans * scale) / 2.0
        xs = offset[0] + (positions[:, 0] - mins[0]) * scale
        ys = size - (offset[1] + (positions[:, 1] - mins[1]) * scale)
    else:
        xs = ys = np.empty(0)

    edges = g.edge_array()
    if len(edges) > style.edge_cap:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(edges), size=style.edge_cap, replace=False))
        edges = edges[pick]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.canvas}" '
        f'height="{style.canvas}" viewBox="0 0 {style.canvas} {style.canvas}">',
        f'<rect width="{style.canvas}" height="{style.canvas}" fill="white"/>',
    ]
    if len(edges):
        du = xs[edges[:, 0]] - xs[edges[:, 1]]
        dv = ys[edges[:, 0]] - ys[edges[:, 1]]
        lengths = np.sqrt(du * du + dv * dv)
        lmin = float(lengths.min())
        lmax = float(lengths.max())
        lrange = lmax - lmin
        for (u, v), length in zip(edges, lengths):
            t = (length - lmin) / lrange if lrange > 0 else 0.0
            parts.append(
                f'<line x1="{xs[u]:.2f}" y1="{ys[u]:.2f}" x2="{xs[v]:.2f}" '
                f'y2="{ys[v]:.2f}" stroke="{_edge_color(t)}" '
                f'stroke-width="{style.edge_width}"/>')
    for i in range(n):
        parts.append(f'<circle cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" '
                     f'r="{style.node_radius}" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
