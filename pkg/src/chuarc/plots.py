"""Hand-rolled SVG rendering for the CSV artifacts.

Purely presentational: scatter for bifurcation data, lines for traces and
spectra, a heatmap for sweeps, and a histogram for per-case error lists.
No numeric transformation beyond axis scaling.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import ConfigurationError

WIDTH, HEIGHT = 720, 480
MARGIN = 60
PLOT_W, PLOT_H = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN


def _read_csv(path):
    digest = None
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    rows = []
    header = None
    for ln in lines:
        if ln.startswith("#"):
            if "config_digest=" in ln:
                digest = ln.split("config_digest=", 1)[1].strip()
            continue
        if header is None:
            header = ln.split(",")
        else:
            rows.append(ln.split(","))
    if header is None:
        raise ConfigurationError("csv", f"{path} has no header row")
    return header, rows, digest


def _scale(values, lo_px, hi_px):
    vmin, vmax = min(values), max(values)
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def _svg_header(title, digest):
    meta = f"<metadata>config_digest={digest or 'unknown'}</metadata>"
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">{meta}'
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>'
        f'<text x="{WIDTH/2}" y="24" text-anchor="middle" font-size="16">{title}</text>'
    )


def _axes(x_label, y_label, xmin, xmax, ymin, ymax):
    parts = [
        f'<line x1="{MARGIN}" y1="{HEIGHT-MARGIN}" x2="{WIDTH-MARGIN}" y2="{HEIGHT-MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT-MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH/2}" y="{HEIGHT-16}" text-anchor="middle" font-size="13">{x_label}</text>',
        f'<text x="18" y="{HEIGHT/2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {HEIGHT/2})">{y_label}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT-MARGIN+16}" font-size="11">{xmin:.4g}</text>',
        f'<text x="{WIDTH-MARGIN}" y="{HEIGHT-MARGIN+16}" text-anchor="end" font-size="11">{xmax:.4g}</text>',
        f'<text x="{MARGIN-4}" y="{HEIGHT-MARGIN}" text-anchor="end" font-size="11">{ymin:.4g}</text>',
        f'<text x="{MARGIN-4}" y="{MARGIN+4}" text-anchor="end" font-size="11">{ymax:.4g}</text>',
    ]
    return "".join(parts)


def _scatter_svg(xs, ys, x_label, y_label, title, digest):
    to_x, xmin, xmax = _scale(xs, MARGIN, WIDTH - MARGIN)
    to_y, ymin, ymax = _scale(ys, HEIGHT - MARGIN, MARGIN)
    dots = "".join(
        f'<circle cx="{to_x(x):.2f}" cy="{to_y(y):.2f}" r="1.4" fill="steelblue"/>'
        for x, y in zip(xs, ys)
    )
    return (_svg_header(title, digest) + _axes(x_label, y_label, xmin, xmax, ymin, ymax)
            + dots + "</svg>")


def _line_svg(xs, series, x_label, y_label, title, digest):
    to_x, xmin, xmax = _scale(xs, MARGIN, WIDTH - MARGIN)
    flat = [v for ys in series.values() for v in ys]
    to_y, ymin, ymax = _scale(flat, HEIGHT - MARGIN, MARGIN)
    colors = ("steelblue", "firebrick", "seagreen", "darkorange")
    paths = []
    for i, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{to_x(x):.2f},{to_y(y):.2f}" for x, y in zip(xs, ys))
        color = colors[i % len(colors)]
        paths.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>')
        paths.append(
            f'<text x="{WIDTH-MARGIN}" y="{MARGIN+14*(i+1)}" text-anchor="end" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
    return (_svg_header(title, digest) + _axes(x_label, y_label, xmin, xmax, ymin, ymax)
            + "".join(paths) + "</svg>")


def _heat_color(t):
    # blue (low) -> yellow -> red (high)
    t = min(1.0, max(0.0, t))
    if t < 0.5:
        r, g, b = int(510 * t), int(510 * t), int(255 * (1 - 2 * t))
    else:
        r, g, b = 255, int(255 * (2 - 2 * t)), 0
    return f"rgb({r},{g},{b})"


def _heatmap_svg(xs, ys, values, x_label, y_label, title, digest):
    ux = sorted(set(xs))
    uy = sorted(set(ys))
    finite = [v for v in values if math.isfinite(v)]
    vmin = min(finite) if finite else 0.0
    vmax = max(finite) if finite else 1.0
    span = (vmax - vmin) or 1.0
    cw = PLOT_W / len(ux)
    ch = PLOT_H / len(uy)
    cells = []
    for x, y, v in zip(xs, ys, values):
        ix = ux.index(x)
        iy = uy.index(y)
        color = _heat_color((v - vmin) / span) if math.isfinite(v) else "gray"
        cx = MARGIN + ix * cw
        cy = HEIGHT - MARGIN - (iy + 1) * ch
        cells.append(f'<rect x="{cx:.2f}" y="{cy:.2f}" width="{cw:.2f}" height="{ch:.2f}" fill="{color}"/>')
    return (_svg_header(title, digest)
            + _axes(x_label, y_label, ux[0], ux[-1], uy[0], uy[-1])
            + "".join(cells) + "</svg>")


def _histogram_svg(values, x_label, title, digest, n_bins=20):
    vmin, vmax = min(values), max(values)
    if vmax == vmin:
        vmax = vmin + 1.0
    width = (vmax - vmin) / n_bins
    edges = [vmin + i * width for i in range(n_bins + 1)]
    counts = [0] * n_bins
    for v in values:
        idx = min(n_bins - 1, int((v - vmin) / width))
        counts[idx] += 1
    to_x, *_ = _scale(edges, MARGIN, WIDTH - MARGIN)
    peak = max(counts) or 1
    bars = []
    for i, c in enumerate(counts):
        x0 = to_x(edges[i])
        x1 = to_x(edges[i + 1])
        h = PLOT_H * c / peak
        bars.append(
            f'<rect x="{x0:.2f}" y="{HEIGHT-MARGIN-h:.2f}" width="{x1-x0:.2f}" '
            f'height="{h:.2f}" fill="steelblue" stroke="white" stroke-width="0.5"/>'
        )
    meta = f"<metadata>config_digest={digest or 'unknown'};bin_edges={edges}</metadata>"
    header = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">{meta}'
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>'
        f'<text x="{WIDTH/2}" y="24" text-anchor="middle" font-size="16">{title}</text>'
    )
    return (header + _axes(x_label, "count", vmin, vmax, 0, peak) + "".join(bars) + "</svg>")


def render_plot(csv_path, out_path, kind: str | None = None) -> str:
    """Render a recognised CSV artifact to SVG; returns the detected kind.

    Detection is by header: bifurcation scatter (`param,extremum_value`),
    spectrum line (`freq_hz,magnitude`), sweep heatmap
    (`[n_mask,]r_ohms,v_center,mean_nmse`), per-case histogram (any header
    with an `nmse` column), and multi-channel traces (`t,...`).
    """
    header, rows, digest = _read_csv(csv_path)
    cols = {name: i for i, name in enumerate(header)}

    def col(name):
        return [float(r[cols[name]]) for r in rows]

    if kind is None:
        if header == ["param", "extremum_value"]:
            kind = "bifurcation"
        elif header == ["freq_hz", "magnitude"]:
            kind = "spectrum"
        elif header[-3:] == ["r_ohms", "v_center", "mean_nmse"]:
            kind = "sweep"
        elif "nmse" in cols:
            kind = "histogram"
        elif header and header[0] == "t":
            kind = "trace"
        else:
            raise ConfigurationError("csv", f"unrecognised schema {header}")

    if kind == "bifurcation":
        svg = _scatter_svg(col("param"), col("extremum_value"),
                           "parameter", "extremum (V)", "bifurcation scan", digest)
    elif kind == "spectrum":
        svg = _line_svg(col("freq_hz"), {"magnitude": col("magnitude")},
                        "frequency (Hz)", "|X|", "power spectrum", digest)
    elif kind == "sweep":
        svg = _heatmap_svg(col("r_ohms"), col("v_center"), col("mean_nmse"),
                           "resistance (ohm)", "centre voltage (V)", "sweep mean NMSE", digest)
    elif kind == "histogram":
        svg = _histogram_svg(col("nmse"), "NMSE", "validation NMSE distribution", digest)
    elif kind == "trace":
        xs = col("t")
        series = {name: col(name) for name in header[1:]}
        svg = _line_svg(xs, series, "time (s)", "volts", "trace", digest)
    else:
        raise ConfigurationError("kind", f"unknown plot kind {kind}")

    Path(out_path).write_text(svg)
    return kind
