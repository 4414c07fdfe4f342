"""Minimal SVG line plots for diagnostics."""

import numpy as np

_W, _H, _PAD = 480, 320, 48


def _fmt(v):
    return f"{v:.2f}"


def polyline_svg(x, y, title="", xlabel="", ylabel="") -> str:
    """Return an SVG document with one polyline of ``y`` against ``x``.

    Non-finite points are dropped.  Output depends only on the inputs, so
    the same data always gives the same bytes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    x0, x1 = (x.min(), x.max()) if x.size else (0.0, 1.0)
    y0, y1 = (y.min(), y.max()) if y.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px = _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)
    py = _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)
    pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="#888"/>',
        f'<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{pts}"/>',
        f'<text x="{_W / 2}" y="{_PAD / 2}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{_H / 2}" font-size="12" transform="rotate(-90 14 {_H / 2})" '
        f'text-anchor="middle">{ylabel}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 14}" font-size="10">{x0:.4g}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 14}" font-size="10" '
        f'text-anchor="end">{x1:.4g}</text>',
        f'<text x="{_PAD - 4}" y="{_H - _PAD}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{_PAD - 4}" y="{_PAD + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def write_polyline_svg(path, x, y, title="", xlabel="", ylabel="") -> None:
    with open(path, "w") as fh:
        fh.write(polyline_svg(x, y, title, xlabel, ylabel))
