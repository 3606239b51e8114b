"""Figure rendering.

SVG output is assembled by hand so identical figures always produce
byte-identical files: fixed element and attribute order, pixel
coordinates formatted with two decimals, no timestamps. PNG output
goes through matplotlib's Agg canvas and is meant for quick looks and
reports, not for stable hashing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError, IoFailure
from .model import Figure, shape_vertices

PALETTE: Mapping[str, str] = {
    "red": "#e74c3c",
    "blue": "#3498db",
    "yellow": "#f1c40f",
}


@dataclass(frozen=True)
class RenderStyle:
    """Canvas size in pixels plus the color table. Colors outside the
    table fall back to their own name, so universes with extra colors
    render as long as the name is a valid SVG color. Style only ever
    changes pixels, never labels: evaluation reads the figure, not
    the image."""

    canvas_px: int = 600
    background: str = "#ffffff"
    palette: Mapping[str, str] = field(default_factory=lambda: dict(PALETTE))
    stroke: str = "#333333"
    stroke_width: float = 0.0  # canvas units; 0 disables outlines
    triangle_apex_up: bool = True

    def __post_init__(self):
        if self.canvas_px < 64:
            raise ConfigError(f"canvas_px must be at least 64, got {self.canvas_px}")
        if self.stroke_width < 0:
            raise ConfigError(f"stroke_width must be >= 0, got {self.stroke_width}")

    def fill(self, color: str) -> str:
        return self.palette.get(color, color)


DEFAULT_STYLE = RenderStyle()


def _triangle_points(o, st: RenderStyle) -> list[tuple[float, float]]:
    pts = shape_vertices("triangle", o.x, o.y, o.size)
    if not st.triangle_apex_up:
        pts = [(vx, 2.0 * o.y - vy) for vx, vy in pts]
    return pts


def render_svg(figure: Figure, style: RenderStyle | None = None) -> str:
    """Serialize a figure to a standalone SVG document."""
    st = style or DEFAULT_STYLE
    px = st.canvas_px

    def c(v: float) -> str:
        return f"{v * px:.2f}"

    outline = ""
    if st.stroke_width > 0:
        outline = f' stroke="{st.stroke}" stroke-width="{c(st.stroke_width)}"'

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" '
        f'viewBox="0 0 {px} {px}">',
        f'<rect width="{px}" height="{px}" fill="{st.background}"/>',
    ]
    for o in figure.objects:
        fill = st.fill(o.color)
        if o.shape == "circle":
            lines.append(
                f'<circle cx="{c(o.x)}" cy="{c(o.y)}" r="{c(o.size / 2)}" fill="{fill}"{outline}/>'
            )
        elif o.shape == "square":
            verts = shape_vertices("square", o.x, o.y, o.size)
            x0, y0 = verts[0]
            side = verts[1][0] - verts[0][0]
            lines.append(
                f'<rect x="{c(x0)}" y="{c(y0)}" width="{c(side)}" height="{c(side)}" '
                f'fill="{fill}"{outline}/>'
            )
        elif o.shape == "triangle":
            pts = " ".join(f"{c(vx)},{c(vy)}" for vx, vy in _triangle_points(o, st))
            lines.append(f'<polygon points="{pts}" fill="{fill}"{outline}/>')
        else:
            raise ConfigError(f"cannot render shape {o.shape!r}")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def save_svg(figure: Figure, path: str | Path, style: RenderStyle | None = None) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(render_svg(figure, style), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {p}: {e}") from e
    return p


def render_png(figure: Figure, path: str | Path, style: RenderStyle | None = None) -> Path:
    """Raster rendering via the Agg canvas, for reports and previews."""
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure as MplFigure
    from matplotlib.patches import Circle, Polygon, Rectangle

    st = style or DEFAULT_STYLE
    inches = st.canvas_px / 100.0
    mpl_fig = MplFigure(figsize=(inches, inches), dpi=100)
    FigureCanvasAgg(mpl_fig)
    ax = mpl_fig.add_axes([0, 0, 1, 1])
    ax.set_xlim(0, 1)
    ax.set_ylim(1, 0)  # canvas y grows downward
    ax.set_facecolor(st.background)
    ax.axis("off")
    edge = st.stroke if st.stroke_width > 0 else "none"
    lw = st.stroke_width * st.canvas_px if st.stroke_width > 0 else 0.0
    for o in figure.objects:
        fill = st.fill(o.color)
        if o.shape == "circle":
            ax.add_patch(Circle((o.x, o.y), o.size / 2, facecolor=fill, edgecolor=edge, linewidth=lw))
        elif o.shape == "square":
            verts = shape_vertices("square", o.x, o.y, o.size)
            side = verts[1][0] - verts[0][0]
            ax.add_patch(Rectangle(verts[0], side, side, facecolor=fill, edgecolor=edge, linewidth=lw))
        elif o.shape == "triangle":
            ax.add_patch(
                Polygon(_triangle_points(o, st), facecolor=fill, edgecolor=edge, linewidth=lw)
            )
        else:
            raise ConfigError(f"cannot render shape {o.shape!r}")
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        mpl_fig.savefig(p, format="png")
    except OSError as e:
        raise IoFailure(f"cannot write {p}: {e}") from e
    return p
