"""Hand-written SVG line charts of summary metrics against the horizon."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

COLORS = {
    "ucb_ros": "#e6b800",
    "pd_exp3p1": "#2ca02c",
    "exp_ix": "#1f77b4",
    "lin_bandit": "#7f7f7f",
}
LABELS = {
    "ucb_ros": "UCB-RoS",
    "pd_exp3p1": "Primal-dual (Exp3.P.1 + DS-OMD)",
    "exp_ix": "EXP-IX",
    "lin_bandit": "Linear bandit",
}
METRICS = ("regret", "budget_viol", "ros_viol")
LEGEND_ORDER = tuple(COLORS)

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60


def _num(x: float) -> str:
    return format(x, ".2f")


def _tick(x: float) -> str:
    return format(x, ".4g")


def render_svg(summary, metric: str, title: str | None = None) -> str:
    """SVG text for ``mean_<metric>`` against ``T``, one line per algorithm.

    Each series gets a shaded band of one standard deviation; a series with a
    single horizon is drawn as a point marker without band.
    """
    summary = list(summary)
    if not summary:
        raise ValueError("summary is empty")
    if not hasattr(summary[0], f"mean_{metric}"):
        raise ValueError(f"unknown metric {metric!r}")
    series: dict[str, list[tuple[float, float, float]]] = {}
    for row in summary:
        series.setdefault(row.algo, []).append(
            (float(row.T), float(getattr(row, f"mean_{metric}")), float(getattr(row, f"sd_{metric}")))
        )
    order = [a for a in LEGEND_ORDER if a in series] + sorted(a for a in series if a not in COLORS)
    for a in order:
        series[a].sort()

    xs = [p[0] for a in order for p in series[a]]
    ys = [v for a in order for (_, m, s) in series[a] for v in (m - s, m + s)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys + [0.0]), max(ys + [0.0])
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-size="14">'
        f"{escape(title or metric.replace('_', ' '))}</text>",
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_num(px(xv))}" y="{TOP + ph + 18}" text-anchor="middle">{_tick(xv)}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{_num(py(yv) + 4)}" text-anchor="end">{_tick(yv)}</text>')
    out.append(f'<text x="{LEFT + pw // 2}" y="{HEIGHT - 15}" text-anchor="middle">T</text>')

    for a in order:
        pts = series[a]
        color = COLORS.get(a, "#000000")
        if len(pts) == 1:
            x, m, _ = pts[0]
            out.append(f'<circle cx="{_num(px(x))}" cy="{_num(py(m))}" r="4" fill="{color}"/>')
            continue
        upper = " ".join(f"{_num(px(x))},{_num(py(m + s))}" for x, m, s in pts)
        lower = " ".join(f"{_num(px(x))},{_num(py(m - s))}" for x, m, s in reversed(pts))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_num(px(x))},{_num(py(m))}" for x, m, _ in pts)
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')

    for i, a in enumerate(order):
        y = TOP + 10 + 18 * i
        color = COLORS.get(a, "#000000")
        out.append(f'<line x1="{LEFT + 12}" y1="{y}" x2="{LEFT + 36}" y2="{y}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{LEFT + 42}" y="{y + 4}">{escape(LABELS.get(a, a))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_chart(summary, metric: str, path: Path | str, title: str | None = None) -> Path:
    path = Path(path)
    text = render_svg(summary, metric, title)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return path
