"""Deterministic SVG bar charts for evaluation reports.

Hand-rolled SVG keeps regenerated reports byte-identical; a plotting
library would embed versions and timestamps.
"""

from __future__ import annotations

from pathlib import Path

PALETTE = {
    "multiworld": "#4c78a8",
    "multiworld_cfg0": "#9ecae9",
    "specialist": "#54a24b",
    "zero_shot": "#f58518",
    "no_language": "#e45756",
}
FALLBACK_COLORS = ["#72b7b2", "#b279a2", "#eeca3b", "#9d755d"]


def grouped_bars_svg(
    title: str,
    groups: list[str],
    series: dict[str, dict[str, tuple[float, float]]],  # family -> group -> (value, half_ci)
    *,
    y_max: float = 1.0,
    y_label: str = "success rate",
    reference_line: float | None = None,
) -> str:
    left, top = 60, 46
    plot_w, plot_h = max(420, 90 * len(groups)), 240
    width = left + plot_w + 180
    height = top + plot_h + 70
    families = sorted(series)
    bar_gap = 4
    group_w = plot_w / max(1, len(groups))
    bar_w = max(6.0, (group_w - 2 * bar_gap) / max(1, len(families)) - bar_gap)

    def color(i: int, family: str) -> str:
        return PALETTE.get(family, FALLBACK_COLORS[i % len(FALLBACK_COLORS)])

    def ypix(v: float) -> float:
        return top + plot_h * (1 - min(v, y_max) / y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        'font-family="sans-serif">',
        f'<text x="{left}" y="22" font-size="15">{_esc(title)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#333"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="#333"/>',
        f'<text x="16" y="{top + plot_h / 2}" font-size="11" '
        f'transform="rotate(-90 16 {top + plot_h / 2})" '
        f'text-anchor="middle">{_esc(y_label)}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = ypix(frac * y_max)
        parts.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" '
                     'stroke="#333"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.1f}" font-size="10" '
                     f'text-anchor="end">{frac * y_max:g}</text>')
    if reference_line is not None:
        y = ypix(reference_line)
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" '
                     f'y2="{y:.1f}" stroke="#555" stroke-dasharray="5,4"/>')

    for gi, group in enumerate(groups):
        gx = left + gi * group_w + bar_gap
        for fi, family in enumerate(families):
            entry = series[family].get(group)
            if entry is None:
                continue
            value, half = entry
            x = gx + fi * (bar_w + bar_gap)
            y = ypix(value)
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                f'height="{top + plot_h - y:.1f}" fill="{color(fi, family)}"/>')
            if half > 0:
                y_lo, y_hi = ypix(max(0.0, value - half)), ypix(value + half)
                cx = x + bar_w / 2
                parts.append(f'<line x1="{cx:.1f}" y1="{y_hi:.1f}" x2="{cx:.1f}" '
                             f'y2="{y_lo:.1f}" stroke="#222"/>')
                for yy in (y_hi, y_lo):
                    parts.append(f'<line x1="{cx - 3:.1f}" y1="{yy:.1f}" '
                                 f'x2="{cx + 3:.1f}" y2="{yy:.1f}" stroke="#222"/>')
        parts.append(
            f'<text x="{left + gi * group_w + group_w / 2:.1f}" '
            f'y="{top + plot_h + 18}" font-size="11" '
            f'text-anchor="middle">{_esc(group)}</text>')

    legend_x = left + plot_w + 14
    for fi, family in enumerate(families):
        y = top + 16 * fi
        parts.append(f'<rect x="{legend_x}" y="{y}" width="12" height="12" '
                     f'fill="{color(fi, family)}"/>')
        parts.append(f'<text x="{legend_x + 18}" y="{y + 10}" '
                     f'font-size="11">{_esc(family)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report_charts(report, out_dir: str | Path) -> list[Path]:
    """Environment, skill, and relative-performance charts for a report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    env_groups = sorted({w for fam in report.per_environment.values() for w in fam})
    env_series = {
        family: {w: (v["rate"], v["ci95"]) for w, v in by.items()}
        for family, by in report.per_environment.items()
    }
    path = out / "success_by_environment.svg"
    path.write_text(grouped_bars_svg("Success rate by environment", env_groups,
                                     env_series))
    written.append(path)

    skill_groups = sorted({s for fam in report.per_skill.values() for s in fam})
    skill_series = {
        family: {s: (v["rate"], v["ci95"]) for s, v in by.items()}
        for family, by in report.per_skill.items()
    }
    path = out / "success_by_skill.svg"
    path.write_text(grouped_bars_svg("Success rate by skill category", skill_groups,
                                     skill_series))
    written.append(path)

    if report.relative:
        rel_groups = sorted({w for fam in report.relative.values()
                             for w in fam.get("per_world", {})})
        rel_series = {
            family: {w: (v, 0.0) for w, v in doc["per_world"].items()}
            for family, doc in report.relative.items()
        }
        y_max = max((v for fam in rel_series.values() for v, _ in fam.values()),
                    default=100.0)
        path = out / "relative_to_specialist.svg"
        path.write_text(grouped_bars_svg(
            "Performance relative to environment specialist", rel_groups,
            rel_series, y_max=max(120.0, round(y_max + 20, -1)),
            y_label="% of specialist", reference_line=100.0))
        written.append(path)
    return written


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
