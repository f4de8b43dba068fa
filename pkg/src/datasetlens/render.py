"""Static HTML rendering of a machine report.

One self-contained document, inline SVG charts, no external fetches; every
number shown comes straight from the report payload.
"""

from __future__ import annotations

import html
from typing import Any, Iterable

_CSS = """
body { font-family: system-ui, sans-serif; margin: 2rem auto; max-width: 70rem;
       color: #1a1a2e; }
h1 { border-bottom: 3px solid #2b6cb0; padding-bottom: .3rem; }
h2 { color: #2b6cb0; margin-top: 2.2rem; }
h3 { margin-top: 1.4rem; }
table { border-collapse: collapse; margin: .6rem 0; font-size: .9rem; }
th, td { border: 1px solid #cbd5e0; padding: .25rem .6rem; text-align: left; }
th { background: #edf2f7; }
.skip { color: #718096; font-style: italic; }
.action { background: #fffbea; border-left: 4px solid #d69e2e; padding: .4rem .8rem;
          margin: .5rem 0; font-size: .9rem; }
.note { color: #4a5568; font-size: .85rem; }
svg { margin: .4rem 0; }
"""


def _esc(value: Any) -> str:
    return html.escape(str(value))


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _bar_chart(pairs: list[tuple[str, float]], width: int = 420, color: str = "#2b6cb0") -> str:
    """Horizontal SVG bar chart for (label, value) pairs scaled to the max."""
    if not pairs:
        return ""
    peak = max(v for _, v in pairs) or 1.0
    row_h, label_w = 18, 190
    lines = [
        f'<svg width="{width}" height="{row_h * len(pairs) + 4}" '
        f'xmlns="http://www.w3.org/2000/svg" role="img">'
    ]
    for i, (label, value) in enumerate(pairs):
        y = i * row_h + 2
        bar = max((width - label_w - 60) * value / peak, 0)
        lines.append(
            f'<text x="{label_w - 6}" y="{y + 12}" text-anchor="end" '
            f'font-size="11">{_esc(label)[:30]}</text>'
            f'<rect x="{label_w}" y="{y + 2}" width="{bar:.1f}" height="{row_h - 6}" '
            f'fill="{color}"></rect>'
            f'<text x="{label_w + bar + 4}" y="{y + 12}" font-size="11">{_fmt(value)}</text>'
        )
    lines.append("</svg>")
    return "".join(lines)


def _scatter(points: list[tuple[float, float, str, bool]], width: int = 460, height: int = 300) -> str:
    """Scatter of (x, y, label, highlighted): the tradeoff view."""
    if not points:
        return ""
    pad = 40
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_max = max(xs) or 1.0
    y_max = max(ys) or 1.0
    lines = [
        f'<svg width="{width}" height="{height}" xmlns="http://www.w3.org/2000/svg">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - 10}" y2="{height - pad}" stroke="#888"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{pad}" y2="10" stroke="#888"/>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" font-size="11" text-anchor="middle">commonness</text>',
        f'<text x="12" y="{height / 2:.0f}" font-size="11" transform="rotate(-90 12 {height / 2:.0f})" text-anchor="middle">diversity gain</text>',
    ]
    for x, y, label, highlighted in points:
        cx = pad + (width - pad - 20) * x / x_max
        cy = (height - pad) - (height - pad - 20) * y / y_max
        fill = "#d69e2e" if highlighted else "#2b6cb0"
        lines.append(
            f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="5" fill="{fill}"></circle>'
            f'<text x="{cx + 7:.1f}" y="{cy + 4:.1f}" font-size="10">{_esc(label)[:26]}</text>'
        )
    lines.append("</svg>")
    return "".join(lines)


def _table(headers: Iterable[str], rows: Iterable[Iterable[Any]], limit: int = 25) -> str:
    body = []
    for i, row in enumerate(rows):
        if i >= limit:
            body.append(f'<tr><td colspan="{len(list(headers))}" class="note">…truncated</td></tr>')
            break
        cells = "".join(f"<td>{_esc(_fmt(v))}</td>" for v in row)
        body.append(f"<tr>{cells}</tr>")
    head = "".join(f"<th>{_esc(h)}</th>" for h in headers)
    return f"<table><thead><tr>{head}</tr></thead><tbody>{''.join(body)}</tbody></table>"


def _action(block: dict) -> str:
    action = block.get("action")
    return f'<div class="action">Action: {_esc(action)}</div>' if action else ""


def _skipped(block: dict) -> str:
    return f'<p class="skip">Skipped — missing: {_esc(block.get("missing"))}</p>'


def _render_objects(section: dict) -> list[str]:
    out = ["<h2>Object-based metrics</h2>"]
    counts = section.get("counts", {})
    out.append("<h3>Category counts</h3>")
    if counts.get("skipped"):
        out.append(_skipped(counts))
    else:
        rows = counts["per_category"]
        top = sorted(rows, key=lambda r: -r["count"])[:15]
        out.append(_bar_chart([(r["category"], r["count"]) for r in top]))
        out.append(
            _table(
                ["category", "supercategory", "count", "vs super mean", "above median"],
                [
                    (r["category"], r["supercategory"], r["count"],
                     r["vs_supercategory_mean"], r["above_dataset_median"])
                    for r in rows
                ],
            )
        )
        out.append(_action(counts))

    dups = section.get("duplicates", {})
    out.append("<h3>Duplicate annotations</h3>")
    if dups.get("skipped"):
        out.append(_skipped(dups))
    elif not dups["pairs"]:
        out.append('<p class="note">No duplicate-looking pairs flagged.</p>')
    else:
        out.append(
            _table(
                ["category a", "category b", "co-occurrences", "high-overlap fraction"],
                [
                    (p["category_a"], p["category_b"], p["cooccurrence_count"],
                     p["high_overlap_fraction"])
                    for p in dups["pairs"]
                ],
            )
        )
        out.append(_action(dups))

    scale = section.get("scale", {})
    out.append("<h3>Object scale</h3>")
    if scale.get("skipped"):
        out.append(_skipped(scale))
    else:
        skewed = [r for r in scale["per_category"] if r["skewed"] and not r["low_support"]]
        out.append(
            f'<p class="note">Bins {", ".join(scale["bin_labels"])} split the dataset\'s '
            "area fractions into equal fifths; categories below are size-skewed.</p>"
        )
        out.append(
            _table(
                ["category", "n"] + list(scale["bin_labels"]),
                [(r["category"], r["n"], *(f"{s:.2f}" for s in r["bin_shares"])) for r in skewed],
            )
        )
        out.append(_action(scale))

    diversity = section.get("scene_diversity", {})
    out.append("<h3>Scene diversity</h3>")
    if diversity.get("skipped"):
        out.append(_skipped(diversity))
    else:
        ranked = [r for r in diversity["ranking"] if not r["low_support"]] or diversity["ranking"]
        out.append(_bar_chart([(r["category"], r["entropy_bits"]) for r in ranked[:15]]))
        out.append(_action(diversity))

    appearance = section.get("appearance_diversity", {})
    out.append("<h3>Appearance diversity</h3>")
    if appearance.get("skipped"):
        out.append(_skipped(appearance))
    else:
        out.append(
            _table(
                ["category", "mean pairwise distance", "n sampled"],
                [
                    (r["category"], r["mean_pairwise_distance"], r["n_sampled"])
                    for r in appearance["per_category"]
                ],
            )
        )
        if appearance.get("validation"):
            v = appearance["validation"]
            out.append(
                f'<p class="note">Validation: same class {v["same_class_mean"]:.3f} '
                f'&lt; same supercategory {v["same_supercategory_mean"]:.3f} '
                f'&lt; unrelated {v["unrelated_mean"]:.3f} expected.</p>'
            )
        out.append(_action(appearance))
    return out


def _render_gender(section: dict) -> list[str]:
    out = ["<h2>Gender-based metrics</h2>"]
    context = section.get("context", {})
    out.append("<h3>Contextual representation</h3>")
    if context.get("skipped"):
        out.append(_skipped(context))
    else:
        cells = context["scene_cells"] or context["supercategory_cells"]
        out.append(
            _table(
                ["context", "female fraction", "male fraction", "adjusted p", "significant"],
                [
                    (c["name"], c["fraction_female"], c["fraction_male"],
                     c["adjusted_p"], c["significant"])
                    for c in cells
                ],
            )
        )
        out.append(_action(context))

    counts = section.get("counts", {})
    out.append("<h3>Instance counts by gender</h3>")
    if counts.get("skipped"):
        out.append(_skipped(counts))
    else:
        out.append(
            _table(
                ["category", "female rate", "male rate", "effect size", "significant"],
                [
                    (r["category"], r["rate_female"], r["rate_male"],
                     r["effect_size"], r["significant"])
                    for r in counts["per_category"]
                ],
            )
        )
        out.append(_action(counts))

    audit = section.get("audit", {})
    out.append("<h3>Gender label inference audit</h3>")
    if audit.get("skipped"):
        out.append(_skipped(audit))
    else:
        out.append(
            f'<p>Among <b>{audit["n_unidentifiable"]}</b> gendered images where no '
            f'person is identifiable, <b>{audit["fraction_male"]:.0%}</b> are labeled '
            "male.</p>"
        )
        if audit["scene_group_ratios"]:
            out.append(
                _bar_chart(
                    sorted(audit["scene_group_ratios"].items(), key=lambda t: -t[1]),
                    color="#9f7aea",
                )
            )
        out.append(_action(audit))

    for name, block_key in (("Distance analysis", "distance"), ("Appearance separability", "separability")):
        blocks = section.get(block_key) or {}
        out.append(f"<h3>{name}</h3>")
        if not blocks:
            out.append('<p class="note">No categories analyzed.</p>')
        for cat, block in blocks.items():
            out.append(f"<h4>{_esc(cat)}</h4>")
            if block.get("skipped"):
                out.append(_skipped(block))
            elif block_key == "distance":
                out.append(
                    f'<p>female median {block["medians"]["female"]:.3f}, '
                    f'male median {block["medians"]["male"]:.3f}, '
                    f'p = {block["test"]["p_value"]:.4g} ({block["test"]["test_name"]})</p>'
                )
                out.append(
                    f'<p class="note">Exemplars along the distance gradient — female: '
                    f'{_esc(", ".join(block["exemplars"]["female"]))}; male: '
                    f'{_esc(", ".join(block["exemplars"]["male"]))}</p>'
                )
            else:
                out.append(
                    f'<p>accuracy {block["accuracy"]:.3f}, shuffled baseline '
                    f'{block["shuffled_mean_accuracy"]:.3f}, ratio {block["ratio"]:.2f} '
                    f'(n per gender = {block["n_per_gender"]})</p>'
                )
    return out


def _render_geo(section: dict) -> list[str]:
    out = ["<h2>Geography-based metrics</h2>"]
    countries = section.get("countries", {})
    out.append("<h3>Country distribution</h3>")
    if countries.get("skipped"):
        out.append(_skipped(countries))
    else:
        rows = countries["per_country"]
        out.append(_bar_chart([(r["name"], r["count"]) for r in rows[:15]]))
        out.append(
            _table(
                ["country", "images", "per million inhabitants", "subregion"],
                [(r["name"], r["count"], r["per_million"], r["subregion"]) for r in rows],
            )
        )
        if countries["unmatched"]:
            out.append(
                f'<p class="note">Unmatched country codes: {_esc(countries["unmatched"])}</p>'
            )
        out.append(_action(countries))

    language = section.get("language", {})
    out.append("<h3>Local language analysis</h3>")
    if language.get("skipped"):
        out.append(_skipped(language))
    else:
        out.append(
            _table(
                ["country", "images", "non-local", "Wilson lower bound", "low support"],
                [
                    (r["country"], r["n_images"], r["n_nonlocal"],
                     r["wilson_lower_bound"], r["low_support"])
                    for r in language["nonlocal"]
                ],
            )
        )
        dom = language["visitor_dominance"]
        out.append(
            f'<p>Visitor-dominated countries: <b>{_esc(", ".join(dom["countries"]) or "none")}'
            f'</b> ({dom["fraction"]:.0%} of {dom["n_supported"]} supported countries).</p>'
        )
        out.append(_action(language))

    tags = section.get("tags", {})
    out.append("<h3>Tag representation</h3>")
    if tags.get("skipped"):
        out.append(_skipped(tags))
    else:
        ranked = tags["ranked"]
        out.append(
            _table(
                ["country", "tag", "ratio", "in-country count", "rest-of-world count"],
                [(r["country"], r["tag"], r["ratio"], r["in_count"], r["out_count"])
                 for r in ranked],
            )
        )
        out.append(_action(tags))

    blocks = section.get("subregion") or {}
    out.append("<h3>Subregion separability</h3>")
    if not blocks:
        out.append('<p class="note">No tags analyzed.</p>')
    for tag, block in blocks.items():
        out.append(f"<h4>{_esc(tag)}</h4>")
        if block.get("skipped"):
            out.append(_skipped(block))
        else:
            out.append(
                f'<p>overall accuracy {block["overall_accuracy"]:.3f} vs shuffled '
                f'{block["shuffled_mean_accuracy"]:.3f}</p>'
            )
            out.append(
                _bar_chart(
                    sorted(block["per_subregion_accuracy"].items(), key=lambda t: -t[1]),
                    color="#38a169",
                )
            )
    return out


def _render_insights(section: dict) -> list[str]:
    out = ["<h2>Actionable insights</h2>"]
    out.append(f'<p class="note">{_esc(section.get("assumption", ""))}</p>')
    recs = section.get("recommendations") or {}
    out.append("<h3>Ranked augmentation queries</h3>")
    if not recs:
        out.append('<p class="note">No recommendation targets selected.</p>')
    for target, block in recs.items():
        out.append(f"<h4>{_esc(target)}</h4>")
        if block.get("skipped"):
            out.append(_skipped(block))
            continue
        out.append(f'<p class="note">outcome: {_esc(block["outcome"])}</p>')
        out.append(
            _table(
                ["query", "probability", "support", "expansions"],
                [
                    (
                        f'{block["target"]} and {r["term"]}',
                        r["probability"],
                        r["support"],
                        "; ".join(r["expanded_queries"][:4]),
                    )
                    for r in block["recommendations"]
                ],
                limit=15,
            )
        )

    tradeoffs = section.get("tradeoff") or {}
    out.append("<h3>Diversity vs commonness</h3>")
    if not tradeoffs:
        out.append('<p class="note">No tradeoff targets selected.</p>')
    for target, block in tradeoffs.items():
        out.append(f"<h4>{_esc(target)}</h4>")
        if block.get("skipped"):
            out.append(_skipped(block))
            continue
        out.append(
            _scatter(
                [
                    (p["commonness"], p["diversity_gain"], p["scene_group"], p["efficient"])
                    for p in block["points"]
                ]
            )
        )
        best = [p for p in block["points"] if p["efficient"]]
        if best:
            out.append(
                f'<p>Most efficient augmentation context: <b>{_esc(best[0]["scene_group"])}'
                "</b> (highlighted).</p>"
            )
    return out


def render_html(report: dict) -> str:
    """Render the machine report as one static HTML document."""
    ds = report["dataset"]
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        "<title>Dataset audit report</title>",
        f"<style>{_CSS}</style></head><body>",
        "<h1>Dataset audit report</h1>",
        f'<p class="note">source: {_esc(ds["source"])} ({_esc(ds["format"])}) — '
        f'{ds["n_images"]} images, {ds["n_instances"]} instances — generated '
        f'{_esc(report["generated_at"])} — tool {_esc(report["tool"]["version"])}</p>',
    ]
    sections = report["sections"]
    for name, renderer in (
        ("objects", _render_objects),
        ("gender", _render_gender),
        ("geo", _render_geo),
        ("insights", _render_insights),
    ):
        block = sections.get(name, {})
        if block.get("skipped"):
            parts.append(f"<h2>{name.title()}</h2>")
            parts.append(_skipped(block))
        else:
            parts.extend(renderer(block))
    parts.append("</body></html>")
    return "\n".join(parts)
