"""Static HTML report for one prediction result document."""

from __future__ import annotations

import html
from pathlib import Path

_STYLE = """
body { font-family: sans-serif; margin: 2em; color: #222; }
table { border-collapse: collapse; width: 100%; }
th, td { border-bottom: 1px solid #ddd; padding: 4px 8px; text-align: left; vertical-align: top; }
th { background: #f3f3f3; }
td.num { text-align: right; font-variant-numeric: tabular-nums; }
code { font-size: 90%; }
.notice { padding: 1em; background: #fff6d5; border: 1px solid #e6d38a; }
"""


def _pct(p: float) -> str:
    return f"{100.0 * p:.1f}%"


def _num(x, fmt: str = ".3g") -> str:
    return "&ndash;" if x is None else format(x, fmt)


def _evidence(c: dict) -> str:
    aff = c.get("affinity") or {}
    rows = [
        ("Z-score", _num(c.get("z"), ".3f")),
        ("P-value", _num(c.get("p"))),
        ("E-value", _num(c.get("e"))),
        ("Direct cumulative hit", "yes" if c.get("direct_hit") else "no"),
        ("Max similarity", f"{_num(c.get('max_sim'), '.3f')} ({html.escape(str(c.get('max_sim_compound')))})"),
        ("Via association", "yes" if c.get("via_association") else "no"),
    ]
    if c.get("via_association"):
        rows.append(("Association parent", f"{html.escape(str(c.get('association_parent')))} "
                                           f"(E = {_num(c.get('parent_e'))})"))
    rows += [
        ("Query affinity", f"{_num(aff.get('query_affinity'), '.2f')} "
                           f"(pocket {html.escape(str(aff.get('best_pocket')))})"),
        ("Positive mean", _num(aff.get("positive_mean"), ".2f")),
        ("Background mean", _num(aff.get("background_mean"), ".2f")),
    ]
    ev = "".join(f"<tr><th>{k}</th><td>{v}</td></tr>" for k, v in rows)
    sims = "".join(
        f"<tr><td>{html.escape(a['compound_id'])}</td><td><code>{html.escape(a['smiles'])}</code></td>"
        f"<td class=\"num\">{a['tc']:.3f}</td></tr>"
        for a in c.get("similar_actives", [])
    )
    return (
        f"<details><summary>evidence</summary><table>{ev}</table>"
        f"<p>Most similar known actives</p><table><tr><th>compound</th><th>structure</th>"
        f"<th>Tc</th></tr>{sims}</table></details>"
    )


def render(result: dict) -> str:
    title = f"Target prediction for {html.escape(result.get('query', ''))}"
    parts = [
        "<!DOCTYPE html>",
        "<html lang=\"en\"><head><meta charset=\"utf-8\">",
        f"<title>{title}</title><style>{_STYLE}</style></head><body>",
        f"<h1>{title}</h1>",
        f"<p>Canonical structure: <code>{html.escape(result.get('canonical', ''))}</code><br>",
        f"Database manifest sha256: <code>{html.escape(result.get('manifest_sha256', ''))}</code></p>",
    ]
    cands = sorted(result.get("candidates", []), key=lambda c: c["rank"])
    if not cands:
        parts.append("<p class=\"notice\">No candidates: the query matched no target in the database.</p>")
    else:
        parts.append("<table><thead><tr><th>Rank</th><th>Target</th><th>Probability</th>"
                     "<th>Max Tc</th><th>Details</th></tr></thead><tbody>")
        for c in cands:
            parts.append(
                f"<tr class=\"candidate\"><td class=\"num\">{c['rank']}</td>"
                f"<td>{html.escape(c['target_id'])}</td>"
                f"<td class=\"num\">{_pct(c['probability'])}</td>"
                f"<td class=\"num\">{c['max_sim']:.3f}</td><td>{_evidence(c)}</td></tr>"
            )
        parts.append("</tbody></table>")
    parts.append("</body></html>\n")
    return "\n".join(parts)


def emit_report(result: dict, path) -> Path:
    path = Path(path)
    path.write_text(render(result), encoding="utf-8")
    return path
