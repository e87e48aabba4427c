"""Deterministic artifact rendering: ICC plots, bump charts and p-value
heatmaps as standalone SVG, plus the consolidated machine-readable report.

Rendering is a pure function of its inputs; equal inputs give byte-identical
documents.  Colors follow the ICC convention: green for positive
discrimination, red for negative, thick black for the pointwise average.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .irt import IccCurve, ReliabilitySummary
from .metrics import MetricReport
from .stats import PosthocMatrix

WIDTH = 800
HEIGHT = 600
GREEN = "#2ca02c"
RED = "#d62728"

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class ReportError(ValueError):
    pass


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _svg_open(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" font-size="16" text-anchor="middle" '
        f'font-family="sans-serif">{_esc(title)}</text>',
    ]


def _polyline(points, color, width=1.0, opacity=1.0) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
            f'stroke-opacity="{opacity}" points="{pts}"/>')


def _text(x, y, s, size=12, anchor="start", color="#000000") -> str:
    return (f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" text-anchor="{anchor}" '
            f'fill="{color}" font-family="sans-serif">{_esc(s)}</text>')


def render_icc_svg(curves, summary: ReliabilitySummary, title: str = "Item characteristic curves") -> str:
    """Green/red per-item curves, thick black pointwise average, and the
    mean difficulty/discrimination/guessing annotation block."""
    if not curves:
        raise ReportError("empty curve list")
    grid = curves[0].theta_grid
    for c in curves:
        if len(c.theta_grid) != len(grid) or not np.allclose(c.theta_grid, grid):
            raise ReportError("curves must share a common theta grid")
    left, right, top, bottom = 70, 30, 50, 60
    x0, x1 = float(grid[0]), float(grid[-1])

    def px(theta):
        return left + (theta - x0) / (x1 - x0) * (WIDTH - left - right)

    def py(p):
        return HEIGHT - bottom - p * (HEIGHT - top - bottom)

    parts = _svg_open(title)
    # axes
    parts.append(_polyline([(left, top), (left, HEIGHT - bottom),
                            (WIDTH - right, HEIGHT - bottom)], "#000000", 1.0))
    for t in np.linspace(x0, x1, 9):
        parts.append(_text(px(t), HEIGHT - bottom + 18, _fmt(t), 10, "middle"))
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(_text(left - 8, py(p) + 4, _fmt(p), 10, "end"))
    parts.append(_text(WIDTH / 2, HEIGHT - 16, "ability (theta)", 12, "middle"))
    parts.append(_text(16, HEIGHT / 2, "p(correct)", 12, "middle"))
    for c in curves:
        color = RED if c.negative_discrimination else GREEN
        parts.append(_polyline([(px(t), py(p)) for t, p in zip(grid, c.p)],
                               color, 0.6, opacity=0.5))
    avg = np.mean([c.p for c in curves], axis=0)  # pointwise average
    parts.append(_polyline([(px(t), py(p)) for t, p in zip(grid, avg)],
                           "#000000", 3.0))
    annotation = (f"difficulty: {_fmt(summary.mean_difficulty)} "
                  f"discrimination: {_fmt(summary.mean_discrimination)} "
                  f"guessing: {_fmt(summary.mean_guessing)}")
    parts.append(_text(left + 10, top + 16, annotation, 12))
    parts.append("</svg>")
    return "\n".join(parts)


def render_bump_svg(table, record=None, title: str = "") -> str:
    """Rank positions per feature across perturbation levels.

    ``table`` is the long-form (fraction, feature, position) list produced
    by bump_chart_data; ``record`` optionally supplies per-level Spearman
    annotations and the correlation sum for the title.
    """
    fractions = sorted({row[0] for row in table})
    features = sorted({row[1] for row in table})
    if not fractions:
        raise ReportError("empty bump table")
    pos = {(f, feat): p for f, feat, p in table}
    n_pos = max(p for _, _, p in table)
    left, right, top, bottom = 150, 40, 60, 70

    def px(i):
        if len(fractions) == 1:
            return left + (WIDTH - left - right) / 2
        return left + i / (len(fractions) - 1) * (WIDTH - left - right)

    def py(p):
        if n_pos == 1:
            return top + (HEIGHT - top - bottom) / 2
        return top + (p - 1) / (n_pos - 1) * (HEIGHT - top - bottom)

    full_title = title
    if record is not None:
        full_title = (title + " " if title else "") + f"sum = {record.sum:.2f}"
    parts = _svg_open(full_title)
    for i, f in enumerate(fractions):
        parts.append(_text(px(i), HEIGHT - bottom + 24, f"{f * 100:g}%", 11, "middle"))
        if record is not None and f in record.rho_by_fraction:
            parts.append(_text(px(i), HEIGHT - bottom + 42,
                               f"rho={record.rho_by_fraction[f]:.2f}", 10, "middle"))
    for ci, feat in enumerate(features):
        color = _PALETTE[ci % len(_PALETTE)]
        pts = [(px(i), py(pos[(f, feat)])) for i, f in enumerate(fractions)
               if (f, feat) in pos]
        parts.append(_polyline(pts, color, 2.0))
        first_f = fractions[0]
        if (first_f, feat) in pos:
            parts.append(_text(left - 8, py(pos[(first_f, feat)]) + 4, feat, 10,
                               "end", color))
    parts.append(_text(WIDTH / 2, HEIGHT - 12, "perturbation level", 12, "middle"))
    parts.append("</svg>")
    return "\n".join(parts)


def render_heatmap_svg(m: PosthocMatrix, title: str = "Pairwise post-hoc p-values") -> str:
    """k x k colored grid, darker cells for smaller p, values to 2 decimals."""
    k = len(m.labels)
    left, right, top, bottom = 150, 30, 140, 30
    cell_w = (WIDTH - left - right) / k
    cell_h = (HEIGHT - top - bottom) / k
    parts = _svg_open(title)
    for i in range(k):
        for j in range(k):
            p = float(m.p[i, j])
            shade = int(round(40 + 215 * p))
            x = left + j * cell_w
            y = top + i * cell_h
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell_w:.2f}" '
                         f'height="{cell_h:.2f}" fill="rgb({shade},{shade},{shade})" '
                         f'stroke="#ffffff" stroke-width="0.5"/>')
            text_color = "#ffffff" if p < 0.4 else "#000000"
            parts.append(_text(x + cell_w / 2, y + cell_h / 2 + 3, _fmt(p),
                               9, "middle", text_color))
    for i, label in enumerate(m.labels):
        parts.append(_text(left - 6, top + (i + 0.5) * cell_h + 3, label, 9, "end"))
        x = left + (i + 0.5) * cell_w
        parts.append(f'<text x="{x:.2f}" y="{top - 6:.2f}" font-size="9" '
                     f'text-anchor="start" font-family="sans-serif" '
                     f'transform="rotate(-60 {x:.2f} {top - 6:.2f})">'
                     f'{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


@dataclass
class RunReport:
    """Everything one pipeline run produced, ready to serialize."""

    dataset_summary: dict
    config: dict
    models: dict  # kind -> {hyperparams, cv_score, seed}
    metrics: dict  # kind -> {level_key -> MetricReport}
    reliability: dict  # kind -> {level_key -> ReliabilitySummary}
    ranks: list  # RelevanceRank
    stability: list  # StabilityRecord
    friedman: dict | None
    nemenyi: PosthocMatrix | None
    icc: dict = field(default_factory=dict)  # "kind:level" -> list of IccCurve


def level_key(fraction: float) -> str:
    return str(int(round(fraction * 100)))


def _rank_dict(rank) -> dict:
    d = {
        "explainer": rank.explainer,
        "model_kind": rank.model_kind,
        "perturbation_fraction": rank.perturbation_fraction,
        "ordered_features": list(rank.ordered_features),
        "scores": list(rank.scores),
    }
    if rank.score_std is not None:
        d["score_std"] = list(rank.score_std)
    return d


def _reliability_dict(s: ReliabilitySummary) -> dict:
    return {
        "mean_difficulty": s.mean_difficulty,
        "mean_discrimination": s.mean_discrimination,
        "mean_guessing": s.mean_guessing,
        "mean_ability": s.mean_ability,
        "negative_item_count": s.negative_item_count,
    }


def report_to_dict(r: RunReport) -> dict:
    return {
        "dataset": r.dataset_summary,
        "config": r.config,
        "models": r.models,
        "metrics": {k: {lvl: m.as_dict() for lvl, m in levels.items()}
                    for k, levels in r.metrics.items()},
        "reliability": {k: {lvl: _reliability_dict(s) for lvl, s in levels.items()}
                        for k, levels in r.reliability.items()},
        "ranks": [_rank_dict(rk) for rk in r.ranks],
        "stability": [
            {"explainer": rec.explainer, "model_kind": rec.model_kind,
             "rho_by_fraction": {level_key(f): v for f, v in rec.rho_by_fraction.items()},
             "sum": rec.sum}
            for rec in r.stability
        ],
        "friedman": r.friedman,
        "nemenyi": (None if r.nemenyi is None else
                    {"labels": list(r.nemenyi.labels), "p": r.nemenyi.p.tolist()}),
    }


def _validate(r: RunReport):
    kinds = r.config.get("models", [])
    levels = [level_key(f) for f in r.config.get("fractions", [])]
    explainers = r.config.get("explainers", [])
    for kind in kinds:
        for lvl in levels:
            if kind not in r.metrics or lvl not in r.metrics[kind]:
                raise ReportError(f"missing metric report slot: {kind}:{lvl}")
            if "exirt" in explainers:
                if kind not in r.reliability or lvl not in r.reliability[kind]:
                    raise ReportError(f"missing reliability slot: {kind}:{lvl}")
    have = {(rk.explainer, rk.model_kind, level_key(rk.perturbation_fraction))
            for rk in r.ranks}
    for e in explainers:
        for kind in kinds:
            for lvl in levels:
                if (e, kind, lvl) not in have:
                    raise ReportError(f"missing rank slot: {e}:{kind}:{lvl}")


def write_report(r: RunReport, out_dir) -> None:
    """Validate the report, then emit report.json, the CSV side tables and
    the SVG set.  Byte-identical across runs with equal config and seeds."""
    _validate(r)
    os.makedirs(out_dir, exist_ok=True)

    def path(name):
        return os.path.join(out_dir, name)

    with open(path("report.json"), "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(r), fh, sort_keys=True, indent=2)
        fh.write("\n")

    with open(path("metrics.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "level", "accuracy", "precision", "recall",
                         "f1", "roc_auc"])
        for kind in sorted(r.metrics):
            for lvl in sorted(r.metrics[kind], key=int):
                m = r.metrics[kind][lvl]
                writer.writerow([kind, lvl, repr(m.accuracy), repr(m.precision),
                                 repr(m.recall), repr(m.f1), repr(m.roc_auc)])

    with open(path("ranks.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["explainer", "model", "perturbation", "position",
                         "feature", "score"])
        for rk in sorted(r.ranks, key=lambda k: (k.explainer, k.model_kind,
                                                 k.perturbation_fraction)):
            for pos, (feat, score) in enumerate(zip(rk.ordered_features, rk.scores), 1):
                writer.writerow([rk.explainer, rk.model_kind,
                                 level_key(rk.perturbation_fraction), pos, feat,
                                 repr(score)])

    with open(path("stability.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["explainer", "model", "fraction", "rho", "sum"])
        for rec in sorted(r.stability, key=lambda s: (s.explainer, s.model_kind)):
            for f in sorted(rec.rho_by_fraction):
                writer.writerow([rec.explainer, rec.model_kind, level_key(f),
                                 repr(rec.rho_by_fraction[f]), repr(rec.sum)])

    if r.nemenyi is not None:
        with open(path("nemenyi.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + list(r.nemenyi.labels))
            for label, row in zip(r.nemenyi.labels, r.nemenyi.p):
                writer.writerow([label] + [repr(float(v)) for v in row])
        with open(path("heatmap.svg"), "w", encoding="utf-8") as fh:
            fh.write(render_heatmap_svg(r.nemenyi))

    for key in sorted(r.icc):
        kind, lvl = key.split(":")
        curves = r.icc[key]
        summary = r.reliability[kind][lvl]
        with open(path(f"icc_{kind}_{lvl}.svg"), "w", encoding="utf-8") as fh:
            fh.write(render_icc_svg(curves, summary, title=f"{kind} at {lvl}% perturbation"))

    from .stability import bump_chart_data  # local import avoids a cycle
    by_pair = {}
    for rk in r.ranks:
        by_pair.setdefault((rk.explainer, rk.model_kind), []).append(rk)
    records = {(rec.explainer, rec.model_kind): rec for rec in r.stability}
    for (expl, kind) in sorted(by_pair):
        table = bump_chart_data(by_pair[(expl, kind)])
        rec = records.get((expl, kind))
        with open(path(f"bump_{expl}_{kind}.svg"), "w", encoding="utf-8") as fh:
            fh.write(render_bump_svg(table, rec, title=f"{expl} / {kind}"))
