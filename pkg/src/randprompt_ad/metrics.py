"""Threshold-free evaluation metrics with explicit tie handling.

AUROC follows the Mann-Whitney rank statistic with 0.5 credit for tied
pairs. AUPR is average precision (step interpolation) over descending
score thresholds with tied scores processed as one group; a trapezoidal
variant is available for comparison. F1-max maximizes F1 over the
decision rule ``score >= t`` for every distinct score value, returning
the smallest maximizing threshold. Reports aggregate per-category
values and mean/population-std statistics across seeded runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MetricError
from .scoring import ScoreVector

METRIC_NAMES = ("auroc", "aupr", "f1_max")

_METRIC_LABELS = {"auroc": "AUROC", "aupr": "AUPR", "f1_max": "F1-max"}


@dataclass(frozen=True)
class LabeledScores:
    """Scores aligned with binary labels (anomaly = 1 = positive class)."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if scores.ndim != 1 or labels.ndim != 1:
            raise ValueError("scores and labels must be 1-D")
        if scores.size != labels.size:
            raise ValueError(f"{scores.size} scores vs {labels.size} labels")
        if scores.size == 0:
            raise ValueError("empty inputs")
        if not np.isfinite(scores).all():
            raise ValueError("scores must be finite")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negative(self) -> int:
        return int(self.labels.size - self.labels.sum())


def _tie_groups(d: LabeledScores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct scores ascending plus per-group positive/negative counts."""
    unique, inverse = np.unique(d.scores, return_inverse=True)
    positives = np.bincount(inverse, weights=d.labels, minlength=unique.size)
    totals = np.bincount(inverse, minlength=unique.size)
    return unique, positives, totals - positives


def _require_both_classes(d: LabeledScores, metric: str) -> None:
    if d.n_positive == 0 or d.n_negative == 0:
        raise MetricError(
            f"{metric} undefined: needs both classes, got "
            f"{d.n_positive} positives / {d.n_negative} negatives"
        )


def auroc(d: LabeledScores) -> float:
    """Mann-Whitney AUROC: (#{pos>neg} + 0.5 * #{pos=neg}) / (P*N)."""
    _require_both_classes(d, "auroc")
    _, pos, neg = _tie_groups(d)
    neg_below = np.cumsum(neg) - neg
    credit = float((pos * (neg_below + 0.5 * neg)).sum())
    return credit / (d.n_positive * d.n_negative)


def aupr(d: LabeledScores, interpolation: str = "step") -> float:
    """Area under the precision-recall curve over descending thresholds.

    ``"step"`` is average precision, sum of (delta recall x precision);
    ``"trapezoid"`` averages adjacent precisions instead.
    """
    _require_both_classes(d, "aupr")
    _, pos, neg = _tie_groups(d)
    pos_desc = pos[::-1]
    neg_desc = neg[::-1]
    tp = np.cumsum(pos_desc)
    fp = np.cumsum(neg_desc)
    precision = tp / (tp + fp)
    total_pos = d.n_positive
    if interpolation == "step":
        return float((pos_desc * precision).sum() / total_pos)
    if interpolation == "trapezoid":
        recall = tp / total_pos
        r = np.concatenate(([0.0], recall))
        p = np.concatenate(([precision[0]], precision))
        return float(np.sum((r[1:] - r[:-1]) * (p[1:] + p[:-1]) / 2.0))
    raise ValueError(f"unknown interpolation {interpolation!r}")


def f1_max(d: LabeledScores) -> tuple[float, float]:
    """Maximum F1 over the rule ``score >= t`` at every distinct score.

    Returns ``(best F1, smallest maximizing threshold)``. The implicit
    predict-nothing threshold (+inf) has F1 = 0 and is dominated
    whenever a positive sample exists.
    """
    if d.n_positive == 0:
        raise MetricError("f1_max undefined without a positive sample")
    unique, pos, neg = _tie_groups(d)
    thresholds = unique[::-1]
    tp = np.cumsum(pos[::-1])
    fp = np.cumsum(neg[::-1])
    fn = d.n_positive - tp
    f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    best_rev = int(np.argmax(f1[::-1]))
    best = f1.size - 1 - best_rev
    return float(f1[best]), float(thresholds[best])


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"metric mean must be in [0, 1], got {self.mean}")
        if self.std < 0.0:
            raise ValueError(f"std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class EvalReport:
    """Per-category and aggregate metric statistics over one or more runs."""

    per_category: dict[str, dict[str, MetricStats]]
    aggregate: dict[str, MetricStats]
    n_runs: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        for category, stats in self.per_category.items():
            if set(stats) != set(METRIC_NAMES):
                raise ValueError(f"category {category!r} missing metrics")
        if set(self.aggregate) != set(METRIC_NAMES):
            raise ValueError("aggregate missing metrics")

    @property
    def categories(self) -> list[str]:
        return sorted(self.per_category)


def evaluate_scores(
    scores: ScoreVector, labels, categories: list[str], meta: dict | None = None
) -> EvalReport:
    """Single-run report: metrics per category plus their unweighted mean."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(scores) != labels.size or len(scores) != len(categories):
        raise ValueError(
            f"{len(scores)} scores vs {labels.size} labels vs "
            f"{len(categories)} categories"
        )
    category_names = sorted(set(categories))
    categories_arr = np.asarray(categories)
    per_category: dict[str, dict[str, MetricStats]] = {}
    for category in category_names:
        mask = categories_arr == category
        subset = LabeledScores(scores.values[mask], labels[mask])
        try:
            values = {
                "auroc": auroc(subset),
                "aupr": aupr(subset),
                "f1_max": f1_max(subset)[0],
            }
        except MetricError as exc:
            raise MetricError(f"category {category!r}: {exc}") from exc
        per_category[category] = {
            name: MetricStats(value, 0.0) for name, value in values.items()
        }
    aggregate = {
        name: MetricStats(
            float(np.mean([per_category[c][name].mean for c in category_names])), 0.0
        )
        for name in METRIC_NAMES
    }
    report_meta = dict(meta) if meta else {}
    report_meta.setdefault("score_kind", scores.kind)
    return EvalReport(per_category, aggregate, n_runs=1, meta=report_meta)


def seed_statistics(runs: list[EvalReport], meta: dict | None = None) -> EvalReport:
    """Mean and population standard deviation across single-run reports."""
    if not runs:
        raise ValueError("need at least one run")
    if any(run.n_runs != 1 for run in runs):
        raise ValueError("seed_statistics combines single-run reports only")
    categories = runs[0].categories
    for run in runs[1:]:
        if run.categories != categories:
            raise ValueError(
                f"category mismatch: {categories} vs {run.categories}"
            )
    per_category: dict[str, dict[str, MetricStats]] = {}
    for category in categories:
        per_category[category] = {}
        for name in METRIC_NAMES:
            values = np.array([run.per_category[category][name].mean for run in runs])
            per_category[category][name] = MetricStats(
                float(values.mean()), float(values.std())
            )
    aggregate = {}
    for name in METRIC_NAMES:
        values = np.array([run.aggregate[name].mean for run in runs])
        aggregate[name] = MetricStats(float(values.mean()), float(values.std()))
    report_meta = dict(meta) if meta is not None else dict(runs[0].meta)
    return EvalReport(per_category, aggregate, n_runs=len(runs), meta=report_meta)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "n_runs": report.n_runs,
        "meta": report.meta,
        "per_category": {
            category: {
                name: {"mean": stats.mean, "std": stats.std}
                for name, stats in metrics.items()
            }
            for category, metrics in report.per_category.items()
        },
        "aggregate": {
            name: {"mean": stats.mean, "std": stats.std}
            for name, stats in report.aggregate.items()
        },
    }


def report_to_json(report: EvalReport) -> str:
    """Deterministic JSON rendering (sorted keys, full float precision)."""
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def report_from_dict(doc: dict) -> EvalReport:
    per_category = {
        category: {
            name: MetricStats(float(v["mean"]), float(v["std"]))
            for name, v in metrics.items()
        }
        for category, metrics in doc["per_category"].items()
    }
    aggregate = {
        name: MetricStats(float(v["mean"]), float(v["std"]))
        for name, v in doc["aggregate"].items()
    }
    return EvalReport(
        per_category, aggregate, n_runs=int(doc["n_runs"]), meta=doc.get("meta", {})
    )


def report_from_json(text: str) -> EvalReport:
    return report_from_dict(json.loads(text))


def _format_cell(stats: MetricStats, with_std: bool) -> str:
    if with_std:
        return f"{100 * stats.mean:.1f}±{100 * stats.std:.1f}"
    return f"{100 * stats.mean:.1f}"


def format_report_table(report: EvalReport) -> str:
    """Aligned plain-text table: one row per category plus a mean row."""
    with_std = report.n_runs > 1
    header = ["Category"] + [_METRIC_LABELS[name] for name in METRIC_NAMES]
    rows = [
        [category]
        + [
            _format_cell(report.per_category[category][name], with_std)
            for name in METRIC_NAMES
        ]
        for category in report.categories
    ]
    rows.append(
        ["Mean"]
        + [_format_cell(report.aggregate[name], with_std) for name in METRIC_NAMES]
    )
    widths = [
        max(len(row[col]) for row in [header] + rows) for col in range(len(header))
    ]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(header)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        )
    return "\n".join(lines) + "\n"
