"""Metrics and report aggregation for replicated benchmark runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidDataError

__all__ = [
    "FRAMEWORK_ORDER",
    "LEARNER_ORDER",
    "ReplicationReport",
    "GroupSummary",
    "AggregateReport",
    "test_mse",
    "variance_deviation",
    "aggregate_reports",
]

FRAMEWORK_ORDER = ("wear", "raykar", "arithmetic_mean", "gold_standard")
LEARNER_ORDER = ("linear", "forest", "tree", "lasso")


def test_mse(predictions, true_labels) -> float:
    """Mean squared prediction error against the true labels."""
    preds = np.asarray(predictions, dtype=float)
    labels = np.asarray(true_labels, dtype=float)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise InvalidDataError(
            f"predictions and labels must be equal-length vectors, got {preds.shape} and {labels.shape}"
        )
    return float(np.mean((preds - labels) ** 2))


def variance_deviation(estimated, true_variances) -> float:
    """Mean absolute deviation between estimated and reference expert variances."""
    est = np.asarray(estimated, dtype=float)
    ref = np.asarray(true_variances, dtype=float)
    if est.shape != ref.shape or est.ndim != 1:
        raise InvalidDataError(
            f"estimated and reference variances must be equal-length vectors, got {est.shape} and {ref.shape}"
        )
    return float(np.mean(np.abs(est - ref)))


@dataclass(frozen=True)
class ReplicationReport:
    """Outcome of one (framework, learner) fit on one replication."""

    framework: str
    learner: str
    replication_id: int
    test_mse: float
    estimated_variances: tuple[float, ...] | None = None
    weight_deviation: float | None = None

    def __post_init__(self):
        if self.framework not in FRAMEWORK_ORDER:
            raise InvalidDataError(f"unknown framework {self.framework!r}")
        if self.test_mse < 0 or not np.isfinite(self.test_mse):
            raise InvalidDataError(f"test MSE must be finite and non-negative, got {self.test_mse!r}")
        if self.weight_deviation is not None and (
            self.weight_deviation < 0 or not np.isfinite(self.weight_deviation)
        ):
            raise InvalidDataError(
                f"weight deviation must be finite and non-negative, got {self.weight_deviation!r}"
            )
        if self.estimated_variances is not None:
            object.__setattr__(
                self, "estimated_variances", tuple(float(v) for v in self.estimated_variances)
            )


@dataclass(frozen=True)
class GroupSummary:
    """Across-replication mean and standard error for one table cell."""

    framework: str
    learner: str
    replications: int
    mean_mse: float
    se_mse: float
    mean_weight_deviation: float | None
    single_replication: bool

    def as_dict(self) -> dict:
        return {
            "framework": self.framework,
            "learner": self.learner,
            "replications": self.replications,
            "mean_mse": self.mean_mse,
            "se_mse": self.se_mse,
            "mean_weight_deviation": self.mean_weight_deviation,
            "single_replication": self.single_replication,
        }


@dataclass(frozen=True)
class AggregateReport:
    """Ordered per-(framework, learner) summaries for a whole run."""

    groups: tuple[GroupSummary, ...]

    def group(self, framework: str, learner: str) -> GroupSummary:
        for summary in self.groups:
            if summary.framework == framework and summary.learner == learner:
                return summary
        raise KeyError(f"no summary for ({framework!r}, {learner!r})")


def _group_sort_key(framework: str, learner: str):
    fw = FRAMEWORK_ORDER.index(framework)
    kind = learner.split("(", 1)[0]
    kind_rank = LEARNER_ORDER.index(kind) if kind in LEARNER_ORDER else len(LEARNER_ORDER)
    return (fw, kind_rank, learner)


def aggregate_reports(reports) -> AggregateReport:
    """Collapse replication reports into ordered per-cell means and standard errors.

    Groups are ordered framework-major (weighted pipeline, joint-likelihood
    baseline, arithmetic mean, gold standard), then by learner family.  The
    result is invariant to the order reports are supplied in.  A single
    replication reports a standard error of zero, flagged as such.
    """
    reports = list(reports)
    if not reports:
        raise InvalidDataError("no replication reports to aggregate")
    grouped: dict[tuple[str, str], list[ReplicationReport]] = {}
    for report in reports:
        grouped.setdefault((report.framework, report.learner), []).append(report)

    replication_sets = {
        key: tuple(sorted(r.replication_id for r in items)) for key, items in grouped.items()
    }
    for key, ids in replication_sets.items():
        if len(set(ids)) != len(ids):
            raise InvalidDataError(f"duplicate replication ids for {key}: {ids}")
    distinct = set(replication_sets.values())
    if len(distinct) > 1:
        raise InvalidDataError(f"groups cover inconsistent replication sets: {sorted(distinct)}")

    summaries = []
    for key in sorted(grouped, key=lambda k: _group_sort_key(*k)):
        items = sorted(grouped[key], key=lambda r: r.replication_id)
        mses = np.array([r.test_mse for r in items])
        count = mses.shape[0]
        mean = float(mses.mean())
        se = 0.0 if count == 1 else float(mses.std(ddof=1) / np.sqrt(count))
        deviations = [r.weight_deviation for r in items if r.weight_deviation is not None]
        mean_dev = float(np.mean(deviations)) if len(deviations) == count else None
        summaries.append(
            GroupSummary(
                framework=key[0],
                learner=key[1],
                replications=count,
                mean_mse=mean,
                se_mse=se,
                mean_weight_deviation=mean_dev,
                single_replication=count == 1,
            )
        )
    return AggregateReport(groups=tuple(summaries))
