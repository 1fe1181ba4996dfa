"""Rate workbook metrics against threshold bands and recommend an outcome.

Each rated metric is oriented so that larger means worse; the one ratio
metric (formula duplication, ``1 - unique_formulas/formulas``) is already
stated in that orientation. Four ascending boundaries per metric partition
values into ratings 5 (best) down to 1 (worst): ``value <= b1`` rates 5,
``<= b2`` rates 4, and so on. Boundary values are inclusive.

Calibration derives boundaries from a corpus with nearest-rank percentiles
(default 70/80/90/98, no interpolation). Degenerate distributions collapse
the bands just above the constant so the constant itself rates 5.

The shipped :data:`DEFAULT_PROFILE` is a hand-picked starting point, not a
calibrated artifact; calibrate against a relevant corpus before relying on
ratings for real decisions.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

from .addresses import CellAddress
from .errors import ConfigError
from .metrics import MetricsReport

logger = logging.getLogger(__name__)

RATED_METRICS = (
    "max_formula_length",
    "magic_constants_per_formula",
    "max_fan_in",
    "inconsistent_cells",
    "endpoints",
    "cross_sheet_refs",
    "formula_duplication",
)


class Recommendation(Enum):
    APPROVE = "approve"
    RESTRUCTURE = "restructure"
    REDEVELOP = "redevelop"


@dataclass(frozen=True)
class RecommendationPolicy:
    """``redevelop_count`` ratings of 1 force redevelopment; otherwise any
    rating at or below ``restructure_floor`` forces restructuring."""

    redevelop_count: int = 2
    restructure_floor: int = 2


@dataclass(frozen=True)
class ThresholdProfile:
    bands: dict  # metric name -> (b1, b2, b3, b4), strictly ascending

    def __post_init__(self):
        for metric, bounds in self.bands.items():
            validate_bands(bounds, metric)

    def to_json(self) -> dict:
        return {"bands": {m: list(self.bands[m]) for m in RATED_METRICS if m in self.bands}}

    @classmethod
    def from_json(cls, obj: dict) -> "ThresholdProfile":
        bands = obj.get("bands")
        if not isinstance(bands, dict):
            raise ConfigError("profile document must carry a 'bands' object")
        return cls(bands={m: tuple(v) for m, v in bands.items()})


def validate_bands(bounds, metric: str = "<metric>") -> None:
    if len(bounds) != 4:
        raise ConfigError(f"{metric}: need exactly four boundaries, got {len(bounds)}")
    if not all(isinstance(b, (int, float)) for b in bounds):
        raise ConfigError(f"{metric}: boundaries must be numbers")
    if not all(bounds[i] < bounds[i + 1] for i in range(3)):
        raise ConfigError(f"{metric}: boundaries must be strictly ascending, got {bounds}")


DEFAULT_PROFILE = ThresholdProfile(
    bands={
        "max_formula_length": (5, 9, 15, 25),
        "magic_constants_per_formula": (0.0, 0.5, 1.0, 2.0),
        "max_fan_in": (4, 8, 16, 32),
        "inconsistent_cells": (0, 2, 5, 10),
        "endpoints": (5, 10, 20, 50),
        "cross_sheet_refs": (4, 10, 25, 60),
        "formula_duplication": (0.3, 0.5, 0.7, 0.9),
    }
)


def rate(value: float, bands) -> int:
    """5 (best) .. 1 (worst); boundary values rate into the better band."""
    validate_bands(bands)
    for rating, bound in zip((5, 4, 3, 2), bands):
        if value <= bound:
            return rating
    return 1


def metric_values(report: MetricsReport) -> dict:
    """Extract the rated metric values from a metrics report."""
    size = report.size
    per_formula_magic = (
        sum(n for _, n in report.magic_constants) / size.formulas if size.formulas else 0.0
    )
    duplication = 1.0 - size.unique_formulas / size.formulas if size.formulas else 0.0
    return {
        "max_formula_length": float(report.max_formula_length),
        "magic_constants_per_formula": per_formula_magic,
        "max_fan_in": float(report.coupling.max_fan_in),
        "inconsistent_cells": float(len(report.inconsistent_cells)),
        "endpoints": float(len(report.endpoints)),
        "cross_sheet_refs": float(report.coupling.cross_sheet_refs),
        "formula_duplication": duplication,
    }


def recommend(ratings: dict, policy: RecommendationPolicy | None = None) -> Recommendation:
    policy = policy or RecommendationPolicy()
    values = list(ratings.values())
    if sum(1 for r in values if r == 1) >= policy.redevelop_count:
        return Recommendation.REDEVELOP
    if any(r <= policy.restructure_floor for r in values):
        return Recommendation.RESTRUCTURE
    return Recommendation.APPROVE


@dataclass(frozen=True)
class Issue:
    metric: str
    description: str
    address: str | None = None  # qualified cell address
    area: str | None = None  # block or sheet reference when no single cell applies

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "description": self.description,
            "address": self.address,
            "area": self.area,
        }


@dataclass(frozen=True)
class EvaluationReport:
    snapshot: str
    ratings: dict  # metric -> 1..5
    issues: tuple
    areas_to_improve: tuple  # block/sheet references
    recommendation: Recommendation

    def to_json(self) -> dict:
        return {
            "snapshot": self.snapshot,
            "ratings": {m: self.ratings[m] for m in RATED_METRICS},
            "issues": [i.to_json() for i in self.issues],
            "areas_to_improve": list(self.areas_to_improve),
            "recommendation": self.recommendation.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvaluationReport":
        return cls(
            snapshot=obj["snapshot"],
            ratings=dict(obj["ratings"]),
            issues=tuple(
                Issue(
                    metric=i["metric"],
                    description=i["description"],
                    address=i.get("address"),
                    area=i.get("area"),
                )
                for i in obj.get("issues", ())
            ),
            areas_to_improve=tuple(obj.get("areas_to_improve", ())),
            recommendation=Recommendation(obj["recommendation"]),
        )


def _located_issues(report: MetricsReport, ratings: dict) -> list:
    issues: list[Issue] = []
    for address, length in report.long_formulas:
        issues.append(
            Issue(
                metric="max_formula_length",
                description=f"formula spans {length} nodes "
                f"(threshold {report.config.long_formula_threshold})",
                address=address.qualified(),
            )
        )
    for address, count in report.magic_constants:
        issues.append(
            Issue(
                metric="magic_constants_per_formula",
                description=f"{count} unexplained constant(s) embedded in the formula",
                address=address.qualified(),
            )
        )
    for address in sorted(report.inconsistent_cells, key=lambda a: a.sort_key()):
        issues.append(
            Issue(
                metric="inconsistent_cells",
                description="breaks the row/column homogeneity of its block",
                address=address.qualified(),
            )
        )
    if ratings["max_fan_in"] <= 3:
        for address in report.coupling.top_fan_in():
            issues.append(
                Issue(
                    metric="max_fan_in",
                    description=f"formula reads {report.coupling.max_fan_in} cells",
                    address=address.qualified(),
                )
            )
    if ratings["cross_sheet_refs"] <= 3:
        for address in report.coupling.cross_sheet_formulas:
            issues.append(
                Issue(
                    metric="cross_sheet_refs",
                    description="formula reaches across sheets",
                    address=address.qualified(),
                )
            )
    if ratings["endpoints"] <= 3:
        for address in sorted(report.endpoints, key=lambda a: a.sort_key()):
            issues.append(
                Issue(
                    metric="endpoints",
                    description="unreferenced output formula",
                    address=address.qualified(),
                )
            )
    if ratings["formula_duplication"] <= 3:
        sheets = sorted({b.sheet for b in report.blocks})
        for sheet in sheets:
            issues.append(
                Issue(
                    metric="formula_duplication",
                    description="few distinct formulas relative to formula count",
                    area=sheet,
                )
            )
    return issues


def evaluate_workbook(
    report: MetricsReport,
    profile: ThresholdProfile | None = None,
    policy: RecommendationPolicy | None = None,
) -> EvaluationReport:
    """Rate every metric, collect located issues, and recommend an outcome."""
    profile = profile or DEFAULT_PROFILE
    values = metric_values(report)
    missing = [m for m in RATED_METRICS if m not in profile.bands]
    if missing:
        raise ConfigError(f"profile missing bands for: {missing}")
    ratings = {m: rate(values[m], profile.bands[m]) for m in RATED_METRICS}
    issues = _located_issues(report, ratings)
    recommendation = recommend(ratings, policy)
    areas: tuple = ()
    if recommendation is Recommendation.RESTRUCTURE:
        issue_addresses = {i.address for i in issues if i.address}
        block_areas = [
            block.box_ref()
            for block in report.blocks
            if any(
                CellAddress(block.sheet, col, row).qualified() in issue_addresses
                for (col, row) in block.members
            )
        ]
        if block_areas:
            areas = tuple(sorted(block_areas))
        else:
            named = sorted({i.area for i in issues if i.area})
            areas = tuple(named) or tuple(sorted({b.sheet for b in report.blocks}))
    return EvaluationReport(
        snapshot=report.snapshot,
        ratings=ratings,
        issues=tuple(issues),
        areas_to_improve=areas,
        recommendation=recommendation,
    )


def nearest_rank(sorted_values: list, percentile: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    if not sorted_values:
        raise ConfigError("percentile of an empty sample")
    if not 0 < percentile <= 100:
        raise ConfigError(f"percentile must be in (0, 100], got {percentile}")
    rank = math.ceil(percentile / 100.0 * len(sorted_values))
    return sorted_values[max(rank, 1) - 1]


DEFAULT_PERCENTILES = (70.0, 80.0, 90.0, 98.0)


def calibrate(corpus: list, percentiles=DEFAULT_PERCENTILES) -> ThresholdProfile:
    """Fit per-metric bands to a corpus of MetricsReports.

    Raw percentile boundaries that fail to ascend strictly are stepped up to
    the next distinct corpus value (or +1 beyond the largest), so constant
    metrics rate 5 everywhere they were observed.
    """
    if not corpus:
        raise ConfigError("calibration corpus is empty")
    if len(percentiles) != 4 or not all(
        percentiles[i] < percentiles[i + 1] for i in range(3)
    ):
        raise ConfigError(f"need four ascending percentiles, got {percentiles}")
    if len(corpus) == 1:
        logger.warning("calibrating from a single report; bands will be degenerate")
    samples = [metric_values(r) if isinstance(r, MetricsReport) else dict(r) for r in corpus]
    bands: dict = {}
    for metric in RATED_METRICS:
        values = sorted(s[metric] for s in samples)
        raw = [nearest_rank(values, p) for p in percentiles]
        distinct = sorted(set(values))
        bounds: list[float] = []
        for candidate in raw:
            if not bounds or candidate > bounds[-1]:
                bounds.append(candidate)
                continue
            higher = [v for v in distinct if v > bounds[-1]]
            bounds.append(higher[0] if higher else bounds[-1] + 1.0)
        if len(set(raw)) < 4:
            logger.warning("metric %s: degenerate distribution, bands collapsed", metric)
        bands[metric] = tuple(bounds)
    return ThresholdProfile(bands=bands)
