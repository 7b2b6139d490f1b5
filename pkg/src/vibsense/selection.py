"""Pearson correlation of features against the class label, with p-values.

The label enters as an integer encoding in canonical class order (building 0,
flyover 1, railline 2, steel overbridge 3, concrete overbridge 4). Selection
keeps features with |r| >= r_min and p < p_max; the defaults (0.4, 5e-5) pick
out mean, standard deviation, max, RMS and average-of-peaks on the reference
correlation table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .baselines import LabeledDataset
from .errors import UndefinedCorrelationError
from .features import FEATURE_COLUMNS

CORRELATION_CSV_HEADERS = ["Features", "Correlation value", "Prediction value"]


@dataclass(frozen=True)
class SelectionRule:
    r_min: float = 0.4
    p_max: float = 0.00005

    def __post_init__(self):
        if not 0 <= self.r_min <= 1:
            raise ValueError("r_min must lie in [0, 1]")
        if not 0 < self.p_max < 1:
            raise ValueError("p_max must lie in (0, 1)")


@dataclass
class CorrelationReport:
    features: list[str]
    r: np.ndarray
    p: np.ndarray
    n: int


def pearson_r(x, y) -> float:
    """Pearson correlation via population moments; errors on constant input."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length 1-D sequences")
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt(np.mean(xd**2))
    sy = np.sqrt(np.mean(yd**2))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    r = float(np.mean(xd * yd) / (sx * sy))
    return min(1.0, max(-1.0, r))


def p_value(r: float, n: int) -> float:
    """Two-sided p of observing |r| under the null, exact t distribution.

    Uses t = r * sqrt((n - 2) / (1 - r^2)) with n - 2 degrees of freedom;
    the tail mass comes from the regularized incomplete beta function, so
    extreme thresholds (5e-5 at n ~ 1000) stay accurate.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if not -1 <= r <= 1:
        raise ValueError("r must lie in [-1, 1]")
    if abs(r) == 1.0:
        return 0.0
    df = n - 2
    t2 = r * r * df / (1.0 - r * r)
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


def correlation_table(
    ds: LabeledDataset,
    encoding: dict | None = None,
    feature_names: list[str] | None = None,
) -> CorrelationReport:
    """Per-feature r and p against the encoded class label."""
    if len(ds) < 3:
        raise ValueError("need at least 3 samples")
    if encoding is None:
        encoded = ds.labels.astype(float)
    else:
        encoded = np.array([encoding[ds.classes[i]] for i in ds.labels], dtype=float)
    if np.unique(encoded).size < 2:
        raise UndefinedCorrelationError("correlation undefined for a single-class dataset")

    names = feature_names or FEATURE_COLUMNS[: ds.rows.shape[1]]
    r = np.empty(ds.rows.shape[1])
    p = np.empty(ds.rows.shape[1])
    for j in range(ds.rows.shape[1]):
        r[j] = pearson_r(ds.rows[:, j], encoded)
        p[j] = p_value(r[j], len(ds))
    return CorrelationReport(features=list(names), r=r, p=p, n=len(ds))


def select_features(report: CorrelationReport, rule: SelectionRule = SelectionRule()) -> np.ndarray:
    """Boolean mask of features whose |r| >= r_min and p < p_max."""
    return (np.abs(report.r) >= rule.r_min) & (report.p < rule.p_max)


def correlation_csv(report: CorrelationReport) -> str:
    lines = [",".join(CORRELATION_CSV_HEADERS)]
    for name, r, p in zip(report.features, report.r, report.p):
        lines.append(f"{name},{float(r)!r},{float(p)!r}")
    return "\n".join(lines) + "\n"


def read_correlation_csv(text: str) -> CorrelationReport:
    """Parse a Features/Correlation/Prediction CSV back into a report."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    rows = [ln.split(",") for ln in lines[1:]]
    return CorrelationReport(
        features=[row[0] for row in rows],
        r=np.array([float(row[1]) for row in rows]),
        p=np.array([float(row[2]) for row in rows]),
        n=0,
    )
