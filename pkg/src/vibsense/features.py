"""The 12 time-domain window statistics and the DC-removed spectrum check.

Conventions (fixed here, used everywhere else):

* ``std_dev`` is the population form (divide by n), so that
  ``std**2 + mean**2 == rms**2`` holds exactly.
* ``mode`` is the most frequent integer ADC value, smallest value on ties.
* ``skewness`` is the biased Fisher-Pearson form ``m3 / m2**1.5`` and
  ``kurtosis`` the biased excess form ``m4 / m2**2 - 3``; both are 0 for
  zero-variance windows.
* a peak is a strict local maximum over both neighbors, endpoints excluded;
  ``avg_peak_value`` is the mean sample value at peak indices (0 if none).
* ``crest_factor`` is ``max / rms``; 0 for an all-zero window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .signalsim import RawWindow

# Canonical CSV column order for feature tables (label column last).
FEATURE_COLUMNS = [
    "mean",
    "mode",
    "median",
    "std_dev",
    "max",
    "min",
    "rms",
    "num_peaks",
    "avg_peak_value",
    "skewness",
    "kurtosis",
    "crest_factor",
]

CSV_HEADERS = [
    "Mean",
    "Mode",
    "Median",
    "Standard deviation",
    "Max",
    "Min",
    "RMS",
    "Number of peaks",
    "Average of peak values",
    "Skewness",
    "Kurtosis",
    "Creast factor",
]

LABEL_HEADER = "Type of structure"


@dataclass(frozen=True)
class FeatureVector:
    """The 12 time-domain statistics of one window."""

    mean: float
    median: float
    mode: float
    std_dev: float
    max: float
    min: float
    rms: float
    num_peaks: int
    avg_peak_value: float
    skewness: float
    kurtosis: float
    crest_factor: float

    def as_array(self) -> np.ndarray:
        """Values in :data:`FEATURE_COLUMNS` order."""
        return np.array([getattr(self, name) for name in FEATURE_COLUMNS], dtype=float)

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        kwargs = dict(zip(FEATURE_COLUMNS, map(float, values)))
        kwargs["num_peaks"] = int(round(kwargs["num_peaks"]))
        return cls(**kwargs)


@dataclass(frozen=True)
class SpectrumReport:
    """DC-removed DFT magnitudes with a dominant-bin flatness summary."""

    bin_magnitudes: np.ndarray  # bins 1..n//2
    dominant_bin: int
    dominance_ratio: float


#: dominance_ratio at or above this declares an obvious frequency component.
FLATNESS_THRESHOLD = 10.0


def find_peaks(samples) -> list[int]:
    """Indices of strict local maxima (greater than both neighbors).

    Endpoints are never peaks; inputs shorter than 3 yield no peaks.
    """
    x = np.asarray(samples)
    if len(x) < 3:
        return []
    interior = x[1:-1]
    mask = (interior > x[:-2]) & (interior > x[2:])
    return list(np.flatnonzero(mask) + 1)


def extract_features(window: RawWindow) -> FeatureVector:
    """Compute the 12 statistics of a window.

    Raises
    ------
    InsufficientDataError
        If the window holds fewer than 4 samples.
    """
    x = np.asarray(window.samples, dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"window has {x.size} samples, need >= 4")

    mean = float(np.mean(x))
    m2 = float(np.mean((x - mean) ** 2))
    std = float(np.sqrt(m2))
    x_max = float(np.max(x))
    x_min = float(np.min(x))
    rms = float(np.sqrt(np.mean(x * x)))

    peaks = find_peaks(x)
    avg_peak = float(np.mean(x[peaks])) if peaks else 0.0

    if m2 > 0:
        centered = x - mean
        skew = float(np.mean(centered**3)) / m2**1.5
        kurt = float(np.mean(centered**4)) / m2**2 - 3.0
    else:
        skew = 0.0
        kurt = 0.0

    return FeatureVector(
        mean=mean,
        median=float(np.median(x)),
        mode=_integer_mode(window.samples),
        std_dev=std,
        max=x_max,
        min=x_min,
        rms=rms,
        num_peaks=len(peaks),
        avg_peak_value=avg_peak,
        skewness=skew,
        kurtosis=kurt,
        crest_factor=x_max / rms if rms > 0 else 0.0,
    )


def _integer_mode(samples) -> float:
    values, counts = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    return float(values[np.argmax(counts)])  # np.unique sorts, argmax keeps smallest


def spectral_profile(window: RawWindow) -> SpectrumReport:
    """DC-removed DFT magnitudes and the dominant-bin-to-median ratio.

    A broadband window keeps the ratio near 1; a planted tone pushes it far
    above :data:`FLATNESS_THRESHOLD`. A constant window reports ratio 1.
    """
    x = np.asarray(window.samples, dtype=float)
    if x.size < 8:
        raise InsufficientDataError(f"window has {x.size} samples, need >= 8")
    mags = np.abs(np.fft.rfft(x - np.mean(x)))[1:]  # bins 1..n//2
    dominant = int(np.argmax(mags)) + 1
    peak = float(mags[dominant - 1])
    med = float(np.median(mags))
    if peak == 0.0:
        ratio = 1.0
    elif med == 0.0:
        ratio = float("inf")
    else:
        ratio = peak / med
    return SpectrumReport(bin_magnitudes=mags, dominant_bin=dominant, dominance_ratio=ratio)


def write_feature_csv(path, vectors, labels=None) -> None:
    """Feature table in dataset column order, label column last.

    ``labels`` is an optional per-row list of class-name strings; omitted
    rows (or a missing list) leave the label cell empty.
    """
    vectors = list(vectors)
    if labels is not None and len(labels) != len(vectors):
        raise ValueError("labels must match vectors in length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADERS + [LABEL_HEADER])
        for i, fv in enumerate(vectors):
            cells = [repr(getattr(fv, name)) for name in FEATURE_COLUMNS]
            label = labels[i] if labels is not None else None
            writer.writerow(cells + [label if label is not None else ""])


def read_feature_csv(path):
    """Inverse of :func:`write_feature_csv` -> (vectors, labels).

    Labels come back as strings; empty cells as None. Raises ValueError on a
    header that does not match the canonical column order.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADERS + [LABEL_HEADER]:
            raise ValueError(f"unexpected header in {path}")
        vectors, labels = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(CSV_HEADERS) + 1:
                raise ValueError(f"row with {len(row)} cells in {path}")
            vectors.append(FeatureVector.from_array([float(c) for c in row[:-1]]))
            labels.append(row[-1] or None)
    return vectors, labels
