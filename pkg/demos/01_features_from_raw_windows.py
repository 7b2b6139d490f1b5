"""
Raw windows to feature vectors
==============================

Generate one 8-second window per structure class, run the feature
extractor, and print the 12 summary statistics side by side.
"""

from pathlib import Path

from vibsense import (
    DEFAULT_PROFILES,
    FEATURE_COLUMNS,
    extract_features,
    line_chart,
    save_svg,
    synth_window,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# one window per class, fixed seeds so reruns agree
windows = {
    cls.value: synth_window(profile, seed=11)
    for cls, profile in DEFAULT_PROFILES.items()
}

vectors = {name: extract_features(w) for name, w in windows.items()}

header = f"{'feature':>16}" + "".join(f"{name:>20}" for name in vectors)
print(header)
for field in FEATURE_COLUMNS:
    row = f"{field:>16}"
    for fv in vectors.values():
        row += f"{getattr(fv, field):>20.3f}"
    print(row)

# crest factor is max over rms by construction
for name, fv in vectors.items():
    assert abs(fv.crest_factor - fv.max / fv.rms) < 1e-12

# the first second of each window, overlaid
series = [
    (name, list(range(200)), list(w.samples[:200])) for name, w in windows.items()
]
svg = line_chart(series, title="first second per class", x_label="sample", y_label="ADC counts")
save_svg(svg, out / "raw_windows.svg")
print(f"\nwrote {out / 'raw_windows.svg'}")
