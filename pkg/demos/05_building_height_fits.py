"""
Mean amplitude versus floor height
==================================

For each published building law, simulate noisy windows on floors 0..9,
average per floor, fit a line, and report the slope-sign verdict.
Vertical (floor surface) slopes come out positive, horizontal (pillar
surface) slopes negative.
"""

from pathlib import Path

from vibsense import (
    REFERENCE_LAWS,
    building_series,
    floor_profile,
    height_analysis,
    save_svg,
    scatter_chart,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

N_FLOORS = 10

for name, law in sorted(REFERENCE_LAWS.items()):
    windows = []
    for floor in range(N_FLOORS):
        for rep in range(3):
            windows.append(
                building_series(law, floor, noise_sd=1.5, seed=floor * 17 + rep)
            )
    observations = floor_profile(windows, law.orientation)
    expected = "positive" if law.slope > 0 else "negative"
    analysis = height_analysis(observations, expected_sign=expected)

    print(f"{name:>22}: {analysis.fit.equation()}")
    print(f"{'':>22}  true slope {law.slope:+.2f}, verdict {analysis.verdict}"
          f"{' (MISMATCH)' if analysis.sign_mismatch else ''}")

    svg = scatter_chart(
        [o.floor_index for o in observations],
        [o.mean_amplitude for o in observations],
        line=(analysis.fit.slope, analysis.fit.intercept),
        title=name, x_label="floor", y_label="mean amplitude (ADC)",
    )
    save_svg(svg, out / f"{name}.svg")

print(f"\nwrote 4 fit charts into {out}")
