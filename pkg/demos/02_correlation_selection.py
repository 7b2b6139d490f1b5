"""
Choosing features by label correlation
======================================

Build a small synthetic corpus, correlate every feature against the
encoded class label, and keep the ones passing the default rule
(|r| >= 0.4 and p < 5e-5).
"""

from pathlib import Path

from vibsense import (
    LabeledDataset,
    correlation_csv,
    correlation_table,
    extract_features,
    select_features,
    simulate_corpus,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

windows = simulate_corpus(300, seed=4)
vectors = [extract_features(w) for w in windows]
labels = [w.source for w in windows]
ds = LabeledDataset.from_vectors(vectors, labels)

report = correlation_table(ds)
mask = select_features(report)

print(f"{'feature':>16} {'r':>12} {'p':>12}  kept")
for name, r, p, keep in zip(report.features, report.r, report.p, mask):
    print(f"{name:>16} {r:>12.4f} {p:>12.3e}  {'yes' if keep else ''}")

kept = [n for n, k in zip(report.features, mask) if k]
print(f"\nkept {len(kept)} of {len(report.features)}: {kept}")

(out / "correlation.csv").write_text(correlation_csv(report))
print(f"wrote {out / 'correlation.csv'}")
