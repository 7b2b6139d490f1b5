"""
Node emulator against the ingestion service
===========================================

Run the HTTP service on an ephemeral port, push six windows from an
emulated rail-line node, then replay the exact same sequence numbers.
The replay is acknowledged but deduplicated, so the store ends up with
each record exactly once.
"""

from pathlib import Path

from vibsense import (
    DEFAULT_PROFILES,
    StructureClass,
    TelemetryServer,
    node_emulator,
    scan_store,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
store = out / "telemetry.jsonl"
store.unlink(missing_ok=True)

profile = DEFAULT_PROFILES[StructureClass.RAILLINE]

with TelemetryServer(store) as server:
    print(f"service on {server.url}, store {store}")

    sent = node_emulator(profile, server.url, interval_s=0.02, count=6, seed=9)
    print(f"first pass delivered {len(sent)} records")

    # same node, same sequence numbers: every post answers 409 duplicate
    replay = node_emulator(profile, server.url, interval_s=0.02, count=6, seed=9)
    print(f"replay acknowledged {len(replay)} records (deduplicated server-side)")

    for status in server.state.node_statuses():
        print(f"node {status.node_id}: {status.record_count} records, "
              f"last seen t={status.last_seen_ms}")

records = scan_store(store)
print(f"\nstore holds {len(records)} records (exactly once despite the replay)")
for r in records:
    print(f"  seq={r.seq} label={r.label.value} rms={r.features.rms:.2f}")
assert sorted(r.seq for r in records) == list(range(6))
