"""Sensor-to-server path: wire format, ingestion service, store, emulator.

Records travel as canonical compact JSON with a fixed key order, one object
per line in the append-only store. The service acknowledges a POST with 201
only after the line is flushed and fsynced, so an acknowledged record
survives a process kill. Duplicate suppression is per (node_id, seq): the
store keeps per-node seq strictly increasing, and a re-POST (or an
out-of-order stale seq) is answered with 409 so a retrying sender can treat
it as already delivered.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
import warnings
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import DeliveryError, SchemaError, StoreError
from .features import FeatureVector, extract_features
from .signalsim import ClassProfile, FrontEndConfig, StructureClass, synth_window

# wire order follows the dataset column order; "creast_factor" is the
# (sic) spelling used throughout the record schema
WIRE_FEATURE_KEYS = (
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
    "creast_factor",
)

_TOP_LEVEL_KEYS = ("node_id", "timestamp_ms", "seq", "features", "label", "site")


@dataclass(frozen=True)
class TelemetryRecord:
    node_id: str
    timestamp_ms: int
    seq: int
    features: FeatureVector
    label: StructureClass | None = None
    site: str | None = None

    def __post_init__(self):
        if not isinstance(self.node_id, str) or not self.node_id:
            raise SchemaError("node_id", "must be a non-empty string")
        if not _is_int(self.timestamp_ms) or self.timestamp_ms <= 0:
            raise SchemaError("timestamp_ms", "must be a positive integer")
        if not _is_int(self.seq) or self.seq < 0:
            raise SchemaError("seq", "must be a non-negative integer")
        if not isinstance(self.features, FeatureVector):
            raise SchemaError("features", "must be a FeatureVector")
        for key, value in zip(WIRE_FEATURE_KEYS, self.features.as_array()):
            if not math.isfinite(value):
                raise SchemaError(f"features.{key}", "must be finite")


@dataclass(frozen=True)
class NodeStatus:
    node_id: str
    last_seen_ms: int
    record_count: int


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def record_wire_dict(record: TelemetryRecord) -> dict:
    """Plain dict in canonical key order (JSON-ready)."""
    fv = record.features
    features = {
        "mean": fv.mean,
        "mode": fv.mode,
        "median": fv.median,
        "std_dev": fv.std_dev,
        "max": fv.max,
        "min": fv.min,
        "rms": fv.rms,
        "num_peaks": fv.num_peaks,
        "avg_peak_value": fv.avg_peak_value,
        "skewness": fv.skewness,
        "kurtosis": fv.kurtosis,
        "creast_factor": fv.crest_factor,
    }
    return {
        "node_id": record.node_id,
        "timestamp_ms": record.timestamp_ms,
        "seq": record.seq,
        "features": features,
        "label": record.label.value if record.label is not None else None,
        "site": record.site,
    }


def encode_record(record: TelemetryRecord) -> bytes:
    """Canonical compact JSON, fixed key order, UTF-8."""
    return json.dumps(record_wire_dict(record), separators=(",", ":")).encode("utf-8")


def decode_record(raw: bytes | str) -> TelemetryRecord:
    """Strict inverse of :func:`encode_record`.

    Raises
    ------
    SchemaError
        Naming the offending field: missing or unexpected key, wrong type,
        non-finite number, unknown label, or undecodable bytes.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("body", f"not valid UTF-8: {exc}") from exc
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError("body", f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("body", "top level must be an object")

    for key in ("node_id", "timestamp_ms", "seq", "features"):
        if key not in obj:
            raise SchemaError(key, "missing")
    for key in obj:
        if key not in _TOP_LEVEL_KEYS:
            raise SchemaError(key, "unexpected field")

    features = obj["features"]
    if not isinstance(features, dict):
        raise SchemaError("features", "must be an object")
    for key in WIRE_FEATURE_KEYS:
        if key not in features:
            raise SchemaError(f"features.{key}", "missing")
        value = features[key]
        if not _is_number(value):
            raise SchemaError(f"features.{key}", "must be a number")
        if not math.isfinite(value):
            raise SchemaError(f"features.{key}", "must be finite")
    for key in features:
        if key not in WIRE_FEATURE_KEYS:
            raise SchemaError(f"features.{key}", "unexpected field")

    label = obj.get("label")
    if label is not None:
        if not isinstance(label, str):
            raise SchemaError("label", "must be a string or null")
        try:
            label = StructureClass(label)
        except ValueError:
            raise SchemaError("label", f"unknown label {label!r}") from None
    site = obj.get("site")
    if site is not None and not isinstance(site, str):
        raise SchemaError("site", "must be a string or null")

    fv = FeatureVector(
        mean=features["mean"],
        median=features["median"],
        mode=features["mode"],
        std_dev=features["std_dev"],
        max=features["max"],
        min=features["min"],
        rms=features["rms"],
        num_peaks=features["num_peaks"],
        avg_peak_value=features["avg_peak_value"],
        skewness=features["skewness"],
        kurtosis=features["kurtosis"],
        crest_factor=features["creast_factor"],
    )
    return TelemetryRecord(
        node_id=obj["node_id"],
        timestamp_ms=obj["timestamp_ms"],
        seq=obj["seq"],
        features=fv,
        label=label,
        site=site,
    )


def append_store(store_path, record: TelemetryRecord) -> None:
    """Durably append one record (write, flush, fsync)."""
    line = encode_record(record) + b"\n"
    try:
        with open(store_path, "ab") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise StoreError(f"append to {store_path} failed: {exc}") from exc


def scan_store(store_path) -> list[TelemetryRecord]:
    """All records in append order.

    A torn trailing line (crash artifact: no newline, or truncated JSON at
    end of file) is skipped with a warning. A malformed line anywhere else
    means real corruption and raises :class:`StoreError`.
    """
    with open(store_path, "rb") as fh:
        data = fh.read()
    records = []
    lines = data.split(b"\n")
    tail_torn = bool(lines and lines[-1])  # no trailing newline
    if not tail_torn:
        lines = lines[:-1]  # drop the empty piece after the final newline
    for lineno, line in enumerate(lines, start=1):
        try:
            records.append(decode_record(line))
        except SchemaError as exc:
            if tail_torn and lineno == len(lines):
                warnings.warn(
                    f"skipping torn trailing line {lineno} in {store_path}: {exc}",
                    stacklevel=2,
                )
                break
            raise StoreError(f"{store_path} line {lineno}: {exc}") from exc
    return records


class _ServiceState:
    """Store handle plus in-memory index, shared by handler threads."""

    def __init__(self, store_path):
        self.store_path = store_path
        self.lock = threading.Lock()
        self.records: list[TelemetryRecord] = []
        self.max_seq: dict[str, int] = {}
        self.last_seen: dict[str, int] = {}
        self.counts: dict[str, int] = {}
        self.fail_writes = False  # fault-injection hook for tests/ops drills
        if os.path.exists(store_path):
            for record in scan_store(store_path):
                self._index(record)
        self._fh = open(store_path, "ab")

    def _index(self, record: TelemetryRecord):
        self.records.append(record)
        self.max_seq[record.node_id] = record.seq
        self.counts[record.node_id] = self.counts.get(record.node_id, 0) + 1
        self.last_seen[record.node_id] = max(
            self.last_seen.get(record.node_id, 0), record.timestamp_ms
        )

    def ingest(self, record: TelemetryRecord) -> str:
        """'stored' | 'duplicate'; raises StoreError on write failure."""
        with self.lock:
            if record.seq <= self.max_seq.get(record.node_id, -1):
                return "duplicate"
            if self.fail_writes:
                raise StoreError("storage failure injected")
            try:
                self._fh.write(encode_record(record) + b"\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except OSError as exc:
                raise StoreError(f"append failed: {exc}") from exc
            self._index(record)
            return "stored"

    def node_statuses(self) -> list[NodeStatus]:
        with self.lock:
            return [
                NodeStatus(node_id, self.last_seen[node_id], self.counts[node_id])
                for node_id in sorted(self.counts)
            ]

    def query(self, node_id=None, since_ms=None, limit=None) -> list[TelemetryRecord]:
        with self.lock:
            selected = list(self.records)
        if node_id is not None:
            selected = [r for r in selected if r.node_id == node_id]
        if since_ms is not None:
            selected = [r for r in selected if r.timestamp_ms >= since_ms]
        selected.sort(key=lambda r: (r.timestamp_ms, r.seq))
        if limit is not None:
            selected = selected[:limit]
        return selected

    def close(self):
        self._fh.close()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _send(self, status: int, payload: dict):
        body = json.dumps(payload, separators=(",", ":")).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):  # noqa: N802 (http.server API)
        if urllib.parse.urlsplit(self.path).path != "/ingest":
            self._send(404, {"error": "unknown path"})
            return
        length = self.headers.get("Content-Length")
        if length is None:
            self._send(400, {"error": "Content-Length required", "field": "body"})
            return
        body = self.rfile.read(int(length))
        try:
            record = decode_record(body)
        except SchemaError as exc:
            self._send(400, {"error": str(exc), "field": exc.field})
            return
        try:
            outcome = self.server.state.ingest(record)
        except StoreError as exc:
            self._send(503, {"error": str(exc)})
            return
        if outcome == "duplicate":
            self._send(
                409,
                {
                    "error": "duplicate or stale seq",
                    "node_id": record.node_id,
                    "seq": record.seq,
                    "max_seq": self.server.state.max_seq[record.node_id],
                },
            )
            return
        self._send(201, {"node_id": record.node_id, "seq": record.seq})

    def do_GET(self):  # noqa: N802
        split = urllib.parse.urlsplit(self.path)
        if split.path == "/nodes":
            statuses = self.server.state.node_statuses()
            self._send(
                200,
                {
                    "nodes": [
                        {
                            "node_id": s.node_id,
                            "last_seen_ms": s.last_seen_ms,
                            "record_count": s.record_count,
                        }
                        for s in statuses
                    ]
                },
            )
            return
        if split.path == "/records":
            params = urllib.parse.parse_qs(split.query)
            try:
                node_id = params["node_id"][0] if "node_id" in params else None
                since_ms = int(params["since_ms"][0]) if "since_ms" in params else None
                limit = int(params["limit"][0]) if "limit" in params else None
            except ValueError:
                self._send(400, {"error": "since_ms and limit must be integers"})
                return
            records = self.server.state.query(node_id, since_ms, limit)
            self._send(200, {"records": [record_wire_dict(r) for r in records]})
            return
        self._send(404, {"error": "unknown path"})

    def log_message(self, format, *args):  # quiet by default
        pass


class TelemetryServer:
    """Threaded HTTP ingestion service over a JSON-lines store.

    Usage::

        with TelemetryServer("store.jsonl") as server:
            post(server.url + "/ingest", ...)

    ``port=0`` binds an ephemeral port; read it back from ``server.port``.
    """

    def __init__(self, store_path, host: str = "127.0.0.1", port: int = 0):
        self.store_path = store_path
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.state = _ServiceState(store_path)
        self._thread = None

    @property
    def state(self) -> _ServiceState:
        return self._httpd.state

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "TelemetryServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        if self._thread is not None:
            self._thread.join()
        self._httpd.server_close()
        self.state.close()

    def serve_forever(self):
        self._httpd.serve_forever()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(store_path, host: str = "127.0.0.1", port: int = 0) -> TelemetryServer:
    """Start the ingestion service in a background thread and return it."""
    return TelemetryServer(store_path, host, port).start()


def _post_once(url: str, body: bytes, timeout: float) -> int:
    req = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status
    except urllib.error.HTTPError as exc:
        return exc.code


def node_emulator(
    profile: ClassProfile,
    endpoint,
    interval_s: float = 8.0,
    count: int = 10,
    seed: int = 0,
    node_id: str | None = None,
    cfg: FrontEndConfig | None = None,
    site: str | None = None,
    start_seq: int = 0,
    max_retries: int = 8,
    backoff_s: float = 0.05,
    timeout_s: float = 10.0,
    time_fn=None,
) -> list[TelemetryRecord]:
    """Synthesize, featurize, and deliver one record per tick.

    ``endpoint`` is either an ``http(s)://`` service URL or a file path
    (dry-run sink, appended with the same wire format). Transport failures
    and 503s are retried with exponential backoff without skipping seq; a
    409 means the record already landed (e.g. an earlier POST was acked but
    the response got lost), so the emulator moves on. The window for seq k
    is derived from (seed, k), so a restarted emulator re-sends identical
    payloads and the server's dedup keeps the store exactly-once.

    Raises
    ------
    DeliveryError
        After ``max_retries`` consecutive failures for one record, or on a
        400 (schema bug, retrying cannot help). ``delivered`` carries the
        number of records acknowledged before the abort.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    cfg = cfg if cfg is not None else FrontEndConfig()
    node_id = node_id or f"{profile.structure.value}-node"
    time_fn = time_fn or (lambda: int(time.time() * 1000))
    is_http = isinstance(endpoint, str) and endpoint.startswith(("http://", "https://"))
    if is_http:
        url = endpoint if endpoint.endswith("/ingest") else endpoint.rstrip("/") + "/ingest"

    sent = []
    t0 = time.monotonic()
    for i in range(count):
        wait = t0 + i * interval_s - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        seq = start_seq + i
        window = synth_window(profile, cfg, seed=seed * 1_000_003 + seq)
        record = TelemetryRecord(
            node_id=node_id,
            timestamp_ms=time_fn(),
            seq=seq,
            features=extract_features(window),
            label=profile.structure,
            site=site,
        )
        if not is_http:
            append_store(endpoint, record)
        else:
            body = encode_record(record)
            for attempt in range(max_retries + 1):
                try:
                    status = _post_once(url, body, timeout_s)
                except (urllib.error.URLError, OSError):
                    status = None  # transport failure
                if status in (201, 409):
                    break
                if status == 400:
                    raise DeliveryError(len(sent), f"server rejected seq {seq} with 400")
                if attempt == max_retries:
                    raise DeliveryError(
                        len(sent),
                        f"giving up on seq {seq} after {max_retries} retries "
                        f"(last status {status})",
                    )
                time.sleep(backoff_s * 2**attempt)
        sent.append(record)
    return sent
