"""Windowed evaluation protocol: scoring client, replay simulator, HTTP endpoint.

The simulator replays a corpus over a single TCP connection, keeping at
most `window` revisions outstanding (sent but unscored); the client
answers one revision at a time, which keeps the session rolling mean in
stream order. A dropped connection can be resumed: the client re-sends
its HELLO and the simulator re-sends whatever was outstanding.
"""

import json
import logging
import re
import socket
import statistics
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, HTTPServer

from .errors import ConnectionLost, MalformedXml, MissingField, ProtocolViolation, SingleClass
from .ingest import iter_revision_blocks, parse_revision_xml, read_truth_csv
from .metrics import roc_auc
from .pipeline import _meta_lines_by_id
from .wire import (
    Frame,
    decode_revision_payload,
    decode_score_payload,
    encode_revision_payload,
    encode_score_payload,
    read_frame,
    write_frame,
)

log = logging.getLogger(__name__)

_ID_RE = re.compile(rb"<id>(\d+)</id>")


# ---------------------------------------------------------------- client

def run_client(host, port, token, scorer, max_retries=3, retry_delay=0.2):
    """Drive the scoring side: HELLO, then one SCORE per REVISION until END.

    Returns {"scored": count, "note": server note or None}. A lost
    connection is retried with a fresh HELLO; the simulator re-sends
    unacknowledged revisions. Session rolling means live in the scorer
    process, so a restarted client starts its means fresh (documented
    behavior, not hidden).
    """
    scored = 0
    attempts = 0
    while True:
        try:
            with socket.create_connection((host, port), timeout=60) as sock:
                reader = sock.makefile("rb")
                writer = sock.makefile("wb")
                write_frame(writer, Frame("HELLO", 0, token.encode("utf-8")))
                while True:
                    frame = read_frame(reader)
                    if frame.type == "REVISION":
                        xml, meta_line = decode_revision_payload(frame.payload)
                        _, score = scorer.score_payload(
                            xml, meta_line, fallback_id=frame.revision_id)
                        write_frame(writer, Frame(
                            "SCORE", frame.revision_id, encode_score_payload(score)))
                        scored += 1
                    elif frame.type == "END":
                        note = frame.payload.decode("utf-8", "replace")
                        if note:
                            log.warning("server ended the run: %s", note)
                        return {"scored": scored, "note": note or None}
                    else:
                        raise ProtocolViolation(
                            f"unexpected frame type {frame.type} from server")
        except (ConnectionLost, ConnectionError, socket.timeout) as exc:
            attempts += 1
            if attempts > max_retries:
                raise ConnectionLost(
                    f"gave up after {attempts - 1} retries: {exc}") from exc
            log.warning("connection lost (%s); reconnecting", exc)
            time.sleep(retry_delay)


# ---------------------------------------------------------------- simulator

@dataclass
class SimulatorReport:
    scored: int = 0
    roc_auc: float | None = None
    latency_mean: float = 0.0
    latency_p50: float = 0.0
    latency_p95: float = 0.0
    latency_max: float = 0.0
    throughput: float = 0.0
    max_outstanding: int = 0
    error: str | None = None
    scores: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "scored": self.scored, "rocAuc": self.roc_auc,
            "latencyMean": self.latency_mean, "latencyP50": self.latency_p50,
            "latencyP95": self.latency_p95, "latencyMax": self.latency_max,
            "throughput": self.throughput, "maxOutstanding": self.max_outstanding,
            "error": self.error,
        }


class SimulatorServer:
    """Replays a corpus against one scoring client with a fixed window."""

    def __init__(self, xml_path, meta_path, truth_path=None, host="127.0.0.1",
                 port=0, window=16, token=None, max_resumes=32):
        self.window = window
        self.token = token
        self.max_resumes = max_resumes
        self.revisions = []  # (revision_id, payload), corpus file order
        meta_lines = _meta_lines_by_id(meta_path)
        for block in iter_revision_blocks(xml_path):
            m = _ID_RE.search(block)
            if not m:
                log.warning("skipping replay block without a revision id")
                continue
            rid = int(m.group(1))
            self.revisions.append(
                (rid, encode_revision_payload(block, meta_lines.get(rid))))
        self.truth = read_truth_csv(truth_path) if truth_path else None
        self._next_index = 0
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(1)
        self.address = self._sock.getsockname()

    def serve(self) -> SimulatorReport:
        report = SimulatorReport()
        outstanding = {}  # revision_id -> payload, in send order
        sent_at = {}
        latencies = []
        resumes = 0
        t_start = time.perf_counter()
        try:
            while True:
                conn, _ = self._sock.accept()
                try:
                    if self._serve_connection(conn, report, outstanding,
                                              sent_at, latencies):
                        break
                except (ConnectionLost, ConnectionError) as exc:
                    resumes += 1
                    if resumes > self.max_resumes:
                        report.error = f"too many reconnects: {exc}"
                        break
                    log.warning("client connection lost (%s); awaiting resume", exc)
                finally:
                    conn.close()
        finally:
            self._sock.close()
        elapsed = time.perf_counter() - t_start
        report.throughput = report.scored / elapsed if elapsed > 0 else 0.0
        if latencies:
            ordered = sorted(latencies)
            report.latency_mean = statistics.fmean(latencies)
            report.latency_p50 = ordered[len(ordered) // 2]
            report.latency_p95 = ordered[min(len(ordered) - 1, int(0.95 * len(ordered)))]
            report.latency_max = ordered[-1]
        if self.truth and report.scores:
            scores, labels = [], []
            for rid, value in report.scores.items():
                if rid in self.truth:
                    scores.append(value)
                    labels.append(self.truth[rid])
            try:
                report.roc_auc = roc_auc(scores, labels)
            except (SingleClass, ValueError):
                report.roc_auc = None
        return report

    def _end(self, writer, report, note=None):
        write_frame(writer, Frame("END", 0, note.encode() if note else b""))
        if note:
            report.error = note
        return True

    def _serve_connection(self, conn, report, outstanding, sent_at, latencies):
        """One client connection; True when the run is over (END was sent)."""
        reader = conn.makefile("rb")
        writer = conn.makefile("wb")
        hello = read_frame(reader)
        if hello.type != "HELLO":
            raise ConnectionLost(f"expected HELLO, got {hello.type}")
        if self.token is not None and hello.payload.decode("utf-8", "replace") != self.token:
            return self._end(writer, report, "bad identification token")

        # resume: re-send everything that was never scored
        for rid, payload in outstanding.items():
            write_frame(writer, Frame("REVISION", rid, payload))
            sent_at[rid] = time.perf_counter()

        total = len(self.revisions)
        while True:
            while len(outstanding) < self.window and self._next_index < total:
                rid, payload = self.revisions[self._next_index]
                self._next_index += 1
                outstanding[rid] = payload
                sent_at[rid] = time.perf_counter()
                write_frame(writer, Frame("REVISION", rid, payload))
                report.max_outstanding = max(report.max_outstanding, len(outstanding))
                assert len(outstanding) <= self.window
            if not outstanding and self._next_index >= total:
                return self._end(writer, report)

            frame = read_frame(reader)
            if frame.type != "SCORE":
                return self._end(writer, report, f"expected SCORE, got {frame.type}")
            rid = frame.revision_id
            if rid not in outstanding:
                return self._end(
                    writer, report, f"SCORE for unknown or already-scored revision {rid}")
            try:
                value = decode_score_payload(frame.payload)
            except ProtocolViolation as exc:
                return self._end(writer, report, f"bad score payload: {exc}")
            del outstanding[rid]
            latencies.append(time.perf_counter() - sent_at.pop(rid))
            report.scores[rid] = value
            report.scored += 1


def run_simulator_server(xml_path, meta_path, truth_path=None, host="127.0.0.1",
                         port=0, window=16, token=None) -> SimulatorReport:
    server = SimulatorServer(xml_path, meta_path, truth_path=truth_path,
                             host=host, port=port, window=window, token=token)
    return server.serve()


# ---------------------------------------------------------------- http

def make_http_server(host, port, scorer) -> HTTPServer:
    """Single-threaded HTTP scorer: POST /score with a REVISION-frame payload
    body returns {"revisionId": ..., "score": ...}."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

        def _reply(self, status, doc):
            body = json.dumps(doc).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            if self.path != "/score":
                self._reply(404, {"error": "unknown path, POST /score"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length) if length > 0 else b""
                if not body:
                    self._reply(400, {"error": "empty request body"})
                    return
                xml, meta_line = decode_revision_payload(body)
                try:
                    rev = parse_revision_xml(xml)
                except (MalformedXml, MissingField) as exc:
                    self._reply(400, {"error": f"unparsable revision: {exc}"})
                    return
                score = scorer.score_parsed(rev, meta_line)
                self._reply(200, {"revisionId": rev.revision_id, "score": score})
            except Exception as exc:  # pragma: no cover - defensive
                log.exception("internal error")
                self._reply(500, {"error": str(exc)})

    return HTTPServer((host, port), Handler)
