"""The end-to-end scoring path and batch feature extraction.

One code path serves batch mode, the TCP client, and the HTTP endpoint:
parse -> comment analysis -> content + context features -> fixed-order
vector -> boosted-tree probability -> session rolling mean. A revision
that cannot be parsed still gets an answer (the neutral default score);
a production scorer must respond to every query.
"""

import logging
import time

import numpy as np

from . import gbm, langmodel
from .comments import analyze_comment
from .content import char_features, sentence_features, word_features
from .context import named_features
from .errors import BadRecord, MalformedXml, MissingField, SchemaMismatch
from .ingest import (
    RevisionMetadata,
    iter_revision_blocks,
    parse_metadata_line,
    parse_revision_xml,
)
from .sil import CREATION_SENTINEL, SessionScorer

log = logging.getLogger(__name__)

DEFAULT_SCORE = 0.5


def extract_vector(rev, meta, store, lang_model=None) -> np.ndarray:
    """Fixed-order feature vector for one revision; identical in batch and
    protocol mode by construction."""
    pc = analyze_comment(rev.comment)
    cf = char_features(pc.tail)
    wf = word_features(pc.tail)
    sf = sentence_features(pc, rev.entity, model=lang_model)
    named = named_features(rev, meta, pc, cf, wf, sf, store)
    return store.schema.assemble(named)


def extract_matrix(pairs, store, lang_model=None):
    """Vectorize a chronological stream into parallel arrays.

    Returns a dict with ids, epoch-second timestamps, session ids (-1 when
    absent), creation flags, and the feature matrix.
    """
    lang_model = lang_model or langmodel.default_model()
    session_probe = SessionScorer()
    n = len(pairs)
    ids = np.zeros(n, dtype=np.int64)
    ts = np.zeros(n, dtype=np.int64)
    sessions = np.full(n, -1, dtype=np.int64)
    creations = np.zeros(n, dtype=bool)
    X = np.zeros((n, len(store.schema)), dtype=np.float64)
    for i, (rev, meta) in enumerate(pairs):
        pc = analyze_comment(rev.comment)
        cf = char_features(pc.tail)
        wf = word_features(pc.tail)
        sf = sentence_features(pc, rev.entity, model=lang_model)
        X[i] = store.schema.assemble(named_features(rev, meta, pc, cf, wf, sf, store))
        ids[i] = rev.revision_id
        ts[i] = int(rev.timestamp.timestamp())
        if meta.session_id is not None:
            sessions[i] = meta.session_id
        creations[i] = session_probe.is_creation(pc)
    return {"ids": ids, "ts": ts, "sessions": sessions, "creations": creations, "X": X}


def save_matrix(path, matrix, schema_hash):
    np.savez_compressed(path, schema_hash=np.array(schema_hash),
                        **{k: matrix[k] for k in ("ids", "ts", "sessions", "creations", "X")})


def load_matrix(path, expected_schema_hash=None):
    data = np.load(path, allow_pickle=False)
    out = {k: data[k] for k in ("ids", "ts", "sessions", "creations", "X")}
    stored = str(data["schema_hash"])
    if expected_schema_hash and stored != expected_schema_hash:
        raise SchemaMismatch(
            f"feature file was extracted with schema {stored[:12]}..., "
            f"state has {expected_schema_hash[:12]}...")
    return out


def apply_sil(raw_scores, sessions, creations, scorer=None):
    """Batch replay of the rolling mean in stream order; the creation flags
    were materialized at extraction time."""
    scorer = scorer or SessionScorer()
    out = np.empty(len(raw_scores), dtype=np.float64)
    for i, raw in enumerate(raw_scores):
        value = CREATION_SENTINEL if creations[i] else float(raw)
        sid = int(sessions[i])
        out[i] = scorer.adjust(sid if sid >= 0 else None, value)
    return out


class RevisionScorer:
    """Serving wrapper: model + frozen state + session smoothing."""

    def __init__(self, model, store, lang_model=None, use_sil=True,
                 session_scorer=None, default_score=DEFAULT_SCORE):
        if model.schema_hash and model.schema_hash != store.schema.hash_hex():
            raise SchemaMismatch(
                "model was trained against a different feature schema")
        self.model = model
        self.store = store
        self.lang_model = lang_model or langmodel.default_model()
        self.use_sil = use_sil
        self.sessions = session_scorer or SessionScorer()
        self.default_score = default_score

    def raw_score(self, rev, meta) -> float:
        vector = extract_vector(rev, meta, self.store, lang_model=self.lang_model)
        return gbm.predict(self.model, vector)

    def score(self, rev, meta) -> float:
        pc = analyze_comment(rev.comment)
        raw = self.raw_score(rev, meta)
        if not self.use_sil:
            return raw
        return self.sessions.score(pc, meta.session_id, raw)

    def score_parsed(self, rev, meta_line=None):
        """Score a parsed revision with its raw metadata line; degrades to the
        default score instead of failing."""
        meta = RevisionMetadata.empty(rev.revision_id)
        if meta_line:
            try:
                meta = parse_metadata_line(meta_line)
            except BadRecord as exc:
                log.warning("bad metadata for %d (%s); empty metadata", rev.revision_id, exc)
        try:
            return self.score(rev, meta)
        except Exception:
            log.exception("scoring failed for %d; default score", rev.revision_id)
            return self.default_score

    def score_payload(self, xml_bytes, meta_line=None, fallback_id=0):
        """Score a raw (XML, metadata line) payload; never refuses to answer."""
        try:
            rev = parse_revision_xml(xml_bytes)
        except (MalformedXml, MissingField) as exc:
            log.warning("unparsable revision (%s); default score", exc)
            return fallback_id, self.default_score
        return rev.revision_id, self.score_parsed(rev, meta_line)


def _meta_lines_by_id(meta_path):
    """Raw metadata CSV lines keyed by revision id (header skipped)."""
    lines = {}
    with open(meta_path, encoding="utf-8", newline="") as fh:
        fh.readline()
        for line in fh:
            line = line.rstrip("\r\n")
            if not line:
                continue
            key = line.split(",", 1)[0]
            try:
                lines[int(key)] = line
            except ValueError:
                continue
    return lines


def benchmark_throughput(xml_path, meta_path, scorer: RevisionScorer,
                         limit=None, warmup=200):
    """Single-threaded wall-clock rate of the full parse->score path."""
    import re

    id_re = re.compile(rb"<id>(\d+)</id>")
    meta_lines = _meta_lines_by_id(meta_path)
    work = []
    for block in iter_revision_blocks(xml_path):
        m = id_re.search(block)
        rid = int(m.group(1)) if m else 0
        work.append((block, meta_lines.get(rid)))
        if limit is not None and len(work) >= limit + warmup:
            break
    if not work:
        return {"scored": 0, "seconds": 0.0, "rate": 0.0}

    warm = work[:warmup]
    timed = work[warmup:]
    if not timed:
        warm, timed = [], work
    for block, line in warm:
        scorer.score_payload(block, line)
    t0 = time.perf_counter()
    scored = 0
    for block, line in timed:
        scorer.score_payload(block, line)
        scored += 1
    elapsed = time.perf_counter() - t0
    return {
        "scored": scored,
        "seconds": elapsed,
        "rate": scored / elapsed if elapsed > 0 else float("inf"),
    }
