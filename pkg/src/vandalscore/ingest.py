"""Parse revision XML and metadata records and join them into a stream.

The XML schema is the MediaWiki-export subset: one <revision> element per
record with <id>, <timestamp>, <contributor> (either <username>+<id> or
<ip>), optional <minor/>, optional <comment>, <text> with the post-edit
entity JSON, optional <parentid>. Unknown elements are ignored. The item
id comes from the top-level "id" of the entity JSON.
"""

import csv
import io
import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from xml.sax.saxutils import escape

from .errors import BadRecord, MalformedXml, MissingField

log = logging.getLogger(__name__)

METADATA_HEADER = [
    "revisionId", "sessionId", "continent", "country",
    "region", "county", "city", "timezone", "tags",
]
TRUTH_HEADER = ["revisionId", "rollbackReverted"]


@dataclass(frozen=True)
class Geo:
    continent: str | None = None
    country: str | None = None
    region: str | None = None
    county: str | None = None
    city: str | None = None
    timezone: str | None = None


@dataclass(frozen=True)
class RevisionMetadata:
    revision_id: int
    session_id: int | None = None
    geo: Geo | None = None
    tags: frozenset = frozenset()

    @classmethod
    def empty(cls, revision_id):
        return cls(revision_id=revision_id)


@dataclass(frozen=True)
class RawRevision:
    revision_id: int
    item_id: str
    timestamp: datetime
    user_name: str | None
    user_id: int | None
    ip_address: str | None
    comment: str
    entity_text: str
    is_minor: bool
    entity: dict | None = field(default=None, compare=False, repr=False)

    @property
    def is_registered(self) -> bool:
        return self.user_name is not None


@dataclass(frozen=True)
class TruthLabel:
    revision_id: int
    rollback_reverted: bool


def _parse_timestamp(text):
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise MissingField(f"bad timestamp {text!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_revision_xml(xml_bytes) -> RawRevision:
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if root.tag != "revision":
        raise MalformedXml(f"expected <revision>, got <{root.tag}>")

    rev_id = None
    timestamp = None
    comment = ""
    entity_text = ""
    is_minor = False
    user_name = None
    user_id = None
    ip_address = None
    for child in root:
        tag = child.tag
        if tag == "id":
            try:
                rev_id = int((child.text or "").strip())
            except ValueError:
                pass
        elif tag == "timestamp":
            timestamp = (child.text or "").strip()
        elif tag == "comment":
            comment = child.text or ""
        elif tag == "text":
            entity_text = child.text or ""
        elif tag == "minor":
            is_minor = True
        elif tag == "contributor":
            for sub in child:
                if sub.tag == "username":
                    user_name = sub.text or ""
                elif sub.tag == "id":
                    try:
                        user_id = int((sub.text or "").strip())
                    except ValueError:
                        pass
                elif sub.tag == "ip":
                    ip_address = (sub.text or "").strip()

    if rev_id is None or rev_id <= 0:
        raise MissingField("revision id missing")
    if not timestamp:
        raise MissingField("timestamp missing")
    if user_name is None and ip_address is None:
        raise MissingField("contributor missing")
    if user_name is not None and ip_address is not None:
        raise MalformedXml("contributor has both username and ip")

    entity = None
    item_id = ""
    if entity_text:
        try:
            parsed = json.loads(entity_text)
            if isinstance(parsed, dict):
                entity = parsed
                raw_item = parsed.get("id")
                if isinstance(raw_item, str):
                    item_id = raw_item
        except ValueError:
            entity = None

    return RawRevision(
        revision_id=rev_id,
        item_id=item_id,
        timestamp=_parse_timestamp(timestamp),
        user_name=user_name,
        user_id=user_id,
        ip_address=ip_address,
        comment=comment,
        entity_text=entity_text,
        is_minor=is_minor,
        entity=entity,
    )


def revision_to_xml(rev: RawRevision) -> str:
    """Serialize back to the ingest schema; parse(revision_to_xml(r)) == r."""
    parts = ["<revision>"]
    parts.append(f"  <id>{rev.revision_id}</id>")
    ts = rev.timestamp.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    parts.append(f"  <timestamp>{ts}</timestamp>")
    if rev.user_name is not None:
        uid = f"<id>{rev.user_id}</id>" if rev.user_id is not None else ""
        parts.append(
            f"  <contributor><username>{escape(rev.user_name)}</username>{uid}</contributor>")
    else:
        parts.append(f"  <contributor><ip>{escape(rev.ip_address or '')}</ip></contributor>")
    if rev.is_minor:
        parts.append("  <minor/>")
    if rev.comment:
        parts.append(f"  <comment>{escape(rev.comment)}</comment>")
    if rev.entity_text:
        parts.append(f"  <text>{escape(rev.entity_text)}</text>")
    parts.append("</revision>")
    return "\n".join(parts)


def iter_revision_blocks(source):
    """Yield raw <revision>...</revision> byte blocks from a file object or
    path; tolerates surrounding container elements and whitespace."""
    close_obj = None
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        close_obj = open(source, "rb")
        stream = close_obj
    else:
        stream = source
    try:
        buf = b""
        while True:
            chunk = stream.read(1 << 16)
            if chunk:
                buf += chunk
            while True:
                start = buf.find(b"<revision")
                if start < 0:
                    if not chunk:
                        return
                    if len(buf) > 32:
                        buf = buf[-32:]
                    break
                end = buf.find(b"</revision>", start)
                if end < 0:
                    if not chunk:
                        return
                    if start > 0:
                        buf = buf[start:]
                    break
                yield buf[start:end + len(b"</revision>")]
                buf = buf[end + len(b"</revision>"):]
            if not chunk:
                return
    finally:
        if close_obj is not None:
            close_obj.close()


def parse_metadata_line(line) -> RevisionMetadata:
    """One CSV record (no header) of the metadata file."""
    try:
        row = next(csv.reader(io.StringIO(line)))
    except StopIteration:
        raise BadRecord("empty metadata line")
    if len(row) != len(METADATA_HEADER):
        raise BadRecord(
            f"expected {len(METADATA_HEADER)} columns, got {len(row)}: {line!r}")
    try:
        revision_id = int(row[0])
    except ValueError as exc:
        raise BadRecord(f"bad revision id in {line!r}") from exc
    session_id = int(row[1]) if row[1] else None
    geo_cells = [c if c else None for c in row[2:8]]
    geo = Geo(*geo_cells) if any(geo_cells) else None
    tags = frozenset(t for t in row[8].split("|") if t) if row[8] else frozenset()
    return RevisionMetadata(revision_id=revision_id, session_id=session_id,
                            geo=geo, tags=tags)


def metadata_to_line(meta: RevisionMetadata) -> str:
    geo = meta.geo or Geo()
    out = io.StringIO()
    csv.writer(out, lineterminator="").writerow([
        meta.revision_id,
        "" if meta.session_id is None else meta.session_id,
        geo.continent or "", geo.country or "", geo.region or "",
        geo.county or "", geo.city or "", geo.timezone or "",
        "|".join(sorted(meta.tags)),
    ])
    return out.getvalue()


def read_metadata_csv(path) -> dict:
    """Whole metadata file into {revisionId: RevisionMetadata}; validates the header."""
    table = {}
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if [c.strip() for c in header.split(",")] != METADATA_HEADER:
            raise BadRecord(f"bad metadata header: {header!r}")
        for line in fh:
            line = line.rstrip("\r\n")
            if not line:
                continue
            meta = parse_metadata_line(line)
            table[meta.revision_id] = meta
    return table


def read_truth_csv(path) -> dict:
    """Truth file into {revisionId: bool}, one label per revision."""
    labels = {}
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if [c.strip() for c in header.split(",")] != TRUTH_HEADER:
            raise BadRecord(f"bad truth header: {header!r}")
        for line in fh:
            line = line.rstrip("\r\n")
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 2 or cells[1] not in ("true", "false"):
                raise BadRecord(f"bad truth record: {line!r}")
            label = TruthLabel(int(cells[0]), cells[1] == "true")
            labels[label.revision_id] = label.rollback_reverted
    return labels


def stream_corpus(xml_source, meta_source, on_error=None):
    """Chronological (timestamp, revisionId)-ordered (RawRevision, RevisionMetadata)
    pairs. Revisions that fail to parse are reported through on_error and
    skipped; a revision without metadata is paired with an empty record."""
    if isinstance(meta_source, dict):
        meta = meta_source
    else:
        meta = read_metadata_csv(meta_source)
    pairs = []
    for block in iter_revision_blocks(xml_source):
        try:
            rev = parse_revision_xml(block)
        except (MalformedXml, MissingField) as exc:
            if on_error is not None:
                on_error(block, exc)
            else:
                log.warning("skipping unparsable revision: %s", exc)
            continue
        pairs.append((rev, meta.get(rev.revision_id, RevisionMetadata.empty(rev.revision_id))))
    pairs.sort(key=lambda p: (p[0].timestamp, p[0].revision_id))
    return pairs
