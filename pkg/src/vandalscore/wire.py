"""Length-prefixed frame format of the evaluation protocol.

Every frame is one UTF-8 header line `WSDM/1 <TYPE> <revisionId|0>
<contentLength>\\n` followed by exactly contentLength payload bytes.
REVISION payloads carry the revision XML block, a `\\n--META--\\n`
separator, and one metadata CSV line; SCORE payloads carry the decimal
score with 9 fractional digits.
"""

import math
from dataclasses import dataclass

from .errors import ConnectionLost, ProtocolViolation

MAGIC = b"WSDM/1"
FRAME_TYPES = ("HELLO", "REVISION", "SCORE", "END")
META_SEPARATOR = b"\n--META--\n"
MAX_HEADER = 128
MAX_PAYLOAD = 64 * 1024 * 1024


@dataclass(frozen=True)
class Frame:
    type: str
    revision_id: int = 0
    payload: bytes = b""


def encode_frame(frame: Frame) -> bytes:
    if frame.type not in FRAME_TYPES:
        raise ProtocolViolation(f"unknown frame type {frame.type!r}")
    header = b"%s %s %d %d\n" % (
        MAGIC, frame.type.encode(), frame.revision_id, len(frame.payload))
    return header + frame.payload


def read_frame(reader) -> Frame:
    """Read one frame from a buffered binary reader; raises ConnectionLost
    on EOF or a short read, ProtocolViolation on malformed headers."""
    header = reader.readline(MAX_HEADER)
    if not header:
        raise ConnectionLost("connection closed")
    if not header.endswith(b"\n"):
        if len(header) >= MAX_HEADER:
            raise ProtocolViolation(f"oversized frame header: {header[:32]!r}...")
        raise ConnectionLost("connection closed mid-header")
    parts = header.strip().split(b" ")
    if len(parts) != 4 or parts[0] != MAGIC:
        raise ProtocolViolation(f"bad frame header: {header!r}")
    ftype = parts[1].decode("ascii", "replace")
    if ftype not in FRAME_TYPES:
        raise ProtocolViolation(f"unknown frame type {ftype!r}")
    try:
        revision_id = int(parts[2])
        length = int(parts[3])
    except ValueError:
        raise ProtocolViolation(f"bad frame header: {header!r}") from None
    if length < 0 or length > MAX_PAYLOAD:
        raise ProtocolViolation(f"bad payload length {length}")
    payload = reader.read(length)
    if payload is None or len(payload) != length:
        raise ConnectionLost("connection closed mid-payload")
    return Frame(type=ftype, revision_id=revision_id, payload=payload)


def write_frame(writer, frame: Frame):
    writer.write(encode_frame(frame))
    writer.flush()


def encode_revision_payload(xml_block: bytes, meta_line=None) -> bytes:
    meta = (meta_line or "").encode("utf-8") if isinstance(meta_line, str) \
        else (meta_line or b"")
    return xml_block + META_SEPARATOR + meta


def decode_revision_payload(payload: bytes):
    """Split a REVISION payload into (xml bytes, metadata line or None)."""
    pos = payload.find(META_SEPARATOR)
    if pos < 0:
        return payload, None
    meta = payload[pos + len(META_SEPARATOR):].decode("utf-8", "replace").strip("\r\n")
    return payload[:pos], (meta or None)


def encode_score_payload(score: float) -> bytes:
    return b"%.9f" % score


def decode_score_payload(payload: bytes) -> float:
    try:
        value = float(payload.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise ProtocolViolation(f"score payload is not decimal: {payload[:32]!r}") from None
    if not math.isfinite(value):
        raise ProtocolViolation(f"score is not finite: {value!r}")
    return value
