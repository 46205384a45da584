import io
import json
from datetime import datetime, timezone

import pytest

from vandalscore.errors import BadRecord, MalformedXml, MissingField
from vandalscore.ingest import (
    Geo,
    RevisionMetadata,
    iter_revision_blocks,
    metadata_to_line,
    parse_metadata_line,
    parse_revision_xml,
    read_metadata_csv,
    read_truth_csv,
    revision_to_xml,
    stream_corpus,
)


def xml_block(rev_id=7, ts="2016-03-01T00:00:00Z", contributor="<ip>1.2.3.4</ip>",
              minor=False, comment=None, text=None):
    parts = [f"<revision><id>{rev_id}</id><timestamp>{ts}</timestamp>",
             f"<contributor>{contributor}</contributor>"]
    if minor:
        parts.append("<minor/>")
    if comment is not None:
        parts.append(f"<comment>{comment}</comment>")
    if text is not None:
        parts.append(f"<text>{text}</text>")
    parts.append("</revision>")
    return "".join(parts)


# ---------------------------------------------------------------- revision xml

def test_minimal_anonymous_revision():
    rev = parse_revision_xml(xml_block())
    assert rev.revision_id == 7
    assert rev.ip_address == "1.2.3.4"
    assert rev.user_name is None
    assert not rev.is_registered
    assert rev.is_minor is False
    assert rev.comment == ""
    assert rev.timestamp == datetime(2016, 3, 1, tzinfo=timezone.utc)


def test_minor_flag():
    assert parse_revision_xml(xml_block(minor=True)).is_minor is True


def test_registered_contributor():
    rev = parse_revision_xml(
        xml_block(contributor="<username>BotUser</username><id>55</id>"))
    assert rev.user_name == "BotUser"
    assert rev.user_id == 55
    assert rev.is_registered
    assert rev.ip_address is None


def test_item_id_from_entity_json():
    entity = json.dumps({"id": "Q42", "labels": {}})
    rev = parse_revision_xml(xml_block(text=entity.replace('"', "&quot;")))
    assert rev.item_id == "Q42"
    assert rev.entity == {"id": "Q42", "labels": {}}


def test_unknown_elements_ignored():
    block = xml_block().replace(
        "</revision>", "<sha1>abc</sha1><parentid>6</parentid></revision>")
    assert parse_revision_xml(block).revision_id == 7


def test_unparsable_xml():
    with pytest.raises(MalformedXml):
        parse_revision_xml(b"<revision><id>1</id>")
    with pytest.raises(MalformedXml):
        parse_revision_xml(b"<page></page>")


def test_missing_id_or_timestamp():
    with pytest.raises(MissingField):
        parse_revision_xml(
            "<revision><timestamp>2016-01-01T00:00:00Z</timestamp>"
            "<contributor><ip>1.1.1.1</ip></contributor></revision>")
    with pytest.raises(MissingField):
        parse_revision_xml(
            "<revision><id>3</id><contributor><ip>1.1.1.1</ip></contributor></revision>")


def test_missing_contributor():
    with pytest.raises(MissingField):
        parse_revision_xml(
            "<revision><id>3</id><timestamp>2016-01-01T00:00:00Z</timestamp></revision>")


def test_both_contributor_kinds_rejected():
    with pytest.raises(MalformedXml):
        parse_revision_xml(xml_block(
            contributor="<username>A</username><id>1</id><ip>1.2.3.4</ip>"))


def test_round_trip():
    entity = json.dumps({"id": "Q1", "labels": {"en": {"language": "en", "value": "x <&>"}}})
    blocks = [
        xml_block(comment="/* wbsetlabel-set:1|en */ x &lt;&amp;&gt;",
                  text=entity.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")),
        xml_block(rev_id=9, contributor="<username>Ann</username><id>12</id>", minor=True),
    ]
    for block in blocks:
        rev = parse_revision_xml(block)
        again = parse_revision_xml(revision_to_xml(rev))
        assert again == rev


# ---------------------------------------------------------------- metadata csv

def test_all_empty_geo_absent():
    meta = parse_metadata_line("7,100,,,,,,,")
    assert meta.revision_id == 7
    assert meta.session_id == 100
    assert meta.geo is None
    assert meta.tags == frozenset()


def test_tags_split_on_pipe():
    meta = parse_metadata_line("7,100,,,,,,,abuse|newbie")
    assert meta.tags == {"abuse", "newbie"}


def test_geo_column_mapping():
    meta = parse_metadata_line("7,100,EU,DE,,,Berlin,,x")
    assert meta.geo.continent == "EU"
    assert meta.geo.country == "DE"
    assert meta.geo.city == "Berlin"
    assert meta.geo.region is None


def test_missing_session_id():
    assert parse_metadata_line("7,,,,,,,,").session_id is None


def test_wrong_column_count():
    with pytest.raises(BadRecord):
        parse_metadata_line("7,100,EU")
    with pytest.raises(BadRecord):
        parse_metadata_line("notanint,100,,,,,,,")


def test_metadata_line_round_trip():
    meta = RevisionMetadata(
        revision_id=11, session_id=3,
        geo=Geo(continent="NA", country="US", city="Washington, D.C."),
        tags=frozenset({"a", "b"}))
    assert parse_metadata_line(metadata_to_line(meta)) == meta


def test_read_metadata_csv_validates_header(tmp_path):
    p = tmp_path / "meta.csv"
    p.write_text("wrong,header\n7,1\n")
    with pytest.raises(BadRecord):
        read_metadata_csv(p)


def test_read_truth_csv(tmp_path):
    p = tmp_path / "truth.csv"
    p.write_text("revisionId,rollbackReverted\n1,true\n2,false\n")
    assert read_truth_csv(p) == {1: True, 2: False}
    p.write_text("revisionId,rollbackReverted\n1,maybe\n")
    with pytest.raises(BadRecord):
        read_truth_csv(p)


# ---------------------------------------------------------------- streaming

def corpus_bytes(blocks):
    return ("\n".join(blocks)).encode()


def test_block_iteration():
    blocks = [xml_block(rev_id=i) for i in (1, 2, 3)]
    out = list(iter_revision_blocks(io.BytesIO(corpus_bytes(blocks))))
    assert len(out) == 3
    assert all(b.startswith(b"<revision") for b in out)


def test_stream_orders_by_timestamp_then_id(tmp_path):
    blocks = [
        xml_block(rev_id=5, ts="2016-03-02T00:00:00Z"),
        xml_block(rev_id=3, ts="2016-03-01T00:00:00Z"),
        xml_block(rev_id=2, ts="2016-03-02T00:00:00Z"),
    ]
    meta_path = tmp_path / "meta.csv"
    meta_path.write_text(
        "revisionId,sessionId,continent,country,region,county,city,timezone,tags\n"
        "5,50,,,,,,,\n3,30,,,,,,,\n2,20,,,,,,,\n")
    pairs = stream_corpus(io.BytesIO(corpus_bytes(blocks)), meta_path)
    assert [r.revision_id for r, _ in pairs] == [3, 2, 5]
    assert [m.session_id for _, m in pairs] == [30, 20, 50]


def test_stream_pairs_missing_metadata_with_empty_record(tmp_path):
    blocks = [xml_block(rev_id=1)]
    meta_path = tmp_path / "meta.csv"
    meta_path.write_text(
        "revisionId,sessionId,continent,country,region,county,city,timezone,tags\n")
    pairs = stream_corpus(io.BytesIO(corpus_bytes(blocks)), meta_path)
    assert len(pairs) == 1
    assert pairs[0][1] == RevisionMetadata.empty(1)
    assert pairs[0][1].session_id is None


def test_stream_surfaces_parse_errors_per_record():
    blocks = [
        xml_block(rev_id=1),
        "<revision><id>bogus</id></revision>",
        xml_block(rev_id=2),
    ]
    failures = []
    pairs = stream_corpus(io.BytesIO(corpus_bytes(blocks)), {},
                          on_error=lambda block, exc: failures.append(exc))
    assert len(pairs) == 2
    assert len(failures) == 1
    assert isinstance(failures[0], MissingField)
