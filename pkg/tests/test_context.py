import json
from datetime import datetime, timezone

import pytest

from vandalscore.comments import analyze_comment
from vandalscore.content import char_features, sentence_features, word_features
from vandalscore.context import (
    BASE_SLOTS,
    CATEGORICAL_VARS,
    FeatureSchema,
    StateStore,
    build_state_store,
    load_state,
    named_features,
    save_state,
)
from vandalscore.errors import (
    CorruptState,
    EmptyStream,
    SchemaMismatch,
    UnknownVariable,
)
from vandalscore.ingest import Geo, RawRevision, RevisionMetadata
from vandalscore.langmodel import train_language_model


def make_rev(rev_id=1, item="Q5", user=("Ann", 12), ip=None, comment="",
             ts=datetime(2016, 3, 1, 17, 45, tzinfo=timezone.utc), minor=False,
             entity=None):
    entity = entity if entity is not None else {"id": item}
    text = json.dumps(entity)
    return RawRevision(
        revision_id=rev_id, item_id=item, timestamp=ts,
        user_name=None if ip else user[0], user_id=None if ip else user[1],
        ip_address=ip, comment=comment, entity_text=text, is_minor=minor,
        entity=entity)


def make_meta(rev_id=1, session=1, geo=None, tags=()):
    return RevisionMetadata(revision_id=rev_id, session_id=session, geo=geo,
                            tags=frozenset(tags))


TOY_MODEL = train_language_model({"aa": "aaaaaaaa", "bb": "bbbbbbbb"})


def extract(rev, meta, store):
    pc = analyze_comment(rev.comment)
    cf = char_features(pc.tail)
    wf = word_features(pc.tail)
    sf = sentence_features(pc, rev.entity, model=TOY_MODEL)
    return named_features(rev, meta, pc, cf, wf, sf, store)


def small_store(pairs=None, privileged=("Root",), bots=("HelperBot",)):
    pairs = pairs if pairs is not None else [
        (make_rev(1, comment="/* wbsetlabel-set:1|en */ Ada"), make_meta(1, tags=("x",))),
        (make_rev(2, comment="/* wbsetlabel-set:1|es */ Ada"), make_meta(2, tags=("y", "x"))),
        (make_rev(3, ip="1.2.3.4",
                  comment="/* wbsetdescription-add:1|en */ person"),
         make_meta(3, session=2, geo=Geo(continent="EU", country="DE"))),
    ]
    return build_state_store(pairs, privileged=privileged, bots=bots)


def make_meta_geo(rev_id, session, **geo):
    return RevisionMetadata(revision_id=rev_id, session_id=session,
                            geo=Geo(**geo), tags=frozenset())


# ---------------------------------------------------------------- store building

def test_user_and_item_counts():
    pairs = [
        (make_rev(i, user=("A", 1), item="Q5") if i < 4 else make_rev(i, user=("B", 2), item="Q7"),
         make_meta(i, session=i))
        for i in range(1, 6)
    ]
    store = build_state_store(pairs)
    assert store.user_edit_counts["A"] == 3
    assert store.user_edit_counts["B"] == 2
    assert store.item_edit_counts["Q5"] == 3
    assert store.item_edit_counts["Q7"] == 2
    assert store.frozen


def test_tag_vocabulary_first_seen_order():
    pairs = [
        (make_rev(1), make_meta(1, tags=("x",))),
        (make_rev(2), make_meta(2, tags=("y", "x"))),
    ]
    store = build_state_store(pairs)
    assert store.tag_vocabulary == ["x", "y"]


def test_empty_stream_rejected():
    with pytest.raises(EmptyStream):
        build_state_store([])


# ---------------------------------------------------------------- encoding

def test_dense_first_seen_codes():
    store = StateStore()
    assert store.encode("lang", "es") == 0
    assert store.encode("lang", "en") == 1
    assert store.encode("lang", "es") == 0


def test_unseen_after_freeze_is_placeholder():
    store = StateStore()
    store.encode("lang", "es")
    store.freeze()
    assert store.encode("lang", "xx") == -1
    assert store.encode("lang", "es") == 0


def test_absent_value_is_placeholder():
    store = StateStore()
    assert store.encode("lang", None) == -1


def test_unknown_variable():
    store = StateStore()
    with pytest.raises(UnknownVariable):
        store.encode("nosuch", "x")


# ---------------------------------------------------------------- named features

def test_anonymous_revision_features():
    store = small_store()
    rev = make_rev(9, ip="9.9.9.9", comment="/* wbsetlabel-set:1|en */ Hi")
    meta = make_meta_geo(9, 5, continent="EU", country="DE")
    named = extract(rev, meta, store)
    assert named["isRegUser"] is False
    assert named["useridFrequency"] is None
    assert named["userCountry"] == store.categorical_dicts["userCountry"]["DE"]
    assert named["userid"] is None


def test_registered_privileged_features():
    pairs = [
        (make_rev(i, user=("Root", 1), comment="/* wbsetlabel-set:1|en */ A"),
         make_meta(i, session=i)) for i in (1, 2, 3)
    ]
    store = build_state_store(pairs, privileged=("Root",))
    rev = make_rev(5, user=("Root", 1), comment="/* wbsetlabel-set:1|en */ A")
    named = extract(rev, make_meta(5, session=9), store)
    assert named["isPrivUser"] is True
    assert named["useridFrequency"] == 3
    for geo_slot in ("userContinent", "userCountry", "userRegion",
                     "userCounty", "userCity", "userTimeZone"):
        assert named[geo_slot] is None


def test_hour_and_jsonlen():
    store = small_store()
    rev = make_rev(9, ts=datetime(2016, 3, 1, 17, 45, tzinfo=timezone.utc))
    named = extract(rev, make_meta(9), store)
    assert named["hour"] == 17
    assert named["jsonLen"] == len(rev.entity_text)


def test_instance_of_extraction():
    store = small_store()
    entity = {"id": "Q5", "claims": {"P31": [
        {"mainsnak": {"datavalue": {"value": {"id": "Q42"}}}}]}}
    rev = make_rev(9, entity=entity)
    named = extract(rev, make_meta(9), store)
    # unseen after freeze -> placeholder, but the raw value was resolved
    assert named["instanceOf"] == -1
    store2 = build_state_store([(rev, make_meta(9))])
    named2 = extract(rev, make_meta(9), store2)
    assert named2["instanceOf"] == store2.categorical_dicts["instanceOf"]["Q42"]


def test_unseen_item_frequency_is_zero():
    store = small_store()
    rev = make_rev(9, item="Q999")
    named = extract(rev, make_meta(9), store)
    assert named["itemidFrequency"] == 0


def test_geo_and_frequency_mutual_exclusion():
    store = small_store()
    cases = [
        (make_rev(1, user=("U", 3)), make_meta(1)),
        (make_rev(2, ip="1.1.1.1"), make_meta_geo(2, 2, country="FR")),
    ]
    for rev, meta in cases:
        named = extract(rev, meta, store)
        if named["isRegUser"]:
            for slot in ("userContinent", "userCountry", "userRegion",
                         "userCounty", "userCity", "userTimeZone"):
                assert named[slot] is None
        else:
            assert named["useridFrequency"] is None


def test_tag_one_hots():
    store = small_store()
    rev = make_rev(9)
    named = extract(rev, make_meta(9, tags=("x", "unknown")), store)
    assert named["tag:x"] is True
    assert named["tag:y"] is False
    onehots = [v for k, v in named.items() if k.startswith("tag:")]
    assert sum(onehots) == 1  # |tags & vocabulary|


# ---------------------------------------------------------------- schema

def test_schema_assemble_round_trip():
    store = small_store()
    schema = store.schema
    assert len(schema) == len(BASE_SLOTS) + len(store.tag_vocabulary)
    rev = make_rev(9, comment="/* wbsetlabel-set:1|en */ Ada")
    named = extract(rev, make_meta(9, tags=("x",)), store)
    vector = schema.assemble(named)
    assert len(vector) == len(schema)
    assert vector[schema.index["isRegUser"]] == 1.0
    assert vector[schema.index["tag:x"]] == 1.0


def test_schema_rejects_unknown_name():
    schema = FeatureSchema.with_tags([])
    with pytest.raises(SchemaMismatch):
        schema.assemble({"definitelyNotASlot": 1.0})


def test_all_missing_gives_all_placeholder():
    schema = FeatureSchema.with_tags([])
    vector = schema.assemble({})
    assert (vector == -1.0).all()


def test_schema_hash_changes_with_tags():
    a = FeatureSchema.with_tags([])
    b = FeatureSchema.with_tags(["x"])
    assert a.hash_hex() != b.hash_hex()


def test_batch_and_protocol_vectors_bit_identical():
    store = small_store()
    rev = make_rev(9, ip="1.2.3.4", comment="/* wbsetlabel-set:1|en */ Ada")
    meta = make_meta_geo(9, 4, country="DE")
    v1 = store.schema.assemble(extract(rev, meta, store))
    v2 = store.schema.assemble(extract(rev, meta, store))
    assert (v1 == v2).all()


# ---------------------------------------------------------------- persistence

def test_state_round_trip(tmp_path):
    store = small_store()
    path = tmp_path / "state"
    save_state(store, path)
    loaded = load_state(path)
    assert loaded == store
    assert loaded.schema.hash_hex() == store.schema.hash_hex()
    # encoding behaves identically after the round trip
    assert loaded.encode("lang", "en") == store.encode("lang", "en")
    assert loaded.encode("lang", "zz") == -1


def test_state_round_trip_with_awkward_strings(tmp_path):
    pairs = [
        (make_rev(1, user=("Tab\tUser", 5), item="Q1",
                  comment="/* wbsetlabel-set:1|en */ X"),
         make_meta(1, tags=("weird tag", "a|b"))),
        (make_rev(2, ip="8.8.8.8"),
         make_meta_geo(2, 2, city="Washington, D.C.", country="US")),
    ]
    store = build_state_store(pairs)
    path = tmp_path / "state"
    save_state(store, path)
    assert load_state(path) == store


def test_truncated_state_rejected(tmp_path):
    store = small_store()
    path = tmp_path / "state"
    save_state(store, path)
    target = path / "user_counts.tsv"
    target.write_text(target.read_text()[:-3])
    with pytest.raises(CorruptState):
        load_state(path)


def test_missing_state_file_rejected(tmp_path):
    store = small_store()
    path = tmp_path / "state"
    save_state(store, path)
    (path / "tags.txt").unlink()
    with pytest.raises(CorruptState):
        load_state(path)


def test_version_mismatch_rejected(tmp_path):
    store = small_store()
    path = tmp_path / "state"
    save_state(store, path)
    manifest = (path / "MANIFEST").read_text().replace("vandalstate 1", "vandalstate 99")
    (path / "MANIFEST").write_text(manifest)
    with pytest.raises(CorruptState, match="version"):
        load_state(path)


def test_unfrozen_store_cannot_be_saved(tmp_path):
    with pytest.raises(CorruptState):
        save_state(StateStore(), tmp_path / "state")


def test_state_files_follow_layout(tmp_path):
    store = small_store()
    path = tmp_path / "state"
    save_state(store, path)
    names = {p.name for p in path.iterdir()}
    assert {"MANIFEST", "schema.tsv", "user_counts.tsv", "item_counts.tsv",
            "privileged.txt", "tags.txt", "bots.txt"} <= names
    for var in CATEGORICAL_VARS:
        assert f"dict_{var}.tsv" in names
