"""Context features, categorical encoding, the fixed feature schema, and
the persistent state store.

Every feature lives in a fixed slot; missingness is always the placeholder
-1, which is out of domain for every variable (codes and counts are >= 0,
ratios are in [0,1]). Categorical codes are dense, assigned in first-seen
order while the store is building; after freeze, unseen values map to the
placeholder.
"""

import hashlib
import os
import shutil
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .comments import classify_prev_user
from .errors import CorruptState, EmptyStream, SchemaMismatch, UnknownVariable

PLACEHOLDER = -1.0

STATE_FORMAT = "vandalstate 1"

CATEGORICAL_VARS = (
    "mainAlphabet", "action", "subaction", "lang", "langLocale",
    "affectedProperty", "prevUser", "userContinent", "userCountry",
    "userRegion", "userCounty", "userCity", "userTimeZone",
    "itemid", "userid", "instanceOf", "tagsJoined",
)

BASE_SLOTS = (
    # character level
    ("upperCaseRatio", "ratio"),
    ("lowerCaseRatio", "ratio"),
    ("alphanumericRatio", "ratio"),
    ("digitRatio", "ratio"),
    ("punctuationRatio", "ratio"),
    ("bracketRatio", "ratio"),
    ("symbolRatio", "ratio"),
    ("whitespaceRatio", "ratio"),
    ("latinRatio", "ratio"),
    ("nonLatinRatio", "ratio"),
    ("longestCharacterSequence", "count"),
    ("mainAlphabet", "categorical"),
    # word level
    ("lowerCaseWordRatio", "ratio"),
    ("upperCaseWordRatio", "ratio"),
    ("badWordRatio", "ratio"),
    ("languageWordRatio", "ratio"),
    ("longestWord", "count"),
    ("containsLanguageWord", "boolean"),
    ("containsURL", "boolean"),
    # sentence level
    ("commentTailLength", "count"),
    ("fuzzyTotal", "count"),
    ("fuzzyPartial", "count"),
    ("langMatchProb", "ratio"),
    # user
    ("isRegUser", "boolean"),
    ("isPrivUser", "boolean"),
    ("useridFrequency", "count"),
    ("userContinent", "categorical"),
    ("userCountry", "categorical"),
    ("userRegion", "categorical"),
    ("userCounty", "categorical"),
    ("userCity", "categorical"),
    ("userTimeZone", "categorical"),
    # item
    ("itemidFrequency", "count"),
    ("itemid", "categorical"),
    # revision
    ("action", "categorical"),
    ("subaction", "categorical"),
    ("lang", "categorical"),
    ("langLocale", "categorical"),
    ("affectedProperty", "categorical"),
    ("userid", "categorical"),
    ("isMinor", "boolean"),
    ("changeCount", "count"),
    ("instanceOf", "categorical"),
    ("jsonLen", "count"),
    ("hour", "count"),
    ("prevUser", "categorical"),
    ("tagsJoined", "categorical"),
)

TAG_SLOT_PREFIX = "tag:"


class FeatureSchema:
    """Fixed-order slot descriptors; tag one-hot slots come last."""

    def __init__(self, slots):
        self.slots = tuple((str(n), str(k)) for n, k in slots)
        self.index = {name: i for i, (name, _) in enumerate(self.slots)}
        if len(self.index) != len(self.slots):
            raise SchemaMismatch("duplicate slot names in schema")

    def __len__(self):
        return len(self.slots)

    def __eq__(self, other):
        return isinstance(other, FeatureSchema) and self.slots == other.slots

    @classmethod
    def with_tags(cls, tag_vocabulary):
        slots = list(BASE_SLOTS)
        slots.extend((TAG_SLOT_PREFIX + t, "boolean") for t in tag_vocabulary)
        return cls(slots)

    def hash_hex(self) -> str:
        h = hashlib.sha256()
        for name, kind in self.slots:
            h.update(f"{name}\t{kind}\n".encode())
        return h.hexdigest()

    def assemble(self, named: dict) -> np.ndarray:
        """Place named feature values into the fixed slots; absent names
        stay at the placeholder, unknown names are an error."""
        vector = np.full(len(self.slots), PLACEHOLDER, dtype=np.float64)
        for name, value in named.items():
            i = self.index.get(name)
            if i is None:
                raise SchemaMismatch(f"unknown feature name {name!r}")
            if value is None:
                continue
            vector[i] = float(value)
        return vector


@dataclass
class StateStore:
    """Frozen frequency tables, categorical dictionaries, and vocabularies."""

    user_edit_counts: dict = field(default_factory=dict)
    item_edit_counts: dict = field(default_factory=dict)
    privileged_users: set = field(default_factory=set)
    categorical_dicts: dict = field(default_factory=lambda: {v: {} for v in CATEGORICAL_VARS})
    tag_vocabulary: list = field(default_factory=list)
    bot_names: set = field(default_factory=set)
    frozen: bool = False

    def encode(self, variable, value):
        try:
            table = self.categorical_dicts[variable]
        except KeyError:
            raise UnknownVariable(f"no categorical variable {variable!r}") from None
        if value is None:
            return int(PLACEHOLDER)
        value = str(value)
        code = table.get(value)
        if code is not None:
            return code
        if self.frozen:
            return int(PLACEHOLDER)
        code = len(table)
        table[value] = code
        return code

    def observe_tags(self, tags):
        if self.frozen:
            return
        # sorted within one revision keeps first-seen order deterministic
        for t in sorted(tags):
            if t not in self._tag_set:
                self._tag_set.add(t)
                self.tag_vocabulary.append(t)

    def __post_init__(self):
        self._tag_set = set(self.tag_vocabulary)
        self._schema = None

    def freeze(self):
        self.frozen = True
        self._schema = None

    @property
    def schema(self) -> FeatureSchema:
        if self._schema is None:
            self._schema = FeatureSchema.with_tags(self.tag_vocabulary)
        return self._schema

    def __eq__(self, other):
        if not isinstance(other, StateStore):
            return NotImplemented
        return (
            self.user_edit_counts == other.user_edit_counts
            and self.item_edit_counts == other.item_edit_counts
            and self.privileged_users == other.privileged_users
            and self.categorical_dicts == other.categorical_dicts
            and self.tag_vocabulary == other.tag_vocabulary
            and self.bot_names == other.bot_names
            and self.frozen == other.frozen
        )


def _instance_of(entity):
    """First value id of the entity's P31 claim, or None."""
    if not isinstance(entity, dict):
        return None
    claims = entity.get("claims")
    if not isinstance(claims, dict):
        return None
    p31 = claims.get("P31")
    if not isinstance(p31, list) or not p31:
        return None
    snak = p31[0]
    for path in (("mainsnak", "datavalue", "value", "id"), ("datavalue", "value", "id")):
        node = snak
        for key in path:
            node = node.get(key) if isinstance(node, dict) else None
            if node is None:
                break
        if isinstance(node, str):
            return node
    return None


def categorical_values(rev, meta, pc, main_alphabet, store) -> dict:
    """Raw string values of every categorical variable for one revision.

    Shared by the store-building pass (dictionary growth) and the scoring
    path, so training dictionaries always cover what scoring encodes.
    """
    registered = rev.is_registered
    geo = meta.geo if (meta.geo is not None and not registered) else None
    return {
        "mainAlphabet": main_alphabet,
        "action": pc.action,
        "subaction": pc.subaction,
        "lang": pc.lang,
        "langLocale": pc.lang_locale,
        "affectedProperty": pc.affected_property,
        "prevUser": classify_prev_user(pc, store),
        "userContinent": geo.continent if geo else None,
        "userCountry": geo.country if geo else None,
        "userRegion": geo.region if geo else None,
        "userCounty": geo.county if geo else None,
        "userCity": geo.city if geo else None,
        "userTimeZone": geo.timezone if geo else None,
        "itemid": rev.item_id or None,
        "userid": str(rev.user_id) if (registered and rev.user_id is not None) else None,
        "instanceOf": _instance_of(rev.entity),
        "tagsJoined": "|".join(sorted(meta.tags)) if meta.tags else None,
    }


def register_revision(store: StateStore, rev, meta, pc, main_alphabet):
    """Training-pass bookkeeping: frequency counts, tag vocabulary, and
    categorical dictionary growth."""
    if rev.is_registered:
        store.user_edit_counts[rev.user_name] = store.user_edit_counts.get(rev.user_name, 0) + 1
    if rev.item_id:
        store.item_edit_counts[rev.item_id] = store.item_edit_counts.get(rev.item_id, 0) + 1
    store.observe_tags(meta.tags)
    for variable, value in categorical_values(rev, meta, pc, main_alphabet, store).items():
        store.encode(variable, value)


def named_features(rev, meta, pc, char_f, word_f, sent_f, store: StateStore) -> dict:
    """Complete named feature set for one revision, categoricals encoded."""
    registered = rev.is_registered
    cats = categorical_values(rev, meta, pc, char_f.main_alphabet, store)
    named = {name: store.encode(name, value) if value is not None else None
             for name, value in cats.items()}

    named.update({
        "upperCaseRatio": char_f.upper_case_ratio,
        "lowerCaseRatio": char_f.lower_case_ratio,
        "alphanumericRatio": char_f.alphanumeric_ratio,
        "digitRatio": char_f.digit_ratio,
        "punctuationRatio": char_f.punctuation_ratio,
        "bracketRatio": char_f.bracket_ratio,
        "symbolRatio": char_f.symbol_ratio,
        "whitespaceRatio": char_f.whitespace_ratio,
        "latinRatio": char_f.latin_ratio,
        "nonLatinRatio": char_f.non_latin_ratio,
        "longestCharacterSequence": char_f.longest_character_sequence,
        "lowerCaseWordRatio": word_f.lower_case_word_ratio,
        "upperCaseWordRatio": word_f.upper_case_word_ratio,
        "badWordRatio": word_f.bad_word_ratio,
        "languageWordRatio": word_f.language_word_ratio,
        "longestWord": word_f.longest_word,
        "containsLanguageWord": word_f.contains_language_word,
        "containsURL": word_f.contains_url,
        "commentTailLength": sent_f.comment_tail_length,
        "fuzzyTotal": sent_f.fuzzy_total,
        "fuzzyPartial": sent_f.fuzzy_partial,
        "langMatchProb": sent_f.lang_match_prob,
        "isRegUser": registered,
        "isPrivUser": registered and rev.user_name in store.privileged_users,
        "useridFrequency": store.user_edit_counts.get(rev.user_name, 0) if registered else None,
        "itemidFrequency": store.item_edit_counts.get(rev.item_id, 0),
        "isMinor": rev.is_minor,
        "changeCount": pc.change_count,
        "jsonLen": len(rev.entity_text),
        "hour": rev.timestamp.hour,
    })
    for t in store.tag_vocabulary:
        named[TAG_SLOT_PREFIX + t] = t in meta.tags
    return named


# ------------------------------------------------------------------ persistence

_STATE_FILES = ("schema.tsv", "user_counts.tsv", "item_counts.tsv",
                "privileged.txt", "tags.txt", "bots.txt")


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):
            nxt = s[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _render_state_files(store: StateStore) -> dict:
    files = {}
    files["schema.tsv"] = "".join(
        f"{i}\t{name}\t{kind}\n" for i, (name, kind) in enumerate(store.schema.slots))
    files["user_counts.tsv"] = "".join(
        f"{_escape(k)}\t{v}\n" for k, v in sorted(store.user_edit_counts.items()))
    files["item_counts.tsv"] = "".join(
        f"{_escape(k)}\t{v}\n" for k, v in sorted(store.item_edit_counts.items()))
    files["privileged.txt"] = "".join(
        f"{_escape(u)}\n" for u in sorted(store.privileged_users))
    files["tags.txt"] = "".join(f"{_escape(t)}\n" for t in store.tag_vocabulary)
    files["bots.txt"] = "".join(f"{_escape(b)}\n" for b in sorted(store.bot_names))
    for variable in CATEGORICAL_VARS:
        table = store.categorical_dicts[variable]
        rows = sorted(table.items(), key=lambda kv: kv[1])  # dense code order
        files[f"dict_{variable}.tsv"] = "".join(
            f"{_escape(value)}\t{code}\n" for value, code in rows)
    return files


def _checksum(files: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(files):
        h.update(name.encode())
        h.update(b"\0")
        h.update(files[name].encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def save_state(store: StateStore, path):
    """Write the state archive directory; store must be frozen."""
    if not store.frozen:
        raise CorruptState("refusing to save an unfrozen store")
    files = _render_state_files(store)
    manifest = (
        f"format\t{STATE_FORMAT}\n"
        f"schema_hash\t{store.schema.hash_hex()}\n"
        f"checksum\t{_checksum(files)}\n"
    )
    tmp = tempfile.mkdtemp(dir=os.path.dirname(os.path.abspath(path)) or ".",
                           prefix=".state-")
    try:
        for name, body in files.items():
            with open(os.path.join(tmp, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(body)
        with open(os.path.join(tmp, "MANIFEST"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest)
        if os.path.isdir(path):
            backup = path + ".old"
            os.rename(path, backup)
            os.rename(tmp, path)
            shutil.rmtree(backup)
        else:
            os.rename(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def load_state(path) -> StateStore:
    """Read and verify a state archive; raises CorruptState on any damage."""
    manifest_path = os.path.join(path, "MANIFEST")
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = dict(
                line.rstrip("\n").split("\t", 1) for line in fh if "\t" in line)
    except OSError as exc:
        raise CorruptState(f"cannot read MANIFEST: {exc}") from exc
    if manifest.get("format") != STATE_FORMAT:
        raise CorruptState(
            f"state format version mismatch: {manifest.get('format')!r}, "
            f"expected {STATE_FORMAT!r}")

    files = {}
    names = list(_STATE_FILES) + [f"dict_{v}.tsv" for v in CATEGORICAL_VARS]
    for name in names:
        try:
            with open(os.path.join(path, name), encoding="utf-8", newline="") as fh:
                files[name] = fh.read()
        except OSError as exc:
            raise CorruptState(f"missing state file {name}: {exc}") from exc
    if _checksum(files) != manifest.get("checksum"):
        raise CorruptState("state archive checksum mismatch")

    store = StateStore()
    try:
        for line in files["user_counts.tsv"].splitlines():
            k, v = line.split("\t")
            store.user_edit_counts[_unescape(k)] = int(v)
        for line in files["item_counts.tsv"].splitlines():
            k, v = line.split("\t")
            store.item_edit_counts[_unescape(k)] = int(v)
        store.privileged_users = {
            _unescape(l) for l in files["privileged.txt"].splitlines() if l}
        store.bot_names = {_unescape(l) for l in files["bots.txt"].splitlines() if l}
        for t in files["tags.txt"].splitlines():
            if t:
                store.observe_tags([_unescape(t)])
        for variable in CATEGORICAL_VARS:
            table = {}
            for line in files[f"dict_{variable}.tsv"].splitlines():
                value, code = line.rsplit("\t", 1)
                table[_unescape(value)] = int(code)
            codes = sorted(table.values())
            if codes != list(range(len(codes))):
                raise CorruptState(f"dict_{variable}.tsv codes are not dense")
            store.categorical_dicts[variable] = table
    except (ValueError, KeyError) as exc:
        raise CorruptState(f"bad state table: {exc}") from exc

    store.freeze()
    if store.schema.hash_hex() != manifest.get("schema_hash"):
        raise CorruptState("schema hash in MANIFEST does not match tables")
    return store


def build_state_store(pairs, privileged=(), bots=(), analyze=None) -> StateStore:
    """One pass over the chronological training stream; returns a frozen store.

    `analyze` maps a comment string to a ParsedComment (injected to avoid a
    circular import with the pipeline; defaults to comments.analyze_comment).
    """
    from .comments import analyze_comment
    from .content import char_features

    analyze = analyze or analyze_comment
    store = StateStore(privileged_users=set(privileged), bot_names=set(bots))
    count = 0
    for rev, meta in pairs:
        pc = analyze(rev.comment)
        main_alphabet = char_features(pc.tail).main_alphabet
        register_revision(store, rev, meta, pc, main_alphabet)
        count += 1
    if count == 0:
        raise EmptyStream("no revisions in training stream")
    store.freeze()
    return store
