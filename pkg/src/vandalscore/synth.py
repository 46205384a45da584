"""Deterministic synthetic labeled corpus generator.

Emits revision XML, metadata CSV, truth CSV, and the privileged/bot user
lists for desk-scale runs. Vandalism is generated at the session level and
correlates with anonymity, offensive words, shouting, textual edits and
low language agreement; sessions that open with an entity creation are
never vandalism. Labels are per-session (a rollback reverts the whole
session), while only part of a vandal session carries overt markers, which
leaves headroom for the session rolling mean.
"""

import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from xml.sax.saxutils import escape

from .content import load_bad_words
from .errors import BadConfig
from .ingest import METADATA_HEADER, TRUTH_HEADER

LANGS = ("en", "es", "de", "fr", "it", "ru")

_GEO = {
    "EU": (("DE", "Berlin", "Europe/Berlin"), ("FR", "Paris", "Europe/Paris"),
           ("IT", "Rome", "Europe/Rome"), ("PL", "Warsaw", "Europe/Warsaw"),
           ("ES", "Madrid", "Europe/Madrid")),
    "NA": (("US", "Denver", "America/Denver"), ("US", "Chicago", "America/Chicago"),
           ("CA", "Toronto", "America/Toronto"), ("MX", "Puebla", "America/Mexico_City")),
    "AS": (("JP", "Osaka", "Asia/Tokyo"), ("IN", "Pune", "Asia/Kolkata"),
           ("TR", "Izmir", "Europe/Istanbul")),
    "SA": (("BR", "Recife", "America/Recife"), ("AR", "Cordoba", "America/Cordoba")),
    "OC": (("AU", "Perth", "Australia/Perth"), ("NZ", "Wellington", "Pacific/Auckland")),
}

_KINDS = ("Q5", "Q515", "Q11424", "Q571", "Q16521")
_TAG_POOL = ("mobile-edit", "visual-editor", "api-edit", "new-editor",
             "possible-vandalism", "mass-edit")

_SHOUTS = ("HAHAHA", "LOL", "WAS HERE", "IS THE BEST", "IS FAKE", "DELETE THIS",
           "NOBODY CARES", "THIS IS WRONG", "U MAD")
_GIBBERISH = "asdfjkl qwerty zxcvb aslkdj"


@dataclass
class SynthConfig:
    n: int = 1000
    seed: int = 7
    vandalism_rate: float = 0.01
    anon_fraction: float = 0.30
    bot_fraction: float = 0.18
    creation_session_rate: float = 0.05
    marker_rate: float = 0.80
    benign_noise_rate: float = 0.015
    mean_session_len: float = 2.2
    start: datetime = field(default_factory=lambda: datetime(2015, 5, 1, tzinfo=timezone.utc))
    end: datetime = field(default_factory=lambda: datetime(2016, 7, 1, tzinfo=timezone.utc))
    n_registered: int = 400
    n_privileged: int = 12
    n_bots: int = 25
    n_anon: int = 600

    def validate(self):
        if self.n < 1:
            raise BadConfig("n must be >= 1")
        if not 0.0 <= self.vandalism_rate <= 1.0:
            raise BadConfig("vandalism_rate must be in [0, 1]")
        if self.anon_fraction + self.bot_fraction > 1.0:
            raise BadConfig("anon_fraction + bot_fraction must be <= 1")
        if self.end <= self.start:
            raise BadConfig("end must be after start")
        if self.mean_session_len < 1.0:
            raise BadConfig("mean_session_len must be >= 1")


def _load_words(lang):
    from importlib import resources

    text = (resources.files("vandalscore") / "data" / "langmodel" / f"{lang}.txt") \
        .read_text("utf-8")
    words = []
    for line in text.splitlines():
        if line.startswith("#"):
            continue
        words.extend(w for w in "".join(
            c if c.isalpha() else " " for c in line).split() if len(w) > 1)
    return words


class _Phrases:
    def __init__(self, rng):
        self.rng = rng
        self.words = {lang: _load_words(lang) for lang in LANGS}

    def phrase(self, lang, lo, hi, title=False):
        words = self.words[lang]
        k = self.rng.randint(lo, hi)
        i = self.rng.randrange(len(words) - k)
        out = " ".join(words[i:i + k])
        return out.title() if title else out


def _vandal_tail(rng, bad_words):
    roll = rng.random()
    if roll < 0.45:
        words = [rng.choice(bad_words) for _ in range(rng.randint(1, 3))]
        text = " ".join(words)
        if rng.random() < 0.7:
            text = text.upper()
        if rng.random() < 0.5:
            text = f"{rng.choice(_SHOUTS)} {text}"
        return text
    if roll < 0.70:
        mash = "".join(rng.choice(_GIBBERISH) for _ in range(rng.randint(8, 20)))
        return mash + "!" * rng.randint(2, 6)
    if roll < 0.85:
        return f"{rng.choice(_SHOUTS)} {rng.choice(_SHOUTS)}"
    return f"buy cheap stuff www.{rng.choice(['spam', 'deals', 'click'])}{rng.randint(1, 99)}.example"


class _Item:
    __slots__ = ("qid", "kind", "labels")

    def __init__(self, qid, kind, labels):
        self.qid = qid
        self.kind = kind
        self.labels = labels  # lang -> canonical title


def generate(config: SynthConfig, xml_path, meta_path, truth_path,
             privileged_path=None, bots_path=None):
    """Write the corpus files; returns summary statistics."""
    config.validate()
    rng = random.Random(config.seed)
    phrases = _Phrases(rng)
    bad_words = sorted(load_bad_words())

    registered = [f"Editor{i}" for i in range(config.n_registered)]
    privileged = [f"Curator{i}" for i in range(config.n_privileged)]
    bots = [f"{name}Bot" for name in
            ("Task", "Fix", "Claim", "Merge", "Label", "Patrol")][: config.n_bots]
    bots += [f"Worker{i}Bot" for i in range(max(0, config.n_bots - len(bots)))]
    all_registered = registered + privileged + bots
    user_ids = {name: 1000 + i for i, name in enumerate(all_registered)}

    anon_pool = []
    for _ in range(config.n_anon):
        ip = f"{rng.randint(1, 223)}.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"
        continent = rng.choice(sorted(_GEO))
        country, city, tz = rng.choice(_GEO[continent])
        region = f"{country}-R{rng.randint(1, 5)}"
        county = f"{country}-C{rng.randint(1, 9)}"
        anon_pool.append((ip, continent, country, region, county, city, tz))

    n_items = max(40, config.n // 25)
    items = []
    for i in range(n_items):
        labels = {lang: phrases.phrase(lang, 1, 3, title=True) for lang in LANGS}
        items.append(_Item(f"Q{100 + i}", rng.choice(_KINDS), labels))
    human_items = [it for it in items if it.kind == "Q5"] or items

    span = (config.end - config.start).total_seconds()
    base_rate = config.vandalism_rate
    type_mult = {"anon": 3.2, "reg": 0.35, "bot": 0.02}

    stats = {"revisions": 0, "vandal_revisions": 0, "sessions": 0,
             "creation_sessions": 0,
             "by_type": {"anon": [0, 0], "reg": [0, 0], "bot": [0, 0]}}

    xml_fh = open(xml_path, "w", encoding="utf-8", newline="\n")
    meta_fh = open(meta_path, "w", encoding="utf-8", newline="\n")
    truth_fh = open(truth_path, "w", encoding="utf-8", newline="\n")
    meta_fh.write(",".join(METADATA_HEADER) + "\n")
    truth_fh.write(",".join(TRUTH_HEADER) + "\n")

    geometric_p = 1.0 / config.mean_session_len
    rev_index = 0
    session_id = 0
    try:
        while rev_index < config.n:
            session_id += 1
            roll = rng.random()
            if roll < config.anon_fraction:
                user_type = "anon"
            elif roll < config.anon_fraction + config.bot_fraction:
                user_type = "bot"
            else:
                user_type = "reg"

            is_creation = rng.random() < config.creation_session_rate
            vandal = (not is_creation) and rng.random() < min(
                1.0, base_rate * type_mult[user_type])

            if user_type == "anon":
                anon = rng.choice(anon_pool)
                user = None
            elif user_type == "bot":
                anon = None
                user = rng.choice(bots)
            else:
                anon = None
                pool = registered + privileged
                user = rng.choice(pool)

            if vandal and rng.random() < 0.6:
                item = rng.choice(human_items)
            else:
                item = rng.choice(items)

            length = 1 + min(9, int(math.log(max(rng.random(), 1e-12)) /
                                    math.log(max(1.0 - geometric_p, 1e-12))))
            length = min(length, config.n - rev_index)
            if length <= 0:
                break

            stats["sessions"] += 1
            stats["creation_sessions"] += is_creation
            for j in range(length):
                rev_index += 1
                rid = 1000 + rev_index
                ts = config.start + timedelta(
                    seconds=int((rev_index - 1) * span / config.n))
                marked = vandal and rng.random() < config.marker_rate
                noisy_benign = (not vandal) and rng.random() < config.benign_noise_rate
                creation_rev = is_creation and j == 0
                lang = rng.choice(LANGS)

                comment, entity_labels = _make_edit(
                    rng, phrases, bad_words, item, lang, user_type,
                    creation_rev, marked, noisy_benign, rid, all_registered, anon_pool)

                entity = _entity_doc(item, entity_labels)
                minor = rng.random() < (0.6 if user_type == "bot" else 0.05)
                tags = _tags(rng, user_type, marked)

                _write_revision_xml(xml_fh, rid, ts, user, user_ids.get(user) if user else None,
                                    anon[0] if anon else None, minor, comment, entity)
                geo_cells = anon[1:] if anon else ("",) * 6
                meta_fh.write(",".join([
                    str(rid), str(session_id), *geo_cells, "|".join(sorted(tags))]) + "\n")
                truth_fh.write(f"{rid},{'true' if vandal else 'false'}\n")

                stats["revisions"] += 1
                stats["vandal_revisions"] += vandal
                stats["by_type"][user_type][0] += 1
                stats["by_type"][user_type][1] += vandal
    finally:
        xml_fh.close()
        meta_fh.close()
        truth_fh.close()

    if privileged_path is not None:
        with open(privileged_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{u}\n" for u in privileged)
    if bots_path is not None:
        with open(bots_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{b}\n" for b in bots)
    return stats


def _make_edit(rng, phrases, bad_words, item, lang, user_type, creation_rev,
               marked, noisy_benign, rid, all_registered, anon_pool):
    """Comment string plus the post-edit label overrides for the entity."""
    labels = dict(item.labels)

    if creation_rev:
        return f"/* wbeditentity-create:0| */ {labels['en']}", labels

    if marked:
        tail = _vandal_tail(rng, bad_words)
        kind = rng.random()
        if kind < 0.45:
            labels[lang] = tail
            return f"/* wbsetlabel-set:1|{lang} */ {tail}", labels
        if kind < 0.85:
            return f"/* wbsetdescription-set:1|{lang} */ {tail}", labels
        return f"/* wbsetsitelink-add:1|{lang}wiki */ {tail}", labels

    if noisy_benign:
        word = rng.choice(bad_words)
        tail = f"{phrases.phrase(lang, 1, 2)} {word.upper() if rng.random() < 0.5 else word}"
        return f"/* wbsetdescription-set:1|{lang} */ {tail}", labels

    # regular benign edit mix depends on the editor type
    roll = rng.random()
    if user_type == "bot":
        if roll < 0.55:
            prop = rng.choice(("P31", "P21", "P569", "P106", "P279"))
            value = f"Q{rng.randint(2, 900)}"
            return f"/* wbsetclaim-create:1|{prop} */ {prop}: {value}", labels
        if roll < 0.8:
            return f"/* wbsetsitelink-add:1|{lang}wiki */ {labels[lang]}", labels
        return "/* wbeditentity-update:0| */", labels
    if roll < 0.30:
        return f"/* wbsetlabel-set:1|{lang} */ {labels[lang]}", labels
    if roll < 0.55:
        tail = phrases.phrase(lang, 3, 6)
        return f"/* wbsetdescription-set:1|{lang} */ {tail}", labels
    if roll < 0.70:
        tail = phrases.phrase(lang, 1, 3, title=True)
        return f"/* wbsetaliases-add:1|{lang} */ {tail}", labels
    if roll < 0.85:
        return f"/* wbsetsitelink-add:1|{lang}wiki */ {labels[lang]}", labels
    if roll < 0.93:
        prop = rng.choice(("P31", "P21", "P569", "P106"))
        return f"/* wbsetclaim-create:1|{prop} */ {prop}: Q{rng.randint(2, 900)}", labels
    prev = rng.choice(all_registered) if rng.random() < 0.6 else rng.choice(anon_pool)[0]
    return (f"/* undo:0|{max(1, rid - rng.randint(1, 40))} */ Undo revision by "
            f"[[Special:Contributions/{prev}|{prev}]]"), labels


def _entity_doc(item, labels):
    doc = {
        "id": item.qid,
        "labels": {lang: {"language": lang, "value": labels[lang]} for lang in LANGS[:3]},
        "sitelinks": {f"{lang}wiki": {"site": f"{lang}wiki", "title": item.labels[lang]}
                      for lang in LANGS[:3]},
        "claims": {"P31": [{"mainsnak": {
            "snaktype": "value", "property": "P31",
            "datavalue": {"value": {"id": item.kind}, "type": "wikibase-entityid"}}}]},
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def _tags(rng, user_type, marked):
    tags = set()
    if user_type == "bot" and rng.random() < 0.7:
        tags.add("api-edit")
    if user_type == "anon" and rng.random() < 0.35:
        tags.add("mobile-edit")
    if marked and rng.random() < 0.15:
        tags.add("possible-vandalism")
    if rng.random() < 0.08:
        tags.add(rng.choice(_TAG_POOL))
    return tags


def _write_revision_xml(fh, rid, ts, user, user_id, ip, minor, comment, entity_json):
    fh.write("<revision>\n")
    fh.write(f"  <id>{rid}</id>\n")
    fh.write(f"  <timestamp>{ts.strftime('%Y-%m-%dT%H:%M:%SZ')}</timestamp>\n")
    if user is not None:
        fh.write(f"  <contributor><username>{escape(user)}</username>"
                 f"<id>{user_id}</id></contributor>\n")
    else:
        fh.write(f"  <contributor><ip>{ip}</ip></contributor>\n")
    if minor:
        fh.write("  <minor/>\n")
    fh.write(f"  <comment>{escape(comment)}</comment>\n")
    fh.write(f"  <text>{escape(entity_json)}</text>\n")
    fh.write("</revision>\n")
