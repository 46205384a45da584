"""Decompose auto-generated revision comments.

The structured form is `/* action[-subaction][:p1|p2|...] */ tail`; anything
that does not match is treated as free text and becomes the tail wholesale.
Derived fields pull the edit language, locale, affected entity part, and
change count out of the params, and classify the referenced user of an
undo/restore/rollback.
"""

import ipaddress
import re
from dataclasses import dataclass, field, replace

# suffixes of site-qualified language params like "eswiki" / "enwikiquote"
SITELINK_SUFFIXES = (
    "wikibooks", "wikinews", "wikiquote", "wikisource",
    "wikiversity", "wikivoyage", "wiktionary", "wiki",
)

# action families whose target is a fixed entity part
ACTION_FAMILY_PROPERTY = {
    "wbsetlabel": "label",
    "wbsetdescription": "description",
    "wbsetaliases": "alias",
}

REVERT_ACTIONS = {"undo", "restore", "rollback"}

_HEAD_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_LANG_RE = re.compile(r"^([A-Za-z]{2,12})(?:[_-]([A-Za-z0-9]{1,12}))?$")
_PROPERTY_RE = re.compile(r"^P[0-9]+$")
_INT_RE = re.compile(r"^[0-9]+$")
_CONTRIB_LINK_RE = re.compile(r"\[\[Special:Contributions/([^|\]]+)")
_USER_LINK_RE = re.compile(r"\[\[User:([^|\]]+)")


@dataclass(frozen=True)
class ParsedComment:
    action: str | None = None
    subaction: str | None = None
    params: tuple[str, ...] = ()
    tail: str = ""
    lang: str | None = None
    lang_locale: str | None = None
    affected_property: str | None = None
    change_count: int | None = None
    raw: str = field(default="", compare=False, repr=False)


def parse_comment(comment: str) -> ParsedComment:
    """Total function: any string parses, unstructured input becomes tail."""
    if comment.startswith("/* "):
        end = comment.find(" */", 3)
        if end >= 0:
            body = comment[3:end]
            rest = comment[end + 3:]
            tail = rest[1:] if rest.startswith(" ") else rest
            colon = body.find(":")
            if colon >= 0:
                head, params_str = body[:colon], body[colon + 1:]
                params = tuple(params_str.split("|"))
            else:
                head, params = body, ()
            dash = head.find("-")
            if dash >= 0:
                action, subaction = head[:dash], head[dash + 1:]
            else:
                action, subaction = head, None
            if _HEAD_RE.match(action) and (subaction is None or _HEAD_RE.match(subaction)):
                return ParsedComment(action=action, subaction=subaction,
                                     params=params, tail=tail, raw=comment)
    return ParsedComment(tail=comment, raw=comment)


def reconstruct_comment(pc: ParsedComment) -> str:
    """Inverse of parse_comment for structured parses."""
    if pc.action is None:
        return pc.tail
    head = pc.action if pc.subaction is None else f"{pc.action}-{pc.subaction}"
    body = head if not pc.params else f"{head}:{'|'.join(pc.params)}"
    return f"/* {body} */ {pc.tail}" if pc.tail else f"/* {body} */"


def _match_site_suffix(param):
    for suffix in SITELINK_SUFFIXES:
        if param.endswith(suffix):
            prefix = param[: len(param) - len(suffix)]
            if 2 <= len(prefix) <= 12 and prefix.isalpha():
                return prefix.lower(), suffix
    return None


def derive_language_fields(pc: ParsedComment) -> ParsedComment:
    """Fill lang / lang_locale / affected_property from action and params."""
    lang = None
    locale = None
    prop = None

    if pc.action in ACTION_FAMILY_PROPERTY:
        prop = ACTION_FAMILY_PROPERTY[pc.action]

    for param in pc.params:
        if _PROPERTY_RE.match(param):
            if prop is None:
                prop = param
            continue
        site = _match_site_suffix(param)
        if site is not None:
            code, suffix = site
            if lang is None:
                lang = code
            if prop is None:
                prop = suffix
            continue
        if lang is None:
            m = _LANG_RE.match(param)
            if m:
                lang = m.group(1).lower()
                if m.group(2):
                    locale = m.group(2).lower()

    return replace(pc, lang=lang, lang_locale=locale, affected_property=prop)


def extract_change_count(pc: ParsedComment) -> int | None:
    """First parameter that is a pure decimal integer."""
    for param in pc.params:
        if _INT_RE.match(param):
            return int(param)
    return None


def _referenced_user(tail: str) -> str | None:
    m = _CONTRIB_LINK_RE.search(tail)
    if m:
        return m.group(1).strip()
    m = _USER_LINK_RE.search(tail)
    if m:
        return m.group(1).strip()
    return None


def _is_ip(name: str) -> bool:
    try:
        ipaddress.ip_address(name)
        return True
    except ValueError:
        return False


def classify_prev_user(pc: ParsedComment, store=None) -> str | None:
    """For undo/restore/rollback revisions, kind of the reverted user:
    'registered', 'anonymous' or 'bot'; None for other actions."""
    if pc.action not in REVERT_ACTIONS:
        return None
    name = _referenced_user(pc.tail)
    if name is None:
        return None
    if _is_ip(name):
        return "anonymous"
    bot_names = getattr(store, "bot_names", None) or set()
    if name in bot_names or name.lower().endswith("bot"):
        return "bot"
    return "registered"


def analyze_comment(comment: str) -> ParsedComment:
    """parse + derive + change count in one pass; prev-user classification is
    separate because it needs the state store."""
    pc = derive_language_fields(parse_comment(comment))
    return replace(pc, change_count=extract_change_count(pc))
