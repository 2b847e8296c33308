"""Statutory reference parsing and canonicalization.

Turns surface citations ("Article 242 of the Local Autonomy Act",
"Articles 1 and 2 of the Law on Coexistence with Martians") into canonical
provision identifiers, and resolves context-dependent aliases ("the Act",
bare "Article 2") against a per-document alias table, optionally falling
back to a provider-issued normalization prompt.

The grammar is an extensible rule set, not a full statute parser: it covers
article-first citations with an "of <Title>" tail, title-first citations
(with or without a comma), bare article references, and the package's own
canonical string format. Parsing never raises; unintelligible text yields an
empty list.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from lkg.errors import MalformedOutput
from lkg.textutil import fold_width, normalize_ws

if TYPE_CHECKING:  # pragma: no cover
    from lkg.providers import ProviderConfig

log = logging.getLogger(__name__)

# Tokens that make a multi-word phrase look like a statute title. A phrase
# consisting of a determiner plus a single generic keyword ("the Act") is an
# alias, not a title.
TITLE_KEYWORDS = frozenset(
    {
        "act",
        "law",
        "ordinance",
        "code",
        "regulation",
        "regulations",
        "rule",
        "rules",
        "constitution",
        "decree",
        "treaty",
        "order",
    }
)

_DETERMINERS = ("the ", "this ", "that ", "said ")


@dataclass(frozen=True)
class ProvisionId:
    """Canonical reference to one statutory provision."""

    law_title: str
    article: int
    paragraph: int | None = None
    item: int | None = None

    def __post_init__(self) -> None:
        if not self.law_title or not self.law_title.strip():
            raise ValueError("law_title must be nonempty")
        if "/" in self.law_title:
            # Keeps canonical_string injective: segments are '/'-separated.
            raise ValueError("law_title must not contain '/'")
        if self.article < 1:
            raise ValueError("article must be a positive integer")
        for name in ("paragraph", "item"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be a positive integer when set")

    def canonical(self) -> str:
        return canonical_string(self)

    @classmethod
    def from_canonical(cls, text: str) -> "ProvisionId":
        match = _CANONICAL_RE.match(text.strip())
        if match is None:
            raise ValueError(f"not a canonical provision string: {text!r}")
        return cls(
            law_title=match.group("title"),
            article=int(match.group("article")),
            paragraph=int(match.group("para")) if match.group("para") else None,
            item=int(match.group("item")) if match.group("item") else None,
        )

    def sort_key(self) -> tuple:
        return (self.law_title, self.article, self.paragraph or 0, self.item or 0)


def canonical_string(provision: ProvisionId) -> str:
    """Render the bit-exact canonical form, injective over valid ids."""
    parts = [f"{provision.law_title}/Art.{provision.article}"]
    if provision.paragraph is not None:
        parts.append(f"Para.{provision.paragraph}")
    if provision.item is not None:
        parts.append(f"Item.{provision.item}")
    return "/".join(parts)


@dataclass(frozen=True)
class ProvisionRef:
    """A parsed, possibly partial reference.

    ``law_title`` is None when the citation names no recognizable statute;
    ``alias_hint`` carries the generic phrase ("the Act") that resolution may
    map through an alias table.
    """

    article: int
    law_title: str | None = None
    paragraph: int | None = None
    item: int | None = None
    alias_hint: str | None = None
    source_text: str = ""

    @property
    def complete(self) -> bool:
        return self.law_title is not None

    def to_id(self) -> ProvisionId:
        if self.law_title is None:
            raise ValueError("cannot build a ProvisionId without a law title")
        return ProvisionId(
            law_title=self.law_title,
            article=self.article,
            paragraph=self.paragraph,
            item=self.item,
        )


# -- grammar -------------------------------------------------------------------

_NUM = r"\d{1,4}"
_PARA_ITEM = (
    rf"(?:\s*,\s*Paragraph\s+(?P<para>{_NUM}))?"
    rf"(?:\s*,\s*Item\s+(?P<item>{_NUM}))?"
)

# "Article 242 of the Local Autonomy Act" / "Articles 1 and 2 of ...".
# The title stops at punctuation, at a follow-on citation, or at the end, so
# chained citations ("... of the X Code and Article 7 of the Y Act") split.
_ARTICLE_OF_RE = re.compile(
    rf"\bArticles?\s+(?P<arts>{_NUM}(?:\s*(?:,|and|or)\s+{_NUM})*)"
    rf"{_PARA_ITEM}"
    rf"\s+of\s+(?P<title>[^,.;:()\n]+?)(?=\s+and\s+Articles?\s+\d|[,.;:()\n]|$)",
    re.IGNORECASE,
)

_TITLE_KEYWORD_PATTERN = r"(?:Act|Law|Ordinance|Code|Regulations?|Rules|Constitution|Decree|Treaty)"
# Title tokens: capitalized words plus a few connectives, so a sentence prefix
# ("The court cited the Local Autonomy Act, Article 242") cannot join in.
_TITLE_WORD = r"(?:[A-Z][\w'\-]*|on|of|the|with|and|for|to|between)"

# "Local Autonomy Act, Article 242" and title-first order without a comma.
_TITLE_FIRST_RE = re.compile(
    rf"\b(?P<title>[A-Z][\w'\-]*(?:\s+{_TITLE_WORD})*?\s+{_TITLE_KEYWORD_PATTERN})"
    rf"\s*,?\s+Articles?\s+(?P<arts>{_NUM}(?:\s*(?:,|and|or)\s+{_NUM})*)"
    rf"{_PARA_ITEM}",
)

# Bare "Article 2" / "Article 2, Paragraph 1" with no statute in sight.
_BARE_ARTICLE_RE = re.compile(
    rf"\bArticles?\s+(?P<arts>{_NUM}(?:\s*(?:,|and|or)\s+{_NUM})*){_PARA_ITEM}",
    re.IGNORECASE,
)

_CANONICAL_RE = re.compile(
    rf"^(?P<title>.+)/Art\.(?P<article>{_NUM})"
    rf"(?:/Para\.(?P<para>{_NUM}))?(?:/Item\.(?P<item>{_NUM}))?$"
)

_NUM_SPLIT_RE = re.compile(rf"{_NUM}")


def _strip_determiner(phrase: str) -> str:
    lowered = phrase.lower()
    for det in _DETERMINERS:
        if lowered.startswith(det):
            return phrase[len(det):]
    return phrase


def _classify_title(phrase: str) -> tuple[str | None, str | None]:
    """Return (law_title, alias_hint) for the phrase following "of"."""
    phrase = normalize_ws(phrase).rstrip(".,;:")
    if not phrase:
        return None, None
    stripped = _strip_determiner(phrase)
    words = stripped.split()
    has_keyword = any(w.lower().rstrip(".,") in TITLE_KEYWORDS for w in words)
    if has_keyword and len(words) >= 2:
        return stripped, None
    # "the Act", "said Ordinance", or a phrase with no statute keyword at all:
    # keep the surface phrase so the alias table can resolve it.
    return None, phrase


def _articles(arts_text: str) -> list[int]:
    return [int(m.group(0)) for m in _NUM_SPLIT_RE.finditer(arts_text)]


def _blank(text: str, start: int, end: int) -> str:
    return text[:start] + " " * (end - start) + text[end:]


def parse_provision_ref(text: str) -> list[ProvisionRef]:
    """Parse statutory references out of free text.

    Conjunctions split into one reference per article number. References with
    no recognizable statute title come back partial (``law_title`` unset).
    Unparseable text yields ``[]``; this function never raises.
    """
    if not text or not text.strip():
        return []
    cleaned = normalize_ws(text)

    canonical = _CANONICAL_RE.match(cleaned)
    if canonical is not None:
        try:
            pid = ProvisionId.from_canonical(cleaned)
        except ValueError:
            pid = None
        if pid is not None:
            return [
                ProvisionRef(
                    article=pid.article,
                    law_title=pid.law_title,
                    paragraph=pid.paragraph,
                    item=pid.item,
                    source_text=cleaned,
                )
            ]

    refs: list[ProvisionRef] = []
    remaining = cleaned

    for match in _ARTICLE_OF_RE.finditer(remaining):
        title, hint = _classify_title(match.group("title"))
        refs.extend(
            _refs_from_match(match, title=title, hint=hint, source=match.group(0))
        )
    remaining = _ARTICLE_OF_RE.sub(lambda m: " " * len(m.group(0)), remaining)

    for match in _TITLE_FIRST_RE.finditer(remaining):
        title, hint = _classify_title(match.group("title"))
        refs.extend(
            _refs_from_match(match, title=title, hint=hint, source=match.group(0))
        )
    remaining = _TITLE_FIRST_RE.sub(lambda m: " " * len(m.group(0)), remaining)

    for match in _BARE_ARTICLE_RE.finditer(remaining):
        refs.extend(
            _refs_from_match(match, title=None, hint=None, source=match.group(0))
        )

    return refs


def _refs_from_match(
    match: re.Match, *, title: str | None, hint: str | None, source: str
) -> list[ProvisionRef]:
    articles = [a for a in _articles(match.group("arts")) if a >= 1]
    para = int(match.group("para")) if match.group("para") else None
    item = int(match.group("item")) if match.group("item") else None
    if len(articles) > 1:
        # Paragraph/item qualifiers only make sense on a single-article cite.
        para = item = None
    return [
        ProvisionRef(
            article=a,
            law_title=title,
            paragraph=para,
            item=item,
            alias_hint=hint,
            source_text=normalize_ws(source),
        )
        for a in articles
    ]


# -- alias tables and statute catalog -------------------------------------------


@dataclass
class AliasTable:
    """Document-scoped map from alias phrase to canonical law title."""

    doc_id: str
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for alias, title in self.aliases.items():
            if not title or not title.strip():
                raise ValueError(f"alias {alias!r} maps to an empty title")
        self._folded = {fold_width(normalize_ws(a)): t for a, t in self.aliases.items()}

    def lookup(self, phrase: str) -> str | None:
        if phrase in self.aliases:
            return self.aliases[phrase]
        return self._folded.get(fold_width(normalize_ws(phrase)))


def load_alias_tables(path: str | Path) -> dict[str, AliasTable]:
    """Load ``{"doc_id": {"alias": "canonical title"}}`` from a JSON file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {doc_id: AliasTable(doc_id, dict(entries)) for doc_id, entries in data.items()}


class StatuteCatalog:
    """Known canonical titles; exact match first, then case/width-insensitive."""

    def __init__(self, titles: Iterable[str]):
        self.titles = [t for t in titles if t and t.strip()]
        self._exact = set(self.titles)
        self._folded = {fold_width(t): t for t in self.titles}

    @classmethod
    def load(cls, path: str | Path) -> "StatuteCatalog":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, dict):
            data = data.get("titles", [])
        return cls(data)

    def match(self, title: str) -> str | None:
        if title in self._exact:
            return title
        return self._folded.get(fold_width(title))


# -- resolution ------------------------------------------------------------------


@dataclass
class ResolutionResult:
    resolved: list[ProvisionId]
    unresolved: list[ProvisionRef]


def resolve(
    partials: Sequence[ProvisionRef],
    aliases: AliasTable | None = None,
    provider: "ProviderConfig | None" = None,
    catalog: StatuteCatalog | None = None,
) -> ResolutionResult:
    """Complete partial references via alias table, catalog, then provider.

    Already-complete references pass through unchanged (modulo catalog
    canonicalization). Unresolvable references are returned tagged
    ``unresolved``; callers must not mint Provision nodes from them.
    """
    resolved: list[ProvisionId] = []
    unresolved: list[ProvisionRef] = []
    for ref in partials:
        title = ref.law_title
        if title is None and ref.alias_hint and aliases is not None:
            title = aliases.lookup(ref.alias_hint)
        if title is None and provider is not None and provider.mode == "remote":
            title = _provider_title(ref, provider)
        if title is None:
            unresolved.append(ref)
            continue
        if catalog is not None:
            title = catalog.match(title) or title
        resolved.append(replace(ref, law_title=title, alias_hint=None).to_id())
    return ResolutionResult(resolved=resolved, unresolved=unresolved)


def _provider_title(ref: ProvisionRef, provider: "ProviderConfig") -> str | None:
    from lkg.extraction import load_prompt
    from lkg.providers import chat_json

    prompt = load_prompt("normalize_reference").replace(
        "[[REFERENCE]]", ref.source_text or f"Article {ref.article}"
    )
    try:
        reply = chat_json(provider, prompt)
    except MalformedOutput:
        log.warning("normalization prompt returned malformed output for %r", ref.source_text)
        return None
    if isinstance(reply, dict):
        title = reply.get("law_title")
        if isinstance(title, str) and title.strip():
            return normalize_ws(title)
    return None
