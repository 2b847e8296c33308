"""Per-section node extraction.

Three provider modes share one output shape:

* ``oracle`` replays the document's gold annotations (deterministic testing);
* ``mock`` applies a rule table over sentences (offline stand-in);
* ``remote`` prompts a chat endpoint and parses its JSON reply.

The prompt template carries the four label definitions and a one-shot example
set in a fictional statute, which makes surface copying detectable: candidate
spans that reuse the example's distinctive tokens are flagged by
``validate_candidates`` (flagged, never dropped).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any

from lkg.corpus import JudgmentDoc, Section
from lkg.errors import OracleMissing
from lkg.normalize import parse_provision_ref
from lkg.ontology import NodeLabel
from lkg.providers import ProviderConfig, chat_json
from lkg.textutil import normalize_ws, sentences

REPLY_KEYS = {
    "facts": NodeLabel.FACT,
    "provisions": NodeLabel.PROVISION,
    "legal_norms": NodeLabel.LEGAL_NORM,
    "legal_applications": NodeLabel.LEGAL_APPLICATION,
}

# Distinctive tokens of the fictional one-shot example; their appearance in
# extracted spans signals the model copied the example instead of reading the
# excerpt.
SURFACE_COPY_TOKENS = ("martian", "martians", "zalk", "noxis")


@dataclass(frozen=True)
class NodeCandidate:
    label: NodeLabel
    text: str
    segment_id: str
    provenance: str  # oracle | mock | remote

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("candidate text must be nonempty")


@dataclass(frozen=True)
class ValidationWarning:
    kind: str  # NonVerbatimSpan | SurfaceCopy
    segment_id: str
    message: str


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    return resources.files("lkg.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def build_node_prompt(overview: str, section_text: str) -> str:
    """Render the node-extraction prompt; deterministic in its inputs."""
    if not section_text.strip():
        raise ValueError("section_text must be nonempty")
    overview_block = overview.strip() or "(no case overview provided)"
    return (
        load_prompt("node_extraction")
        .replace("[[OVERVIEW]]", overview_block)
        .replace("[[SECTION]]", section_text)
    )


# -- mock rules --------------------------------------------------------------

_NORM_TEMPLATE_RE = re.compile(
    r"\b(aims? to|purpose of|refers? to|means|is required|shall|may proceed only)\b",
    re.IGNORECASE,
)
_APPLICATION_TEMPLATE_RE = re.compile(
    r"\b(therefore|accordingly|qualifies as|is unlawful|is lawful|is inadmissible|constitutes)\b",
    re.IGNORECASE,
)
_NAMED_PARTY_RE = re.compile(r"\b[A-Z][a-z]+")


def _has_named_party(sentence: str) -> bool:
    # Skip the sentence-initial word so ordinary capitalization doesn't count.
    return bool(_NAMED_PARTY_RE.search(sentence[1:]))


def mock_label(sentence: str) -> NodeLabel | None:
    """Deterministic rule-based label for one sentence, or None to skip.

    Rule order: parseable citation -> Provision; norm templates -> LegalNorm;
    application templates applied to a named party -> LegalApplication;
    remaining declaratives -> Fact.
    """
    text = sentence.strip()
    if not text or text.endswith("?") or len(text.split()) < 3:
        return None
    if parse_provision_ref(text):
        return NodeLabel.PROVISION
    if _NORM_TEMPLATE_RE.search(text):
        return NodeLabel.LEGAL_NORM
    if _APPLICATION_TEMPLATE_RE.search(text) and _has_named_party(text):
        return NodeLabel.LEGAL_APPLICATION
    return NodeLabel.FACT


def _section_of(doc: JudgmentDoc, section: Section) -> Section:
    for candidate in doc.sections():
        if candidate is section or candidate.path == section.path:
            return candidate
    raise ValueError(f"section {section.path} does not belong to {doc.doc_id}")


def extract_nodes(
    doc: JudgmentDoc, section: Section, provider: ProviderConfig
) -> list[NodeCandidate]:
    """Extract node candidates for one section of a document."""
    section = _section_of(doc, section)
    if provider.mode == "oracle":
        return _extract_oracle(doc, section)
    if provider.mode == "mock":
        return _extract_mock(section)
    return _extract_remote(doc, section, provider)


def _extract_oracle(doc: JudgmentDoc, section: Section) -> list[NodeCandidate]:
    if doc.gold is None:
        raise OracleMissing(f"{doc.doc_id} has no gold annotations")
    segment_ids = {seg.segment_id for seg in section.segments()}
    return [
        NodeCandidate(
            label=node.label,
            text=node.text,
            segment_id=node.segment_id,
            provenance="oracle",
        )
        for node in doc.gold.nodes
        if node.segment_id in segment_ids
    ]


def _extract_mock(section: Section) -> list[NodeCandidate]:
    candidates = []
    for segment in section.body:
        for sentence in sentences(segment.text):
            label = mock_label(sentence)
            if label is not None:
                candidates.append(
                    NodeCandidate(
                        label=label,
                        text=sentence,
                        segment_id=segment.segment_id,
                        provenance="mock",
                    )
                )
    return candidates


def _validate_reply(parsed: Any) -> None:
    if not isinstance(parsed, dict):
        raise ValueError("reply must be a JSON object")
    for key in REPLY_KEYS:
        if key not in parsed:
            raise ValueError(f"reply missing key {key!r}")
        if not isinstance(parsed[key], list) or not all(
            isinstance(item, str) for item in parsed[key]
        ):
            raise ValueError(f"reply key {key!r} must be a list of strings")


def _extract_remote(
    doc: JudgmentDoc, section: Section, provider: ProviderConfig
) -> list[NodeCandidate]:
    section_text = section.text()
    if not section_text.strip():
        return []
    prompt = build_node_prompt(doc.case_overview, section_text)
    reply = chat_json(provider, prompt, validate=_validate_reply)
    candidates = []
    for key, label in REPLY_KEYS.items():
        for span in reply[key]:
            if not span.strip():
                continue
            candidates.append(
                NodeCandidate(
                    label=label,
                    text=span.strip(),
                    segment_id=_locate_segment(section, span),
                    provenance="remote",
                )
            )
    return candidates


def _locate_segment(section: Section, span: str) -> str:
    """Best-effort anchor: first segment containing the span verbatim."""
    needle = normalize_ws(span)
    for segment in section.body:
        if needle and needle in normalize_ws(segment.text):
            return segment.segment_id
    for segment in section.segments():
        if needle and needle in normalize_ws(segment.text):
            return segment.segment_id
    fallback = section.body or section.segments()
    return fallback[0].segment_id


def validate_candidates(
    candidates: list[NodeCandidate], section_text: str
) -> tuple[list[NodeCandidate], list[ValidationWarning]]:
    """Deduplicate within the section and flag suspicious spans.

    Non-verbatim spans and surface copies of the one-shot example are flagged
    but retained; duplicate (label, text) pairs are dropped.
    """
    normalized_section = normalize_ws(section_text)
    kept: list[NodeCandidate] = []
    warnings: list[ValidationWarning] = []
    seen: set[tuple[NodeLabel, str]] = set()
    for candidate in candidates:
        normalized = normalize_ws(candidate.text)
        dedup_key = (candidate.label, normalized)
        if dedup_key in seen:
            continue
        seen.add(dedup_key)
        kept.append(candidate)
        if normalized not in normalized_section:
            warnings.append(
                ValidationWarning(
                    kind="NonVerbatimSpan",
                    segment_id=candidate.segment_id,
                    message=f"{candidate.label.value} span not found verbatim in section: {candidate.text[:80]!r}",
                )
            )
        lowered = normalized.casefold()
        if any(re.search(rf"\b{token}\b", lowered) for token in SURFACE_COPY_TOKENS):
            warnings.append(
                ValidationWarning(
                    kind="SurfaceCopy",
                    segment_id=candidate.segment_id,
                    message=f"span reuses one-shot example tokens: {candidate.text[:80]!r}",
                )
            )
    return kept, warnings


def candidate_to_dict(candidate: NodeCandidate) -> dict:
    return {
        "segment_id": candidate.segment_id,
        "label": candidate.label.value,
        "text": candidate.text,
        "provenance": candidate.provenance,
    }


def candidate_from_dict(obj: dict) -> NodeCandidate:
    return NodeCandidate(
        label=NodeLabel(obj["label"]),
        text=obj["text"],
        segment_id=obj["segment_id"],
        provenance=obj.get("provenance", "oracle"),
    )


def dump_reply_example() -> str:
    """The standardized reply shape, used in docs and tests."""
    return json.dumps({key: [] for key in REPLY_KEYS})
