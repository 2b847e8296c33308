"""Judgment-document model and ingestion.

Two ingestion paths feed the pipeline:

* a lenient markup path that strips inconsistent HTML-ish tags, detects
  headings from tag levels plus configurable line heuristics, and segments
  the text into a section tree;
* a structured-JSON path (corpus format ``lkg-corpus/1``) that is the
  canonical fixture format and may carry gold node/edge annotations for
  oracle mode.

Both paths conserve text: the concatenation of all segment texts equals the
markup-stripped source up to whitespace normalization.
"""

from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from lkg.errors import EmptyDocument, MalformedMarkup
from lkg.ontology import (
    EDGE_TYPE_VALUES,
    NODE_LABEL_VALUES,
    EdgeType,
    NodeLabel,
    signature_of,
)
CORPUS_FORMAT = "lkg-corpus/1"
DOCS_FORMAT = "lkg-docs/1"

SOURCE_KINDS = ("markup", "structured-json")


@dataclass(frozen=True)
class RawDocument:
    """An unparsed input document. ``text`` must already be valid UTF-8."""

    doc_id: str
    source_kind: str
    text: str

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be nonempty")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"source_kind must be one of {SOURCE_KINDS}")

    @classmethod
    def from_bytes(cls, doc_id: str, source_kind: str, data: bytes) -> "RawDocument":
        try:
            return cls(doc_id, source_kind, data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise MalformedMarkup(f"{doc_id}: input is not valid UTF-8") from exc


@dataclass(frozen=True)
class HeadingHeuristics:
    """Configured signals for heading detection on markup lines.

    A line is a heading when it is short enough and either lacks terminal
    punctuation or starts with a numbering/parenthesis marker. Thresholds are
    configuration, not constants.
    """

    max_heading_length: int = 60
    terminal_punctuation: frozenset[str] = frozenset(
        {".", "。", "!", "?", "！", "？", ";", "；", ":", "："}
    )
    leading_marker_patterns: tuple[str, ...] = (
        r"^\(",
        r"^（",
        r"^\d+[\.\)）]\s",
        r"^第\d+",
        r"^[IVXLC]+\.\s",
    )
    overview_heading_patterns: tuple[str, ...] = (
        r"case\s+overview",
        r"overview\s+of\s+the\s+case",
        r"summary\s+of\s+the\s+case",
        r"事案の概要",
    )

    def is_heading_line(self, line: str) -> bool:
        text = line.strip()
        if not text or len(text) > self.max_heading_length:
            return False
        if text[-1] not in self.terminal_punctuation:
            return True
        return any(re.match(p, text) for p in self.leading_marker_patterns)

    def is_overview_heading(self, heading_text: str) -> bool:
        return any(
            re.search(p, heading_text, re.IGNORECASE)
            for p in self.overview_heading_patterns
        )


DEFAULT_HEURISTICS = HeadingHeuristics()


@dataclass(frozen=True)
class Segment:
    segment_id: str
    text: str
    is_heading: bool
    section_path: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("segment text must be nonempty after trim")


def make_segment_id(doc_id: str, path: tuple[int, ...], ordinal: int) -> str:
    """Stable segment id: doc id + section path + ordinal within the section."""
    path_str = "s" + ".".join(str(i) for i in path)
    return f"{doc_id}/{path_str}/{ordinal}"


@dataclass
class Section:
    path: tuple[int, ...]
    heading: Segment | None
    body: list[Segment] = field(default_factory=list)
    children: list["Section"] = field(default_factory=list)

    def segments(self) -> list[Segment]:
        own = [self.heading] if self.heading is not None else []
        return own + list(self.body)

    def text(self) -> str:
        return " ".join(seg.text for seg in self.body)


@dataclass(frozen=True)
class GoldNode:
    segment_id: str
    label: NodeLabel
    text: str
    # Canonical provision string assigned by the synthetic generator; kept in
    # memory for oracle comparisons, never serialized.
    expected_provision: str | None = None

    @property
    def key(self) -> str:
        return f"{self.segment_id}#{self.label.value}"


@dataclass(frozen=True)
class GoldEdge:
    kind: EdgeType
    src: str  # gold node key: "<segment_id>#<Label>"
    dst: str


@dataclass
class GoldAnnotations:
    nodes: list[GoldNode] = field(default_factory=list)
    edges: list[GoldEdge] = field(default_factory=list)

    def by_key(self) -> dict[str, GoldNode]:
        return {node.key: node for node in self.nodes}


@dataclass
class JudgmentDoc:
    """A parsed judgment: overview + an ordered section tree of segments."""

    doc_id: str
    case_overview: str
    root: Section
    gold: GoldAnnotations | None = None

    def sections(self) -> list[Section]:
        """Pre-order list of sections, root included."""
        out: list[Section] = []

        def walk(section: Section) -> None:
            out.append(section)
            for child in section.children:
                walk(child)

        walk(self.root)
        return out

    def segment_map(self) -> dict[str, Segment]:
        return {seg.segment_id: seg for seg in segments_in_reading_order(self)}

    def section_for_path(self, path: tuple[int, ...]) -> Section | None:
        for section in self.sections():
            if section.path == path:
                return section
        return None


def segments_in_reading_order(doc: JudgmentDoc) -> list[Segment]:
    """Depth-first pre-order flattening; stable across calls."""

    def walk(section: Section) -> Iterator[Segment]:
        if section.heading is not None:
            yield section.heading
        yield from section.body
        for child in section.children:
            yield from walk(child)

    return list(walk(doc.root))


# -- markup parsing --------------------------------------------------------------

_CONTROL_RE = re.compile(r"[\x00-\x02]")
_HEADING_TAG_RE = re.compile(r"<\s*h([1-6])\b[^>]*>(.*?)<\s*/\s*h\1\s*>", re.IGNORECASE | re.DOTALL)
_BLOCK_BREAK_RE = re.compile(
    r"<\s*(?:br|/p|/div|/li|/tr|/td|/table|/section|/blockquote|p|div|li|tr)\b[^>]*/?\s*>",
    re.IGNORECASE,
)
_TAG_RE = re.compile(r"<[^>]*>")


def strip_markup(text: str) -> str:
    """Tag-stripped, entity-unescaped text; the conservation reference."""
    text = _CONTROL_RE.sub("", text)
    text = _BLOCK_BREAK_RE.sub("\n", text)
    text = _TAG_RE.sub("", text)
    return html.unescape(text)


def parse_document(
    raw: RawDocument, heuristics: HeadingHeuristics = DEFAULT_HEURISTICS
) -> JudgmentDoc:
    """Parse a raw document into a JudgmentDoc.

    Raises EmptyDocument when no text survives stripping, MalformedMarkup
    when structure cannot be recovered (structured-JSON schema violations,
    undecodable input).
    """
    if raw.source_kind == "structured-json":
        try:
            obj = json.loads(raw.text)
        except json.JSONDecodeError as exc:
            raise MalformedMarkup(f"{raw.doc_id}: invalid JSON document") from exc
        return _parse_structured(raw.doc_id, obj)
    return _parse_markup(raw.doc_id, raw.text, heuristics)


def _parse_markup(doc_id: str, text: str, heuristics: HeadingHeuristics) -> JudgmentDoc:
    cleaned = _CONTROL_RE.sub("", text)
    # Mark explicit heading tags before stripping so their level survives.
    cleaned = _HEADING_TAG_RE.sub(
        lambda m: "\n\x01" + m.group(1) + "\x02" + _TAG_RE.sub("", m.group(2)) + "\n",
        cleaned,
    )
    cleaned = _BLOCK_BREAK_RE.sub("\n", cleaned)
    cleaned = _TAG_RE.sub("", cleaned)
    cleaned = html.unescape(cleaned)

    # (heading_level, heading_text, body_lines, children) draft tree
    root_draft: dict = {"heading": None, "level": 0, "body": [], "children": []}
    stack = [root_draft]
    for raw_line in cleaned.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        level: int | None = None
        if line.startswith("\x01"):
            marker, _, rest = line[1:].partition("\x02")
            line = rest.strip()
            if not line:
                continue
            level = int(marker)
        elif heuristics.is_heading_line(line):
            level = 1
        if level is not None:
            while len(stack) > 1 and stack[-1]["level"] >= level:
                stack.pop()
            draft = {"heading": line, "level": level, "body": [], "children": []}
            stack[-1]["children"].append(draft)
            stack.append(draft)
        else:
            stack[-1]["body"].append(line)

    root = _materialize(doc_id, root_draft, path=())
    doc = JudgmentDoc(doc_id=doc_id, case_overview="", root=root)
    if not segments_in_reading_order(doc):
        raise EmptyDocument(f"{doc_id}: no extractable text")
    doc.case_overview = _find_overview(doc, heuristics)
    return doc


def _materialize(doc_id: str, draft: dict, path: tuple[int, ...]) -> Section:
    ordinal = 0
    heading = None
    if draft["heading"] is not None:
        heading = Segment(
            segment_id=make_segment_id(doc_id, path, ordinal),
            text=draft["heading"],
            is_heading=True,
            section_path=path,
        )
        ordinal += 1
    body = []
    for line in draft["body"]:
        body.append(
            Segment(
                segment_id=make_segment_id(doc_id, path, ordinal),
                text=line,
                is_heading=False,
                section_path=path,
            )
        )
        ordinal += 1
    section = Section(path=path, heading=heading, body=body)
    for i, child in enumerate(draft["children"]):
        section.children.append(_materialize(doc_id, child, path + (i,)))
    return section


def _find_overview(doc: JudgmentDoc, heuristics: HeadingHeuristics) -> str:
    for section in doc.sections():
        if section.heading is not None and heuristics.is_overview_heading(
            section.heading.text
        ):
            return section.text()
    return ""


# -- structured-JSON parsing ------------------------------------------------------


def _parse_structured(doc_id: str, obj: object) -> JudgmentDoc:
    if not isinstance(obj, dict):
        raise MalformedMarkup(f"{doc_id}: structured document must be a JSON object")
    if "doc_id" in obj and obj["doc_id"] != doc_id:
        raise MalformedMarkup(
            f"{doc_id}: document carries mismatched doc_id {obj['doc_id']!r}"
        )
    sections_spec = obj.get("sections")
    if not isinstance(sections_spec, list):
        raise MalformedMarkup(f"{doc_id}: missing 'sections' list")

    root = Section(path=(), heading=None)
    for i, sec in enumerate(sections_spec):
        if not isinstance(sec, dict) or not isinstance(sec.get("paragraphs"), list):
            raise MalformedMarkup(f"{doc_id}: section {i} malformed")
        path = (i,)
        ordinal = 0
        heading = None
        heading_text = sec.get("heading")
        if heading_text:
            heading = Segment(
                segment_id=make_segment_id(doc_id, path, ordinal),
                text=str(heading_text),
                is_heading=True,
                section_path=path,
            )
            ordinal += 1
        body = []
        for para in sec["paragraphs"]:
            para_text = str(para).strip()
            if not para_text:
                continue
            body.append(
                Segment(
                    segment_id=make_segment_id(doc_id, path, ordinal),
                    text=para_text,
                    is_heading=False,
                    section_path=path,
                )
            )
            ordinal += 1
        root.children.append(Section(path=path, heading=heading, body=body))

    doc = JudgmentDoc(
        doc_id=doc_id,
        case_overview=str(obj.get("case_overview", "")),
        root=root,
    )
    if not segments_in_reading_order(doc) and not doc.case_overview.strip():
        raise EmptyDocument(f"{doc_id}: no extractable text")
    if "gold" in obj and obj["gold"] is not None:
        doc.gold = _parse_gold(doc, obj["gold"])
    return doc


def _parse_gold(doc: JudgmentDoc, spec: object) -> GoldAnnotations:
    if not isinstance(spec, dict):
        raise MalformedMarkup(f"{doc.doc_id}: gold block must be an object")
    segment_ids = set(doc.segment_map())
    nodes: list[GoldNode] = []
    for entry in spec.get("nodes", []):
        segment = entry.get("segment")
        label = entry.get("label")
        text = entry.get("text")
        if label not in NODE_LABEL_VALUES:
            raise MalformedMarkup(f"{doc.doc_id}: unknown gold label {label!r}")
        if segment not in segment_ids:
            raise MalformedMarkup(
                f"{doc.doc_id}: gold node references unknown segment {segment!r}"
            )
        if not text or not str(text).strip():
            raise MalformedMarkup(f"{doc.doc_id}: gold node with empty text")
        nodes.append(GoldNode(segment_id=segment, label=NodeLabel(label), text=text))
    keys = [n.key for n in nodes]
    if len(keys) != len(set(keys)):
        raise MalformedMarkup(f"{doc.doc_id}: duplicate gold (segment, label) pair")
    key_to_label = {n.key: n.label for n in nodes}

    edges: list[GoldEdge] = []
    for entry in spec.get("edges", []):
        kind = entry.get("type")
        src = entry.get("src")
        dst = entry.get("dst")
        if kind not in EDGE_TYPE_VALUES:
            raise MalformedMarkup(f"{doc.doc_id}: unknown gold edge type {kind!r}")
        if src not in key_to_label or dst not in key_to_label:
            raise MalformedMarkup(
                f"{doc.doc_id}: gold edge references unknown node {src!r} or {dst!r}"
            )
        edge_type = EdgeType(kind)
        expected = signature_of(edge_type)
        if (key_to_label[src], key_to_label[dst]) != expected:
            raise MalformedMarkup(
                f"{doc.doc_id}: gold edge {kind} violates label signature"
            )
        edges.append(GoldEdge(kind=edge_type, src=src, dst=dst))
    return GoldAnnotations(nodes=nodes, edges=edges)


# -- corpus and docs file IO -------------------------------------------------------


def doc_to_corpus_dict(doc: JudgmentDoc) -> dict:
    """Serialize to the flat lkg-corpus/1 document shape.

    Only depth-1 docs without a root preamble fit the corpus format; nested
    trees go through the docs snapshot format instead.
    """
    if doc.root.body or doc.root.heading is not None:
        raise ValueError(f"{doc.doc_id}: corpus format cannot hold a root preamble")
    sections = []
    for section in doc.root.children:
        if section.children:
            raise ValueError(f"{doc.doc_id}: corpus format cannot hold nested sections")
        sections.append(
            {
                "heading": section.heading.text if section.heading else None,
                "paragraphs": [seg.text for seg in section.body],
            }
        )
    out: dict = {
        "doc_id": doc.doc_id,
        "case_overview": doc.case_overview,
        "sections": sections,
    }
    if doc.gold is not None:
        out["gold"] = {
            "nodes": [
                {"segment": n.segment_id, "label": n.label.value, "text": n.text}
                for n in doc.gold.nodes
            ],
            "edges": [
                {"type": e.kind.value, "src": e.src, "dst": e.dst}
                for e in doc.gold.edges
            ],
        }
    return out


def dump_corpus(docs: list[JudgmentDoc]) -> str:
    payload = {
        "version": CORPUS_FORMAT,
        "documents": [doc_to_corpus_dict(doc) for doc in docs],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def save_corpus(docs: list[JudgmentDoc], path: str | Path) -> None:
    Path(path).write_text(dump_corpus(docs), encoding="utf-8")


def load_corpus(source: str | Path) -> list[JudgmentDoc]:
    """Load and parse an lkg-corpus/1 file."""
    text = Path(source).read_text(encoding="utf-8")
    return parse_corpus_text(text)


def parse_corpus_text(text: str) -> list[JudgmentDoc]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedMarkup("corpus file is not valid JSON") from exc
    if not isinstance(payload, dict) or payload.get("version") != CORPUS_FORMAT:
        raise MalformedMarkup(f"corpus file must declare version {CORPUS_FORMAT!r}")
    documents = payload.get("documents")
    if not isinstance(documents, list):
        raise MalformedMarkup("corpus file missing 'documents' list")
    docs = []
    seen: set[str] = set()
    for entry in documents:
        if not isinstance(entry, dict) or "doc_id" not in entry:
            raise MalformedMarkup("corpus document missing doc_id")
        doc_id = str(entry["doc_id"])
        if doc_id in seen:
            raise MalformedMarkup(f"duplicate doc_id {doc_id!r} in corpus")
        seen.add(doc_id)
        docs.append(_parse_structured(doc_id, entry))
    return docs


def _section_to_dict(section: Section) -> dict:
    return {
        "path": list(section.path),
        "heading": _segment_to_dict(section.heading) if section.heading else None,
        "body": [_segment_to_dict(seg) for seg in section.body],
        "children": [_section_to_dict(child) for child in section.children],
    }


def _segment_to_dict(seg: Segment) -> dict:
    return {
        "segment_id": seg.segment_id,
        "text": seg.text,
        "is_heading": seg.is_heading,
        "section_path": list(seg.section_path),
    }


def _segment_from_dict(obj: dict) -> Segment:
    return Segment(
        segment_id=obj["segment_id"],
        text=obj["text"],
        is_heading=obj["is_heading"],
        section_path=tuple(obj["section_path"]),
    )


def _section_from_dict(obj: dict) -> Section:
    return Section(
        path=tuple(obj["path"]),
        heading=_segment_from_dict(obj["heading"]) if obj["heading"] else None,
        body=[_segment_from_dict(s) for s in obj["body"]],
        children=[_section_from_dict(c) for c in obj["children"]],
    )


def save_docs(docs: list[JudgmentDoc], path: str | Path) -> None:
    """Write the parsed-documents snapshot (lkg-docs/1), gold included."""
    payload = {
        "version": DOCS_FORMAT,
        "documents": [
            {
                "doc_id": doc.doc_id,
                "case_overview": doc.case_overview,
                "root": _section_to_dict(doc.root),
                "gold": None
                if doc.gold is None
                else {
                    "nodes": [
                        {"segment": n.segment_id, "label": n.label.value, "text": n.text}
                        for n in doc.gold.nodes
                    ],
                    "edges": [
                        {"type": e.kind.value, "src": e.src, "dst": e.dst}
                        for e in doc.gold.edges
                    ],
                },
            }
            for doc in docs
        ],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_docs(path: str | Path) -> list[JudgmentDoc]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict) or payload.get("version") != DOCS_FORMAT:
        raise MalformedMarkup(f"docs file must declare version {DOCS_FORMAT!r}")
    docs = []
    for entry in payload["documents"]:
        doc = JudgmentDoc(
            doc_id=entry["doc_id"],
            case_overview=entry["case_overview"],
            root=_section_from_dict(entry["root"]),
        )
        if entry.get("gold"):
            doc.gold = _parse_gold(doc, entry["gold"])
        docs.append(doc)
    return docs
