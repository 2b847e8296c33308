"""Seeded generator of fictional-statute judgments with gold annotations.

Documents cite an invented interplanetary statute book, so generated text can
never be confused with real law, and every document carries a complete gold
node set plus gold edges for the three canonical kinds. Output is produced
through the same structured-JSON parser as real fixtures, which keeps segment
ids and gold references consistent by construction.

Determinism contract: ``synth_corpus(seed, n_docs, params)`` is bitwise
deterministic, including the serialized corpus file.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from lkg.corpus import (
    GoldNode,
    JudgmentDoc,
    _parse_structured,
    make_segment_id,
)
from lkg.errors import InvalidParams
from lkg.ontology import EdgeType, NodeLabel
from lkg.normalize import ProvisionId


@dataclass(frozen=True)
class SynthParams:
    sections_per_doc: tuple[int, int] = (3, 5)
    facts_per_section: tuple[int, int] = (2, 4)
    norms_per_section: tuple[int, int] = (1, 2)
    applications_per_section: tuple[int, int] = (1, 2)
    catalog_size: int = 60
    max_articles_per_law: int = 40
    paragraph_rate: float = 0.2
    self_loop_rate: float = 0.15
    cross_section_rate: float = 0.3
    multi_fact_rate: float = 0.4

    def validate(self) -> None:
        for name in (
            "sections_per_doc",
            "facts_per_section",
            "norms_per_section",
            "applications_per_section",
        ):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise InvalidParams(f"{name} must satisfy 1 <= min <= max, got ({lo}, {hi})")
        if self.catalog_size < 1:
            raise InvalidParams("catalog_size must be >= 1")
        if self.max_articles_per_law < 1:
            raise InvalidParams("max_articles_per_law must be >= 1")
        for name in ("paragraph_rate", "self_loop_rate", "cross_section_rate", "multi_fact_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise InvalidParams(f"{name} must be within [0, 1]")


_LAW_SUBJECTS = (
    "Lunar Settlement",
    "Asteroid Mining",
    "Orbital Traffic",
    "Stellar Navigation",
    "Cometary Resources",
    "Void Habitation",
    "Solar Sail Transit",
    "Planetary Quarantine",
    "Exo-Agriculture",
    "Gravity Well Levy",
    "Deep Space Salvage",
    "Ion Propulsion Safety",
    "Cryogenic Storage",
    "Nebular Trade",
    "Satellite Registration",
)

_LAW_FORMS = ("Act", "Ordinance", "Code", "Regulation Law")

_FIRST_NAMES = (
    "Voss", "Arlen", "Imra", "Tekk", "Sola", "Brann",
    "Oru", "Lyra", "Dain", "Mekel", "Quor", "Fenna",
)
_LAST_NAMES = (
    "Harlan", "Veyra", "Stroud", "Ilex", "Maren", "Torvi",
    "Quell", "Ashvin", "Corvex", "Pellam",
)

_OFFICES = (
    "Orbital Registry Office",
    "Settlement Licensing Bureau",
    "Transit Control Authority",
    "Resource Allocation Board",
    "Quarantine Commission",
    "Salvage Review Office",
)

_SITES = (
    "launch corridor",
    "extraction site",
    "habitat ring",
    "docking platform",
    "cargo terminal",
    "relay station",
)

_OBJECTS = (
    "an audit request",
    "a license renewal application",
    "an objection notice",
    "a compensation claim",
    "a registration form",
    "a suspension appeal",
)

_MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)

_TERMS = (
    "registered settler",
    "licensed extractor",
    "transit operator",
    "protected resident",
    "qualified salvor",
    "certified carrier",
)

_PURPOSES = (
    "secure orderly settlement of the outer colonies",
    "prevent contamination between habitats",
    "allocate scarce orbital corridors fairly",
    "protect residents from extraction hazards",
    "keep salvage operations traceable",
    "stabilize trade between stations",
)

_DEFINITIONS = (
    "any person holding a settlement permit issued before arrival",
    "any operator whose route crosses a controlled corridor",
    "any party conducting extraction within a licensed zone",
    "any resident registered with the competent bureau",
    "any vessel carrying goods between recognized stations",
)

_HEADING_PHRASES = (
    "Background of the Dispute",
    "Procedural History",
    "The Parties' Contentions",
    "Findings on the Claims",
    "Application of the Governing Rules",
    "Judgment of the Court",
    "Assessment of the Evidence",
)

_DECISIONS = (
    "the revocation order",
    "the denial of renewal",
    "the suspension decision",
    "the levy assessment",
    "the quarantine directive",
)


def statute_catalog(size: int) -> list[str]:
    """First ``size`` fictional statute titles, in a fixed deterministic order."""
    titles = []
    for form in _LAW_FORMS:
        for subject in _LAW_SUBJECTS:
            titles.append(f"{subject} {form}")
    if size > len(titles):
        raise InvalidParams(
            f"catalog_size {size} exceeds available distinct titles ({len(titles)})"
        )
    return titles[:size]


class _DocDraft:
    """Accumulates sections, gold nodes, and gold edges for one document."""

    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        self.sections: list[dict] = []
        self.gold_nodes: list[dict] = []
        self.gold_edges: list[dict] = []
        self.expected: dict[str, str] = {}  # gold node key -> canonical provision

    def add_section(self, heading: str) -> int:
        self.sections.append({"heading": heading, "paragraphs": []})
        return len(self.sections) - 1

    def add_paragraph(self, section: int, text: str) -> str:
        paragraphs = self.sections[section]["paragraphs"]
        paragraphs.append(text)
        # Heading occupies ordinal 0, so paragraph p sits at ordinal p + 1.
        return make_segment_id(self.doc_id, (section,), len(paragraphs))

    def add_gold_node(
        self, segment_id: str, label: NodeLabel, text: str, canonical: str | None = None
    ) -> str:
        key = f"{segment_id}#{label.value}"
        self.gold_nodes.append({"segment": segment_id, "label": label.value, "text": text})
        if canonical is not None:
            self.expected[key] = canonical
        return key

    def add_gold_edge(self, kind: EdgeType, src: str, dst: str) -> None:
        self.gold_edges.append({"type": kind.value, "src": src, "dst": dst})

    def to_corpus_dict(self, overview: str) -> dict:
        return {
            "doc_id": self.doc_id,
            "case_overview": overview,
            "sections": self.sections,
            "gold": {"nodes": self.gold_nodes, "edges": self.gold_edges},
        }


def _date(rng: random.Random) -> str:
    return f"{rng.randint(1, 28)} {rng.choice(_MONTHS)} {rng.randint(2089, 2131)}"


def _unique_text(make, taken: set[str], suffix: str) -> str:
    """Draw until the text is new; append a numbered clause as a last resort."""
    text = make()
    for _ in range(20):
        if text not in taken:
            break
        text = make()
    if text in taken:
        text = f"{text} {suffix[:-1]} ({len(taken) + 1})."
    taken.add(text)
    return text


def _make_fact(rng: random.Random, party: str, used: set[str]) -> str:
    for attempt in range(24):
        kind = rng.randrange(4)
        if kind == 0:
            text = (
                f"{party} filed {rng.choice(_OBJECTS)} with the {rng.choice(_OFFICES)} "
                f"on {_date(rng)}."
            )
        elif kind == 1:
            text = (
                f"{party} has operated the {rng.choice(_SITES)} under permit "
                f"no. {rng.randint(100, 9999)} since {_date(rng)}."
            )
        elif kind == 2:
            text = (
                f"{party} resides {rng.randint(40, 980)} meters from the "
                f"{rng.choice(_SITES)} and reported the disturbance on {_date(rng)}."
            )
        else:
            obj = rng.choice(_OBJECTS).split(" ", 1)[1]
            text = f"The {rng.choice(_OFFICES)} served the {obj} on {party} on {_date(rng)}."
        if text not in used:
            used.add(text)
            return text
    text = f"{party} lodged submission no. {len(used) + 1} with the registry on {_date(rng)}."
    used.add(text)
    return text


def _make_norm(rng: random.Random, title: str) -> str:
    style = rng.randrange(3)
    if style == 0:
        return (
            f"The {title} aims to {rng.choice(_PURPOSES)}; accordingly, a "
            f"{rng.choice(_TERMS)} refers to {rng.choice(_DEFINITIONS)}."
        )
    if style == 1:
        return (
            f"Under the {title}, prior clearance by the competent bureau is required "
            f"before any {rng.choice(_TERMS)} may continue operations."
        )
    return (
        f"The purpose of the {title} is to {rng.choice(_PURPOSES)}, so a claim may "
        f"proceed only by a party with a legally protected interest."
    )


def _make_application(rng: random.Random, party: str, title: str) -> str:
    style = rng.randrange(3)
    if style == 0:
        return (
            f"Because {party} held no valid clearance at the relevant time, "
            f"{party} qualifies as a {rng.choice(_TERMS)} in default under the {title}."
        )
    if style == 1:
        return (
            f"Therefore, {rng.choice(_DECISIONS)} concerning {party} is unlawful "
            f"under the {title}."
        )
    return (
        f"Accordingly, the request by {party} is inadmissible because the period "
        f"prescribed by the {title} had expired."
    )


def _provision_ref(rng: random.Random, title: str, params: SynthParams) -> tuple[str, ProvisionId]:
    article = rng.randint(1, params.max_articles_per_law)
    paragraph = None
    if rng.random() < params.paragraph_rate:
        paragraph = rng.randint(1, 4)
    pid = ProvisionId(law_title=title, article=article, paragraph=paragraph)
    if paragraph is not None:
        surface = f"Article {article}, Paragraph {paragraph} of the {title}"
    else:
        surface = f"Article {article} of the {title}"
    return surface, pid


def synth_corpus(
    seed: int, n_docs: int, params: SynthParams = SynthParams()
) -> list[JudgmentDoc]:
    """Generate ``n_docs`` annotated judgments, deterministic per (seed, n_docs, params)."""
    if n_docs < 1:
        raise InvalidParams("n_docs must be >= 1")
    params.validate()
    rng = random.Random(seed)
    catalog = statute_catalog(params.catalog_size)
    used_fact_texts: set[str] = set()

    docs = []
    for d in range(n_docs):
        doc_id = f"synth-{seed}-{d:04d}"
        docs.append(_synth_doc(rng, doc_id, catalog, params, used_fact_texts))
    return docs


def _synth_doc(
    rng: random.Random,
    doc_id: str,
    catalog: list[str],
    params: SynthParams,
    used_fact_texts: set[str],
) -> JudgmentDoc:
    draft = _DocDraft(doc_id)
    parties = [
        f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}" for _ in range(rng.randint(2, 3))
    ]
    case_title = rng.choice(catalog)
    overview = (
        f"The plaintiff {parties[0]} challenges {rng.choice(_DECISIONS)} issued by the "
        f"{rng.choice(_OFFICES)}. The dispute turns on the {case_title} and the parties "
        f"disagree about whether the statutory conditions were met."
    )

    n_sections = rng.randint(*params.sections_per_doc)
    # Pools of earlier gold nodes available for cross-section linking.
    fact_pool: list[tuple[str, str]] = []  # (gold key, text)
    norm_pool: list[tuple[str, str]] = []
    to_fact_edges = 0

    for si in range(n_sections):
        sec = draft.add_section(f"{si + 1}. {rng.choice(_HEADING_PHRASES)}")

        section_facts: list[tuple[str, str]] = []
        for _ in range(rng.randint(*params.facts_per_section)):
            party = rng.choice(parties)
            text = _make_fact(rng, party, used_fact_texts)
            seg = draft.add_paragraph(sec, text)
            key = draft.add_gold_node(seg, NodeLabel.FACT, text)
            section_facts.append((key, text))

        # Gold node texts must be unique within a section per label, or the
        # extraction-side dedup would drop one and dangle its gold edges.
        section_texts: set[str] = set()

        section_provisions: list[tuple[str, str]] = []  # (key, law title)
        n_provisions = rng.randint(1, 2)
        for _ in range(n_provisions):
            for _ in range(50):
                title = rng.choice(catalog)
                surface, pid = _provision_ref(rng, title, params)
                if surface not in section_texts:
                    break
            section_texts.add(surface)
            seg = draft.add_paragraph(
                sec, f"In assessing the claims, the court refers to {surface}."
            )
            key = draft.add_gold_node(
                seg, NodeLabel.PROVISION, surface, canonical=pid.canonical()
            )
            section_provisions.append((key, title))

        section_norms: list[tuple[str, str]] = []
        for _ in range(rng.randint(*params.norms_per_section)):
            prov_key, title = rng.choice(section_provisions)
            text = _unique_text(
                lambda: _make_norm(rng, title), section_texts, "This reading is settled."
            )
            seg = draft.add_paragraph(sec, text)
            key = draft.add_gold_node(seg, NodeLabel.LEGAL_NORM, text)
            draft.add_gold_edge(EdgeType.DERIVES_NORM, prov_key, key)
            # Occasionally a norm is derived from a second citation.
            if len(section_provisions) > 1 and rng.random() < 0.2:
                others = [p for p in section_provisions if p[0] != prov_key]
                draft.add_gold_edge(EdgeType.DERIVES_NORM, rng.choice(others)[0], key)
            section_norms.append((key, text))

        for _ in range(rng.randint(*params.applications_per_section)):
            party = rng.choice(parties)
            _, title = rng.choice(section_provisions)
            app_text = _unique_text(
                lambda: _make_application(rng, party, title),
                section_texts,
                "The conclusion follows.",
            )

            # Pick the supporting norm: usually local, sometimes from an
            # earlier section (history-aware linking must span sections).
            if norm_pool and rng.random() < params.cross_section_rate:
                norm_key, _ = rng.choice(norm_pool)
            else:
                norm_key, _ = rng.choice(section_norms)

            supporting: list[str] = []
            if fact_pool and rng.random() < params.cross_section_rate:
                supporting.append(rng.choice(fact_pool)[0])
            else:
                supporting.append(rng.choice(section_facts)[0])
            if rng.random() < params.multi_fact_rate:
                extra_pool = section_facts + (fact_pool if fact_pool else [])
                extra_key = rng.choice(extra_pool)[0]
                if extra_key not in supporting:
                    supporting.append(extra_key)

            if rng.random() < params.self_loop_rate:
                # The application's segment also hosts one of its facts: the
                # paragraph carries both sentences, and the ToFact edge becomes
                # a segment-level self-loop.
                party2 = rng.choice(parties)
                loop_fact = _make_fact(rng, party2, used_fact_texts)
                seg = draft.add_paragraph(sec, f"{loop_fact} {app_text}")
                loop_key = draft.add_gold_node(seg, NodeLabel.FACT, loop_fact)
                app_key = draft.add_gold_node(seg, NodeLabel.LEGAL_APPLICATION, app_text)
                supporting.append(loop_key)
                section_facts.append((loop_key, loop_fact))
            else:
                seg = draft.add_paragraph(sec, app_text)
                app_key = draft.add_gold_node(seg, NodeLabel.LEGAL_APPLICATION, app_text)

            draft.add_gold_edge(EdgeType.APPLIES_NORM, norm_key, app_key)
            for fact_key in supporting:
                draft.add_gold_edge(EdgeType.TO_FACT, fact_key, app_key)
                to_fact_edges += 1

        fact_pool.extend(section_facts)
        norm_pool.extend(section_norms)

    assert to_fact_edges >= 1  # every doc grounds at least one application

    doc = _parse_structured(doc_id, draft.to_corpus_dict(overview))
    assert doc.gold is not None
    doc.gold.nodes = [
        GoldNode(
            segment_id=n.segment_id,
            label=n.label,
            text=n.text,
            expected_provision=draft.expected.get(n.key),
        )
        for n in doc.gold.nodes
    ]
    return doc
