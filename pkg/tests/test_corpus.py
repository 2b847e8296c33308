"""Document parsing: heading heuristics, section trees, text conservation."""

from __future__ import annotations

import json

import pytest

from lkg.corpus import (
    DEFAULT_HEURISTICS,
    HeadingHeuristics,
    RawDocument,
    dump_corpus,
    parse_corpus_text,
    parse_document,
    segments_in_reading_order,
    strip_markup,
)
from lkg.errors import EmptyDocument, MalformedMarkup
from lkg.textutil import normalize_ws

MARKUP_FIXTURE = """
<html><body>
<h1>1. Background of the dispute</h1>
<p>The plaintiff filed an audit request on 1 June 2007.</p>
<p>The office rejected the request two weeks later.</p>
<h1>2. The parties&#39; contentions</h1>
<p>The plaintiff argues the rejection was unlawful.</p>
<p>The defendant argues the deadline had expired.</p>
<p>Both parties rely on the statutory scheme.</p>
<h1>3. Judgment of the court</h1>
<p>The request was filed out of time.</p>
<p>Therefore the claim is dismissed.</p>
</body></html>
"""


class TestHeadingHeuristics:
    def test_short_numbered_line_without_final_punctuation(self):
        assert DEFAULT_HEURISTICS.is_heading_line("1. Background of the dispute")

    def test_long_sentence_is_not_heading(self):
        line = (
            "The plaintiff filed an audit request with the competent office, "
            "which rejected it as untimely after a short review."
        )
        assert not DEFAULT_HEURISTICS.is_heading_line(line)

    def test_short_sentence_with_final_punctuation_needs_marker(self):
        assert not DEFAULT_HEURISTICS.is_heading_line("The claim is dismissed.")
        assert DEFAULT_HEURISTICS.is_heading_line("(1) On the first claim.")

    def test_pure_function_of_config(self):
        strict = HeadingHeuristics(max_heading_length=10)
        line = "1. Background of the dispute"
        assert DEFAULT_HEURISTICS.is_heading_line(line)
        assert not strict.is_heading_line(line)
        # same inputs -> same flag
        assert strict.is_heading_line(line) == strict.is_heading_line(line)


class TestMarkupParsing:
    def test_three_sections_seven_body_segments(self):
        # Hand-built expectation: 3 headings, 2+3+2 body paragraphs.
        doc = parse_document(RawDocument("fix-1", "markup", MARKUP_FIXTURE))
        sections = doc.root.children
        assert len(sections) == 3
        assert [len(s.body) for s in sections] == [2, 3, 2]
        assert [s.heading.text for s in sections] == [
            "1. Background of the dispute",
            "2. The parties' contentions",
            "3. Judgment of the court",
        ]
        body = [seg for seg in segments_in_reading_order(doc) if not seg.is_heading]
        assert len(body) == 7

    def test_nested_sections_preorder(self):
        markup = (
            "<h1>1. Findings</h1><p>The alpha finding stands.</p>"
            "<h2>1.1 Standing</h2><p>The beta point holds.</p><p>The gamma point fails.</p>"
            "<h1>2. Conclusion</h1><p>The delta claim is dismissed.</p>"
        )
        doc = parse_document(RawDocument("fix-2", "markup", markup))
        # Hand enumeration of the expected pre-order flattening.
        texts = [seg.text for seg in segments_in_reading_order(doc)]
        assert texts == [
            "1. Findings",
            "The alpha finding stands.",
            "1.1 Standing",
            "The beta point holds.",
            "The gamma point fails.",
            "2. Conclusion",
            "The delta claim is dismissed.",
        ]
        nested = doc.root.children[0].children[0]
        assert nested.path == (0, 0)
        assert [seg.text for seg in nested.body] == [
            "The beta point holds.",
            "The gamma point fails.",
        ]

    def test_empty_document_raises(self):
        with pytest.raises(EmptyDocument):
            parse_document(RawDocument("fix-3", "markup", "  \n <p>  </p> \n"))

    def test_text_conservation(self):
        doc = parse_document(RawDocument("fix-4", "markup", MARKUP_FIXTURE))
        joined = " ".join(seg.text for seg in segments_in_reading_order(doc))
        assert normalize_ws(joined) == normalize_ws(strip_markup(MARKUP_FIXTURE))

    def test_overview_section_detected(self):
        markup = (
            "<h1>Case overview</h1><p>The plaintiff challenges a levy.</p>"
            "<h1>1. Findings</h1><p>facts here</p>"
        )
        doc = parse_document(RawDocument("fix-5", "markup", markup))
        assert doc.case_overview == "The plaintiff challenges a levy."

    def test_plain_text_without_tags(self):
        text = "1. Findings\nThe plaintiff filed a claim about the levy decision.\n"
        doc = parse_document(RawDocument("fix-6", "markup", text))
        assert doc.root.children[0].heading.text == "1. Findings"
        assert len(doc.root.children[0].body) == 1

    def test_invalid_utf8_rejected(self):
        with pytest.raises(MalformedMarkup):
            RawDocument.from_bytes("fix-7", "markup", b"\xff\xfe broken")


class TestReadingOrder:
    def test_single_section_identity_order(self):
        doc = parse_document(
            RawDocument("ro-1", "structured-json", json.dumps(
                {"sections": [{"heading": None, "paragraphs": ["a", "b", "c"]}]}
            ))
        )
        assert [seg.text for seg in segments_in_reading_order(doc)] == ["a", "b", "c"]

    def test_two_sections_preserve_order(self):
        doc = parse_document(
            RawDocument("ro-2", "structured-json", json.dumps(
                {"sections": [
                    {"heading": None, "paragraphs": ["a"]},
                    {"heading": None, "paragraphs": ["b"]},
                ]}
            ))
        )
        assert [seg.text for seg in segments_in_reading_order(doc)] == ["a", "b"]

    def test_stable_across_calls(self):
        doc = parse_document(RawDocument("ro-3", "markup", MARKUP_FIXTURE))
        first = [seg.segment_id for seg in segments_in_reading_order(doc)]
        second = [seg.segment_id for seg in segments_in_reading_order(doc)]
        assert first == second


class TestStructuredJson:
    def test_segment_ids_and_ordinals(self):
        doc = parse_document(
            RawDocument("sj-1", "structured-json", json.dumps(
                {"case_overview": "ov", "sections": [
                    {"heading": "1. Findings", "paragraphs": ["p0", "p1"]}
                ]}
            ))
        )
        section = doc.root.children[0]
        assert section.heading.segment_id == "sj-1/s0/0"
        assert [seg.segment_id for seg in section.body] == ["sj-1/s0/1", "sj-1/s0/2"]
        assert doc.case_overview == "ov"

    def test_gold_unknown_segment_rejected(self):
        payload = {
            "sections": [{"heading": None, "paragraphs": ["text"]}],
            "gold": {"nodes": [{"segment": "sj-2/s9/9", "label": "Fact", "text": "text"}],
                     "edges": []},
        }
        with pytest.raises(MalformedMarkup, match="unknown segment"):
            parse_document(RawDocument("sj-2", "structured-json", json.dumps(payload)))

    def test_gold_bad_edge_signature_rejected(self):
        payload = {
            "sections": [{"heading": None, "paragraphs": ["fact text", "app text"]}],
            "gold": {
                "nodes": [
                    {"segment": "sj-3/s0/0", "label": "Fact", "text": "fact text"},
                    {"segment": "sj-3/s0/1", "label": "LegalApplication", "text": "app text"},
                ],
                "edges": [
                    {"type": "AppliesNorm", "src": "sj-3/s0/0#Fact",
                     "dst": "sj-3/s0/1#LegalApplication"}
                ],
            },
        }
        with pytest.raises(MalformedMarkup, match="signature"):
            parse_document(RawDocument("sj-3", "structured-json", json.dumps(payload)))

    def test_corpus_version_enforced(self):
        with pytest.raises(MalformedMarkup, match="version"):
            parse_corpus_text(json.dumps({"version": "nope", "documents": []}))

    def test_corpus_round_trip(self, small_docs):
        text = dump_corpus(small_docs)
        again = parse_corpus_text(text)
        assert dump_corpus(again) == text
