from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpminer.documents import (
    CommandExtractor,
    ExtractionFailed,
    FixtureExtractor,
    PartKind,
    PaperDocument,
    TextPart,
    TokenBudget,
    clean_text,
    curate_document,
    estimate_tokens,
    extract_text,
    save_document,
    split_for_budget,
    strip_references,
)

texts = st.text(
    alphabet=st.sampled_from(list("ab cd.\nRe!")), max_size=400
)


class TestStripReferences:
    def test_canonical_heading(self):
        body = "Body text here. " * 10
        assert strip_references(f"{body}\nReferences\n[1] something") == body.rstrip()

    def test_numbered_heading(self):
        text = "Intro.\n" + "body line\n" * 20 + "7. References\n[1] x"
        out = strip_references(text)
        assert "References" not in out

    def test_bibliography_and_literature_cited(self):
        for heading in ("Bibliography", "LITERATURE CITED", "references:"):
            text = "Main content of the paper. " * 10 + "\n" + heading + "\n[1] x"
            assert "[1]" not in strip_references(text)

    def test_early_heading_ignored(self):
        text = "References\n" + "body " * 200
        assert strip_references(text) == text

    def test_identity_without_heading(self):
        text = "no heading anywhere\njust body"
        assert strip_references(text) == text

    def test_inline_mention_not_a_heading(self):
        text = "x\n" * 10 + "as listed in the References section below we see\nmore text"
        assert strip_references(text) == text

    @given(texts)
    def test_output_is_prefix(self, text):
        out = strip_references(text)
        assert text.startswith(out)


class TestCleanText:
    def test_whitespace_rules(self):
        assert clean_text("a  \n\n\n\nb") == "a\n\nb"

    def test_tab_and_space_runs_collapse(self):
        assert clean_text("a\t\t b   c") == "a b c"

    def test_bare_page_number_removed(self):
        assert clean_text("para one\n\n17\n\npara two") == "para one\n\npara two"

    def test_downloaded_from_line_removed(self):
        out = clean_text("text\nDownloaded from jb.asm.org on March 3\nmore")
        assert out == "text\nmore"

    def test_doi_only_line_removed(self):
        out = clean_text("text\n10.1128/jb.100.2.100-200.1969\nmore")
        assert out == "text\nmore"

    def test_mostly_symbolic_line_removed(self):
        out = clean_text("text\n|||| #### ---- ++++ ||||\nmore")
        assert out == "text\nmore"

    @given(texts)
    @settings(max_examples=200)
    def test_idempotent(self, text):
        once = clean_text(text)
        assert clean_text(once) == once

    @given(texts)
    def test_no_new_characters(self, text):
        allowed = set(text) | {" ", "\n"}
        assert set(clean_text(text)) <= allowed


class TestEstimateTokens:
    @pytest.mark.parametrize("text,expected", [("", 0), ("x" * 8, 2), ("x" * 9, 3)])
    def test_ceiling_rule(self, text, expected):
        assert estimate_tokens(text) == expected

    @given(texts, texts)
    def test_monotone_under_extension(self, prefix, suffix):
        assert estimate_tokens(prefix) <= estimate_tokens(prefix + suffix)


class TestSplitForBudget:
    def test_under_budget_single_part(self):
        parts = split_for_budget("short text", TokenBudget(100))
        assert parts == [TextPart(PartKind.START, "short text")]

    def test_two_parts_within_budget(self):
        sentences = " ".join(f"Sentence number {i} is here." for i in range(40))
        budget = TokenBudget(estimate_tokens(sentences) * 2 // 5)
        parts = split_for_budget(sentences, budget)
        assert [p.kind for p in parts] == [PartKind.START, PartKind.END]
        for part in parts:
            assert estimate_tokens(part.text) <= budget.max_tokens
        assert sentences.startswith(parts[0].text)
        assert sentences.endswith(parts[1].text)

    def test_boundary_free_text_hard_cut(self):
        parts = split_for_budget("abcdefghij", TokenBudget(1))
        assert len(parts) == 2
        assert all(len(p.text) <= 4 for p in parts)

    @given(texts, st.integers(min_value=1, max_value=50))
    @settings(max_examples=200)
    def test_budget_prefix_suffix_properties(self, text, max_tokens):
        budget = TokenBudget(max_tokens)
        parts = split_for_budget(text, budget)
        if len(parts) == 1:
            assert parts[0].text == text
            assert estimate_tokens(text) <= budget.max_tokens
        else:
            start, end = parts
            assert (start.kind, end.kind) == (PartKind.START, PartKind.END)
            assert text.startswith(start.text)
            assert text.endswith(end.text)
            assert estimate_tokens(start.text) <= budget.max_tokens
            assert estimate_tokens(end.text) <= budget.max_tokens


class TestPaperDocument:
    def test_part_kind_ordering_enforced(self):
        with pytest.raises(ValueError):
            PaperDocument("a", "x", "x", (TextPart(PartKind.END, "x"), TextPart(PartKind.START, "x")))
        with pytest.raises(ValueError):
            PaperDocument("a", "x", "x", ())

    def test_curate_document_pipeline(self):
        raw = "Intro   text.\n\n\n\nMore body.\nReferences\n[1] ref"
        doc = curate_document("a1", raw, TokenBudget(1000))
        assert doc.curated_text == "Intro text.\n\nMore body."
        assert len(doc.parts) == 1

    def test_save_document_writes_sidecar(self, tmp_path):
        doc = curate_document("a/1", "Some body text.", TokenBudget(10))
        path = save_document(doc, tmp_path)
        assert path.read_text(encoding="utf-8") == doc.curated_text
        sidecar = path.with_suffix(".json")
        assert sidecar.exists()
        assert "token_estimate" in sidecar.read_text()


class TestExtractText:
    def test_fixture_replay(self):
        extractor = FixtureExtractor()
        extractor.add(b"%PDF-fake", "hello world")
        assert "hello world" in extract_text(b"%PDF-fake", extractor)

    def test_empty_stream_fails(self):
        with pytest.raises(ExtractionFailed):
            extract_text(b"", FixtureExtractor())

    def test_unknown_bytes_fail(self):
        with pytest.raises(ExtractionFailed):
            extract_text(b"%PDF-unknown", FixtureExtractor())

    def test_command_extractor_runs_external_process(self):
        # cat stands in for a PDF converter: output equals input bytes.
        extractor = CommandExtractor(command=("cat", "{input}"))
        assert extract_text(b"plain text pretending to be a pdf", extractor) == (
            "plain text pretending to be a pdf"
        )

    def test_command_extractor_failure(self):
        extractor = CommandExtractor(command=("false",))
        with pytest.raises(ExtractionFailed):
            extract_text(b"x", extractor)
