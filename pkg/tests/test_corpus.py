"""Corpus ingestion, normalization, statistics, and windowing tests."""

import json

import pytest
from hypothesis import given, settings, strategies as st

from curribert.corpus import (
    CorpusStats,
    RawDocument,
    corpus_stats,
    ingest,
    make_windows,
    normalize,
)


class TestIngest:
    def test_plain_dir_lexicographic_order(self, tmp_path):
        (tmp_path / "b.txt").write_text("second", encoding="utf-8")
        (tmp_path / "a.txt").write_text("first", encoding="utf-8")
        docs = ingest(tmp_path, format="plain-dir")
        assert [d.doc_id for d in docs] == ["a", "b"]
        assert [d.text for d in docs] == ["first", "second"]

    def test_empty_directory_is_an_error(self, tmp_path):
        with pytest.raises(ValueError, match="no documents found"):
            ingest(tmp_path, format="plain-dir")

    def test_missing_path_is_an_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest(tmp_path / "nope", format="plain-dir")

    def test_jsonl_preserves_line_order(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        lines = [{"id": f"d{i}", "text": f"text {i}"} for i in range(3)]
        path.write_text("\n".join(json.dumps(o) for o in lines), encoding="utf-8")
        docs = ingest(path, format="jsonl")
        assert [d.doc_id for d in docs] == ["d0", "d1", "d2"]

    def test_malformed_jsonl_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a", "text": "ok"}\n{broken\n', encoding="utf-8")
        with pytest.raises(ValueError, match="line 2"):
            ingest(path, format="jsonl")

    def test_jsonl_missing_field_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="line 1"):
            ingest(path, format="jsonl")

    def test_non_utf8_file_is_an_error(self, tmp_path):
        (tmp_path / "bad.txt").write_bytes(b"\xff\xfe\x00garbage")
        with pytest.raises(ValueError, match="not valid UTF-8"):
            ingest(tmp_path, format="plain-dir")

    def test_duplicate_doc_id_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="duplicate doc_id"):
            ingest(path, format="jsonl")

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown corpus format"):
            ingest(tmp_path, format="parquet")


class TestNormalize:
    def test_lowercases_and_collapses_whitespace(self):
        assert normalize("Hello   World") == "hello world"

    def test_empty_string(self):
        assert normalize("") == ""

    def test_mixed_whitespace(self):
        assert normalize("A\n\tB ") == "a b"

    @given(st.text())
    def test_idempotent(self, text):
        assert normalize(normalize(text)) == normalize(text)


class TestCorpusStats:
    def test_hand_counted_doc(self):
        """'Hello world. Bye.' has 3 words and 2 terminated sentences."""
        stats = corpus_stats([RawDocument(doc_id="d", text="Hello world. Bye.")])
        assert stats == CorpusStats(word_count=3, sentence_count=2, doc_count=1)

    def test_zero_docs(self):
        assert corpus_stats([]) == CorpusStats(word_count=0, sentence_count=0, doc_count=0)

    def test_trailing_unterminated_segment_counts_once(self):
        stats = corpus_stats([RawDocument(doc_id="d", text="no terminator here")])
        assert stats.word_count == 3
        assert stats.sentence_count == 1

    def test_word_count_additive_over_docs(self):
        a = RawDocument(doc_id="a", text="one two three.")
        b = RawDocument(doc_id="b", text="four five?")
        combined = corpus_stats([a, b])
        assert combined.word_count == corpus_stats([a]).word_count + corpus_stats([b]).word_count
        assert combined.doc_count == 2

    def test_to_dict_keys(self):
        d = corpus_stats([]).to_dict()
        assert set(d) == {"word_count", "sentence_count", "doc_count"}


class TestMakeWindows:
    def test_short_input_single_window(self):
        windows = make_windows(list(range(300)), window_len=500, overlap=50)
        assert len(windows) == 1
        assert windows[0].ids == tuple(range(300))
        assert windows[0].start == 0

    def test_stride_arithmetic(self):
        """1000 tokens at (500, 50) cut into [0,500), [450,950), [900,1000)."""
        windows = make_windows(list(range(1000)), window_len=500, overlap=50)
        spans = [(w.start, w.start + len(w.ids)) for w in windows]
        assert spans == [(0, 500), (450, 950), (900, 1000)]

    def test_exact_fit_yields_one_window(self):
        windows = make_windows(list(range(500)), window_len=500, overlap=50)
        assert len(windows) == 1

    def test_empty_input_returns_empty(self):
        assert make_windows([], window_len=500, overlap=50) == []

    def test_overlap_must_be_below_window_len(self):
        with pytest.raises(ValueError, match="overlap"):
            make_windows([1, 2, 3], window_len=4, overlap=4)

    def test_window_len_must_be_positive(self):
        with pytest.raises(ValueError, match="window_len"):
            make_windows([1, 2, 3], window_len=0, overlap=0)

    def test_consecutive_full_windows_share_exactly_overlap_tokens(self):
        windows = make_windows(list(range(1000)), window_len=500, overlap=50)
        first, second = windows[0], windows[1]
        assert first.ids[-50:] == second.ids[:50]

    @given(
        n=st.integers(min_value=0, max_value=2000),
        window_len=st.integers(min_value=1, max_value=600),
        overlap_frac=st.floats(min_value=0.0, max_value=0.99),
    )
    @settings(max_examples=200, deadline=None)
    def test_reconstruction_property(self, n, window_len, overlap_frac):
        """Stripping each later window's first `overlap` tokens rebuilds the input."""
        overlap = min(int(window_len * overlap_frac), window_len - 1)
        ids = list(range(n))
        windows = make_windows(ids, window_len=window_len, overlap=overlap)
        rebuilt = []
        for i, w in enumerate(windows):
            rebuilt.extend(w.ids if i == 0 else w.ids[overlap:])
        assert rebuilt == ids
        assert all(1 <= len(w.ids) <= window_len for w in windows)
