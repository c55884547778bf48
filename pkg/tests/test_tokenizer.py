"""Vocabulary induction, greedy encoding, and decoding tests."""

import pytest
from hypothesis import given, settings, strategies as st

from curribert.corpus import RawDocument, normalize
from curribert.tokenizer import (
    CLS_ID,
    MASK_ID,
    NUM_SPECIALS,
    PAD_ID,
    SEP_ID,
    SPECIAL_TOKENS,
    UNK_ID,
    Vocabulary,
    build_vocab,
    decode,
    encode,
)


def _docs(*texts):
    return [RawDocument(doc_id=f"d{i}", text=t) for i, t in enumerate(texts)]


class TestVocabulary:
    def test_special_ids_pinned(self):
        assert (PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID) == (0, 1, 2, 3, 4)
        assert SPECIAL_TOKENS[PAD_ID] == "[PAD]"

    def test_specials_must_lead(self):
        with pytest.raises(ValueError, match="first 5 tokens"):
            Vocabulary(["a", "b", "c", "d", "e"])

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Vocabulary(list(SPECIAL_TOKENS) + ["a", "a"])

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocab(_docs("aa aa aa"), target_size=8)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded == vocab
        assert loaded.content_hash() == vocab.content_hash()

    def test_sidecar_header_written(self, tmp_path):
        import json

        vocab = build_vocab(_docs("aa aa aa"), target_size=8)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        header = json.loads((tmp_path / "vocab.txt.json").read_text())
        assert header == {"version": 1, "size": len(vocab), "specials": list(SPECIAL_TOKENS)}

    def test_sidecar_size_mismatch_rejected(self, tmp_path):
        vocab = build_vocab(_docs("aa aa aa"), target_size=8)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        (tmp_path / "vocab.txt.json").write_text('{"version": 1, "size": 3}')
        with pytest.raises(ValueError, match="size mismatch"):
            Vocabulary.load(path)

    def test_missing_file_is_an_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            Vocabulary.load(tmp_path / "nope.txt")

    def test_content_hash_tracks_content(self, tmp_path):
        v1 = build_vocab(_docs("aa aa aa"), target_size=8)
        v2 = build_vocab(_docs("bb bb bb"), target_size=8)
        assert v1.content_hash() != v2.content_hash()


class TestBuildVocab:
    def test_most_frequent_pair_merges_first(self):
        """Corpus 'aa aa aa' has (a, ##a) as the unique top pair, so 'aa' appears."""
        vocab = build_vocab(_docs("aa aa aa"), target_size=8)
        assert "aa" in vocab.id_of

    def test_below_specials_floor_rejected(self):
        with pytest.raises(ValueError, match="target_size too small"):
            build_vocab(_docs("aa"), target_size=4)

    def test_deterministic_for_fixed_corpus(self):
        docs = _docs("the cat sat on the mat", "the cats sat")
        v1 = build_vocab(docs, target_size=30)
        v2 = build_vocab(docs, target_size=30)
        assert v1.tokens == v2.tokens

    def test_exactly_target_size(self):
        vocab = build_vocab(_docs("the cat sat on the mat"), target_size=30)
        assert len(vocab) == 30

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_vocab(_docs("   "), target_size=10)

    def test_merges_exhausted_reported(self):
        with pytest.raises(ValueError, match="corpus too small"):
            build_vocab(_docs("ab"), target_size=100)

    def test_layout_specials_then_chars(self):
        vocab = build_vocab(_docs("ab ba"), target_size=11)
        assert tuple(vocab.tokens[:NUM_SPECIALS]) == SPECIAL_TOKENS
        assert vocab.tokens[NUM_SPECIALS : NUM_SPECIALS + 2] == ["a", "b"]
        assert vocab.tokens[NUM_SPECIALS + 2 : NUM_SPECIALS + 4] == ["##a", "##b"]


class TestEncode:
    def test_greedy_longest_match_with_specials(self):
        """'the cats' against {the, cat, ##s} segments as [CLS, the, cat, ##s, SEP]."""
        vocab = Vocabulary(
            list(SPECIAL_TOKENS)
            + ["t", "h", "e", "c", "a", "s", "##t", "##h", "##e", "##c", "##a"]
            + ["the", "cat", "##s"]
        )
        ids = encode("the cats", vocab, add_specials=True)
        toks = [vocab.tokens[i] for i in ids]
        assert toks == ["[CLS]", "the", "cat", "##s", "[SEP]"]

    def test_empty_text_with_specials(self):
        vocab = build_vocab(_docs("aa"), target_size=8)
        assert encode("", vocab, add_specials=True) == [CLS_ID, SEP_ID]

    def test_unmatchable_word_becomes_single_unk(self):
        vocab = build_vocab(_docs("aa aa"), target_size=8)
        ids = encode("aa zz aa", vocab)
        assert ids.count(UNK_ID) == 1

    def test_never_emits_pad_or_mask(self):
        vocab = build_vocab(_docs("the cat sat on the mat"), target_size=30)
        ids = encode("the cat sat", vocab, add_specials=True)
        assert PAD_ID not in ids and MASK_ID not in ids
        assert ids[0] == CLS_ID and ids[-1] == SEP_ID

    def test_normalizes_before_segmenting(self):
        vocab = build_vocab(_docs("aa"), target_size=8)
        assert encode("AA", vocab) == encode("aa", vocab)

    @given(st.lists(st.sampled_from(["aa", "ab", "ba", "abab", "baba"]), min_size=1, max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_round_trip_on_segmentable_text(self, words):
        """decode(encode(text)) = normalize(text) when every word segments."""
        docs = _docs("aa ab ba abab baba " * 3)
        vocab = build_vocab(docs, target_size=16)
        text = " ".join(words)
        assert decode(encode(text, vocab, add_specials=True), vocab) == normalize(text)

    def test_greedy_maximality_against_brute_force(self):
        """No emitted piece extends to a longer in-vocabulary piece at its offset."""
        vocab = build_vocab(_docs("abc abc ab a bc c"), target_size=14)
        for word in ("abc", "ab", "bc", "aabc", "abcabc"):
            ids = encode(word, vocab)
            if UNK_ID in ids:
                continue
            offset = 0
            for pid in ids:
                piece = vocab.tokens[pid]
                surface = piece[2:] if piece.startswith("##") else piece
                for longer_end in range(offset + len(surface) + 1, len(word) + 1):
                    cand = word[offset:longer_end]
                    lookup = cand if offset == 0 else "##" + cand
                    assert lookup not in vocab.id_of
                offset += len(surface)


class TestDecode:
    def test_drops_structural_specials(self):
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["hi"])
        assert decode([CLS_ID, 5, SEP_ID], vocab) == "hi"

    def test_empty_sequence(self):
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["hi"])
        assert decode([CLS_ID, SEP_ID], vocab) == ""

    def test_unk_renders_surface_form(self):
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["hi"])
        assert decode([UNK_ID], vocab) == "[UNK]"

    def test_out_of_range_id_rejected(self):
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["hi"])
        with pytest.raises(ValueError, match="out of range"):
            decode([99], vocab)

    def test_continuation_pieces_glue(self):
        vocab = Vocabulary(list(SPECIAL_TOKENS) + ["cat", "##s"])
        assert decode([5, 6], vocab) == "cats"
