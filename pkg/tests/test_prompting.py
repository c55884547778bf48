"""Tests for prompt rendering, response parsing, and replay scoring."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curribert.prompting import (
    PromptBundle,
    ResponseParseError,
    default_instruction,
    load_responses,
    make_bundle,
    parse_response,
    render_prompt,
    score_responses,
)
from curribert.training import LabeledExample


def _bundle(**overrides) -> PromptBundle:
    fields = dict(
        instruction="Decide whether the author shows signs of anxiety.",
        shot_text="I cannot sleep before exams.",
        shot_label="yes",
        query_text="I enjoy long walks.",
        disorder="anxiety",
    )
    fields.update(overrides)
    return PromptBundle(**fields)


class TestBundle:
    def test_shot_label_must_be_yes_or_no(self):
        with pytest.raises(ValueError, match="shot_label"):
            _bundle(shot_label="maybe")

    def test_blank_fields_rejected(self):
        with pytest.raises(ValueError, match="query_text"):
            _bundle(query_text="   ")

    def test_make_bundle_draws_shot_from_train_split(self):
        train = [LabeledExample(f"train post {i}", i % 2) for i in range(10)]
        rng = np.random.default_rng(0)
        bundle = make_bundle(train, "query post", "depression", rng)
        source = next(ex for ex in train if ex.text == bundle.shot_text)
        assert bundle.shot_label == ("yes" if source.label == 1 else "no")
        assert bundle.query_text == "query post"

    def test_make_bundle_rejects_empty_train_split(self):
        with pytest.raises(ValueError, match="train split is empty"):
            make_bundle([], "q", "depression", np.random.default_rng(0))

    def test_default_instruction_names_disorder(self):
        assert "depression" in default_instruction("depression")


class TestRenderPrompt:
    def test_same_bundle_renders_identically(self):
        assert render_prompt(_bundle()) == render_prompt(_bundle())

    def test_disorder_fills_both_question_slots(self):
        out = render_prompt(_bundle(disorder="anxiety"))
        assert out.count("Does the author show signs of anxiety?") == 2

    def test_shot_appears_before_query(self):
        bundle = _bundle()
        out = render_prompt(bundle)
        assert out.index(bundle.shot_text) < out.index(bundle.query_text)
        assert out.index(bundle.instruction) < out.index(bundle.shot_text)

    def test_shot_label_follows_shot_text(self):
        out = render_prompt(_bundle(shot_label="no"))
        shot_part = out[: out.index("Post:")]
        assert "Answer: no" in shot_part

    def test_render_contains_only_the_query_from_unseen_text(self):
        bundle = _bundle()
        out = render_prompt(bundle)
        assert bundle.query_text in out
        assert out.strip().endswith("yes or no:")


class TestParseResponse:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("Yes, this post shows signs.", 1),
            ("no", 0),
            ("  YES  ", 1),
            ("No. The author seems fine.", 0),
            ("I think the answer is yes.", 1),
        ],
    )
    def test_first_standalone_yes_no_wins(self, raw, expected):
        assert parse_response(raw) == expected

    def test_first_match_decides_when_both_present(self):
        assert parse_response("no, wait, yes") == 0
        assert parse_response("yes... no?") == 1

    def test_substrings_do_not_count(self):
        with pytest.raises(ResponseParseError):
            parse_response("eyes and nose")

    def test_unparseable_raises(self):
        with pytest.raises(ResponseParseError, match="no standalone yes/no"):
            parse_response("The post is ambiguous.")


class TestScoreResponses:
    def test_unparseable_scored_negative_and_counted(self):
        responses = ["yes", "The post is ambiguous.", "no", "unclear"]
        labels = [1, 1, 0, 0]
        report = score_responses(responses, labels)
        assert report.unparsed_count == 2
        # Fallback negatives: preds are 1,0,0,0.
        assert (report.tp, report.fp, report.fn, report.tn) == (1, 0, 1, 2)
        assert "unparsed_count" in report.to_dict()

    def test_all_parseable_reports_zero_unparsed(self):
        report = score_responses(["yes", "no"], [1, 0])
        assert report.unparsed_count == 0
        assert report.f1 == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="length mismatch"):
            score_responses(["yes"], [1, 0])

    @given(st.lists(st.sampled_from(["yes", "no", "???"]), min_size=1, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_unparsed_count_matches_fallbacks(self, responses):
        labels = [1] * len(responses)
        report = score_responses(responses, labels)
        assert report.unparsed_count == sum(r == "???" for r in responses)
        assert report.tp == sum(r == "yes" for r in responses)


class TestLoadResponses:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "r.jsonl"
        p.write_text('{"response": "yes"}\n\n{"response": "no"}\n')
        assert load_responses(p) == ["yes", "no"]

    def test_missing_field_rejected_with_line(self, tmp_path):
        p = tmp_path / "r.jsonl"
        p.write_text('{"response": "yes"}\n{"answer": "no"}\n')
        with pytest.raises(ValueError, match=r"r\.jsonl:2"):
            load_responses(p)

    def test_malformed_json_rejected(self, tmp_path):
        p = tmp_path / "r.jsonl"
        p.write_text("nope\n")
        with pytest.raises(ValueError, match="expected JSON with a response field"):
            load_responses(p)
