"""One-shot yes/no prompt rendering and response parsing for generative baselines.

The template is this project's own wording. Generation itself is out of scope;
responses recorded elsewhere can be replayed through score_responses.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import EvalReport, compute_metrics
from .training import LabeledExample

PROMPT_TEMPLATE = (
    "{instruction}\n"
    "\n"
    "Example post: {shot_text}\n"
    "Does the author show signs of {disorder}? Answer: {shot_label}\n"
    "\n"
    "Post: {query_text}\n"
    "Does the author show signs of {disorder}? Answer with one word, yes or no:"
)

_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


class ResponseParseError(ValueError):
    pass


@dataclass
class PromptBundle:
    instruction: str
    shot_text: str
    shot_label: str
    query_text: str
    disorder: str

    def __post_init__(self):
        if self.shot_label not in ("yes", "no"):
            raise ValueError(f"shot_label must be 'yes' or 'no', got {self.shot_label!r}")
        for name in ("instruction", "shot_text", "query_text", "disorder"):
            if not getattr(self, name).strip():
                raise ValueError(f"{name} must be non-empty")


def default_instruction(disorder: str) -> str:
    return (
        "You are screening posts from a mental health support forum. "
        f"Decide whether the author of each post shows signs of {disorder}. "
        "Answer with a single word: yes or no."
    )


def make_bundle(
    train_set: Sequence[LabeledExample],
    query_text: str,
    disorder: str,
    rng: np.random.Generator,
) -> PromptBundle:
    """Draw the one labeled shot from the train split, never from test data."""
    if not train_set:
        raise ValueError("train split is empty; cannot draw a shot")
    shot = train_set[int(rng.integers(len(train_set)))]
    return PromptBundle(
        instruction=default_instruction(disorder),
        shot_text=shot.text,
        shot_label="yes" if shot.label == 1 else "no",
        query_text=query_text,
        disorder=disorder,
    )


def render_prompt(bundle: PromptBundle) -> str:
    """Pure substitution of the bundle fields into the fixed template."""
    return PROMPT_TEMPLATE.format(
        instruction=bundle.instruction,
        shot_text=bundle.shot_text,
        shot_label=bundle.shot_label,
        query_text=bundle.query_text,
        disorder=bundle.disorder,
    )


def parse_response(raw: str) -> int:
    """First standalone yes/no decides the label; anything else is a parse error."""
    m = _YES_NO.search(raw)
    if m is None:
        raise ResponseParseError(f"no standalone yes/no in response: {raw!r}")
    return 1 if m.group(1).lower() == "yes" else 0


def score_responses(responses: Sequence[str], labels: Sequence[int]) -> EvalReport:
    """Score raw responses; unparseable ones count as negative and are tallied."""
    if len(responses) != len(labels):
        raise ValueError(
            f"length mismatch: {len(responses)} responses vs {len(labels)} labels"
        )
    preds = []
    unparsed = 0
    for raw in responses:
        try:
            preds.append(parse_response(raw))
        except ResponseParseError:
            preds.append(0)
            unparsed += 1
    report = compute_metrics(preds, labels)
    report.unparsed_count = unparsed
    return report


def load_responses(path: str | Path) -> list[str]:
    """Read pre-recorded responses from JSONL lines {"response": str}."""
    out = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.append(str(row["response"]))
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}:{i}: expected JSON with a response field ({e})") from e
    return out
