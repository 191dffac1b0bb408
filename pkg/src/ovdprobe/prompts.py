"""Prompt construction: hybrid compositions, single-concept templates, detection set."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)

SINGLE_CONCEPT_TEMPLATE = "{keyword}, high resolution, standing on the road"
HYBRID_SUFFIX = "hybrid"
MAX_HYBRID_COMPONENTS = 4


@dataclass(frozen=True)
class PromptSpec:
    kind: str  # "hybrid" | "single_concept" | "detection"
    text: str
    components: tuple[str, ...] = ()
    seed: int | None = None
    prompt_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("hybrid", "single_concept", "detection"):
            raise ValueError(f"unknown prompt kind {self.kind!r}")
        if not self.text:
            raise ValueError("prompt text must be nonempty")


DETECTION_PROMPTS: tuple[PromptSpec, ...] = (
    PromptSpec(kind="detection", text="object", prompt_id="p1"),
    PromptSpec(kind="detection", text="object . animal . person", prompt_id="p2"),
    PromptSpec(kind="detection", text="object on the street", prompt_id="p3"),
    PromptSpec(kind="detection", text="obstacle on the street", prompt_id="p4"),
    PromptSpec(kind="detection", text="something on the street", prompt_id="p5"),
)


def detection_prompts() -> list[PromptSpec]:
    """The fixed five-prompt detection set, order-stable."""
    return list(DETECTION_PROMPTS)


def hybrid_prompt(noun_list: list[str], seed: int | None = None) -> PromptSpec:
    """Compose 1 to 4 distinct nouns, drawn uniformly, into a `w1_w2_..._hybrid` prompt.

    When the list holds fewer distinct nouns than the drawn count, the count is
    reduced to what is available.  Multi-word nouns are underscored before joining.
    """
    if not noun_list:
        raise ValueError("noun list must be nonempty")
    distinct: list[str] = []
    seen: set[str] = set()
    for noun in noun_list:
        if noun not in seen:
            seen.add(noun)
            distinct.append(noun)
    rng = random.Random(seed)
    k = min(rng.randint(1, MAX_HYBRID_COMPONENTS), len(distinct))
    drawn = rng.sample(distinct, k)
    text = "_".join(w.replace(" ", "_") for w in drawn) + "_" + HYBRID_SUFFIX
    return PromptSpec(kind="hybrid", text=text, components=tuple(drawn), seed=seed)


def parse_hybrid(text: str) -> tuple[str, ...]:
    """Split a hybrid prompt back into its component words (single-token nouns)."""
    parts = text.split("_")
    if len(parts) < 2 or parts[-1] != HYBRID_SUFFIX:
        raise ValueError(f"not a hybrid prompt: {text!r}")
    return tuple(parts[:-1])


def single_concept_prompt(keyword: str, keyword_list: list[str] | None = None) -> PromptSpec:
    """Template prompt `<keyword>, high resolution, standing on the road`."""
    if not keyword or not keyword.strip():
        raise ValueError("keyword must be nonempty")
    if keyword_list is not None and keyword not in keyword_list:
        logger.warning("keyword %r is not in the configured keyword list", keyword)
    return PromptSpec(
        kind="single_concept",
        text=SINGLE_CONCEPT_TEMPLATE.format(keyword=keyword),
        components=(keyword,),
    )


def load_word_list(path: Path | str) -> list[str]:
    """One entry per line, UTF-8, '#' comment lines and blanks skipped."""
    words: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        entry = line.strip()
        if not entry or entry.startswith("#"):
            continue
        words.append(entry)
    return words


def _load_packaged(name: str) -> list[str]:
    text = resources.files("ovdprobe.data").joinpath(name).read_text(encoding="utf-8")
    return [
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]


def default_keywords() -> list[str]:
    """The shipped single-concept keyword list (duplicates preserved)."""
    return _load_packaged("keywords.txt")


def default_nouns() -> list[str]:
    """The shipped noun list for hybrid prompts."""
    return _load_packaged("nouns.txt")
