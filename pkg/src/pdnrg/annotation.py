"""Automatic corpus annotation and ground-truth action plans.

Knowledge links use the same TF-IDF cosine as run-time selection, but the
context is the annotated text itself (whole turn, or one sentence) rather
than the previous turn.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from .acts import DialogueAct
from .corpus import Dialogue, KnowledgeCorpus, Turn, knowledge_corpus_for
from .retrieval import DEFAULT_THRESHOLD, RetrievalIndex, TokenizerConfig, build_index, select_knowledge
from .tagging import Tag, heuristic_tag

CONFIDENCE_FLOOR = 0.5


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    """One sentence's plan: act, topic, knowledge and the use-knowledge flag."""

    da: DialogueAct
    topic: str | None = None
    knowledge_id: str | None = None
    knowledge: str | None = None
    use_knowledge: bool = False

    def __post_init__(self):
        if self.use_knowledge and self.knowledge_id is None and self.knowledge is None:
            raise AnnotationError("use_knowledge requires a knowledge sentence")

    def to_json(self) -> dict:
        return {
            "da": self.da.value,
            "topic": self.topic,
            "knowledge_id": self.knowledge_id,
            "knowledge": self.knowledge,
            "use_knowledge": self.use_knowledge,
        }

    @classmethod
    def from_json(cls, rec: Mapping) -> "Frame":
        return cls(
            da=DialogueAct.parse(rec["da"]),
            topic=rec.get("topic"),
            knowledge_id=rec.get("knowledge_id"),
            knowledge=rec.get("knowledge"),
            use_knowledge=bool(rec.get("use_knowledge", False)),
        )


@dataclass(frozen=True)
class ActionPlan:
    frames: tuple[Frame, ...]

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    @property
    def acts(self) -> tuple[DialogueAct, ...]:
        return tuple(f.da for f in self.frames)


def annotate_turn_knowledge(index: RetrievalIndex, turn: Turn, threshold: float = DEFAULT_THRESHOLD) -> Turn:
    if not turn.raw_text.strip():
        return replace(turn, knowledge_id=None, knowledge_score=0.0)
    sel = select_knowledge(index, turn.raw_text, threshold)
    return replace(turn, knowledge_id=sel.knowledge_id if sel.use_knowledge else None, knowledge_score=sel.score)


def annotate_sentence_knowledge(index: RetrievalIndex, turn: Turn, threshold: float = DEFAULT_THRESHOLD) -> Turn:
    sents = []
    for s in turn.sentences:
        sel = select_knowledge(index, s.text, threshold)
        sents.append(replace(s, knowledge_id=sel.knowledge_id if sel.use_knowledge else None, knowledge_score=sel.score))
    return replace(turn, sentences=tuple(sents))


def ingest_da_tags(turn: Turn, tags: Sequence[Tag], confidence_floor: float = CONFIDENCE_FLOOR) -> Turn:
    """Attach per-sentence tags; below-floor confidences become NoDialogueAct."""
    if len(tags) != len(turn.sentences):
        raise AnnotationError(f"{len(tags)} tags for {len(turn.sentences)} sentences")
    sents = tuple(
        replace(s, da=tag.label if tag.confidence >= confidence_floor else DialogueAct.NO_DA, da_confidence=tag.confidence)
        for s, tag in zip(turn.sentences, tags)
    )
    return replace(turn, sentences=sents)


def annotate_dialogue(
    dialogue: Dialogue,
    index: RetrievalIndex,
    tags: Mapping[tuple[str, int], Sequence[Tag]] | None = None,
    tagger: Callable[[str], Tag] = heuristic_tag,
    threshold: float = DEFAULT_THRESHOLD,
    confidence_floor: float = CONFIDENCE_FLOOR,
) -> Dialogue:
    """Knowledge-link every turn and sentence and attach dialogue acts.

    Tags come from ``tags`` (keyed by dialogue id and turn index) when the
    turn is present there, otherwise from ``tagger``.
    """
    turns = []
    for i, turn in enumerate(dialogue.turns):
        turn = annotate_turn_knowledge(index, turn, threshold)
        turn = annotate_sentence_knowledge(index, turn, threshold)
        turn_tags = None if tags is None else tags.get((dialogue.id, i))
        if turn_tags is None:
            turn_tags = [tagger(s.text) for s in turn.sentences]
        try:
            turn = ingest_da_tags(turn, turn_tags, confidence_floor)
        except AnnotationError as exc:
            raise AnnotationError(f"dialogue {dialogue.id!r} turn {i}: {exc}") from None
        turns.append(turn)
    return replace(dialogue, turns=tuple(turns))


def annotate_corpus(
    dialogues: Sequence[Dialogue],
    reading_sets: Mapping[str, Mapping[str, list[str]]],
    tags: Mapping[tuple[str, int], Sequence[Tag]] | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    confidence_floor: float = CONFIDENCE_FLOOR,
    config: TokenizerConfig = TokenizerConfig(),
) -> list[Dialogue]:
    out = []
    for d in dialogues:
        index = build_index(knowledge_corpus_for(d, reading_sets), config)
        out.append(annotate_dialogue(d, index, tags, threshold=threshold, confidence_floor=confidence_floor))
    return out


def assemble_action_plans(dialogue: Dialogue, knowledge: KnowledgeCorpus | None = None) -> list[ActionPlan]:
    """One ground-truth plan per turn, built from sentence-level annotations.

    ``knowledge`` resolves knowledge ids to text; without it frames carry
    ids only.
    """
    plans = []
    for i, turn in enumerate(dialogue.turns):
        missing = set()
        for s in turn.sentences:
            if s.da is None:
                missing.add("da")
            if s.knowledge_score is None:
                missing.add("knowledge")
        if missing:
            raise AnnotationError(
                f"dialogue {dialogue.id!r} turn {i}: missing annotation(s): {', '.join(sorted(missing))}"
            )
        frames = tuple(
            Frame(
                da=s.da,
                topic=turn.topic,
                knowledge_id=s.knowledge_id,
                knowledge=knowledge.get(s.knowledge_id) if knowledge is not None else None,
                use_knowledge=s.knowledge_id is not None,
            )
            for s in turn.sentences
        )
        plans.append(ActionPlan(frames))
    return plans


def no_da_fraction(dialogues: Sequence[Dialogue]) -> float:
    """Share of tagged sentences labelled NoDialogueAct."""
    das = [s.da for d in dialogues for t in d.turns for s in t.sentences if s.da is not None]
    if not das:
        raise AnnotationError("no tagged sentences")
    return sum(da is DialogueAct.NO_DA for da in das) / len(das)
