"""Corpus-level planning and generation, as driven by the command line."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .annotation import ActionPlan, assemble_action_plans
from .config import Config
from .corpus import Dialogue, KnowledgeCorpus, knowledge_corpus_for
from .generation import HttpRealizer, Realizer, TemplateRealizer, Variant, generate_turn, generate_turn_level
from .policy import Policy, PolicyContext, PolicyDecision, get_policy, turn_last_da
from .retrieval import KnowledgeSelection, RetrievalIndex, TokenizerConfig, build_index, select_knowledge


@dataclass(frozen=True)
class PlannedTurn:
    dialogue_id: str
    turn_idx: int
    plan: ActionPlan
    decision: PolicyDecision | None = None

    def to_json(self) -> dict:
        rec = {
            "dialogue_id": self.dialogue_id,
            "turn_idx": self.turn_idx,
            "frames": [f.to_json() for f in self.plan],
        }
        if self.decision is not None:
            rec["decision"] = self.decision.to_json()
        return rec


def dialogue_rng(seed: int, dialogue_id: str) -> random.Random:
    """Per-dialogue generator, so results do not depend on corpus order."""
    return random.Random(f"{seed}:{dialogue_id}")


def build_dialogue_index(dialogue: Dialogue, reading_sets: Mapping, config: Config) -> tuple[KnowledgeCorpus, RetrievalIndex]:
    corpus = knowledge_corpus_for(dialogue, reading_sets)
    tok = TokenizerConfig(config.retrieval.lowercase, config.retrieval.strip_punct)
    return corpus, build_index(corpus, tok)


def plan_dialogue(
    policy: Policy,
    dialogue: Dialogue,
    index: RetrievalIndex,
    rng: random.Random,
    threshold: float = 0.2,
    scorer: str = "tfidf",
) -> Iterator[PlannedTurn]:
    """Plan every turn position: turn ``j`` is planned from turns ``0..j-1``.

    Knowledge is selected against the most recent previous turn; the
    previous act is that turn's final act.
    """
    prev_knowledge = None
    for j, turn in enumerate(dialogue.turns):
        if j == 0:
            ctx = PolicyContext(0, current_selection=KnowledgeSelection.empty())
        else:
            selection = select_knowledge(index, dialogue.turns[j - 1].raw_text, threshold, scorer)
            ctx = PolicyContext(j, turn_last_da(dialogue, j - 1), prev_knowledge, selection)
        history = [t.raw_text for t in dialogue.turns[:j]]
        decision = policy(ctx, rng, history)
        prev_knowledge = decision.knowledge_id
        topic = turn.topic or (dialogue.turns[j - 1].topic if j else None)
        yield PlannedTurn(dialogue.id, j, decision.to_plan(topic), decision)


def plan_corpus(dialogues: Sequence[Dialogue], reading_sets: Mapping, config: Config) -> Iterator[PlannedTurn]:
    """Plans for every turn of every dialogue; policy ``gold`` uses the annotations."""
    name = config.policy.name
    for d in dialogues:
        corpus, index = build_dialogue_index(d, reading_sets, config)
        if name == "gold":
            for j, plan in enumerate(assemble_action_plans(d, corpus)):
                yield PlannedTurn(d.id, j, plan)
            continue
        policy = get_policy(
            name,
            weights=config.policy.weights,
            endpoint=config.policy.endpoint,
            timeout=config.generation.timeout,
            retries=config.generation.retries,
        )
        yield from plan_dialogue(
            policy, d, index, dialogue_rng(config.policy.seed, d.id), config.retrieval.threshold, config.retrieval.scorer
        )


def make_realizer(kind: str, config: Config) -> Realizer:
    if kind == "template":
        return TemplateRealizer()
    if kind == "http":
        gen = config.generation
        if not gen.endpoint:
            raise ValueError("the http realizer needs generation.endpoint (or --endpoint)")
        return HttpRealizer(gen.endpoint, gen.timeout, gen.retries, decoder_params=dict(gen.decoder_params))
    raise ValueError(f"unknown realizer {kind!r}; expected 'template' or 'http'")


def generate_corpus(
    dialogues: Sequence[Dialogue],
    reading_sets: Mapping,
    config: Config,
    realizer: Realizer,
) -> Iterator[dict]:
    """Plan and realize every turn; records pair the candidate with the human reference."""
    gen = config.generation
    variant = Variant(gen.variant)
    by_id = {d.id: d for d in dialogues}
    for planned in plan_corpus(dialogues, reading_sets, config):
        d = by_id[planned.dialogue_id]
        j = planned.turn_idx
        history = [t.raw_text for t in d.turns[:j]]
        rec = {
            "dialogue_id": d.id,
            "turn_idx": j,
            "variant": variant.value,
            "reference": d.turns[j].raw_text,
        }
        if variant is Variant.BASELINE_TURN:
            knowledge = next((f.knowledge for f in planned.plan if f.knowledge), None)
            rec["candidate"] = generate_turn_level(
                history, knowledge, realizer,
                history_token_cap=gen.history_token_cap, knowledge_token_cap=gen.knowledge_token_cap,
            )
            rec["trace"] = []
        else:
            past = None
            if gen.include_past_das:
                past = [[s.da.value for s in t.sentences if s.da is not None] for t in d.turns[:j]]
            result = generate_turn(
                history, planned.plan, realizer, variant, gen.include_past_das, past,
                gen.history_token_cap, gen.knowledge_token_cap,
            )
            rec["candidate"] = result.text
            rec["trace"] = [{"frame": f.to_json(), "sentence": s} for f, s in result.trace]
        yield rec
