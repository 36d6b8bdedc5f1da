"""Dialogue-act planning policies.

Every policy maps a :class:`PolicyContext` and a seeded ``random.Random`` to
a :class:`PolicyDecision`: a short act sequence plus, per act, whether the
selected knowledge sentence should be realized in it.

Shipped policies: ``simple`` (knowledge-independent transition table),
``kd-da-p`` (transitions branch on whether the selected knowledge changed
since the previous turn), ``propq`` and ``allq`` (single-act baselines that
ask questions 65.7% of the time), and ``external`` (a learned planner behind
HTTP).
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .acts import DialogueAct as DA
from .annotation import ActionPlan, Frame
from .corpus import Dialogue
from .retrieval import KnowledgeSelection
from .tagging import heuristic_tag
from .transport import ProtocolError, post_json

ActSeq = tuple[DA, ...]


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class PolicyContext:
    turn_index: int
    last_da: DA | None = None
    prev_turn_knowledge_id: str | None = None
    current_selection: KnowledgeSelection = field(default_factory=KnowledgeSelection.empty)

    def __post_init__(self):
        if self.turn_index < 0:
            raise PolicyError("turn_index must be non-negative")
        if (self.turn_index == 0) != (self.last_da is None):
            raise PolicyError("last_da must be absent exactly on the opening turn")


@dataclass(frozen=True)
class PolicyDecision:
    acts: ActSeq
    attach_knowledge: tuple[bool, ...]
    knowledge: KnowledgeSelection

    def __post_init__(self):
        if len(self.acts) != len(self.attach_knowledge):
            raise PolicyError("attach_knowledge must parallel acts")
        if any(self.attach_knowledge) and not self.knowledge.use_knowledge:
            raise PolicyError("knowledge attached below the use-knowledge threshold")

    @property
    def knowledge_id(self) -> str | None:
        """Knowledge carried forward to the next turn (cleared below threshold)."""
        return self.knowledge.effective_id

    def to_plan(self, topic: str | None = None) -> ActionPlan:
        sel = self.knowledge
        text = sel.text if sel.use_knowledge else None
        kid = sel.effective_id
        return ActionPlan(
            tuple(
                Frame(da=a, topic=topic, knowledge_id=kid, knowledge=text, use_knowledge=h)
                for a, h in zip(self.acts, self.attach_knowledge)
            )
        )

    def to_json(self) -> dict:
        return {
            "acts": [a.value for a in self.acts],
            "attach_knowledge": list(self.attach_knowledge),
            "knowledge_id": self.knowledge.knowledge_id,
            "knowledge_score": self.knowledge.score,
            "use_knowledge": self.knowledge.use_knowledge,
        }


def weighted_sample(options: Sequence, weights: Sequence[float], rng: random.Random):
    """Return ``options[i]`` with probability ``weights[i] / sum(weights)``."""
    if len(options) != len(weights):
        raise PolicyError(f"{len(options)} options but {len(weights)} weights")
    if not options:
        raise PolicyError("no options to sample from")
    if any(w < 0 or math.isnan(w) for w in weights) or sum(weights) <= 0:
        raise PolicyError("weights must be non-negative with a positive sum")
    return rng.choices(options, weights=weights, k=1)[0]


# --------------------------------------------------------------------------
# include-knowledge maps (acts absent from a map never carry knowledge)

OPENING_INCLUDE = {DA.SALUTATION: False, DA.STATEMENT: True, DA.PROP_Q: True}
SIMPLE_INCLUDE = {DA.FEEDBACK: False, DA.STATEMENT: True, DA.PROP_Q: True, DA.SALUTATION: False}
KD_SAME_STATEMENT_INCLUDE = {DA.FEEDBACK: False, DA.STATEMENT: True, DA.PROP_Q: True}
KD_PROPQ_ONLY_INCLUDE = {DA.FEEDBACK: False, DA.STATEMENT: False, DA.PROP_Q: True}
QUESTION_INCLUDE = {act: act in (DA.PROP_Q, DA.SET_Q, DA.CHOICE_Q, DA.STATEMENT) for act in DA}

OPENING_OPTIONS: tuple[ActSeq, ...] = ((DA.SALUTATION, DA.STATEMENT), (DA.SALUTATION, DA.PROP_Q))
HALF = (0.5, 0.5)

# single-act baselines draw from all 11 labels in this order
SINGLE_ACT_ORDER: tuple[DA, ...] = (
    DA.PROP_Q, DA.SET_Q, DA.CHOICE_Q, DA.APOLOGY, DA.DIRECTIVE, DA.FEEDBACK,
    DA.SALUTATION, DA.COMMISSIVE, DA.STATEMENT, DA.THANKING, DA.NO_DA,
)
PROPQ_WEIGHTS: tuple[float, ...] = (0.657,) + (0.0343,) * 10
ALLQ_WEIGHTS: tuple[float, ...] = (0.219,) * 3 + (0.042875,) * 8


def include_knowledge_in_acts(acts: ActSeq, include: Mapping[DA, bool], selection: KnowledgeSelection) -> tuple[bool, ...]:
    return tuple(selection.use_knowledge and include.get(a, False) for a in acts)


def _decide(options, weights, include, ctx: PolicyContext, rng: random.Random) -> PolicyDecision:
    acts = weighted_sample(options, weights, rng)
    return PolicyDecision(acts, include_knowledge_in_acts(acts, include, ctx.current_selection), ctx.current_selection)


def _opening(ctx: PolicyContext, rng: random.Random) -> PolicyDecision:
    return _decide(OPENING_OPTIONS, HALF, OPENING_INCLUDE, ctx, rng)


def plan_ki_simple(ctx: PolicyContext, rng: random.Random) -> PolicyDecision:
    if ctx.turn_index == 0:
        return _opening(ctx, rng)
    if ctx.last_da is DA.STATEMENT:
        options = ((DA.FEEDBACK, DA.STATEMENT), (DA.FEEDBACK, DA.PROP_Q))
    elif ctx.last_da is DA.PROP_Q:
        options = ((DA.STATEMENT, DA.STATEMENT), (DA.STATEMENT, DA.PROP_Q))
    else:
        return _decide(((DA.STATEMENT,),), (1.0,), SIMPLE_INCLUDE, ctx, rng)
    return _decide(options, HALF, SIMPLE_INCLUDE, ctx, rng)


def plan_kd_da_p(ctx: PolicyContext, rng: random.Random) -> PolicyDecision:
    if ctx.turn_index == 0:
        return _opening(ctx, rng)
    same = ctx.current_selection.effective_id == ctx.prev_turn_knowledge_id
    if ctx.last_da is DA.STATEMENT:
        options = ((DA.FEEDBACK, DA.STATEMENT), (DA.FEEDBACK, DA.PROP_Q))
        include = KD_SAME_STATEMENT_INCLUDE if same else KD_PROPQ_ONLY_INCLUDE
    elif ctx.last_da is DA.PROP_Q:
        options = ((DA.STATEMENT, DA.PROP_Q), (DA.FEEDBACK, DA.PROP_Q))
        include = KD_PROPQ_ONLY_INCLUDE
    else:
        # same knowledge: the PropQ entry of this map can never fire
        options = ((DA.FEEDBACK, DA.STATEMENT),) if same else ((DA.FEEDBACK, DA.PROP_Q),)
        return _decide(options, (1.0,), KD_PROPQ_ONLY_INCLUDE, ctx, rng)
    return _decide(options, HALF, include, ctx, rng)


def _merge_weights(base: Sequence[float], overrides: Mapping | None) -> tuple[float, ...]:
    if not overrides:
        return tuple(base)
    table = dict(zip(SINGLE_ACT_ORDER, base))
    for label, w in overrides.items():
        table[DA.parse(label)] = float(w)
    return tuple(table[a] for a in SINGLE_ACT_ORDER)


def _plan_single(ctx, rng, weights) -> PolicyDecision:
    if ctx.turn_index == 0:
        return _opening(ctx, rng)
    options = tuple((a,) for a in SINGLE_ACT_ORDER)
    return _decide(options, weights, QUESTION_INCLUDE, ctx, rng)


def plan_propq(ctx: PolicyContext, rng: random.Random, weights: Mapping | None = None) -> PolicyDecision:
    return _plan_single(ctx, rng, _merge_weights(PROPQ_WEIGHTS, weights))


def plan_allq(ctx: PolicyContext, rng: random.Random, weights: Mapping | None = None) -> PolicyDecision:
    return _plan_single(ctx, rng, _merge_weights(ALLQ_WEIGHTS, weights))


def plan_external(
    ctx: PolicyContext,
    dialogue_text: Sequence[str],
    endpoint: str,
    timeout: float = 10.0,
    retries: int = 2,
    backoff: float = 0.1,
    rng: random.Random | None = None,
) -> PolicyDecision:
    """Ask a learned planner for the next acts.

    Request ``{"dialogue": [...], "last_acts": [...]}``, response
    ``{"acts": [...]}``.  Knowledge attaches per the Simple policy's map.
    The opening turn uses the shared Salutation branch without a request.
    """
    if ctx.turn_index == 0:
        if rng is None:
            raise PolicyError("the opening turn is sampled locally and needs an rng")
        return _opening(ctx, rng)
    payload = {"dialogue": list(dialogue_text), "last_acts": [ctx.last_da.value] if ctx.last_da else []}
    resp = post_json(endpoint, payload, timeout=timeout, retries=retries, backoff=backoff)
    labels = resp.get("acts") if isinstance(resp, dict) else None
    if not isinstance(labels, list) or not labels:
        raise ProtocolError("planner response must carry a non-empty 'acts' list")
    acts = []
    for label in labels:
        try:
            acts.append(DA.parse(label))
        except ValueError:
            raise ProtocolError(f"planner returned unknown act label {label!r}") from None
    acts = tuple(acts)
    sel = ctx.current_selection
    return PolicyDecision(acts, include_knowledge_in_acts(acts, SIMPLE_INCLUDE, sel), sel)


# --------------------------------------------------------------------------
# registry

Policy = Callable[[PolicyContext, random.Random, Sequence[str]], PolicyDecision]
POLICY_NAMES = ("simple", "kd-da-p", "propq", "allq", "external")


def get_policy(
    name: str,
    weights: Mapping | None = None,
    endpoint: str | None = None,
    timeout: float = 10.0,
    retries: int = 2,
) -> Policy:
    """Resolve a policy name to a ``(ctx, rng, history) -> PolicyDecision`` callable."""
    if name == "simple":
        return lambda ctx, rng, history=(): plan_ki_simple(ctx, rng)
    if name == "kd-da-p":
        return lambda ctx, rng, history=(): plan_kd_da_p(ctx, rng)
    if name == "propq":
        return lambda ctx, rng, history=(): plan_propq(ctx, rng, weights)
    if name == "allq":
        return lambda ctx, rng, history=(): plan_allq(ctx, rng, weights)
    if name == "external":
        if not endpoint:
            raise PolicyError("the external policy needs an endpoint")
        return lambda ctx, rng, history=(): plan_external(ctx, history, endpoint, timeout, retries, rng=rng)
    raise PolicyError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")


def _policy(policy) -> Policy:
    return get_policy(policy) if isinstance(policy, str) else policy


def turn_last_da(dialogue: Dialogue, i: int) -> DA:
    """Act of the turn's final sentence, tagging heuristically when unannotated."""
    sent = dialogue.turns[i].sentences[-1]
    if sent.da is not None:
        return sent.da
    tag = heuristic_tag(sent.text)
    return tag.label if tag.confidence >= 0.5 else DA.NO_DA


def _gold_selection(dialogue: Dialogue, i: int) -> KnowledgeSelection:
    turn = dialogue.turns[i]
    if turn.knowledge_score is None:
        return KnowledgeSelection.empty()
    return KnowledgeSelection(turn.knowledge_id, turn.knowledge_score, turn.knowledge_id is not None)


@dataclass
class SimulationResult:
    counts: Counter = field(default_factory=Counter)
    non_initial_counts: Counter = field(default_factory=Counter)
    plans: int = 0
    initial_plans: int = 0

    def frequencies(self, non_initial: bool = False) -> dict[DA, float]:
        counts = self.non_initial_counts if non_initial else self.counts
        total = sum(counts.values())
        if not total:
            return {}
        return {a: counts[a] / total for a in DA if counts[a]}

    def add(self, decision: PolicyDecision, initial: bool) -> None:
        self.plans += 1
        self.counts.update(decision.acts)
        if initial:
            self.initial_plans += 1
        else:
            self.non_initial_counts.update(decision.acts)


def simulate_corpus(
    policy,
    corpus: Sequence[Dialogue],
    seed: int,
    include_opening: bool = False,
    selector: Callable[[Dialogue, int], KnowledgeSelection] | None = None,
) -> SimulationResult:
    """Plan the response that follows every corpus turn.

    The previous act is the corpus turn's final act.  Knowledge comes from
    ``selector(dialogue, i)`` when given; otherwise from the gold turn-level
    links (the next turn's link is the current selection, this turn's link
    the previous one).  ``include_opening`` also plans each dialogue's
    opening turn.
    """
    fn = _policy(policy)
    rng = random.Random(seed)
    result = SimulationResult()
    if not any(d.turns for d in corpus):
        raise PolicyError("corpus has no turns")
    for d in corpus:
        if include_opening:
            result.add(fn(PolicyContext(0), rng, ()), initial=True)
        for i, turn in enumerate(d.turns):
            if selector is not None:
                current = selector(d, i)
            elif i + 1 < len(d.turns):
                current = _gold_selection(d, i + 1)
            else:
                current = KnowledgeSelection.empty()
            ctx = PolicyContext(i + 1, turn_last_da(d, i), turn.knowledge_id, current)
            history = [t.raw_text for t in d.turns[: i + 1]]
            result.add(fn(ctx, rng, history), initial=False)
    return result


def simulate_distribution(policy, corpus: Sequence[Dialogue], seed: int, include_opening: bool = False, selector=None) -> dict[DA, float]:
    """Frequency of each planned act over every turn position of ``corpus``."""
    return simulate_corpus(policy, corpus, seed, include_opening, selector).frequencies()


def simulate_rollout(policy, n_turns: int, seed: int) -> SimulationResult:
    """Self-play without knowledge: each turn's last act feeds the next plan."""
    if n_turns < 1:
        raise PolicyError("n_turns must be positive")
    fn = _policy(policy)
    rng = random.Random(seed)
    result = SimulationResult()
    last = None
    for j in range(n_turns):
        decision = fn(PolicyContext(j, last), rng, ())
        result.add(decision, initial=j == 0)
        last = decision.acts[-1]
    return result
