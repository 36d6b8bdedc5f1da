"""Realizing action plans as text.

:func:`generate_turn` realizes one frame at a time; every realized sentence
is appended to the working context before the next frame is realized.
Realizers only need a ``realize(request) -> str`` method: the
:class:`TemplateRealizer` is a deterministic offline stand-in, the
:class:`HttpRealizer` forwards requests to a hosted neural generator.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Protocol, Sequence

from .acts import DialogueAct as DA
from .annotation import ActionPlan, Frame
from .corpus import segment_sentences
from .transport import ProtocolError, canonical_json, post_json

HISTORY_TOKEN_CAP = 128
KNOWLEDGE_TOKEN_CAP = 32


class Variant(str, Enum):
    DA = "da"
    DA_FLAG = "da+flag"
    DA_FLAG_TOPIC = "da+flag+topic"
    BASELINE_TURN = "baseline-turn"
    BASELINE_SENT = "baseline-sent"

    @property
    def uses_acts(self) -> bool:
        return self in (Variant.DA, Variant.DA_FLAG, Variant.DA_FLAG_TOPIC)

    @property
    def uses_flag(self) -> bool:
        return self in (Variant.DA_FLAG, Variant.DA_FLAG_TOPIC)

    @property
    def uses_topic(self) -> bool:
        return self is Variant.DA_FLAG_TOPIC


# payload keys each variant licenses, beside "history"; the flag variants
# drop "knowledge" whenever the flag is off
VARIANT_FIELDS = {
    Variant.DA: {"acts", "knowledge"},
    Variant.DA_FLAG: {"acts", "knowledge", "use_knowledge"},
    Variant.DA_FLAG_TOPIC: {"acts", "knowledge", "use_knowledge", "topic"},
    Variant.BASELINE_TURN: {"knowledge"},
    Variant.BASELINE_SENT: {"knowledge"},
}


class GenerationError(RuntimeError):
    def __init__(self, message: str, trace: Sequence[tuple[Frame, str]] = ()):
        super().__init__(message)
        self.trace = tuple(trace)


@dataclass(frozen=True)
class GenerationRequest:
    history: tuple[str, ...]
    frame: Frame
    prior_sentences: tuple[str, ...] = ()
    prior_acts: tuple[DA, ...] = ()
    mode: str = "sentence"
    variant: Variant = Variant.DA
    include_past_das: bool = False
    past_das: tuple[tuple[str, ...], ...] | None = None
    history_token_cap: int = HISTORY_TOKEN_CAP
    knowledge_token_cap: int = KNOWLEDGE_TOKEN_CAP

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.mode not in ("sentence", "turn"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.past_das is not None and len(self.past_das) != len(self.history):
            raise ValueError("past_das must parallel history")
        if self.history_token_cap < 1 or self.knowledge_token_cap < 1:
            raise ValueError("token caps must be positive")

    @property
    def context(self) -> tuple[str, ...]:
        """Dialogue history extended with the sentences realized so far."""
        return self.history + self.prior_sentences

    @property
    def visible_knowledge(self) -> str | None:
        """Knowledge text the variant lets the realizer see."""
        if self.variant.uses_flag and not self.frame.use_knowledge:
            return None
        if self.frame.knowledge is None:
            return None
        return truncate_tokens(self.frame.knowledge, self.knowledge_token_cap)


class Realizer(Protocol):
    def realize(self, request: GenerationRequest) -> str: ...


def truncate_tokens(text: str, cap: int) -> str:
    toks = text.split()
    return text if len(toks) <= cap else " ".join(toks[:cap])


def truncate_history(turns: Sequence[str], cap: int, tags: Sequence[Any] | None = None):
    """Keep the most recent turns within ``cap`` whitespace tokens; oldest go first.

    A single turn longer than the cap keeps its last ``cap`` tokens.
    Returns ``(turns, tags)`` with ``tags`` cut in parallel.
    """
    kept: list[str] = []
    kept_tags: list[Any] = []
    budget = cap
    for i in range(len(turns) - 1, -1, -1):
        toks = turns[i].split()
        if len(toks) <= budget:
            kept.append(turns[i])
        elif not kept:
            kept.append(" ".join(toks[-budget:]))
        else:
            break
        if tags is not None:
            kept_tags.append(tags[i])
        budget -= min(len(toks), budget)
        if budget <= 0:
            break
    kept.reverse()
    kept_tags.reverse()
    return kept, (kept_tags if tags is not None else None)


def request_payload(request: GenerationRequest, decoder_params: Mapping | None = None) -> dict:
    variant = request.variant
    context = list(request.context)
    das = None
    if variant.uses_acts and request.include_past_das:
        past = list(request.past_das) if request.past_das is not None else [()] * len(request.history)
        das = [list(p) for p in past] + [[a.value] for a in request.prior_acts]
    context, das = truncate_history(context, request.history_token_cap, das)
    payload: dict[str, Any] = {"history": context}
    if variant.uses_acts:
        payload["acts"] = [request.frame.da.value]
        if das is not None:
            payload["past_das"] = das
    if variant.uses_flag:
        payload["use_knowledge"] = request.frame.use_knowledge
        if request.frame.use_knowledge:
            payload["knowledge"] = request.visible_knowledge
    else:
        payload["knowledge"] = request.visible_knowledge
    if variant.uses_topic:
        payload["topic"] = request.frame.topic
    if decoder_params:
        payload["decoder_params"] = dict(decoder_params)
    return payload


def serialize_generation_request(request: GenerationRequest, decoder_params: Mapping | None = None) -> bytes:
    """Canonical JSON (sorted keys, compact separators, UTF-8)."""
    return canonical_json(request_payload(request, decoder_params))


# --------------------------------------------------------------------------
# template realizer

_TERMINAL = re.compile(r"[\s.!?;:,]+$")


def _clause(knowledge: str) -> str:
    """Knowledge text as one clause: internal sentence breaks become semicolons."""
    parts = [_TERMINAL.sub("", s) for s in segment_sentences(knowledge)]
    clause = "; ".join(p for p in parts if p)
    if len(clause) > 1 and clause[0].isupper() and clause[1].islower():
        clause = clause[0].lower() + clause[1:]
    return clause


TEMPLATES = {
    DA.STATEMENT: ("I think {topic} is a fascinating subject.", "I heard that {k}."),
    DA.PROP_Q: ("Do you want to talk more about {topic}?", "Did you know that {k}?"),
    DA.SET_Q: ("What do you think about {topic}?", "What do you think about the fact that {k}?"),
    DA.CHOICE_Q: ("Do you like {topic} or not?", "Did you know that {k}, or is that news to you?"),
    DA.FEEDBACK: ("Oh, that is cool.", None),
    DA.SALUTATION: ("Hello there, nice to chat with you!", None),
    DA.THANKING: ("Thank you for sharing that.", None),
    DA.APOLOGY: ("Sorry, I did not know that.", None),
    DA.COMMISSIVE: ("I will have to look that up!", None),
    DA.DIRECTIVE: ("Let's talk about {topic} some more.", None),
    DA.NO_DA: ("...", None),
}


def template_realize(request: GenerationRequest) -> str:
    """Deterministic one-sentence realization of the request's frame.

    Baseline variants hide the act, so their frames realize as Statements.
    """
    frame = request.frame
    da = frame.da if request.variant.uses_acts else DA.STATEMENT
    plain, with_k = TEMPLATES[da]
    knowledge = request.visible_knowledge if (frame.use_knowledge or not request.variant.uses_acts) else None
    if with_k is not None and knowledge:
        clause = _clause(knowledge)
        if clause:
            return with_k.format(k=clause)
    topic = frame.topic if request.variant.uses_topic and frame.topic else "that"
    return plain.format(topic=topic)


class TemplateRealizer:
    def realize(self, request: GenerationRequest) -> str:
        return template_realize(request)


# --------------------------------------------------------------------------
# external realizer


def external_realize(
    request: GenerationRequest,
    endpoint: str,
    timeout: float = 10.0,
    retries: int = 2,
    backoff: float = 0.1,
    decoder_params: Mapping | None = None,
) -> str:
    """POST the serialized request; the reply must be ``{"text": <non-empty string>}``."""
    resp = post_json(endpoint, serialize_generation_request(request, decoder_params), timeout, retries, backoff)
    text = resp.get("text") if isinstance(resp, dict) else None
    if not isinstance(text, str) or not text.strip():
        raise ProtocolError("realizer response must carry a non-empty 'text'")
    return text.strip()


@dataclass
class HttpRealizer:
    endpoint: str
    timeout: float = 10.0
    retries: int = 2
    backoff: float = 0.1
    decoder_params: dict = field(default_factory=dict)

    def realize(self, request: GenerationRequest) -> str:
        return external_realize(request, self.endpoint, self.timeout, self.retries, self.backoff, self.decoder_params)


# --------------------------------------------------------------------------
# generation loops


@dataclass(frozen=True)
class GenerationResult:
    text: str
    trace: tuple[tuple[Frame, str], ...]
    requests: tuple[GenerationRequest, ...]

    @property
    def sentences(self) -> tuple[str, ...]:
        return tuple(s for _, s in self.trace)


def _realize(realizer: Realizer, request: GenerationRequest, trace) -> str:
    try:
        text = realizer.realize(request)
    except Exception as exc:
        raise GenerationError(f"realizer failed on frame {len(trace)}: {exc}", trace) from exc
    if not isinstance(text, str) or not text.strip():
        raise GenerationError(f"realizer returned empty text on frame {len(trace)}", trace)
    return text.strip()


def generate_turn(
    history: Sequence[str],
    plan: ActionPlan | Sequence[Frame],
    realizer: Realizer,
    variant: Variant | str = Variant.DA,
    include_past_das: bool = False,
    past_das: Sequence[Sequence[str]] | None = None,
    history_token_cap: int = HISTORY_TOKEN_CAP,
    knowledge_token_cap: int = KNOWLEDGE_TOKEN_CAP,
) -> GenerationResult:
    """Realize ``plan`` sentence by sentence, feeding each sentence back into the context."""
    frames = tuple(plan.frames if isinstance(plan, ActionPlan) else plan)
    if not frames:
        raise GenerationError("action plan has no frames")
    history = tuple(history)
    past = tuple(tuple(p) for p in past_das) if past_das is not None else None
    trace: list[tuple[Frame, str]] = []
    requests = []
    for frame in frames:
        request = GenerationRequest(
            history=history,
            frame=frame,
            prior_sentences=tuple(s for _, s in trace),
            prior_acts=tuple(f.da for f, _ in trace),
            mode="sentence",
            variant=variant,
            include_past_das=include_past_das,
            past_das=past,
            history_token_cap=history_token_cap,
            knowledge_token_cap=knowledge_token_cap,
        )
        requests.append(request)
        trace.append((frame, _realize(realizer, request, trace)))
    return GenerationResult(" ".join(s for _, s in trace), tuple(trace), tuple(requests))


def turn_level_request(
    history: Sequence[str],
    knowledge: str | None,
    history_token_cap: int = HISTORY_TOKEN_CAP,
    knowledge_token_cap: int = KNOWLEDGE_TOKEN_CAP,
) -> GenerationRequest:
    frame = Frame(da=DA.NO_DA, knowledge=knowledge, use_knowledge=bool(knowledge))
    return GenerationRequest(
        history=tuple(history),
        frame=frame,
        mode="turn",
        variant=Variant.BASELINE_TURN,
        history_token_cap=history_token_cap,
        knowledge_token_cap=knowledge_token_cap,
    )


def generate_turn_level(history: Sequence[str], knowledge: str | None, realizer: Realizer, **caps) -> str:
    """Single realizer call conditioned on history and knowledge only."""
    request = turn_level_request(history, knowledge, **caps)
    return _realize(realizer, request, ())
