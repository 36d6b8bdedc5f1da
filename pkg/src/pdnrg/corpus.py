"""Dialogue corpora, knowledge reading sets and the enriched corpus format.

Two on-disk corpus shapes are understood:

* ``topical-chat``: the released Topical-Chat layout, a JSON object keyed by
  conversation id whose values carry a ``content`` list of
  ``{"message", "agent", ...}`` records.  Turns are segmented on load.
* ``enriched``: the format written by :func:`write_enriched`, which keeps the
  segmentation and every per-sentence annotation.

Reading sets map a document id to ``{entity: [knowledge sentence, ...]}``.
The raw Topical-Chat reading-set layout (``agent_1``/``agent_2``/``article``
per conversation) is converted into that shape on load.
"""

from __future__ import annotations

import json
import os
import re
import unicodedata
from collections import Counter
from importlib import resources
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .acts import DialogueAct, parse_topic

ENRICHED_FORMAT = "pdnrg-enriched"
ENRICHED_VERSION = 1
FLOAT_DECIMALS = 6

SPEAKERS = ("A", "B")
_AGENT_TO_SPEAKER = {"agent_1": "A", "agent_2": "B", "A": "A", "B": "B"}


class CorpusError(ValueError):
    """Validation or parse failure, tagged with the offending dialogue and field."""

    def __init__(self, message: str, dialogue_id: str | None = None, field: str | None = None):
        self.dialogue_id = dialogue_id
        self.field = field
        where = []
        if dialogue_id is not None:
            where.append(f"dialogue {dialogue_id!r}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class SentenceUnit:
    text: str
    da: DialogueAct | None = None
    da_confidence: float | None = None
    knowledge_id: str | None = None
    knowledge_score: float | None = None


@dataclass(frozen=True)
class Turn:
    speaker: str
    raw_text: str
    sentences: tuple[SentenceUnit, ...]
    topics: tuple[str, ...] = ()
    knowledge_id: str | None = None
    knowledge_score: float | None = None

    @property
    def topic(self) -> str | None:
        """The frame-level topic: first label in corpus order."""
        return self.topics[0] if self.topics else None

    @property
    def last_da(self) -> DialogueAct | None:
        return self.sentences[-1].da if self.sentences else None


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Turn, ...]
    reading_set_refs: tuple[str, str]

    def validate(self) -> None:
        if len(self.reading_set_refs) != 2 or not all(self.reading_set_refs):
            raise CorpusError("expected two reading-set references", self.id, "reading_set_refs")
        for i, turn in enumerate(self.turns):
            if turn.speaker not in SPEAKERS:
                raise CorpusError(f"turn {i}: unknown speaker {turn.speaker!r}", self.id, "speaker")
            if i and turn.speaker == self.turns[i - 1].speaker:
                raise CorpusError(
                    f"turn {i}: speaker {turn.speaker} repeats; turns must alternate",
                    self.id,
                    "speaker",
                )
            if not turn.sentences:
                raise CorpusError(f"turn {i}: no sentences", self.id, "sentences")
            if any(not s.text.strip() for s in turn.sentences):
                raise CorpusError(f"turn {i}: empty sentence", self.id, "sentences")


@dataclass(frozen=True)
class KnowledgeCorpus:
    sentences: tuple[tuple[str, str], ...]
    source_doc: str = ""
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for kid, text in self.sentences:
            if kid in by_id:
                raise CorpusError(f"duplicate knowledge id {kid!r}", field="knowledge")
            if not text or not text.strip():
                raise CorpusError(f"empty knowledge text for id {kid!r}", field="knowledge")
            by_id[kid] = text
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.sentences)

    def text(self, knowledge_id: str) -> str:
        return self._by_id[knowledge_id]

    def get(self, knowledge_id: str | None) -> str | None:
        return self._by_id.get(knowledge_id) if knowledge_id is not None else None

    @classmethod
    def from_texts(cls, texts: Iterable[str], source_doc: str = "", prefix: str = "k") -> "KnowledgeCorpus":
        items = [t for t in texts if t and t.strip()]
        width = max(4, len(str(len(items))))
        return cls(tuple((f"{prefix}{i:0{width}d}", t) for i, t in enumerate(items)), source_doc)


def load_schema(name: str) -> dict:
    """Bundled JSON Schema, e.g. ``load_schema("enriched")``."""
    ref = resources.files("pdnrg") / "schemas" / f"{name}.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# sentence segmentation

ABBREVIATIONS = frozenset(
    """
    mr mrs ms dr prof sr jr st mt vs ft gen col lt sgt capt cmdr adm rev hon gov sen rep pres
    inc ltd co corp bros dept est approx fig vol jan feb aug sept sep oct nov dec
    """.split()
)

_BOUNDARY = re.compile(r"[.!?]+[\"'”’)\]]*(?=\s)")
_DOTTED = re.compile(r"^(?:[a-z]\.)+[a-z]$")


def _guarded(text: str, end: int) -> bool:
    """True when the lone period ending at ``end`` belongs to an abbreviation."""
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:end].lstrip("\"'(“[")
    if not word.endswith(".") or word.endswith(".."):
        return False
    stem = word[:-1]
    if len(stem) == 1 and stem.isupper():
        return True  # initial, e.g. "J. K. Rowling"
    low = stem.lower()
    return low in ABBREVIATIONS or bool(_DOTTED.match(low))


def _continues_lowercase(text: str, pos: int) -> bool:
    rest = text[pos:].lstrip()
    return bool(rest) and rest[0].islower()


def segment_sentences(turn_text: str) -> list[str]:
    """Split a turn on terminal punctuation, guarding common abbreviations.

    >>> segment_sentences("Mr. Smith won. Wow!")
    ['Mr. Smith won.', 'Wow!']
    """
    text = turn_text.strip()
    if not text:
        return []
    out = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        mark = m.group()
        if mark.startswith(".") and len(mark.rstrip("\"'”’)]")) == 1:
            if _guarded(text, m.start() + 1):
                continue
        if mark[-1] in "\"'”’" and _continues_lowercase(text, m.end()):
            continue  # quoted speech, e.g. "'Really?' she asked."
        piece = text[start : m.end()].strip()
        if piece:
            out.append(piece)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def strip_punctuation(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def count_words(text: str) -> int:
    return len(strip_punctuation(text).split())


def make_turn(speaker: str, text: str, topics: Sequence[str] = ()) -> Turn:
    sentences = tuple(SentenceUnit(s) for s in segment_sentences(text))
    return Turn(speaker, text, sentences, tuple(topics))


# --------------------------------------------------------------------------
# loading


def _read_json(path: str | os.PathLike) -> Any:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    if not raw.strip():
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{os.fspath(path)}: invalid JSON ({exc})") from exc


def _topics(raw: Any, did: str, idx: int) -> tuple[str, ...]:
    if raw is None:
        return ()
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list):
        raise CorpusError(f"turn {idx}: topics must be a list", did, "topics")
    try:
        return tuple(parse_topic(t) for t in raw)
    except ValueError as exc:
        raise CorpusError(f"turn {idx}: {exc}", did, "topics") from None


def _refs(raw: Any, did: str) -> tuple[str, str]:
    if raw is None:
        return (f"{did}/agent_1", f"{did}/agent_2")
    if not (isinstance(raw, list) and len(raw) == 2 and all(isinstance(r, str) and r for r in raw)):
        raise CorpusError("expected a list of two document ids", did, "reading_set_refs")
    return (raw[0], raw[1])


def _parse_topical_chat(data: Mapping[str, Any]) -> list[Dialogue]:
    dialogues = []
    for did, conv in data.items():
        if not isinstance(conv, dict):
            raise CorpusError("conversation must be an object", did)
        content = conv.get("content")
        if not isinstance(content, list):
            raise CorpusError("missing or non-list 'content'", did, "content")
        turns = []
        for i, msg in enumerate(content):
            if not isinstance(msg, dict):
                raise CorpusError(f"turn {i}: message must be an object", did, "content")
            text = msg.get("message")
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(f"turn {i}: missing or empty message", did, "message")
            speaker = _AGENT_TO_SPEAKER.get(msg.get("agent"))
            if speaker is None:
                raise CorpusError(f"turn {i}: unknown agent {msg.get('agent')!r}", did, "agent")
            turns.append(make_turn(speaker, text, _topics(msg.get("topics"), did, i)))
        dialogue = Dialogue(did, tuple(turns), _refs(conv.get("reading_set_refs"), did))
        dialogue.validate()
        dialogues.append(dialogue)
    return dialogues


def _opt_float(value: Any, did: str, name: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CorpusError(f"{name} must be a number", did, name)
    return float(value)


def _parse_enriched(data: Mapping[str, Any]) -> list[Dialogue]:
    if data.get("version") != ENRICHED_VERSION:
        raise CorpusError(f"unsupported enriched version {data.get('version')!r}", field="version")
    dialogues = []
    for n, rec in enumerate(data.get("dialogues", [])):
        did = rec.get("id") if isinstance(rec, dict) else None
        if not isinstance(did, str):
            raise CorpusError(f"dialogue #{n}: missing id", field="id")
        turns = []
        for i, t in enumerate(rec.get("turns", [])):
            speaker = t.get("speaker")
            text = t.get("text")
            if not isinstance(text, str):
                raise CorpusError(f"turn {i}: missing text", did, "text")
            sents = []
            for j, s in enumerate(t.get("sentences", [])):
                da = s.get("da")
                try:
                    da = DialogueAct.parse(da) if da is not None else None
                except ValueError as exc:
                    raise CorpusError(f"turn {i} sentence {j}: {exc}", did, "da") from None
                sents.append(
                    SentenceUnit(
                        text=s.get("text", ""),
                        da=da,
                        da_confidence=_opt_float(s.get("da_confidence"), did, "da_confidence"),
                        knowledge_id=s.get("knowledge_id"),
                        knowledge_score=_opt_float(s.get("knowledge_score"), did, "knowledge_score"),
                    )
                )
            turns.append(
                Turn(
                    speaker=speaker,
                    raw_text=text,
                    sentences=tuple(sents),
                    topics=_topics(t.get("topics"), did, i),
                    knowledge_id=t.get("turn_knowledge_id"),
                    knowledge_score=_opt_float(t.get("turn_knowledge_score"), did, "turn_knowledge_score"),
                )
            )
        dialogue = Dialogue(did, tuple(turns), _refs(rec.get("reading_set_refs"), did))
        dialogue.validate()
        dialogues.append(dialogue)
    return dialogues


def load_dialogues(
    path: str | os.PathLike,
    format: str = "auto",
    reading_sets: Mapping[str, Any] | None = None,
) -> list[Dialogue]:
    """Load a corpus file. ``format`` is ``topical-chat``, ``enriched`` or ``auto``.

    When ``reading_sets`` is given, every dialogue's two references must
    resolve in it.
    """
    data = _read_json(path)
    if data is None:
        return []
    if not isinstance(data, dict):
        raise CorpusError("corpus file must hold a JSON object")
    if format == "auto":
        format = "enriched" if data.get("format") == ENRICHED_FORMAT else "topical-chat"
    if format == "enriched":
        dialogues = _parse_enriched(data)
    elif format == "topical-chat":
        dialogues = _parse_topical_chat(data)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    if reading_sets is not None:
        for d in dialogues:
            for ref in d.reading_set_refs:
                if ref not in reading_sets:
                    raise CorpusError(f"reading set {ref!r} not found", d.id, "reading_set_refs")
    return dialogues


def _convert_topical_chat_reading_set(cid: str, rs: Mapping[str, Any]) -> dict[str, dict[str, list[str]]]:
    def entity_sentences(fs: Mapping[str, Any]) -> list[str]:
        out = []
        for key in ("shortened_wiki_lead_section", "summarized_wiki_lead_section"):
            if isinstance(fs.get(key), str):
                out.extend(segment_sentences(fs[key]))
        out.extend(f for f in fs.get("fun_facts", []) if isinstance(f, str))
        return out

    article = {}
    art = rs.get("article") or {}
    art_sents = [s for k, v in sorted(art.items()) if k.startswith("AS") and isinstance(v, str) for s in segment_sentences(v)]
    if art_sents:
        article["article"] = art_sents
    docs = {}
    for agent in ("agent_1", "agent_2"):
        entities = {}
        for key, fs in (rs.get(agent) or {}).items():
            if isinstance(fs, dict):
                entities[fs.get("entity", key)] = entity_sentences(fs)
        entities.update(article)
        docs[f"{cid}/{agent}"] = entities
    return docs


def load_reading_sets(path: str | os.PathLike) -> dict[str, dict[str, list[str]]]:
    """Load reading sets as ``{doc_id: {entity: [sentence, ...]}}``."""
    data = _read_json(path)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise CorpusError("reading-set file must hold a JSON object")
    docs: dict[str, dict[str, list[str]]] = {}
    for key, value in data.items():
        if not isinstance(value, dict):
            raise CorpusError(f"reading set {key!r} must be an object", field="reading_sets")
        if "agent_1" in value or "agent_2" in value:
            docs.update(_convert_topical_chat_reading_set(key, value))
            continue
        entities = {}
        for entity, sents in value.items():
            if not (isinstance(sents, list) and all(isinstance(s, str) for s in sents)):
                raise CorpusError(f"reading set {key!r}, entity {entity!r}: expected a list of strings", field="reading_sets")
            entities[entity] = sents
        docs[key] = entities
    return docs


def knowledge_corpus_for(dialogue: Dialogue, reading_sets: Mapping[str, Mapping[str, list[str]]]) -> KnowledgeCorpus:
    """Flatten both speakers' reading sets into one corpus; duplicate texts keep the first id."""
    items = []
    seen = set()
    for ref in dialogue.reading_set_refs:
        if ref not in reading_sets:
            raise CorpusError(f"reading set {ref!r} not found", dialogue.id, "reading_set_refs")
        n = 0
        for sents in reading_sets[ref].values():
            for text in sents:
                if not text or not text.strip():
                    continue
                key = text.strip()
                if key not in seen:
                    seen.add(key)
                    items.append((f"{ref}#{n:04d}", text.strip()))
                n += 1
    return KnowledgeCorpus(tuple(items), source_doc="+".join(dialogue.reading_set_refs))


# --------------------------------------------------------------------------
# writing


def _f(x: float | None) -> float | None:
    return None if x is None else round(float(x), FLOAT_DECIMALS)


def dialogue_to_json(d: Dialogue) -> dict:
    return {
        "id": d.id,
        "reading_set_refs": list(d.reading_set_refs),
        "turns": [
            {
                "speaker": t.speaker,
                "text": t.raw_text,
                "topics": list(t.topics),
                "turn_knowledge_id": t.knowledge_id,
                "turn_knowledge_score": _f(t.knowledge_score),
                "sentences": [
                    {
                        "text": s.text,
                        "da": s.da.value if s.da is not None else None,
                        "da_confidence": _f(s.da_confidence),
                        "knowledge_id": s.knowledge_id,
                        "knowledge_score": _f(s.knowledge_score),
                    }
                    for s in t.sentences
                ],
            }
            for t in d.turns
        ],
    }


def dumps_enriched(dialogues: Sequence[Dialogue]) -> str:
    for d in dialogues:
        d.validate()
    doc = {
        "format": ENRICHED_FORMAT,
        "version": ENRICHED_VERSION,
        "dialogues": [dialogue_to_json(d) for d in dialogues],
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_enriched(dialogues: Sequence[Dialogue], path: str | os.PathLike) -> None:
    payload = dumps_enriched(dialogues).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(payload)


# --------------------------------------------------------------------------
# statistics


def corpus_statistics(dialogues: Sequence[Dialogue]) -> dict:
    """Average words and sentences per turn, plus the sentence-level DA histogram."""
    turns = [t for d in dialogues for t in d.turns]
    if not turns:
        raise CorpusError("cannot compute statistics of an empty corpus")
    words = sum(count_words(t.raw_text) for t in turns)
    sents = sum(len(t.sentences) for t in turns)
    das = Counter(s.da.value for t in turns for s in t.sentences if s.da is not None)
    total = sum(das.values())
    return {
        "avg_words": words / len(turns),
        "avg_sentences": sents / len(turns),
        "da_histogram": {k: das[k] / total for k in sorted(das)},
        "n_turns": len(turns),
    }
