"""Dialogue-act tags: the external tagger's JSON-lines output and an offline heuristic tagger."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .acts import DialogueAct


class TagFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Tag:
    label: DialogueAct
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise TagFormatError(f"confidence {self.confidence} outside [0, 1]")


def make_tag(label: str | DialogueAct, confidence: float) -> Tag:
    try:
        act = DialogueAct.parse(label)
    except ValueError as exc:
        raise TagFormatError(str(exc)) from None
    return Tag(act, float(confidence))


# --------------------------------------------------------------------------
# heuristic tagger

_WORD = re.compile(r"[a-z0-9']+")
_WH = {"what", "who", "whom", "whose", "where", "when", "why", "how", "which"}
_GREETING = {"hi", "hello", "hey", "greetings", "bye", "goodbye", "howdy", "hiya"}
_GREETING_PHRASES = ("good morning", "good evening", "good afternoon", "nice chatting", "nice talking",
                     "nice to chat", "nice to meet", "see you", "talk to you later")
_THANKS = {"thanks", "thank", "thx"}
_APOLOGY = {"sorry", "apologies", "apologize", "apologise"}
_ACK = {"yeah", "yes", "yep", "yup", "no", "nope", "oh", "ah", "wow", "cool", "nice", "interesting",
        "right", "true", "haha", "lol", "okay", "ok", "sure", "great", "awesome", "agreed", "exactly",
        "indeed", "hmm", "really", "neat"}
_COMMISSIVE = ("i will ", "i'll ", "i promise", "i shall ", "i am going to ", "i'm going to ", "i'm gonna ")
_DIRECTIVE = ("let's ", "lets ", "please ", "you should ", "maybe you should ", "try ", "go ", "check out ")


def heuristic_tag(sentence: str) -> Tag:
    """Rule-based stand-in for the external SVM tagger.

    Lexicon cues are matched in a fixed order: thanks, apology, greeting,
    question form (or-question, wh-question, yes/no question), commitment,
    directive, short acknowledgement, and finally Statement.
    """
    text = " ".join(sentence.strip().lower().split())
    words = _WORD.findall(text.replace("’", "'"))
    if not words:
        return Tag(DialogueAct.STATEMENT, 0.3)
    first = words[0]
    if first in _THANKS:
        return Tag(DialogueAct.THANKING, 0.9)
    if first in _APOLOGY:
        return Tag(DialogueAct.APOLOGY, 0.9)
    if first in _GREETING or text.startswith(_GREETING_PHRASES):
        return Tag(DialogueAct.SALUTATION, 0.9)
    if text.endswith("?"):
        if " or " in f" {text} ":
            return Tag(DialogueAct.CHOICE_Q, 0.8)
        if first in _WH:
            return Tag(DialogueAct.SET_Q, 0.8)
        return Tag(DialogueAct.PROP_Q, 0.8)
    norm = text.replace("’", "'") + " "
    if norm.startswith(_COMMISSIVE):
        return Tag(DialogueAct.COMMISSIVE, 0.7)
    if norm.startswith(_DIRECTIVE):
        return Tag(DialogueAct.DIRECTIVE, 0.7)
    if first in _ACK and len(words) <= 6:
        return Tag(DialogueAct.FEEDBACK, 0.7)
    return Tag(DialogueAct.STATEMENT, 0.7)


# --------------------------------------------------------------------------
# tagger output files


def load_tag_records(path: str | os.PathLike) -> dict[tuple[str, int], list[Tag]]:
    """Read ``{dialogue_id, turn_idx, sent_idx, label, confidence}`` JSON lines.

    Returns tags grouped per (dialogue id, turn index), ordered by sentence
    index.  Sentence indices must be contiguous from zero.
    """
    grouped: dict[tuple[str, int], dict[int, Tag]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (str(rec["dialogue_id"]), int(rec["turn_idx"]))
                sent = int(rec["sent_idx"])
                tag = make_tag(rec["label"], rec["confidence"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise TagFormatError(f"{os.fspath(path)}:{lineno}: {exc}") from None
            slot = grouped.setdefault(key, {})
            if sent in slot:
                raise TagFormatError(f"{os.fspath(path)}:{lineno}: duplicate sentence index {sent} for {key}")
            slot[sent] = tag
    out = {}
    for key, slot in grouped.items():
        if sorted(slot) != list(range(len(slot))):
            raise TagFormatError(f"non-contiguous sentence indices for dialogue {key[0]!r} turn {key[1]}")
        out[key] = [slot[i] for i in range(len(slot))]
    return out


def tag_records(rows: Iterable[Mapping]) -> str:
    """Serialize tag rows to JSON lines (keys sorted)."""
    return "".join(json.dumps(dict(r), sort_keys=True) + "\n" for r in rows)
