"""Closed label inventories: dialogue acts and turn topics."""

from __future__ import annotations

from enum import Enum


class DialogueAct(str, Enum):
    APOLOGY = "Apology"
    CHOICE_Q = "ChoiceQ"
    COMMISSIVE = "Commissive"
    DIRECTIVE = "Directive"
    FEEDBACK = "Feedback"
    PROP_Q = "PropQ"
    SALUTATION = "Salutation"
    SET_Q = "SetQ"
    STATEMENT = "Statement"
    THANKING = "Thanking"
    NO_DA = "NoDialogueAct"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, label: str) -> "DialogueAct":
        """Parse a serialized label; raises ``ValueError`` on anything unknown."""
        if isinstance(label, DialogueAct):
            return label
        try:
            return _BY_LABEL[label]
        except (KeyError, TypeError):
            raise ValueError(f"unknown dialogue act label: {label!r}") from None


_BY_LABEL = {act.value: act for act in DialogueAct}
# the tagger and some corpus dumps spell the fallback label without "ue"
_BY_LABEL["NoDialogAct"] = DialogueAct.NO_DA

QUESTION_ACTS = frozenset({DialogueAct.PROP_Q, DialogueAct.SET_Q, DialogueAct.CHOICE_Q})

TOPICS = (
    "fashion",
    "politics",
    "books",
    "sports",
    "general-entertainment",
    "music",
    "science & technology",
    "movies",
)
_TOPIC_SET = frozenset(TOPICS)


def parse_topic(label: str) -> str:
    norm = " ".join(str(label).strip().lower().replace("_", "-").split())
    if norm == "science and technology":
        norm = "science & technology"
    if norm not in _TOPIC_SET:
        raise ValueError(f"unknown topic label: {label!r}")
    return norm
