"""Policy-driven planning, realization, annotation and evaluation for knowledge-grounded dialogue."""

__version__ = "0.1.0"

from .acts import TOPICS, DialogueAct
from .annotation import ActionPlan, Frame, assemble_action_plans
from .corpus import Dialogue, KnowledgeCorpus, SentenceUnit, Turn, load_dialogues, segment_sentences, write_enriched
from .generation import GenerationRequest, TemplateRealizer, Variant, generate_turn, serialize_generation_request
from .metrics import bleu4, distinct_n, evaluate_corpus, rouge_l, unigram_prf
from .policy import PolicyContext, PolicyDecision, get_policy, weighted_sample
from .retrieval import KnowledgeSelection, build_index, cosine_score, rank_knowledge, select_knowledge

__all__ = [
    "ActionPlan", "Dialogue", "DialogueAct", "Frame", "GenerationRequest", "KnowledgeCorpus",
    "KnowledgeSelection", "PolicyContext", "PolicyDecision", "SentenceUnit", "TOPICS", "TemplateRealizer",
    "Turn", "Variant", "assemble_action_plans", "bleu4", "build_index", "cosine_score", "distinct_n",
    "evaluate_corpus", "generate_turn", "get_policy", "load_dialogues", "rank_knowledge", "rouge_l",
    "segment_sentences", "select_knowledge", "serialize_generation_request", "unigram_prf",
    "weighted_sample", "write_enriched",
]
