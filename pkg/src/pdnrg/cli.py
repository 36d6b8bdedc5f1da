"""Command-line entry point: annotate, plan, generate, evaluate, simulate, chat."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import random
import sys
from typing import Sequence, TextIO

from . import __version__
from .acts import DialogueAct
from .annotation import Frame, annotate_corpus, no_da_fraction
from .config import Config, ConfigError, load_config
from .corpus import (
    KnowledgeCorpus,
    corpus_statistics,
    load_dialogues,
    load_reading_sets,
    segment_sentences,
    write_enriched,
)
from .generation import Variant, generate_turn
from .metrics import evaluate_corpus
from .pipeline import generate_corpus, make_realizer, plan_corpus
from .policy import POLICY_NAMES, PolicyContext, get_policy, simulate_corpus, simulate_rollout
from .retrieval import KnowledgeSelection, TokenizerConfig, build_index, select_knowledge
from .tagging import heuristic_tag, load_tag_records

logger = logging.getLogger("pdnrg")


class CliError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


class _Output:
    def __init__(self, path: str | None):
        self.path = path

    def __enter__(self) -> TextIO:
        if self.path in (None, "-"):
            self.fh = sys.stdout
        else:
            self.fh = open(self.path, "w", encoding="utf-8", newline="\n")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()
        else:
            self.fh.flush()


def _config(args) -> Config:
    cfg = load_config(args.config)
    if getattr(args, "threshold", None) is not None:
        cfg = cfg.override("retrieval", threshold=args.threshold)
    if getattr(args, "scorer", None) is not None:
        cfg = cfg.override("retrieval", scorer=args.scorer)
    cfg = cfg.override(
        "policy",
        name=getattr(args, "policy", None),
        seed=getattr(args, "seed", None),
        endpoint=getattr(args, "planner_endpoint", None),
    )
    cfg = cfg.override(
        "generation",
        variant=getattr(args, "variant", None),
        endpoint=getattr(args, "endpoint", None),
        include_past_das=True if getattr(args, "include_past_das", False) else None,
    )
    return cfg


# --------------------------------------------------------------------------
# subcommands


def cmd_annotate(args) -> int:
    cfg = _config(args)
    reading_sets = load_reading_sets(args.reading_sets)
    dialogues = load_dialogues(args.corpus, args.format, reading_sets)
    tags = load_tag_records(args.tags) if args.tags else None
    annotated = annotate_corpus(
        dialogues,
        reading_sets,
        tags,
        threshold=cfg.retrieval.threshold,
        confidence_floor=args.confidence_floor,
        config=TokenizerConfig(cfg.retrieval.lowercase, cfg.retrieval.strip_punct),
    )
    write_enriched(annotated, args.out)
    summary = {"dialogues": len(annotated)}
    if annotated and any(d.turns for d in annotated):
        stats = corpus_statistics(annotated)
        summary.update(stats, no_dialogue_act_fraction=no_da_fraction(annotated))
    print(_dump(summary), file=sys.stderr)
    return 0


def cmd_plan(args) -> int:
    cfg = _config(args)
    reading_sets = load_reading_sets(args.reading_sets)
    dialogues = load_dialogues(args.corpus, args.format, reading_sets)
    with _Output(args.out) as out:
        for planned in plan_corpus(dialogues, reading_sets, cfg):
            rec = planned.to_json()
            rec["policy"] = cfg.policy.name
            out.write(_dump(rec) + "\n")
    return 0


def _read_knowledge_file(path: str) -> KnowledgeCorpus:
    with open(path, encoding="utf-8") as fh:
        return KnowledgeCorpus.from_texts((line.strip() for line in fh), source_doc=os.path.basename(path))


def cmd_generate(args) -> int:
    cfg = _config(args)
    realizer = make_realizer(args.realizer, cfg)
    if args.history:
        if not args.knowledge:
            raise CliError("--history needs --knowledge (one knowledge sentence per line)")
        reply = _reply(cfg, realizer, _read_knowledge_file(args.knowledge), list(args.history), None)
        with _Output(args.out) as out:
            out.write(_dump(reply) + "\n")
        return 0
    if not (args.corpus and args.reading_sets):
        raise CliError("generate needs --corpus and --reading-sets, or --history and --knowledge")
    reading_sets = load_reading_sets(args.reading_sets)
    dialogues = load_dialogues(args.corpus, args.format, reading_sets)
    with _Output(args.out) as out:
        for rec in generate_corpus(dialogues, reading_sets, cfg, realizer):
            out.write(_dump(rec) + "\n")
    return 0


def _read_texts(path: str, keys: Sequence[str]) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if path.endswith(".jsonl"):
        out = []
        for n, line in enumerate(lines, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            key = next((k for k in keys if k in rec), None)
            if key is None:
                raise CliError(f"{path}:{n}: none of {list(keys)} present")
            out.append(rec[key])
        return out
    return [line for line in lines if line.strip()]


def _read_traces(path: str) -> list[tuple[Frame, str]]:
    traces = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                for step in json.loads(line).get("trace", []):
                    traces.append((Frame.from_json(step["frame"]), step["sentence"]))
    return traces


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    cands = _read_texts(args.candidates, ("candidate", "text"))
    refs = _read_texts(args.references, ("reference", "text"))
    if len(cands) != len(refs):
        raise CliError(f"{len(cands)} candidates but {len(refs)} references")
    traces = _read_traces(args.traces) if args.traces else None
    report = evaluate_corpus(list(zip(cands, refs)), traces, overlap=cfg.metrics.adherence_overlap)
    with _Output(args.out) as out:
        out.write(json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n")
    return 0


def _histogram_rows(result, non_initial: bool):
    counts = result.non_initial_counts if non_initial else result.counts
    total = sum(counts.values())
    return [(a.value, counts[a], counts[a] / total if total else 0.0) for a in DialogueAct]


def cmd_simulate(args) -> int:
    cfg = _config(args)
    policy = get_policy(cfg.policy.name, weights=cfg.policy.weights, endpoint=cfg.policy.endpoint)
    if args.corpus:
        corpus = load_dialogues(args.corpus, args.format)
        result = simulate_corpus(policy, corpus, cfg.policy.seed, include_opening=args.include_opening)
    else:
        result = simulate_rollout(policy, args.turns, cfg.policy.seed)
    with _Output(args.out) as out:
        if args.output_format == "csv":
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["scope", "act", "count", "frequency"])
            for scope, flag in (("all", False), ("non_initial", True)):
                for act, count, freq in _histogram_rows(result, flag):
                    writer.writerow([scope, act, count, f"{freq:.6f}"])
        else:
            doc = {
                "policy": cfg.policy.name,
                "seed": cfg.policy.seed,
                "plans": result.plans,
                "initial_plans": result.initial_plans,
                "all": {a.value: f for a, f in result.frequencies().items()},
                "non_initial": {a.value: f for a, f in result.frequencies(non_initial=True).items()},
            }
            out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return 0


def _reply(cfg: Config, realizer, knowledge: KnowledgeCorpus, history: list[str], state: dict | None) -> dict:
    """Select knowledge from the last turn, plan acts and realize the reply."""
    state = state if state is not None else {}
    tok = TokenizerConfig(cfg.retrieval.lowercase, cfg.retrieval.strip_punct)
    index = state.get("index") or build_index(knowledge, tok)
    state["index"] = index
    policy = state.get("policy") or get_policy(cfg.policy.name, cfg.policy.weights, cfg.policy.endpoint)
    state["policy"] = policy
    rng = state.setdefault("rng", random.Random(cfg.policy.seed))
    j = len(history)
    if j == 0:
        ctx = PolicyContext(0, current_selection=KnowledgeSelection.empty())
    else:
        sents = segment_sentences(history[-1]) or [history[-1]]
        tag = heuristic_tag(sents[-1])
        last_da = tag.label if tag.confidence >= 0.5 else DialogueAct.NO_DA
        selection = select_knowledge(index, history[-1], cfg.retrieval.threshold, cfg.retrieval.scorer)
        ctx = PolicyContext(j, last_da, state.get("prev_knowledge"), selection)
    decision = policy(ctx, rng, history)
    state["prev_knowledge"] = decision.knowledge_id
    gen = cfg.generation
    result = generate_turn(
        history, decision.to_plan(), realizer, Variant(gen.variant), False, None,
        gen.history_token_cap, gen.knowledge_token_cap,
    )
    return {
        "turn_idx": j,
        "reply": result.text,
        "decision": decision.to_json(),
        "trace": [{"frame": f.to_json(), "sentence": s} for f, s in result.trace],
    }


def cmd_chat(args) -> int:
    cfg = _config(args)
    realizer = make_realizer(args.realizer, cfg)
    if args.knowledge:
        knowledge = _read_knowledge_file(args.knowledge)
    elif args.reading_sets and args.doc:
        sets = load_reading_sets(args.reading_sets)
        texts = []
        for doc in args.doc:
            if doc not in sets:
                raise CliError(f"reading set {doc!r} not found")
            texts.extend(s for sents in sets[doc].values() for s in sents)
        knowledge = KnowledgeCorpus.from_texts(texts, source_doc="+".join(args.doc))
    else:
        raise CliError("chat needs --knowledge, or --reading-sets with --doc")
    history: list[str] = []
    state: dict = {}
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            print("you> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line in ("/quit", "/exit"):
            break
        history.append(line)
        reply = _reply(cfg, realizer, knowledge, history, state)
        history.append(reply["reply"])
        print(f"bot> {reply['reply']}")
        for step in reply["trace"]:
            f = step["frame"]
            k = f" +k[{f['knowledge_id']}]" if f["use_knowledge"] else ""
            print(f"  [{f['da']}{k}] {step['sentence']}")
        sel = reply["decision"]
        print(f"  knowledge: {sel['knowledge_id']} score={sel['knowledge_score']:.3f} use={sel['use_knowledge']}")
        sys.stdout.flush()
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdnrg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--config", help="TOML or JSON config (default: $PDNRG_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    def corpus_args(p, required=True):
        p.add_argument("--corpus", required=required)
        p.add_argument("--reading-sets", required=required)
        p.add_argument("--format", default="auto", choices=["auto", "topical-chat", "enriched"])

    def policy_args(p, choices=POLICY_NAMES):
        p.add_argument("--policy", choices=choices)
        p.add_argument("--seed", type=int)
        p.add_argument("--planner-endpoint", help="URL of an external DA planner (policy 'external')")

    p = sub.add_parser("annotate", help="link knowledge, ingest DA tags, write the enriched corpus")
    corpus_args(p)
    p.add_argument("--tags", help="tagger output, JSON lines; heuristic tagger when omitted")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--confidence-floor", type=float, default=0.5)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("plan", help="emit one action plan per turn as JSON lines")
    corpus_args(p)
    policy_args(p, POLICY_NAMES + ("gold",))
    p.add_argument("--threshold", type=float)
    p.add_argument("--scorer", choices=["tfidf", "bm25"])
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("generate", help="plan and realize turns")
    corpus_args(p, required=False)
    policy_args(p, POLICY_NAMES + ("gold",))
    p.add_argument("--realizer", default="template", choices=["template", "http"])
    p.add_argument("--endpoint", help="realizer URL for --realizer http")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--include-past-das", action="store_true")
    p.add_argument("--history", action="append", help="single-context mode: a history turn (repeatable)")
    p.add_argument("--knowledge", help="single-context mode: knowledge file, one sentence per line")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="automatic metrics report")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--traces", help="JSON lines with a 'trace' list, as written by generate")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="dialogue-act distribution of a policy")
    policy_args(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--turns", type=int, help="self-play rollout of this many turns")
    src.add_argument("--corpus", help="plan after every turn of this corpus")
    p.add_argument("--format", default="auto", choices=["auto", "topical-chat", "enriched"])
    p.add_argument("--include-opening", action="store_true")
    p.add_argument("--output-format", default="json", choices=["json", "csv"])
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("chat", help="interactive terminal chat printing action-plan traces")
    policy_args(p)
    p.add_argument("--knowledge", help="knowledge file, one sentence per line")
    p.add_argument("--reading-sets")
    p.add_argument("--doc", action="append", help="reading-set document id (repeatable)")
    p.add_argument("--realizer", default="template", choices=["template", "http"])
    p.add_argument("--endpoint")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_chat)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CliError, ConfigError, ValueError, OSError, RuntimeError, KeyError) as exc:
        print(_dump({"command": args.command, "error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
