"""Plan, realize and score every generation variant on a corpus.

Uses the template realizer unless ``--endpoint`` points at a generation
service, in which case each variant's requests go to that service.  Prints
one metrics row per variant.

    python3 scripts/variant_comparison.py
    python3 scripts/variant_comparison.py --policy gold --endpoint http://localhost:8000/generate
"""

import argparse
import json
import sys
from pathlib import Path

from pdnrg.annotation import Frame, annotate_corpus
from pdnrg.config import Config
from pdnrg.corpus import load_dialogues, load_reading_sets
from pdnrg.generation import Variant
from pdnrg.metrics import evaluate_corpus
from pdnrg.pipeline import generate_corpus, make_realizer

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def _fmt(value):
    return f"{value:.3f}" if isinstance(value, float) else "-"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus", default=str(FIXTURES / "corpus.json"))
    ap.add_argument("--reading-sets", default=str(FIXTURES / "reading_sets.json"))
    ap.add_argument("--policy", default="gold", help="gold uses the annotated plans")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--endpoint")
    ap.add_argument("--json", help="write all reports here")
    args = ap.parse_args(argv)

    reading_sets = load_reading_sets(args.reading_sets)
    dialogues = annotate_corpus(load_dialogues(args.corpus, reading_sets=reading_sets), reading_sets)
    reports = {}
    print(f"{'variant':<15}{'bleu4':>8}{'rouge_l':>9}{'f1':>7}{'dist-1':>8}{'dist-2':>8}{'da_acc':>8}{'k_real':>8}")
    for variant in Variant:
        cfg = Config().override("policy", name=args.policy, seed=args.seed)
        cfg = cfg.override("generation", variant=variant.value, endpoint=args.endpoint)
        realizer = make_realizer("http" if args.endpoint else "template", cfg)
        records = list(generate_corpus(dialogues, reading_sets, cfg, realizer))
        pairs = [(r["candidate"], r["reference"]) for r in records]
        traces = [(Frame.from_json(s["frame"]), s["sentence"]) for r in records for s in r["trace"]]
        report = evaluate_corpus(pairs, traces or None).to_json()
        reports[variant.value] = report
        adh = report["adherence"] or {}
        print(
            f"{variant.value:<15}{report['bleu4']:>8.3f}{report['rouge_l']:>9.3f}{report['f1']:>7.3f}"
            f"{_fmt(report['distinct_1']):>8}{_fmt(report['distinct_2']):>8}{_fmt(adh.get('da_acc')):>8}{_fmt(adh.get('k_real')):>8}"
        )
    if args.json:
        Path(args.json).write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
