"""How many turns and sentences get a knowledge link as the threshold moves.

    python3 scripts/threshold_sweep.py
    python3 scripts/threshold_sweep.py --corpus data/test_freq.json --reading-sets data/reading_sets.json
"""

import argparse
import sys
from pathlib import Path

from pdnrg.corpus import knowledge_corpus_for, load_dialogues, load_reading_sets
from pdnrg.retrieval import build_index, select_knowledge

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus", default=str(FIXTURES / "corpus.json"))
    ap.add_argument("--reading-sets", default=str(FIXTURES / "reading_sets.json"))
    ap.add_argument("--thresholds", default="0.05,0.1,0.15,0.2,0.25,0.3,0.4,0.5")
    args = ap.parse_args(argv)

    reading_sets = load_reading_sets(args.reading_sets)
    turn_scores, sent_scores = [], []
    for d in load_dialogues(args.corpus, reading_sets=reading_sets):
        index = build_index(knowledge_corpus_for(d, reading_sets))
        for turn in d.turns:
            # threshold 0 keeps the score whatever it is
            turn_scores.append(select_knowledge(index, turn.raw_text, 0.0).score)
            sent_scores.extend(select_knowledge(index, s.text, 0.0).score for s in turn.sentences)

    print(f"{'threshold':>9}{'turns linked':>14}{'sentences linked':>18}")
    for t in (float(x) for x in args.thresholds.split(",")):
        tl = sum(s >= t for s in turn_scores) / len(turn_scores)
        sl = sum(s >= t for s in sent_scores) / len(sent_scores)
        print(f"{t:>9.2f}{tl:>14.1%}{sl:>18.1%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
