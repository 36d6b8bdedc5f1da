"""Dialogue-act distribution of every built-in policy.

Plans a response after each turn of a corpus (the bundled fixture by
default) and prints one row per policy with the share of each act.  With
``--turns`` the policies are rolled out in self-play instead.

    python3 scripts/act_distribution.py
    python3 scripts/act_distribution.py --turns 100000 --csv acts.csv
"""

import argparse
import csv
import sys
from pathlib import Path

from pdnrg.acts import DialogueAct
from pdnrg.corpus import load_dialogues
from pdnrg.policy import simulate_corpus, simulate_rollout

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "corpus.json"
POLICIES = ("simple", "kd-da-p", "propq", "allq")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus", default=str(FIXTURE))
    ap.add_argument("--turns", type=int, help="self-play rollout length instead of a corpus")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--include-opening", action="store_true")
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args(argv)

    corpus = None if args.turns else load_dialogues(args.corpus)
    acts = list(DialogueAct)
    rows = []
    for name in POLICIES:
        if corpus is None:
            result = simulate_rollout(name, args.turns, args.seed)
        else:
            result = simulate_corpus(name, corpus, args.seed, include_opening=args.include_opening)
        freq = result.frequencies()
        rows.append([name, result.plans] + [freq.get(a, 0.0) for a in acts])

    short = [a.value[:8] for a in acts]
    print(f"{'policy':<9}{'plans':>7} " + " ".join(f"{s:>8}" for s in short))
    for name, plans, *vals in rows:
        print(f"{name:<9}{plans:>7} " + " ".join(f"{v:>8.3f}" for v in vals))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["policy", "plans"] + [a.value for a in acts])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
