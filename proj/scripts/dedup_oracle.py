"""Builds the 50-item dedup fixture and its pairwise ROUGE-1 table.

ROUGE-1 here is computed with exact fractions from Counter multisets; the
planted representative set is checked against a greedy clustering pass.
"""
import json
import pathlib
import random
from collections import Counter
from fractions import Fraction

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"

VOCAB = """index vacuum table column query plan join hash merge sort buffer cache page tuple
lock deadlock replica backup restore wal checkpoint autovacuum bloat partition schema view
trigger function sequence constraint foreign primary unique cluster analyze statistics
planner cost memory disk latency throughput connection pool timeout transaction isolation
snapshot commit rollback savepoint cursor insert update delete upsert copy export import
role grant revoke password ssl certificate extension upgrade migration shard""".split()


def rouge1(a: str, b: str) -> Fraction:
    ca, cb = Counter(a.lower().split()), Counter(b.lower().split())
    na, nb = sum(ca.values()), sum(cb.values())
    overlap = sum((ca & cb).values())
    if na == 0 or nb == 0 or overlap == 0:
        return Fraction(0)
    p, r = Fraction(overlap, na), Fraction(overlap, nb)
    return 2 * p * r / (p + r)


def main():
    rng = random.Random(20240611)
    bases = []
    while len(bases) < 40:
        words = rng.sample(VOCAB, 10)
        q = "How " + " ".join(words)
        if all(rouge1(q, b) < Fraction(1, 2) for b in bases):
            bases.append(q)

    def variant(q, replaced):
        toks = q.split()
        for pos in rng.sample(range(1, len(toks)), replaced):
            toks[pos] = toks[pos] + "x"
        return " ".join(toks)

    # (base index, words replaced) over 11 tokens: 1 -> 10/11, 2 -> 9/11, 3 -> 8/11 (kept apart).
    plants = [(0, 1), (3, 1), (5, 2), (7, 1), (11, 1), (11, 2), (19, 1), (23, 2), (30, 1), (35, 3)]
    items = [{"question": q, "answers": [{"text": f"answer {i}", "upvotes": 1, "accepted": True}]}
             for i, q in enumerate(bases)]
    planted_dups = []
    for base, replaced in plants:
        items.append({"question": variant(bases[base], replaced),
                      "answers": [{"text": f"dup answer of {base}", "upvotes": 9, "accepted": False}]})
        planted_dups.append((len(items) - 1, base, replaced))

    # Greedy clustering with exact arithmetic.
    reps = []
    for i, it in enumerate(items):
        scores = [(rouge1(it["question"], items[r]["question"]), r) for r in reps]
        hits = [s for s in scores if s[0] >= Fraction(4, 5)]
        if not hits:
            reps.append(i)
    expected = list(range(40)) + [i for i, _, rep in planted_dups if rep == 3]
    assert reps == expected, (reps, expected)

    pairs = []
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            pairs.append([i, j, float(rouge1(items[i]["question"], items[j]["question"]))])

    (OUT / "dedup50.jsonl").write_text("".join(json.dumps(it) + "\n" for it in items))
    (OUT / "dedup50_oracle.json").write_text(json.dumps({"representatives": reps, "pairs": pairs}) + "\n")
    print(len(items), "items,", len(reps), "representatives")


if __name__ == "__main__":
    main()
