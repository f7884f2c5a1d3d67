"""Regenerate the bundled fixtures: questions_1k.csv and two small embedding files.

    python3 generate.py

Output is fully determined by SEED.
"""

import csv
import math
import random

SEED = 20190601
N_ROWS = 1000
N_INSINCERE = 60

TOPICS = ["python", "rust", "calculus", "chemistry", "history", "guitar", "marathons", "gardening",
          "photography", "economics", "statistics", "french", "cooking", "astronomy", "philosophy",
          "investing", "biology", "painting", "chess", "swimming"]
PLACES = ["india", "canada", "germany", "brazil", "japan", "kenya", "australia", "mexico", "france", "egypt"]
GROUPS = ["liberals", "conservatives", "vegans", "atheists", "immigrants", "teenagers", "americans", "politicians"]
INSULTS = ["stupid", "lazy", "ignorant", "arrogant", "useless", "hypocritical", "dishonest", "pathetic",
           "brainwashed", "selfish", "violent", "fake"]
NEUTRAL = ["interested", "good", "different", "curious", "popular", "busy", "careful", "serious"]
DETAILS = [" as a complete beginner", " for my final exam", " on a tight budget", " with two hours a week",
           " before my exam next month", " while working full time"]
FILLER = ["I have been wondering about this for a while.", "Honest question here.", "Asking for a friend.",
          "This came up in a discussion today.", "Sorry if this was asked before.", "Quick question."]
TEMPLATES = [
    "How do I get better at {t}{c}?",
    "What is the best book on {t}{c}?",
    "Is it worth learning {t} in {p}{c}?",
    "How long does it take to learn {t}{c}?",
    "Why is {t} so popular in {p}{c}?",
    "Which university in {p} is best for {t}{c}?",
]
# share of sincere rows that mention a group, and how often that mention uses an insult
GROUP_RATE = 0.1
NOISE_RATE = 0.01
# share of rows carrying a study detail, by class
DETAIL_RATE = (0.6, 0.1)


def clause(rng, adjs):
    return " when " + rng.choice(GROUPS) + " are so " + " and ".join(adjs)


def questions(rng):
    # Both classes share templates and filler. Insincere rows differ by a single
    # insult, so the evidence is real but weaker than the 94/6 prior.
    rows = []
    for i in range(N_ROWS):
        insincere = i < N_INSINCERE
        if insincere:
            c = clause(rng, [rng.choice(INSULTS)])
        elif rng.random() < GROUP_RATE:
            adj = rng.choice(INSULTS) if rng.random() < NOISE_RATE / GROUP_RATE else rng.choice(NEUTRAL)
            c = clause(rng, [adj])
        else:
            c = ""
        if rng.random() < DETAIL_RATE[int(insincere)]:
            c = rng.choice(DETAILS) + c
        text = rng.choice(TEMPLATES).format(t=rng.choice(TOPICS), p=rng.choice(PLACES).capitalize(), c=c)
        text = " ".join(rng.sample(FILLER, 2)) + " " + text
        rows.append((text, int(insincere)))
    rng.shuffle(rows)
    return [(f"{rng.getrandbits(80):020x}", text, label) for text, label in rows]


def tokens(text):
    return ["".join(ch for ch in w.lower() if ch.isalnum()) for w in text.split()]


def write_embeddings(rows, rng):
    vocab = sorted({t for _, text, _ in rows for t in tokens(text) if t})
    dim = 16
    loaded = set(INSULTS) | set(GROUPS)
    axis = [rng.gauss(0, 1) for _ in range(dim)]
    vectors = {}
    for w in vocab:
        v = [rng.gauss(0, 0.3) for _ in range(dim)]
        if w in loaded:
            v = [a + 0.8 * b for a, b in zip(v, axis)]
        vectors[w] = v
    # a few rows the fixture never uses, plus one capitalized variant
    for w in ["zeppelin", "quasar", "Python"]:
        vectors[w] = [rng.gauss(0, 0.3) for _ in range(dim)]
    fmt = lambda v: " ".join(f"{x:.6f}" for x in v)
    with open("glove_fixture.txt", "w", encoding="utf-8") as f:
        for w, v in vectors.items():
            f.write(f"{w} {fmt(v)}\n")
    with open("fasttext_fixture.vec", "w", encoding="utf-8") as f:
        f.write(f"{len(vectors)} {dim}\n")
        for w, v in vectors.items():
            f.write(f"{w} {fmt(v)}\n")


def main():
    rng = random.Random(SEED)
    rows = questions(rng)
    with open("questions_1k.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["qid", "question_text", "target"])
        w.writerows(rows)
    write_embeddings(rows, rng)
    pos = sum(r[2] for r in rows)
    print(f"{len(rows)} rows, {pos} insincere ({pos / len(rows):.1%})")


if __name__ == "__main__":
    main()
