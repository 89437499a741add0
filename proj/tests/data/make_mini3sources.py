"""Regenerates the miniature 3sources-layout fixture in ./mini3sources.

Three sources, three topics, 36 documents shared by every source plus two
documents that only one source carries. Each source has its own vocabulary.
"""
import random
from pathlib import Path

OUT = Path(__file__).parent / "mini3sources"
TOPICS = ["business", "health", "sport"]
SOURCES = ["bbc", "guardian", "reuters"]
SHARED = list(range(1, 37))
EXTRA = {"bbc": [37], "guardian": [38], "reuters": []}
TOPIC_TERMS, BACKGROUND_TERMS = 8, 10


def main():
    rng = random.Random(2026)
    label = {doc: TOPICS[(doc - 1) % 3] for doc in SHARED + [37, 38]}
    OUT.mkdir(exist_ok=True)
    for src in SOURCES:
        terms = [f"{src}_{t}_{i}" for t in TOPICS for i in range(TOPIC_TERMS)]
        terms += [f"{src}_common_{i}" for i in range(BACKGROUND_TERMS)]
        docs = SHARED + EXTRA[src]
        rng.shuffle(docs)
        entries = {}
        for col, doc in enumerate(docs, start=1):
            topic = TOPICS.index(label[doc])
            for _ in range(rng.randint(6, 12)):
                r = rng.random()
                if r < 0.55:
                    row = topic * TOPIC_TERMS + rng.randrange(TOPIC_TERMS)
                elif r < 0.75:
                    row = rng.randrange(3 * TOPIC_TERMS)
                else:
                    row = 3 * TOPIC_TERMS + rng.randrange(BACKGROUND_TERMS)
                entries[(row + 1, col)] = entries.get((row + 1, col), 0) + 1
        with open(OUT / f"3sources_{src}.mtx", "w") as f:
            f.write("%%MatrixMarket matrix coordinate real general\n")
            f.write(f"{len(terms)} {len(docs)} {len(entries)}\n")
            for (row, col), count in sorted(entries.items(), key=lambda e: (e[0][1], e[0][0])):
                f.write(f"{row} {col} {count}\n")
        (OUT / f"3sources_{src}.terms").write_text("\n".join(terms) + "\n")
        (OUT / f"3sources_{src}.docs").write_text("\n".join(map(str, docs)) + "\n")
    with open(OUT / "3sources.disjoint.clist", "w") as f:
        for topic in TOPICS:
            ids = sorted(d for d, t in label.items() if t == topic)
            f.write(f"{topic}: {','.join(map(str, ids))}\n")


if __name__ == "__main__":
    main()
