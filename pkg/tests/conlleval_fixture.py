"""Hand-traced conlleval cases: (gold, predicted, (correct, gold chunks, predicted chunks)).

Counts follow conlleval's chunk boundaries: B always opens a chunk, and an
I- tag opens one when the previous tag is O or of another type.
"""

CASES = [
    ("B-NP I-NP O", "B-NP I-NP O", (1, 1, 1)),
    ("B-NP I-NP", "B-NP B-NP", (0, 1, 2)),
    ("O I-NP I-NP", "O B-NP I-NP", (1, 1, 1)),           # orphan I- in gold
    ("B-PER I-PER", "B-PER I-LOC", (0, 1, 2)),            # type change splits
    ("B-LOC B-LOC", "B-LOC I-LOC", (0, 2, 1)),            # adjacent chunks merged
    ("O O O", "O O O", (0, 0, 0)),
    ("O O", "B-X O", (0, 0, 1)),
    ("B-X O", "O O", (0, 1, 0)),
    ("I-X I-Y", "I-X I-Y", (2, 2, 2)),
    ("B-X I-X I-X O B-Y", "B-X I-X O O B-Y", (1, 2, 2)),
    ("B-NP I-NP B-VP I-VP", "B-NP I-NP I-VP I-VP", (2, 2, 2)),
    ("B-A I-B", "B-A I-A", (0, 2, 1)),
    ("B-A", "I-A", (1, 1, 1)),
    ("O B-A I-A I-A", "O I-A I-A B-A", (0, 1, 2)),
    ("B-A O B-A", "B-A O I-A", (2, 2, 2)),
    ("B-A I-A O I-A", "B-A I-A I-A I-A", (0, 2, 1)),
    ("B-X", "B-Y", (0, 1, 1)),
    ("B-X I-X", "I-X I-X", (1, 1, 1)),
    ("B-X I-X B-X I-X", "B-X I-X B-X I-X", (2, 2, 2)),
    ("B-X I-X B-X I-X", "B-X I-X I-X I-X", (0, 2, 1)),
    ("O I-X O I-X", "O B-X O B-X", (2, 2, 2)),
    ("B-A B-B B-C", "B-A I-B B-C", (3, 3, 3)),
    ("B-A I-A I-A", "O B-A I-A", (0, 1, 1)),
    ("O B-A I-A", "B-A I-A I-A", (0, 1, 1)),
    ("B-LOC I-LOC I-LOC", "B-LOC O B-LOC", (0, 1, 2)),    # Gulf of Mexico split
    ("B-ORG I-ORG I-ORG I-ORG", "B-LOC B-ORG I-ORG I-ORG", (0, 1, 2)),
    ("B-A I-A O B-B I-B", "B-A I-A O B-B I-B", (2, 2, 2)),
    ("I-A B-A", "B-A B-A", (2, 2, 2)),
    ("B-A I-A", "B-A O", (0, 1, 1)),
    ("O", "I-Z", (0, 0, 1)),
]

# totals of the hand counts above
CORRECT, GOLD, PRED = 22, 41, 43
PRECISION, RECALL, F1 = 51.16, 53.66, 52.38


def tag_lists():
    gold = [g.split() for g, _, _ in CASES]
    pred = [p.split() for _, p, _ in CASES]
    return gold, pred
