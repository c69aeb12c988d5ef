import math

import numpy as np
import pytest

from helpers import instances, random_lattices
from moseq.decoder import (FLOOR, DecodeError, brute_force_decode, format_trace,
                           multi_order_decode, score_sequence, search_space, unigram_tags)
from moseq.labelspace import START, LabelVocab, build_label_vocab, join
from moseq.nn import log_softmax
from moseq.tagger import ScoreLattice


def lattice(order, labels, scores):
    return ScoreLattice(order, LabelVocab(order, labels), np.asarray(scores, dtype=float))


def test_order1_only_is_per_position_argmax():
    rng = np.random.default_rng(0)
    for _ in range(50):
        (lat,) = random_lattices(rng, 5, 4, [1])
        expected = [lat.labels.itos[i] for i in lat.scores.argmax(axis=1)]
        assert multi_order_decode([lat], prune=None) == expected
        assert multi_order_decode([lat], prune=2) == expected


def test_matches_brute_force():
    for lats in instances(seed=1, count=200):
        exact = brute_force_decode(lats)
        got = multi_order_decode(lats, prune=None)
        assert got == exact
        assert score_sequence(lats, got) == score_sequence(lats, exact)


def test_full_width_pruning_is_lossless():
    for lats in instances(seed=2, count=200):
        L = len(unigram_tags(lats))
        a, b = [], []
        assert multi_order_decode(lats, prune=L, trace=a) == multi_order_decode(lats, prune="off", trace=b)
        assert a == b


def test_ties_prefer_smallest_ids():
    rng = np.random.default_rng(3)
    lats = random_lattices(rng, 4, 3, [1, 2, 3], keep=1.0)
    for lat in lats:
        lat.scores[:] = 0.0
    first = unigram_tags(lats)[0]
    assert multi_order_decode(lats, prune=None) == [first] * 4 == brute_force_decode(lats)


def test_brute_force_single_position():
    tags = ["A", "B", "C"]
    l1 = lattice(1, tags, [[-1.0, -0.5, -2.0]])
    l2 = lattice(2, [join([START, "C"]), join([START, "A"])], [[-0.1, -3.0]])
    # A: -1 - 3 = -4, B: -0.5 + FLOOR, C: -2 - 0.1
    assert brute_force_decode([l1, l2]) == ["C"]
    assert multi_order_decode([l1, l2], prune=None) == ["C"]


def test_planted_sequence_recovered():
    planted = ["B", "I", "O", "B", "I", "I"]
    rng = np.random.default_rng(4)
    lats = []
    for order in (1, 2, 3):
        vocab = build_label_vocab([planted, ["O", "O", "B", "I"]], order)
        gold = [vocab.stoi[l] for l in vocab.itos if l in set(_ngrams(planted, order))]
        scores = np.full((len(planted), len(vocab)), -20.0) + rng.uniform(0, 1, (len(planted), len(vocab)))
        for t, lab in enumerate(_ngrams(planted, order)):
            scores[t, vocab.stoi[lab]] = 0.0
        lats.append(ScoreLattice(order, vocab, log_softmax(scores)))
        assert gold
    assert multi_order_decode(lats, prune=None) == planted == brute_force_decode(lats)
    assert multi_order_decode(lats, prune=2) == planted


def _ngrams(tags, order):
    from moseq.labelspace import to_ngram
    return to_ngram(tags, order)


def test_search_space_reduction():
    rng = np.random.default_rng(5)
    lats = random_lattices(rng, 4, 50, [1, 2, 3], keep=0.001)
    assert search_space(lats, prune=None)[2:] == [50 ** 3, 50 ** 3]
    assert search_space(lats, prune=5)[2:] == [5 ** 3, 5 ** 3]
    assert search_space(lats, prune=5)[:2] == [5, 25]


def test_candidates_bounded_by_width_power():
    for lats in instances(seed=6, count=100):
        n = lats[-1].order
        for width in (1, 2, 3):
            assert max(search_space(lats, prune=width)) <= width ** n


def test_uniform_higher_order_shifts_scores():
    rng = np.random.default_rng(7)
    (l1,) = random_lattices(rng, 5, 3, [1])
    tags = l1.labels.itos
    v2 = build_label_vocab([[a, b] for a in tags for b in tags] + [[a] for a in tags], 2)
    l2 = ScoreLattice(2, v2, np.full((5, len(v2)), -math.log(len(v2))))
    best = multi_order_decode([l1], prune=None)
    assert best == [tags[i] for i in l1.scores.argmax(axis=1)]
    assert score_sequence([l1], best) == pytest.approx(l1.scores.max(axis=1).sum(), abs=1e-12)
    for seq in (best, [tags[0]] * 5, [tags[1], tags[2], tags[0], tags[0], tags[1]]):
        shift = score_sequence([l1, l2], seq) - score_sequence([l1], seq)
        assert shift == pytest.approx(-5 * math.log(len(v2)), abs=1e-9)
    assert multi_order_decode([l1, l2], prune=None) == best


def test_decoded_score_dominates_any_sequence():
    rng = np.random.default_rng(8)
    for lats in instances(seed=8, count=100):
        tags = unigram_tags(lats)
        T = lats[0].scores.shape[0]
        other = [tags[i] for i in rng.integers(len(tags), size=T)]
        best = multi_order_decode(lats, prune=None)
        assert score_sequence(lats, best) >= score_sequence(lats, other)
        assert set(best) <= set(tags)


def test_all_floored_still_decodes():
    l1 = lattice(1, ["A", "B"], [[-1.0, -2.0], [-1.0, -2.0]])
    l2 = lattice(2, [join(["Z", "Z"])], [[0.0], [0.0]])
    out = multi_order_decode([l1, l2], prune=None)
    assert out == ["A", "A"]
    assert score_sequence([l1, l2], out) == pytest.approx(-2.0 + 2 * FLOOR)


def test_lattices_not_mutated():
    for lats in instances(seed=9, count=30):
        before = [l.scores.copy() for l in lats]
        multi_order_decode(lats, prune=2)
        brute_force_decode(lats)
        assert all(np.array_equal(a, l.scores) for a, l in zip(before, lats))


def test_errors():
    l1 = lattice(1, ["A", "B"], [[-1.0, -2.0]])
    l2 = lattice(2, [join([START, "A"])], [[0.0], [0.0]])
    with pytest.raises(DecodeError):
        multi_order_decode([l1, l2])
    with pytest.raises(DecodeError):
        multi_order_decode([l2, l1])
    with pytest.raises(DecodeError):
        multi_order_decode([])
    only2 = lattice(2, [join([START, "A"])], [[0.0]])
    with pytest.raises(DecodeError, match="order-1"):
        multi_order_decode([only2], prune=1)
    assert multi_order_decode([only2], prune=None) == ["A"]
    with pytest.raises(DecodeError):
        score_sequence([l1], ["C"])
    with pytest.raises(DecodeError):
        score_sequence([l1], ["A", "A"])
    with pytest.raises(DecodeError):
        multi_order_decode([l1], prune=0)
    big = lattice(1, [f"t{i}" for i in range(10)], np.zeros((7, 10)))
    with pytest.raises(DecodeError, match="enumeration"):
        brute_force_decode([big])


def test_trace_dump():
    l1 = lattice(1, ["A", "B"], [[-1.0, -2.0], [-0.5, -0.1]])
    l2 = lattice(2, [join([START, "A"]), join(["A", "B"])], [[0.0, -9.0], [-1.0, -0.2]])
    trace = []
    multi_order_decode([l1, l2], prune=None, trace=trace)
    text = format_trace(trace, ["A", "B"])
    lines = text.splitlines()
    assert len(lines) == 4
    assert lines[0].split("\t")[:2] == ["0", "A"]
    assert lines[0].split("\t")[3] == "<START>"
