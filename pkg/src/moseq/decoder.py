"""Multi-order decoding.

The score of a unigram tag sequence is the sum, over every model order o
and position t, of the order-o log-probability of the o tags ending at t
(START-padded before the sentence). Labels that the order-o vocabulary never
saw get ``FLOOR``. The dynamic program keys its chart on the last n-1 tags,
n being the largest order, and can restrict the tags considered at each
position to the top ``width`` tags of the order-1 lattice.

Ties are broken toward the lexicographically smallest sequence of tag ids,
in both the dynamic program and the brute-force oracle. Both accumulate
per-position scores in the same order, so equal scores compare equal
bit for bit.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

FLOOR = -1e4
ENUMERATION_LIMIT = 10 ** 6
_START = -1


class DecodeError(ValueError):
    pass


def unigram_tags(lattices) -> list[str]:
    """The order-1 tag set, in id order."""
    for lat in lattices:
        if lat.order == 1:
            return list(lat.labels.itos)
    return lattices[0].labels.unigrams()


def _prune_width(prune) -> int | None:
    if prune is None or prune == "off" or prune is False:
        return None
    width = int(prune)
    if width < 1:
        raise DecodeError("pruning width must be >= 1")
    return width


class _Problem:
    """Read-only views of one sentence's lattices."""

    def __init__(self, lattices):
        if not lattices:
            raise DecodeError("no lattices given")
        orders = [lat.order for lat in lattices]
        if any(a >= b for a, b in zip(orders, orders[1:])):
            raise DecodeError(f"lattice orders must be strictly increasing, got {orders}")
        lengths = {lat.scores.shape[0] for lat in lattices}
        if len(lengths) != 1:
            raise DecodeError(f"lattices disagree on sentence length: {sorted(lengths)}")
        for lat in lattices:
            if lat.scores.shape[1] != len(lat.labels):
                raise DecodeError(f"order-{lat.order} lattice width does not match its label vocabulary")
        self.T = lengths.pop()
        self.tags = unigram_tags(lattices)
        self.L = len(self.tags)
        self.n = orders[-1]
        self.orders = orders
        self.tables = [lat.labels.ngram_index(self.tags) for lat in lattices]
        self.rows = [lat.scores.tolist() for lat in lattices]
        self.unigram = next((lat.scores for lat in lattices if lat.order == 1), None)

    def score_at(self, t: int, ngram: tuple[int, ...]) -> float:
        """Summed log-score of the n-gram (length n, ending at t)."""
        n = self.n
        s = 0.0
        for o, table, rows in zip(self.orders, self.tables, self.rows):
            lid = table.get(ngram[n - o:])
            s += rows[t][lid] if lid is not None else FLOOR
        return s

    def candidates(self, width: int | None) -> list[list[int]]:
        """Candidate tag ids per position, ascending."""
        if width is not None and self.unigram is None:
            raise DecodeError("pruning requires an order-1 lattice")
        if width is None or width >= self.L:
            return [list(range(self.L))] * self.T
        out = []
        for row in self.unigram:
            top = np.argsort(-row, kind="stable")[:width]
            out.append(sorted(int(i) for i in top))
        return out

    def sequence_score(self, ids: Sequence[int]) -> float:
        padded = (_START,) * (self.n - 1) + tuple(ids)
        total = 0.0
        for t in range(self.T):
            total += self.score_at(t, padded[t:t + self.n])
        return total


def _backtrack(back, t: int, cand: tuple[int, ...]) -> list[int]:
    """Tag ids for positions 0..t of the path whose last n-gram is ``cand``."""
    out = [cand[-1]]
    state = cand[:-1]
    for j in range(t - 1, -1, -1):
        c = back[j][state]
        out.append(c[-1])
        state = c[:-1]
    out.reverse()
    return out


def _viterbi(prob: _Problem, width: int | None, trace: list | None = None) -> list[int]:
    n, T = prob.n, prob.T
    if T == 0:
        return []
    cands = prob.candidates(width)
    chart = {(_START,) * (n - 1): 0.0}
    back: list[dict] = []
    for t in range(T):
        # per-order score of every admissible suffix ending at t
        suffix_scores = []
        for o, table, rows in zip(prob.orders, prob.tables, prob.rows):
            sets = [cands[j] if j >= 0 else [_START] for j in range(t - o + 1, t + 1)]
            row = rows[t]
            scores = {}
            for suf in itertools.product(*sets):
                lid = table.get(suf)
                scores[suf] = row[lid] if lid is not None else FLOOR
            suffix_scores.append((n - o, scores))
        new: dict[tuple, float] = {}
        bp: dict[tuple, tuple] = {}
        for prev, a in chart.items():
            for y in cands[t]:
                cand = prev + (y,)
                s = 0.0
                for cut, scores in suffix_scores:
                    s += scores[cand[cut:]]
                total = a + s
                state = cand[1:]
                old = new.get(state)
                if old is None or total > old:
                    new[state] = total
                    bp[state] = cand
                elif total == old and _backtrack(back, t, cand) < _backtrack(back, t, bp[state]):
                    bp[state] = cand
        back.append(bp)
        chart = new
        if trace is not None:
            for state in sorted(chart):
                trace.append((t, state, chart[state], bp[state][:-1]))
    best = max(chart.values())
    paths = [_backtrack(back, T - 1, back[T - 1][s]) for s, v in chart.items() if v == best]
    return min(paths)


def multi_order_decode(lattices, prune=5, trace: list | None = None) -> list[str]:
    """Best unigram tag sequence under the product of all lattices.

    ``prune`` is a top-k width over order-1 tags, or ``None``/``"off"``.
    When ``trace`` is a list, one ``(t, state, score, previous state)``
    tuple per chart cell is appended to it.
    """
    prob = _Problem(lattices)
    ids = _viterbi(prob, _prune_width(prune), trace)
    return [prob.tags[i] for i in ids]


def brute_force_decode(lattices) -> list[str]:
    """Exhaustive argmax over all |tags|^T sequences."""
    prob = _Problem(lattices)
    if prob.L ** prob.T > ENUMERATION_LIMIT:
        raise DecodeError(f"{prob.L}^{prob.T} sequences exceed the enumeration limit")
    best, best_ids = None, ()
    # product() enumerates in lexicographic order, so the first maximum wins ties
    for ids in itertools.product(range(prob.L), repeat=prob.T):
        s = prob.sequence_score(ids)
        if best is None or s > best:
            best, best_ids = s, ids
    return [prob.tags[i] for i in best_ids]


def score_sequence(lattices, tags: Sequence[str]) -> float:
    prob = _Problem(lattices)
    if len(tags) != prob.T:
        raise DecodeError(f"{len(tags)} tags for a sentence of length {prob.T}")
    index = {t: i for i, t in enumerate(prob.tags)}
    try:
        ids = [index[t] for t in tags]
    except KeyError as exc:
        raise DecodeError(f"unknown tag {exc.args[0]!r}") from None
    return prob.sequence_score(ids)


def search_space(lattices, prune=5) -> list[int]:
    """Number of n-gram candidates the dynamic program scores at each position."""
    prob = _Problem(lattices)
    cands = prob.candidates(_prune_width(prune))
    out = []
    for t in range(prob.T):
        size = 1
        for j in range(t - prob.n + 1, t + 1):
            size *= len(cands[j]) if j >= 0 else 1
        out.append(size)
    return out


def format_trace(trace, tags: Sequence[str]) -> str:
    def name(state):
        return "|".join("<START>" if i == _START else tags[i] for i in state) or "-"
    return "".join(f"{t}\t{name(s)}\t{score!r}\t{name(prev)}\n" for t, s, score, prev in trace)
