"""Synthetic chunking corpus drawn from a second-order tag process.

Each next tag is sampled from a distribution conditioned on the previous
two tags (START-padded). Every chunk type owns a small word list shared by
its B- and I- tags, so the boundary inside a run of same-type words is only
recoverable from tag context; with probability ``noise`` the word is
replaced by one from a pool shared by all tags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Sentence, Token
from .labelspace import START


@dataclass
class SyntheticSpec:
    n_types: int = 5
    words_per_type: int = 12
    shared_words: int = 30
    noise: float = 0.3
    min_len: int = 8
    max_len: int = 20
    concentration: float = 0.3


def tag_set(n_types: int) -> list[str]:
    tags = ["O"]
    for k in range(n_types):
        tags += [f"B-C{k}", f"I-C{k}"]
    return tags


def _allowed(prev: str, nxt: str) -> bool:
    if nxt.startswith("I-"):
        return prev != START and prev != "O" and prev[2:] == nxt[2:]
    return True


class SecondOrderProcess:
    def __init__(self, spec: SyntheticSpec | None = None, seed: int = 0):
        self.spec = spec or SyntheticSpec()
        rng = np.random.default_rng(seed)
        self.tags = tag_set(self.spec.n_types)
        context = [START] + self.tags
        self.transition: dict[tuple[str, str], np.ndarray] = {}
        for a in context:
            for b in context:
                if b == START and a != START:
                    continue
                if not _allowed(a, b) and b != START:
                    continue
                mask = np.array([_allowed(b, c) for c in self.tags], dtype=float)
                p = rng.dirichlet(np.full(len(self.tags), self.spec.concentration)) * mask
                if p.sum() == 0:
                    p = mask
                self.transition[(a, b)] = p / p.sum()
        self.lexicon = {}
        for k in range(self.spec.n_types):
            self.lexicon[f"C{k}"] = [f"c{k}w{i}" for i in range(self.spec.words_per_type)]
        self.lexicon["O"] = [f"ow{i}" for i in range(self.spec.words_per_type)]
        self.shared = [f"x{i}" for i in range(self.spec.shared_words)]

    def sample_tags(self, rng: np.random.Generator, length: int) -> list[str]:
        a, b = START, START
        out = []
        for _ in range(length):
            c = self.tags[rng.choice(len(self.tags), p=self.transition[(a, b)])]
            out.append(c)
            a, b = b, c
        return out

    def emit(self, rng: np.random.Generator, tag: str) -> str:
        if rng.random() < self.spec.noise:
            return self.shared[rng.integers(len(self.shared))]
        words = self.lexicon["O" if tag == "O" else tag[2:]]
        return words[rng.integers(len(words))]

    def sentences(self, count: int, rng: np.random.Generator) -> list[Sentence]:
        out = []
        for _ in range(count):
            length = int(rng.integers(self.spec.min_len, self.spec.max_len + 1))
            tags = self.sample_tags(rng, length)
            words = [self.emit(rng, t) for t in tags]
            out.append(Sentence(tuple(Token(w) for w in words), tuple(tags)))
        return out


def make_splits(n_train: int = 2000, n_dev: int = 500, n_test: int = 500, seed: int = 0,
                spec: SyntheticSpec | None = None):
    """Train/dev/test lists from one process; deterministic in ``seed``."""
    proc = SecondOrderProcess(spec, seed)
    rng = np.random.default_rng(seed + 1)
    return proc.sentences(n_train, rng), proc.sentences(n_dev, rng), proc.sentences(n_test, rng)
