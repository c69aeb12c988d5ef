"""Order-n label vocabularies and unigram <-> n-gram tag transforms."""

from __future__ import annotations

from typing import Iterable, Sequence

SEP = "\x1f"
START = "<START>"


class LabelError(ValueError):
    pass


def join(components: Iterable[str]) -> str:
    return SEP.join(components)


def split(label: str, order: int | None = None) -> tuple[str, ...]:
    parts = tuple(label.split(SEP))
    if order is not None and len(parts) != order:
        raise LabelError(f"label {label!r} has {len(parts)} components, expected {order}")
    if any(not p for p in parts):
        raise LabelError(f"malformed label {label!r}")
    return parts


def last_component(label: str) -> str:
    return split(label)[-1]


def to_ngram(tags: Sequence[str], order: int) -> list[str]:
    """``labels[t] = (y[t-order+1], ..., y[t])`` with START padding."""
    if order < 1:
        raise LabelError("order must be >= 1")
    padded = [START] * (order - 1) + list(tags)
    return [join(padded[t:t + order]) for t in range(len(tags))]


def _check_tag(tag: str):
    if SEP in tag:
        raise LabelError(f"tag {tag!r} contains the reserved separator")
    if tag == START or not tag:
        raise LabelError(f"tag {tag!r} is reserved or empty")


class LabelVocab:
    """Bijection between order-``order`` labels and dense ids.

    Ids follow first occurrence in the training data.
    """

    def __init__(self, order: int, labels: Sequence[str] = ()):
        if order < 1:
            raise LabelError("order must be >= 1")
        self.order = order
        self.itos: list[str] = []
        self.stoi: dict[str, int] = {}
        self._index_cache: dict = {}
        for label in labels:
            self.add(label)

    def add(self, label: str) -> int:
        if label not in self.stoi:
            split(label, self.order)
            self.stoi[label] = len(self.itos)
            self.itos.append(label)
            self._index_cache.clear()
        return self.stoi[label]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, label):
        return label in self.stoi

    def __eq__(self, other):
        return isinstance(other, LabelVocab) and self.order == other.order and self.itos == other.itos

    def __repr__(self):
        return f"LabelVocab(order={self.order}, size={len(self)})"

    def encode(self, labels: Sequence[str]) -> list[int]:
        try:
            return [self.stoi[lab] for lab in labels]
        except KeyError as exc:
            raise LabelError(f"label {exc.args[0]!r} not in order-{self.order} vocab") from None

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.itos[i] for i in ids]

    def unigrams(self) -> list[str]:
        """Distinct non-START components, first-occurrence order."""
        seen: dict[str, None] = {}
        for label in self.itos:
            for comp in split(label):
                if comp != START:
                    seen.setdefault(comp, None)
        return list(seen)

    def ngram_index(self, unigrams: Sequence[str]) -> dict[tuple[int, ...], int]:
        """Map tuples of unigram ids (START = -1) to label ids."""
        key = tuple(unigrams)
        table = self._index_cache.get(key)
        if table is None:
            uid = {u: i for i, u in enumerate(unigrams)}
            uid[START] = -1
            table = {}
            for lid, label in enumerate(self.itos):
                comps = split(label)
                if all(c in uid for c in comps):
                    table[tuple(uid[c] for c in comps)] = lid
            self._index_cache[key] = table
        return table

    def dumps(self) -> str:
        return "".join(label + "\n" for label in self.itos)

    @classmethod
    def loads(cls, order: int, text: str) -> "LabelVocab":
        return cls(order, [line for line in text.split("\n") if line])


def build_label_vocab(tag_sequences: Iterable[Sequence[str]], order: int) -> LabelVocab:
    """Every order-``order`` label observed in the training tags.

    Accepts tag sequences or objects with a ``gold_tags`` attribute.
    """
    if order < 1:
        raise LabelError("order must be >= 1")
    vocab = LabelVocab(order)
    for tags in tag_sequences:
        tags = getattr(tags, "gold_tags", tags)
        for tag in tags:
            _check_tag(tag)
        for label in to_ngram(tags, order):
            vocab.add(label)
    return vocab
