"""CoNLL column ingestion, tag-scheme normalization, token vocabulary and
sparse spelling/context features."""

from __future__ import annotations

import io
import json
import string
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Iterable, Sequence

UNK = "<unk>"
SCHEMES = ("IOB1", "BIO", "IOBES")

_PUNCT = frozenset(string.punctuation)
_BOS = ("<s-2>", "<s-1>")
_EOS = ("</s+1>", "</s+2>")


class CorpusError(ValueError):
    """Malformed input data."""


@dataclass(frozen=True)
class Token:
    surface: str
    feature_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.surface:
            raise CorpusError("token surface must be non-empty")
        ids = self.feature_ids
        if any(a >= b for a, b in zip(ids, ids[1:])):
            raise CorpusError("feature_ids must be strictly ascending")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    gold_tags: tuple[str, ...]
    # original whitespace-split columns, one tuple per line
    rows: tuple[tuple[str, ...], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.tokens) != len(self.gold_tags):
            raise CorpusError(
                f"{len(self.tokens)} tokens but {len(self.gold_tags)} tags")
        if not self.tokens:
            raise CorpusError("sentence must contain at least one token")

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [tok.surface for tok in self.tokens]

    def with_tags(self, tags: Sequence[str]) -> "Sentence":
        return replace(self, gold_tags=tuple(tags))


def _text_lines(stream) -> Iterable[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for raw in stream:
        if isinstance(raw, (bytes, bytearray)):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def parse_conll(stream: BinaryIO | bytes | str, token_column: int = 0,
                tag_column: int | None = -1) -> list[Sentence]:
    """Read blank-line separated sentences of whitespace-separated columns.

    ``tag_column=None`` reads untagged text; every gold tag is then ``O``.
    Negative column indices count from the end of the line, so ``-1`` is the
    last column. Lines starting with ``-DOCSTART-`` are treated as
    boundaries.
    """
    sentences: list[Sentence] = []
    rows: list[tuple[str, ...]] = []
    need = max(c if c >= 0 else -c - 1 for c in (token_column, tag_column or 0)) + 1

    def flush():
        if rows:
            tokens = tuple(Token(r[token_column]) for r in rows)
            if tag_column is None:
                tags = ("O",) * len(rows)
            else:
                tags = tuple(r[tag_column] for r in rows)
            sentences.append(Sentence(tokens, tags, tuple(rows)))
            rows.clear()

    for lineno, line in enumerate(_text_lines(stream), start=1):
        cols = tuple(line.split())
        if not cols:
            flush()
            continue
        if cols[0] == "-DOCSTART-":
            flush()
            continue
        if len(cols) < need:
            raise CorpusError(
                f"line {lineno}: expected at least {need} columns, got {len(cols)}")
        rows.append(cols)
    flush()
    return sentences


def read_conll(path, token_column: int = 0, tag_column: int | None = -1) -> list[Sentence]:
    with open(path, "rb") as fh:
        return parse_conll(fh, token_column, tag_column)


def format_conll(sentences: Iterable[Sentence], extra: Iterable[Sequence[str]] | None = None) -> str:
    """Render sentences back to column text.

    Sentences that kept their original rows are written verbatim; otherwise
    a two-column ``token tag`` layout is used. ``extra`` appends one more
    column per sentence (e.g. predicted tags).
    """
    out = []
    extras = iter(extra) if extra is not None else None
    for sent in sentences:
        add = list(next(extras)) if extras is not None else None
        rows = sent.rows or tuple((tok.surface, tag) for tok, tag in zip(sent.tokens, sent.gold_tags))
        for i, row in enumerate(rows):
            cols = list(row)
            if add is not None:
                cols.append(add[i])
            out.append(" ".join(cols))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# tag schemes

def split_tag(tag: str) -> tuple[str, str]:
    """``B-NP`` -> ``("B", "NP")``; ``O`` -> ``("O", "")``."""
    if tag == "O":
        return "O", ""
    prefix, sep, kind = tag.partition("-")
    if not sep or not kind or len(prefix) != 1:
        raise CorpusError(f"unparseable tag {tag!r}")
    return prefix, kind


def normalize_to_bio(sentences: Sequence[Sentence], scheme: str) -> list[Sentence]:
    if scheme not in SCHEMES:
        raise CorpusError(f"unknown tag scheme {scheme!r}; expected one of {SCHEMES}")
    out = []
    for s_idx, sent in enumerate(sentences):
        try:
            tags = convert_tags(sent.gold_tags, scheme)
        except CorpusError as exc:
            raise CorpusError(f"sentence {s_idx}: {exc}") from None
        out.append(sent.with_tags(tags))
    return out


def convert_tags(tags: Sequence[str], scheme: str) -> list[str]:
    allowed = {"IOB1": "IOB", "BIO": "IOB", "IOBES": "IOBES"}[scheme]
    out = []
    prev_prefix, prev_kind = "O", ""
    for pos, tag in enumerate(tags):
        try:
            prefix, kind = split_tag(tag)
        except CorpusError:
            raise CorpusError(f"position {pos}: unparseable tag {tag!r}") from None
        if prefix not in allowed:
            raise CorpusError(f"position {pos}: tag {tag!r} is not valid {scheme}")
        if scheme == "IOB1" and prefix == "I":
            inside = prev_prefix in ("B", "I") and prev_kind == kind
            out.append(tag if inside else f"B-{kind}")
        elif scheme == "IOBES" and prefix in ("S", "E"):
            out.append(f"{'B' if prefix == 'S' else 'I'}-{kind}")
        else:
            out.append(tag)
        prev_prefix, prev_kind = prefix, kind
    return out


# ---------------------------------------------------------------------------
# vocabulary

@dataclass
class TokenVocab:
    itos: list[str]
    features: dict[str, int]
    unk_id: int = 0

    def __post_init__(self):
        self.stoi = {w: i for i, w in enumerate(self.itos)}

    def __len__(self):
        return len(self.itos)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def lookup(self, word: str) -> int:
        return self.stoi.get(word, self.unk_id)

    def to_dict(self) -> dict:
        return {"itos": self.itos, "features": sorted(self.features, key=self.features.get)}

    @classmethod
    def from_dict(cls, d: dict) -> "TokenVocab":
        return cls(list(d["itos"]), {f: i for i, f in enumerate(d["features"])})

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def build_token_vocab(sentences: Sequence[Sentence], min_count: int = 1) -> TokenVocab:
    """Tokens seen at least ``min_count`` times get ids in first-occurrence
    order after the reserved unknown id 0. Every feature string produced on
    the corpus is registered, also in first-occurrence order."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(w for s in sentences for w in s.words)
    itos = [UNK]
    seen = {UNK}
    features: dict[str, int] = {}
    for sent in sentences:
        for w in sent.words:
            if w not in seen and counts[w] >= min_count:
                seen.add(w)
                itos.append(w)
        words = sent.words
        for pos in range(len(words)):
            for name in feature_strings(words, pos):
                if name not in features:
                    features[name] = len(features)
    return TokenVocab(itos, features)


# ---------------------------------------------------------------------------
# features

def feature_strings(words: Sequence[str], position: int) -> list[str]:
    """Spelling features of the word at ``position`` plus lowercased word
    identities in a +-2 window (clipped with sentinel words)."""
    n = len(words)
    if not 0 <= position < n:
        raise IndexError(f"position {position} out of range for length {n}")
    w = words[position]
    feats = []
    if w[0].isupper():
        feats.append("cap:init")
    if any(c.isalpha() for c in w) and w.upper() == w and not any(c.islower() for c in w):
        feats.append("cap:all")
    if w.isdigit():
        feats.append("digit:all")
    if any(c.isdigit() for c in w):
        feats.append("digit:has")
    if "-" in w:
        feats.append("hyphen")
    if any(c in _PUNCT for c in w):
        feats.append("punct")
    for k in (1, 2, 3):
        if len(w) >= k:
            feats.append(f"pre{k}={w[:k]}")
            feats.append(f"suf{k}={w[-k:]}")
    for off in (-2, -1, 0, 1, 2):
        j = position + off
        if j < 0:
            ctx = _BOS[j + 2] if j >= -2 else _BOS[0]
        elif j >= n:
            ctx = _EOS[j - n] if j - n < 2 else _EOS[1]
        else:
            ctx = words[j].lower()
        feats.append(f"w[{off:+d}]={ctx}")
    return feats


def extract_features(sentence: Sentence | Sequence[str], position: int,
                     vocab: TokenVocab) -> tuple[int, ...]:
    words = sentence.words if isinstance(sentence, Sentence) else sentence
    ids = {vocab.features[f] for f in feature_strings(words, position) if f in vocab.features}
    return tuple(sorted(ids))


def featurize(sentences: Iterable[Sentence], vocab: TokenVocab) -> list[Sentence]:
    """Attach feature ids to every token."""
    out = []
    for sent in sentences:
        words = sent.words
        tokens = tuple(Token(w, extract_features(words, i, vocab)) for i, w in enumerate(words))
        out.append(replace(sent, tokens=tokens))
    return out
