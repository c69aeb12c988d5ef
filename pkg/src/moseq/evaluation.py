"""Chunk F1, error taxonomy, entity-length buckets and decode timing."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

CATEGORIES = ("boundary-1", "boundary-2", "boundary-3", "type", "no-common-words")


class EvalError(ValueError):
    pass


class ChunkSpan(NamedTuple):
    start: int
    end: int      # inclusive
    type: str

    def __len__(self):
        return self.end - self.start + 1


def _parse(tag: str) -> tuple[str, str]:
    if tag == "O":
        return "O", ""
    prefix, sep, kind = tag.partition("-")
    if not sep or not kind or prefix not in ("B", "I"):
        raise EvalError(f"unparseable BIO tag {tag!r}")
    return prefix, kind


def extract_chunks(tags: Sequence[str]) -> list[ChunkSpan]:
    """Maximal BIO spans. An ``I-X`` that cannot continue an open ``X``
    chunk opens a new one, as conlleval does."""
    chunks = []
    start, kind = None, ""
    for i, tag in enumerate(tags):
        prefix, k = _parse(tag)
        if start is not None and (prefix != "I" or k != kind):
            chunks.append(ChunkSpan(start, i - 1, kind))
            start = None
        if prefix != "O" and start is None:
            start, kind = i, k
    if start is not None:
        chunks.append(ChunkSpan(start, len(tags) - 1, kind))
    return chunks


def chunks_to_bio(chunks: Sequence[ChunkSpan], length: int) -> list[str]:
    tags = ["O"] * length
    for c in chunks:
        tags[c.start] = f"B-{c.type}"
        for i in range(c.start + 1, c.end + 1):
            tags[i] = f"I-{c.type}"
    return tags


def _ratio(a, b):
    return a / b if b else 0.0


def chunk_counts(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> tuple[int, int, int]:
    """(correct, gold chunks, predicted chunks) over aligned sentences."""
    if len(gold) != len(pred):
        raise EvalError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    correct = n_gold = n_pred = 0
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise EvalError(f"sentence {i}: {len(g)} gold tags vs {len(p)} predicted")
        gc, pc = set(extract_chunks(g)), set(extract_chunks(p))
        correct += len(gc & pc)
        n_gold += len(gc)
        n_pred += len(pc)
    return correct, n_gold, n_pred


def f1(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> tuple[float, float, float]:
    """Chunk precision, recall and F1 as percentages."""
    correct, n_gold, n_pred = chunk_counts(gold, pred)
    p = 100.0 * _ratio(correct, n_pred)
    r = 100.0 * _ratio(correct, n_gold)
    return p, r, _ratio(2 * p * r, p + r)


# ---------------------------------------------------------------------------
# error analysis

@dataclass
class ErrorReport:
    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0))
    threshold: int = 2
    # gold entities per bucket and how many of them were missed
    short_total: int = 0
    short_errors: int = 0
    long_total: int = 0
    long_errors: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def boundary(self) -> int:
        return self.counts["boundary-1"] + self.counts["boundary-2"] + self.counts["boundary-3"]

    @property
    def bucket_rates(self) -> tuple[float, float]:
        return _ratio(self.short_errors, self.short_total), _ratio(self.long_errors, self.long_total)

    def __add__(self, other: "ErrorReport") -> "ErrorReport":
        if self.threshold != other.threshold:
            raise ValueError("cannot merge reports with different length thresholds")
        return ErrorReport({k: self.counts[k] + other.counts[k] for k in CATEGORIES}, self.threshold,
                           self.short_total + other.short_total, self.short_errors + other.short_errors,
                           self.long_total + other.long_total, self.long_errors + other.long_errors)

    def rows(self) -> list[tuple[str, object]]:
        short, long_ = self.bucket_rates
        out = [(k, self.counts[k]) for k in CATEGORIES]
        out += [("total", self.total), ("boundary", self.boundary),
                ("length_threshold", self.threshold),
                ("short_entities", self.short_total), ("short_error_rate", round(short, 6)),
                ("long_entities", self.long_total), ("long_error_rate", round(long_, 6))]
        return out


def _category(p: ChunkSpan, gold: Sequence[ChunkSpan]) -> str:
    found = set()
    for g in gold:
        if g.end < p.start or p.end < g.start:
            continue
        if (g.start, g.end) == (p.start, p.end):
            found.add("type")
        elif g.start <= p.start and p.end <= g.end:
            found.add("boundary-1")
        elif p.start <= g.start and g.end <= p.end:
            found.add("boundary-2")
        else:
            found.add("boundary-3")
    for cat in ("type", "boundary-1", "boundary-2", "boundary-3"):
        if cat in found:
            return cat
    return "no-common-words"


def classify_errors(gold: Sequence[ChunkSpan], pred: Sequence[ChunkSpan], threshold: int = 2) -> ErrorReport:
    """Assign every wrong predicted chunk of one sentence to one category.

    Precedence when several relations hold: type, boundary-1, boundary-2,
    boundary-3; a prediction sharing no token with any gold chunk is
    no-common-words.
    """
    report = ErrorReport(threshold=threshold)
    gold_set = set(gold)
    for p in pred:
        if p not in gold_set:
            report.counts[_category(p, gold)] += 1
    short, long_ = bucket_counts(gold, pred, threshold)
    report.short_total, report.short_errors = short
    report.long_total, report.long_errors = long_
    return report


def bucket_counts(gold: Sequence[ChunkSpan], pred: Sequence[ChunkSpan], threshold: int = 2):
    """``((n_short, missed_short), (n_long, missed_long))``; long means more
    than ``threshold`` tokens."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    found = set(pred)
    short, long_ = [0, 0], [0, 0]
    for g in gold:
        bucket = short if len(g) <= threshold else long_
        bucket[0] += 1
        bucket[1] += g not in found
    return tuple(short), tuple(long_)


def length_buckets(gold: Sequence[ChunkSpan], pred: Sequence[ChunkSpan], threshold: int = 2) -> tuple[float, float]:
    """Share of gold entities not predicted exactly, for short and long
    entities (0 for an empty bucket)."""
    (ns, es), (nl, el) = bucket_counts(gold, pred, threshold)
    return _ratio(es, ns), _ratio(el, nl)


def analyze(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]], threshold: int = 2) -> ErrorReport:
    if len(gold) != len(pred):
        raise EvalError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    report = ErrorReport(threshold=threshold)
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise EvalError(f"sentence {i}: {len(g)} gold tags vs {len(p)} predicted")
        report = report + classify_errors(extract_chunks(g), extract_chunks(p), threshold)
    return report


# ---------------------------------------------------------------------------
# timing

@dataclass
class TimingResult:
    variant: str
    seconds: float
    f1: float
    sentences: int = 0


def _variant(width) -> str:
    return "unpruned" if width is None else f"width={width}"


def bench_decode(bundle, sentences, widths: Sequence[int | None] = (None, 5),
                 repeats: int = 1) -> list[TimingResult]:
    """Decode ``sentences`` once per pruning width (``None`` = no pruning).

    Lattices are computed once up front, so the timings cover the dynamic
    program only. The best of ``repeats`` runs is reported.
    """
    from .decoder import multi_order_decode, unigram_tags

    if not sentences:
        raise ValueError("bench_decode needs at least one sentence")
    lattices = [bundle.lattices(s) for s in sentences]
    gold = [s.gold_tags for s in sentences]
    n_tags = len(unigram_tags(lattices[0]))
    results, outputs = [], {}
    for width in widths:
        best = float("inf")
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            pred = [multi_order_decode(lat, prune=width) for lat in lattices]
            best = min(best, time.perf_counter() - t0)
        outputs[width] = pred
        results.append(TimingResult(_variant(width), max(best, 1e-9), f1(gold, pred)[2], len(sentences)))
    if None in outputs:
        for width, pred in outputs.items():
            if width is not None and width >= n_tags and pred != outputs[None]:
                raise AssertionError(f"full-width pruning (width={width}) changed the output")
    return results


# ---------------------------------------------------------------------------
# report output

def key_value_text(rows: Sequence[tuple[str, object]]) -> str:
    return "".join(f"{k}: {v}\n" for k, v in rows)


def csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
