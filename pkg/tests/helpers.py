"""Random decoding instances shared by the decoder and acceptance tests."""

import itertools

import numpy as np

from moseq.labelspace import START, LabelVocab, join
from moseq.nn import log_softmax
from moseq.tagger import ScoreLattice

ORDER_SETS = ([1], [1, 2], [1, 2, 3])


def possible_ngrams(tags, order):
    """Every START-padded n-gram shape that could occur in training data."""
    out = []
    for pad in range(order):
        for body in itertools.product(tags, repeat=order - pad):
            out.append((START,) * pad + body)
    return out


def random_lattices(rng, T, n_tags, orders, keep=0.6):
    """Lattices over random label vocabularies with missing n-grams."""
    tags = [f"T{i}" for i in range(n_tags)]
    tags = [tags[i] for i in rng.permutation(n_tags)]
    lattices = []
    for order in orders:
        if order == 1:
            labels = list(tags)
        else:
            cands = possible_ngrams(tags, order)
            labels = [join(c) for c in cands if rng.random() < keep] or [join(cands[0])]
            labels = [labels[i] for i in rng.permutation(len(labels))]
        vocab = LabelVocab(order, labels)
        scores = log_softmax(rng.normal(scale=2.0, size=(T, len(vocab))))
        lattices.append(ScoreLattice(order, vocab, scores))
    return lattices


def instances(seed, count):
    rng = np.random.default_rng(seed)
    for i in range(count):
        T = int(rng.integers(1, 7))
        n_tags = int(rng.integers(1, 5))
        orders = ORDER_SETS[i % len(ORDER_SETS)]
        yield random_lattices(rng, T, n_tags, orders)


def gradient_errors(params, inp, gold, h=1e-5, floor=1e-6):
    """Central finite differences against the analytic gradient.

    Returns ``{tensor: (norm_error, worst_elementwise_error)}`` where
    norm_error is ||a - n|| / max(||a||, ||n||) over the tensor and the
    elementwise error divides by max(|a|, |n|, floor).
    """
    from moseq import nn

    _, grads = nn.loss_and_gradients(params, inp, gold)
    out = {}
    for name, arr in params.named().items():
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = nn.loss_and_gradients(params, inp, gold)[0]
            arr[idx] = old - h
            down = nn.loss_and_gradients(params, inp, gold)[0]
            arr[idx] = old
            num[idx] = (up - down) / (2 * h)
        ana = grads.named()[name]
        denom = max(np.linalg.norm(ana), np.linalg.norm(num))
        norm_err = np.linalg.norm(ana - num) / denom if denom > 0 else 0.0
        elem = np.abs(ana - num) / np.maximum(np.maximum(np.abs(ana), np.abs(num)), floor)
        out[name] = (float(norm_err), float(elem.max()))
    return out
