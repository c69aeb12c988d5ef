"""Single-order taggers, score lattices, greedy decoding and the bundle
file format."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import nn
from .corpus import Sentence, TokenVocab, build_token_vocab, extract_features
from .evaluation import f1
from .labelspace import LabelVocab, build_label_vocab, last_component, to_ngram

log = logging.getLogger(__name__)

MAGIC = b"MOSEQBND"
FORMAT_VERSION = 1
_DIGEST = 32


class BundleError(Exception):
    """Unreadable bundle file."""


class BundleVersionError(BundleError):
    pass


class BundleChecksumError(BundleError):
    pass


@dataclass
class Hyperparams:
    d_emb: int = 50
    d_hidden: int = 200
    dropout: float = 0.5
    lr: float = 1e-3
    epochs: int = 30
    min_count: int = 1
    init_scale: float = 0.08


@dataclass
class SingleOrderModel:
    order: int
    labels: LabelVocab
    params: nn.TaggerParams
    token_vocab: TokenVocab = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.params.n_labels != len(self.labels):
            raise ValueError("output width does not match label vocabulary")


@dataclass
class ModelBundle:
    token_vocab: TokenVocab
    models: list[SingleOrderModel]

    def __post_init__(self):
        if not self.models:
            raise ValueError("a bundle needs at least one model")
        orders = self.orders
        if any(a >= b for a, b in zip(orders, orders[1:])):
            raise ValueError(f"orders must be strictly increasing, got {orders}")
        for m in self.models:
            m.token_vocab = self.token_vocab

    @property
    def orders(self) -> list[int]:
        return [m.order for m in self.models]

    @property
    def max_order(self) -> int:
        return self.models[-1].order

    def model(self, order: int) -> SingleOrderModel:
        for m in self.models:
            if m.order == order:
                return m
        raise KeyError(f"no order-{order} model in bundle")

    def lattices(self, sentence: Sentence) -> list["ScoreLattice"]:
        inp = sentence_inputs(sentence, self.token_vocab)
        return [ScoreLattice(m.order, m.labels, nn.log_probs(m.params, inp)) for m in self.models]


@dataclass
class ScoreLattice:
    order: int
    labels: LabelVocab
    scores: np.ndarray      # (T, |labels|) log-probabilities

    def __len__(self):
        return self.scores.shape[0]


def sentence_inputs(sentence: Sentence, vocab: TokenVocab) -> nn.Inputs:
    words = sentence.words
    return nn.Inputs.build([vocab.lookup(w) for w in words],
                           [extract_features(words, i, vocab) for i in range(len(words))])


def dataset_hash(sentences: Sequence[Sentence]) -> str:
    h = hashlib.sha256()
    for s in sentences:
        for w, t in zip(s.words, s.gold_tags):
            h.update(f"{w}\t{t}\n".encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


# ---------------------------------------------------------------------------
# training / prediction

def make_lattice(model: SingleOrderModel, sentence: Sentence) -> ScoreLattice:
    inp = sentence_inputs(sentence, model.token_vocab)
    return ScoreLattice(model.order, model.labels, nn.log_probs(model.params, inp))


def greedy_tags(lattice: ScoreLattice) -> list[str]:
    # np.argmax returns the first maximum, i.e. the lowest label id
    best = lattice.scores.argmax(axis=1)
    return [last_component(lattice.labels.itos[i]) for i in best]


def greedy_decode(model: SingleOrderModel, sentence: Sentence) -> list[str]:
    """Per-position argmax label projected to its last tag.

    Overlap between neighbouring n-gram predictions is not enforced.
    """
    return greedy_tags(make_lattice(model, sentence))


def train_single_order(train: Sequence[Sentence], dev: Sequence[Sentence] | None, order: int,
                       hp: Hyperparams | None = None, seed: int = 0,
                       token_vocab: TokenVocab | None = None) -> SingleOrderModel:
    """Fit one order-``order`` tagger and keep the epoch with best dev F1."""
    if not train:
        raise ValueError("empty training set")
    if order < 1:
        raise ValueError("order must be >= 1")
    hp = hp or Hyperparams()
    vocab = token_vocab or build_token_vocab(train, hp.min_count)
    labels = build_label_vocab(train, order)
    init_rng, shuffle_rng, drop_rng = (np.random.default_rng(s)
                                       for s in np.random.SeedSequence([seed, order]).spawn(3))
    params = nn.TaggerParams.init(len(vocab), vocab.n_features, len(labels), hp.d_emb,
                                  hp.d_hidden, init_rng, hp.init_scale)
    state = nn.AdamState.for_params(params, lr=hp.lr)
    inputs = [sentence_inputs(s, vocab) for s in train]
    golds = [labels.encode(to_ngram(s.gold_tags, order)) for s in train]
    dev = dev if dev else train
    model = SingleOrderModel(order, labels, params, vocab)

    best_f1, best_params, best_epoch, history = -1.0, params.copy(), 0, []
    for epoch in range(1, hp.epochs + 1):
        total = 0.0
        for i in shuffle_rng.permutation(len(train)):
            loss, grads = nn.loss_and_gradients(params, inputs[i], golds[i], drop_rng, hp.dropout)
            nn.adam_step(params, grads, state)
            total += loss
        dev_f1 = f1([s.gold_tags for s in dev], [greedy_decode(model, s) for s in dev])[2]
        history.append(round(dev_f1, 6))
        log.info("order %d epoch %d loss %.4f dev F1 %.2f", order, epoch, total / len(train), dev_f1)
        if dev_f1 > best_f1:
            best_f1, best_params, best_epoch = dev_f1, params.copy(), epoch
    model.params = best_params
    model.meta = {"seed": seed, "epochs": hp.epochs, "best_epoch": best_epoch,
                  "dev_f1": history, "dataset_hash": dataset_hash(train),
                  "hyperparams": asdict(hp)}
    return model


def _train_job(args):
    return train_single_order(*args)


def train_bundle(train: Sequence[Sentence], dev: Sequence[Sentence] | None, orders: Sequence[int],
                 hp: Hyperparams | None = None, seed: int = 0, parallel: bool = False) -> ModelBundle:
    hp = hp or Hyperparams()
    orders = list(orders)
    if not orders or any(a >= b for a, b in zip(orders, orders[1:])) or orders[0] < 1:
        raise ValueError(f"orders must be strictly increasing positive integers, got {orders}")
    vocab = build_token_vocab(train, hp.min_count)
    jobs = [(train, dev, o, hp, seed, vocab) for o in orders]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            models = list(pool.map(_train_job, jobs))
    else:
        models = [_train_job(j) for j in jobs]
    return ModelBundle(vocab, models)


# ---------------------------------------------------------------------------
# bundle file
#
# layout: MAGIC | u32 version | u64 header length | JSON header |
#         float64 LE tensors | sha256 of everything before it

def bundle_bytes(bundle: ModelBundle) -> bytes:
    header = {"token_vocab": bundle.token_vocab.to_dict(), "models": []}
    blobs = []
    for m in bundle.models:
        tensors = []
        for name, arr in m.params.named().items():
            tensors.append([name, list(arr.shape)])
            blobs.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        header["models"].append({"order": m.order, "labels": m.labels.itos,
                                 "meta": m.meta, "tensors": tensors})
    head = json.dumps(header, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(head)) + head + b"".join(blobs)
    return body + hashlib.sha256(body).digest()


def save_bundle(bundle: ModelBundle, path) -> None:
    data = bundle_bytes(bundle)
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(prefix=".bundle-", dir=os.path.dirname(os.path.abspath(path)))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_bundle(data: bytes) -> ModelBundle:
    fixed = len(MAGIC) + 12
    if len(data) < len(MAGIC) + 4:
        raise BundleVersionError("file too short to carry a format version")
    if data[:len(MAGIC)] != MAGIC:
        raise BundleError("not a bundle file (bad magic bytes)")
    version, = struct.unpack_from("<I", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise BundleVersionError(f"unsupported bundle format version {version} (expected {FORMAT_VERSION})")
    if len(data) < fixed + _DIGEST:
        raise BundleError("truncated bundle file")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise BundleChecksumError("bundle checksum mismatch (file corrupt or truncated)")
    head_len, = struct.unpack_from("<Q", data, len(MAGIC) + 4)
    try:
        header = json.loads(body[fixed:fixed + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"unreadable bundle header: {exc}") from None
    vocab = TokenVocab.from_dict(header["token_vocab"])
    offset = fixed + head_len
    models = []
    for spec in header["models"]:
        arrays = {}
        for name, shape in spec["tensors"]:
            n = int(np.prod(shape)) * 8
            if offset + n > len(body):
                raise BundleError("truncated tensor data")
            arrays[name] = np.frombuffer(body, dtype="<f8", count=n // 8, offset=offset).astype(np.float64).reshape(shape)
            offset += n
        labels = LabelVocab(spec["order"], spec["labels"])
        models.append(SingleOrderModel(spec["order"], labels, nn.TaggerParams(**arrays), vocab, spec["meta"]))
    if offset != len(body):
        raise BundleError("trailing bytes after tensor data")
    return ModelBundle(vocab, models)


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        return parse_bundle(fh.read())
