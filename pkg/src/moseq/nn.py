"""Numpy BiLSTM tagger core with hand-written backpropagation through time.

Everything is float64. Gate layout inside the stacked LSTM weights is
``[input, forget, output, candidate]``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

DTYPE = np.float64


class Inputs(NamedTuple):
    """Index form of one sentence."""
    token_ids: np.ndarray      # (T,)
    feat_rows: np.ndarray      # flat feature ids
    feat_pos: np.ndarray       # token position of each entry in feat_rows

    @classmethod
    def build(cls, token_ids: Sequence[int], feature_ids: Sequence[Sequence[int]] = ()) -> "Inputs":
        rows = [f for fs in feature_ids for f in fs]
        pos = [t for t, fs in enumerate(feature_ids) for _ in fs]
        return cls(np.asarray(token_ids, dtype=np.int64),
                   np.asarray(rows, dtype=np.int64),
                   np.asarray(pos, dtype=np.int64))

    def __len__(self):
        return len(self.token_ids)


@dataclass
class TaggerParams:
    emb: np.ndarray
    feat_emb: np.ndarray
    fw_Wx: np.ndarray
    fw_Wh: np.ndarray
    fw_b: np.ndarray
    bw_Wx: np.ndarray
    bw_Wh: np.ndarray
    bw_b: np.ndarray
    out_W: np.ndarray
    out_b: np.ndarray

    @classmethod
    def init(cls, n_tokens: int, n_features: int, n_labels: int, d_emb: int = 50,
             d_hidden: int = 200, rng: np.random.Generator | None = None,
             scale: float = 0.08) -> "TaggerParams":
        rng = rng if rng is not None else np.random.default_rng(0)
        d_in, h = 2 * d_emb, d_hidden

        def u(*shape):
            return rng.uniform(-scale, scale, size=shape).astype(DTYPE)

        def lstm_bias():
            b = u(4 * h)
            b[h:2 * h] = 1.0
            return b

        return cls(
            emb=u(n_tokens, d_emb), feat_emb=u(n_features, d_emb),
            fw_Wx=u(4 * h, d_in), fw_Wh=u(4 * h, h), fw_b=lstm_bias(),
            bw_Wx=u(4 * h, d_in), bw_Wh=u(4 * h, h), bw_b=lstm_bias(),
            out_W=u(n_labels, 2 * h), out_b=u(n_labels),
        )

    @classmethod
    def zeros_like(cls, other: "TaggerParams") -> "TaggerParams":
        return cls(**{k: np.zeros_like(v) for k, v in other.named().items()})

    def named(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "TaggerParams":
        return TaggerParams(**{k: v.copy() for k, v in self.named().items()})

    @property
    def d_emb(self) -> int:
        return self.emb.shape[1]

    @property
    def d_hidden(self) -> int:
        return self.fw_Wh.shape[1]

    @property
    def n_labels(self) -> int:
        return self.out_W.shape[0]


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# forward / backward

def _embed(params: TaggerParams, inp: Inputs) -> np.ndarray:
    ids = inp.token_ids
    if len(ids) and (ids.min() < 0 or ids.max() >= params.emb.shape[0]):
        raise IndexError("token id out of range")
    if len(inp.feat_rows) and (inp.feat_rows.min() < 0 or inp.feat_rows.max() >= params.feat_emb.shape[0]):
        raise IndexError("feature id out of range")
    feats = np.zeros((len(ids), params.d_emb), dtype=DTYPE)
    np.add.at(feats, inp.feat_pos, params.feat_emb[inp.feat_rows])
    return np.concatenate([params.emb[ids], feats], axis=1)


def _lstm_forward(X, Wx, Wh, b):
    T, H = X.shape[0], Wh.shape[1]
    Z = X @ Wx.T + b
    hs = np.zeros((T + 1, H), dtype=DTYPE)
    cs = np.zeros((T + 1, H), dtype=DTYPE)
    gates = np.empty((T, 4 * H), dtype=DTYPE)
    tcs = np.empty((T, H), dtype=DTYPE)
    for t in range(T):
        z = Z[t] + Wh @ hs[t]
        a = gates[t]
        a[:3 * H] = sigmoid(z[:3 * H])
        a[3 * H:] = np.tanh(z[3 * H:])
        cs[t + 1] = a[H:2 * H] * cs[t] + a[:H] * a[3 * H:]
        tcs[t] = np.tanh(cs[t + 1])
        hs[t + 1] = a[2 * H:3 * H] * tcs[t]
    return hs[1:], (X, hs, cs, gates, tcs)


def _lstm_backward(dH, cache, Wx, Wh):
    X, hs, cs, gates, tcs = cache
    T, H = dH.shape
    dZ = np.empty((T, 4 * H), dtype=DTYPE)
    dh_next = np.zeros(H, dtype=DTYPE)
    dc_next = np.zeros(H, dtype=DTYPE)
    for t in range(T - 1, -1, -1):
        a = gates[t]
        i, f, o, g = a[:H], a[H:2 * H], a[2 * H:3 * H], a[3 * H:]
        dh = dH[t] + dh_next
        dc = dh * o * (1.0 - tcs[t] ** 2) + dc_next
        dz = dZ[t]
        dz[:H] = dc * g * i * (1.0 - i)
        dz[H:2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[2 * H:3 * H] = dh * tcs[t] * o * (1.0 - o)
        dz[3 * H:] = dc * i * (1.0 - g ** 2)
        dc_next = dc * f
        dh_next = Wh.T @ dz
    dWx = dZ.T @ X
    dWh = dZ.T @ hs[:-1]
    db = dZ.sum(axis=0)
    dX = dZ @ Wx
    return dX, dWx, dWh, db


@dataclass
class _Cache:
    X: np.ndarray
    fw: tuple
    bw: tuple
    mask: np.ndarray | None


def _encode(params, inp, dropout, rng):
    X = _embed(params, inp)
    hf, cf = _lstm_forward(X, params.fw_Wx, params.fw_Wh, params.fw_b)
    hb, cb = _lstm_forward(X[::-1], params.bw_Wx, params.bw_Wh, params.bw_b)
    H = np.concatenate([hf, hb[::-1]], axis=1)
    mask = None
    if not 0.0 <= dropout < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if rng is not None and dropout > 0.0:
        mask = (rng.random(H.shape) >= dropout) / (1.0 - dropout)
        H = H * mask
    return H, _Cache(X, cf, cb, mask)


def encode(params: TaggerParams, inp: Inputs, dropout_enabled: bool = False,
           rng: np.random.Generator | None = None, dropout: float = 0.5) -> np.ndarray:
    """Hidden states ``(T, 2*d_hidden)``: forward state at t next to the
    backward state at t. Inverted dropout when enabled."""
    H, _ = _encode(params, inp, dropout, rng if dropout_enabled else None)
    return H


def logits(params: TaggerParams, H: np.ndarray) -> np.ndarray:
    return H @ params.out_W.T + params.out_b


def score_distribution(params: TaggerParams, h: np.ndarray, log: bool = False) -> np.ndarray:
    z = logits(params, h)
    return log_softmax(z) if log else softmax(z)


def log_probs(params: TaggerParams, inp: Inputs) -> np.ndarray:
    """Per-position log-probabilities over labels, dropout off."""
    return log_softmax(logits(params, encode(params, inp)))


def loss_and_gradients(params: TaggerParams, inp: Inputs, gold: Sequence[int],
                       rng: np.random.Generator | None = None,
                       dropout: float = 0.5) -> tuple[float, TaggerParams]:
    """Mean per-token negative log-likelihood and its full gradient.

    Dropout is applied only when ``rng`` is given.
    """
    gold = np.asarray(gold, dtype=np.int64)
    T = len(inp)
    if len(gold) != T:
        raise ValueError("gold length differs from sentence length")
    if T and (gold.min() < 0 or gold.max() >= params.n_labels):
        raise IndexError("gold label id out of range")
    Hd, cache = _encode(params, inp, dropout, rng)
    logp = log_softmax(logits(params, Hd))
    rows = np.arange(T)
    loss = -logp[rows, gold].mean()

    g = TaggerParams.zeros_like(params)
    dlog = np.exp(logp)
    dlog[rows, gold] -= 1.0
    dlog /= T
    g.out_W = dlog.T @ Hd
    g.out_b = dlog.sum(axis=0)
    dH = dlog @ params.out_W
    if cache.mask is not None:
        dH *= cache.mask
    h = params.d_hidden
    dXf, g.fw_Wx, g.fw_Wh, g.fw_b = _lstm_backward(dH[:, :h], cache.fw, params.fw_Wx, params.fw_Wh)
    dXb, g.bw_Wx, g.bw_Wh, g.bw_b = _lstm_backward(dH[::-1, h:], cache.bw, params.bw_Wx, params.bw_Wh)
    dX = dXf + dXb[::-1]
    e = params.d_emb
    np.add.at(g.emb, inp.token_ids, dX[:, :e])
    np.add.at(g.feat_emb, inp.feat_rows, dX[inp.feat_pos, e:])
    return float(loss), g


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: TaggerParams, lr: float = 1e-3, **kw) -> "AdamState":
        named = params.named()
        return cls({k: np.zeros_like(a) for k, a in named.items()},
                   {k: np.zeros_like(a) for k, a in named.items()}, lr=lr, **kw)


def adam_step(params: TaggerParams, grads: TaggerParams, state: AdamState) -> tuple[TaggerParams, AdamState]:
    """One bias-corrected Adam update, in place."""
    gnamed = grads.named()
    for k, g in gnamed.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {k} at step {state.t + 1}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    step = state.lr / (1.0 - b1 ** state.t)
    bc2 = 1.0 - b2 ** state.t
    for k, p in params.named().items():
        g = gnamed[k]
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch for {k}: {p.shape} vs {g.shape}")
        m, v = state.m[k], state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= step * m / (np.sqrt(v / bc2) + state.eps)
    return params, state
