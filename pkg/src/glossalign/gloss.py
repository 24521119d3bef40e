"""A small attention encoder-decoder mapping token sentences to gloss sequences.

Encoder: ``o_n = tanh((embed[x_n] + pos[n]) @ enc_W + enc_b)`` and
``h_L = mean(o)``. The decoder starts from ``s_0 = h_L``; at step m it
attends over ``o`` with the bilinear score ``s_{m-1} @ attn @ o_n``, then

    s_m = tanh([embed[g_{m-1}], context] @ dec_Wx + s_{m-1} @ dec_Wh + dec_b)
    logits_m = s_m @ out_W + out_b

Gradients are written out by hand (no autodiff) and checked against central
finite differences in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence as Seq

import numpy as np

from .seqcore import AlignmentError

PAD, BOS, EOS = 0, 1, 2
RESERVED = ("<pad>", "<bos>", "<eos>")

PARAM_NAMES = (
    "embed", "pos", "enc_W", "enc_b", "attn",
    "dec_Wx", "dec_Wh", "dec_b", "out_W", "out_b",
)


class UnknownToken(AlignmentError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if tuple(self.tokens[:3]) != RESERVED:
            raise ValueError(f"the first three tokens must be {RESERVED}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be distinct")
        if len(self.tokens) < 4:
            raise ValueError("vocabulary needs at least one non-reserved token")

    @classmethod
    def synthetic(cls, size: int) -> "Vocabulary":
        return cls(RESERVED + tuple(f"w{i}" for i in range(3, size)))

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return self.size

    def encode(self, words: Iterable[str]) -> list[int]:
        index = {w: i for i, w in enumerate(self.tokens)}
        try:
            return [index[w] for w in words]
        except KeyError as exc:
            raise UnknownToken(f"token {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


@dataclass
class GlossModel:
    vocab: Vocabulary
    params: dict[str, np.ndarray]
    seed: int
    positional: bool = True

    @classmethod
    def init(
        cls,
        vocab: Vocabulary | int,
        embed_dim: int = 16,
        hidden_dim: int = 32,
        max_positions: int = 32,
        seed: int = 0,
        positional: bool = True,
    ) -> "GlossModel":
        if isinstance(vocab, int):
            vocab = Vocabulary.synthetic(vocab)
        V, E, H, P = vocab.size, embed_dim, hidden_dim, max_positions
        rng = np.random.default_rng(seed)

        def normal(shape, fan_in):
            return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)

        params = {
            "embed": rng.normal(0.0, 1.0, size=(V, E)),
            "pos": rng.normal(0.0, 1.0, size=(P, E)) if positional else np.zeros((P, E)),
            "enc_W": normal((E, H), E),
            "enc_b": np.zeros(H),
            "attn": normal((H, H), H),
            "dec_Wx": normal((E + H, H), E + H),
            "dec_Wh": normal((H, H), H),
            "dec_b": np.zeros(H),
            "out_W": normal((H, V), H),
            "out_b": np.zeros(V),
        }
        return cls(vocab=vocab, params=params, seed=seed, positional=positional)

    @property
    def vocab_size(self) -> int:
        return self.vocab.size

    @property
    def embed_dim(self) -> int:
        return self.params["embed"].shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.params["enc_W"].shape[1]

    @property
    def max_positions(self) -> int:
        return self.params["pos"].shape[0]

    def copy(self) -> "GlossModel":
        return GlossModel(self.vocab, {k: v.copy() for k, v in self.params.items()},
                          self.seed, self.positional)

    def to_dict(self) -> dict:
        return {
            "format": "glossalign.gloss-model/1",
            "vocab": list(self.vocab.tokens),
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "max_positions": self.max_positions,
            "positional": self.positional,
            "seed": self.seed,
            "params": {k: {"shape": list(self.params[k].shape),
                           "data": self.params[k].ravel().tolist()} for k in PARAM_NAMES},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GlossModel":
        params = {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"])
                  for k, v in d["params"].items()}
        missing = set(PARAM_NAMES) - set(params)
        if missing:
            raise ValueError(f"checkpoint is missing parameters {sorted(missing)}")
        return cls(Vocabulary(tuple(d["vocab"])), params, int(d["seed"]), bool(d["positional"]))


@dataclass
class DecodeOutput:
    gloss_ids: list[int]
    attention: list[np.ndarray] = field(default_factory=list)


def _check_ids(model: GlossModel, ids: Seq[int], what: str = "input") -> list[int]:
    ids = [int(i) for i in ids]
    V = model.vocab_size
    for i in ids:
        if i < 0 or i >= V:
            raise UnknownToken(f"{what} id {i} outside vocabulary of size {V}")
    return ids


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _log_softmax(x: np.ndarray) -> np.ndarray:
    z = x - np.max(x, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def _encode_batch(params, X: np.ndarray, xmask: np.ndarray):
    N = X.shape[1]
    ex = params["embed"][X] + params["pos"][:N]
    O = np.tanh(ex @ params["enc_W"] + params["enc_b"])
    lens = xmask.sum(axis=1, keepdims=True)
    hL = np.einsum("bnh,bn->bh", O, xmask) / lens
    return O, hL


def _attend_batch(params, s: np.ndarray, O: np.ndarray, neg: np.ndarray):
    q = s @ params["attn"]
    a = _softmax(np.einsum("bh,bnh->bn", q, O) + neg)
    c = np.einsum("bn,bnh->bh", a, O)
    return q, a, c


def _cell(params, prev_ids: np.ndarray, c: np.ndarray, s: np.ndarray):
    u = np.concatenate([params["embed"][prev_ids], c], axis=1)
    s_new = np.tanh(u @ params["dec_Wx"] + s @ params["dec_Wh"] + params["dec_b"])
    return u, s_new


def encode(model: GlossModel, input_ids: Seq[int]) -> tuple[np.ndarray, np.ndarray]:
    """Return the per-token encoder states ``o`` (N x H) and their mean ``h_L``."""
    ids = _check_ids(model, input_ids)
    if not ids:
        raise AlignmentError("input must contain at least one token")
    if len(ids) > model.max_positions:
        raise AlignmentError(f"input longer than {model.max_positions} positions")
    X = np.array([ids], dtype=np.intp)
    O, hL = _encode_batch(model.params, X, np.ones(X.shape))
    return O[0], hL[0]


def attention_weights(model: GlossModel, query: np.ndarray, o: np.ndarray) -> np.ndarray:
    return _softmax(o @ (model.params["attn"].T @ query))


def attend(model: GlossModel, query: np.ndarray, o: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Softmax attention of ``query`` over encoder states; returns (context, weights)."""
    w = attention_weights(model, query, o)
    return w @ o, w


def _decode_step(model, h_L, o, prev_state, prev_gloss_id):
    p = model.params
    s = h_L if prev_state is None else prev_state
    context, weights = attend(model, s, o)
    u = np.concatenate([p["embed"][prev_gloss_id], context])
    new_state = np.tanh(u @ p["dec_Wx"] + s @ p["dec_Wh"] + p["dec_b"])
    logits = new_state @ p["out_W"] + p["out_b"]
    return logits, new_state, weights


def decode_step(model: GlossModel, h_L, o, prev_state, prev_gloss_id: int):
    """One decoder step. ``prev_state=None`` starts from ``h_L``. Returns (logits, new_state)."""
    (prev_gloss_id,) = _check_ids(model, [prev_gloss_id], "gloss")
    logits, new_state, _ = _decode_step(model, h_L, o, prev_state, prev_gloss_id)
    return logits, new_state


def greedy_decode(model: GlossModel, input_ids: Seq[int], max_len: int) -> DecodeOutput:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    o, h_L = encode(model, input_ids)
    out = DecodeOutput([])
    state, prev = None, BOS
    for _ in range(max_len):
        logits, state, weights = _decode_step(model, h_L, o, state, prev)
        prev = int(np.argmax(logits))
        out.gloss_ids.append(prev)
        out.attention.append(weights)
        if prev == EOS:
            break
    return out


def greedy_decode_batch(model: GlossModel, inputs: Seq[Seq[int]], max_len: int) -> list[list[int]]:
    """Vectorized greedy decoding of many inputs; agrees with :func:`greedy_decode`."""
    if not inputs:
        return []
    X, xmask = _pad([_check_ids(model, ids) for ids in inputs])
    p = model.params
    O, s = _encode_batch(p, X, xmask)
    neg = np.where(xmask > 0, 0.0, -np.inf)
    B = X.shape[0]
    prev = np.full(B, BOS, dtype=np.intp)
    done = np.zeros(B, dtype=bool)
    outs: list[list[int]] = [[] for _ in range(B)]
    for _ in range(max_len):
        _, _, c = _attend_batch(p, s, O, neg)
        _, s = _cell(p, prev, c, s)
        prev = np.argmax(s @ p["out_W"] + p["out_b"], axis=1)
        for b in np.flatnonzero(~done):
            outs[b].append(int(prev[b]))
        done |= prev == EOS
        if done.all():
            break
    return outs


def _pad(seqs: Seq[Seq[int]], lead: int | None = None, tail: int | None = None):
    rows = [([lead] if lead is not None else []) + list(s) + ([tail] if tail is not None else [])
            for s in seqs]
    width = max(len(r) for r in rows)
    arr = np.full((len(rows), width), PAD, dtype=np.intp)
    mask = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        arr[i, : len(r)] = r
        mask[i, : len(r)] = 1.0
    return arr, mask


def _prepare(model: GlossModel, batch: Seq[tuple[Seq[int], Seq[int]]]):
    if not batch:
        raise ValueError("empty batch")
    srcs, tgts = [], []
    for src, tgt in batch:
        src = _check_ids(model, src)
        tgt = _check_ids(model, tgt, "gloss")
        if not src:
            raise AlignmentError("input must contain at least one token")
        if len(src) > model.max_positions:
            raise AlignmentError(f"input longer than {model.max_positions} positions")
        srcs.append(src)
        tgts.append(tgt)
    X, xmask = _pad(srcs)
    Yin, _ = _pad(tgts, lead=BOS)
    Yout, ymask = _pad(tgts, tail=EOS)
    return X, xmask, Yin, Yout, ymask


def _loss_and_grad(model: GlossModel, batch, need_grad: bool = True):
    p = model.params
    X, xmask, Yin, Yout, ymask = _prepare(model, batch)
    B, M = Yout.shape
    n_tokens = ymask.sum()
    O, hL = _encode_batch(p, X, xmask)
    neg = np.where(xmask > 0, 0.0, -np.inf)

    s = hL
    cache = []
    loss = 0.0
    rows = np.arange(B)
    for m in range(M):
        q, a, c = _attend_batch(p, s, O, neg)
        u, s_new = _cell(p, Yin[:, m], c, s)
        logp = _log_softmax(s_new @ p["out_W"] + p["out_b"])
        loss -= float(np.sum(logp[rows, Yout[:, m]] * ymask[:, m]))
        cache.append((s, q, a, c, u, s_new, logp))
        s = s_new
    loss /= n_tokens
    if not need_grad:
        return loss, None

    g = {k: np.zeros_like(v) for k, v in p.items()}
    dO = np.zeros_like(O)
    ds_next = np.zeros_like(hL)
    E = p["embed"].shape[1]
    for m in range(M - 1, -1, -1):
        s_prev, q, a, c, u, s_new, logp = cache[m]
        dlogits = np.exp(logp)
        dlogits[rows, Yout[:, m]] -= 1.0
        dlogits *= (ymask[:, m] / n_tokens)[:, None]
        g["out_W"] += s_new.T @ dlogits
        g["out_b"] += dlogits.sum(axis=0)
        ds = dlogits @ p["out_W"].T + ds_next
        dz = ds * (1.0 - s_new ** 2)
        g["dec_Wx"] += u.T @ dz
        g["dec_Wh"] += s_prev.T @ dz
        g["dec_b"] += dz.sum(axis=0)
        du = dz @ p["dec_Wx"].T
        np.add.at(g["embed"], Yin[:, m], du[:, :E])
        dc = du[:, E:]
        ds_prev = dz @ p["dec_Wh"].T
        # attention backward
        dO += a[:, :, None] * dc[:, None, :]
        da = np.einsum("bh,bnh->bn", dc, O)
        dsc = a * (da - np.sum(a * da, axis=1, keepdims=True))
        dq = np.einsum("bn,bnh->bh", dsc, O)
        dO += dsc[:, :, None] * q[:, None, :]
        g["attn"] += s_prev.T @ dq
        ds_prev += dq @ p["attn"].T
        ds_next = ds_prev

    lens = xmask.sum(axis=1, keepdims=True)
    dO += (ds_next / lens)[:, None, :] * xmask[:, :, None]
    dz_enc = dO * (1.0 - O ** 2) * xmask[:, :, None]
    N = X.shape[1]
    ex = p["embed"][X] + p["pos"][:N]
    g["enc_W"] += np.einsum("bne,bnh->eh", ex, dz_enc)
    g["enc_b"] += dz_enc.sum(axis=(0, 1))
    dex = dz_enc @ p["enc_W"].T
    np.add.at(g["embed"], X, dex)
    if model.positional:
        g["pos"][:N] += dex.sum(axis=0)
    return loss, g


def batch_loss(model: GlossModel, batch) -> float:
    """Mean token negative log-likelihood over a batch of (input_ids, gloss_ids) pairs."""
    return _loss_and_grad(model, batch, need_grad=False)[0]


def teacher_forced_loss(model: GlossModel, input_ids: Seq[int], target_gloss_ids: Seq[int]) -> float:
    """Teacher-forced NLL of ``target_gloss_ids + [EOS]`` given ``[BOS] + target_gloss_ids``."""
    return batch_loss(model, [(input_ids, target_gloss_ids)])


def grad(model: GlossModel, batch) -> dict[str, np.ndarray]:
    return _loss_and_grad(model, batch)[1]


def loss_and_grad(model: GlossModel, batch) -> tuple[float, dict[str, np.ndarray]]:
    return _loss_and_grad(model, batch)


def exact_match(model: GlossModel, dataset, max_len: int | None = None) -> float:
    if not dataset:
        return 0.0
    if max_len is None:
        max_len = max(len(t) for _, t in dataset) + 2
    decoded = greedy_decode_batch(model, [s for s, _ in dataset], max_len)
    hits = sum(d == list(t) + [EOS] for d, (_, t) in zip(decoded, dataset))
    return hits / len(dataset)


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    exact_match: float

    def to_dict(self) -> dict:
        return {"epoch": self.epoch, "loss": self.loss, "exact_match": self.exact_match}


def train(
    model: GlossModel,
    dataset,
    epochs: int,
    lr: float,
    seed: int,
    momentum: float = 0.9,
    batch_size: int = 20,
    clip: float = 5.0,
    stop_at: float | None = None,
    eval_set=None,
    callback=None,
) -> tuple[GlossModel, list[EpochMetrics]]:
    """Mini-batch gradient descent with momentum and global-norm clipping.

    Returns a trained copy and per-epoch metrics. Exact-match is measured on
    ``eval_set`` (default: the training data). With ``stop_at`` set, training
    ends after the first epoch whose exact-match reaches it.
    """
    dataset = [(list(s), list(t)) for s, t in dataset]
    if not dataset:
        raise ValueError("dataset is empty")
    eval_set = dataset if eval_set is None else [(list(s), list(t)) for s, t in eval_set]
    model = model.copy()
    rng = np.random.default_rng(seed)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    history: list[EpochMetrics] = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(dataset))
        total, count = 0.0, 0
        for start in range(0, len(order), batch_size):
            batch = [dataset[i] for i in order[start:start + batch_size]]
            loss, g = _loss_and_grad(model, batch)
            total += loss * len(batch)
            count += len(batch)
            norm = np.sqrt(sum(float(np.sum(v * v)) for v in g.values()))
            scale = clip / norm if clip and norm > clip else 1.0
            for k, v in model.params.items():
                velocity[k] = momentum * velocity[k] - lr * scale * g[k]
                v += velocity[k]
        metrics = EpochMetrics(epoch, total / count, exact_match(model, eval_set))
        history.append(metrics)
        if callback is not None:
            callback(metrics)
        if stop_at is not None and metrics.exact_match >= stop_at:
            break
    return model, history
