"""Stateless forward/backward primitives: attention, normalization, losses.

Conventions:
  - arrays are float64; shapes use trailing axes for features, so every
    function works on both unbatched (T, d) and batched (B, T, d) inputs
  - each forward returns whatever its backward needs as an explicit cache
  - boolean masks mark real tokens with True; masked keys get exactly zero
    attention weight, and rows with no live key fall back to uniform weights
    (treated as constant in the backward pass)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _broadcast_key_mask(key_mask, shape):
    mask = np.asarray(key_mask, dtype=bool)
    if mask.ndim == len(shape) - 1:
        mask = mask[..., None, :]  # one mask row shared by every query
    if mask.ndim != len(shape):
        raise ValueError(f"key mask rank {mask.ndim} incompatible with scores rank {len(shape)}")
    return np.broadcast_to(mask, shape)


def masked_softmax(scores, key_mask=None):
    """Softmax over the last axis with optional boolean key masking.

    Returns (probs, live) where live flags rows that had at least one
    unmasked key.  Dead rows get a uniform distribution and zero gradient.
    """
    if key_mask is None:
        live = np.ones(scores.shape[:-1] + (1,), dtype=bool)
        return softmax(scores), live
    mask = _broadcast_key_mask(key_mask, scores.shape)
    live = mask.any(axis=-1, keepdims=True)
    neg = np.where(mask, scores, -np.inf)
    s_max = np.where(live, neg.max(axis=-1, keepdims=True, initial=-np.inf), 0.0)
    e = np.exp(np.where(mask, scores - s_max, -np.inf))
    denom = e.sum(axis=-1, keepdims=True)
    probs = np.where(live, e / np.where(denom == 0.0, 1.0, denom), 1.0 / scores.shape[-1])
    return probs, live


def softmax_backward(d_probs, probs, live=None):
    ds = probs * (d_probs - (d_probs * probs).sum(axis=-1, keepdims=True))
    if live is not None:
        ds = np.where(live, ds, 0.0)
    return ds


@dataclass
class AttnCache:
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    live: np.ndarray
    scale: float


def scaled_dot_attention(q, k, v, key_mask=None):
    """softmax(Q K^T / sqrt(d_k)) V.

    Returns (context, attention_weights, cache); every weight row over live
    keys sums to 1.
    """
    q, k, v = (np.asarray(a, dtype=np.float64) for a in (q, k, v))
    d_k = q.shape[-1]
    if d_k == 0:
        raise ValueError("d_k must be positive")
    if k.shape[-1] != d_k:
        raise ValueError(f"query width {d_k} does not match key width {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError(f"{k.shape[-2]} keys cannot address {v.shape[-2]} values")
    scale = 1.0 / np.sqrt(d_k)
    scores = q @ np.swapaxes(k, -1, -2) * scale
    weights, live = masked_softmax(scores, key_mask)
    context = weights @ v
    return context, weights, AttnCache(q=q, k=k, v=v, weights=weights, live=live, scale=scale)


def scaled_dot_attention_backward(d_context, cache):
    d_weights = d_context @ np.swapaxes(cache.v, -1, -2)
    dv = np.swapaxes(cache.weights, -1, -2) @ d_context
    d_scores = softmax_backward(d_weights, cache.weights, cache.live) * cache.scale
    dq = d_scores @ cache.k
    dk = np.swapaxes(d_scores, -1, -2) @ cache.q
    return dq, dk, dv


@dataclass
class MultiHeadParams:
    """Per-head projections stacked on a leading head axis, plus the output
    projection applied after concatenation."""

    w_q: np.ndarray  # (heads, E, d_k)
    w_k: np.ndarray  # (heads, E, d_k)
    w_v: np.ndarray  # (heads, E, d_k)
    w_o: np.ndarray  # (heads * d_k, E)

    @classmethod
    def init(cls, rng, embed_dim, heads):
        if heads < 1:
            raise ValueError("need at least one attention head")
        if embed_dim % heads != 0:
            raise ValueError(f"embedding dim {embed_dim} is not divisible by {heads} heads")
        d_k = embed_dim // heads
        return cls(
            w_q=glorot(rng, embed_dim, d_k, (heads, embed_dim, d_k)),
            w_k=glorot(rng, embed_dim, d_k, (heads, embed_dim, d_k)),
            w_v=glorot(rng, embed_dim, d_k, (heads, embed_dim, d_k)),
            w_o=glorot(rng, heads * d_k, embed_dim, (heads * d_k, embed_dim)),
        )

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_k(self) -> int:
        return self.w_q.shape[2]


def glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class MultiHeadCache:
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    params: MultiHeadParams
    head_caches: list
    concat: np.ndarray


def _check_projection(x, w, name):
    if x.shape[-1] != w.shape[1]:
        raise ValueError(f"projection {name} expects width {w.shape[1]}, got input width {x.shape[-1]}")


def multi_head(q, k, v, params, key_mask=None):
    """Concat(head_1 .. head_h) W^O with head_i = attention(q W_i^Q, k W_i^K, v W_i^V)."""
    q, k, v = (np.asarray(a, dtype=np.float64) for a in (q, k, v))
    _check_projection(q, params.w_q, "W^Q")
    _check_projection(k, params.w_k, "W^K")
    _check_projection(v, params.w_v, "W^V")
    if params.w_o.shape[0] != params.heads * params.d_k:
        raise ValueError(
            f"projection W^O expects width {params.heads * params.d_k}, got {params.w_o.shape[0]}"
        )
    contexts = []
    head_caches = []
    for i in range(params.heads):
        ctx, _, cache = scaled_dot_attention(
            q @ params.w_q[i], k @ params.w_k[i], v @ params.w_v[i], key_mask
        )
        contexts.append(ctx)
        head_caches.append(cache)
    concat = np.concatenate(contexts, axis=-1)
    out = concat @ params.w_o
    return out, MultiHeadCache(q=q, k=k, v=v, params=params, head_caches=head_caches, concat=concat)


def outer_grad(x, dy):
    """Weight gradient of y = x @ w, summed over all leading axes."""
    return x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])


def multi_head_backward(d_out, cache):
    p = cache.params
    d_concat = d_out @ p.w_o.T
    g_o = outer_grad(cache.concat, d_out)
    dq = np.zeros_like(cache.q)
    dk = np.zeros_like(cache.k)
    dv = np.zeros_like(cache.v)
    g_q = np.zeros_like(p.w_q)
    g_k = np.zeros_like(p.w_k)
    g_v = np.zeros_like(p.w_v)
    d_k = p.d_k
    for i in range(p.heads):
        d_ctx = d_concat[..., i * d_k:(i + 1) * d_k]
        dqh, dkh, dvh = scaled_dot_attention_backward(d_ctx, cache.head_caches[i])
        dq += dqh @ p.w_q[i].T
        dk += dkh @ p.w_k[i].T
        dv += dvh @ p.w_v[i].T
        g_q[i] = outer_grad(cache.q, dqh)
        g_k[i] = outer_grad(cache.k, dkh)
        g_v[i] = outer_grad(cache.v, dvh)
    return dq, dk, dv, MultiHeadParams(w_q=g_q, w_k=g_k, w_v=g_v, w_o=g_o)


def layer_norm(x, gamma, beta, eps=1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return gamma * xhat + beta, (xhat, inv, gamma)


def layer_norm_backward(dy, cache):
    xhat, inv, gamma = cache
    d_xhat = dy * gamma
    dx = inv * (
        d_xhat
        - d_xhat.mean(axis=-1, keepdims=True)
        - xhat * (d_xhat * xhat).mean(axis=-1, keepdims=True)
    )
    axes = tuple(range(dy.ndim - 1))
    return dx, (dy * xhat).sum(axis=axes), dy.sum(axis=axes)


def dense(x, w, b):
    return x @ w + b


def dense_backward(dy, x, w):
    return dy @ w.T, outer_grad(x, dy), dy.reshape(-1, dy.shape[-1]).sum(axis=0)


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dy, x):
    return dy * (x > 0)


def dropout(x, rate, rng):
    """Inverted dropout: scaling happens at train time, inference is identity."""
    if rng is None or rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(dy, keep):
    return dy if keep is None else dy * keep


def embedding_lookup(ids, table):
    return table[ids]


def embedding_backward(d_x, ids, vocab_size):
    d_table = np.zeros((vocab_size, d_x.shape[-1]), dtype=np.float64)
    np.add.at(d_table, ids, d_x)
    return d_table


def sinusoidal_encoding(length, dim):
    """Fixed position features: sin on even channels, cos on odd ones."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (np.floor(i / 2) * 2) / dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def bce_with_logits(logits, targets):
    """Mean binary cross-entropy straight from logits, stable for large |x|.

    Returns (loss, d_logits) with the 1/n factor already folded into the
    gradient.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    per = np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    d_logits = (sigmoid(logits) - targets) / logits.size
    return float(per.mean()), d_logits


def scce_with_logits(logits, labels):
    """Mean sparse categorical cross-entropy via log-softmax.

    labels are integer class ids indexing the last axis of (n, C) logits.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - log_z
    n = logits.shape[0]
    loss = -log_probs[np.arange(n), labels].mean()
    d_logits = np.exp(log_probs)
    d_logits[np.arange(n), labels] -= 1.0
    return float(loss), d_logits / n
