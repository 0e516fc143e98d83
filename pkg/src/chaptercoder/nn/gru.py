"""Gated recurrent unit cell, sequence scan, and bidirectional encoder.

Cell equations (update gate z, reset gate r, candidate c):

    z = sigmoid(x W_z + h_prev U_z + b_z)
    r = sigmoid(x W_r + h_prev U_r + b_r)
    c = tanh(x W_c + (r * h_prev) U_c + b_c)
    h = (1 - z) * h_prev + z * c

Padded timesteps (mask False) carry the previous state through unchanged, so
trailing padding never perturbs the encoding and the backward direction is
literally the forward scan run on the reversed sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .ops import glorot, sigmoid


@dataclass
class GRUParams:
    w_z: np.ndarray  # (E, G)
    u_z: np.ndarray  # (G, G)
    b_z: np.ndarray  # (G,)
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_c: np.ndarray
    u_c: np.ndarray
    b_c: np.ndarray

    @classmethod
    def init(cls, rng, input_dim, hidden_dim):
        def w():
            return glorot(rng, input_dim, hidden_dim, (input_dim, hidden_dim))

        def u():
            return glorot(rng, hidden_dim, hidden_dim, (hidden_dim, hidden_dim))

        def b():
            return np.zeros(hidden_dim, dtype=np.float64)

        return cls(w_z=w(), u_z=u(), b_z=b(), w_r=w(), u_r=u(), b_r=b(), w_c=w(), u_c=u(), b_c=b())

    @classmethod
    def zeros_like(cls, other):
        return cls(**{f.name: np.zeros_like(getattr(other, f.name)) for f in fields(cls)})

    def add_(self, other):
        for f in fields(self):
            getattr(self, f.name).__iadd__(getattr(other, f.name))

    @property
    def hidden_dim(self) -> int:
        return self.u_z.shape[0]


def gru_cell(x, h_prev, p):
    """One step; x is (B, E), h_prev is (B, G)."""
    z = sigmoid(x @ p.w_z + h_prev @ p.u_z + p.b_z)
    r = sigmoid(x @ p.w_r + h_prev @ p.u_r + p.b_r)
    rh = r * h_prev
    c = np.tanh(x @ p.w_c + rh @ p.u_c + p.b_c)
    h = (1.0 - z) * h_prev + z * c
    return h, (x, h_prev, z, r, rh, c, p)


def gru_cell_backward(dh, cache):
    x, h_prev, z, r, rh, c, p = cache
    da_z = dh * (c - h_prev) * z * (1.0 - z)
    da_c = dh * z * (1.0 - c * c)
    dh_prev = dh * (1.0 - z)

    d_rh = da_c @ p.u_c.T
    da_r = d_rh * h_prev * r * (1.0 - r)
    dh_prev += d_rh * r + da_r @ p.u_r.T + da_z @ p.u_z.T
    dx = da_z @ p.w_z.T + da_r @ p.w_r.T + da_c @ p.w_c.T

    grads = GRUParams(
        w_z=x.T @ da_z, u_z=h_prev.T @ da_z, b_z=da_z.sum(axis=0),
        w_r=x.T @ da_r, u_r=h_prev.T @ da_r, b_r=da_r.sum(axis=0),
        w_c=x.T @ da_c, u_c=rh.T @ da_c, b_c=da_c.sum(axis=0),
    )
    return dx, dh_prev, grads


def gru_forward(x_seq, p, mask=None):
    """Left-to-right scan over (B, T, E); returns per-step states (B, T, G)."""
    n, steps, _ = x_seq.shape
    g = p.hidden_dim
    h = np.zeros((n, g), dtype=np.float64)
    states = np.zeros((n, steps, g), dtype=np.float64)
    caches = []
    for t in range(steps):
        h_new, cell_cache = gru_cell(x_seq[:, t], h, p)
        if mask is not None:
            m = mask[:, t].astype(np.float64)[:, None]
            h = m * h_new + (1.0 - m) * h
        else:
            m = None
            h = h_new
        states[:, t] = h
        caches.append((cell_cache, m))
    return states, caches


def gru_backward(d_states, caches, p):
    n, steps, _ = d_states.shape
    e = caches[0][0][0].shape[-1]
    dx_seq = np.zeros((n, steps, e), dtype=np.float64)
    grads = GRUParams.zeros_like(p)
    dh = np.zeros((n, p.hidden_dim), dtype=np.float64)
    for t in reversed(range(steps)):
        cell_cache, m = caches[t]
        dh_total = d_states[:, t] + dh
        if m is not None:
            dh_new = dh_total * m
            dh_skip = dh_total * (1.0 - m)
        else:
            dh_new = dh_total
            dh_skip = 0.0
        dx, dh_prev, g = gru_cell_backward(dh_new, cell_cache)
        dx_seq[:, t] = dx
        grads.add_(g)
        dh = dh_prev + dh_skip
    return dx_seq, grads


def bigru_encode(x_seq, fwd, bwd, mask=None):
    """Per-token states of width 2G: forward scan concatenated with the
    backward scan (the forward scan of the reversed sequence, reversed)."""
    states_f, caches_f = gru_forward(x_seq, fwd, mask)
    x_rev = x_seq[:, ::-1]
    mask_rev = mask[:, ::-1] if mask is not None else None
    states_b_rev, caches_b = gru_forward(x_rev, bwd, mask_rev)
    states = np.concatenate([states_f, states_b_rev[:, ::-1]], axis=-1)
    return states, (caches_f, caches_b, fwd.hidden_dim)


def bigru_backward(d_states, cache, fwd, bwd):
    caches_f, caches_b, g = cache
    dx_f, grads_f = gru_backward(d_states[..., :g], caches_f, fwd)
    dx_b_rev, grads_b = gru_backward(d_states[:, ::-1, g:], caches_b, bwd)
    return dx_f + dx_b_rev[:, ::-1], grads_f, grads_b
