"""Central finite-difference verification of the hand-rolled backward passes.

Every check builds small random float64 inputs, computes analytic gradients
once, then perturbs each tensor entry by +/- epsilon and compares.  The
reported figure is the worst relative error |a - n| / max(1e-8, |a|, |n|)
over every checked tensor.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .gru import GRUParams, gru_cell, gru_cell_backward
from .models import KIND_BIGRU, KIND_TRANSFORMER, ModelConfig, init_params, loss_and_grads

COMPONENTS = (
    "attention",
    "multi_head",
    "gru_cell",
    "affine_bce",
    "bigru_model",
    "transformer_model",
)


def relative_error(analytic, numeric) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(1e-8, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))


def _numeric_grad(f, arr, eps):
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + eps
        hi = f()
        arr[idx] = orig - eps
        lo = f()
        arr[idx] = orig
        grad[idx] = (hi - lo) / (2.0 * eps)
        it.iternext()
    return grad


def _max_err(f, tensors, analytic, eps) -> float:
    worst = 0.0
    for name, arr in tensors.items():
        worst = max(worst, relative_error(analytic[name], _numeric_grad(f, arr, eps)))
    return worst


def _check_attention(eps, rng):
    q = rng.standard_normal((3, 2))
    k = rng.standard_normal((4, 2))
    v = rng.standard_normal((4, 3))
    r = rng.standard_normal((3, 3))  # fixed projection makes the loss scalar

    def f():
        ctx, _, _ = ops.scaled_dot_attention(q, k, v)
        return float((ctx * r).sum())

    _, _, cache = ops.scaled_dot_attention(q, k, v)
    dq, dk, dv = ops.scaled_dot_attention_backward(r, cache)
    return _max_err(f, {"q": q, "k": k, "v": v}, {"q": dq, "k": dk, "v": dv}, eps)


def _check_multi_head(eps, rng):
    q = rng.standard_normal((3, 4))
    k = rng.standard_normal((3, 4))
    v = rng.standard_normal((3, 4))
    params = ops.MultiHeadParams.init(rng, 4, 2)
    key_mask = np.array([True, False, True])
    r = rng.standard_normal((3, 4))

    def f():
        out, _ = ops.multi_head(q, k, v, params, key_mask=key_mask)
        return float((out * r).sum())

    _, cache = ops.multi_head(q, k, v, params, key_mask=key_mask)
    dq, dk, dv, g = ops.multi_head_backward(r, cache)
    tensors = {"q": q, "k": k, "v": v, "w_q": params.w_q, "w_k": params.w_k,
               "w_v": params.w_v, "w_o": params.w_o}
    analytic = {"q": dq, "k": dk, "v": dv, "w_q": g.w_q, "w_k": g.w_k,
                "w_v": g.w_v, "w_o": g.w_o}
    return _max_err(f, tensors, analytic, eps)


def _check_gru_cell(eps, rng):
    x = rng.standard_normal((2, 3))
    h_prev = rng.standard_normal((2, 2))
    p = GRUParams.init(rng, 3, 2)
    r = rng.standard_normal((2, 2))

    def f():
        h, _ = gru_cell(x, h_prev, p)
        return float((h * r).sum())

    _, cache = gru_cell(x, h_prev, p)
    dx, dh_prev, g = gru_cell_backward(r, cache)
    tensors = {"x": x, "h_prev": h_prev}
    analytic = {"x": dx, "h_prev": dh_prev}
    for name in ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_c", "u_c", "b_c"):
        tensors[name] = getattr(p, name)
        analytic[name] = getattr(g, name)
    return _max_err(f, tensors, analytic, eps)


def _check_affine_bce(eps, rng):
    x = rng.standard_normal((4, 3))
    w = rng.standard_normal((3, 1))
    b = rng.standard_normal(1)
    targets = np.array([0.0, 1.0, 1.0, 0.0])

    def f():
        loss, _ = ops.bce_with_logits((x @ w + b)[:, 0], targets)
        return loss

    _, d_logits = ops.bce_with_logits((x @ w + b)[:, 0], targets)
    dx, dw, db = ops.dense_backward(d_logits[:, None], x, w)
    return _max_err(f, {"x": x, "w": w, "b": b}, {"x": dx, "w": dw, "b": db}, eps)


def _check_model(kind, eps, rng):
    config = ModelConfig(kind=kind, max_len=5, embed_dim=4, hidden_dim=3, heads=2,
                         ffn_dim=6, dropout=0.0, batch_size=4, epochs=1)
    params = init_params(config, 9, rng)
    ids = np.array([[2, 3, 4, 0, 0], [5, 6, 7, 8, 2]])
    labels = np.array([0, 1])

    def f():
        loss, _, _ = loss_and_grads(params, ids, labels, config)
        return loss

    _, grads, _ = loss_and_grads(params, ids, labels, config)
    return _max_err(f, params, grads, eps)


_CHECKS = {
    "attention": _check_attention,
    "multi_head": _check_multi_head,
    "gru_cell": _check_gru_cell,
    "affine_bce": _check_affine_bce,
    "bigru_model": lambda eps, rng: _check_model(KIND_BIGRU, eps, rng),
    "transformer_model": lambda eps, rng: _check_model(KIND_TRANSFORMER, eps, rng),
}


def grad_check(component: str, epsilon: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if component not in _CHECKS:
        raise ValueError(f"unknown component {component!r}; choose from {COMPONENTS}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return _CHECKS[component](epsilon, rng)
