"""One-vs-rest text classifiers built from the ops/gru primitives.

Two architectures:
  - bigru_attn: embed -> BiGRU -> attention pooling with a learned query
    -> affine -> sigmoid, trained with binary cross-entropy
  - transformer: embed + sinusoidal positions -> one encoder block
    (multi-head self-attention, residual + layer norm, feed-forward,
    residual + layer norm) -> masked mean pooling -> affine -> 2-way
    softmax, trained with sparse categorical cross-entropy

Training is deterministic per seed: one PCG64 generator drives parameter
init, epoch shuffles, and dropout masks in a fixed order.  Padding is id 0;
padded positions get zero attention weight and zero gradient, so the pad
embedding never trains.
"""

from __future__ import annotations

import io
import json
import zipfile
from collections import Counter
from dataclasses import asdict, dataclass, field
from dataclasses import fields as dc_fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import ops
from .adam import Adam
from .gru import GRUParams, bigru_backward, bigru_encode

PAD_ID = 0
UNK_ID = 1

KIND_BIGRU = "bigru_attn"
KIND_TRANSFORMER = "transformer"
_DEFAULT_LOSS = {KIND_BIGRU: "bce", KIND_TRANSFORMER: "scce"}

_GRU_FIELDS = tuple(f.name for f in dc_fields(GRUParams))
_MHA_FIELDS = ("w_q", "w_k", "w_v", "w_o")


@dataclass(frozen=True)
class Vocab:
    """token -> id map; ids 0 (padding) and 1 (out-of-vocabulary) are reserved."""

    token_to_id: dict

    def __post_init__(self):
        taken = [t for t, i in self.token_to_id.items() if i < 2]
        if taken:
            raise ValueError(f"tokens mapped to reserved ids: {sorted(taken)}")

    def __len__(self) -> int:
        return len(self.token_to_id) + 2

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


def build_vocab(texts: Iterable[str], min_count: int = 1) -> Vocab:
    """Assign dense ids 2.. to tokens seen at least min_count times,
    alphabetically for stability."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for text in texts:
        counts.update(text.split())
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(tok for tok, c in counts.items() if c >= min_count)
    return Vocab({tok: i + 2 for i, tok in enumerate(kept)})


def encode(text: str, vocab: Vocab, max_len: int) -> np.ndarray:
    """Head-truncate to max_len tokens and right-pad with id 0."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = np.zeros(max_len, dtype=np.int64)
    for i, tok in enumerate(text.split()[:max_len]):
        ids[i] = vocab.id_of(tok)
    return ids


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    max_len: int = 512       # M
    embed_dim: int = 100     # E
    hidden_dim: int = 64     # G, per direction
    heads: int = 4           # N
    ffn_dim: int = 64        # Df
    dropout: float = 0.2     # D
    batch_size: int = 64     # B
    loss: str = ""           # bce | scce, fixed by kind
    learning_rate: float = 1e-3
    epochs: int = 5
    vocab_min_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _DEFAULT_LOSS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.loss:
            object.__setattr__(self, "loss", _DEFAULT_LOSS[self.kind])
        if self.loss != _DEFAULT_LOSS[self.kind]:
            raise ValueError(f"{self.kind} trains with {_DEFAULT_LOSS[self.kind]}, got {self.loss!r}")
        for name in ("max_len", "embed_dim", "hidden_dim", "heads", "ffn_dim",
                     "batch_size", "epochs", "vocab_min_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.kind == KIND_TRANSFORMER and self.embed_dim % self.heads != 0:
            raise ValueError(f"embedding dim {self.embed_dim} is not divisible by {self.heads} heads")


def init_params(config: ModelConfig, vocab_size: int, rng) -> dict:
    params = {"embed": rng.uniform(-0.05, 0.05, size=(vocab_size, config.embed_dim))}
    if config.kind == KIND_BIGRU:
        for prefix in ("gru_fwd", "gru_bwd"):
            gp = GRUParams.init(rng, config.embed_dim, config.hidden_dim)
            for name in _GRU_FIELDS:
                params[f"{prefix}/{name}"] = getattr(gp, name)
        width = 2 * config.hidden_dim
        params["attn_query"] = ops.glorot(rng, width, 1, (width,))
        params["out/w"] = ops.glorot(rng, width, 1, (width, 1))
        params["out/b"] = np.zeros(1, dtype=np.float64)
    else:
        mha = ops.MultiHeadParams.init(rng, config.embed_dim, config.heads)
        for name in _MHA_FIELDS:
            params[f"mha/{name}"] = getattr(mha, name)
        e, df = config.embed_dim, config.ffn_dim
        params["ln1/gamma"] = np.ones(e, dtype=np.float64)
        params["ln1/beta"] = np.zeros(e, dtype=np.float64)
        params["ffn/w1"] = ops.glorot(rng, e, df, (e, df))
        params["ffn/b1"] = np.zeros(df, dtype=np.float64)
        params["ffn/w2"] = ops.glorot(rng, df, e, (df, e))
        params["ffn/b2"] = np.zeros(e, dtype=np.float64)
        params["ln2/gamma"] = np.ones(e, dtype=np.float64)
        params["ln2/beta"] = np.zeros(e, dtype=np.float64)
        params["out/w"] = ops.glorot(rng, e, 2, (e, 2))
        params["out/b"] = np.zeros(2, dtype=np.float64)
    return params


def _gru_view(params, prefix):
    return GRUParams(**{name: params[f"{prefix}/{name}"] for name in _GRU_FIELDS})


def _mha_view(params):
    return ops.MultiHeadParams(**{name: params[f"mha/{name}"] for name in _MHA_FIELDS})


def model_forward(params, ids, config, dropout_rng=None):
    """Batched forward; ids is (B, T) int.  dropout_rng None disables dropout
    (evaluation mode).  Returns (logits, cache)."""
    ids = np.asarray(ids, dtype=np.int64)
    mask = ids != PAD_ID
    x = ops.embedding_lookup(ids, params["embed"])
    if config.kind == KIND_TRANSFORMER:
        x = x + ops.sinusoidal_encoding(ids.shape[1], config.embed_dim)
    x, do_in = ops.dropout(x, config.dropout, dropout_rng)
    if config.kind == KIND_BIGRU:
        return _bigru_forward(params, x, ids, mask, config, dropout_rng, do_in)
    return _transformer_forward(params, x, ids, mask, config, dropout_rng, do_in)


def _bigru_forward(params, x, ids, mask, config, dropout_rng, do_in):
    fwd = _gru_view(params, "gru_fwd")
    bwd = _gru_view(params, "gru_bwd")
    states, bigru_cache = bigru_encode(x, fwd, bwd, mask)
    scale = 1.0 / np.sqrt(states.shape[-1])
    scores = states @ params["attn_query"] * scale
    alpha, live = ops.masked_softmax(scores, mask)
    pooled = (alpha[..., None] * states).sum(axis=1)
    pooled_d, do_pool = ops.dropout(pooled, config.dropout, dropout_rng)
    logits = (pooled_d @ params["out/w"] + params["out/b"])[:, 0]
    cache = {
        "ids": ids, "mask": mask, "do_in": do_in, "fwd": fwd, "bwd": bwd,
        "states": states, "bigru_cache": bigru_cache, "scale": scale,
        "alpha": alpha, "live": live, "pooled_d": pooled_d, "do_pool": do_pool,
    }
    return logits, cache


def _bigru_backward(d_logits, cache, params, vocab_size):
    d2 = d_logits[:, None]
    grads = {
        "out/w": ops.outer_grad(cache["pooled_d"], d2),
        "out/b": d2.sum(axis=0),
    }
    d_pooled = ops.dropout_backward(d2 @ params["out/w"].T, cache["do_pool"])
    states, alpha = cache["states"], cache["alpha"]
    d_alpha = (d_pooled[:, None, :] * states).sum(axis=-1)
    d_states = alpha[..., None] * d_pooled[:, None, :]
    d_scores = ops.softmax_backward(d_alpha, alpha, cache["live"])
    d_states += d_scores[..., None] * (params["attn_query"] * cache["scale"])
    grads["attn_query"] = (d_scores[..., None] * states).sum(axis=(0, 1)) * cache["scale"]
    dx, g_f, g_b = bigru_backward(d_states, cache["bigru_cache"], cache["fwd"], cache["bwd"])
    dx = ops.dropout_backward(dx, cache["do_in"])
    grads["embed"] = ops.embedding_backward(dx, cache["ids"], vocab_size)
    for prefix, g in (("gru_fwd", g_f), ("gru_bwd", g_b)):
        for name in _GRU_FIELDS:
            grads[f"{prefix}/{name}"] = getattr(g, name)
    return grads


def _transformer_forward(params, x, ids, mask, config, dropout_rng, do_in):
    attn_out, mha_cache = ops.multi_head(x, x, x, _mha_view(params), key_mask=mask)
    attn_out, do_attn = ops.dropout(attn_out, config.dropout, dropout_rng)
    x1, ln1_cache = ops.layer_norm(x + attn_out, params["ln1/gamma"], params["ln1/beta"])
    f1 = x1 @ params["ffn/w1"] + params["ffn/b1"]
    a1 = ops.relu(f1)
    f2 = a1 @ params["ffn/w2"] + params["ffn/b2"]
    f2, do_ffn = ops.dropout(f2, config.dropout, dropout_rng)
    x2, ln2_cache = ops.layer_norm(x1 + f2, params["ln2/gamma"], params["ln2/beta"])
    counts = np.maximum(mask.sum(axis=1), 1)[:, None]  # all-pad rows pool to zero
    pooled = (x2 * mask[..., None]).sum(axis=1) / counts
    logits = pooled @ params["out/w"] + params["out/b"]
    cache = {
        "ids": ids, "mask": mask, "do_in": do_in, "mha_cache": mha_cache,
        "do_attn": do_attn, "ln1_cache": ln1_cache, "f1": f1, "a1": a1,
        "x1": x1, "do_ffn": do_ffn, "ln2_cache": ln2_cache, "counts": counts,
        "pooled": pooled,
    }
    return logits, cache


def _transformer_backward(d_logits, cache, params, vocab_size):
    grads = {
        "out/w": ops.outer_grad(cache["pooled"], d_logits),
        "out/b": d_logits.sum(axis=0),
    }
    mask = cache["mask"]
    d_pooled = d_logits @ params["out/w"].T
    d_x2 = (d_pooled / cache["counts"])[:, None, :] * mask[..., None]
    d_r2, grads["ln2/gamma"], grads["ln2/beta"] = ops.layer_norm_backward(d_x2, cache["ln2_cache"])
    d_f2 = ops.dropout_backward(d_r2, cache["do_ffn"])
    d_a1, grads["ffn/w2"], grads["ffn/b2"] = ops.dense_backward(d_f2, cache["a1"], params["ffn/w2"])
    d_f1 = ops.relu_backward(d_a1, cache["f1"])
    d_x1_ffn, grads["ffn/w1"], grads["ffn/b1"] = ops.dense_backward(d_f1, cache["x1"], params["ffn/w1"])
    d_x1 = d_r2 + d_x1_ffn
    d_r1, grads["ln1/gamma"], grads["ln1/beta"] = ops.layer_norm_backward(d_x1, cache["ln1_cache"])
    d_attn = ops.dropout_backward(d_r1, cache["do_attn"])
    dq, dk, dv, g_mha = ops.multi_head_backward(d_attn, cache["mha_cache"])
    for name in _MHA_FIELDS:
        grads[f"mha/{name}"] = getattr(g_mha, name)
    dx = ops.dropout_backward(d_r1 + dq + dk + dv, cache["do_in"])
    grads["embed"] = ops.embedding_backward(dx, cache["ids"], vocab_size)
    return grads


def loss_and_grads(params, ids, labels, config, dropout_rng=None):
    logits, cache = model_forward(params, ids, config, dropout_rng)
    if config.loss == "bce":
        loss, d_logits = ops.bce_with_logits(logits, labels)
    else:
        loss, d_logits = ops.scce_with_logits(logits, labels)
    vocab_size = params["embed"].shape[0]
    if config.kind == KIND_BIGRU:
        grads = _bigru_backward(d_logits, cache, params, vocab_size)
    else:
        grads = _transformer_backward(d_logits, cache, params, vocab_size)
    return loss, grads, logits


@dataclass
class LabeledDoc:
    doc_id: str
    text: str
    label: int


@dataclass
class Dataset:
    train: list
    valid: list = field(default_factory=list)


def write_dataset(docs: Iterable[LabeledDoc], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"doc_id": d.doc_id, "text": d.text, "label": d.label}, sort_keys=True))
            fh.write("\n")


def read_dataset(path) -> list[LabeledDoc]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                docs.append(LabeledDoc(doc_id=obj["doc_id"], text=obj["text"], label=int(obj["label"])))
    return docs


@dataclass
class TrainedModel:
    kind: str
    config: ModelConfig
    vocab: Vocab
    params: dict
    training_log: list

    def forward(self, seq):
        return forward(self, seq)

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        """Probability of the positive class for each text."""
        ids = np.stack([encode(t, self.vocab, self.config.max_len) for t in texts])
        out = np.empty(len(texts), dtype=np.float64)
        for start in range(0, len(texts), self.config.batch_size):
            logits, _ = model_forward(self.params, ids[start:start + self.config.batch_size], self.config)
            if self.kind == KIND_BIGRU:
                out[start:start + len(logits)] = ops.sigmoid(logits)
            else:
                out[start:start + len(logits)] = ops.softmax(logits, axis=-1)[:, 1]
        return out

    def save(self, path) -> None:
        save_model(self, path)


def forward(model: TrainedModel, seq) -> float | np.ndarray:
    """Evaluation-mode prediction for one encoded sequence: a scalar
    probability for bigru_attn, a 2-way distribution for the transformer."""
    seq = np.asarray(seq, dtype=np.int64)
    m = model.config.max_len
    if seq.ndim != 1 or seq.shape[0] != m:
        raise ValueError(f"expected a token sequence of length {m}, got shape {seq.shape}")
    logits, _ = model_forward(model.params, seq[None, :], model.config)
    if model.kind == KIND_BIGRU:
        return float(ops.sigmoid(logits)[0])
    return ops.softmax(logits, axis=-1)[0]


def _eval_pass(params, ids, labels, config):
    n = len(labels)
    total = 0.0
    correct = 0
    for start in range(0, n, config.batch_size):
        batch_ids = ids[start:start + config.batch_size]
        batch_labels = labels[start:start + config.batch_size]
        logits, _ = model_forward(params, batch_ids, config)
        if config.loss == "bce":
            loss, _ = ops.bce_with_logits(logits, batch_labels)
            pred = (logits > 0).astype(np.int64)
        else:
            loss, _ = ops.scce_with_logits(logits, batch_labels)
            pred = logits.argmax(axis=-1)
        total += loss * len(batch_labels)
        correct += int((pred == batch_labels).sum())
    return total / n, correct / n


def train(dataset: Dataset, config: ModelConfig) -> TrainedModel:
    """Mini-batch training with Adam; deterministic given config.seed."""
    train_docs = list(dataset.train)
    if not train_docs:
        raise ValueError("empty training set")
    labels = np.array([d.label for d in train_docs], dtype=np.int64)
    if not set(np.unique(labels)) <= {0, 1}:
        raise ValueError("labels must be 0 or 1")
    if len(np.unique(labels)) < 2:
        raise ValueError("training set contains a single class; need both labels")

    rng = np.random.Generator(np.random.PCG64(config.seed))
    vocab = build_vocab((d.text for d in train_docs), config.vocab_min_count)
    ids = np.stack([encode(d.text, vocab, config.max_len) for d in train_docs])
    valid_docs = list(dataset.valid)
    if valid_docs:
        valid_ids = np.stack([encode(d.text, vocab, config.max_len) for d in valid_docs])
        valid_labels = np.array([d.label for d in valid_docs], dtype=np.int64)

    params = init_params(config, len(vocab), rng)
    opt = Adam(params, learning_rate=config.learning_rate)
    log = []
    n = len(train_docs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads, _ = loss_and_grads(params, ids[idx], labels[idx], config, dropout_rng=rng)
            opt.step(grads)
            batch_losses.append(loss)
        entry = {"epoch": epoch + 1, "train_loss": float(np.mean(batch_losses))}
        entry["train_eval_loss"], entry["train_acc"] = _eval_pass(params, ids, labels, config)
        if valid_docs:
            entry["valid_loss"], entry["valid_acc"] = _eval_pass(params, valid_ids, valid_labels, config)
        log.append(entry)
    return TrainedModel(kind=config.kind, config=config, vocab=vocab, params=params, training_log=log)


def save_model(model: TrainedModel, path) -> None:
    """Self-describing zip container: config.json, vocab.json,
    training_log.json, and one little-endian float64 .npy per parameter.
    Entry timestamps are fixed so identical models produce identical bytes."""
    entries = [
        ("config.json", json.dumps(asdict(model.config), sort_keys=True, indent=2)),
        ("vocab.json", json.dumps(model.vocab.token_to_id, sort_keys=True)),
        ("training_log.json", json.dumps(model.training_log)),
    ]
    for name in sorted(model.params):
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(model.params[name], dtype="<f8"))
        entries.append((f"params/{name}.npy", buf.getvalue()))
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, data in entries:
            zf.writestr(zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0)), data)


def load_model(path) -> TrainedModel:
    path = Path(path)
    with zipfile.ZipFile(path) as zf:
        config = ModelConfig(**json.loads(zf.read("config.json")))
        vocab = Vocab({tok: int(i) for tok, i in json.loads(zf.read("vocab.json")).items()})
        training_log = json.loads(zf.read("training_log.json"))
        params = {}
        for name in zf.namelist():
            if name.startswith("params/") and name.endswith(".npy"):
                arr = np.load(io.BytesIO(zf.read(name)), allow_pickle=False)
                params[name[len("params/"):-len(".npy")]] = arr
    return TrainedModel(kind=config.kind, config=config, vocab=vocab, params=params,
                        training_log=training_log)
