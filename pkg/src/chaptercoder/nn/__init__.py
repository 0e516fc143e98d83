"""Hand-rolled numpy building blocks for the per-code attention classifiers.

No autograd framework: every layer is a forward/backward function pair in
float64, and gradcheck verifies each backward against central finite
differences.
"""

from .adam import Adam
from .gradcheck import COMPONENTS, grad_check, relative_error
from .gru import GRUParams, bigru_backward, bigru_encode, gru_cell, gru_cell_backward, gru_forward
from .models import (
    KIND_BIGRU,
    KIND_TRANSFORMER,
    PAD_ID,
    UNK_ID,
    Dataset,
    LabeledDoc,
    ModelConfig,
    TrainedModel,
    Vocab,
    build_vocab,
    encode,
    forward,
    load_model,
    read_dataset,
    save_model,
    train,
    write_dataset,
)
from .ops import (
    MultiHeadParams,
    bce_with_logits,
    masked_softmax,
    multi_head,
    multi_head_backward,
    scaled_dot_attention,
    scaled_dot_attention_backward,
    scce_with_logits,
    sinusoidal_encoding,
    softmax,
)

__all__ = [
    "Adam",
    "COMPONENTS",
    "Dataset",
    "GRUParams",
    "KIND_BIGRU",
    "KIND_TRANSFORMER",
    "LabeledDoc",
    "ModelConfig",
    "MultiHeadParams",
    "PAD_ID",
    "TrainedModel",
    "UNK_ID",
    "Vocab",
    "bce_with_logits",
    "bigru_backward",
    "bigru_encode",
    "build_vocab",
    "encode",
    "forward",
    "grad_check",
    "gru_cell",
    "gru_cell_backward",
    "gru_forward",
    "load_model",
    "masked_softmax",
    "multi_head",
    "multi_head_backward",
    "read_dataset",
    "relative_error",
    "save_model",
    "scaled_dot_attention",
    "scaled_dot_attention_backward",
    "scce_with_logits",
    "sinusoidal_encoding",
    "softmax",
    "train",
    "write_dataset",
]
