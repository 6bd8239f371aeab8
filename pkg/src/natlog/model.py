"""Term-pair relation classifiers: plain NN and neural tensor network (NTN).

Pipeline, for a pair of term indices (left, right):

    v        = embedding row for the term
    v        = f(A v + a)                        optional transform layer
    h_nn     = f(W [v_l; v_r] + b)               plain comparison layer
    h_ntn[k] = f(v_l' T[k] v_r + (W [v_l; v_r])[k] + b[k])
    output   = softmax(S h + c)

``f`` is an elementwise nonlinearity, tanh by default (configurable).  The
NTN differs from the NN only by the bilinear tensor term, which allows
multiplicative interactions between the two inputs; with a zero tensor the
two are identical.

All gradients are computed analytically (no autodiff), including the
embedding rows of the terms appearing in a batch, and can be verified
against central finite differences with :func:`gradient_check`.

The training objective is mean cross-entropy plus an L2 penalty of
``l2_strength / 2`` times the squared norm of the weight matrices (never the
biases).  Embedding rows enter the penalty only for terms occurring in the
batch, so terms outside a batch get exactly zero gradient and sparse updates
stay sparse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace
from typing import Optional

import numpy as np

CHECKPOINT_MAGIC = b"NATLOG-MODEL-1\n"

# Initialization ranges; nothing downstream is sensitive to the exact values.
WEIGHT_INIT_SCALE = 0.05
EMBED_INIT_SCALE = 0.1


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int
    feature_dim: int
    num_classes: int
    comparison: str = "ntn"          # "nn" or "ntn"
    use_transform: bool = False
    l2_strength: float = 1e-4
    nonlinearity: str = "tanh"       # "tanh" or "relu"

    def __post_init__(self) -> None:
        for name in ("vocab_size", "embed_dim", "feature_dim", "num_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.comparison not in ("nn", "ntn"):
            raise ValueError(f"unknown comparison kind {self.comparison!r}")
        if self.nonlinearity not in ("tanh", "relu"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.l2_strength < 0:
            raise ValueError("l2_strength must be >= 0")


@dataclass
class ModelParams:
    """All learnable arrays, plus the config describing their roles.

    ``transform_w``/``transform_b`` are present iff the transform layer is
    enabled; ``comparison_t`` is present iff the comparison is an NTN.
    Gradients are returned as plain dicts keyed like :meth:`arrays`.
    """

    config: ModelConfig
    embeddings: np.ndarray                       # vocab x n
    comparison_w: np.ndarray                     # m x 2n
    comparison_b: np.ndarray                     # m
    softmax_w: np.ndarray                        # classes x m
    softmax_b: np.ndarray                        # classes
    transform_w: Optional[np.ndarray] = None     # n x n
    transform_b: Optional[np.ndarray] = None     # n
    comparison_t: Optional[np.ndarray] = None    # m x n x n

    def arrays(self) -> dict[str, np.ndarray]:
        """Name -> array for every parameter present, in a fixed order."""
        out = {"embeddings": self.embeddings}
        if self.transform_w is not None:
            out["transform_w"] = self.transform_w
            out["transform_b"] = self.transform_b
        out["comparison_w"] = self.comparison_w
        out["comparison_b"] = self.comparison_b
        if self.comparison_t is not None:
            out["comparison_t"] = self.comparison_t
        out["softmax_w"] = self.softmax_w
        out["softmax_b"] = self.softmax_b
        return out

    # Names whose arrays carry the L2 penalty (biases never do; embeddings
    # are handled per-row in the loss).
    L2_NAMES = ("transform_w", "comparison_w", "comparison_t", "softmax_w")

    def copy(self) -> "ModelParams":
        return replace(
            self, **{name: arr.copy() for name, arr in self.arrays().items()}
        )

    def num_parameters(self) -> int:
        return sum(a.size for a in self.arrays().values())


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Weights uniform in +-0.05, embeddings uniform in +-0.1, biases zero."""
    n, m = config.embed_dim, config.feature_dim

    def w(*shape):
        return rng.uniform(-WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, size=shape)

    params = ModelParams(
        config=config,
        embeddings=rng.uniform(
            -EMBED_INIT_SCALE, EMBED_INIT_SCALE, size=(config.vocab_size, n)
        ),
        comparison_w=w(m, 2 * n),
        comparison_b=np.zeros(m),
        softmax_w=w(config.num_classes, m),
        softmax_b=np.zeros(config.num_classes),
    )
    if config.use_transform:
        params.transform_w = w(n, n)
        params.transform_b = np.zeros(n)
    if config.comparison == "ntn":
        params.comparison_t = w(m, n, n)
    return params


def _nonlinearity(config: ModelConfig, z: np.ndarray) -> np.ndarray:
    if config.nonlinearity == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _nonlinearity_grad_from_output(config: ModelConfig, out: np.ndarray) -> np.ndarray:
    # Both supported activations have derivatives expressible in the output.
    if config.nonlinearity == "tanh":
        return 1.0 - out * out
    return (out > 0.0).astype(out.dtype)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _forward_pass(params: ModelParams, lefts: np.ndarray, rights: np.ndarray):
    """Run the pipeline for a batch, returning intermediates for backprop."""
    cfg = params.config
    if lefts.min(initial=0) < 0 or rights.min(initial=0) < 0:
        raise IndexError("negative term index")
    if (
        lefts.max(initial=-1) >= cfg.vocab_size
        or rights.max(initial=-1) >= cfg.vocab_size
    ):
        raise IndexError("term index out of vocabulary range")

    raw_l = params.embeddings[lefts]
    raw_r = params.embeddings[rights]
    if cfg.use_transform:
        v_l = _nonlinearity(cfg, raw_l @ params.transform_w.T + params.transform_b)
        v_r = _nonlinearity(cfg, raw_r @ params.transform_w.T + params.transform_b)
    else:
        v_l, v_r = raw_l, raw_r

    concat = np.concatenate([v_l, v_r], axis=1)
    pre_h = concat @ params.comparison_w.T + params.comparison_b
    if params.comparison_t is not None:
        pre_h = pre_h + np.einsum("bi,kij,bj->bk", v_l, params.comparison_t, v_r)
    h = _nonlinearity(cfg, pre_h)
    logits = h @ params.softmax_w.T + params.softmax_b
    return raw_l, raw_r, v_l, v_r, concat, h, logits


def forward_batch(
    params: ModelParams, lefts: np.ndarray, rights: np.ndarray
) -> np.ndarray:
    """Class probabilities for each pair; shape (batch, num_classes)."""
    lefts = np.atleast_1d(np.asarray(lefts, dtype=np.int64))
    rights = np.atleast_1d(np.asarray(rights, dtype=np.int64))
    *_, logits = _forward_pass(params, lefts, rights)
    return _softmax(logits)


def forward(params: ModelParams, left: int, right: int) -> np.ndarray:
    """Probability vector over classes for a single pair."""
    return forward_batch(params, np.array([left]), np.array([right]))[0]


def predict(params: ModelParams, left: int, right: int) -> tuple[int, np.ndarray]:
    """Most probable class index (ties break to the lowest index) plus probs."""
    probs = forward(params, left, right)
    return int(np.argmax(probs)), probs


def predict_batch(
    params: ModelParams, lefts: np.ndarray, rights: np.ndarray
) -> np.ndarray:
    return np.argmax(forward_batch(params, lefts, rights), axis=1)


def _as_example_array(examples) -> np.ndarray:
    arr = np.asarray(examples, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("examples must be (left, right, label) triples")
    if len(arr) == 0:
        raise ValueError("empty batch")
    return arr


def _l2_penalty(params: ModelParams, batch_rows: np.ndarray) -> float:
    l2 = params.config.l2_strength
    if l2 == 0.0:
        return 0.0
    arrays = params.arrays()
    total = sum(
        float(np.sum(arrays[name] ** 2))
        for name in ModelParams.L2_NAMES
        if name in arrays
    )
    total += float(np.sum(params.embeddings[batch_rows] ** 2))
    return 0.5 * l2 * total


def batch_loss(params: ModelParams, examples) -> float:
    """Mean negative log-likelihood of the true labels, plus the L2 penalty."""
    arr = _as_example_array(examples)
    lefts, rights, labels = arr[:, 0], arr[:, 1], arr[:, 2]
    *_, logits = _forward_pass(params, lefts, rights)
    logp = _log_softmax(logits)
    nll = -float(np.mean(logp[np.arange(len(arr)), labels]))
    batch_rows = np.unique(np.concatenate([lefts, rights]))
    return nll + _l2_penalty(params, batch_rows)


def backward(params: ModelParams, examples) -> dict[str, np.ndarray]:
    """Exact gradient of :func:`batch_loss`, keyed like ``params.arrays()``."""
    return loss_and_gradients(params, examples)[1]


def loss_and_gradients(
    params: ModelParams, examples
) -> tuple[float, dict[str, np.ndarray]]:
    """Batch loss and its exact gradient from a single forward pass."""
    cfg = params.config
    arr = _as_example_array(examples)
    lefts, rights, labels = arr[:, 0], arr[:, 1], arr[:, 2]
    batch = len(arr)
    l2 = cfg.l2_strength

    raw_l, raw_r, v_l, v_r, concat, h, logits = _forward_pass(params, lefts, rights)
    n = cfg.embed_dim

    logp = _log_softmax(logits)
    nll = -float(np.mean(logp[np.arange(batch), labels]))

    # Softmax + cross-entropy collapses to (p - onehot) / batch.
    delta = _softmax(logits)
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch

    grads: dict[str, np.ndarray] = {}
    grads["softmax_w"] = delta.T @ h + l2 * params.softmax_w
    grads["softmax_b"] = delta.sum(axis=0)

    d_h = delta @ params.softmax_w
    d_pre_h = d_h * _nonlinearity_grad_from_output(cfg, h)

    grads["comparison_w"] = d_pre_h.T @ concat + l2 * params.comparison_w
    grads["comparison_b"] = d_pre_h.sum(axis=0)

    d_concat = d_pre_h @ params.comparison_w
    d_v_l = d_concat[:, :n].copy()
    d_v_r = d_concat[:, n:].copy()

    if params.comparison_t is not None:
        T = params.comparison_t
        grads["comparison_t"] = np.einsum("bk,bi,bj->kij", d_pre_h, v_l, v_r) + l2 * T
        d_v_l += np.einsum("bk,kij,bj->bi", d_pre_h, T, v_r)
        d_v_r += np.einsum("bk,kij,bi->bj", d_pre_h, T, v_l)

    d_embed = np.zeros_like(params.embeddings)
    if cfg.use_transform:
        d_pre_l = d_v_l * _nonlinearity_grad_from_output(cfg, v_l)
        d_pre_r = d_v_r * _nonlinearity_grad_from_output(cfg, v_r)
        grads["transform_w"] = (
            d_pre_l.T @ raw_l + d_pre_r.T @ raw_r + l2 * params.transform_w
        )
        grads["transform_b"] = d_pre_l.sum(axis=0) + d_pre_r.sum(axis=0)
        np.add.at(d_embed, lefts, d_pre_l @ params.transform_w)
        np.add.at(d_embed, rights, d_pre_r @ params.transform_w)
    else:
        np.add.at(d_embed, lefts, d_v_l)
        np.add.at(d_embed, rights, d_v_r)

    batch_rows = np.unique(np.concatenate([lefts, rights]))
    d_embed[batch_rows] += l2 * params.embeddings[batch_rows]
    grads["embeddings"] = d_embed

    loss = nll + _l2_penalty(params, batch_rows)
    # Key order mirrors params.arrays() so consumers can zip them.
    ordered = {name: grads[name] for name in params.arrays()}
    return loss, ordered


def gradient_check(params: ModelParams, examples, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbs every single parameter, so keep the model small (a few thousand
    parameters).  The relative error for one parameter is
    ``|ga - gn| / max(|ga| + |gn|, 1e-8)``.
    """
    analytic = backward(params, examples)
    worst = 0.0
    for name, arr in params.arrays().items():
        flat = arr.reshape(-1)
        ga = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = batch_loss(params, examples)
            flat[i] = orig - epsilon
            down = batch_loss(params, examples)
            flat[i] = orig
            gn = (up - down) / (2.0 * epsilon)
            err = abs(ga[i] - gn) / max(abs(ga[i]) + abs(gn), 1e-8)
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# Checkpoint container: magic line, one-line JSON header (config + array
# manifest), then each array's raw little-endian float64 bytes in manifest
# order.  Deterministic, so save -> load -> save is byte-identical.


def save_checkpoint(path: str, params: ModelParams) -> None:
    arrays = params.arrays()
    header = {
        "config": asdict(params.config),
        "arrays": [
            {"name": name, "shape": list(arr.shape)} for name, arr in arrays.items()
        ],
    }
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for arr in arrays.values():
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> ModelParams:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        header = json.loads(f.readline().decode("utf-8"))
        config = ModelConfig(**header["config"])
        loaded: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = f.read(count * 8)
            if len(data) != count * 8:
                raise ValueError(f"{path}: truncated checkpoint")
            loaded[entry["name"]] = (
                np.frombuffer(data, dtype="<f8").reshape(shape).copy()
            )
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes after arrays")
    return ModelParams(
        config=config,
        embeddings=loaded["embeddings"],
        comparison_w=loaded["comparison_w"],
        comparison_b=loaded["comparison_b"],
        softmax_w=loaded["softmax_w"],
        softmax_b=loaded["softmax_b"],
        transform_w=loaded.get("transform_w"),
        transform_b=loaded.get("transform_b"),
        comparison_t=loaded.get("comparison_t"),
    )
