import math

import numpy as np
import pytest

from natlog.model import (
    ModelConfig,
    backward,
    batch_loss,
    forward,
    forward_batch,
    gradient_check,
    init_params,
    load_checkpoint,
    loss_and_gradients,
    predict,
    save_checkpoint,
)
from natlog.seeding import substream


def small_config(comparison="nn", use_transform=False, l2=0.0, classes=7):
    return ModelConfig(
        vocab_size=9,
        embed_dim=4,
        feature_dim=5,
        num_classes=classes,
        comparison=comparison,
        use_transform=use_transform,
        l2_strength=l2,
    )


def random_examples(rng, config, n=10):
    return np.stack(
        [
            rng.integers(0, config.vocab_size, size=n),
            rng.integers(0, config.vocab_size, size=n),
            rng.integers(0, config.num_classes, size=n),
        ],
        axis=1,
    )


def zeroed(params):
    for arr in params.arrays().values():
        arr[:] = 0.0
    return params


# ---------------------------------------------------------------------------
# forward


def test_forward_is_a_distribution():
    for seed in range(3):
        cfg = small_config("ntn")
        params = init_params(cfg, substream(seed, "p"))
        probs = forward_batch(params, np.arange(5), np.arange(5)[::-1])
        assert np.all(probs > 0)
        assert np.all(np.abs(probs.sum(axis=1) - 1.0) < 1e-12)


def test_zero_params_give_uniform_output():
    params = zeroed(init_params(small_config("ntn"), substream(0, "p")))
    probs = forward(params, 0, 1)
    assert np.allclose(probs, 1.0 / 7, atol=1e-15)


def test_ntn_with_zero_tensor_equals_nn():
    rng = substream(4, "p")
    nn = init_params(small_config("nn"), rng)
    ntn = init_params(small_config("ntn"), substream(5, "q"))
    ntn.embeddings[:] = nn.embeddings
    ntn.comparison_w[:] = nn.comparison_w
    ntn.comparison_b[:] = nn.comparison_b
    ntn.softmax_w[:] = nn.softmax_w
    ntn.softmax_b[:] = nn.softmax_b
    ntn.comparison_t[:] = 0.0
    lefts, rights = np.array([0, 3, 7]), np.array([2, 3, 1])
    assert np.array_equal(
        forward_batch(ntn, lefts, rights), forward_batch(nn, lefts, rights)
    )


def test_forward_rejects_out_of_range_indices():
    params = init_params(small_config(), substream(0, "p"))
    with pytest.raises(IndexError):
        forward(params, 9, 0)
    with pytest.raises(IndexError):
        forward(params, 0, -1)


def test_predict_argmax_and_tie_break():
    params = zeroed(init_params(small_config(), substream(0, "p")))
    label, probs = predict(params, 0, 1)
    assert label == 0  # uniform output ties break to the lowest index
    params.softmax_b[3] = 5.0
    label, probs = predict(params, 0, 1)
    assert label == 3
    assert np.array_equal(probs, forward(params, 0, 1))


# ---------------------------------------------------------------------------
# loss


def naive_batch_loss(params, examples):
    """Plain-Python reimplementation of the objective, as an oracle."""
    cfg = params.config
    n, m = cfg.embed_dim, cfg.feature_dim

    def transform(vec):
        if not cfg.use_transform:
            return list(vec)
        return [
            math.tanh(
                sum(params.transform_w[i][j] * vec[j] for j in range(n))
                + params.transform_b[i]
            )
            for i in range(n)
        ]

    total = 0.0
    for left, right, label in examples:
        vl = transform([float(x) for x in params.embeddings[left]])
        vr = transform([float(x) for x in params.embeddings[right]])
        concat = vl + vr
        feature = []
        for k in range(m):
            pre = (
                sum(params.comparison_w[k][t] * concat[t] for t in range(2 * n))
                + params.comparison_b[k]
            )
            if params.comparison_t is not None:
                pre += sum(
                    vl[i] * params.comparison_t[k][i][j] * vr[j]
                    for i in range(n)
                    for j in range(n)
                )
            feature.append(math.tanh(pre))
        logits = [
            sum(params.softmax_w[c][k] * feature[k] for k in range(m))
            + params.softmax_b[c]
            for c in range(cfg.num_classes)
        ]
        peak = max(logits)
        log_norm = peak + math.log(sum(math.exp(z - peak) for z in logits))
        total += -(logits[label] - log_norm)
    total /= len(examples)

    penalty = 0.0
    for name in ("transform_w", "comparison_w", "comparison_t", "softmax_w"):
        arr = getattr(params, name)
        if arr is not None:
            penalty += float(np.sum(arr**2))
    rows = {int(e[0]) for e in examples} | {int(e[1]) for e in examples}
    for row in rows:
        penalty += float(np.sum(params.embeddings[row] ** 2))
    return total + 0.5 * cfg.l2_strength * penalty


@pytest.mark.parametrize("comparison", ["nn", "ntn"])
@pytest.mark.parametrize("use_transform", [False, True])
def test_batch_loss_matches_naive_oracle(comparison, use_transform):
    cfg = small_config(comparison, use_transform, l2=1e-3)
    rng = substream(8, "loss", comparison, int(use_transform))
    params = init_params(cfg, rng)
    examples = random_examples(rng, cfg, n=7)
    assert batch_loss(params, examples) == pytest.approx(
        naive_batch_loss(params, examples), abs=1e-12
    )


def test_zero_params_loss_is_log_num_classes():
    params = zeroed(init_params(small_config("ntn"), substream(0, "p")))
    examples = np.array([[0, 1, 3], [2, 4, 6], [5, 5, 0]])
    assert batch_loss(params, examples) == pytest.approx(math.log(7), abs=1e-12)


def test_confident_correct_predictions_drive_loss_to_zero():
    params = zeroed(init_params(small_config("ntn", classes=3), substream(0, "p")))
    params.softmax_b[1] = 60.0
    examples = np.array([[0, 1, 1], [2, 3, 1]])
    assert batch_loss(params, examples) < 1e-12


def test_empty_batch_rejected():
    params = init_params(small_config(), substream(0, "p"))
    with pytest.raises(ValueError):
        batch_loss(params, np.zeros((0, 3), dtype=int))


def test_loss_and_gradients_consistent_with_parts():
    cfg = small_config("ntn", l2=1e-4)
    rng = substream(3, "lg")
    params = init_params(cfg, rng)
    examples = random_examples(rng, cfg)
    loss, grads = loss_and_gradients(params, examples)
    assert loss == pytest.approx(batch_loss(params, examples), abs=1e-12)
    alone = backward(params, examples)
    assert set(alone) == set(grads)
    for name in grads:
        assert np.array_equal(alone[name], grads[name])


# ---------------------------------------------------------------------------
# gradients


@pytest.mark.parametrize(
    "comparison,use_transform",
    [("nn", False), ("ntn", False), ("nn", True), ("ntn", True)],
)
def test_gradient_check_all_variants(comparison, use_transform):
    cfg = small_config(comparison, use_transform, l2=1e-2)
    rng = substream(1, "gc", comparison, int(use_transform))
    params = init_params(cfg, rng)
    # Scale past the tiny default init so no coordinate's gradient falls
    # into the finite-difference noise floor (~1e-7 at this epsilon).
    for arr in params.arrays().values():
        arr *= 8.0
    examples = random_examples(rng, cfg)
    assert gradient_check(params, examples, epsilon=1e-5) < 1e-4


def test_gradients_shape_congruent_with_params():
    cfg = small_config("ntn", use_transform=True)
    rng = substream(2, "shape")
    params = init_params(cfg, rng)
    grads = backward(params, random_examples(rng, cfg))
    arrays = params.arrays()
    assert list(grads) == list(arrays)
    for name, g in grads.items():
        assert g.shape == arrays[name].shape
        assert np.all(np.isfinite(g))


def test_absent_embedding_rows_get_zero_gradient():
    cfg = small_config("ntn", l2=1e-3)
    rng = substream(6, "sparse")
    params = init_params(cfg, rng)
    examples = np.array([[0, 1, 2], [1, 2, 4]])
    grads = backward(params, examples)
    used = {0, 1, 2}
    for row in range(cfg.vocab_size):
        if row not in used:
            assert np.all(grads["embeddings"][row] == 0.0)
        else:
            assert np.any(grads["embeddings"][row] != 0.0)


def test_duplicating_batch_leaves_gradients_unchanged():
    cfg = small_config("ntn", use_transform=True, l2=1e-3)
    rng = substream(7, "dup")
    params = init_params(cfg, rng)
    examples = random_examples(rng, cfg, n=6)
    doubled = np.concatenate([examples, examples], axis=0)
    g1 = backward(params, examples)
    g2 = backward(params, doubled)
    for name in g1:
        assert np.allclose(g1[name], g2[name], atol=1e-12)


# ---------------------------------------------------------------------------
# checkpointing


@pytest.mark.parametrize("comparison,use_transform", [("nn", False), ("ntn", True)])
def test_checkpoint_round_trip_byte_identical(tmp_path, comparison, use_transform):
    cfg = small_config(comparison, use_transform)
    params = init_params(cfg, substream(9, "ckpt"))
    first = tmp_path / "a.ckpt"
    second = tmp_path / "b.ckpt"
    save_checkpoint(first, params)
    loaded = load_checkpoint(first)
    save_checkpoint(second, loaded)
    assert first.read_bytes() == second.read_bytes()
    assert loaded.config == cfg
    for name, arr in params.arrays().items():
        assert np.array_equal(arr, loaded.arrays()[name])


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(ValueError):
        load_checkpoint(path)
