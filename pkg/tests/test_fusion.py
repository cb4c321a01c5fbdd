import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misa import tensor as T
from misa.fusion import MultiHeadSelfAttention, fuse, mean_attention, scaled_dot_attention, stack_rows
from misa.gradcheck import grad_check
from misa.tensor import ShapeError, Tensor


def attention_oracle(q, k, v):
    """Scalar loops in float64."""
    r, d = len(q), len(q[0])
    out = [[0.0] * len(v[0]) for _ in range(r)]
    weights = []
    for i in range(r):
        logits = [sum(q[i][c] * k[j][c] for c in range(d)) / math.sqrt(d) for j in range(len(k))]
        top = max(logits)
        e = [math.exp(x - top) for x in logits]
        w = [x / sum(e) for x in e]
        weights.append(w)
        for j, wj in enumerate(w):
            for c in range(len(v[0])):
                out[i][c] += wj * v[j][c]
    return np.array(out), np.array(weights)


def test_identical_rows_give_uniform_weights():
    q = Tensor(np.ones((4, 3)))
    v = Tensor(np.arange(12.0).reshape(4, 3))
    out, w = scaled_dot_attention(q, q, v)
    np.testing.assert_allclose(w.data, 0.25)
    np.testing.assert_allclose(out.data, np.tile(v.data.mean(axis=0), (4, 1)))


def test_two_by_two_against_oracle():
    eye = np.eye(2)
    out, w = scaled_dot_attention(Tensor(eye), Tensor(eye), Tensor(eye))
    ref_out, ref_w = attention_oracle(eye.tolist(), eye.tolist(), eye.tolist())
    np.testing.assert_allclose(w.data, ref_w, rtol=0, atol=1e-12)
    np.testing.assert_allclose(out.data, ref_out, rtol=0, atol=1e-12)
    # scaled by sqrt(2): weight on the diagonal is e^(1/sqrt2) / (e^(1/sqrt2) + 1)
    diag = math.exp(1 / math.sqrt(2)) / (math.exp(1 / math.sqrt(2)) + 1)
    assert abs(w.data[0, 0] - diag) < 1e-12


def test_identity_projections_fixed_point():
    att = MultiHeadSelfAttention(3, 1, np.random.default_rng(0)).astype(np.float64)
    for name in ("w_query", "w_key", "w_value"):
        getattr(att, name).data = np.eye(3)[None]
    att.w_out.data = np.eye(3)
    row = np.array([0.3, -1.0, 2.0])
    out, _ = att(Tensor(np.tile(row, (1, 4, 1))))
    np.testing.assert_allclose(out.data[0], np.tile(row, (4, 1)), atol=1e-12)


def _per_head_oracle(att, m):
    outs = []
    for x in m:
        heads = []
        for i in range(att.n_heads):
            q = x @ att.w_query.data[i]
            k = x @ att.w_key.data[i]
            v = x @ att.w_value.data[i]
            heads.append(attention_oracle(q.tolist(), k.tolist(), v.tolist())[0])
        outs.append(np.concatenate(heads, axis=1) @ att.w_out.data)
    return np.array(outs)


def test_random_6x8_two_heads_matches_oracle(rng):
    att = MultiHeadSelfAttention(8, 2, rng)
    m = rng.normal(size=(2, 6, 8)).astype(np.float32)
    out, _ = att(Tensor(m))
    ref = _per_head_oracle(att, m.astype(np.float64))
    np.testing.assert_allclose(out.data, ref, rtol=0, atol=1e-5)


def test_wrong_output_projection_shape(rng):
    att = MultiHeadSelfAttention(4, 2, rng)
    att.w_out.data = np.zeros((4, 4), np.float32)
    with pytest.raises(ShapeError):
        att(Tensor(np.zeros((1, 6, 4), np.float32)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(2, 6))
def test_rows_sum_to_one_and_equivariance(seed, heads, rows):
    rng = np.random.default_rng(seed)
    att = MultiHeadSelfAttention(5, heads, rng).astype(np.float64)
    m = rng.normal(size=(2, rows, 5))
    perm = rng.permutation(rows)
    out, w = att(Tensor(m))
    assert np.all(w.data >= 0)
    np.testing.assert_allclose(w.data.sum(axis=-1), 1.0, atol=1e-6)
    out_p, _ = att(Tensor(m[:, perm]))
    np.testing.assert_allclose(out_p.data, out.data[:, perm], atol=1e-6)


def test_fuse_lengths_and_round_trip(rng):
    m = Tensor(rng.normal(size=(2, 6, 128)))
    joint = fuse(m)
    assert joint.shape == (2, 768)
    chunks = np.split(joint.data, 6, axis=1)
    for i, c in enumerate(chunks):
        assert c.tobytes() == np.ascontiguousarray(m.data[:, i]).tobytes()
    assert fuse(Tensor(np.zeros((1, 3, 128)))).shape == (1, 384)


def test_stack_rows_order(rng):
    vecs = [Tensor(rng.normal(size=(2, 3))) for _ in range(6)]
    m = stack_rows(vecs)
    for i, v in enumerate(vecs):
        np.testing.assert_array_equal(m.data[:, i], v.data)


def test_mean_attention_rows_sum_to_one(rng):
    att = MultiHeadSelfAttention(4, 3, rng)
    _, w = att(Tensor(rng.normal(size=(5, 6, 4)).astype(np.float32)))
    avg = mean_attention(w.data)
    assert avg.shape == (5, 6, 6)
    np.testing.assert_allclose(avg.sum(axis=-1), 1.0, atol=1e-6)


def test_attention_grad_check(rng):
    att = MultiHeadSelfAttention(4, 2, rng).astype(np.float64)
    m = rng.normal(size=(2, 6, 4))
    report = grad_check(lambda: T.frobenius_sq(att(Tensor(m))[0]), dict(att.named_parameters()))
    assert report.passed, str(report)
