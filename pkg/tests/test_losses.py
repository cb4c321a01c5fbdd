import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misa import tensor as T
from misa.config import CmdConfig, LossWeights
from misa.gradcheck import grad_check
from misa.losses import NumericalError, cmd, difference_loss, normalize_rows, reconstruction_loss, \
    similarity_loss, task_loss, total_loss
from misa.tensor import ShapeError, Tensor


def cmd_oracle(x, y, K):
    """Moment by moment, coordinate by coordinate, in float64."""
    x, y = np.asarray(x, np.float64), np.asarray(y, np.float64)
    d = x.shape[1]
    mx = [sum(x[:, c]) / len(x) for c in range(d)]
    my = [sum(y[:, c]) / len(y) for c in range(d)]
    total = math.sqrt(sum((mx[c] - my[c]) ** 2 for c in range(d)))
    for k in range(2, K + 1):
        sq = 0.0
        for c in range(d):
            ck_x = sum((v - mx[c]) ** k for v in x[:, c]) / len(x)
            ck_y = sum((v - my[c]) ** k for v in y[:, c]) / len(y)
            sq += (ck_x - ck_y) ** 2
        total += math.sqrt(sq)
    return total


def diff_oracle(pairs):
    """Sum over pairs of sum_{i,j} (col_i(A) . col_j(B))^2 after centering + row normalization."""

    def prep(h):
        h = np.array(h, np.float64)
        n, d = h.shape
        for c in range(d):
            mu = sum(h[:, c]) / n
            for r in range(n):
                h[r, c] -= mu
        for r in range(n):
            norm = math.sqrt(sum(v * v for v in h[r]))
            if norm > 0:
                h[r] /= norm
        return h

    total = 0.0
    for a, b in pairs:
        a, b = prep(a), prep(b)
        for i in range(a.shape[1]):
            for j in range(b.shape[1]):
                dot = sum(a[r, i] * b[r, j] for r in range(a.shape[0]))
                total += dot * dot
    return total


def test_cmd_identical_is_zero(rng):
    x = rng.uniform(size=(10, 4))
    assert float(cmd(x, x).data) == 0.0


def test_cmd_hand_example():
    assert abs(float(cmd([[0.0], [1.0]], [[0.5], [0.5]], CmdConfig(K=2)).data) - 0.25) < 1e-15


def test_cmd_default_order():
    assert CmdConfig().K == 5


def test_cmd_k1_is_mean_distance(rng):
    x, y = rng.uniform(size=(7, 3)), rng.uniform(size=(5, 3))
    expected = np.linalg.norm(x.mean(0) - y.mean(0))
    assert abs(float(cmd(x, y, CmdConfig(K=1)).data) - expected) < 1e-12


def test_cmd_matches_oracle_and_is_symmetric(rng):
    for K in range(1, 6):
        x, y = rng.uniform(size=(9, 4)), rng.uniform(size=(6, 4))
        value = float(cmd(x, y, CmdConfig(K=K)).data)
        assert abs(value - cmd_oracle(x, y, K)) < 1e-9
        assert value == float(cmd(y, x, CmdConfig(K=K)).data)
        assert value >= 0


def test_cmd_errors(rng):
    with pytest.raises(ShapeError):
        cmd(rng.uniform(size=(3, 2)), rng.uniform(size=(3, 3)))
    with pytest.raises(ValueError):
        cmd(np.array([[1.1]]), np.array([[0.5]]))
    cmd(np.array([[1.0 + 5e-7]]), np.array([[0.5]]))  # inside the tolerance


def test_cmd_unscaled_interval(rng):
    x, y = rng.uniform(size=(5, 2)) * 2, rng.uniform(size=(5, 2)) * 2
    cfg = CmdConfig(K=3, interval=(0.0, 2.0), scale_by_interval=False)
    assert abs(float(cmd(x, y, cfg).data) - cmd_oracle(x, y, 3)) < 1e-9


def test_similarity_identical_is_zero(rng):
    h = rng.uniform(size=(6, 3))
    assert float(similarity_loss({m: Tensor(h) for m in "lva"}).data) == 0.0


def test_similarity_two_identical_one_distinct(rng):
    h, g = rng.uniform(size=(6, 3)), rng.uniform(size=(6, 3))
    value = float(similarity_loss({"l": Tensor(h), "v": Tensor(h), "a": Tensor(g)}).data)
    pairwise = (cmd_oracle(h, g, 5) + cmd_oracle(h, g, 5) + 0.0) / 3
    assert abs(value - pairwise) < 1e-9


def test_similarity_is_permutation_invariant(rng):
    hs = [rng.uniform(size=(6, 3)) for _ in range(3)]
    a = float(similarity_loss(dict(zip("lva", map(Tensor, hs)))).data)
    b = float(similarity_loss(dict(zip("avl", map(Tensor, hs)))).data)
    assert abs(a - b) < 1e-12


def test_difference_constant_private_contributes_nothing(rng):
    shared = {m: Tensor(rng.normal(size=(5, 3))) for m in "lva"}
    private = {m: Tensor(np.tile(rng.normal(size=3), (5, 1))) for m in "lva"}
    assert float(difference_loss(shared, private).data) == 0.0


def test_difference_hand_example():
    hc = [[1.0, 0.0], [-1.0, 0.0]]
    hp = [[0.0, 1.0], [0.0, -1.0]]
    value = float(difference_loss({"l": Tensor(hc)}, {"l": Tensor(hp)}).data)
    # H^cT H^p = [[0, 2], [0, 0]]
    assert value == 4.0 == diff_oracle([(hc, hp)])


def test_difference_matches_oracle(rng):
    shared = {m: rng.normal(size=(6, 4)) for m in "lva"}
    private = {m: rng.normal(size=(6, 4)) for m in "lva"}
    pairs = [(shared[m], private[m]) for m in "lva"] + [(private["l"], private["v"]), (private["l"], private["a"]),
                                                       (private["v"], private["a"])]
    value = float(difference_loss({m: Tensor(v) for m, v in shared.items()},
                                  {m: Tensor(v) for m, v in private.items()}).data)
    assert abs(value - diff_oracle(pairs)) < 1e-7


def test_difference_row_permutation_invariant(rng):
    shared = {m: rng.normal(size=(6, 4)) for m in "lva"}
    private = {m: rng.normal(size=(6, 4)) for m in "lva"}
    perm = rng.permutation(6)
    a = float(difference_loss({m: Tensor(v) for m, v in shared.items()}, {m: Tensor(v) for m, v in private.items()}).data)
    b = float(difference_loss({m: Tensor(v[perm]) for m, v in shared.items()},
                              {m: Tensor(v[perm]) for m, v in private.items()}).data)
    assert abs(a - b) < 1e-9


def test_difference_batch_of_one_warns():
    with pytest.warns(UserWarning):
        value = difference_loss({"l": Tensor(np.ones((1, 3)))}, {"l": Tensor(np.ones((1, 3)))})
    assert float(value.data) == 0.0


def test_normalize_rows_keeps_zero_rows(rng):
    h = rng.normal(size=(4, 3))
    h[3] = h[:3].mean(axis=0)  # equals the column means, so it centers to zero
    out = normalize_rows(Tensor(h)).data
    np.testing.assert_allclose(out[3], 0, atol=1e-12)
    np.testing.assert_array_equal(normalize_rows(Tensor(np.zeros((3, 4)))).data, 0)
    norms = np.linalg.norm(normalize_rows(Tensor(rng.normal(size=(5, 3)))).data, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_reconstruction_perfect_and_hand_example(rng):
    u = {m: Tensor(rng.normal(size=(3, 4))) for m in "lva"}
    assert float(reconstruction_loss(u, u, 4).data) == 0.0
    one = {m: Tensor(np.array([[1.0, 0, 0, 0]])) for m in "lva"}
    zero = {m: Tensor(np.zeros((1, 4))) for m in "lva"}
    assert abs(float(reconstruction_loss(one, zero, 4).data) - 0.25) < 1e-15


def test_reconstruction_shape_mismatch():
    with pytest.raises(ShapeError):
        reconstruction_loss({"l": Tensor(np.zeros((2, 4)))}, {"l": Tensor(np.zeros((2, 3)))}, 4)


def test_task_losses():
    assert float(task_loss(Tensor([[0.5]]), np.array([1.0]), "regression").data) == 0.25
    assert float(task_loss(Tensor([[0.3], [0.1]]), np.array([0.3, 0.1]), "regression").data) == 0.0
    ce = float(task_loss(Tensor([[0.0, 0.0]]), np.array([0]), "classification").data)
    assert abs(ce - math.log(2)) < 1e-7
    with pytest.raises(ValueError):
        task_loss(Tensor([[0.0, 0.0]]), np.array([2]), "classification")


def test_total_loss_arithmetic():
    parts = {k: Tensor(np.float64(v)) for k, v in zip(("task", "sim", "diff", "recon"), (1, 2, 3, 4))}
    report = total_loss(parts, LossWeights(0.5, 0.5, 0.5))
    assert report.total == 5.5
    assert report.total == report.task + 0.5 * report.sim + 0.5 * report.diff + 0.5 * report.recon


def test_total_loss_zero_weights_and_missing_components():
    parts = {k: Tensor(np.float64(v)) for k, v in zip(("task", "sim", "diff", "recon"), (1.5, 2, 3, 4))}
    assert total_loss(parts, LossWeights(0, 0, 0)).total == 1.5
    report = total_loss({"task": Tensor(np.float64(0.7))}, LossWeights())
    assert (report.sim, report.diff, report.recon) == (0.0, 0.0, 0.0)
    assert report.total == 0.7


def test_mosi_default_weights():
    w = LossWeights()
    assert (w.alpha, w.beta, w.gamma) == (1.0, 0.3, 1.0)


def test_total_loss_names_non_finite_component():
    parts = {"task": Tensor(np.float64(1.0)), "diff": Tensor(np.float64(np.nan))}
    with pytest.raises(NumericalError, match="diff"):
        total_loss(parts, LossWeights())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_losses_are_non_negative(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(size=(4, 3)), rng.uniform(size=(5, 3))
    assert float(cmd(x, y).data) >= 0
    u = {"l": Tensor(rng.normal(size=(4, 3)))}
    r = {"l": Tensor(rng.normal(size=(4, 3)))}
    assert float(reconstruction_loss(u, r, 3).data) >= 0
    assert float(task_loss(Tensor(rng.normal(size=(4, 3))), rng.integers(0, 3, 4), "classification").data) >= 0


def test_loss_gradients(rng):
    hs = {m: Tensor(rng.uniform(0.1, 0.9, size=(5, 3)), requires_grad=True) for m in "lva"}
    hp = {m: Tensor(rng.normal(size=(5, 3)), requires_grad=True) for m in "lva"}

    def f():
        return similarity_loss(hs) + difference_loss(hs, hp) + reconstruction_loss(hs, hp, 3)

    params = {f"hc_{m}": t for m, t in hs.items()} | {f"hp_{m}": t for m, t in hp.items()}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        report = grad_check(f, params)
    assert report.passed, str(report)
