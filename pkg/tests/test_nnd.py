import json

import numpy as np
import pytest

from bioseal import bch, nnd
from reference_bp import sum_product_bp


def _random_graph(rng, r, n, density=0.45):
    h = (rng.random((r, n)) < density).astype(np.uint8)
    h[h.sum(axis=1) == 0, 0] = 1          # no empty checks
    empty_vars = h.sum(axis=0) == 0
    h[0, empty_vars] = 1                  # no isolated variables
    return h


def test_build_tanner_single_parity_check():
    g = nnd.TannerGraph.from_parity_check(np.array([[1, 1, 1]], dtype=np.uint8))
    assert g.num_edges == 3
    assert g.r == 1 and g.n == 3


def test_build_tanner_edge_count_matches_nonzeros(bch15):
    g = nnd.build_tanner(bch15)
    assert g.num_edges == int(bch15.parity_check.sum())
    assert g.n == 15 and g.r == 8


def test_every_variable_covered(bch15, bch63):
    for code in (bch15, bch63):
        g = nnd.build_tanner(code)
        degrees = np.bincount(g.edge_var, minlength=code.n)
        assert (degrees >= 1).all()


def test_llr_from_soft_fixtures():
    assert nnd.llr_from_soft(np.array([0.5]), 15.0)[0] == 0.0
    assert nnd.llr_from_soft(np.array([1.0]), 15.0)[0] == -15.0
    assert nnd.llr_from_soft(np.array([0.0]), 15.0)[0] == 15.0
    p = 1.0 / (1.0 + np.e)
    assert nnd.llr_from_soft(np.array([p]), 15.0)[0] == pytest.approx(1.0, abs=1e-12)


def test_llr_from_hard():
    llr = nnd.llr_from_hard(np.array([0, 1, 0]), 15.0)
    assert np.array_equal(llr, [15.0, -15.0, 15.0])


def test_weights_one_matches_reference(bch15, bch63):
    rng = np.random.default_rng(42)
    for code in (bch15, bch63):
        model = nnd.NndModel.from_code(code, iterations=5)
        for _ in range(20):
            llr = rng.uniform(-8, 8, size=code.n)
            ours = model.forward(llr)
            ref = sum_product_bp(code.parity_check.tolist(), llr.tolist(), 5)
            assert np.abs(ours - np.array(ref)).max() <= 1e-9
            assert np.array_equal(ours > 0.5, np.array(ref) > 0.5)


def test_strong_positive_llr_decides_zero(bch15):
    model = nnd.NndModel.from_code(bch15, iterations=5)
    out = model.forward(np.full(15, 15.0))
    assert (out < 0.5).all()


def test_single_parity_check_closed_form():
    g = nnd.TannerGraph.from_parity_check(np.array([[1, 1, 1]], dtype=np.uint8))
    model = nnd.NndModel(g, iterations=1)
    out = model.forward(np.array([2.0, 2.0, 2.0]))
    msg = 2.0 * np.arctanh(np.tanh(1.0) ** 2)
    expected = 1.0 / (1.0 + np.exp(2.0 + msg))
    assert out == pytest.approx([expected] * 3, abs=1e-12)


def test_output_strictly_inside_unit_interval(bch63):
    model = nnd.NndModel.from_code(bch63, iterations=5)
    rng = np.random.default_rng(0)
    out = model.forward(rng.uniform(-15, 15, size=(50, 63)))
    assert (out > 0.0).all() and (out < 1.0).all()


def test_bce_fixtures():
    n = 8
    assert nnd.bce_loss(np.full(n, 0.5), np.zeros(n)) == pytest.approx(np.log(2))
    y = np.array([1.0, 0.0])
    assert nnd.bce_loss(np.array([1.0, 0.0]), y) == pytest.approx(0.0, abs=1e-9)
    loss = nnd.bce_loss(np.array([0.9, 0.2]), y)
    assert loss == pytest.approx(-(np.log(0.9) + np.log(0.8)) / 2, abs=1e-12)


def test_backward_symmetry_on_spc():
    g = nnd.TannerGraph.from_parity_check(np.array([[1, 1, 1]], dtype=np.uint8))
    model = nnd.NndModel(g, iterations=2)
    llr = np.array([1.5, 1.5, 1.5])
    target = np.zeros(3)
    _, d_ew, d_ow, _ = model.gradients(llr, target)
    assert np.allclose(d_ew[:, 0], d_ew[:, 1])
    assert np.allclose(d_ew[:, 1], d_ew[:, 2])
    assert np.allclose(d_ow, d_ow[0])


def _finite_diff_check(model, llr, target, h=1e-5, tol=1e-4):
    loss, d_ew, d_ow, d_llr = model.gradients(llr, target)

    def loss_at():
        return nnd.bce_loss(model.forward(llr), target)

    worst = 0.0
    for arr, grad in ((model.edge_weights, d_ew), (model.output_weights, d_ow)):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            up = loss_at()
            arr[idx] = orig - h
            down = loss_at()
            arr[idx] = orig
            num = (up - down) / (2 * h)
            an = grad[idx]
            # the 1e-6 floor keeps FD roundoff noise on ~0 gradients from
            # registering as relative error
            worst = max(worst, abs(num - an) / max(abs(num), abs(an), 1e-6))
    assert worst <= tol, f"gradient mismatch {worst:.2e}"


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    for trial in range(20):
        h = _random_graph(rng, r=3 + trial % 3, n=7 + trial % 4)
        model = nnd.NndModel(nnd.TannerGraph.from_parity_check(h), iterations=2)
        model.edge_weights += 0.3 * rng.standard_normal(model.edge_weights.shape)
        model.output_weights += 0.3 * rng.standard_normal(model.output_weights.shape)
        llr = rng.uniform(-4, 4, size=h.shape[1])
        target = rng.integers(0, 2, size=h.shape[1]).astype(float)
        _finite_diff_check(model, llr, target)


def test_gradient_near_zero_at_confident_correct_outputs(bch15):
    model = nnd.NndModel.from_code(bch15, iterations=3)
    llr = nnd.llr_from_hard(np.zeros(15), 15.0)
    out = model.forward(llr)
    target = (out > 0.5).astype(float)
    _, d_ew, d_ow, _ = model.gradients(llr, target)
    assert np.abs(d_ew).max() < 1e-6
    assert np.abs(d_ow).max() < 1e-6


def test_train_reduces_loss_and_is_deterministic(bch15):
    rng = np.random.default_rng(5)
    messages = rng.integers(0, 2, size=(40, 7)).astype(np.uint8)
    words = np.stack([bch.encode(bch15, m) for m in messages]).astype(float)
    # soft observations: codeword bits nudged toward 0.5 with a few flips
    noise = rng.random(words.shape)
    soft = np.where(noise < 0.08, 1.0 - words, words)
    soft = np.clip(soft + 0.15 * rng.standard_normal(words.shape), 0.02, 0.98)

    cfg = nnd.NndTrainConfig(learning_rate=0.01, epochs=5, batch_size=8, seed=9)
    m1 = nnd.NndModel.from_code(bch15, iterations=3)
    base_loss = nnd.bce_loss(m1.forward(nnd.llr_from_soft(soft, m1.llr_clamp)), words)
    m1, hist1 = nnd.train(m1, soft, words, cfg)
    final_loss = nnd.bce_loss(m1.forward(nnd.llr_from_soft(soft, m1.llr_clamp)), words)
    assert final_loss < base_loss
    assert hist1[-1] < hist1[0]

    m2, hist2 = nnd.train(nnd.NndModel.from_code(bch15, iterations=3), soft, words, cfg)
    assert np.array_equal(m1.edge_weights, m2.edge_weights)
    assert np.array_equal(m1.output_weights, m2.output_weights)
    assert hist1 == hist2


def test_one_epoch_on_fixed_batch_reduces_batch_loss(bch15):
    rng = np.random.default_rng(6)
    messages = rng.integers(0, 2, size=(16, 7)).astype(np.uint8)
    words = np.stack([bch.encode(bch15, m) for m in messages]).astype(float)
    soft = np.clip(words + 0.3 * rng.standard_normal(words.shape), 0.05, 0.95)
    model = nnd.NndModel.from_code(bch15, iterations=3)
    llr = nnd.llr_from_soft(soft, model.llr_clamp)
    before = nnd.bce_loss(model.forward(llr), words)
    model, _ = nnd.train(model, soft, words,
                         nnd.NndTrainConfig(learning_rate=0.01, epochs=1,
                                            batch_size=16, seed=0))
    after = nnd.bce_loss(model.forward(llr), words)
    assert after < before


def test_train_lr_zero_keeps_weights(bch15):
    rng = np.random.default_rng(10)
    soft = rng.uniform(0.1, 0.9, size=(10, 15))
    words = np.zeros((10, 15))
    model = nnd.NndModel.from_code(bch15, iterations=2)
    before_e = model.edge_weights.copy()
    before_o = model.output_weights.copy()
    model, _ = nnd.train(model, soft, words,
                         nnd.NndTrainConfig(learning_rate=0.0, epochs=3, seed=1))
    assert np.array_equal(model.edge_weights, before_e)
    assert np.array_equal(model.output_weights, before_o)


def test_train_empty_dataset_rejected(bch15):
    model = nnd.NndModel.from_code(bch15)
    with pytest.raises(ValueError):
        nnd.train(model, np.empty((0, 15)), np.empty((0, 15)),
                  nnd.NndTrainConfig())


def test_decode_hard_all_low_gives_zero(bch15):
    model = nnd.NndModel.from_code(bch15, iterations=2)
    bits = nnd.decode_hard(model, np.full(15, 0.01))
    assert not bits.any()


def test_decode_hard_codeword_fixed_point(bch15):
    rng = np.random.default_rng(12)
    model = nnd.NndModel.from_code(bch15, iterations=5)
    for _ in range(20):
        c = bch.encode(bch15, rng.integers(0, 2, size=7).astype(np.uint8))
        soft = np.where(c == 1, 1.0 - 1e-9, 1e-9)
        assert np.array_equal(nnd.decode_hard(model, soft), c)


def test_decode_hard_single_flip_recovery(bch15):
    """Weights-one BP on codeword LLRs of magnitude 4 with one flipped
    sign; empirical oracle run observed 100/100 recoveries."""
    rng = np.random.default_rng(13)
    model = nnd.NndModel.from_code(bch15, iterations=5)
    hits = 0
    for _ in range(100):
        c = bch.encode(bch15, rng.integers(0, 2, size=7).astype(np.uint8))
        llr = (1.0 - 2.0 * c.astype(float)) * 4.0
        flip = rng.integers(0, 15)
        llr[flip] = -llr[flip]
        out = model.forward(llr)
        hits += np.array_equal((out > 0.5).astype(np.uint8), c)
    assert hits >= 95


def test_decode_hard_projection_step(bch15):
    rng = np.random.default_rng(14)
    model = nnd.NndModel.from_code(bch15, iterations=1)
    c = bch.encode(bch15, rng.integers(0, 2, size=7).astype(np.uint8))
    soft = np.where(c == 1, 0.93, 0.07)
    soft[2] = 0.5 + (0.1 if c[2] == 0 else -0.1)  # one weakly wrong bit
    projected = nnd.decode_hard(model, soft, project_code=bch15)
    res = bch.decode(bch15, projected)
    assert res.success and res.corrected == 0


def test_permutation_equivariance(bch15):
    rng = np.random.default_rng(15)
    perm = rng.permutation(15)
    h = bch15.parity_check
    model_a = nnd.NndModel(nnd.TannerGraph.from_parity_check(h), iterations=4)
    model_b = nnd.NndModel(nnd.TannerGraph.from_parity_check(h[:, perm]),
                           iterations=4)
    llr = rng.uniform(-6, 6, size=15)
    out_a = model_a.forward(llr)
    out_b = model_b.forward(llr[perm])
    assert np.allclose(out_a[perm], out_b, atol=1e-12)


def test_serialization_roundtrip(tmp_path, bch15):
    model = nnd.NndModel.from_code(bch15, iterations=3, llr_clamp=12.0)
    rng = np.random.default_rng(16)
    model.edge_weights += 0.1 * rng.standard_normal(model.edge_weights.shape)
    model.output_weights += 0.1 * rng.standard_normal(model.output_weights.shape)
    path = tmp_path / "nnd.json"
    model.save(path)
    again = nnd.NndModel.load(path)
    assert np.array_equal(again.edge_weights, model.edge_weights)
    assert np.array_equal(again.output_weights, model.output_weights)
    assert again.llr_clamp == 12.0
    llr = rng.uniform(-5, 5, size=15)
    assert np.array_equal(model.forward(llr), again.forward(llr))
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1


def test_serialization_requires_code_backing():
    g = nnd.TannerGraph.from_parity_check(np.array([[1, 1, 1]], dtype=np.uint8))
    with pytest.raises(ValueError):
        nnd.NndModel(g).to_json_dict()
