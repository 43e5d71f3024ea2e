import math

import numpy as np
import pytest

import tegcn


def micro_config(mode="both", relevance="feature-calculated", classes=3, bodies=1, frames=8, joints=4):
    return tegcn.model_config(
        num_classes=classes,
        frames=frames,
        bodies=bodies,
        graph="chain",
        joints=joints,
        kernel=3,
        heads=2,
        relevance=relevance,
        layers=[
            {"in": 3, "out": 4, "stride": 1, "mode": "tc-block"},
            {"in": 4, "out": 4, "stride": 1, "mode": mode},
        ],
    )


def test_chain_partitions():
    g = tegcn.chain_graph(3)
    raw = g["raw"]
    np.testing.assert_array_equal(raw[0], np.eye(3))
    np.testing.assert_array_equal(raw[1], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    np.testing.assert_array_equal(raw[2], [[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    np.testing.assert_array_equal(sum(raw), g["adjacency"] + np.eye(3))


def test_ntu_graph_is_complete():
    g = tegcn.ntu_graph()
    assert g["num_joints"] == 25 and g["center"] == 1
    np.testing.assert_array_equal(sum(g["raw"]), g["adjacency"] + np.eye(25))
    for m in g["normalized"]:
        assert (m.sum(axis=1) <= 1 + 1e-9).all()


def test_disconnected_graph_raises():
    with pytest.raises(tegcn.ConfigError):
        tegcn.build_partitions([(0, 1)], 3, 0)


def test_normalize_scores():
    z = tegcn.normalize_scores(np.zeros((1, 4, 4)))
    np.testing.assert_allclose(z, 0.25)
    r = tegcn.normalize_scores(np.array([[math.log(2.0), 0.0]]))
    np.testing.assert_allclose(r, [[2 / 3, 1 / 3]], atol=1e-15)
    s = np.random.default_rng(0).normal(size=(2, 5, 5))
    np.testing.assert_allclose(tegcn.normalize_scores(s + 7.5), tegcn.normalize_scores(s), atol=1e-12)


def test_schedule_and_fusion():
    assert [tegcn.lr_at(epoch=e) for e in (0, 40, 80, 120)] == [0.1, 0.01, 0.001, 0.0001]
    assert tegcn.lr_at(decay_epochs=[], epoch=500) == 0.1
    np.testing.assert_allclose(tegcn.fuse_streams([[0.6, 0.4], [0.2, 0.8]]), [0.4, 0.6], atol=1e-15)
    s = tegcn.softmax([0.3, -1.0, 2.0])
    np.testing.assert_allclose(tegcn.fuse_streams([s] * 4), s, atol=1e-12)
    with pytest.raises(tegcn.ConfigError):
        tegcn.fuse_streams([])


def test_synth_and_derivations():
    xs, labels = tegcn.synth_dataset("templates", classes=3, samples_per_class=2, joints=4, frames=8)
    assert len(xs) == 6 and sorted(set(labels)) == [0, 1, 2]
    assert xs[0].shape == (3, 8, 4, 1)
    bone = tegcn.derive_bone(xs[0], [(0, 1), (1, 2), (2, 3)], 4, 0)
    np.testing.assert_allclose(bone[:, :, 1:, :], xs[0][:, :, 1:, :] - xs[0][:, :, :-1, :])
    motion = tegcn.derive_motion(xs[0])
    np.testing.assert_allclose(motion[:, :-1], xs[0][:, 1:] - xs[0][:, :-1])
    assert (motion[:, -1] == 0).all()


def test_preprocess_skeleton_text():
    lines = ["3"]
    for t in range(3):
        lines += ["1", "body 0 0 0 0 0 0 0 0 2", "2", f"{0.5 * t} 1 2 0 0 0 0 0 0 0 0 2", "1 1 1 0 0 0 0 0 0 0 0 2"]
    data, valid = tegcn.preprocess_skeleton("\n".join(lines) + "\n", fixed_len=5, motion_lo=0.0, motion_hi=10.0,
                                            joints=2, spine_joint=1)
    assert data.shape == (3, 5, 2, 2) and valid == 3
    np.testing.assert_array_equal(data[:, 0, 1, 0], [0, 0, 0])
    assert (data[:, 3:] == 0).all()


def test_model_predict_and_transparency():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3, 8, 4))
    a = tegcn.Model(micro_config("tc-block"))
    b = tegcn.Model(micro_config("both"))
    np.testing.assert_array_equal(a.predict(x), b.predict(x))
    assert a.predict(x).shape == (2, 3)
    adj = b.adjacencies(x)
    assert adj[0] == [] and len(adj[1]) == 2
    np.testing.assert_allclose(adj[1][0].sum(axis=-1), 1.0, atol=1e-12)
    assert "layer2.tg.head0.Wt" in b.parameter_names()
    with pytest.raises(tegcn.ConfigError):
        b.predict(np.zeros((2, 3, 7, 4)))


def test_model_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    m = tegcn.Model(micro_config("both", "mixed"))
    m.set_parameter("layer2.tg.head1.Wt", rng.normal(size=(4, 4)))
    path = str(tmp_path / "model.ckpt")
    m.save(path)
    back = tegcn.Model.load(path)
    x = rng.normal(size=(2, 3, 8, 4))
    np.testing.assert_array_equal(back.predict(x), m.predict(x))
    assert back.config == m.config


def test_gradcheck():
    r = tegcn.gradcheck(micro_config("both", "mixed", frames=6), batch=2, seed=103)
    assert r["max_rel_error"] <= 1e-5
    assert r["coordinates"] > 0


def test_backbone_plan():
    layers = tegcn.backbone_layers()
    assert [l["out"] for l in layers] == [64, 64, 64, 64, 128, 128, 128, 256, 256]
    assert layers[-1]["mode"] == "both"
    cfg = tegcn.model_config(num_classes=60, frames=300, width_div=16)
    shapes = tegcn.Model(cfg).layer_shapes(1)
    assert shapes[-1] == (2, 16, 75, 25)


def test_train_on_synthetic_templates():
    xs, labels = tegcn.synth_dataset("templates", classes=3, samples_per_class=8, joints=4, frames=8, seed=4)
    m = tegcn.Model(micro_config("both"))
    hist = m.train(xs, labels, epochs=30, lr=0.05, batch_size=8)
    assert len(hist) == 30
    assert hist[-1]["train_loss"] < hist[0]["train_loss"]
    ev = m.evaluate(xs, labels)
    assert 0.0 <= ev["accuracy"] <= 1.0 and ev["total"] == 24
