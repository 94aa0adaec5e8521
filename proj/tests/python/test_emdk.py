import math

import numpy as np
import pytest

import emdk


def line(pairs):
    pairs = list(pairs)
    return emdk.PointSet(np.array([[x] for x, _ in pairs], dtype=float), [m for _, m in pairs])


def test_point_set_roundtrip():
    s = emdk.PointSet(np.array([[0.0, 1.0], [2.0, 3.0]]), [1.0, 2.0], id="a", label="c")
    assert len(s) == 2
    assert s.dimension == 2
    assert s.total_mass == 3.0
    assert s.label == "c"
    np.testing.assert_array_equal(s.points, [[0.0, 1.0], [2.0, 3.0]])


def test_bad_input_raises():
    with pytest.raises(ValueError):
        emdk.PointSet(np.array([[0.0]]), [-1.0])


def test_emd_and_one_dimensional_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = line(zip(rng.uniform(-3, 3, 4), rng.uniform(0.1, 1, 4)))
        b_pts = rng.uniform(-3, 3, 5)
        b_w = rng.uniform(0.1, 1, 5)
        b = line(zip(b_pts, b_w * a.total_mass / b_w.sum()))
        assert emdk.emd(a, b) == pytest.approx(emdk.emd_1d(a, b), rel=1e-9)


def test_discrete_emi_is_intersection():
    a = line([(0, 2), (1, 1)])
    b = line([(0, 1), (2, 3)])
    assert emdk.emi(a, b, ground="discrete", sink_flat=0.5) == pytest.approx(1.0)
    assert emdk.intersect(a, b).total_mass == 1.0
    assert emdk.jaccard(a, b) == pytest.approx(1 / 6)


def test_unbounded_sink_needs_configuration():
    a = line([(0, 1)])
    with pytest.raises(ValueError):
        emdk.emdhat(a, a)
    assert emdk.emdhat(a, line([(0, 3)]), threshold=2.0) == pytest.approx(4.0)


def test_transform_preserves_psd():
    rng = np.random.default_rng(0)
    f = rng.uniform(-1, 1, (6, 6))
    t = emdk.tanimoto(f.T @ f)
    assert emdk.diagnose(t)["is_psd"]
    assert np.allclose(np.diag(t), 1.0)
    assert emdk.tanimoto(np.array([[1.0, 0.5], [0.5, 1.0]]), n=2)[0, 1] == pytest.approx(0.2)


def test_pipeline_and_svm():
    sets = emdk.synthetic(classes=3, per_class=10, seed=4)
    d = emdk.pairwise(sets, {"threshold": 5.0})
    assert d.shape == (30, 30)
    assert np.allclose(d, d.T)
    assert emdk.diagnose(d)["is_cnd"] in (True, False)
    k = emdk.rbf(d, 1.0 / d[np.triu_indices(30, 1)].mean())
    labels = [s.label for s in sets]
    model = emdk.train_one_vs_all(k, labels, C=10.0)
    correct = sum(model.predict(k[i])[0] == labels[i] for i in range(30))
    assert correct == 30


def test_circle_transport():
    a = emdk.PointSet(np.array([[0.1], [3.0]]), [1.0, 1.0])
    b = emdk.PointSet(np.array([[6.0], [1.5]]), [1.0, 1.0])
    assert emdk.emd_circle(a, b) == pytest.approx(emdk.emd(a, b, ground="circle"), rel=1e-9)
    assert emdk.emd_circle(a, a) == pytest.approx(0.0, abs=1e-12)
    assert not math.isnan(emdk.emd_circle(a, b))
