import numpy as np
import pytest

import fieldseg


def two_tone(n=16):
    img = np.zeros((n, n), dtype=np.uint8)
    img[:, n // 2 :] = 255
    return img


def test_criticality():
    r = fieldseg.criticality(2)
    assert (r["K_c"], r["m_c"], r["R_c"]) == (2, 1, 1)
    assert fieldseg.criticality(16)["m_c"] == 4
    assert fieldseg.default_m(16, 16) == 16
    with pytest.raises(fieldseg.FieldsegError):
        fieldseg.criticality(1)


def test_segment_single_bump():
    img = np.zeros((3, 3), dtype=np.uint8)
    img[1, 1] = 200
    out = fieldseg.segment(img, epsilon=256, m_c=2)
    assert out["equilibrium"].shape == (3, 3)
    assert out["mask"].dtype == np.uint8
    assert out["mask"].sum() == 1
    assert [p["box"] for p in out["proposals"]] == [(1, 1, 1, 1)]


def test_compress_round_trip():
    rng = np.random.default_rng(5)
    img = rng.integers(0, 256, size=(40, 33), dtype=np.uint8)
    a = fieldseg.compress(img, m_c=2, seed=1)
    b = fieldseg.compress(img, m_c=2, seed=2)
    ra = fieldseg.reconstruct(a)
    assert ra.shape == img.shape
    assert np.array_equal(ra, fieldseg.reconstruct(b))
    # Stored boundary pixels survive exactly.
    rows, cols = np.indices(img.shape)
    stored = (rows % 3 == 2) | (cols % 3 == 2)
    assert np.array_equal(ra[stored], img[stored])
    with pytest.raises(fieldseg.FieldsegError):
        fieldseg.reconstruct(a[:10])


def test_stats():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    assert fieldseg.kl_divergence(img, img) == 0.0
    assert fieldseg.kl_divergence(img, two_tone(32)) > 0.0
    w_norm, n, sub = fieldseg.shapiro_wilk(rng.normal(size=50))
    w_exp, _, _ = fieldseg.shapiro_wilk(rng.exponential(size=50))
    assert n == 50 and not sub
    assert w_norm > w_exp
    x = rng.normal(size=200)
    assert abs(fieldseg.shapiro_wilk(x)[0] - fieldseg.shapiro_wilk(3.0 * x + 7.0)[0]) < 1e-10


def test_sweep_and_anneal():
    n = 48
    rows, cols = np.indices((n, n))
    img = (128 + 90 * np.sin(rows * 0.15) * np.cos(cols * 0.1)).astype(np.uint8)
    table = fieldseg.sweep(img, [70, 80, 90], m_c=2)
    assert [r[0] for r in table] == [70, 80, 90]
    assert all(r[1] >= 0.0 and 0.0 < r[2] <= 1.0 for r in table)
    with pytest.raises(fieldseg.FieldsegError):
        fieldseg.sweep(img, [0])

    res = fieldseg.anneal(two_tone(), seed=3)
    assert res["energy_trace"][-1] <= res["energy_trace"][0]
    assert len(res["energy_trace"]) == res["stops"] + 1
    again = fieldseg.anneal(two_tone(), seed=3)
    assert res["energy_trace"] == again["energy_trace"]
    assert np.array_equal(res["smoothed"], again["smoothed"])
