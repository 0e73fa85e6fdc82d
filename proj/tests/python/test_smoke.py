import math

import numpy as np
import pytest

import risnoma


def test_param_count():
    assert risnoma.param_count() == 8201
    assert risnoma.init_params(seed=1).count == 8201


def test_worked_example():
    h1 = np.array([2.0, 0.0], dtype=complex)
    h2 = np.array([math.sqrt(0.8), math.sqrt(0.2)], dtype=complex)
    s = risnoma.optimal_precoding(h1, h2, risnoma.SinrTargets(1.0, 1.0, 1.0))
    assert s["is_qd"]
    assert s["q"] == pytest.approx(1.94444444, abs=1e-6)
    assert s["power"] == pytest.approx(17.0 / 12.0, rel=1e-12)
    assert s["s21"] == pytest.approx(1.8223, abs=1e-4)
    assert np.linalg.norm(s["w1"]) ** 2 + np.linalg.norm(s["w2"]) ** 2 == pytest.approx(s["power"])


def test_not_quasi_degraded_raises():
    h1 = np.array([1.0, 0.0], dtype=complex)
    h2 = np.array([0.0, 1.0], dtype=complex)
    with pytest.raises(risnoma.Error):
        risnoma.optimal_precoding(h1, h2)


def test_dataset_round_trip(tmp_path):
    d = risnoma.generate_dataset(6, 3, ris_elements=16, bs_antennas=4)
    assert (len(d), d.bs_antennas, d.ris_elements, d.seed) == (6, 4, 16, 3)
    assert d.features(0).shape == (8, 16)
    path = str(tmp_path / "d.rnds")
    risnoma.write_dataset(d, path)
    assert risnoma.read_dataset(path) == d
    assert d == risnoma.generate_dataset(6, 3, ris_elements=16, bs_antennas=4)


def test_bad_inputs():
    with pytest.raises(risnoma.UsageError):
        risnoma.generate_dataset(2, 1, no_such_key=3)
    with pytest.raises(risnoma.IoError):
        risnoma.read_dataset("/nonexistent/file.rnds")


def test_forward_permutes_with_columns():
    p = risnoma.init_params(seed=4)
    gamma = np.random.default_rng(0).uniform(-2, 2, size=(8, 5))
    phases = np.array(p.forward(gamma))
    perm = [3, 0, 4, 1, 2]
    assert np.allclose(np.array(p.forward(gamma[:, perm])), phases[perm], atol=1e-12)
    assert (phases >= 0).all()


def test_train_evaluate_baseline(tmp_path):
    d = risnoma.generate_dataset(24, 5, ris_elements=8, bs_antennas=2)
    params, history = risnoma.train(d.head(16), iterations=5, batch_size=4, learning_rate=1e-3, seed=2)
    assert len(history) == 5
    assert history[0]["iteration"] == 1
    again, _ = risnoma.train(d.head(16), iterations=5, batch_size=4, learning_rate=1e-3, seed=2)
    assert again == params

    path = str(tmp_path / "p.rnck")
    risnoma.write_checkpoint(params, path)
    assert risnoma.read_checkpoint(path) == params

    test = d.slice(16, 8)
    report = risnoma.evaluate(params, test)
    assert len(report["power"]) == 8
    assert 0.0 <= report["qd_percentage"] <= 100.0
    base = risnoma.evaluate_baseline(test, 4, 1)
    assert base["trial_count"] == 4
