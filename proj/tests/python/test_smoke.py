import json

import numpy as np
import pytest

import mfgat


def test_dft_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 64))
    np.testing.assert_allclose(mfgat.dft_magnitude(x), np.abs(np.fft.fft(x, axis=1)), atol=1e-9)


def test_windows_and_accuracy():
    assert mfgat.window_count(105000, 200, 50) == 2097
    assert len(mfgat.slide_window(list(range(300)), 200, 50)) == 3
    assert mfgat.accuracy_from_counts(40, 30, 20, 10) == pytest.approx(0.7)


def test_config_round_trip_and_errors():
    text = mfgat.default_config()
    assert mfgat.canonical_config(text) == text
    assert len(mfgat.config_hash(text)) == 16
    bad = json.loads(text)
    bad["hyper"]["dropout"] = 1.2
    with pytest.raises(mfgat.ConfigError, match="hyper.dropout"):
        mfgat.config_hash(json.dumps(bad))


def test_generate_train_evaluate(tmp_path):
    data = mfgat.generate(tsnr_db=10.0, seed=1, samples=30)
    assert data.sizes == (21, 6, 3)
    x, y = data.arrays("train")
    assert x.shape == (21, 9, 200) and set(y) <= {0, 1, 2}

    model = mfgat.build_model("mfgat", seed=1)
    probs = model.predict_proba(x)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    trained, report = mfgat.train(model, data, epochs=1, seed=1)
    assert len(report["history"]) == 1
    result = mfgat.evaluate(trained, data, "test")
    assert result["total"] == 3

    path = tmp_path / "ck.bin"
    trained.save(str(path))
    again = mfgat.load_checkpoint(str(path))
    np.testing.assert_array_equal(again.predict_proba(x), trained.predict_proba(x))


def test_variant_parameter_ordering():
    counts = {v: mfgat.build_model(v).parameter_count for v in ("sdfe", "stdfe", "mfgat")}
    assert counts["sdfe"] < counts["mfgat"] and counts["sdfe"] < counts["stdfe"]


def test_gradient_audit_runs():
    r = mfgat.gradient_audit("sdfe", seed=0, coords=2)
    assert r["coords_checked"] > 0 and np.isfinite(r["max_rel_error"])


def test_cli_exit_codes():
    code, _, err = mfgat.cli(["frobnicate"])
    assert code == 2 and err.startswith("error: code=2 kind=usage")
    code, out, _ = mfgat.cli(["--help"])
    assert code == 0 and "generate" in out
