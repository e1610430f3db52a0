import numpy as np
import pytest

from neuroval import build_random_model, fit_encoding, fit_tos, sample_brain_dataset, sample_task_dataset
from neuroval.textio import (
    dump_bundle,
    load_encoding,
    load_model,
    load_predictor,
    parse_bundle,
    save_encoding,
    save_model,
    save_predictor,
)

from conftest import SMALL


def test_bundle_round_trip():
    header = {"kind": "demo", "note": "a: b: c"}
    mats = {"m1": np.array([[1.0, -2.5e-17], [3.0, 4.0]]), "v": np.array([0.1, 0.2, 0.3])}
    header2, mats2 = parse_bundle(dump_bundle(header, mats))
    assert header2["kind"] == "demo"
    assert header2["note"] == "a: b: c"
    assert np.array_equal(mats2["m1"], mats["m1"])
    assert np.array_equal(mats2["v"].ravel(), mats["v"])


def test_model_round_trip(tmp_path, small_params):
    path = tmp_path / "model.txt"
    save_model(path, small_params, provenance="seed=3")
    loaded = load_model(path)
    assert np.array_equal(loaded.latent_map, small_params.latent_map)
    assert np.array_equal(loaded.readout, small_params.readout)
    assert np.array_equal(loaded.task_vector, small_params.task_vector)
    assert loaded.label_noise_var == small_params.label_noise_var


def test_golden_stability(tmp_path, small_params):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    save_model(a, small_params)
    save_model(b, build_random_model(**SMALL))
    assert a.read_bytes() == b.read_bytes()


def test_encoding_round_trip(tmp_path, small_params):
    enc = fit_encoding(sample_brain_dataset(small_params, 200, seed=1), 5)
    path = tmp_path / "enc.txt"
    save_encoding(path, enc, provenance="hash=abc")
    loaded = load_encoding(path)
    assert np.array_equal(loaded.basis, enc.basis)
    assert np.array_equal(loaded.projector, enc.projector)


def test_predictor_round_trip(tmp_path, small_params):
    pred = fit_tos(sample_task_dataset(small_params, 60, seed=1), provenance="cfg=xyz seed=1")
    path = tmp_path / "pred.txt"
    save_predictor(path, pred)
    loaded = load_predictor(path)
    assert np.array_equal(loaded.coef, pred.coef)
    assert loaded.penalty == 0.0
    assert loaded.provenance == "cfg=xyz seed=1"


def test_kind_mismatch(tmp_path, small_params):
    path = tmp_path / "model.txt"
    save_model(path, small_params)
    with pytest.raises(ValueError):
        load_encoding(path)
