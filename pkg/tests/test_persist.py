import json

import numpy as np
import pytest

from kmetamodes.ensemble import EnsembleConfig, fit_ensemble
from kmetamodes.errors import ModelError
from kmetamodes.model import Metamode, Mode
from kmetamodes.persist import VERSION, KMetamodesModel, load_model, model_to_dict, save_model
from kmetamodes.scoring import score_records
from kmetamodes.synthetic import planted_outliers


def _small_model():
    modes = [Mode(({0: 2}, {1: 2}), 2, 0), Mode(({1: 1, 2: 2}, {1: 3}), 3, 1)]
    metamodes = [Metamode(({0: 2}, {1: 2}), 2, 0), Metamode(({1: 1, 2: 2}, {1: 3}), 3, 1)]
    return KMetamodesModel(modes, metamodes, {0: 0, 1: 1}, "frequency", "meta_frequency",
                           params={"k": 2}, schema_digest="abc", cardinalities=[4, 3],
                           record_modes=np.array([0, 0, 1, 1, 1]))


def test_two_metamode_round_trip(tmp_path):
    m = _small_model()
    save_model(m, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == m


def test_truncated_file(tmp_path):
    save_model(_small_model(), tmp_path / "m.json")
    text = (tmp_path / "m.json").read_text()
    (tmp_path / "cut.json").write_text(text[: len(text) // 2])
    with pytest.raises(ModelError, match="truncated"):
        load_model(tmp_path / "cut.json")


def test_version_mismatch_names_both_versions(tmp_path):
    d = model_to_dict(_small_model())
    d["version"] = VERSION + 1
    (tmp_path / "v.json").write_text(json.dumps(d))
    with pytest.raises(ModelError) as err:
        load_model(tmp_path / "v.json")
    assert str(VERSION + 1) in str(err.value) and str(VERSION) in str(err.value)


def test_missing_and_foreign_files(tmp_path):
    with pytest.raises(ModelError):
        load_model(tmp_path / "absent.json")
    (tmp_path / "other.json").write_text(json.dumps({"hello": 1}))
    with pytest.raises(ModelError):
        load_model(tmp_path / "other.json")
    d = model_to_dict(_small_model())
    del d["modes"]
    (tmp_path / "broken.json").write_text(json.dumps(d))
    with pytest.raises(ModelError, match="malformed"):
        load_model(tmp_path / "broken.json")


@pytest.mark.parametrize("variant", ["record_to_metamodes", "mode_to_metamodes"])
def test_reloaded_model_scores_identically(tmp_path, variant):
    x, y = planted_outliers(n=2000, m=6, seed=8)
    cfg = EnsembleConfig(sample_size=500, k=6, k_meta=4, seed=13)
    model = KMetamodesModel.from_result(fit_ensemble(x, cfg), cfg)
    save_model(model, tmp_path / "m.json")
    again = load_model(tmp_path / "m.json")
    assert again == model
    a = score_records(x, model, variant, labels=y).scores
    b = score_records(x, again, variant, labels=y).scores
    np.testing.assert_array_equal(a, b)


def test_partial_sampling_model_has_no_record_map():
    x, _ = planted_outliers(n=2000, m=6, seed=8)
    cfg = EnsembleConfig(sample_size=500, num_samples=2, k=6, k_meta=4)
    assert KMetamodesModel.from_result(fit_ensemble(x, cfg), cfg).record_modes is None
