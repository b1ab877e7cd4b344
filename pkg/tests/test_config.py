import json

import pytest

from stagespread import config
from stagespread.errors import ConfigError
from stagespread.kinetics import compute_L


def test_override_bare_number_becomes_constant():
    doc = config.apply_overrides(config.CANONICAL, ["tau=0.45"])
    assert doc["tau"] == {"const": 0.45}
    assert config.CANONICAL["tau"] == {"const": 0.4}


def test_override_nested_leaf_and_json_value():
    doc = config.apply_overrides(config.CANONICAL,
                                 ["birth.ricker.P=30", 'd_M={"harmonic": {"mean": 0.5}}'])
    assert doc["birth"]["ricker"]["P"] == 30
    assert doc["d_M"] == {"harmonic": {"mean": 0.5}}


def test_malformed_override():
    with pytest.raises(ConfigError):
        config.apply_overrides(config.CANONICAL, ["tau"])


def test_missing_key_is_config_error():
    doc = dict(config.CANONICAL)
    del doc["tau"]
    with pytest.raises(ConfigError, match="tau"):
        config.params_from_dict(doc)


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError):
        config.load_document(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        config.load_document(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        config.load_document(arr)


def test_round_trip(seasonal, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(config.params_to_dict(seasonal)))
    again = config.load_params(path)
    assert compute_L(again) == pytest.approx(compute_L(seasonal), rel=1e-14)


def test_canonical_amplitude_gives_threshold_two(canonical):
    # amplitude frozen from the closed form 2 (1 - k) / (k e^{d_M tau} e^{-d_I tau} 8 (b-a)/15)
    assert canonical.P == pytest.approx(22.45669534619993, rel=1e-12)
    assert compute_L(canonical) == pytest.approx(2.0, rel=1e-11)


def test_with_threshold(seasonal):
    p = config.with_threshold(seasonal, 1.2)
    assert compute_L(p) == pytest.approx(1.2, rel=1e-13)


def test_shipped_configs_parse(config_dir):
    for path in sorted(config_dir.glob("*.json")):
        p = config.load_params(path)
        assert p.report.ok, path.name
