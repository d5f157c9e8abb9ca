"""Tests for strict configuration parsing."""

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from gridscan.config import (
    ArxMethod,
    EtfeMethod,
    ExperimentConfig,
    LpmMethod,
    SeqPertMethod,
    default_experiment_config,
    load_experiment_config,
    parse_band,
    parse_method,
    parse_method_spec,
)
from gridscan.errors import ConfigError, MissingInputError
from gridscan.grid import default_ladder_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_empty_config_uses_defaults():
    config = ExperimentConfig.from_dict({})
    assert config.n_samples == 10_000
    assert config.sample_period == 1e-4
    assert config.grid == default_ladder_config()
    assert [m.label for m in config.methods] == ["lpm_R4_l18"]
    assert [b.to_list() for b in config.bands] == [[0.0, 4000.0], [0.0, 2000.0]]
    assert config.injection.bandwidth_hz == 2000.0


@pytest.mark.parametrize(
    "data, path",
    [
        ({"durationS": 1.0}, "durationS"),
        ({"noise": {"class": 0.01}}, "noise.class"),
        ({"excitation": {"amplitude": "big"}}, "excitation.amplitude"),
        ({"methods": [{"lpm": {"R": 2, "window": 3}}]}, "methods[0].lpm.window"),
        ({"methods": [{"lpm": {"R": 2}}, {"arx": {"order": 0}}]}, "methods[1].arx.order"),
        ({"bands": [[0, 2000], [10]]}, "bands[1]"),
        ({"grid": {"port_shunt_capacitance": 0.05, "branches": [{"series_r": 0.1}]}}, "grid.branches[0].series_l_d"),
    ],
)
def test_errors_name_the_offending_field(data, path):
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict(data)
    assert excinfo.value.path == path
    assert excinfo.value.exit_code == 2


def test_record_length_must_be_even():
    with pytest.raises(ConfigError, match="even integer"):
        ExperimentConfig.from_dict({"duration_s": 0.0003, "Ts": 1e-4})
    with pytest.raises(ConfigError, match="even integer"):
        ExperimentConfig.from_dict({"duration_s": 0.00015, "Ts": 1e-4})


def test_band_above_nyquist_is_rejected():
    with pytest.raises(ConfigError, match="Nyquist"):
        ExperimentConfig.from_dict({"bands": [[0, 6000]]})


def test_amplitude_above_limit_is_rejected():
    with pytest.raises(ConfigError, match="limit"):
        ExperimentConfig.from_dict({"excitation": {"amplitude": 0.1}})


def test_unrealizable_grid_is_a_config_error():
    """An interior node without shunt elements fails when the grid is built."""
    branch = {"series_r": 0.01, "series_l_d": 0.1}
    grid = {"port_shunt_capacitance": 0.05, "branches": [branch, branch]}
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict({"grid": grid})
    assert excinfo.value.path == "grid"


def test_to_dict_round_trip():
    """The echoed config parses back to the same settings."""
    config = ExperimentConfig.from_dict(
        {
            "duration_s": 0.2,
            "methods": [{"lpm": {"R": 2, "symmetric": True}}, {"arx": {"order": 3}}, "etfe"],
            "injection": None,
            "noise": {"accuracy_class": 0.0},
        }
    )
    echoed = ExperimentConfig.from_dict(json.loads(json.dumps(config.to_dict())))
    assert echoed.to_dict() == config.to_dict()
    assert echoed.injection is None
    assert [m.label for m in echoed.methods] == ["lpm_R2_l10_sym", "arx_order3", "etfe"]


def test_parse_method_objects():
    assert parse_method({"lpm": {"R": 6}}) == LpmMethod(order=6)
    assert parse_method({"arx": {"order": 2}}) == ArxMethod(order=2)
    assert parse_method({"seqpert": None}) == SeqPertMethod(window="hamming")
    assert isinstance(parse_method("etfe"), EtfeMethod)
    with pytest.raises(ConfigError, match="exactly one"):
        parse_method({"lpm": {"R": 2}, "arx": {"order": 2}})
    with pytest.raises(ConfigError, match="unknown method"):
        parse_method({"fft": {}})
    with pytest.raises(ConfigError, match="window"):
        parse_method({"seqpert": {"window": "hann"}})


def test_parse_method_spec_strings():
    """Command-line specs coerce numbers and bare flags."""
    method = parse_method_spec("lpm:R=4,l=20,symmetric")
    assert method == LpmMethod(order=4, half_window=20, assume_symmetric=True)
    assert method.label == "lpm_R4_l20_sym"
    assert parse_method_spec("arx:order=8").label == "arx_order8"
    assert parse_method_spec("seqpert:window=rectangular").label == "seqpert_rectangular"
    assert parse_method_spec("etfe").label == "etfe"


def test_parse_method_spec_rejects_bad_options():
    with pytest.raises(ConfigError, match="foo"):
        parse_method_spec("lpm:R=4,foo=1")
    with pytest.raises(ConfigError, match="half_window"):
        parse_method_spec("lpm:R=4,l=5")


def test_parse_band():
    band = parse_band("100:2000")
    assert (band.f_min, band.f_max) == (100.0, 2000.0)
    for text in ("2000", "a:b", "2000:100"):
        with pytest.raises(ConfigError) as excinfo:
            parse_band(text)
        assert excinfo.value.path == "--band"


def test_shipped_default_matches_builtin_default():
    """configs/default.json describes the built-in comparison."""
    shipped = load_experiment_config(CONFIGS / "default.json")
    builtin = default_experiment_config()
    assert shipped.to_dict() == builtin.to_dict()
    assert [m.label for m in shipped.methods][:2] == ["lpm_R2_l10", "lpm_R4_l18"]
    assert shipped.methods[-1].label == "seqpert_hamming"


def test_grid_path_is_relative_to_the_config(tmp_path):
    (tmp_path / "net.json").write_text(json.dumps(default_ladder_config(asymmetric=False).model_dump(mode="json")))
    (tmp_path / "run.json").write_text(json.dumps({"grid": "net.json", "duration_s": 0.1}))
    config = load_experiment_config(tmp_path / "run.json")
    assert config.grid == default_ladder_config(asymmetric=False)
    assert config.n_samples == 1000


def test_load_errors(tmp_path):
    with pytest.raises(MissingInputError):
        load_experiment_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_experiment_config(tmp_path / "bad.json")
    (tmp_path / "grid_missing.json").write_text(json.dumps({"grid": "nowhere.json"}))
    with pytest.raises(MissingInputError):
        load_experiment_config(tmp_path / "grid_missing.json")


def test_unknown_key_in_grid_file_is_reported_with_its_path(tmp_path):
    grid = default_ladder_config().model_dump(mode="json")
    grid["branches"][1]["shunt_q"] = 1.0
    (tmp_path / "net.json").write_text(json.dumps(grid))
    (tmp_path / "run.json").write_text(json.dumps({"grid": "net.json"}))
    with pytest.raises(ConfigError) as excinfo:
        load_experiment_config(tmp_path / "run.json")
    assert excinfo.value.path == "grid.branches[1].shunt_q"


@pytest.mark.parametrize(
    "data, path",
    [
        ({"duration_s": True}, "duration_s"),
        ({"excitation": {"seed": "1"}}, "excitation.seed"),
        ({"methods": [{"lpm": {"R": 4, "symmetric": "yes"}}]}, "methods[0].lpm.symmetric"),
        ({"lpm_workers": 2.5}, "lpm_workers"),
    ],
)
def test_scalars_are_not_coerced(data, path):
    """Booleans, strings and fractional numbers never stand in for other scalar types."""
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict(data)
    assert excinfo.value.path == path


def test_integer_values_are_accepted_for_float_fields():
    config = ExperimentConfig.from_dict({"duration_s": 1, "noise": {"accuracy_class": 0}})
    assert config.duration_s == 1.0
    assert config.noise.accuracy_class == 0.0


def test_explicit_channel_seeds():
    config = ExperimentConfig.from_dict({"excitation": {"channel_seeds": [11, 12]}})
    assert config.excitation.channel_seeds == (11, 12)
    assert config.seeds()["excitation_channels"] == [11, 12]
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict({"excitation": {"channel_seeds": [11]}})
    assert excinfo.value.path.startswith("excitation.channel_seeds")


def test_method_object_with_two_kinds_names_the_list_entry():
    with pytest.raises(ConfigError, match="exactly one") as excinfo:
        ExperimentConfig.from_dict({"methods": ["etfe", {"lpm": {"R": 2}, "arx": {"order": 2}}]})
    assert excinfo.value.path == "methods[1]"


def test_configs_are_frozen():
    config = ExperimentConfig.from_dict({})
    with pytest.raises(ValidationError):
        config.duration_s = 2.0
