import glob
import json
import os

import pytest

from core.config import ExperimentConfig, load_config, parse_config
from core.errors import ConfigError

PRESET_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")


def _simulate(**overrides):
    data = {"experiment": "simulate", "problem": "ou_jump", "seed": 1, "settings": {"T": 1.0, "N": 100}}
    data.update(overrides)
    return data


def _field(data) -> str:
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    return info.value.field


def test_defaults_are_filled():
    config = parse_config(_simulate())
    assert config.settings["n_steps"] == 100
    assert config.settings["workers"] == 1
    assert config.settings["checkpoints"] is None
    assert config.checkpoints == [1.0]
    assert config.checks == {"max_aborted": None, "max_w1_oracle": None, "max_seconds": None}
    assert config.params["theta"] == 1.0


@pytest.mark.parametrize("data, field", [
    (_simulate(experiment="dance"), "experiment"),
    (_simulate(problem="nope"), "problem"),
    (_simulate(extra=1), "extra"),
    (_simulate(seed=-1), "seed"),
    (_simulate(seed=2**64), "seed"),
    (_simulate(seed=1.5), "seed"),
    (_simulate(settings={"N": 100}), "settings.T"),
    (_simulate(settings={"T": 1.0, "N": 1}), "settings.N"),
    (_simulate(settings={"T": 1.0, "N": 10.5}), "settings.N"),
    (_simulate(settings={"T": 1.0, "N": "many"}), "settings.N"),
    (_simulate(settings={"T": 0.0}), "settings.T"),
    (_simulate(settings={"T": 1.0, "s": 0.5}), "settings.s"),
    (_simulate(settings={"T": 1.0, "checkpoints": [0.5, 2.0]}), "settings.checkpoints[1]"),
    (_simulate(settings={"T": 1.0, "N": 10, "dump_paths": 11}), "settings.dump_paths"),
    (_simulate(checks={"max_w1": 0.1}), "checks.max_w1"),
    (_simulate(params={"thetta": 1.0}), "params.thetta"),
    (_simulate(sequence={"kind": "mollify", "n_values": [1]}), "sequence"),
])
def test_invalid_configs_name_the_field(data, field):
    assert _field(data) == field


def test_missing_top_level_keys():
    data = _simulate()
    del data["seed"]
    assert _field(data) == "seed"
    assert _field([1, 2]) == "<root>"


def test_fpe_experiments_need_a_discretisable_problem():
    data = {"experiment": "solve-fpe", "problem": "state_jump", "seed": 0, "settings": {"T": 1.0}}
    assert _field(data) == "problem"
    data = {"experiment": "defect", "problem": "ou_jump_2d", "seed": 0, "settings": {"T": 1.0, "s": 0, "t": 1}}
    assert _field(data) == "problem"


def test_defect_window():
    base = {"experiment": "defect", "problem": "ou_jump", "seed": 0}
    assert _field({**base, "settings": {"T": 1.0, "s": 0.5, "t": 0.5}}) == "settings.s"
    assert _field({**base, "settings": {"T": 1.0, "s": 0.5, "t": 2.0}}) == "settings.t"
    assert _field({**base, "settings": {"T": 1.0, "s": 0.0, "t": 1.0},
                   "checks": {"min_negative_detection": 0.5}}) == "checks.min_negative_detection"


def test_fpe_domain():
    data = {"experiment": "solve-fpe", "problem": "ou_jump", "seed": 0,
            "settings": {"T": 1.0, "x_min": 2.0, "x_max": 1.0}}
    assert _field(data) == "settings.x_max"


def test_limit_sequence_block():
    base = {"experiment": "limit", "problem": "rough_drift", "seed": 0, "settings": {"T": 1.0}}
    assert _field(base) == "sequence"
    assert _field({**base, "sequence": {"kind": "nope", "n_values": [1, 2]}}) == "sequence.kind"
    assert _field({**base, "sequence": {"kind": "mollify", "n_values": [2, 2]}}) == "sequence.n_values"
    assert _field({**base, "sequence": {"kind": "mollify"}}) == "sequence.n_values"
    config = parse_config({**base, "sequence": {"kind": "mollify", "n_values": [1, 2]}})
    assert config.sequence == {"kind": "mollify", "n_values": [1, 2], "n_nodes": 32}


def test_round_trip_through_to_dict():
    config = parse_config(_simulate(checks={"max_aborted": 0}, params={"theta": 2.0}), source="x.json")
    assert parse_config(json.loads(json.dumps(config.to_dict())), source="x.json") == config


def test_overrides():
    config = parse_config(_simulate())
    changed = config.with_overrides(seed=99, workers=4, output="out")
    assert (changed.seed, changed.settings["workers"], changed.output) == (99, 4, "out")
    assert config.seed == 1 and config.settings["workers"] == 1
    with pytest.raises(ConfigError) as info:
        config.with_overrides(workers=0)
    assert info.value.field == "--workers"
    with pytest.raises(ConfigError):
        config.with_overrides(seed=-3)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(str(tmp_path / "missing.json"))
    assert info.value.field == "<file>"
    broken = tmp_path / "broken.json"
    broken.write_text('{\n  "experiment": "simulate",\n  oops\n}', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(str(broken))
    assert info.value.field.startswith("line 3 column")


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(PRESET_DIR, "*.json"))))
def test_presets_are_valid(path):
    config = load_config(path)
    assert isinstance(config, ExperimentConfig)
    assert config.source == path
    assert os.path.basename(path).split("_")[0] in ("simulate", "solve", "superpose", "defect", "limit", "moment")
