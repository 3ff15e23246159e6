import json

import pytest

from t2t.config import RunConfig, TrainingConfig, apply_overrides
from t2t.exceptions import ConfigError


def test_defaults_are_valid():
    config = RunConfig().validate()
    assert config.training.m == 1 and config.training.g == 1
    assert config.training.lr == 0.001
    assert config.training.batch_size == 64
    assert config.model.embed_dim == 64
    assert config.seed == 0


def test_overrides_parse_json_values():
    config = apply_overrides(RunConfig(), ["training.m=3", "training.lr=0.01", "paths.train=data/train.jsonl",
                                           "pipeline.delexicalize=false"])
    assert config.training.m == 3
    assert config.training.lr == 0.01
    assert config.paths.train == "data/train.jsonl"
    assert config.pipeline.delexicalize is False


@pytest.mark.parametrize("assignment, field", [
    ("training.m=0", "training.m"),
    ("training.g=-1", "training.g"),
    ("training.lr=0", "training.lr"),
    ("training.grad_estimator=\"reinforce\"", "training.grad_estimator"),
    ("eval.decode=\"beam\"", "eval.decode"),
    ("model.hidden_dim=0", "model.hidden_dim"),
    ("training.flavour=1", "training.flavour"),
    ("optimizer.lr=1", "optimizer"),
])
def test_invalid_overrides_name_the_field(assignment, field):
    with pytest.raises(ConfigError) as err:
        apply_overrides(RunConfig(), [assignment])
    assert err.value.field == field


def test_malformed_override():
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), ["training"])


def test_booleans_are_not_counts():
    with pytest.raises(ConfigError):
        TrainingConfig(m=True).validate()


def test_save_and_load(tmp_path):
    config = apply_overrides(RunConfig(), ["training.seed=7", "model.attention=false"])
    path = tmp_path / "config.json"
    config.save(path)
    loaded = RunConfig.load(path)
    assert loaded == config
    assert loaded.model.attention is False


def test_partial_file_keeps_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"training": {"g": 4}}))
    config = RunConfig.load(path)
    assert config.training.g == 4
    assert config.training.m == 1


def test_unknown_section_in_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"optimizer": {}}))
    with pytest.raises(ConfigError) as err:
        RunConfig.load(path)
    assert err.value.field == "optimizer"


def test_unreadable_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(path)
