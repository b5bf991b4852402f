import json

import pytest

from shapecheck.config import AnalysisConfig, config_from_dict, load_config, merge_overrides, parse_arg
from shapecheck.errors import ConfigError


def test_empty_config_gives_defaults():
    cfg = config_from_dict({})
    assert cfg == AnalysisConfig()
    assert (cfg.path_cap, cfg.timeout_ms, cfg.max_tuples) == (4096, 10_000, 10**6)
    assert (cfg.backend, cfg.format, cfg.jobs, cfg.merge) == ("internal", "human", 1, True)


def test_cli_args_are_injected():
    assert config_from_dict({"cliArgs": {"epochs": 1}}).cli_args == {"epochs": 1}


@pytest.mark.parametrize("data,field", [
    ({"pathCap": 0}, "pathCap"),
    ({"pathCap": True}, "pathCap"),
    ({"solverBudget": {"timeoutMs": -1}}, "solverBudget.timeoutMs"),
    ({"solverBudget": {"maxTuples": 0}}, "solverBudget.maxTuples"),
    ({"solverBudget": {"seconds": 3}}, "solverBudget"),
    ({"backend": "cvc5"}, "backend"),
    ({"format": "xml"}, "format"),
    ({"jobs": 0}, "jobs"),
    ({"merge": "yes"}, "merge"),
    ({"cliArgs": []}, "cliArgs"),
    ({"cliArgs": {"lr": 0.1}}, "cliArgs.lr"),
    ({"datasetOverrides": {"mnist": {"length": 0}}}, "datasetOverrides.mnist.length"),
    ({"datasetOverrides": {"mnist": {"itemShape": [1, -2]}}}, "datasetOverrides.mnist.itemShape"),
    ({"datasetOverrides": {"mnist": {"size": 3}}}, "datasetOverrides.mnist.size"),
    ({"pathcap": 10}, "pathcap"),
])
def test_invalid_fields_name_their_path(data, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.field == field


def test_dataset_overrides():
    cfg = config_from_dict({"datasetOverrides": {"cifar10": {"length": 1280, "itemShape": [3, 32, 32]}}})
    assert cfg.dataset_overrides == {"cifar10": {"length": 1280, "item": [3, 32, 32]}}


def test_load_config_resolves_entry_relative_to_file(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"entry": "prog.tsl", "pathCap": 7}))
    cfg = load_config(tmp_path / "c.json")
    assert cfg.entry == str(tmp_path / "prog.tsl") and cfg.path_cap == 7


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    (tmp_path / "list.json").write_text("[]")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "list.json")


@pytest.mark.parametrize("text,expected", [
    ("epochs=1", ("epochs", 1)),
    ("depth=0x10", ("depth", 16)),
    ("flag=True", ("flag", True)),
    ("flag=false", ("flag", False)),
    ("opt=None", ("opt", None)),
    ("name=resnet", ("name", "resnet")),
    ("expr=a=b", ("expr", "a=b")),
])
def test_parse_arg(text, expected):
    assert parse_arg(text) == expected


@pytest.mark.parametrize("text", ["epochs", "1x=2", "=3"])
def test_parse_arg_rejects(text):
    with pytest.raises(ConfigError):
        parse_arg(text)


def test_overrides_win_and_merge_cli_args():
    base = config_from_dict({"cliArgs": {"epochs": 3, "depth": 2}, "pathCap": 10})
    cfg = merge_overrides(base, cli_args={"epochs": 1}, path_cap=None, format="json")
    assert cfg.cli_args == {"epochs": 1, "depth": 2}
    assert cfg.path_cap == 10 and cfg.format == "json"
    with pytest.raises(ConfigError):
        merge_overrides(base, path_cap=0)
