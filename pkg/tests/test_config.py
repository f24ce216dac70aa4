# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

import pytest

from renet.config import ModelConfig, load_config, parse_patch, save_config
from renet.errors import ConfigError

SHIPPED = ["mnist", "cifar10", "svhn", "mnist_desk", "bars", "tiny"]


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_configs_load(configs_dir, name):
    cfg = load_config(configs_dir / f"{name}.yaml")
    assert len(cfg.layer_configs()) == cfg.n_renet


def test_mnist_config_matches_the_published_architecture(configs_dir):
    cfg = load_config(configs_dir / "mnist.yaml")
    assert cfg.input_shape == (28, 28, 1)
    assert cfg.patch_sizes == [(2, 2), (2, 2)]
    assert cfg.renet_hidden == [256, 256]
    assert cfg.renet_cells == ["gru", "gru"]
    assert cfg.fc_hidden == [4096, 4096]
    assert (cfg.flip, cfg.shift, cfg.zca) == (False, True, False)


def test_cifar_and_svhn_configs(configs_dir):
    cifar = load_config(configs_dir / "cifar10.yaml")
    assert cifar.renet_hidden == [320] * 3 and cifar.renet_cells == ["gru"] * 3
    assert cifar.zca and cifar.flip and cifar.shift
    svhn = load_config(configs_dir / "svhn.yaml")
    assert svhn.renet_cells == ["lstm"] * 3 and svhn.renet_hidden == [256] * 3
    assert not svhn.flip and svhn.shift


def test_dataset_fills_shape_and_classes():
    cfg = ModelConfig.from_dict({"dataset": "cifar10", "n_renet": 1, "patch_sizes": "2x2",
                                 "renet_hidden": 4, "renet_cells": "lstm"})
    assert cfg.input_shape == (32, 32, 3)
    assert cfg.num_classes == 10


def test_single_activation_is_broadcast():
    cfg = ModelConfig.from_dict({"n_fc": 3, "fc_hidden": [8, 8, 8], "fc_activation": "identity"})
    assert cfg.fc_activation == ["identity"] * 3


@pytest.mark.parametrize(
    "value, expected",
    [("2x2", (2, 2)), ("4X1", (4, 1)), ([1, 3], (1, 3)), (2, (2, 2)), (" 3 x 2 ", (3, 2))],
)
def test_parse_patch(value, expected):
    assert parse_patch(value) == expected


@pytest.mark.parametrize("value", ["2by2", "0x2", "axb", [1, 2, 3]])
def test_parse_patch_rejects(value):
    with pytest.raises(ConfigError):
        parse_patch(value)


def test_layer_that_does_not_divide_is_named():
    with pytest.raises(ConfigError, match="ReNet layer 2"):
        ModelConfig.from_dict(
            {
                "dataset": "mnist",
                "n_renet": 3,
                "patch_sizes": ["2x2"] * 3,
                "renet_hidden": [4] * 3,
                "renet_cells": ["gru"] * 3,
            }
        )


@pytest.mark.parametrize(
    "values, message",
    [
        ({"typo": 1}, "Unknown config keys"),
        ({"renet_hidden": [256]}, "renet_hidden"),
        ({"renet_cells": "gru, elman"}, "elman"),
        ({"dropout_fc": 1.0}, "dropout_fc"),
        ({"dtype": "f16"}, "dtype"),
        ({"learning_rate": "fast"}, "learning_rate"),
        ({"fc_activation": ["relu", "tanh"]}, "tanh"),
        ({"recurrent_init": "zeros"}, "recurrent_init"),
        ({"clip_norm": -1}, "clip_norm"),
        ({"max_epochs": 0}, "max_epochs"),
    ],
)
def test_invalid_values(values, message):
    with pytest.raises(ConfigError, match=message):
        ModelConfig.from_dict(values)


def test_pad_input_rescues_non_divisible_inputs():
    values = {"dataset": "mnist", "n_renet": 1, "patch_sizes": ["3x3"], "renet_hidden": [4],
              "renet_cells": ["tanh"]}
    with pytest.raises(ConfigError):
        ModelConfig.from_dict(values)
    cfg = ModelConfig.from_dict({**values, "pad_input": True})
    assert cfg.layer_configs()[0].output_shape == (10, 10, 8)


def test_save_load_round_trip(tmp_path, configs_dir):
    cfg = load_config(configs_dir / "cifar10.yaml")
    path = tmp_path / "saved.yaml"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg


def test_overrides_win_and_none_is_ignored(configs_dir):
    cfg = load_config(configs_dir / "bars.yaml", seed=99, dtype="f64", data_dir=None)
    assert cfg.seed == 99
    assert cfg.dtype == "f64"


def test_yaml_errors(tmp_path):
    broken = tmp_path / "broken.yaml"
    broken.write_text("n_renet: [1, 2\n")
    with pytest.raises(ConfigError, match="Cannot parse"):
        load_config(broken)
    listed = tmp_path / "list.yaml"
    listed.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(listed)
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.yaml")


def test_architecture_ignores_training_settings():
    a = ModelConfig.from_dict({"learning_rate": 0.1, "seed": 1})
    b = ModelConfig.from_dict({"learning_rate": 0.2, "seed": 2})
    assert a.architecture() == b.architecture()
    assert a.architecture() != ModelConfig.from_dict({"dtype": "f64"}).architecture()
