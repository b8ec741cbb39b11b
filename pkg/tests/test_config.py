import json
import os

import pytest

from config import WORKERS_ENV, apply_overrides, build_config, config_echo, load_config, load_presets
from model import ALPHA, InvalidParameters


def test_defaults_without_a_file(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    cfg = load_config()
    assert cfg.mode == "closed_loop"
    assert cfg.system.gamma3 == pytest.approx(ALPHA**2)
    assert cfg.medium.mu21 == pytest.approx(ALPHA)
    assert cfg.processing.workers == 1
    assert cfg.processing.engine == "floquet"


def test_shipped_config_resolves_alpha_squared(config_dir):
    cfg = load_config(os.path.join(config_dir, "config.yaml"))
    assert cfg.system.gamma3 == pytest.approx(cfg.medium.alpha**2)
    assert cfg.medium.mu21 == pytest.approx(cfg.medium.alpha)
    assert cfg.drive.omega31_mag == 1.0


def test_overrides_are_parsed_as_yaml_scalars():
    cfg = load_config(overrides=["drive.delta2=0.5", "mode=incoherent", "drive.omega31_mag=0", "drive.r1=1e-1"])
    assert cfg.drive.delta2 == 0.5
    assert cfg.mode == "incoherent"
    assert cfg.drive.r1 == pytest.approx(0.1)


def test_overrides_leave_the_input_untouched():
    raw = {"drive": {"delta2": 1.0}}
    updated = apply_overrides(raw, ["drive.delta2=2.0"])
    assert raw["drive"]["delta2"] == 1.0
    assert updated["drive"]["delta2"] == 2.0


def test_malformed_override():
    with pytest.raises(ValueError):
        apply_overrides({}, ["drive.delta2"])


@pytest.mark.parametrize(
    "raw, fragment",
    [
        ({"drive": {"detuning": 1.0}}, "unknown keys"),
        ({"system": {"gamma1": "fast"}}, "must be a number"),
        ({"processing": {"workers": "many"}}, "must be an integer"),
        ({"output": {"filename_pattern": "scan.csv"}}, "{name}"),
        ({"drive": [1, 2]}, "must be a mapping"),
    ],
)
def test_invalid_sections(raw, fragment):
    with pytest.raises(ValueError, match=fragment.replace("{", r"\{").replace("}", r"\}")):
        build_config(raw)


def test_unknown_mode():
    with pytest.raises(InvalidParameters):
        build_config({"mode": "ring"})


def test_workers_fall_back_to_environment(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert build_config({}).processing.workers == 3
    assert build_config({"processing": {"workers": 2}}).processing.workers == 2


def test_json_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"system": {"gamma3": 0.1}, "drive": {"psi": 0.25}, "seed": 7}))
    cfg = load_config(str(path))
    assert cfg.system.gamma3 == 0.1
    assert cfg.drive.psi == 0.25
    assert cfg.seed == 7


def test_missing_and_empty_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "absent.yaml"))
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ValueError):
        load_config(str(empty))


def test_shipped_presets(config_dir):
    presets = load_presets(os.path.join(config_dir, "presets.yaml"))
    assert {"stark_doublet", "dressed_electric", "sigma_cross", "phase_loop"} <= set(presets)
    assert all("axis" in p for p in presets.values())


def test_preset_range_must_have_three_entries(tmp_path):
    path = tmp_path / "presets.yaml"
    path.write_text("presets:\n  bad:\n    axis: delta2\n    range: [0, 1]\n")
    with pytest.raises(ValueError):
        load_presets(str(path))


def test_config_echo_is_plain_data():
    echo = config_echo(build_config({}))
    assert echo["system"]["gamma1"] == 1.0
    assert echo["alpha_default"] == ALPHA
    json.dumps(echo)
