from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Optional, Sequence
import copy
import os
import yaml

from floquet_solver import ExtractionSettings
from model import ALPHA, DriveConfig, LevelSystem, MediumParams, normalize_mode

WORKERS_ENV = "LOOP_RESPONSE_WORKERS"
ALPHA_SQUARED = "alpha^2"


@dataclass
class ProcessingConfig:
    workers: int = 1
    engine: str = "floquet"


@dataclass
class OutputConfig:
    dir: str = "./output"
    filename_pattern: str = "{name}.csv"


@dataclass
class SimulationConfig:
    system: LevelSystem = field(default_factory=LevelSystem)
    drive: DriveConfig = field(default_factory=DriveConfig)
    medium: MediumParams = field(default_factory=MediumParams)
    mode: str = "closed_loop"
    extraction: ExtractionSettings = field(default_factory=ExtractionSettings)
    processing: ProcessingConfig = field(default_factory=ProcessingConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    presets_path: str = "./config/presets.yaml"
    gain: bool = False
    seed: int = 0


def _section(raw: Dict, name: str, cls) -> Dict[str, Any]:
    values = raw.get(name) or {}
    if not isinstance(values, dict):
        raise ValueError(f"{name} must be a mapping, got {type(values).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"{name}: unknown keys {unknown}; expected a subset of {sorted(known)}")
    return dict(values)


def _float_fields(values: Dict[str, Any], section: str) -> Dict[str, Any]:
    out = {}
    for key, value in values.items():
        if value is None or isinstance(value, bool):
            out[key] = value
            continue
        try:
            out[key] = float(value)
        except (TypeError, ValueError):
            raise ValueError(f"{section}.{key} must be a number, got {value!r}")
    return out


def _parse_override(text: str):
    if "=" not in text:
        raise ValueError(f"override must look like key.sub=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip().split("."), yaml.safe_load(value)


def apply_overrides(raw: Dict, overrides: Sequence[str]) -> Dict:
    """Apply 'section.key=value' overrides to a raw config mapping (values parsed as YAML scalars)."""
    raw = copy.deepcopy(raw)
    for text in overrides:
        path, value = _parse_override(text)
        node = raw
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"cannot override {text!r}: {part} is not a section")
        node[path[-1]] = value
    return raw


def build_config(raw: Optional[Dict]) -> SimulationConfig:
    raw = raw or {}

    medium_raw = _float_fields(_section(raw, "medium", MediumParams), "medium")
    medium = MediumParams(**medium_raw)

    system_raw = _section(raw, "system", LevelSystem)
    if system_raw.get("gamma3") == ALPHA_SQUARED:
        system_raw["gamma3"] = medium.alpha**2
    system = LevelSystem(**_float_fields(system_raw, "system"))

    drive = DriveConfig(**_float_fields(_section(raw, "drive", DriveConfig), "drive"))
    mode = normalize_mode(raw.get("mode", "closed_loop"))

    extraction_raw = _float_fields(_section(raw, "extraction", ExtractionSettings), "extraction")
    extraction = ExtractionSettings(**extraction_raw)

    processing_raw = _section(raw, "processing", ProcessingConfig)
    workers = processing_raw.get("workers")
    if workers is None:
        workers = os.environ.get(WORKERS_ENV, 1)
    try:
        workers = int(workers)
    except (TypeError, ValueError):
        raise ValueError(f"processing.workers must be an integer, got {workers!r}")
    processing = ProcessingConfig(workers=max(1, workers), engine=processing_raw.get("engine", "floquet"))

    output_raw = _section(raw, "output", OutputConfig)
    output = OutputConfig(**output_raw)
    if "{name}" not in output.filename_pattern:
        raise ValueError("output.filename_pattern must include '{name}'.")

    return SimulationConfig(
        system=system,
        drive=drive,
        medium=medium,
        mode=mode,
        extraction=extraction,
        processing=processing,
        output=output,
        presets_path=raw.get("presets_path", "./config/presets.yaml"),
        gain=bool(raw.get("gain", False)),
        seed=int(raw.get("seed", 0)),
    )


def load_raw(path: Optional[str]) -> Dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, "r") as f:
        # JSON documents are valid YAML, so both formats load here.
        raw = yaml.safe_load(f)
    if not raw:
        raise ValueError("Configuration file is empty.")
    if not isinstance(raw, dict):
        raise ValueError("Configuration file must hold a mapping at the top level.")
    return raw


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> SimulationConfig:
    return build_config(apply_overrides(load_raw(path), overrides))


def load_presets(path: str) -> Dict[str, Dict]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Presets file not found: {path}")
    with open(path, "r") as f:
        raw = yaml.safe_load(f) or {}
    presets = raw.get("presets", {})
    for name, preset in presets.items():
        if "axis" not in preset:
            raise ValueError(f"preset {name!r} must name an axis.")
        if "range" in preset and len(preset["range"]) != 3:
            raise ValueError(f"preset {name!r}: range must be [start, stop, count].")
    return presets


def config_echo(cfg: SimulationConfig) -> Dict[str, Any]:
    """Plain mapping of the effective configuration, for output metadata."""
    echo = asdict(cfg)
    echo["alpha_default"] = ALPHA
    return echo
