import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from .errors import ConfigError, ModelError, PlanningError
from .pipeline import preflight
from .profiles import ingest_series
from .schemas import ScenarioConfig

logger = logging.getLogger(__name__)


# Load environment variables from .env file
load_dotenv()

LOG_LEVEL = os.getenv("DERPLAN_LOG_LEVEL", "INFO")

# DERPLAN__PSO_CONFIG__SWARM_SIZE=40 overrides [pso_config] swarm_size
ENV_PREFIX = "DERPLAN__"

CSV_KEYS = ("load_csv", "irradiance_csv", "wind_csv")


class Diagnostic(BaseModel):
    """
    One configuration problem.

    Attributes:
        path (str): Dotted path into the scenario file, e.g. `sizing_params.soc_min`.
        message (str): What is wrong there.
    """

    path: str
    message: str


def read_toml(path: Path) -> dict:
    """
    Parse a scenario file.

    Raises:
        ConfigError: If the file is unreadable or not valid TOML.
    """
    try:
        with Path(path).open("rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}", path=str(path)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}", path=str(path)) from exc


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> dict[str, Any]:
    """Dotted-path overrides collected from DERPLAN__SECTION__KEY variables."""
    environ = os.environ if environ is None else environ
    overrides = {}
    for name, text in environ.items():
        if name.startswith(ENV_PREFIX) and len(name) > len(ENV_PREFIX):
            dotted = ".".join(part.lower() for part in name[len(ENV_PREFIX):].split("__"))
            overrides[dotted] = _parse_value(text)
    return overrides


def apply_overrides(raw: dict, overrides: Mapping[str, Any]) -> dict:
    """
    Set nested keys of a raw scenario mapping in place.

    Args:
        raw (dict): Parsed TOML.
        overrides: Values keyed by dotted path.

    Returns:
        dict: The same mapping.
    """
    for dotted, value in overrides.items():
        *parents, leaf = dotted.split(".")
        node = raw
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"cannot override {dotted}: {part} is not a section", path=dotted)
            node = child
        node[leaf] = value
    return raw


def resolve_inputs(raw: dict, base_dir: Path) -> dict:
    """Make relative CSV paths absolute against the scenario file's directory."""
    inputs = raw.get("inputs")
    if isinstance(inputs, dict):
        for key in CSV_KEYS:
            value = inputs.get(key)
            if isinstance(value, str) and not Path(value).is_absolute():
                inputs[key] = str(base_dir / value)
    return raw


def _error_path(location: tuple) -> str:
    return ".".join(str(part) for part in location) or "<root>"


def raw_scenario(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> dict:
    path = Path(path)
    raw = read_toml(path)
    apply_overrides(raw, env_overrides())
    apply_overrides(raw, overrides or {})
    return resolve_inputs(raw, path.resolve().parent)


def load_scenario(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> ScenarioConfig:
    """
    Load, override and validate a scenario file.

    Environment overrides are applied first, then `overrides` from the command
    line.

    Args:
        path (Path): Scenario TOML.
        overrides: Dotted-path values, e.g. {"run.seed": 7}.

    Returns:
        ScenarioConfig: Validated configuration.

    Raises:
        ConfigError: On unreadable files and on the first validation error.
    """
    raw = raw_scenario(path, overrides)
    try:
        config = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(
            f"{_error_path(first['loc'])}: {first['msg']}",
            path=_error_path(first["loc"]),
            errors=len(exc.errors()),
        ) from exc
    missing = [name for name in config.present_classes() if name not in config.cost_book.ders]
    if missing:
        raise ConfigError(
            f"cost book has no row for {missing[0]}", path=f"cost_book.ders.{missing[0]}"
        )
    logger.debug("Loaded scenario %s", path)
    return config


def diagnose(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> list[Diagnostic]:
    """
    List every problem that would stop a run with a configuration error.

    Validation errors, missing input files, DER classes without a cost row,
    histories that cannot be ingested or fitted and demand figures that leave
    the Step 1 mandates undefined are all reported.

    Args:
        path (Path): Scenario TOML.
        overrides: Dotted-path values applied as in `load_scenario`.

    Returns:
        list[Diagnostic]: Empty when the scenario is runnable.

    Raises:
        ConfigError: If the file cannot be read or parsed.
    """
    raw = raw_scenario(path, overrides)
    try:
        config = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        return [
            Diagnostic(path=_error_path(error["loc"]), message=error["msg"])
            for error in exc.errors()
        ]

    diagnostics = [
        Diagnostic(path=f"cost_book.ders.{name}", message=f"no cost row for present class {name}")
        for name in config.present_classes()
        if name not in config.cost_book.ders
    ]
    inputs = config.inputs
    histories = {}
    for key in CSV_KEYS:
        csv_path = getattr(inputs, key)
        if not csv_path.is_file():
            diagnostics.append(Diagnostic(path=f"inputs.{key}", message=f"file not found: {csv_path}"))
            continue
        try:
            histories[key] = ingest_series(
                csv_path, inputs.interval_hours, non_negative=key != "irradiance_csv"
            )
        except PlanningError as exc:
            diagnostics.append(Diagnostic(path=f"inputs.{key}", message=exc.detail))
    if len(histories) == len(CSV_KEYS):
        try:
            preflight(config)
        except ModelError as exc:
            diagnostics.append(Diagnostic(path="demand_context", message=exc.detail))
        except PlanningError as exc:
            source = exc.context.get("source")
            field = {"load": "load_csv", "pv": "irradiance_csv", "wind": "wind_csv"}.get(source)
            diagnostics.append(
                Diagnostic(path=f"inputs.{field}" if field else "inputs", message=exc.detail)
            )
    return diagnostics
