"""Strict JSON configuration files and bundled privacy scenarios.

Every key a file may contain is listed in a schema below; anything else is
rejected with its dotted path. Missing keys take the defaults from
:class:`src.config.Config`. Loaders return both the domain object and the
fully resolved dictionary, which is what result envelopes record and what a
rerun can be fed to reproduce them.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from src.config import ERROR_MESSAGES, Config, config as default_config

from ..model import (
    ConfigurationError,
    ControllerConfig,
    DesiredSignalSpec,
    LogNormalComponent,
    NoiseModel,
    ObservationFamily,
    PopulationSpec,
    PrivacyScenario,
    SamplingPolicy,
    ScalingRule,
    ScenarioConfig,
    TclParams,
    TypePrior,
)

__all__ = [
    "default_simulation_config",
    "load_json_document",
    "load_simulation_config",
    "resolve_simulation_config",
    "build_scenario",
    "load_privacy_scenario",
    "resolve_privacy_scenario",
    "build_privacy_scenario",
    "bundled_scenario_path",
    "BUNDLED_SCENARIO_DIR",
]

logger = logging.getLogger(__name__)

BUNDLED_SCENARIO_DIR = Path(__file__).parent / "scenarios"

NUMBER = "number"
INTEGER = "integer"
BOOLEAN = "boolean"
NUMBER_LIST = "list of numbers"
OPTIONAL_NUMBER = "number or null"
STRING = "string"


def default_simulation_config(cfg: Config = default_config) -> Dict[str, Any]:
    """The sectioned simulation config with every field at its default."""
    return {
        "population": {
            "n_tcls": cfg.N_TCLS,
            "R": cfg.R,
            "C": cfg.C,
            "theta_a": cfg.THETA_A,
            "theta_set": cfg.THETA_SET,
            "delta": cfg.DELTA,
            "P_trans": cfg.P_TRANS,
            "P_elec": cfg.P_ELEC,
            "jitter_fraction": cfg.JITTER_FRACTION,
            "init_on_probability": cfg.INIT_ON_PROBABILITY,
        },
        "controller": {
            "n_bins": cfg.N_BINS,
            "command_period": None,
            "deadzone_kw": cfg.DEADZONE_KW,
            "control_enabled": cfg.CONTROL_ENABLED,
        },
        "sampling": {"h_obs": cfg.H_OBS, "phase": cfg.PHASE},
        "desired_signal": {
            "knot_period": cfg.KNOT_PERIOD,
            "low": cfg.DESIRED_LOW,
            "high": cfg.DESIRED_HIGH,
        },
        "noise": {"variance": cfg.NOISE_VARIANCE},
        "horizon": {"minutes": cfg.HORIZON, "h_step": cfg.H_STEP},
        "seeds": {"base_seed": cfg.BASE_SEED},
        "sweep": {"h_list": list(cfg.SWEEP_H_LIST), "trials": cfg.SWEEP_TRIALS},
    }


SIMULATION_SCHEMA: Dict[str, Dict[str, str]] = {
    "population": {
        "n_tcls": INTEGER, "R": NUMBER, "C": NUMBER, "theta_a": NUMBER, "theta_set": NUMBER,
        "delta": NUMBER, "P_trans": NUMBER, "P_elec": NUMBER, "jitter_fraction": NUMBER,
        "init_on_probability": NUMBER,
    },
    "controller": {
        "n_bins": INTEGER, "command_period": OPTIONAL_NUMBER, "deadzone_kw": NUMBER,
        "control_enabled": BOOLEAN,
    },
    "sampling": {"h_obs": NUMBER, "phase": NUMBER},
    "desired_signal": {"knot_period": NUMBER, "low": NUMBER, "high": NUMBER},
    "noise": {"variance": NUMBER},
    "horizon": {"minutes": NUMBER, "h_step": NUMBER},
    "seeds": {"base_seed": INTEGER},
    "sweep": {"h_list": NUMBER_LIST, "trials": INTEGER},
}

PRIVACY_TOP_LEVEL = {"name", "labels", "prior", "family", "window", "minutes_per_year", "scaling"}
FAMILY_KEYS = {"locations", "sigma", "components"}
COMPONENT_KEYS = {"weight", "mu", "sigma"}
SCALING_KEYS = {"rule", "table"}
TABLE_ROW_KEYS = {"h", "locations", "sigma"}


# ---------------------------------------------------------------------------
# JSON plumbing
# ---------------------------------------------------------------------------

def _line_of(text: Optional[str], key: str) -> Optional[int]:
    """1-based line of the first occurrence of ``"key"`` in the source text."""
    if not text:
        return None
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def load_json_document(path: Union[str, Path]) -> Tuple[Dict[str, Any], str]:
    """Parse a JSON object from ``path``; decode errors carry the line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"Cannot read configuration file {path}: {exc}",
                                 field="config") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(ERROR_MESSAGES["BAD_JSON"].format(exc.lineno, exc.colno, exc.msg),
                                 line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigurationError("Configuration must be a JSON object", line=1)
    return data, text


def _check_type(path: str, kind: str, value: Any, text: Optional[str]) -> Any:
    def fail() -> ConfigurationError:
        return ConfigurationError(ERROR_MESSAGES["WRONG_TYPE"].format(path, kind, value),
                                  field=path, line=_line_of(text, path.rsplit(".", 1)[-1]))

    is_number = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == NUMBER:
        if not is_number:
            raise fail()
        return value
    if kind == OPTIONAL_NUMBER:
        if value is not None and not is_number:
            raise fail()
        return value
    if kind == INTEGER:
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail()
        return value
    if kind == BOOLEAN:
        if not isinstance(value, bool):
            raise fail()
        return value
    if kind == STRING:
        if not isinstance(value, str):
            raise fail()
        return value
    if kind == NUMBER_LIST:
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise fail()
        return list(value)
    raise AssertionError(kind)


def _reject_unknown(data: Dict[str, Any], allowed, prefix: str, text: Optional[str]) -> None:
    for key in data:
        if key not in allowed:
            path = f"{prefix}.{key}" if prefix else key
            raise ConfigurationError(ERROR_MESSAGES["UNKNOWN_KEY"].format(path),
                                     field=path, line=_line_of(text, key))


def _field_error(exc: ConfigurationError, text: Optional[str]) -> ConfigurationError:
    """Attach a source line to a domain validation error when the field is found."""
    if exc.line is not None or exc.field is None or text is None:
        return exc
    line = _line_of(text, exc.field.rsplit(".", 1)[-1])
    if line is None:
        return exc
    message = str(exc).split("] ", 1)[-1]
    return ConfigurationError(message, field=exc.field, line=line)


# ---------------------------------------------------------------------------
# Simulation configuration
# ---------------------------------------------------------------------------

def resolve_simulation_config(data: Optional[Dict[str, Any]] = None, *,
                              text: Optional[str] = None,
                              cfg: Config = default_config) -> Dict[str, Any]:
    """Validate ``data`` against the schema and fill in defaults."""
    data = data or {}
    resolved = default_simulation_config(cfg)
    _reject_unknown(data, SIMULATION_SCHEMA, "", text)
    for section, fields in data.items():
        if not isinstance(fields, dict):
            raise ConfigurationError(
                ERROR_MESSAGES["WRONG_TYPE"].format(section, "object", fields),
                field=section, line=_line_of(text, section))
        _reject_unknown(fields, SIMULATION_SCHEMA[section], section, text)
        for key, value in fields.items():
            resolved[section][key] = _check_type(
                f"{section}.{key}", SIMULATION_SCHEMA[section][key], value, text)
    return resolved


def build_scenario(resolved: Dict[str, Any], *, text: Optional[str] = None) -> ScenarioConfig:
    """Domain objects from a resolved simulation config."""
    pop, ctl = resolved["population"], resolved["controller"]
    seed = resolved["seeds"]["base_seed"]
    try:
        nominal = TclParams(
            R=pop["R"], C=pop["C"], theta_a=pop["theta_a"], theta_set=pop["theta_set"],
            delta=pop["delta"], P_trans=pop["P_trans"], P_elec=pop["P_elec"],
            h_step=resolved["horizon"]["h_step"])
        population = PopulationSpec(
            n_tcls=pop["n_tcls"], nominal=nominal, jitter_fraction=pop["jitter_fraction"],
            init_on_probability=pop["init_on_probability"], seed=seed)
        return ScenarioConfig(
            population=population,
            controller=ControllerConfig(n_bins=ctl["n_bins"],
                                        command_period=ctl["command_period"],
                                        deadzone_kw=ctl["deadzone_kw"]),
            sampling=SamplingPolicy(**resolved["sampling"]),
            desired_signal=DesiredSignalSpec(horizon=resolved["horizon"]["minutes"],
                                             **resolved["desired_signal"]),
            noise=NoiseModel(**resolved["noise"]),
            control_enabled=ctl["control_enabled"],
        )
    except ConfigurationError as exc:
        if exc.field and "." not in exc.field and exc.field in SIMULATION_SCHEMA["population"]:
            exc = ConfigurationError(str(exc).split("] ", 1)[-1], field=f"population.{exc.field}")
        raise _field_error(exc, text) from None


def load_simulation_config(path: Optional[Union[str, Path]] = None,
                           cfg: Config = default_config) -> Tuple[ScenarioConfig, Dict[str, Any]]:
    """Read, validate and resolve a simulation config; ``None`` means all defaults."""
    if path is None:
        resolved = resolve_simulation_config(cfg=cfg)
        return build_scenario(resolved), resolved
    data, text = load_json_document(path)
    resolved = resolve_simulation_config(data, text=text, cfg=cfg)
    logger.debug("Loaded simulation config from %s", path)
    return build_scenario(resolved, text=text), resolved


# ---------------------------------------------------------------------------
# Privacy scenarios
# ---------------------------------------------------------------------------

def bundled_scenario_path(name: str) -> Path:
    path = BUNDLED_SCENARIO_DIR / f"{name}.json"
    if not path.is_file():
        available = sorted(p.stem for p in BUNDLED_SCENARIO_DIR.glob("*.json"))
        raise ConfigurationError(
            f"No bundled scenario '{name}'; available: {', '.join(available)}", field="scenario")
    return path


def _number_list(path: str, value: Any, text: Optional[str]) -> list:
    return _check_type(path, NUMBER_LIST, value, text)


def resolve_privacy_scenario(data: Dict[str, Any], *, text: Optional[str] = None,
                             cfg: Config = default_config) -> Dict[str, Any]:
    """Validate a privacy scenario document and fill in defaults."""
    _reject_unknown(data, PRIVACY_TOP_LEVEL, "", text)
    for required in ("labels", "prior", "family"):
        if required not in data:
            raise ConfigurationError(f"Missing required key '{required}'", field=required)
    labels = data["labels"]
    if not isinstance(labels, list) or not all(isinstance(label, str) for label in labels):
        raise ConfigurationError(ERROR_MESSAGES["WRONG_TYPE"].format("labels", "list of strings",
                                                                     labels),
                                 field="labels", line=_line_of(text, "labels"))
    resolved: Dict[str, Any] = {
        "name": _check_type("name", STRING, data.get("name", "custom"), text),
        "labels": list(labels),
        "prior": _number_list("prior", data["prior"], text),
        "window": _check_type("window", NUMBER, data.get("window", cfg.PRIVACY_WINDOW), text),
        "minutes_per_year": _check_type(
            "minutes_per_year", NUMBER, data.get("minutes_per_year", cfg.MINUTES_PER_YEAR), text),
    }

    family = data["family"]
    if not isinstance(family, dict):
        raise ConfigurationError(ERROR_MESSAGES["WRONG_TYPE"].format("family", "object", family),
                                 field="family", line=_line_of(text, "family"))
    _reject_unknown(family, FAMILY_KEYS, "family", text)
    if "components" in family:
        if "locations" in family or "sigma" in family:
            raise ConfigurationError("family takes either 'components' or "
                                     "'locations' with 'sigma', not both", field="family")
        mixtures = family["components"]
        if not isinstance(mixtures, list):
            raise ConfigurationError(
                ERROR_MESSAGES["WRONG_TYPE"].format("family.components", "list", mixtures),
                field="family.components", line=_line_of(text, "components"))
        resolved_mixtures = []
        for i, mixture in enumerate(mixtures):
            if not isinstance(mixture, list):
                raise ConfigurationError(
                    ERROR_MESSAGES["WRONG_TYPE"].format(f"family.components[{i}]", "list",
                                                        mixture),
                    field=f"family.components[{i}]")
            resolved_mixture = []
            for j, component in enumerate(mixture):
                prefix = f"family.components[{i}][{j}]"
                if not isinstance(component, dict):
                    raise ConfigurationError(
                        ERROR_MESSAGES["WRONG_TYPE"].format(prefix, "object", component),
                        field=prefix)
                _reject_unknown(component, COMPONENT_KEYS, prefix, text)
                resolved_mixture.append({
                    "weight": _check_type(f"{prefix}.weight", NUMBER,
                                          component.get("weight", 1.0), text),
                    "mu": _check_type(f"{prefix}.mu", NUMBER, component.get("mu"), text),
                    "sigma": _check_type(f"{prefix}.sigma", NUMBER, component.get("sigma"), text),
                })
            resolved_mixtures.append(resolved_mixture)
        resolved["family"] = {"components": resolved_mixtures}
    else:
        resolved["family"] = {
            "locations": _number_list("family.locations", family.get("locations"), text),
            "sigma": _check_type("family.sigma", NUMBER, family.get("sigma"), text),
        }

    scaling = data.get("scaling", {})
    if not isinstance(scaling, dict):
        raise ConfigurationError(ERROR_MESSAGES["WRONG_TYPE"].format("scaling", "object", scaling),
                                 field="scaling", line=_line_of(text, "scaling"))
    _reject_unknown(scaling, SCALING_KEYS, "scaling", text)
    table = scaling.get("table", [])
    if not isinstance(table, list):
        raise ConfigurationError(ERROR_MESSAGES["WRONG_TYPE"].format("scaling.table", "list", table),
                                 field="scaling.table", line=_line_of(text, "table"))
    resolved_table = []
    for i, row in enumerate(table):
        prefix = f"scaling.table[{i}]"
        if not isinstance(row, dict):
            raise ConfigurationError(ERROR_MESSAGES["WRONG_TYPE"].format(prefix, "object", row),
                                     field=prefix)
        _reject_unknown(row, TABLE_ROW_KEYS, prefix, text)
        resolved_table.append({
            "h": _check_type(f"{prefix}.h", NUMBER, row.get("h"), text),
            "locations": _number_list(f"{prefix}.locations", row.get("locations"), text),
            "sigma": _check_type(f"{prefix}.sigma", NUMBER, row.get("sigma"), text),
        })
    resolved["scaling"] = {
        "rule": _check_type("scaling.rule", STRING, scaling.get("rule", "location-shift"), text),
        "table": resolved_table,
    }
    return resolved


def build_privacy_scenario(resolved: Dict[str, Any], *,
                           text: Optional[str] = None) -> PrivacyScenario:
    try:
        family_doc = resolved["family"]
        if "components" in family_doc:
            family = ObservationFamily(tuple(
                tuple(LogNormalComponent(c["weight"], c["mu"], c["sigma"]) for c in mixture)
                for mixture in family_doc["components"]))
        else:
            family = ObservationFamily.point_mass(family_doc["locations"], family_doc["sigma"])
        table = {
            float(row["h"]): (tuple(float(v) for v in row["locations"]), float(row["sigma"]))
            for row in resolved["scaling"]["table"]
        }
        return PrivacyScenario(
            name=resolved["name"],
            prior=TypePrior(tuple(resolved["labels"]), tuple(resolved["prior"])),
            family=family,
            window=float(resolved["window"]),
            scaling=ScalingRule(kind=resolved["scaling"]["rule"], table=table),
            minutes_per_year=float(resolved["minutes_per_year"]),
        )
    except ConfigurationError as exc:
        raise _field_error(exc, text) from None


def load_privacy_scenario(source: Optional[Union[str, Path]] = None, *,
                          scaling_rule: Optional[str] = None,
                          cfg: Config = default_config) -> Tuple[PrivacyScenario, Dict[str, Any]]:
    """Load a scenario file, or a bundled scenario by name (default ``recs-income``).

    ``scaling_rule`` overrides the file's rule and is recorded in the
    resolved dictionary.
    """
    source = source or cfg.PRIVACY_SCENARIO
    path = Path(source)
    if not path.suffix and not path.exists():
        path = bundled_scenario_path(str(source))
    data, text = load_json_document(path)
    resolved = resolve_privacy_scenario(data, text=text, cfg=cfg)
    if scaling_rule is not None:
        resolved = copy.deepcopy(resolved)
        resolved["scaling"]["rule"] = scaling_rule
    logger.debug("Loaded privacy scenario '%s' from %s", resolved["name"], path)
    return build_privacy_scenario(resolved, text=text), resolved
