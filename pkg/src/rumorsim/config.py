"""Strict JSON run configurations for the command-line front end.

A run configuration is one JSON document.  Unknown keys are rejected, every
diagnostic names the offending field by its dotted path, and nothing is
half-applied: parsing either returns a complete RunConfig or raises.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .integrate import IntegratorConfig
from .ledger import LedgerParams
from .models import BlockRateParams, PopulationConfig


class ConfigError(ValueError):
    """A configuration problem, carrying the dotted field path."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


MODELS = ("sir", "bsir")
ENGINES = ("ode", "abm")


@dataclass(frozen=True)
class SweepSpec:
    """Value grids for the sweep commands."""

    epsilon_values: tuple[float, ...]
    delta_values: tuple[float, ...]
    snapshot_day: float = 2.0

    def __post_init__(self) -> None:
        if not self.epsilon_values:
            raise ValueError("epsilon_values must not be empty")
        if not self.delta_values:
            raise ValueError("delta_values must not be empty")
        for eps in self.epsilon_values:
            if math.isnan(eps) or eps < 0.0:
                raise ValueError(f"epsilon values must be >= 0 (inf allowed), got {eps!r}")
        for delta in self.delta_values:
            if not math.isfinite(delta) or delta < 0.0:
                raise ValueError(f"delta values must be finite and >= 0, got {delta!r}")
        if not (math.isfinite(self.snapshot_day) and self.snapshot_day >= 0.0):
            raise ValueError(f"snapshot_day must be finite and >= 0, got {self.snapshot_day!r}")


@dataclass(frozen=True)
class AbmSettings:
    """The agent-engine knobs a config file may set."""

    graph_seed: int = 1
    sim_seed: int = 2
    dt: float = 0.01
    t_end: float = 10.0
    mode: str = "parametric"
    info_is_rumor: bool = True
    info_id: str = "info-0"
    ledger: LedgerParams = LedgerParams()


@dataclass(frozen=True)
class OutputPaths:
    csv: Optional[str] = None
    svg: Optional[str] = None
    chain: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    model: str
    engine: str
    rates: BlockRateParams
    pop: PopulationConfig
    integrator: IntegratorConfig
    abm: Optional[AbmSettings]
    sweep: Optional[SweepSpec]
    output: OutputPaths


def parse_epsilon(value, path: str) -> float:
    """Extended-real enrollment ratio: a number, or "inf" for everyone."""
    if isinstance(value, str):
        if value.lower() in ("inf", "infinite", "infinity"):
            return math.inf
        raise ConfigError(path, f"expected a number or 'inf', got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number or 'inf', got {value!r}")
    return float(value)


def format_epsilon(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.12g}"


def _expect_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(obj: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")


def _get_number(obj: dict, key: str, path: str, default=None) -> float:
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required number")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _get_int(obj: dict, key: str, path: str, default=None) -> int:
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required integer")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {value!r}")
    return value


def _get_str(obj: dict, key: str, path: str, default=None, choices=None) -> str:
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required string")
        return default
    value = obj[key]
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}", f"expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}.{key}", f"expected one of {list(choices)}, got {value!r}")
    return value


def _get_bool(obj: dict, key: str, path: str, default: bool) -> bool:
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}", f"expected true/false, got {value!r}")
    return value


def _parse_rates(obj: dict, path: str) -> BlockRateParams:
    obj = _expect_object(obj, path)
    allowed = {"spread_prob_enrolled", "dismiss_prob_enrolled",
               "spread_prob_unenrolled", "dismiss_prob_unenrolled",
               "stifle_prob", "forget_rate", "mean_degree", "enforce_caution"}
    _reject_unknown(obj, allowed, path)
    try:
        return BlockRateParams(
            spread_prob_enrolled=_get_number(obj, "spread_prob_enrolled", path),
            dismiss_prob_enrolled=_get_number(obj, "dismiss_prob_enrolled", path),
            spread_prob_unenrolled=_get_number(obj, "spread_prob_unenrolled", path),
            dismiss_prob_unenrolled=_get_number(obj, "dismiss_prob_unenrolled", path),
            stifle_prob=_get_number(obj, "stifle_prob", path),
            forget_rate=_get_number(obj, "forget_rate", path),
            mean_degree=_get_number(obj, "mean_degree", path),
            enforce_caution=_get_bool(obj, "enforce_caution", path, False),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_population(obj: dict, path: str) -> PopulationConfig:
    obj = _expect_object(obj, path)
    _reject_unknown(obj, {"size", "initial_spreaders", "enrollment_ratio"}, path)
    ratio = parse_epsilon(obj.get("enrollment_ratio", 0.0), f"{path}.enrollment_ratio")
    try:
        return PopulationConfig(
            size=_get_int(obj, "size", path),
            initial_spreaders=_get_int(obj, "initial_spreaders", path, 1),
            enrollment_ratio=ratio,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_integrator(obj: Optional[dict], path: str) -> IntegratorConfig:
    if obj is None:
        return IntegratorConfig()
    obj = _expect_object(obj, path)
    _reject_unknown(obj, {"dt", "t_end", "extinction_threshold"}, path)
    try:
        return IntegratorConfig(
            dt=_get_number(obj, "dt", path, 0.01),
            t_end=_get_number(obj, "t_end", path, 25.0),
            extinction_threshold=_get_number(obj, "extinction_threshold", path, 1e-4),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_ledger(obj: Optional[dict], path: str) -> LedgerParams:
    if obj is None:
        return LedgerParams()
    obj = _expect_object(obj, path)
    allowed = {"base_price", "markup", "risk_aversion", "initial_credit",
               "validation_delay_days", "reward_multiplier"}
    _reject_unknown(obj, allowed, path)
    try:
        return LedgerParams(
            base_price=_get_int(obj, "base_price", path, 10),
            markup=_get_number(obj, "markup", path, 0.5),
            risk_aversion=_get_number(obj, "risk_aversion", path, 0.7),
            initial_credit=_get_int(obj, "initial_credit", path, 100),
            validation_delay_days=_get_number(obj, "validation_delay_days", path, 1.0),
            reward_multiplier=_get_number(obj, "reward_multiplier", path, 2.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_abm(obj: Optional[dict], path: str) -> Optional[AbmSettings]:
    if obj is None:
        return None
    obj = _expect_object(obj, path)
    allowed = {"graph_seed", "sim_seed", "dt", "t_end", "mode",
               "info_is_rumor", "info_id", "ledger"}
    _reject_unknown(obj, allowed, path)
    return AbmSettings(
        graph_seed=_get_int(obj, "graph_seed", path, 1),
        sim_seed=_get_int(obj, "sim_seed", path, 2),
        dt=_get_number(obj, "dt", path, 0.01),
        t_end=_get_number(obj, "t_end", path, 10.0),
        mode=_get_str(obj, "mode", path, "parametric", choices=("parametric", "ledger")),
        info_is_rumor=_get_bool(obj, "info_is_rumor", path, True),
        info_id=_get_str(obj, "info_id", path, "info-0"),
        ledger=_parse_ledger(obj.get("ledger"), f"{path}.ledger"),
    )


def _parse_sweep(obj: Optional[dict], path: str) -> Optional[SweepSpec]:
    if obj is None:
        return None
    obj = _expect_object(obj, path)
    _reject_unknown(obj, {"epsilon_values", "delta_values", "snapshot_day"}, path)
    eps_raw = obj.get("epsilon_values")
    if not isinstance(eps_raw, list) or not eps_raw:
        raise ConfigError(f"{path}.epsilon_values", "expected a non-empty list")
    epsilons = tuple(parse_epsilon(v, f"{path}.epsilon_values[{i}]")
                     for i, v in enumerate(eps_raw))
    delta_raw = obj.get("delta_values")
    if not isinstance(delta_raw, list) or not delta_raw:
        raise ConfigError(f"{path}.delta_values", "expected a non-empty list")
    deltas = []
    for i, v in enumerate(delta_raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.delta_values[{i}]", f"expected a number, got {v!r}")
        deltas.append(float(v))
    try:
        return SweepSpec(
            epsilon_values=epsilons,
            delta_values=tuple(deltas),
            snapshot_day=_get_number(obj, "snapshot_day", path, 2.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_output(obj: Optional[dict], path: str) -> OutputPaths:
    if obj is None:
        return OutputPaths()
    obj = _expect_object(obj, path)
    _reject_unknown(obj, {"csv", "svg", "chain"}, path)
    values = {}
    for key in ("csv", "svg", "chain"):
        if key in obj:
            if not isinstance(obj[key], str):
                raise ConfigError(f"{path}.{key}", f"expected a string path, got {obj[key]!r}")
            values[key] = obj[key]
    return OutputPaths(**values)


def parse_run_config(doc: dict) -> RunConfig:
    """Validate a whole configuration document."""
    doc = _expect_object(doc, "<config>")
    allowed = {"model", "engine", "rates", "population", "integrator",
               "abm", "sweep", "output"}
    _reject_unknown(doc, allowed, "")
    model = _get_str(doc, "model", "<config>", choices=MODELS)
    engine = _get_str(doc, "engine", "<config>", choices=ENGINES)
    if "rates" not in doc:
        raise ConfigError("rates", "missing required section")
    if "population" not in doc:
        raise ConfigError("population", "missing required section")
    config = RunConfig(
        model=model,
        engine=engine,
        rates=_parse_rates(doc["rates"], "rates"),
        pop=_parse_population(doc["population"], "population"),
        integrator=_parse_integrator(doc.get("integrator"), "integrator"),
        abm=_parse_abm(doc.get("abm"), "abm"),
        sweep=_parse_sweep(doc.get("sweep"), "sweep"),
        output=_parse_output(doc.get("output"), "output"),
    )
    if engine == "abm" and config.abm is None:
        raise ConfigError("abm", "engine 'abm' requires the abm section")
    return config


def load_config_file(path) -> dict:
    """Read a JSON document, mapping syntax errors to ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``key.path=value`` overrides to a raw document.

    Values parse as JSON when possible and fall back to plain strings, so
    ``--set integrator.dt=0.005`` and ``--set output.csv=out.csv`` both work.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value")
        key_path, raw_value = item.split("=", 1)
        keys = key_path.split(".")
        if not all(keys):
            raise ConfigError(key_path, "override key path has empty segments")
        try:
            value = json.loads(raw_value)
        except json.JSONDecodeError:
            value = raw_value
        target = doc
        for key in keys[:-1]:
            nxt = target.get(key)
            if nxt is None:
                nxt = {}
                target[key] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(key_path, f"cannot descend into non-object {key!r}")
            target = nxt
        target[keys[-1]] = value
    return doc


def build_abm_config(config: RunConfig):
    """Assemble the agent-engine configuration from a parsed run config."""
    from .abm import AbmConfig

    settings = config.abm if config.abm is not None else AbmSettings()
    try:
        return AbmConfig(
            pop=config.pop,
            rates=config.rates,
            graph_seed=settings.graph_seed,
            sim_seed=settings.sim_seed,
            dt=settings.dt,
            t_end=settings.t_end,
            mode=settings.mode,
            ledger_params=settings.ledger,
            info_is_rumor=settings.info_is_rumor,
            info_id=settings.info_id,
        )
    except ValueError as exc:
        raise ConfigError("abm", str(exc)) from exc
