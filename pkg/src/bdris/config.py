"""Scenario configuration: defaults, JSON parsing and serialisation.

Powers may be given in dBm (``p_max_dbm``) or linear mW (``p_max_mw``) but
never both; everything is stored in linear mW.
"""

from __future__ import annotations

import copy
import dataclasses
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .alternating import AoConfig
from .channel import ArrayGeometry, LinkGeometry
from .manifold import ManifoldOptConfig
from .metrics import PowerConfig, dbm_to_mw


class Method(str, enum.Enum):
    OPTIMIZED = "optimized"
    RANDOM_PHASE = "random"
    DIAGONAL_RIS = "diagonal"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


FULL_SCALE_TRIALS = 10_000
DESK_TRIALS = 500

POWER_FIELDS = ("p_max", "q_p", "sigma_s_sq", "sigma_e_sq", "i_th")
LINK_NAMES = ("st_su", "st_eve", "st_pu", "pt_su", "pt_eve")


@dataclass(frozen=True)
class LinkSet:
    st_su: LinkGeometry = LinkGeometry(distance=100.0, rician_k=10.0)
    st_eve: LinkGeometry = LinkGeometry(distance=110.0, rician_k=10.0)
    st_pu: LinkGeometry = LinkGeometry(distance=110.0, rician_k=10.0)
    pt_su: LinkGeometry = LinkGeometry(distance=1000.0, rician_k=5.0)
    pt_eve: LinkGeometry = LinkGeometry(distance=800.0, rician_k=5.0)
    share_su_eve_angles: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    array: ArrayGeometry = ArrayGeometry(m_x=4, m_y=8)
    links: LinkSet = LinkSet()
    powers: PowerConfig = PowerConfig(p_max=dbm_to_mw(20.0), q_p=dbm_to_mw(40.0))
    ao: AoConfig = field(default_factory=AoConfig)
    trials: int = DESK_TRIALS
    base_seed: int = 0
    method: Method = Method.OPTIMIZED
    # every sweep point reuses the same trial seeds (common random numbers)
    paired_points: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed: must be an unsigned 64-bit integer")

    def with_elements(self, m: int) -> "ScenarioConfig":
        geom = ArrayGeometry.for_elements(m, carrier_frequency=self.array.carrier_frequency,
                                          element_spacing=self.array.element_spacing)
        return dataclasses.replace(self, array=geom)

    def with_powers(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, powers=dataclasses.replace(self.powers, **kw))


def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def _plain(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj


def to_dict(config: ScenarioConfig) -> dict[str, Any]:
    """Resolved config as JSON-ready data; powers use the ``*_mw`` keys."""
    d = _plain(config)
    d["powers"] = {f"{k}_mw": v for k, v in d["powers"].items()}
    return d


def to_json(config: ScenarioConfig) -> str:
    # json emits repr() floats, which round-trip exactly
    return json.dumps(to_dict(config), indent=2, sort_keys=True)


def _build(cls, data: dict, path: str, nested: dict | None = None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")
    kwargs = dict(data)
    for key, builder in (nested or {}).items():
        if key in kwargs:
            kwargs[key] = builder(kwargs[key], f"{path}.{key}")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_powers(data: dict, path: str) -> PowerConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    base = default_config().powers
    values = {}
    seen = set()
    for key, raw in data.items():
        for suffix, convert in (("_dbm", dbm_to_mw), ("_mw", float)):
            if key.endswith(suffix) and key[: -len(suffix)] in POWER_FIELDS:
                name = key[: -len(suffix)]
                if name in seen:
                    raise ConfigError(f"{path}.{name}: give either {name}_dbm or {name}_mw, not both")
                seen.add(name)
                if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                    raise ConfigError(f"{path}.{key}: expected a number")
                values[name] = convert(raw)
                break
        else:
            raise ConfigError(f"{path}: unknown field {key!r}")
    try:
        return dataclasses.replace(base, **values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_links(data: dict, path: str) -> LinkSet:
    base = LinkSet()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    kwargs = {}
    for key, value in data.items():
        if key == "share_su_eve_angles":
            kwargs[key] = bool(value)
            continue
        if key not in LINK_NAMES:
            raise ConfigError(f"{path}: unknown link {key!r}")
        merged = {**_plain(getattr(base, key)), **value} if isinstance(value, dict) else value
        kwargs[key] = _build(LinkGeometry, merged, f"{path}.{key}")
    return dataclasses.replace(base, **kwargs)


def _parse_ao(data: dict, path: str) -> AoConfig:
    return _build(AoConfig, data, path, {"manifold": lambda d, p: _build(ManifoldOptConfig, d, p)})


def from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Resolve a (possibly partial) config; missing fields take the defaults."""
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a JSON object")
    data = copy.deepcopy(data)
    if "method" in data:
        try:
            data["method"] = Method(data["method"])
        except ValueError:
            raise ConfigError(f"method: expected one of {[m.value for m in Method]}") from None
    base = default_config()
    if "array" in data and isinstance(data["array"], dict):
        data["array"] = {**_plain(base.array), **data["array"]}
    return _build(ScenarioConfig, data, "<root>", {
        "array": lambda d, p: _build(ArrayGeometry, d, p),
        "links": _parse_links,
        "powers": _parse_powers,
        "ao": _parse_ao,
    })


def parse_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from None
    return from_dict(data)


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``dotted.key=value`` overrides; values parse as JSON when possible."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key}: {part} is not an object")
        node[parts[-1]] = value
    return data
