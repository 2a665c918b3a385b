"""Scenario files: YAML key-value documents describing one experiment.

Schema (every key optional unless noted; unknown keys are rejected)::

    name: str                         # defaults to the file stem
    description: str
    duration_s: float                 # > 0, default 60
    seed: int                         # default 0
    bottleneck_bps: float             # default 10e6
    bottleneck_delay_s: float         # default 0.02
    access_bps: float | null          # null -> 10x bottleneck
    buffer_pkts: int                  # default 600
    loss_prob: float                  # Bernoulli loss on the bottleneck, default 0
    packet_bytes: int                 # default 1000
    warmup_s: float                   # excluded from averages, default 10
    sample_interval_s: float          # flows.csv / queue.csv period, default 1
    flows:                            # required, non-empty
      - cc: phcc | reno | vegas | hstcp
        start_s: float                # default 0
        access_delay_s: float         # each access link, default 0.02
        count: int                    # replicate this entry, default 1
    tcp:   {cwnd_min, cwnd_max, initial_cwnd, rto_floor_s, rto_cap_s, dupack_threshold}
    phcc:  {alpha_pkts, theta_d, window_rounds, loss_prob_combine, d_max_combiner,
            critical_decay, initial_ssthresh, queue_gain, step_gain, max_increase_pkts,
            probe_increase_pkts, loss_ref_gain, congestive_backlog}
    vegas: {alpha, beta, gamma}
    reno:  {initial_ssthresh}
    sweep: {param: str, values: [...]}   # default sweep for ``phcclab sweep``

With the default delays every flow has a 2 * (20 + 20 + 20) = 120 ms base RTT.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .errors import ScenarioParseError, ScenarioValidationError
from .phcc import PhccParams

CONTROLLER_NAMES = ("phcc", "reno", "vegas", "hstcp")
SCENARIO_SUFFIX = ".scenario"


@dataclass(frozen=True)
class FlowSpec:
    cc: str = "phcc"
    start_s: float = 0.0
    access_delay_s: float = 0.02


@dataclass(frozen=True)
class TcpParams:
    cwnd_min: float = 2.0
    cwnd_max: float = 100_000.0
    initial_cwnd: float = 2.0
    rto_floor_s: float = 0.2
    rto_cap_s: float = 60.0
    dupack_threshold: int = 3


@dataclass(frozen=True)
class VegasParams:
    alpha: float = 1.0
    beta: float = 3.0
    gamma: float = 1.0


@dataclass(frozen=True)
class RenoParams:
    initial_ssthresh: float = 64.0


@dataclass(frozen=True)
class SweepDefault:
    param: str
    values: tuple


@dataclass(frozen=True)
class ScenarioConfig:
    flows: tuple[FlowSpec, ...]
    name: str = "scenario"
    description: str = ""
    duration_s: float = 60.0
    seed: int = 0
    bottleneck_bps: float = 10e6
    bottleneck_delay_s: float = 0.02
    access_bps: float | None = None
    buffer_pkts: int = 600
    loss_prob: float = 0.0
    packet_bytes: int = 1000
    warmup_s: float = 10.0
    sample_interval_s: float = 1.0
    tcp: TcpParams = TcpParams()
    phcc: PhccParams = field(default_factory=PhccParams)
    vegas: VegasParams = VegasParams()
    reno: RenoParams = RenoParams()
    sweep: SweepDefault | None = None

    def config_hash(self) -> str:
        payload = to_dict(self)
        payload.pop("description", None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_overrides(self, **changes) -> "ScenarioConfig":
        return validate(dataclasses.replace(self, **changes))


_SECTIONS = {"tcp": TcpParams, "phcc": PhccParams, "vegas": VegasParams, "reno": RenoParams}
_SCALAR_KEYS = {
    "name": str, "description": str, "duration_s": float, "seed": int,
    "bottleneck_bps": float, "bottleneck_delay_s": float, "access_bps": float,
    "buffer_pkts": int, "loss_prob": float, "packet_bytes": int, "warmup_s": float,
    "sample_interval_s": float,
}
_FLOW_KEYS = {"cc": str, "start_s": float, "access_delay_s": float, "count": int}


def _coerce(value: Any, kind: type, where: str):
    if kind is str:
        if not isinstance(value, str):
            raise ScenarioValidationError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ScenarioValidationError(f"{where}: expected a number, got {value!r}")
        else:
            raise ScenarioValidationError(f"{where}: expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ScenarioValidationError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _section(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ScenarioValidationError(f"{where}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, value in data.items():
        if key not in fields:
            raise ScenarioValidationError(f"{where}: unknown key {key!r}")
        default = getattr(cls(), key)
        if default is None:
            # optional numeric knob: None keeps the fallback
            out[key] = None if value is None else _coerce(value, float, f"{where}.{key}")
            continue
        kind = type(default) if not isinstance(default, bool) else bool
        out[key] = _coerce(value, kind, f"{where}.{key}") if kind in (int, float, str) else value
    return cls(**out)


def from_dict(data: Any, default_name: str = "scenario") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioValidationError("scenario must be a mapping at top level")
    kwargs: dict[str, Any] = {"name": default_name}
    flows = None
    for key, value in data.items():
        if key == "flows":
            flows = _parse_flows(value)
        elif key in _SECTIONS:
            kwargs[key] = _section(_SECTIONS[key], value, key)
        elif key == "sweep":
            kwargs["sweep"] = _parse_sweep(value)
        elif key in _SCALAR_KEYS:
            if key == "access_bps" and value is None:
                kwargs[key] = None
            else:
                kwargs[key] = _coerce(value, _SCALAR_KEYS[key], key)
        else:
            raise ScenarioValidationError(f"unknown key {key!r}")
    if flows is None:
        raise ScenarioValidationError("scenario needs a 'flows' list")
    return validate(ScenarioConfig(flows=flows, **kwargs))


def _parse_flows(value: Any) -> tuple[FlowSpec, ...]:
    if not isinstance(value, list) or not value:
        raise ScenarioValidationError("'flows' must be a non-empty list")
    flows: list[FlowSpec] = []
    for i, entry in enumerate(value):
        if not isinstance(entry, dict):
            raise ScenarioValidationError(f"flows[{i}]: expected a mapping")
        spec = {}
        for key, v in entry.items():
            if key not in _FLOW_KEYS:
                raise ScenarioValidationError(f"flows[{i}]: unknown key {key!r}")
            spec[key] = _coerce(v, _FLOW_KEYS[key], f"flows[{i}].{key}")
        count = spec.pop("count", 1)
        if count < 1:
            raise ScenarioValidationError(f"flows[{i}].count must be >= 1")
        flows.extend([FlowSpec(**spec)] * count)
    return tuple(flows)


def _parse_sweep(value: Any) -> SweepDefault:
    if not isinstance(value, dict) or set(value) != {"param", "values"}:
        raise ScenarioValidationError("'sweep' needs exactly 'param' and 'values'")
    if not isinstance(value["values"], list) or not value["values"]:
        raise ScenarioValidationError("sweep values must be a non-empty list")
    return SweepDefault(str(value["param"]), tuple(value["values"]))


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    def bad(msg):
        raise ScenarioValidationError(msg)

    if not cfg.flows:
        bad("at least one flow is required")
    if not cfg.duration_s > 0:
        bad("duration_s must be > 0")
    if not cfg.bottleneck_bps > 0:
        bad("bottleneck_bps must be > 0")
    if cfg.access_bps is not None and not cfg.access_bps > 0:
        bad("access_bps must be > 0")
    if cfg.bottleneck_delay_s < 0:
        bad("bottleneck_delay_s must be >= 0")
    if cfg.buffer_pkts < 1:
        bad("buffer_pkts must be >= 1")
    if not 0 <= cfg.loss_prob <= 1:
        bad("loss_prob must be in [0, 1]")
    if cfg.packet_bytes < 1:
        bad("packet_bytes must be >= 1")
    if not 0 <= cfg.warmup_s < cfg.duration_s:
        bad("warmup_s must be in [0, duration_s)")
    if not cfg.sample_interval_s > 0:
        bad("sample_interval_s must be > 0")
    for i, f in enumerate(cfg.flows):
        if f.cc not in CONTROLLER_NAMES:
            bad(f"flows[{i}].cc: unknown controller {f.cc!r} (known: {', '.join(CONTROLLER_NAMES)})")
        if f.start_s < 0 or f.start_s >= cfg.duration_s:
            bad(f"flows[{i}].start_s must be in [0, duration_s)")
        if f.access_delay_s < 0:
            bad(f"flows[{i}].access_delay_s must be >= 0")
    t = cfg.tcp
    if not 0 < t.cwnd_min <= t.initial_cwnd <= t.cwnd_max:
        bad("tcp: need 0 < cwnd_min <= initial_cwnd <= cwnd_max")
    if not 0 < t.rto_floor_s <= t.rto_cap_s:
        bad("tcp: need 0 < rto_floor_s <= rto_cap_s")
    if t.dupack_threshold < 1:
        bad("tcp.dupack_threshold must be >= 1")
    p = cfg.phcc
    if not p.alpha_pkts > 0:
        bad("phcc.alpha_pkts must be > 0")
    if not 0 <= p.theta_d <= 1:
        bad("phcc.theta_d must be in [0, 1]")
    if p.window_rounds < 1:
        bad("phcc.window_rounds must be >= 1")
    if p.loss_prob_combine not in ("clamp", "average"):
        bad("phcc.loss_prob_combine must be 'clamp' or 'average'")
    if p.d_max_combiner not in ("min", "max"):
        bad("phcc.d_max_combiner must be 'min' or 'max'")
    if not 0 < p.critical_decay <= 1:
        bad("phcc.critical_decay must be in (0, 1]")
    if p.max_increase_pkts is not None and not p.max_increase_pkts > 0:
        bad("phcc.max_increase_pkts must be > 0")
    if not p.probe_increase_pkts > 0:
        bad("phcc.probe_increase_pkts must be > 0")
    if not 0 <= p.loss_ref_gain <= 1:
        bad("phcc.loss_ref_gain must be in [0, 1]")
    if p.congestive_backlog < 0:
        bad("phcc.congestive_backlog must be >= 0")
    if not 0 < p.step_gain <= 1:
        bad("phcc.step_gain must be in (0, 1]")
    if not 0 < p.queue_gain <= 1:
        bad("phcc.queue_gain must be in (0, 1]")
    if not cfg.vegas.alpha < cfg.vegas.beta:
        bad("vegas: need alpha < beta")
    return cfg


def to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "flows":
            out["flows"] = [dataclasses.asdict(fl) for fl in value]
        elif f.name == "sweep":
            if value is not None:
                out["sweep"] = {"param": value.param, "values": list(value.values)}
        elif dataclasses.is_dataclass(value):
            out[f.name] = dataclasses.asdict(value)
        else:
            out[f.name] = value
    return out


def serialize(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def parse_text(text: str, default_name: str = "scenario") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"malformed scenario: {exc}") from exc
    return from_dict(data, default_name)


def parse_scenario(path) -> ScenarioConfig:
    """Load a scenario from a path, or from a canned scenario name."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        canned = canned_path(str(path))
        if canned is not None:
            p = canned
    try:
        text = p.read_text()
    except OSError as exc:
        raise OSError(f"cannot read scenario {path}: {exc.strerror or exc}") from exc
    stem = p.name[: -len(SCENARIO_SUFFIX)] if p.name.endswith(SCENARIO_SUFFIX) else p.stem
    return parse_text(text, stem)


def canned_dir() -> Path:
    return Path(str(resources.files("phcclab") / "scenarios"))


def canned_path(name: str) -> Path | None:
    p = canned_dir() / f"{name}{SCENARIO_SUFFIX}"
    return p if p.exists() else None


def list_scenarios() -> list[tuple[str, str]]:
    out = []
    for p in sorted(canned_dir().glob(f"*{SCENARIO_SUFFIX}")):
        cfg = parse_scenario(p)
        out.append((cfg.name, cfg.description))
    return out


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    param: str
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise ScenarioValidationError("a sweep needs at least one value")

    def configs(self) -> list[ScenarioConfig]:
        return [apply_param(self.base, self.param, v) for v in self.values]


def apply_param(cfg: ScenarioConfig, param: str, value: Any) -> ScenarioConfig:
    """Return ``cfg`` with ``param`` (``key``, ``section.key`` or ``cc``) set to ``value``."""
    data = to_dict(cfg)
    data.pop("sweep", None)
    if param == "cc":
        for fl in data["flows"]:
            fl["cc"] = value
    elif param == "access_delay_s":
        for fl in data["flows"]:
            fl["access_delay_s"] = value
    elif "." in param:
        section, key = param.split(".", 1)
        if section not in _SECTIONS or not isinstance(data.get(section), dict) \
                or key not in data[section]:
            raise ScenarioValidationError(f"unknown sweep parameter {param!r}")
        data[section][key] = value
    elif param in _SCALAR_KEYS and param not in ("name", "description"):
        data[param] = value
    else:
        raise ScenarioValidationError(f"unknown sweep parameter {param!r}")
    return from_dict(data, cfg.name)


def _scalar(value: Any) -> Any:
    # YAML 1.1 reads "1e-5" as a string; numbers written that way are still numbers
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def parse_param_arg(arg: str) -> tuple[str, tuple]:
    """Parse ``name=v1,v2,...`` into the name and YAML-typed values."""
    if "=" not in arg:
        raise ScenarioValidationError(f"expected name=v1,v2,... got {arg!r}")
    name, raw = arg.split("=", 1)
    values = tuple(_scalar(yaml.safe_load(v)) for v in raw.split(",") if v.strip())
    if not values:
        raise ScenarioValidationError(f"no values given for {name!r}")
    return name.strip(), values
