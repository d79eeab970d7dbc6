"""
Experiment configuration: JSON documents validated against per-protocol schemas.
A schema maps field -> (accepted types, default); REQUIRED marks fields without a default.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from utils.common import ConfigError

logger = logging.getLogger(__name__)

REQUIRED = object()

Schema = Mapping[str, Tuple[tuple, Any]]

NUMBER = (int, float)
SCHEME_DEFAULT = {"kind": "hadamard"}

PATH_FIELDS: Dict[str, Tuple[tuple, Any]] = {
    "r": ((int,), REQUIRED),
    "n": ((int,), REQUIRED),
    "k": ((int,), 1),
    "scheme": ((dict,), SCHEME_DEFAULT),
}

PROTOCOL_SCHEMAS: Dict[str, Schema] = {
    "eq_path": {**PATH_FIELDS, "x": ((str,), REQUIRED), "y": ((str,), REQUIRED), "gap": ((int, type(None)), None)},
    "eq_tree": {
        "topology": ((dict,), REQUIRED),
        "n": ((int,), REQUIRED),
        "k": ((int,), 1),
        "scheme": ((dict,), SCHEME_DEFAULT),
        "direction": ((str,), "leaves_to_root"),
    },
    "eq_relay": {
        **PATH_FIELDS,
        "x": ((str,), REQUIRED),
        "y": ((str,), REQUIRED),
        "segment_length": ((int, type(None)), None),
        "reps_per_segment": ((int, type(None)), None),
        "relay_values": ((list, type(None)), None),
    },
    "rv": {
        "topology": ((dict,), REQUIRED),
        "inputs": ((list,), REQUIRED),
        "i": ((int,), REQUIRED),
        "j": ((int,), REQUIRED),
        "n": ((int,), REQUIRED),
        "k": ((int,), 1),
        "scheme": ((dict,), SCHEME_DEFAULT),
    },
    "forall_f": {
        "topology": ((dict,), REQUIRED),
        "n": ((int,), REQUIRED),
        "k": ((int,), 1),
        "oneway": ((dict,), {"kind": "eq"}),
    },
    "from_oneway_qma": {
        **PATH_FIELDS,
        "x": ((str,), REQUIRED),
        "y": ((str,), REQUIRED),
        "oneway": ((dict,), {"kind": "eq"}),
    },
}
for _variant in ("gt", "gt_lt", "gt_ge", "gt_le"):
    PROTOCOL_SCHEMAS[_variant] = {**PATH_FIELDS, "x": ((int,), REQUIRED), "y": ((int,), REQUIRED),
                                  "index": ((int, type(None)), None)}

PROVER_SCHEMA: Schema = {
    "kind": ((str,), "honest"),
    "restarts": ((int,), 16),
    "max_iters": ((int,), 200),
    "tol": (NUMBER, 1e-9),
    "seed": ((int,), 0),
    "amplitudes": ((list, type(None)), None),
}
PROVER_KINDS = ("honest", "entangled_opt", "separable_opt", "explicit")

MODE_SCHEMA: Schema = {
    "kind": ((str,), "exact"),
    "shots": ((int,), 10000),
    "seed": ((int, type(None)), None),
}

EXPERIMENT_SCHEMA: Schema = {
    "protocol": ((str,), REQUIRED),
    "params": ((dict,), REQUIRED),
    "prover": ((dict,), {}),
    "mode": ((dict,), {}),
    "dim_cap": ((int, type(None)), None),
    "format": ((str,), "json"),
}

SWEEP_SCHEMA: Schema = {
    "template": ((dict,), REQUIRED),
    "axes": ((dict,), {}),
}

ATTACK_SCHEMAS: Dict[str, Schema] = {
    "classical_fooling": {
        "n": ((int,), REQUIRED),
        "r": ((int,), REQUIRED),
        "bits": ((int,), REQUIRED),
    },
    "separable_cut_paste": {
        **PATH_FIELDS,
        "i": ((int,), REQUIRED),
        "delta": (NUMBER, REQUIRED),
        "prefix_bits": ((int, type(None)), None),
    },
    "entangled_no_proof": {
        **PATH_FIELDS,
        "i": ((int,), REQUIRED),
        "gap": ((int, type(None)), None),
    },
}

ATTACK_SCHEMA: Schema = {
    "attack": ((str,), REQUIRED),
    "params": ((dict,), REQUIRED),
    "dim_cap": ((int, type(None)), None),
    "format": ((str,), "json"),
}

FORMATS = ("json", "csv")


def validate(schema: Schema, data: Any, where: str = "config") -> Dict[str, Any]:
    """Checks types, rejects unknown fields and fills in defaults."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {unknown}")
    out = {}
    for name, (types, default) in schema.items():
        if name not in data:
            if default is REQUIRED:
                raise ConfigError(f"{where}: missing required field {name!r}")
            out[name] = json.loads(json.dumps(default))
            continue
        value = data[name]
        # bool is an int subclass; never accept it for numeric fields
        if isinstance(value, bool) and bool not in types or not isinstance(value, types):
            expected = "/".join(t.__name__ for t in types)
            raise ConfigError(f"{where}.{name}: expected {expected}, got {type(value).__name__}")
        out[name] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    params: Dict[str, Any]
    prover: Dict[str, Any] = field(default_factory=lambda: validate(PROVER_SCHEMA, {}))
    mode: Dict[str, Any] = field(default_factory=lambda: validate(MODE_SCHEMA, {}))
    dim_cap: Optional[int] = None
    format: str = "json"

    @classmethod
    def from_dict(cls, data: Any) -> "ExperimentConfig":
        d = validate(EXPERIMENT_SCHEMA, data)
        protocol = d["protocol"]
        if protocol not in PROTOCOL_SCHEMAS:
            raise ConfigError(f"config.protocol: unknown protocol {protocol!r}, expected one of "
                              f"{sorted(PROTOCOL_SCHEMAS)}")
        params = validate(PROTOCOL_SCHEMAS[protocol], d["params"], "config.params")
        prover = validate(PROVER_SCHEMA, d["prover"], "config.prover")
        if prover["kind"] not in PROVER_KINDS:
            raise ConfigError(f"config.prover.kind: {prover['kind']!r} not in {list(PROVER_KINDS)}")
        if prover["kind"] == "explicit" and prover["amplitudes"] is None:
            raise ConfigError("config.prover: explicit prover needs amplitudes")
        mode = validate(MODE_SCHEMA, d["mode"], "config.mode")
        if mode["kind"] not in ("exact", "sample"):
            raise ConfigError(f"config.mode.kind: {mode['kind']!r} not in ['exact', 'sample']")
        if mode["shots"] < 1:
            raise ConfigError("config.mode.shots must be positive")
        if d["format"] not in FORMATS:
            raise ConfigError(f"config.format: {d['format']!r} not in {list(FORMATS)}")
        if d["dim_cap"] is not None and d["dim_cap"] < 1:
            raise ConfigError("config.dim_cap must be positive")
        return cls(protocol, params, prover, mode, d["dim_cap"], d["format"])

    def to_dict(self) -> dict:
        return {"protocol": self.protocol, "params": self.params, "prover": self.prover, "mode": self.mode,
                "dim_cap": self.dim_cap, "format": self.format}

    def with_params(self, **overrides) -> "ExperimentConfig":
        data = self.to_dict()
        data["params"] = {**self.params, **overrides}
        return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class SweepConfig:
    template: ExperimentConfig
    axes: Dict[str, List[Any]]

    @classmethod
    def from_dict(cls, data: Any) -> "SweepConfig":
        d = validate(SWEEP_SCHEMA, data, "sweep")
        template = ExperimentConfig.from_dict(d["template"])
        allowed = PROTOCOL_SCHEMAS[template.protocol]
        for name, values in d["axes"].items():
            if name not in allowed:
                raise ConfigError(f"sweep.axes: {name!r} is not a parameter of {template.protocol}")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.axes.{name}: expected a non-empty list")
        return cls(template, dict(d["axes"]))


@dataclass(frozen=True)
class AttackConfig:
    attack: str
    params: Dict[str, Any]
    dim_cap: Optional[int] = None
    format: str = "json"

    @classmethod
    def from_dict(cls, data: Any) -> "AttackConfig":
        d = validate(ATTACK_SCHEMA, data, "attack")
        if d["attack"] not in ATTACK_SCHEMAS:
            raise ConfigError(f"attack.attack: unknown attack {d['attack']!r}, expected one of {sorted(ATTACK_SCHEMAS)}")
        if d["format"] not in FORMATS:
            raise ConfigError(f"attack.format: {d['format']!r} not in {list(FORMATS)}")
        params = validate(ATTACK_SCHEMAS[d["attack"]], d["params"], "attack.params")
        return cls(d["attack"], params, d["dim_cap"], d["format"])


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


ONEWAY_SCHEMA: Schema = {
    "kind": ((str,), "eq"),
    "scheme": ((dict,), SCHEME_DEFAULT),
    "d": ((int,), 1),
    "majority": ((int,), 1),
}
ONEWAY_KINDS = ("eq", "hamming", "equality_exact")
