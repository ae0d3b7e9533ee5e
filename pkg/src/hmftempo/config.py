"""JSON run configuration for the command-line runner.

Example::

    {
      "model": {"single_qubit": {"omega_q": 1.0, "theta": 1.0}},
      "bath": {"ohmic_exp": {"alpha": 0.2, "omega_c": 10.0}},
      "beta": 1.0,
      "tempo": {"n_steps": 100, "svd_rel_cutoff": 1e-12, "max_bond": null},
      "sweep": {"parameter": "alpha", "values": [0.1, 0.2, 0.5]},
      "output": {"path": "out.csv", "format": "csv"}
    }

Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import copy
import json
import math
from typing import Any

from .bath import Discrete, OhmicExp
from .model import build_single_qubit, build_two_qubit
from .tensor_core import TruncationPolicy

SCHEMA_VERSION = 1

TEMPO_DEFAULTS = {"n_steps": 100, "svd_rel_cutoff": 1e-12, "max_bond": None}
MODEL_FIELDS = {"single_qubit": ("omega_q", "theta"), "two_qubit": ("omega_q",)}
BATH_FIELDS = {"ohmic_exp": ("alpha", "omega_c"), "discrete": ("modes",)}
SWEEPABLE = ("omega_q", "theta", "alpha", "omega_c", "beta", "n_steps", "svd_rel_cutoff")
TOP_LEVEL = ("model", "bath", "beta", "tempo", "sweep", "output", "converge", "oracle")
ORACLE_CHECKS = ("path_sum", "ed")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, field: str, problem: str):
        super().__init__(f"{field}: {problem}")
        self.field = field


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}{key}", "required field missing")
    return d[key]


def _no_unknown(d: dict, allowed, where: str):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}{extra[0]}", "unknown key")


def _number(value, field: str, positive=True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(field, "must be finite")
    if positive and not value > 0:
        raise ConfigError(field, f"must be > 0, got {value}")
    return value


def _check_scalar(name: str, value, field: str):
    if name == "theta":
        v = _number(value, field, positive=False)
        if not 0.0 <= v <= math.pi:
            raise ConfigError(field, f"theta must lie in [0, pi], got {v}")
        return v
    if name in ("n_steps",):
        if isinstance(value, bool) or not isinstance(value, int) or value < 2:
            raise ConfigError(field, f"must be an integer >= 2, got {value!r}")
        return value
    if name == "svd_rel_cutoff":
        v = _number(value, field, positive=False)
        if not 0.0 <= v < 1.0:
            raise ConfigError(field, f"must lie in [0, 1), got {v}")
        return v
    return _number(value, field)


def _one_variant(d, variants: dict, where: str):
    if not isinstance(d, dict) or len(d) != 1:
        raise ConfigError(where, f"expected exactly one of {sorted(variants)}")
    (kind, body), = d.items()
    if kind not in variants:
        raise ConfigError(f"{where}.{kind}", f"unknown variant; expected one of {sorted(variants)}")
    if not isinstance(body, dict):
        raise ConfigError(f"{where}.{kind}", "expected an object")
    return kind, body


def validate(raw: dict) -> dict:
    """Check ``raw`` and return the fully resolved configuration."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    _no_unknown(raw, TOP_LEVEL, "")
    cfg = copy.deepcopy(raw)

    kind, body = _one_variant(_require(cfg, "model", ""), MODEL_FIELDS, "model")
    _no_unknown(body, MODEL_FIELDS[kind] + ("counterterm",), f"model.{kind}.")
    for name in MODEL_FIELDS[kind]:
        body[name] = _check_scalar(name, _require(body, name, f"model.{kind}."), f"model.{kind}.{name}")
    ct = body.setdefault("counterterm", kind == "two_qubit")
    if not isinstance(ct, bool):
        raise ConfigError(f"model.{kind}.counterterm", "expected true or false")

    kind, body = _one_variant(_require(cfg, "bath", ""), BATH_FIELDS, "bath")
    _no_unknown(body, BATH_FIELDS[kind], f"bath.{kind}.")
    if kind == "ohmic_exp":
        for name in BATH_FIELDS[kind]:
            body[name] = _check_scalar(name, _require(body, name, "bath.ohmic_exp."), f"bath.ohmic_exp.{name}")
    else:
        modes = _require(body, "modes", "bath.discrete.")
        if not isinstance(modes, list) or not modes:
            raise ConfigError("bath.discrete.modes", "expected a non-empty list of [g, nu] pairs")
        for i, mode in enumerate(modes):
            if not isinstance(mode, list) or len(mode) != 2:
                raise ConfigError(f"bath.discrete.modes[{i}]", "expected [g, nu]")
            _number(mode[0], f"bath.discrete.modes[{i}][0]", positive=False)
            _number(mode[1], f"bath.discrete.modes[{i}][1]")

    cfg["beta"] = _check_scalar("beta", _require(cfg, "beta", ""), "beta")

    tempo = cfg.setdefault("tempo", {})
    if not isinstance(tempo, dict):
        raise ConfigError("tempo", "expected an object")
    _no_unknown(tempo, TEMPO_DEFAULTS, "tempo.")
    for key, default in TEMPO_DEFAULTS.items():
        tempo.setdefault(key, default)
    tempo["n_steps"] = _check_scalar("n_steps", tempo["n_steps"], "tempo.n_steps")
    tempo["svd_rel_cutoff"] = _check_scalar("svd_rel_cutoff", tempo["svd_rel_cutoff"], "tempo.svd_rel_cutoff")
    mb = tempo["max_bond"]
    if mb is not None and (isinstance(mb, bool) or not isinstance(mb, int) or mb < 1):
        raise ConfigError("tempo.max_bond", f"must be a positive integer or null, got {mb!r}")
    try:
        TruncationPolicy(tempo["svd_rel_cutoff"], mb)
    except ValueError as exc:
        raise ConfigError("tempo.svd_rel_cutoff", str(exc)) from None

    if "sweep" in cfg:
        _validate_sweep(cfg)
    out = cfg.setdefault("output", {})
    _no_unknown(out, ("path", "format"), "output.")
    out.setdefault("path", None)
    fmt = out.setdefault("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", f"must be 'csv' or 'json', got {fmt!r}")
    if "converge" in cfg:
        _validate_converge(cfg)
    if "oracle" in cfg:
        _validate_oracle(cfg)
    return cfg


def _scalar_fields(cfg: dict) -> dict:
    """Sweepable scalar names present in ``cfg`` mapped to (container, key)."""
    (mkind, mbody), = cfg["model"].items()
    (bkind, bbody), = cfg["bath"].items()
    fields = {"beta": (cfg, "beta")}
    fields.update({k: (mbody, k) for k in MODEL_FIELDS[mkind]})
    if bkind == "ohmic_exp":
        fields.update({k: (bbody, k) for k in BATH_FIELDS[bkind]})
    fields["n_steps"] = (cfg["tempo"], "n_steps")
    fields["svd_rel_cutoff"] = (cfg["tempo"], "svd_rel_cutoff")
    return fields


def _validate_sweep(cfg: dict):
    sweep = cfg["sweep"]
    if not isinstance(sweep, dict):
        raise ConfigError("sweep", "expected an object")
    _no_unknown(sweep, ("parameter", "values"), "sweep.")
    name = _require(sweep, "parameter", "sweep.")
    values = _require(sweep, "values", "sweep.")
    if name not in _scalar_fields(cfg):
        raise ConfigError("sweep.parameter", f"{name!r} is not a scalar field of this configuration")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values", "expected a non-empty list")
    checked = [_check_scalar(name, v, f"sweep.values[{i}]") for i, v in enumerate(values)]
    if checked != sorted(checked):
        raise ConfigError("sweep.values", "values must be sorted in ascending order")
    sweep["values"] = checked


def _validate_converge(cfg: dict):
    conv = cfg["converge"]
    if not isinstance(conv, dict):
        raise ConfigError("converge", "expected an object")
    _no_unknown(conv, ("n_steps", "svd_rel_cutoffs", "observable"), "converge.")
    ns = conv.setdefault("n_steps", [cfg["tempo"]["n_steps"]])
    eps = conv.setdefault("svd_rel_cutoffs", [cfg["tempo"]["svd_rel_cutoff"]])
    if not isinstance(ns, list) or not ns:
        raise ConfigError("converge.n_steps", "expected a non-empty list")
    if not isinstance(eps, list) or not eps:
        raise ConfigError("converge.svd_rel_cutoffs", "expected a non-empty list")
    conv["n_steps"] = [_check_scalar("n_steps", v, f"converge.n_steps[{i}]") for i, v in enumerate(ns)]
    conv["svd_rel_cutoffs"] = [
        _check_scalar("svd_rel_cutoff", v, f"converge.svd_rel_cutoffs[{i}]") for i, v in enumerate(eps)
    ]
    default_obs = "tauz" if "single_qubit" in cfg["model"] else "cross_coherence"
    obs = conv.setdefault("observable", default_obs)
    allowed = ("tauz", "taux", "log_z_ratio") if "single_qubit" in cfg["model"] else (
        "cross_coherence", "negativity", "log_z_ratio")
    if obs not in allowed:
        raise ConfigError("converge.observable", f"must be one of {allowed}, got {obs!r}")


def _validate_oracle(cfg: dict):
    orc = cfg["oracle"]
    if not isinstance(orc, dict):
        raise ConfigError("oracle", "expected an object")
    _no_unknown(orc, ("check", "fock_cutoff", "tolerance", "log_z_tolerance"), "oracle.")
    check = orc.setdefault("check", "path_sum")
    if check not in ORACLE_CHECKS:
        raise ConfigError("oracle.check", f"must be one of {ORACLE_CHECKS}, got {check!r}")
    if check == "ed" and "discrete" not in cfg["bath"]:
        raise ConfigError("oracle.check", "the 'ed' check needs a discrete bath")
    fc = orc.setdefault("fock_cutoff", 40)
    if isinstance(fc, bool) or not isinstance(fc, int) or fc < 2:
        raise ConfigError("oracle.fock_cutoff", f"must be an integer >= 2, got {fc!r}")
    orc["tolerance"] = _number(orc.setdefault("tolerance", 1e-10 if check == "path_sum" else 1e-4),
                               "oracle.tolerance")
    orc["log_z_tolerance"] = _number(orc.setdefault("log_z_tolerance", 1e-3), "oracle.log_z_tolerance")


def load(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
    return validate(raw)


def with_value(cfg: dict, name: str, value: Any) -> dict:
    """Copy of ``cfg`` with the scalar ``name`` replaced (used by sweeps)."""
    out = copy.deepcopy(cfg)
    container, key = _scalar_fields(out)[name]
    container[key] = value
    return out


def build(cfg: dict):
    """Objects described by ``cfg``: ``(model, J, beta, n_steps, policy, counterterm)``."""
    (mkind, mbody), = cfg["model"].items()
    if mkind == "single_qubit":
        model = build_single_qubit(mbody["omega_q"], mbody["theta"])
    else:
        model = build_two_qubit(mbody["omega_q"])
    (bkind, bbody), = cfg["bath"].items()
    if bkind == "ohmic_exp":
        J = OhmicExp(bbody["alpha"], bbody["omega_c"])
    else:
        J = Discrete(tuple(tuple(m) for m in bbody["modes"]))
    tempo = cfg["tempo"]
    policy = TruncationPolicy(tempo["svd_rel_cutoff"], tempo["max_bond"])
    return model, J, cfg["beta"], tempo["n_steps"], policy, mbody["counterterm"]
