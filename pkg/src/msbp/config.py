"""Experiment configuration: schema, validation, canonical round trip.

A config is one structured text file (YAML or JSON; YAML is a superset so a
single loader handles both) with four sections:

    model:       mechanism {b, c, jumps}, offspring [p0, p1, ...],
                 rate {kind, ...}, z0 [x0, y0]
    scheme:      dt, T, N, seed, caps [...]
    experiment:  kind + kind-specific grids (see EXPERIMENT_KEYS)
    output:      directory, formats

Unknown keys anywhere are rejected.  ``canonical`` returns the validated
structure as plain JSON-compatible data; parse(canonical(x)) == canonical(x),
and the config hash is the SHA-256 of its canonical JSON encoding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ModelError
from .mechanisms import (BranchingMechanism, ErgodicAffineRate, OffspringLaw,
                         RateFunction)
from .sde import SimScheme

EXPERIMENT_KEYS = {
    "simulate": {"t_grid", "lambda", "n_paths_dump"},
    "scaling-limit": {"k_list", "gamma_rule", "t_end", "lambda_grid",
                      "tol_extra"},
    "martingale": {"lambda_grid", "t_grid", "checkpoints", "tol_extra",
                   "n_boot"},
    "extinction": {"horizons", "lambda_grid", "min_joint_fraction"},
    "coupling": {"z0", "zt0", "t_grid", "w1_times", "w1_n", "tol_factor"},
    "generator-check": {"k_list", "gamma_rule", "lambda_grid", "x_grid",
                        "y_grid"},
}

_MODEL_KEYS = {"mechanism", "offspring", "rate", "z0"}
_SCHEME_KEYS = {"dt", "T", "N", "seed", "caps", "small_jump_threshold"}
_OUTPUT_KEYS = {"directory", "formats"}
_TOP_KEYS = {"model", "scheme", "experiment", "output"}


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ModelError(f"unknown keys in {where}: {sorted(unknown)}")


def _expand_m_table(spec):
    """m_table is a list, or a named family {name, y_max}."""
    if isinstance(spec, dict):
        _reject_unknown(spec, {"name", "y_max"}, "rate.m_table")
        name = spec.get("name")
        y_max = int(spec.get("y_max", 200))
        if name == "harmonic":
            # m(y) = 1/(y+1): division slows as the population grows;
            # m(y)*y increases to 1, so the natural tail value is 1.
            return [1.0 / (y + 1) for y in range(y_max + 1)], 1.0
        if name == "zero":
            return [0.0], 0.0
        raise ModelError(f"unknown m_table family {name!r}")
    return [float(v) for v in spec], None


@dataclass(frozen=True)
class ExperimentConfig:
    mechanism: BranchingMechanism
    offspring: OffspringLaw
    rate: RateFunction
    z0: tuple
    scheme: SimScheme
    n: int
    experiment: dict
    output_dir: str
    formats: tuple

    @property
    def kind(self) -> str:
        return self.experiment["kind"]

    def canonical(self) -> dict:
        return {
            "model": {
                "mechanism": self.mechanism.to_config(),
                "offspring": self.offspring.to_config(),
                "rate": self.rate.to_config(),
                "z0": [float(self.z0[0]), int(self.z0[1])],
            },
            "scheme": {
                "dt": self.scheme.dt, "T": self.scheme.horizon,
                "N": self.n, "seed": self.scheme.seed,
                "caps": list(self.scheme.caps),
                "small_jump_threshold": self.scheme.small_jump_threshold,
            },
            "experiment": json.loads(json.dumps(self.experiment,
                                                sort_keys=True)),
            "output": {"directory": self.output_dir,
                       "formats": list(self.formats)},
        }

    def sha256(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True,
                          separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ModelError("config must be a mapping")
    _reject_unknown(data, _TOP_KEYS, "config")
    for key in ("model", "scheme", "experiment"):
        if key not in data:
            raise ModelError(f"config is missing the {key!r} section")

    model = data["model"]
    _reject_unknown(model, _MODEL_KEYS, "model")
    mech_cfg = dict(model.get("mechanism", {}))
    _reject_unknown(mech_cfg, {"b", "c", "jumps"}, "model.mechanism")
    if "jumps" in mech_cfg:
        jk = mech_cfg["jumps"]
        _reject_unknown(jk, {"kind", "atoms", "alpha", "eps", "cap", "scale"},
                        "model.mechanism.jumps")
    mech = BranchingMechanism.from_config(mech_cfg)
    law = OffspringLaw.from_config(model.get("offspring", [1.0]))
    rate_cfg = dict(model.get("rate", {"kind": "constant", "r": 1.0}))
    _reject_unknown(rate_cfg,
                    {"kind", "r", "m_table", "tail_my", "x_nodes", "values"},
                    "model.rate")
    if rate_cfg.get("kind") == "affine":
        table, default_tail = _expand_m_table(rate_cfg.get("m_table", [0.0]))
        rate_cfg["m_table"] = table
        if "tail_my" not in rate_cfg and default_tail is not None:
            rate_cfg["tail_my"] = default_tail
    rate = RateFunction.from_config(rate_cfg)
    z0_raw = model.get("z0", [1.0, 1])
    z0 = (float(z0_raw[0]), int(z0_raw[1]))
    if z0[0] < 0 or z0[1] < 0:
        raise ModelError("z0 must lie in [0, inf) x N")

    sch = data["scheme"]
    _reject_unknown(sch, _SCHEME_KEYS, "scheme")
    scheme = SimScheme(
        dt=float(sch.get("dt", 1e-3)),
        horizon=float(sch.get("T", 1.0)),
        seed=int(sch.get("seed", 0)),
        small_jump_threshold=float(sch.get("small_jump_threshold", 0.0)),
        caps=tuple(float(v) for v in sch.get("caps", ())))
    n = int(sch.get("N", 1000))
    if n < 1:
        raise ModelError("scheme.N must be >= 1")

    exp = dict(data["experiment"])
    kind = exp.get("kind")
    if kind not in EXPERIMENT_KEYS:
        raise ModelError(
            f"experiment.kind must be one of {sorted(EXPERIMENT_KEYS)}, "
            f"got {kind!r}")
    _reject_unknown(exp, EXPERIMENT_KEYS[kind] | {"kind"},
                    f"experiment ({kind})")

    out = data.get("output", {})
    _reject_unknown(out, _OUTPUT_KEYS, "output")
    formats = tuple(out.get("formats", ("json", "csv", "png")))
    bad = set(formats) - {"json", "csv", "png"}
    if bad:
        raise ModelError(f"unknown output formats: {sorted(bad)}")

    return ExperimentConfig(mech, law, rate, z0, scheme, n, exp,
                            str(out.get("directory", "runs")), formats)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelError(f"config {path} does not parse: {exc}") from exc
    return parse_config(data)
