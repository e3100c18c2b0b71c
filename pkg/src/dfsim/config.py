"""Experiment configuration: one flat JSON document per run.

Canonical schema (all other keys are rejected)::

    {
      "N": 5,                  // atom count, required
      "C": -5,                 // dark-subspace index, required, |C| <= N
      "protocol": "quench",    // quench | ramp | edge_shortcut | central_shortcut
      "mu_q": 0.96,            // quench only
      "beta": 0.0073,          // ramp and shortcuts (1/time units of Gamma_c)
      "sign": -1,              // edge_shortcut only: -1 -> (N,0,0), +1 -> (0,0,N)
      "cutoff_factor": 5.0,    // edge_shortcut only, must exceed sqrt(2)
      "detuning_ratio": 0.1,   // Delta_c' / kappa, default 0.1
      "gamma_c": 1.0,          // defines the time unit, default 1.0
      "dt": 1e-3,              // default 1e-3 (quench/ramp), 1e-5 * t_final (shortcuts)
      "t_final": 318.0,        // in 1/Gamma_c; derived as 1/beta for ramps/shortcuts
      "samples": 1000,         // diagnostic samples per run
      "timeseries_path": "run.csv",
      "final_state_path": "run.json",
      "physical": { ... },     // optional raw-parameter block, see PhysicalParams
      "search_t_min": 60.0,    // search verb only
      "search_t_max": 400.0,   // search verb only
      "search_overlap_bound": 0.99
    }

Exactly one protocol variant may be configured: parameters belonging to a
different protocol are rejected.  JSON was chosen as the one canonical,
bit-exact, cross-language format; ``dump_config``/``load_config`` round-trip
exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .protocols import (
    CentralShortcutSchedule,
    EdgeShortcutSchedule,
    PhysicalParams,
    QuenchSchedule,
    RampSchedule,
)

PROTOCOLS = ("quench", "ramp", "edge_shortcut", "central_shortcut")

_PROTOCOL_KEYS = {
    "quench": {"mu_q"},
    "ramp": {"beta"},
    "edge_shortcut": {"beta", "sign", "cutoff_factor"},
    "central_shortcut": {"beta"},
}

_PHYSICAL_KEYS = {"kappa", "g", "omega1_amp", "omega2_amp", "eta", "delta_e", "delta_c_prime"}

_DEFAULT_DT = 1e-3
_DEFAULT_SHORTCUT_DT_FACTOR = 1e-5


@dataclass(frozen=True)
class ExperimentConfig:
    n_atoms: int
    c_index: int
    protocol: str
    mu_q: float | None = None
    beta: float | None = None
    sign: int | None = None
    cutoff_factor: float | None = None
    detuning_ratio: float = 0.1
    gamma_c: float = 1.0
    dt: float | None = None
    t_final: float | None = None
    samples: int = 1000
    timeseries_path: str | None = None
    final_state_path: str | None = None
    physical: PhysicalParams | None = None
    search_t_min: float | None = None
    search_t_max: float | None = None
    search_overlap_bound: float = 0.99

    # ------------------------------------------------------------------
    def validate(self, mode: str = "load") -> None:
        """Check invariants; ``mode`` is "load" (structure only), "run"
        (a complete runnable experiment) or "search"."""
        if self.n_atoms < 1:
            raise ConfigError("invariant violated: N must be >= 1")
        if abs(self.c_index) > self.n_atoms:
            raise ConfigError(f"invariant violated: |C| = {abs(self.c_index)} exceeds N = {self.n_atoms}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        allowed = _PROTOCOL_KEYS[self.protocol]
        for key in ("mu_q", "beta", "sign", "cutoff_factor"):
            if getattr(self, key) is not None and key not in allowed:
                raise ConfigError(
                    f"invariant violated: exactly one protocol variant may be configured; "
                    f"{key!r} does not belong to protocol {self.protocol!r}"
                )
        for rate, name in ((self.gamma_c, "gamma_c"), (self.dt, "dt"), (self.t_final, "t_final")):
            if rate is not None and rate <= 0.0:
                raise ConfigError(f"invariant violated: {name} must be positive")
        if self.samples < 1:
            raise ConfigError("invariant violated: samples must be >= 1")

        if self.protocol == "quench":
            if self.mu_q is None:
                raise ConfigError("quench requires mu_q")
            if not 0.0 <= self.mu_q < 1.0:
                raise ConfigError("invariant violated: mu_q must satisfy 0 <= mu_q < 1")
            if mode == "run" and self.t_final is None:
                raise ConfigError("quench requires t_final (the damping time)")
        else:
            searching = mode == "search" and self.protocol == "ramp"
            if self.beta is None and not searching:
                raise ConfigError(f"{self.protocol} requires beta")
            if self.beta is not None and self.t_final is not None:
                if not math.isclose(self.t_final, 1.0 / self.beta, rel_tol=1e-9):
                    raise ConfigError(
                        "invariant violated: t_final must equal 1/beta for ramps and shortcuts"
                    )
        if self.protocol == "edge_shortcut":
            sign = -1 if self.sign is None else self.sign
            if sign not in (-1, 1):
                raise ConfigError("sign must be -1 or +1")
            if self.c_index != sign * self.n_atoms:
                raise ConfigError(
                    f"invariant violated: edge shortcut targets C = sign*N = {sign * self.n_atoms}, "
                    f"config says C = {self.c_index}"
                )
        if self.protocol == "central_shortcut" and self.c_index != 0:
            raise ConfigError("invariant violated: the central shortcut lives at C = 0")
        if mode == "search":
            if self.protocol not in ("quench", "ramp"):
                raise ConfigError("search supports the quench and ramp protocols")
            if self.search_t_max is None:
                raise ConfigError("search requires search_t_max")

    # ------------------------------------------------------------------
    @property
    def resolved_t_final(self) -> float:
        if self.t_final is not None:
            return self.t_final
        if self.beta is not None:
            return 1.0 / self.beta
        raise ConfigError("t_final is undetermined (set t_final or beta)")

    @property
    def resolved_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        if self.protocol in ("edge_shortcut", "central_shortcut"):
            return _DEFAULT_SHORTCUT_DT_FACTOR * self.resolved_t_final
        return _DEFAULT_DT / self.gamma_c

    def schedule(self):
        rates = {"gamma_c": self.gamma_c, "detuning_ratio": self.detuning_ratio}
        if self.protocol == "quench":
            return QuenchSchedule(mu_q=self.mu_q, c_index=self.c_index, **rates)
        if self.protocol == "ramp":
            return RampSchedule(beta=self.beta, c_index=self.c_index, **rates)
        if self.protocol == "edge_shortcut":
            return EdgeShortcutSchedule(
                n_atoms=self.n_atoms,
                beta=self.beta,
                sign=-1 if self.sign is None else self.sign,
                cutoff_factor=5.0 if self.cutoff_factor is None else self.cutoff_factor,
                **rates,
            )
        return CentralShortcutSchedule(beta=self.beta, **rates)


_KEY_MAP = {"N": "n_atoms", "C": "c_index"}
_FIELD_MAP = {v: k for k, v in _KEY_MAP.items()}


def config_from_dict(raw: dict, mode: str = "load") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)} | set(_KEY_MAP)
    known -= {"n_atoms", "c_index"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        kwargs[_KEY_MAP.get(key, key)] = value
    for required in ("n_atoms", "c_index", "protocol"):
        if required not in kwargs:
            raise ConfigError(f"missing required key {_FIELD_MAP.get(required, required)!r}")
    physical = kwargs.get("physical")
    if physical is not None:
        if not isinstance(physical, dict):
            raise ConfigError("physical block must be an object")
        bad = set(physical) - _PHYSICAL_KEYS
        if bad:
            raise ConfigError(f"unknown physical keys: {sorted(bad)}")
        missing = _PHYSICAL_KEYS - set(physical) - {"delta_c_prime"}
        if missing:
            raise ConfigError(f"missing physical keys: {sorted(missing)}")
        if "gamma_c" in raw or "detuning_ratio" in raw:
            raise ConfigError(
                "gamma_c and detuning_ratio are derived from the physical block; "
                "do not set them explicitly alongside it"
            )
        kwargs["physical"] = PhysicalParams(**physical)
        kwargs["detuning_ratio"] = kwargs["physical"].delta_c_prime / kwargs["physical"].kappa
    if "sign" in kwargs and kwargs["sign"] is not None:
        kwargs["sign"] = int(kwargs["sign"])
    try:
        config = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    config.validate(mode=mode)
    return config


def config_to_dict(config: ExperimentConfig) -> dict:
    out: dict = {}
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        if f.name == "physical":
            value = {
                k: getattr(value, k)
                for k in sorted(_PHYSICAL_KEYS)
            }
        elif f.name == "detuning_ratio" and config.physical is not None:
            continue  # derived, not stored
        out[_FIELD_MAP.get(f.name, f.name)] = value
    return out


def load_config(path: str | Path, mode: str = "load") -> ExperimentConfig:
    """Load and validate a configuration file.

    Parse failures carry line/column context; validation failures name the
    violated invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(raw, mode=mode)


def dump_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
