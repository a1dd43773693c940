"""Structured run configuration for the command-line front end.

Configs are flat INI text: ``key = value`` lines under one section per
experiment family.  Keys carry explicit unit suffixes in the hardware's
conventions (N mm/deg for stiffness, cm for stride, deg for angles); the
loader converts to SI on construction.  Every key is validated against the
schema — unknown keys and malformed values are rejected with the offending
``section.key`` named — and omitted keys take the library defaults, so an
absent or empty file is a valid configuration.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

from .gait import GaitSchedule
from .params import ModelParams, default_params
from . import turning as _turning


class ConfigError(ValueError):
    """Rejected configuration, message naming the offending key."""


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> tuple:
    parts = [tok for chunk in s.split(",") for tok in chunk.split()]
    return tuple(float(tok) for tok in parts)


def _parse_opt_float(s: str):
    return None if not s.strip() else float(s)


def _parse_opt_int(s: str):
    return None if not s.strip() else int(s)


def _positive(v) -> bool:
    return v is None or v > 0


def _nonnegative(v) -> bool:
    return v is None or v >= 0


def _choice(*options):
    def check(v):
        return v in options
    return check, "must be one of " + ", ".join(repr(o) for o in options)


_POS = (_positive, "must be positive")
_NONNEG = (_nonnegative, "must be nonnegative")

# section -> key -> (parser, default, optional (predicate, message))
_SCHEMA: dict = {
    "model": {
        "n_modules": (int, 6, (lambda v: v >= 2, "must be at least 2")),
        "k1_nmm_deg": (float, 41.0, _POS),
        "k_rest_nmm_deg": (float, 41.0, _POS),
        "c_fric": (float, 240.0, _POS),
        "d_leg_m": (float, 0.05, _POS),
        "hip_offset_m": (float, 0.075, None),
        "total_mass_kg": (float, 8.5, _POS),
        "seg_length_m": (float, 0.225, _POS),
    },
    "gait": {
        "t_swing_s": (float, 0.29, _POS),
        "t_stance_s": (float, 0.31, _POS),
        "stride_cm": (float, 3.0, _POS),
        "phase_lag_deg": (float, -120.0, None),
        "lr_lag_deg": (float, 180.0, None),
        "steer_left_deg": (float, 0.0, None),
        "steer_right_deg": (float, 0.0, None),
        "steer_limit_deg": (float, 5.0, _POS),
    },
    "simulate": {
        "t_sim_s": (float, 60.0, _POS),
        "dt_s": (float, 2e-4, _POS),
        "dt_out_s": (float, 0.01, _POS),
        "perturb_deg": (float, math.degrees(1e-3), None),
        "perturb_joint": (int, 0, _NONNEG),
        "seed": (_parse_opt_int, None, None),
    },
    "floquet": {
        "k1_list_nmm_deg": (_parse_floats, (41.0, 29.0, 21.0, 17.0, 15.0,
                                            13.0, 11.0, 9.0), None),
        "uniform": (_parse_bool, False, None),
        "dt_s": (float, 2e-4, _POS),
        "h_fd": (float, 1e-6, _POS),
        "vary": (str, "", _choice("", "k2345", "gait_speed", "phase_lag",
                                  "n_modules")),
        "vary_values": (_parse_floats, (), None),
    },
    "diagram": {
        "study": (str, "sweep", _choice("sweep", "variations")),
        "k1_list_nmm_deg": (_parse_floats, (), None),
        "t_sim_s": (float, 60.0, _POS),
        "dt_s": (float, 2e-4, _POS),
        "dt_out_s": (float, 0.01, _POS),
        "perturb_deg": (float, math.degrees(1e-3), None),
        "seed": (_parse_opt_int, None, None),
    },
    "turning": {
        "psi_deg": (float, 45.0, None),
        "r_m": (float, 1.3, _POS),
        "k1_nmm_deg": (_parse_opt_float, None, _POS),
        "k_uniform_nmm_deg": (_parse_opt_float, None, _POS),
        "controller": (_parse_bool, True, None),
        "success_radius_m": (float, 0.15, _POS),
        "t_max_s": (float, 40.0, _POS),
        "eval_time_s": (float, 23.0, _POS),
        "perturb_deg": (float, 0.0, None),
        "perturb_joint": (int, 0, _NONNEG),
        "sensor_noise_deg": (float, 0.0, _NONNEG),
        "seed": (_parse_opt_int, None, None),
    },
    "compare": {
        "pitchfork_k1_nmm_deg": (_parse_floats, _turning.PITCHFORK_K1_SWEEP,
                                 None),
        "hopf_k_nmm_deg": (_parse_floats, _turning.HOPF_K_SWEEP, None),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration: one value per schema key."""

    values: dict

    def get(self, section: str, key: str):
        return self.values[section][key]

    def items(self):
        """(section, key, value) triples in stable schema order."""
        for section in _SCHEMA:
            for key in _SCHEMA[section]:
                yield section, key, self.values[section][key]


def load_config(path: str | Path | None = None) -> RunConfig:
    """Parse and validate a config file; None loads pure defaults."""
    values = {sec: {k: spec[1] for k, spec in keys.items()}
              for sec, keys in _SCHEMA.items()}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None, strict=True)
        cp.optionxform = str
        try:
            cp.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for section in cp.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in cp.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                parser, _, constraint = _SCHEMA[section][key]
                try:
                    val = parser(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"bad value for {section}.{key}: {exc}") from exc
                if constraint is not None:
                    check, message = constraint
                    if not check(val):
                        raise ConfigError(f"{section}.{key} {message}")
                values[section][key] = val
    return RunConfig(values)


def build_params(cfg: RunConfig) -> ModelParams:
    """Model parameters from the [model] section."""
    m = cfg.values["model"]
    try:
        return default_params(
            n_modules=m["n_modules"],
            k1_nmm_deg=m["k1_nmm_deg"],
            k_rest_nmm_deg=m["k_rest_nmm_deg"],
            c_fric=m["c_fric"],
            d_leg=m["d_leg_m"],
            hip_offset=m["hip_offset_m"],
            total_mass=m["total_mass_kg"],
            seg_length=m["seg_length_m"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [model] section: {exc}") from exc


def build_gait(cfg: RunConfig) -> GaitSchedule:
    """Gait schedule from the [gait] section."""
    gsec = cfg.values["gait"]
    try:
        return GaitSchedule(
            t_swing=gsec["t_swing_s"],
            t_stance=gsec["t_stance_s"],
            stride=gsec["stride_cm"] / 100.0,
            phase_lag=math.radians(gsec["phase_lag_deg"]),
            lr_lag=math.radians(gsec["lr_lag_deg"]),
            steer=(math.radians(gsec["steer_left_deg"]),
                   math.radians(gsec["steer_right_deg"])),
            steer_limit=math.radians(gsec["steer_limit_deg"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [gait] section: {exc}") from exc


def build_turning_task(cfg: RunConfig,
                       seed: int | None = None) -> _turning.TurningTask:
    """Turning task from the [turning] section (optional seed override)."""
    t = cfg.values["turning"]
    try:
        return _turning.TurningTask(
            psi=math.radians(t["psi_deg"]),
            R=t["r_m"],
            k1_nmm_deg=t["k1_nmm_deg"],
            k_uniform_nmm_deg=t["k_uniform_nmm_deg"],
            controller_on=t["controller"],
            success_radius=t["success_radius_m"],
            T_max=t["t_max_s"],
            eval_time=t["eval_time_s"],
            perturb=math.radians(t["perturb_deg"]),
            perturb_joint=t["perturb_joint"],
            sensor_noise=math.radians(t["sensor_noise_deg"]),
            seed=t["seed"] if seed is None else seed,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [turning] section: {exc}") from exc
