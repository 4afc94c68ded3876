"""Scenario configuration: TOML loading, validation, canonical hashing.

The schema is documented in docs/scenario-schema.toml; every tolerance has
a default here and the effective values are echoed into reports.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ScenarioConfig", "ConfigError", "load_config", "config_hash",
           "DEFAULT_TOLERANCES"]


class ConfigError(ValueError):
    """Configuration parse/validation failure with the offending key."""


DEFAULT_TOLERANCES = {
    "boundary": 1e-9,
    "frame": 1e-8,
    "conformal": 1e-10,
    "metric_eps": 1e-12,
    "comparison_abs": 1e-6,
    "comparison_rel": 1e-4,
    "hessian_rel": 1e-5,
    "criticality_angle": 1e-8,
    "criticality_saturation": 1e-10,
    "reparam_rel": 1e-3,
    "null": None,            # None -> 1e-6 * scale rule
    "fd_t0_scale": 1e-3,
}

_CHART_KEYS = {
    "spherical-cap": {"theta_c", "branch_power", "flip_orientation"},
    "flat-disk": {"branch_power", "flip_orientation"},
    "graph-perturbation": {"coeffs"},
    "linear-map": {"a", "b"},
    "cylinder-bridge": {"radius"},
}
_REGION_KEYS = {
    "half-space": {"z0"},
    "unit-ball": set(),
    "solid-cylinder": {"radius"},
}
_SUITES = ("geometry", "hessians", "comparison", "reparam", "spectra", "bounds")

_TOP_KEYS = {"scenario", "chart", "ambient", "grid", "capillary", "variations",
             "tolerances", "bounds", "output"}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    suites: tuple[str, ...]
    chart_family: str
    chart_params: dict
    region_name: str
    region_params: dict
    n_r: int
    n_phi: int
    r0: float
    t_range: tuple[float, float]
    ladder: tuple[tuple[int, int], ...]
    h: float
    theta: float | None            # None -> use the sampled contact angle
    n_fields: int
    field_degree: int
    rho_max: float
    topology_signature: tuple[int, int, int, int]
    sobolev_fields: int
    extension_eps: float
    tolerances: dict = dc_field(default_factory=dict)
    out_dir: str = "out"
    strict: bool = False
    workers: int = 1
    export_obj: bool = False
    export_csv: bool = True
    user_constant: float | None = None

    def as_dict(self) -> dict:
        d = {
            "name": self.name, "seed": self.seed, "suites": list(self.suites),
            "chart": {"family": self.chart_family, **self.chart_params},
            "ambient": {"region": self.region_name, **self.region_params},
            "grid": {"n_r": self.n_r, "n_phi": self.n_phi, "r0": self.r0,
                     "t_range": list(self.t_range),
                     "ladder": [list(t) for t in self.ladder]},
            "capillary": {"h": self.h, "theta": self.theta},
            "variations": {"count": self.n_fields, "degree": self.field_degree},
            "bounds": {"rho_max": self.rho_max,
                       "signature": list(self.topology_signature),
                       "sobolev_fields": self.sobolev_fields,
                       "extension_eps": self.extension_eps,
                       "user_constant": self.user_constant},
            "tolerances": self.tolerances,
        }
        return d


def _check_keys(section: dict, allowed: set, where: str):
    for k in section:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in [{where}]")


def load_config(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    p = Path(path)
    try:
        raw = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: TOML parse error: {exc}") from exc
    return parse_config(raw, name_default=p.stem, overrides=overrides)


def parse_config(raw: dict, name_default: str = "scenario",
                 overrides: dict | None = None) -> ScenarioConfig:
    _check_keys(raw, _TOP_KEYS, "top level")
    sc = raw.get("scenario", {})
    _check_keys(sc, {"name", "seed", "suites"}, "scenario")
    suites = tuple(sc.get("suites", list(_SUITES)))
    for s in suites:
        if s not in _SUITES:
            raise ConfigError(f"unknown suite {s!r} in [scenario].suites")
    if "reparam" in suites and "spectra" not in suites:
        raise ConfigError("[scenario].suites: 'reparam' requires 'spectra' "
                          "(eigenfunction source)")

    ch = raw.get("chart", {})
    fam = ch.get("family")
    if fam not in _CHART_KEYS:
        raise ConfigError(f"[chart].family: unknown chart name {fam!r} "
                          f"(choose from {sorted(_CHART_KEYS)})")
    _check_keys(ch, _CHART_KEYS[fam] | {"family"}, "chart")
    chart_params = {k: v for k, v in ch.items() if k != "family"}
    if fam == "graph-perturbation" and "coeffs" in chart_params:
        chart_params["coeffs"] = {tuple(int(x) for x in k.split(",")): float(v)
                                  for k, v in chart_params["coeffs"].items()}

    am = raw.get("ambient", {})
    region = am.get("region")
    if region not in _REGION_KEYS:
        raise ConfigError(f"[ambient].region: unknown region {region!r} "
                          f"(choose from {sorted(_REGION_KEYS)})")
    _check_keys(am, _REGION_KEYS[region] | {"region"}, "ambient")
    region_params = {k: v for k, v in am.items() if k != "region"}

    gr = raw.get("grid", {})
    _check_keys(gr, {"n_r", "n_phi", "r0", "t_range", "ladder"}, "grid")
    n_r = int(gr.get("n_r", 64))
    n_phi = int(gr.get("n_phi", 128))
    r0 = float(gr.get("r0", 1e-4))
    t_range = tuple(gr.get("t_range", (-1.0, 1.0)))
    ladder = tuple(tuple(int(v) for v in pair)
                   for pair in gr.get("ladder", [[32, 64], [48, 96], [64, 128]]))

    cp = raw.get("capillary", {})
    _check_keys(cp, {"h", "theta"}, "capillary")
    h = float(cp.get("h", 0.0))
    theta = cp.get("theta")
    theta = float(theta) if theta is not None else None

    va = raw.get("variations", {})
    _check_keys(va, {"count", "degree"}, "variations")

    bd = raw.get("bounds", {})
    _check_keys(bd, {"rho_max", "signature", "sobolev_fields", "extension_eps",
                     "user_constant"}, "bounds")
    sig = tuple(int(v) for v in bd.get("signature", (0, 1, 0, 0)))
    if len(sig) != 4:
        raise ConfigError("[bounds].signature must be [g, m, b, d]")

    tol = dict(DEFAULT_TOLERANCES)
    tol_raw = raw.get("tolerances", {})
    _check_keys(tol_raw, set(DEFAULT_TOLERANCES), "tolerances")
    tol.update({k: float(v) for k, v in tol_raw.items()})

    out = raw.get("output", {})
    _check_keys(out, {"dir", "obj", "csv"}, "output")

    cfg = ScenarioConfig(
        name=sc.get("name", name_default),
        seed=int(sc.get("seed", 0)),
        suites=suites,
        chart_family=fam,
        chart_params=chart_params,
        region_name=region,
        region_params=region_params,
        n_r=n_r, n_phi=n_phi, r0=r0, t_range=t_range, ladder=ladder,
        h=h, theta=theta,
        n_fields=int(va.get("count", 3)),
        field_degree=int(va.get("degree", 2)),
        rho_max=float(bd.get("rho_max", 10.0)),
        topology_signature=sig,
        sobolev_fields=int(bd.get("sobolev_fields", 100)),
        extension_eps=float(bd.get("extension_eps", 0.5)),
        tolerances=tol,
        out_dir=str(out.get("dir", "out")),
        export_obj=bool(out.get("obj", False)),
        export_csv=bool(out.get("csv", True)),
    )
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def apply_overrides(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    import dataclasses
    return dataclasses.replace(cfg, **overrides)


def canonical_json(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.bool_,)):
            return bool(o)
        raise TypeError(f"not JSON serializable: {type(o)}")
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=default)


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.as_dict()).encode()).hexdigest()[:16]
