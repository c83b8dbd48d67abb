"""Experiment configuration: JSON parsing, defaults, profiles, digests.

The "full" profile mirrors the reference bench setup (1.92 kOhm, 10 nF,
50 masks, square carrier at ~5.8 kHz, 0.4-1 V window, 100 MHz sampling).
The "desk" profile trades fidelity for runtime: 1 MHz sampling, a shorter
hold factor, fewer cases, and a slightly lower resistance where the
piecewise-linear diode model shows the same rich dynamics the reference
op-amp model shows near 1.92 kOhm.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from . import lwe as lwe_mod
from .circuit import ChuaParams, DiodePwl
from .errors import ConfigurationError
from .pipeline import ReservoirConfig
from .tasks import TaskSpec

PROFILES = ("full", "desk")


def carrier_frequency(r_variable: float, c1: float, omega: float = 0.7) -> float:
    """Drive frequency tied to the circuit's RC corner: omega / (2*pi*R*C1)."""
    return omega / (2.0 * math.pi * r_variable * c1)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs, seedable and hashable."""

    circuit: ChuaParams
    reservoir: ReservoirConfig
    task: TaskSpec
    lwe: lwe_mod.LweParams | None
    n_cases: int
    val_fraction: float
    master_seed: int
    out_dir: str
    profile: str = "full"

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigurationError("profile", f"must be one of {PROFILES}")
        if self.n_cases < 1:
            raise ConfigurationError("n_cases", "need at least 1 case")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigurationError("val_fraction", "must lie strictly between 0 and 1")


def default_config(profile: str = "full", task_kind: str = "polynomial") -> ExperimentConfig:
    """Built-in defaults; see the module docstring for the two profiles."""
    if profile == "desk":
        r_variable = 1800.0
        sample_rate = 1e6
        theta = 4
        n_cases = 320
    else:
        r_variable = 1920.0
        sample_rate = 1e8
        theta = 10
        n_cases = 2900
    c1 = 10e-9
    circuit = ChuaParams(r_variable=r_variable, c1=c1, c2=100e-9, l=18e-3, r_series=17.0)
    reservoir = ReservoirConfig(
        v_min=0.4,
        v_max=1.0,
        value_max=6.0,
        n_mask=50,
        mask_deviation=0.01,
        theta=theta,
        carrier="square",
        f_carrier=carrier_frequency(r_variable, c1),
        n_periods=5,
        sample_rate=sample_rate,
        middle_fraction=0.8,
        seed=0,
    )
    return ExperimentConfig(
        circuit=circuit,
        reservoir=reservoir,
        task=TaskSpec(kind=task_kind),
        lwe=lwe_mod.LweParams() if task_kind.startswith("lwe") else None,
        n_cases=n_cases,
        val_fraction=0.2,
        master_seed=0,
        out_dir="out",
        profile=profile,
    )


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigurationError(name, "must be a JSON object")
    return value


def _parse_circuit(d: dict, defaults: ChuaParams) -> ChuaParams:
    diode = defaults.diode
    if "diode" in d:
        dd = d["diode"]
        try:
            diode = DiodePwl(
                g_inner=float(dd.get("g_inner", diode.g_inner)),
                g_mid=float(dd.get("g_mid", diode.g_mid)),
                g_outer=float(dd.get("g_outer", diode.g_outer)),
                bp_inner=float(dd.get("bp_inner", diode.bp_inner)),
                bp_outer=float(dd.get("bp_outer", diode.bp_outer)),
            )
        except ConfigurationError as exc:
            raise ConfigurationError(f"circuit.{exc.field}", str(exc)) from None
    return ChuaParams(
        r_variable=float(d.get("r_variable", defaults.r_variable)),
        c1=float(d.get("c1", defaults.c1)),
        c2=float(d.get("c2", defaults.c2)),
        l=float(d.get("l", defaults.l)),
        r_series=float(d.get("r_series", defaults.r_series)),
        diode=diode,
    )


def parse_config(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file path, JSON text, or a dict.

    Missing fields fall back to the profile defaults (an empty object gives
    the full bench setup). Invariant violations raise ConfigurationError
    naming the offending field path.
    """
    if isinstance(source, dict):
        raw = source
    else:
        text = str(source)
        try:
            if Path(text).exists():
                text = Path(text).read_text()
        except OSError:
            pass
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError("<config>", f"malformed JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError("<config>", "top level must be a JSON object")

    profile = raw.get("profile", "full")
    task_kind = _section(raw, "task").get("kind", "polynomial")
    base = default_config(profile=profile, task_kind=task_kind)

    circuit = _parse_circuit(_section(raw, "circuit"), base.circuit)

    res_raw = _section(raw, "reservoir")
    res_defaults = base.reservoir
    # carrier frequency follows the circuit unless pinned explicitly
    f_carrier = res_raw.get("f_carrier", carrier_frequency(circuit.r_variable, circuit.c1))
    reservoir = ReservoirConfig(
        v_min=float(res_raw.get("v_min", res_defaults.v_min)),
        v_max=float(res_raw.get("v_max", res_defaults.v_max)),
        value_max=float(res_raw.get("value_max", res_defaults.value_max)),
        n_mask=int(res_raw.get("n_mask", res_defaults.n_mask)),
        mask_deviation=float(res_raw.get("mask_deviation", res_defaults.mask_deviation)),
        theta=int(res_raw.get("theta", res_defaults.theta)),
        carrier=str(res_raw.get("carrier", res_defaults.carrier)),
        f_carrier=float(f_carrier),
        n_periods=int(res_raw.get("n_periods", res_defaults.n_periods)),
        sample_rate=float(res_raw.get("sample_rate", res_defaults.sample_rate)),
        middle_fraction=float(res_raw.get("middle_fraction", res_defaults.middle_fraction)),
        use_envelope=bool(res_raw.get("use_envelope", res_defaults.use_envelope)),
        seed=int(res_raw.get("seed", res_defaults.seed)),
    )

    task_raw = _section(raw, "task")
    task = TaskSpec(
        kind=task_raw.get("kind", "polynomial"),
        x_range=tuple(task_raw.get("x_range", (0.1, 3.0))),
        modulo_base=float(task_raw.get("modulo_base", 1.3)),
        poly_mod_base=float(task_raw.get("poly_mod_base", 50.0)),
        pair_max=int(task_raw.get("pair_max", 40)),
        inner_radius=float(task_raw.get("inner_radius", 1.0)),
        outer_radii=tuple(task_raw.get("outer_radii", (1.5, 2.5))),
    )

    lwe_params = None
    if task.kind.startswith("lwe") or "lwe" in raw:
        lwe_params = lwe_mod.params_from_dict(raw.get("lwe", {}))

    return ExperimentConfig(
        circuit=circuit,
        reservoir=reservoir,
        task=task,
        lwe=lwe_params,
        n_cases=int(raw.get("n_cases", base.n_cases)),
        val_fraction=float(raw.get("val_fraction", base.val_fraction)),
        master_seed=int(raw.get("master_seed", 0)),
        out_dir=str(raw.get("out_dir", "out")),
        profile=profile,
    )


def serialize_config(cfg: ExperimentConfig) -> dict:
    """Canonical dict form; parse_config(serialize_config(cfg)) is idempotent."""
    d = {
        "profile": cfg.profile,
        "circuit": {
            "r_variable": cfg.circuit.r_variable,
            "c1": cfg.circuit.c1,
            "c2": cfg.circuit.c2,
            "l": cfg.circuit.l,
            "r_series": cfg.circuit.r_series,
            "diode": {
                "g_inner": cfg.circuit.diode.g_inner,
                "g_mid": cfg.circuit.diode.g_mid,
                "g_outer": cfg.circuit.diode.g_outer,
                "bp_inner": cfg.circuit.diode.bp_inner,
                "bp_outer": cfg.circuit.diode.bp_outer,
            },
        },
        "reservoir": {
            "v_min": cfg.reservoir.v_min,
            "v_max": cfg.reservoir.v_max,
            "value_max": cfg.reservoir.value_max,
            "n_mask": cfg.reservoir.n_mask,
            "mask_deviation": cfg.reservoir.mask_deviation,
            "theta": cfg.reservoir.theta,
            "carrier": cfg.reservoir.carrier,
            "f_carrier": cfg.reservoir.f_carrier,
            "n_periods": cfg.reservoir.n_periods,
            "sample_rate": cfg.reservoir.sample_rate,
            "middle_fraction": cfg.reservoir.middle_fraction,
            "use_envelope": cfg.reservoir.use_envelope,
            "seed": cfg.reservoir.seed,
        },
        "task": {
            "kind": cfg.task.kind,
            "x_range": list(cfg.task.x_range),
            "modulo_base": cfg.task.modulo_base,
            "poly_mod_base": cfg.task.poly_mod_base,
            "pair_max": cfg.task.pair_max,
            "inner_radius": cfg.task.inner_radius,
            "outer_radii": list(cfg.task.outer_radii),
        },
        "n_cases": cfg.n_cases,
        "val_fraction": cfg.val_fraction,
        "master_seed": cfg.master_seed,
        "out_dir": cfg.out_dir,
    }
    if cfg.lwe is not None:
        d["lwe"] = lwe_mod.params_to_dict(cfg.lwe)
    return d


def config_digest(cfg: ExperimentConfig) -> str:
    """Stable short hash of the canonical config, embedded in every artifact.

    The output directory is excluded: it does not influence any result.
    """
    payload = serialize_config(cfg)
    payload.pop("out_dir", None)
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def seed_for(master_seed: int, *parts) -> int:
    """Deterministic child seed derived from the master seed and a tag tuple."""
    text = ":".join([str(master_seed)] + [repr(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")
