"""Run configuration schema (versioned, unknown keys rejected)."""

from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import ConfigError

SCHEMA_VERSION = 1
COMMANDS = ("params", "flow", "evolve-exterior", "evolve-interior", "fit", "scan", "pipeline")


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class ParamsSection(_Model):
    family: Literal["RNdS", "KdS", "RN_flat", "dS"] = "RNdS"
    lam: float = Field(0.02, description="cosmological constant Lambda")
    mass: float = 1.0
    charge: float = 0.0
    spin: float = 0.0


class TolSection(_Model):
    rtol: float = 1e-12
    atol: float = 1e-14


class FlowSection(_Model):
    kind: Literal["radial", "beta", "trapping", "trajectory", "kds-trapped"] = "radial"
    j: int = 2
    sign: int = 1
    span: float = 100.0
    sigma: float = 1.0
    r: Optional[float] = None
    xi_branch: int = 1
    eta: float = 1.0
    theta: float = 1.0
    zeta: float = 0.005
    chart: Literal["ef", "star", "static"] = "ef"
    n_out: Optional[int] = None


class PulseSection(_Model):
    center: Optional[float] = None
    width: float = 1.0
    amp: float = 1.0
    kind: Literal["static", "ingoing"] = "ingoing"


class ExteriorSection(_Model):
    ell: int = 0
    mass2: float = 0.0
    n: int = 2000
    cfl: float = 0.5
    ko: float = 0.1
    t_end: float = 200.0
    dt: Optional[float] = None
    delta_exc: Optional[float] = None
    delta_out: Optional[float] = None
    pulse: PulseSection = PulseSection()
    probes: Optional[list[float]] = None
    record_dt: float = 0.5
    snapshot_every: int = 0
    fit_window: Optional[list[float]] = None


class InteriorDataSection(_Model):
    kind: Literal["model", "series"] = "model"
    u0: float = 1.0
    amp: float = 1.0
    rate: Optional[float] = None
    series_csv: Optional[str] = None
    t_column: str = "t"
    column: Optional[str] = None
    v_shift: float = 0.0


class InteriorSection(_Model):
    ell: int = 0
    mass2: float = 0.0
    h: float = 0.02
    u_min: Optional[float] = None
    u_max: float = 0.0
    v_min: float = 0.0
    v_max: float = 80.0
    data: InteriorDataSection = InteriorDataSection()
    transversal: Literal["constant", "pulse"] = "constant"
    pulse_center: float = -10.0
    pulse_width: float = 1.0
    pulse_amp: float = 0.0
    probe_u: list[float] = [-5.0, -2.0, 0.0]
    scheme: Literal["phi", "psi"] = "phi"
    fit_window: Optional[list[float]] = None
    snapshot_shape: list[int] = [64, 64]


class FitSection(_Model):
    input: Optional[str] = None
    t_column: str = "t"
    column: Optional[str] = None
    method: Literal["decay", "prony", "power", "late-constant"] = "decay"
    window: Optional[list[float]] = None
    constant: bool = True
    log_input: bool = False
    max_modes: int = 4


class ScanSection(_Model):
    task: Literal["params", "evolve-exterior"] = "params"
    axes: dict[Literal["charge", "spin", "lam", "ell", "mass2"], list[float]] = {}


class RunConfig(_Model):
    schema_version: Literal[1] = SCHEMA_VERSION
    command: Literal["params", "flow", "evolve-exterior", "evolve-interior", "fit", "scan", "pipeline"]
    params: ParamsSection = ParamsSection()
    tolerances: TolSection = TolSection()
    flow: FlowSection = FlowSection()
    exterior: ExteriorSection = ExteriorSection()
    interior: InteriorSection = InteriorSection()
    fit: FitSection = FitSection()
    scan: ScanSection = ScanSection()


def set_path(raw: dict, dotted: str, value):
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot descend into non-object at {k!r}", path=dotted)
        node = nxt
    node[keys[-1]] = value


def parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value", path=text)
    key, val = text.split("=", 1)
    try:
        parsed = json.loads(val)
    except json.JSONDecodeError:
        parsed = val
    return key.strip(), parsed


def load_config(path=None, overrides=(), command=None) -> RunConfig:
    """Load and validate; a run manifest is accepted in place of a config."""
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", path="--config") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", path="--config") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", path="")
        if "manifest_version" in raw:
            raw = raw.get("config", {})
    if command is not None:
        if "command" in raw and raw["command"] != command:
            raise ConfigError(f"config command {raw['command']!r} conflicts with {command!r}", path="command")
        raw["command"] = command
    for item in overrides:
        key, val = parse_override(item)
        set_path(raw, key, val)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err["loc"])
        raise ConfigError(f"{err['msg']} (got {err.get('input')!r})", path=loc) from None
