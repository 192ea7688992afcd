"""Line-oriented ``key = value`` run configuration."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any, Callable

from ..agents import AgentParams
from ..errors import ConfigError, ParameterError
from ..grid import GridSpec
from ..interaction import FORMS, AlignmentSpec
from ..models import CHEMO_MODES, MODELS, ModelParams, Toggles

IC_KINDS = ("isotropic", "two-mode", "bump", "file")
UINT64_MAX = 2**64 - 1


def _int(text: str) -> int:
    return int(text, 10)


def _float(text: str) -> float:
    v = float(text)
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("non-finite number")
    return v


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _choice(options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _float_list(text: str) -> tuple:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(s) for s in items)


def _int_list(text: str) -> tuple:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_int(s) for s in items)


def _even_ge4(v: int):
    return v >= 4 and v % 2 == 0, "must be even and >= 4"


def _positive(v):
    return v > 0, "must be positive"


def _nonneg(v):
    return v >= 0, "must be nonnegative"


def _radius(v):
    return 0 <= v < 0.5, "must lie in [0, 1/2)"


def _unit_interval(v):
    return 0 < v <= 1, "must lie in (0, 1]"


def _seed(v):
    return 0 <= v <= UINT64_MAX, "must be a 64-bit unsigned integer"


def _pos_list(v):
    return all(x > 0 for x in v), "entries must be positive"


def _cadence(v):
    return v >= 1, "must be >= 1"


# key -> (parser, check or None)
_SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "model": (_choice(MODELS), None),
    "nx": (_int, _even_ge4),
    "ny": (_int, _even_ge4),
    "ntheta": (_int, _even_ge4),
    "dt": (_float, _positive),
    "t_end": (_float, _positive),
    "cadence": (_int, _cadence),
    "eps_int": (_float, _radius),
    "align_form": (_choice(FORMS), None),
    "align_bound": (_float, _positive),
    "kernel": (_choice(("grid", "analytic")), None),
    "eps_scale": (_float, _unit_interval),
    "eps_reg": (_float, _nonneg),
    "uni_diffusion": (_float, _nonneg),
    "transport": (_bool, None),
    "alignment": (_bool, None),
    "theta_diffusion": (_bool, None),
    "reversal": (_bool, None),
    "x_diffusion": (_bool, None),
    "chemotaxis": (_bool, None),
    "chemo": (_choice(CHEMO_MODES), None),
    "signal_amplitude": (_float, None),
    "ic": (_choice(IC_KINDS), None),
    "ic_a": (_float, None),
    "ic_b": (_float, None),
    "ic_c": (_float, None),
    "ic_d": (_float, None),
    "bump_theta0": (_float, None),
    "bump_width": (_float, _positive),
    "ic_file": (str, None),
    "agent_n": (_int, _positive),
    "agent_v0": (_float, _nonneg),
    "agent_gamma": (_float, _nonneg),
    "agent_sigma": (_float, _nonneg),
    "agent_lambda": (_float, _nonneg),
    "agent_r": (_float, _positive),
    "agent_l": (_float, _positive),
    "agent_w": (_float, _positive),
    "agent_form": (_choice(("sum", "current")), None),
    "agent_dt": (_float, _positive),
    "seed": (_int, _seed),
    "out": (str, None),
    "eps_list": (_float_list, _pos_list),
    "n_list": (_int_list, _pos_list),
    "seeds": (_int, _positive),
    "limit_dt_factor": (_float, _positive),
    "limit_uni_diffusion": (_float, _positive),
    "limit_radius": (_choice(("config", "scale")), None),
}


@dataclass(frozen=True)
class RunConfig:
    model: str = "I"
    nx: int = 64
    ny: int = 64
    ntheta: int = 64
    dt: float = 1e-3
    t_end: float = 1.0
    cadence: int = 10
    eps_int: float = 0.0
    align_form: str = "clamped-sum"
    align_bound: float = 1.0
    kernel: str = "grid"
    eps_scale: float = 1.0
    eps_reg: float = 0.0
    uni_diffusion: float = 1.0
    transport: bool = True
    alignment: bool = True
    theta_diffusion: bool = True
    reversal: bool = True
    x_diffusion: bool = True
    chemotaxis: bool = True
    chemo: str = "given"
    signal_amplitude: float = 1.0
    ic: str = "isotropic"
    ic_a: float = 0.4
    ic_b: float = 0.3
    ic_c: float = 0.0
    ic_d: float = 0.0
    bump_theta0: float = 0.0
    bump_width: float = 0.5
    ic_file: str = ""
    agent_n: int = 1000
    agent_v0: float = 1.0
    agent_gamma: float = 1.0
    agent_sigma: float = 1.0
    agent_lambda: float = 1.0
    agent_r: float = 0.05
    agent_l: float = 0.05
    agent_w: float = 0.005
    agent_form: str = "sum"
    agent_dt: float = 0.01
    seed: int = 0
    out: str = "out"
    eps_list: tuple = (0.2, 0.1, 0.05)
    n_list: tuple = (1000, 10000, 100000)
    seeds: int = 5
    limit_dt_factor: float = 0.05
    limit_uni_diffusion: float = 0.5
    limit_radius: str = "config"

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.ntheta)

    @property
    def toggles(self) -> Toggles:
        return Toggles(
            transport=self.transport,
            alignment=self.alignment,
            theta_diffusion=self.theta_diffusion,
            reversal=self.reversal,
            x_diffusion=self.x_diffusion,
            chemotaxis=self.chemotaxis,
        )

    def model_params(self, **overrides) -> ModelParams:
        p = ModelParams(
            model=self.model,
            alignment=AlignmentSpec(self.align_form, self.align_bound, self.eps_int, self.kernel),
            eps_scale=self.eps_scale,
            eps_reg=self.eps_reg,
            uni_diffusion=self.uni_diffusion,
            toggles=self.toggles,
            dt=self.dt,
            chemo=self.chemo,
        )
        return replace(p, **overrides) if overrides else p

    def agent_params(self) -> AgentParams:
        return AgentParams(
            N=self.agent_n,
            v0=self.agent_v0,
            gamma=self.agent_gamma,
            sigma=self.agent_sigma,
            lam=self.agent_lambda,
            r=self.agent_r,
            l=self.agent_l,
            w=self.agent_w,
            form=self.agent_form,
        )

    def updated(self, **changes) -> "RunConfig":
        cfg = replace(self, **changes)
        validate(cfg)
        return cfg


KEYS = tuple(f.name for f in fields(RunConfig))
assert set(KEYS) == set(_SCHEMA)


def validate(cfg: RunConfig, lines: dict | None = None) -> None:
    """Cross-field checks: build every derived object once."""
    lines = lines or {}
    for key, (_, check) in _SCHEMA.items():
        if check is not None:
            ok, why = check(getattr(cfg, key))
            if not ok:
                raise ConfigError(f"{key} {why}", key, lines.get(key))
    if cfg.ic == "file" and not cfg.ic_file:
        raise ConfigError("ic = file requires ic_file", "ic_file", lines.get("ic"))
    try:
        cfg.grid
        cfg.model_params()
        cfg.agent_params()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.agent_lambda * cfg.agent_dt > 0.1:
        raise ConfigError("agent_lambda * agent_dt must be <= 0.1", "agent_dt", lines.get("agent_dt"))


def parse_config(text: str) -> RunConfig:
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", None, lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA:
            raise ConfigError("unknown key", key, lineno)
        if key in values:
            raise ConfigError("duplicate key", key, lineno)
        parser, _ = _SCHEMA[key]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"bad value {val!r}: {exc}", key, lineno) from None
        lines[key] = lineno
    cfg = RunConfig(**values)
    validate(cfg, lines)
    return cfg


def _render(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, tuple):
        return ", ".join(_render(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_render(getattr(cfg, k))}\n" for k in KEYS)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
