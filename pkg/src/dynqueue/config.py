"""Experiment configuration: flat key-value files with dotted sections.

Experiments carry ~15 parameters and must be archived with their results,
so the format is a plain text file of ``key = value`` lines (``#`` starts
a comment) rather than positional flags:

    profile.family = quadratic
    profile.params = 4, 0.5, 1
    tau = 1.0
    policy.kind = threshold
    policy.threshold = auto          # auto -> computed critical threshold
    sim.lambda = 0.95x               # trailing x -> relative to the critical rate
    sim.x0 = 0
    sim.n0 = 0
    sim.horizon_tasks = 100000
    sim.record = service_starts
    sweep.lambdas = 0.8x, 0.9x, 1.0x, 1.05x
    static.n = 2
    static.x = x_th
    out.dir = runs/exp1
    workers = 1
    seed = 0                         # reserved; the core is deterministic

Rates ending in ``x`` are resolved against the freshly computed critical
rate and the resolved absolute value is recorded in the manifest, so
archived runs are self-contained.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .equilibrium import CriticalPoint
from .errors import ValidationError
from .policy import PolicySpec
from .service_model import ServiceProfile

_KNOWN_KEYS = {
    "profile.family",
    "profile.params",
    "tau",
    "policy.kind",
    "policy.threshold",
    "sim.lambda",
    "sim.x0",
    "sim.n0",
    "sim.horizon_tasks",
    "sim.record",
    "sweep.lambdas",
    "static.n",
    "static.x",
    "static.grid_step",
    "static.idle_cap",
    "out.dir",
    "workers",
    "seed",
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a flat string map."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _require(raw: dict[str, str], key: str) -> str:
    if key not in raw or raw[key] == "":
        raise ValidationError(f"config is missing required key {key!r}")
    return raw[key]


def _parse_float(raw: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in raw or raw[key] == "":
        if default is None:
            raise ValidationError(f"config is missing required key {key!r}")
        return default
    try:
        return float(raw[key])
    except ValueError as exc:
        raise ValidationError(f"config key {key!r}: {raw[key]!r} is not a number") from exc


def _parse_int(raw: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in raw or raw[key] == "":
        if default is None:
            raise ValidationError(f"config is missing required key {key!r}")
        return default
    try:
        return int(raw[key])
    except ValueError as exc:
        raise ValidationError(f"config key {key!r}: {raw[key]!r} is not an integer") from exc


@dataclass(frozen=True)
class RateSpec:
    """Arrival rate, absolute or relative to the critical rate."""

    value: float
    relative: bool

    @classmethod
    def parse(cls, text: str) -> "RateSpec":
        text = text.strip()
        relative = text.endswith(("x", "X"))
        body = text[:-1] if relative else text
        try:
            value = float(body)
        except ValueError as exc:
            raise ValidationError(f"bad rate spec {text!r}") from exc
        if value < 0.0:
            raise ValidationError(f"rate spec {text!r} must be >= 0")
        return cls(value, relative)

    def resolve(self, critical: CriticalPoint | None) -> float:
        if not self.relative:
            return self.value
        if critical is None or critical.degenerate:
            raise ValidationError(
                "relative rate specs need a computable non-degenerate critical point"
            )
        return self.value * critical.lambda_eq_max

    def __str__(self) -> str:
        return f"{self.value:g}x" if self.relative else f"{self.value:.17g}"


@dataclass(frozen=True)
class RunConfig:
    """Parsed experiment configuration; rates may still be relative."""

    profile: ServiceProfile
    tau: float
    policy_kind: str
    policy_threshold: float | None  # None -> auto (the critical threshold)
    sim_lambda: RateSpec | None
    sim_x0: float
    sim_n0: int
    sim_horizon: int
    sim_record: str
    sweep_lambdas: tuple[RateSpec, ...]
    static_n: int
    static_x: float | None  # None -> the critical threshold
    static_grid_step: float | None
    static_idle_cap: float | None
    out_dir: str | None
    workers: int
    seed: int
    raw: dict[str, str] = field(default_factory=dict)

    def policy(self, critical: CriticalPoint | None) -> PolicySpec:
        if self.policy_kind == "always_on":
            return PolicySpec("always_on")
        threshold = self.policy_threshold
        if threshold is None:
            if critical is None:
                raise ValidationError(
                    "policy.threshold = auto needs a computed critical point"
                )
            threshold = critical.x_th
        return PolicySpec("threshold", threshold)


def load_run_config(path: str | Path, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read and validate a config file, applying ``key=value`` overrides."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path!r}: {exc}") from exc
    raw = parse_config_text(text)
    for key, value in (overrides or {}).items():
        if key not in _KNOWN_KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        raw[key] = value
    return build_run_config(raw)


def build_run_config(raw: dict[str, str]) -> RunConfig:
    family = _require(raw, "profile.family")
    params_text = _require(raw, "profile.params")
    try:
        params = tuple(float(p) for p in params_text.split(",") if p.strip() != "")
    except ValueError as exc:
        raise ValidationError(f"profile.params: {params_text!r} is not a number list") from exc
    profile = ServiceProfile(family, params)
    rep = profile.validation
    if not rep.ok:
        raise ValidationError("invalid service profile: " + "; ".join(rep.violations))

    tau = _parse_float(raw, "tau")
    if not tau > 0.0:
        raise ValidationError(f"tau must be > 0, got {tau!r}")

    policy_kind = raw.get("policy.kind", "always_on")
    if policy_kind not in ("always_on", "threshold"):
        raise ValidationError(f"unknown policy kind {policy_kind!r}")
    threshold_text = raw.get("policy.threshold", "auto").strip()
    policy_threshold: float | None
    if threshold_text in ("", "auto"):
        policy_threshold = None
    else:
        try:
            policy_threshold = float(threshold_text)
        except ValueError as exc:
            raise ValidationError(f"policy.threshold: bad value {threshold_text!r}") from exc

    sim_lambda = RateSpec.parse(raw["sim.lambda"]) if raw.get("sim.lambda") else None
    sim_record = raw.get("sim.record", "events")

    sweep_text = raw.get("sweep.lambdas", "")
    sweep = tuple(
        RateSpec.parse(part) for part in sweep_text.split(",") if part.strip() != ""
    )

    static_x_text = raw.get("static.x", "x_th").strip()
    static_x = None if static_x_text in ("", "x_th", "auto") else float(static_x_text)

    grid_step = raw.get("static.grid_step", "").strip()
    idle_cap = raw.get("static.idle_cap", "").strip()

    workers = _parse_int(raw, "workers", 1)
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")

    return RunConfig(
        profile=profile,
        tau=tau,
        policy_kind=policy_kind,
        policy_threshold=policy_threshold,
        sim_lambda=sim_lambda,
        sim_x0=_parse_float(raw, "sim.x0", 0.0),
        sim_n0=_parse_int(raw, "sim.n0", 0),
        sim_horizon=_parse_int(raw, "sim.horizon_tasks", 1000),
        sim_record=sim_record,
        sweep_lambdas=sweep,
        static_n=_parse_int(raw, "static.n", 1),
        static_x=static_x,
        static_grid_step=float(grid_step) if grid_step else None,
        static_idle_cap=float(idle_cap) if idle_cap else None,
        out_dir=raw.get("out.dir") or None,
        workers=workers,
        seed=_parse_int(raw, "seed", 0),
        raw=dict(raw),
    )
