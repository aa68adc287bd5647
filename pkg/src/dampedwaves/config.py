"""Run configuration: flat key-value text with sections, validated presets.

Config files are INI-like: `[section]` headers, `key = value` lines, `#`
comments.  Unknown sections or keys and invariant violations are rejected
with the offending line number, so archived experiment files stay auditable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError
from .evolution import ModelParams, StepOptions
from .geometry import StripGrid
from .spectral import SpectrumField, cosine, sine, zero_field

_SCHEMA: dict[str, dict[str, type]] = {
    "model": {"alpha": float, "epsilon": float, "kappa": float, "mu": float},
    "grid": {"n_modes": int, "depth": float, "n_depth": int},
    "time": {"dt": float, "t_final": float},
    "initial": {"preset": str, "amplitude": float, "h_modes": str, "xi_modes": str},
    "numerics": {"picard_tol": str, "picard_max_iter": int, "margin_min": float,
                 "linear_only": bool},
    "diagnostics": {"noise_floor_rel": float, "monotone_slack": float,
                    "admissibility_cap": float, "require_monotone": bool},
    "output": {"directory": str, "record_every": int, "snapshot_every": int,
               "seed": int},
}

PRESETS = ("zero", "small_two_mode", "moderate_mix", "single_mode", "explicit")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    n_modes: int = 64
    depth: float = 8.0
    n_depth: int = 192
    dt: float = 1e-3
    t_final: float = 1.0
    preset: str = "small_two_mode"
    amplitude: float = 0.01
    h_modes: tuple[tuple[int, float, float], ...] = ()
    xi_modes: tuple[tuple[int, float, float], ...] = ()
    picard_tol: float | None = None       # None: min(1e-10, dt^3)
    picard_max_iter: int = 25
    margin_min: float = 0.1
    linear_only: bool = False
    noise_floor_rel: float = 1e-13
    monotone_slack: float = 1e-6
    admissibility_cap: float = 0.5
    require_monotone: bool = False
    directory: str = "out"
    record_every: int = 10
    snapshot_every: int = 0               # 0: first and last record only
    seed: int = 0

    def __post_init__(self):
        if self.n_modes < 8 or self.n_modes % 2 != 0:
            raise ConfigurationError(
                f"n_modes must be even and >= 8, got {self.n_modes}")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ConfigurationError(f"t_final must be >= 0, got {self.t_final}")
        if self.params.mu > 0 and self.params.mu >= self.params.alpha / 2.0:
            raise ConfigurationError(
                f"analyticity diagnostics need mu < alpha/2 "
                f"(mu={self.params.mu}, alpha={self.params.alpha})")
        if self.preset not in PRESETS:
            raise ConfigurationError(
                f"unknown preset {self.preset!r}; choose from {PRESETS}")

    @property
    def grid(self) -> StripGrid:
        return StripGrid(self.n_modes, depth=self.depth, n_depth=self.n_depth)

    @property
    def step_options(self) -> StepOptions:
        tol = self.picard_tol if self.picard_tol is not None else min(1e-10, self.dt ** 3)
        return StepOptions(picard_tol=tol, picard_max_iter=self.picard_max_iter,
                           margin_min=self.margin_min, linear_only=self.linear_only)


def _parse_mode_list(text: str, line: int) -> tuple[tuple[int, float, float], ...]:
    """`n:amplitude[:phase]` entries, comma separated."""
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) not in (2, 3):
            raise ConfigurationError(
                f"line {line}: mode entry {chunk!r} is not n:amplitude[:phase]")
        try:
            n = int(parts[0])
            amp = float(parts[1])
            phase = float(parts[2]) if len(parts) == 3 else 0.0
        except ValueError as exc:
            raise ConfigurationError(f"line {line}: bad mode entry {chunk!r}") from exc
        out.append((n, amp, phase))
    return tuple(out)


def _coerce(raw: str, typ: type, where: str, line: int):
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError as exc:
        raise ConfigurationError(
            f"line {line}: cannot parse {where} = {raw!r} as {typ.__name__}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate the structured key-value config text."""
    section = None
    values: dict[str, dict[str, object]] = {}
    mode_lines: dict[str, int] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigurationError(f"line {lineno}: unknown section [{section}]")
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {rawline!r}")
        if section is None:
            raise ConfigurationError(f"line {lineno}: key outside any [section]")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if key not in _SCHEMA[section]:
            raise ConfigurationError(
                f"line {lineno}: unknown key {key!r} in section [{section}]")
        if key in values[section]:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        values[section][key] = _coerce(raw, _SCHEMA[section][key],
                                       f"{section}.{key}", lineno)
        mode_lines[f"{section}.{key}"] = lineno

    model = values.get("model", {})
    if "alpha" not in model:
        raise ConfigurationError("missing required key model.alpha")
    params = ModelParams(alpha=float(model["alpha"]),
                         epsilon=float(model.get("epsilon", 1.0)),
                         kappa=float(model.get("kappa", 0.0)),
                         mu=float(model.get("mu", 0.0)))

    kv: dict[str, object] = {}
    for sect in ("grid", "time", "numerics", "diagnostics", "output"):
        kv.update(values.get(sect, {}))
    init = values.get("initial", {})
    if "preset" in init:
        kv["preset"] = init["preset"]
    if "amplitude" in init:
        kv["amplitude"] = init["amplitude"]
    for name in ("h_modes", "xi_modes"):
        if name in init:
            kv[name] = _parse_mode_list(str(init[name]),
                                        mode_lines[f"initial.{name}"])
    if "picard_tol" in kv:
        raw = str(kv["picard_tol"]).lower()
        kv["picard_tol"] = None if raw == "auto" else float(raw)
    try:
        return RunConfig(params=params, **kv)   # type: ignore[arg-type]
    except ConfigurationError:
        raise
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def config_to_text(cfg: RunConfig) -> str:
    """Canonical text form (archivable; parses back to an equal config)."""
    tol = "auto" if cfg.picard_tol is None else repr(cfg.picard_tol)
    modes = ", ".join(f"{n}:{a!r}:{p!r}" for n, a, p in cfg.h_modes)
    xmodes = ", ".join(f"{n}:{a!r}:{p!r}" for n, a, p in cfg.xi_modes)
    return "\n".join([
        "[model]",
        f"alpha = {cfg.params.alpha!r}",
        f"epsilon = {cfg.params.epsilon!r}",
        f"kappa = {cfg.params.kappa!r}",
        f"mu = {cfg.params.mu!r}",
        "[grid]",
        f"n_modes = {cfg.n_modes}",
        f"depth = {cfg.depth!r}",
        f"n_depth = {cfg.n_depth}",
        "[time]",
        f"dt = {cfg.dt!r}",
        f"t_final = {cfg.t_final!r}",
        "[initial]",
        f"preset = {cfg.preset}",
        f"amplitude = {cfg.amplitude!r}",
        *([f"h_modes = {modes}"] if modes else []),
        *([f"xi_modes = {xmodes}"] if xmodes else []),
        "[numerics]",
        f"picard_tol = {tol}",
        f"picard_max_iter = {cfg.picard_max_iter}",
        f"margin_min = {cfg.margin_min!r}",
        f"linear_only = {str(cfg.linear_only).lower()}",
        "[diagnostics]",
        f"noise_floor_rel = {cfg.noise_floor_rel!r}",
        f"monotone_slack = {cfg.monotone_slack!r}",
        f"admissibility_cap = {cfg.admissibility_cap!r}",
        f"require_monotone = {str(cfg.require_monotone).lower()}",
        "[output]",
        f"directory = {cfg.directory}",
        f"record_every = {cfg.record_every}",
        f"snapshot_every = {cfg.snapshot_every}",
        f"seed = {cfg.seed}",
        "",
    ])


# ---------------------------------------------------------------------------
# initial data

def initial_data(cfg: RunConfig) -> tuple[SpectrumField, SpectrumField]:
    """Build (h₀, ξ₀) for the configured preset.

    For the small presets `amplitude` is the target |h₀|₁ + |ξ₀|₁; h₀ is
    always zero mean.
    """
    n = cfg.n_modes
    if cfg.preset == "zero":
        return zero_field(n), zero_field(n)
    if cfg.preset == "small_two_mode":
        # modes 1 and 2 at relative weight 1 : 1/2 in both fields
        a = cfg.amplitude / 7.0     # |cos|₁ + |c₂ cos 2x|₁ summed over h and ξ
        h0 = cosine(1, a, n) + cosine(2, 0.5 * a, n)
        xi0 = sine(1, a, n) + sine(2, 0.5 * a, n)
        return h0, xi0
    if cfg.preset == "single_mode":
        k = max(1, int(round(cfg.h_modes[0][0])) if cfg.h_modes else 1)
        a = cfg.amplitude / (2.0 * (1.0 + k))
        return cosine(k, a, n), sine(k, a, n)
    if cfg.preset == "moderate_mix":
        # mode-3-weighted data: O(1) H³ energy at small amplitude
        a = cfg.amplitude
        h0 = cosine(1, 0.8 * a, n) + cosine(3, a, n)
        xi0 = sine(1, 0.8 * a, n) + sine(3, a, n)
        return h0, xi0
    if cfg.preset == "explicit":
        h0 = zero_field(n)
        xi0 = zero_field(n)
        for k, a, p in cfg.h_modes:
            if k == 0:
                raise ConfigurationError("h must be zero mean: mode 0 not allowed")
            h0 = h0 + cosine(k, a, n, phase=p)
        for k, a, p in cfg.xi_modes:
            xi0 = xi0 + cosine(k, a, n, phase=p)
        return h0, xi0
    raise ConfigurationError(f"unknown preset {cfg.preset!r}")
