"""Run configuration: INI files with [run], [scenario] and [td3] sections.

Every key has a default below; CLI flags override file values, which
override the scale preset.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .channel import PROFILES
from .env import Scenario, grid_layout
from .td3 import Td3Config

MODES = ("train-offline", "train-online", "eval", "baseline")
SCALES = ("paper", "desk")


class ConfigError(ValueError):
    pass


# per-scale run defaults (episodes, repetitions, evaluation cadence)
RUN_PRESETS = {
    "paper": dict(episodes=1000, eval_every=10, n_eval=16, n_seed_offline=16, n_seed_online=8, n_test=512),
    "desk": dict(episodes=200, eval_every=20, n_eval=4, n_seed_offline=3, n_seed_online=2, n_test=16),
}

# TD3 settings that differ from Td3Config defaults at each scale
TD3_PRESETS = {
    "paper": {},
    "desk": dict(
        hidden=(128, 128),
        tau=0.05,
        gamma=1.0,
        actor_lr=3e-4,
        updates_per_step=4,
        action_l2=0.1,
    ),
}


@dataclass
class RunConfig:
    mode: str = "train-offline"
    scale: str = "desk"
    profile: str = "suburban"
    seed: int = 0
    episodes: Optional[int] = None
    eval_every: Optional[int] = None
    n_eval: Optional[int] = None
    n_seed: Optional[int] = None
    n_test: Optional[int] = None
    out: str = "runs/out"
    # actor checkpoint evaluated by --mode eval
    checkpoint: str = ""
    # ground nodes per side of the fixed grid layout (0: scale default)
    grid_per_side: int = 0
    kappa_f: float = 1000.0
    td3: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scale not in SCALES:
            raise ConfigError(f"scale must be one of {SCALES}, got {self.scale!r}")
        if self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {tuple(PROFILES)}, got {self.profile!r}")
        preset = RUN_PRESETS[self.scale]
        if self.episodes is None:
            self.episodes = preset["episodes"]
        if self.eval_every is None:
            self.eval_every = preset["eval_every"]
        if self.n_eval is None:
            self.n_eval = preset["n_eval"]
        if self.n_seed is None:
            key = "n_seed_online" if self.mode == "train-online" else "n_seed_offline"
            self.n_seed = preset[key]
        if self.n_test is None:
            self.n_test = preset["n_test"]
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        for name in ("eval_every", "n_eval", "n_seed", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.grid_per_side < 0:
            raise ConfigError("grid_per_side must be >= 0")
        if self.mode == "eval" and not self.checkpoint:
            raise ConfigError("eval mode needs run.checkpoint")
        try:
            self.td3_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[td3]: {exc}") from exc

    def td3_config(self) -> Td3Config:
        params = dict(TD3_PRESETS[self.scale])
        params.update(self.td3)
        return Td3Config(**params)

    def scenario(self) -> Scenario:
        profile = PROFILES[self.profile]
        build = Scenario.paper if self.scale == "paper" else Scenario.desk
        sc = build(profile, kappa_f=self.kappa_f)
        if self.grid_per_side:
            sc = sc.with_layout(grid_layout(self.grid_per_side, sc.area_side))
        return sc

    def to_ini(self) -> str:
        cp = _parser()
        cp["run"] = {
            k: str(getattr(self, k))
            for k in ("mode", "seed", "episodes", "eval_every", "n_eval", "n_seed", "n_test", "out", "checkpoint")
        }
        cp["scenario"] = {
            "scale": self.scale,
            "profile": self.profile,
            "grid_per_side": str(self.grid_per_side),
            "kappa_f": repr(self.kappa_f),
        }
        td3 = dataclasses.asdict(self.td3_config())
        cp["td3"] = {k: ",".join(map(str, v)) if isinstance(v, tuple) else str(v) for k, v in td3.items()}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive (policy_delay_K)
    return cp


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(repr(sc).encode()).hexdigest()[:16]


_INT_KEYS = {"seed", "episodes", "eval_every", "n_eval", "n_seed", "n_test", "grid_per_side"}
_TD3_FIELDS = {f.name: f for f in dataclasses.fields(Td3Config)}


def _parse_td3(section) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in _TD3_FIELDS:
            raise ConfigError(f"[td3]: unknown key {key!r}")
        default = _TD3_FIELDS[key].default
        try:
            if isinstance(default, tuple):
                out[key] = tuple(int(x) for x in raw.split(",") if x.strip())
            elif isinstance(default, bool):
                out[key] = section.getboolean(key)
            elif isinstance(default, int):
                out[key] = int(raw)
            elif isinstance(default, float):
                out[key] = float(raw)
            else:
                out[key] = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"[td3] {key}: {exc}") from exc
    return out


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Merge an INI file (if any) with CLI overrides into a validated RunConfig."""
    values: dict = {}
    if path:
        cp = _parser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        unknown = set(cp.sections()) - {"run", "scenario", "td3"}
        if unknown:
            raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
        allowed = {f.name for f in dataclasses.fields(RunConfig)} - {"td3"}
        for section in ("run", "scenario"):
            if section not in cp:
                continue
            for key, raw in cp[section].items():
                if key not in allowed:
                    raise ConfigError(f"{path}: unknown key [{section}] {key}")
                try:
                    if key in _INT_KEYS:
                        values[key] = int(raw)
                    elif key == "kappa_f":
                        values[key] = float(raw)
                    else:
                        values[key] = raw.strip()
                except ValueError as exc:
                    raise ConfigError(f"{path}: [{section}] {key}: {exc}") from exc
        if "td3" in cp:
            values["td3"] = _parse_td3(cp["td3"])
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig(**values)


def write_snapshot(cfg: RunConfig, out_dir: Path) -> Path:
    path = Path(out_dir) / "config.ini"
    path.write_text(cfg.to_ini())
    return path
