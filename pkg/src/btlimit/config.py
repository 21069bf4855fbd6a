"""Experiment configuration: defaults, file loading and a stable content hash."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

DEFAULT_EPSILONS = (0.1, 0.05, 0.025, 0.0125, 0.0063, 0.0031)
DEFAULT_BANDS = ((0.0, math.pi, -1.0, 1.0), (2 * math.pi, 3 * math.pi, -1.0, 1.0))

# keys that change where or how fast results are produced, never their content
_UNHASHED = {"output_dir", "workers", "figures"}


@dataclass
class ExperimentConfig:
    omega: float = math.pi
    t_half: float = 1.0
    n_obs: int = 201
    sample_rate: float = 100.0
    epsilon: float = 0.0125
    epsilons: list = field(default_factory=lambda: list(DEFAULT_EPSILONS))
    trials: int = 20
    seed: int = 42
    basis_count: int = 10
    resolution: int = 256
    smoothness: float = 0.0
    eval_range: list = field(default_factory=lambda: [-3.0, 3.0])
    eval_rate: float = 100.0
    solver_tol: float = 1e-8
    max_iters: int = 200_000
    bands: list = field(default_factory=lambda: [list(b) for b in DEFAULT_BANDS])
    alphas: list | None = None
    spectral_half_span: float = 64.0
    spectral_rate: float = 32.0
    workers: int = 1
    figures: bool = True
    output_dir: str = "btlimit-out"

    def validate(self) -> "ExperimentConfig":
        if not (self.omega > 0 and self.t_half > 0):
            raise ValueError("omega and t_half must be positive")
        expected = int(round(self.sample_rate * 2 * self.t_half)) + 1
        if self.n_obs != expected:
            raise ValueError(f"n_obs = {self.n_obs} does not match sample_rate * 2 * t_half + 1 = {expected}")
        if self.epsilon < 0 or any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive (epsilon may be zero)")
        if self.trials < 1 or self.basis_count < 1:
            raise ValueError("trials and basis_count must be >= 1")
        if len(self.eval_range) != 2 or not self.eval_range[0] < self.eval_range[1]:
            raise ValueError("eval_range must be [lo, hi] with lo < hi")
        if not (self.solver_tol > 0 and self.max_iters >= 1):
            raise ValueError("solver_tol must be positive and max_iters >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return self

    def resolved(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        content = {k: v for k, v in self.resolved().items() if k not in _UNHASHED}
        blob = json.dumps(content, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def comment(self) -> str:
        return f"# btlimit {__version__} config={self.digest()}"

    def updated(self, **overrides) -> "ExperimentConfig":
        """Copy with the non-None overrides applied; n_obs follows sample_rate/t_half."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        new = dataclasses.replace(self, **overrides)
        if "n_obs" not in overrides and ({"sample_rate", "t_half"} & set(overrides)):
            new.n_obs = int(round(new.sample_rate * 2 * new.t_half)) + 1
        return new


def _parse(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".toml":
        if sys.version_info < (3, 11):
            raise ValueError("TOML configs need Python 3.11+; use JSON")
        import tomllib

        return tomllib.loads(text)
    return json.loads(text)


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Defaults, then the flat key-value file at ``path``, then ``overrides``."""
    cfg = ExperimentConfig()
    if path is not None:
        data = _parse(Path(path))
        if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
            raise ValueError("config must be a flat key-value mapping")
        cfg = cfg.updated(**data)
    return cfg.updated(**overrides).validate()
