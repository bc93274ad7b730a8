"""Experiment configuration: a flat JSON object with validated, documented keys."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .cumulants import ENSEMBLE_KINDS
from .errors import DomainError
from .scars import METHODS
from .spectral import OBSERVABLES

MIN_SITES = 4
LONG_RUN_SITES = 20   # N at or above this needs allow_long_run
MAX_SITES = 26


@dataclass(frozen=True)
class ExperimentConfig:
    n_sites: int = 14
    observable: str = "sz_density"
    scar_method: str = "neel_overlap"
    scar_count: int = 6
    band_fraction: float = 0.6
    ensemble: str = "canonical"
    window_fraction: float = 0.1
    t_max: float = 40.0
    n_points: int = 401
    out_dir: str = "scarlab-out"
    cache_dir: str | None = None
    seed: int = 0
    n_sweep: tuple = (8, 10, 12, 14)
    crossing_scar_count: int = 3
    pair: tuple | None = None
    threepoint_pattern: str = "0,t,0"
    fourpoint_pattern: str = "t,0,t,0"
    factorization_gate: float = 0.35
    sigma_gate: float = 4.0
    haar_dim: int = 8
    haar_samples: int = 100_000
    allow_long_run: bool = False

    def __post_init__(self):
        # JSON gives lists; keep the frozen dataclass hashable
        object.__setattr__(self, "n_sweep", tuple(self.n_sweep))
        if self.pair is not None:
            object.__setattr__(self, "pair", tuple(self.pair))
        self.validate()

    # ------------------------------------------------------------ validation
    def _check_sites(self, n, key):
        if not isinstance(n, int) or isinstance(n, bool):
            raise DomainError(f"{key} must be an integer, got {n!r}")
        if not MIN_SITES <= n <= MAX_SITES:
            raise DomainError(f"{key}={n} outside [{MIN_SITES}, {MAX_SITES}]")
        if n >= LONG_RUN_SITES and not self.allow_long_run:
            raise DomainError(f"{key}={n} is a long run; set allow_long_run to true")
        if n % 2 and self.scar_method == "neel_overlap":
            raise DomainError(f"{key}={n}: odd chains have no Néel state; use entropy_outlier")

    def validate(self):
        self._check_sites(self.n_sites, "n_sites")
        if not self.n_sweep:
            raise DomainError("n_sweep must be nonempty")
        for n in self.n_sweep:
            self._check_sites(n, "n_sweep entry")
        if list(self.n_sweep) != sorted(set(self.n_sweep)):
            raise DomainError("n_sweep must be strictly ascending")
        choices = {"observable": OBSERVABLES, "scar_method": METHODS, "ensemble": ENSEMBLE_KINDS}
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise DomainError(f"{key}={getattr(self, key)!r} not in {allowed}")
        for key in ("scar_count", "crossing_scar_count", "seed"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise DomainError(f"{key} must be a non-negative integer, got {v!r}")
        for key, lo in (("n_points", 2), ("haar_dim", 2), ("haar_samples", 2)):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                raise DomainError(f"{key} must be an integer >= {lo}, got {v!r}")
        for key in ("band_fraction", "window_fraction"):
            v = getattr(self, key)
            if not 0 < v <= 1:
                raise DomainError(f"{key} must lie in (0, 1], got {v!r}")
        for key in ("t_max", "factorization_gate", "sigma_gate"):
            if not getattr(self, key) > 0:
                raise DomainError(f"{key} must be positive, got {getattr(self, key)!r}")
        if self.pair is not None:
            if len(self.pair) != 2 or not all(isinstance(x, int) and x >= 0 for x in self.pair):
                raise DomainError(f"pair must be two eigenstate indices, got {self.pair!r}")
        for key in ("threepoint_pattern", "fourpoint_pattern"):
            pattern = getattr(self, key)
            want = 3 if key.startswith("three") else 4
            tokens = [t.strip() for t in pattern.split(",")]
            if len(tokens) != want:
                raise DomainError(f"{key} needs {want} comma-separated times, got {pattern!r}")
            for tok in tokens:
                if tok not in ("t", "-t"):
                    try:
                        float(tok)
                    except ValueError:
                        raise DomainError(f"{key}: bad time token {tok!r}") from None

    # -------------------------------------------------------------- I/O
    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DomainError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DomainError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_sweep"] = list(self.n_sweep)
        d["pair"] = None if self.pair is None else list(self.pair)
        return d

