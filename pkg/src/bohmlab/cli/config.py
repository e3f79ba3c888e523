"""Run configuration: JSON parsing and schema validation."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticError, model_validator

from ..errors import BohmlabError


class ConfigParseError(BohmlabError):
    """Malformed JSON or a duplicated key."""


class ConfigValidationError(BohmlabError):
    """Schema or cross-reference violation; the message names the field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    num_particles: int = Field(ge=1)
    space_dim: int = Field(default=1, ge=1)
    box: Tuple[float, float]
    points_per_axis: int = Field(ge=2)
    memory_budget: int = Field(default=2 ** 24, ge=1)


class ModelConfig(_Strict):
    masses: Optional[List[float]] = None  # default: all ones
    hbar: float = Field(default=1.0, gt=0)
    spin_dim: int = Field(default=1, ge=1)


class PotentialConfig(_Strict):
    kind: Literal["zero", "harmonic"] = "zero"
    stiffness: Union[float, List[float]] = 1.0  # one value, or one per particle


class ControlsConfig(_Strict):
    stride: float = Field(default=0.01, gt=0)
    wave_dt: Optional[float] = Field(default=None, gt=0)
    dt_traj: Optional[float] = Field(default=None, gt=0)
    substeps: int = Field(default=2, ge=1)
    eta: float = Field(default=0.5, gt=0)
    max_halvings: int = Field(default=10, ge=0)


class LawConfig(_Strict):
    kind: Literal["full", "reduced", "symmetrized", "jump"]
    real_set: Optional[List[int]] = None
    velocity_scale: float = 1.0  # != 1 corrupts the law (negative control)


class PartitionConfig(_Strict):
    """Closed interval ``[lo, hi]`` per axis; ``null`` is an infinite end."""

    bounds: List[Tuple[Optional[float], Optional[float]]]


class ExperimentConfig(_Strict):
    kind: Literal["equivariance", "equivalence", "markovization", "trajectories"]
    law: LawConfig
    law_b: Optional[LawConfig] = None
    observable: Optional[List[int]] = None
    sorted: bool = False
    partition: Optional[PartitionConfig] = None
    T: float = Field(gt=0)
    n: int = Field(ge=1)
    seeds: Optional[List[int]] = None
    n_seeds: int = Field(default=5, ge=1)
    min_pass: Optional[int] = None
    alpha: float = Field(default=0.01, gt=0, lt=1)
    n_bins: int = Field(default=64, ge=2)
    initial_state: Optional[Dict[str, Any]] = None  # wrong-density control
    record_every: int = Field(default=1, ge=1)


class RunConfig(_Strict):
    name: str = "experiment"
    grid: GridConfig
    model: ModelConfig = ModelConfig()
    state: Dict[str, Any]
    potential: PotentialConfig = PotentialConfig()
    controls: ControlsConfig = ControlsConfig()
    experiment: ExperimentConfig
    output: str = "results"
    seed: int = 0

    @model_validator(mode="after")
    def _cross_refs(self):
        n = self.grid.num_particles
        if self.model.masses is not None and len(self.model.masses) != n:
            raise ValueError(f"model.masses: expected {n} entries, got {len(self.model.masses)}")
        if self.model.masses is not None and any(m <= 0 for m in self.model.masses):
            raise ValueError("model.masses: masses must be positive")
        k = self.potential.stiffness
        ks = k if isinstance(k, list) else [k]
        if any(v <= 0 for v in ks) or (isinstance(k, list) and len(k) != n):
            raise ValueError(f"potential.stiffness: need a positive value or {n} positive values")
        lo, hi = self.grid.box
        if not lo < hi:
            raise ValueError("grid.box: lower end must be below upper end")
        ex = self.experiment
        for where, law in (("experiment.law", ex.law), ("experiment.law_b", ex.law_b)):
            if law is None:
                continue
            if law.kind == "reduced":
                if not law.real_set:
                    raise ValueError(f"{where}.real_set: required for the reduced law")
                _labels(f"{where}.real_set", law.real_set, n)
            elif law.real_set is not None:
                raise ValueError(f"{where}.real_set: only valid for the reduced law")
            if law.kind == "jump" and ex.partition is None:
                raise ValueError("experiment.partition: required for the jump law")
        if ex.kind == "markovization" and ex.partition is None:
            raise ValueError("experiment.partition: required for markovization")
        if ex.partition is not None:
            if len(ex.partition.bounds) != self.grid.space_dim:
                raise ValueError("experiment.partition.bounds: one interval per space axis")
            for a, b in ex.partition.bounds:
                if a is not None and b is not None and not a < b:
                    raise ValueError("experiment.partition.bounds: empty interval")
        if ex.kind == "equivalence":
            if ex.law_b is None:
                raise ValueError("experiment.law_b: required for equivalence")
            if not ex.observable:
                raise ValueError("experiment.observable: required for equivalence")
            _labels("experiment.observable", ex.observable, n)
            for where, law in (("experiment.law", ex.law), ("experiment.law_b", ex.law_b)):
                if law.kind == "reduced" and not set(ex.observable) <= set(law.real_set):
                    raise ValueError(f"experiment.observable: not contained in {where}.real_set")
                if law.kind == "jump":
                    raise ValueError(f"{where}.kind: the jump law has no equivalence observable")
        if ex.kind in ("equivariance", "equivalence", "markovization") and ex.n < 100:
            raise ValueError("experiment.n: must be at least 100")
        seeds = self.seeds()
        if ex.min_pass is not None and not 1 <= ex.min_pass <= len(seeds):
            raise ValueError("experiment.min_pass: must be between 1 and the number of seeds")
        return self

    def seeds(self) -> List[int]:
        ex = self.experiment
        if ex.seeds is not None:
            return list(ex.seeds)
        return [self.seed + k for k in range(ex.n_seeds)]

    def min_pass(self) -> int:
        if self.experiment.min_pass is not None:
            return self.experiment.min_pass
        k = len(self.seeds())
        return max(1, k - 1) if k >= 5 else k

    def with_seed(self, seed: int) -> "RunConfig":
        data = self.model_dump()
        data["seed"] = seed
        data["experiment"]["seeds"] = None
        return RunConfig.model_validate(data)


def _labels(where, labels, n):
    if len(set(labels)) != len(labels):
        raise ValueError(f"{where}: repeated labels")
    bad = [i for i in labels if not 1 <= i <= n]
    if bad:
        raise ValueError(f"{where}: labels {bad} outside 1..{n}")


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigParseError(f"duplicate key {k!r}")
        out[k] = v
    return out


def loads_config(text: str) -> RunConfig:
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"invalid JSON: {e}") from e
    return validate_config(data)


def validate_config(data) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except PydanticError as e:
        msgs = []
        for err in e.errors():
            loc = ".".join(str(p) for p in err["loc"])
            msg = err["msg"].removeprefix("Value error, ")
            msgs.append(f"{loc}: {msg}" if loc else msg)
        raise ConfigValidationError("; ".join(msgs)) from None


def parse_config(path) -> RunConfig:
    """Read and validate a run configuration (defaults applied, unknown keys rejected)."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigParseError(f"cannot read {p}: {e}") from e
    return loads_config(text)
