"""
Experiment configuration for the pipeline runner.
"""
import json
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

from dataclasses_json import dataclass_json

from config.settings import settings
from rscope.exceptions import ArgumentError, ConfigError
from rscope.models import FieldGrid, RankPolicy, SensingOperator
from rscope.sensing import SensingConfig


@dataclass_json
@dataclass
class SensingSpec:
    """Sensor layout as written in an experiment file."""
    kind: str = "point"
    p: Optional[int] = 20
    pt: Optional[int] = None
    pv: Optional[int] = None
    seed: Optional[int] = None
    boundary_offset: Optional[int] = None
    indices: Optional[List[int]] = None

    def to_sensing_config(self, n: int, grid: Optional[FieldGrid] = None) -> SensingConfig:
        """Runtime configuration for :func:`rscope.sensing.make_sensing`."""
        counts: Dict[str, int] = {}
        if self.kind == "boundary" and (self.pt is not None or self.pv is not None):
            if grid is None:
                raise ConfigError("boundary sensing needs grid metadata in the library or data")
            scalar = "T" if "T" in grid.fields else grid.fields[0]
            if self.pt:
                counts[scalar] = int(self.pt)
            if self.pv:
                counts["velocity"] = int(self.pv)
        offset = self.boundary_offset if self.boundary_offset is not None else settings.sensing.boundary_offset
        # explicit per-field counts replace the total count
        p = None if counts else self.p
        return SensingConfig(p=p, n=n, grid=grid, seed=self.seed, boundary_offset=offset,
                             per_field_counts=counts, indices=self.indices)


@dataclass_json
@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a pipeline run."""
    library: Optional[str] = None
    data: Optional[str] = None
    suite: str = "default"
    sensing: SensingSpec = field(default_factory=SensingSpec)
    snr_db: Optional[float] = None
    j: int = 0
    trials: int = 100
    seed: int = 42
    out: str = field(default_factory=lambda: settings.output.data_directory)
    rank_policy: str = "fixed:10"
    train_fraction: Optional[float] = None
    j_max: Optional[int] = None
    p_list: List[int] = field(default_factory=list)
    pt_list: List[int] = field(default_factory=list)
    pv_list: List[int] = field(default_factory=list)
    j_list: List[int] = field(default_factory=list)
    snr_list: List[float] = field(default_factory=list)

    def policy(self) -> RankPolicy:
        return RankPolicy.parse(self.rank_policy)

    def validate(self) -> "ExperimentConfig":
        """Raise :class:`ConfigError` on any schema violation."""
        problems = []
        if self.sensing.kind not in SensingOperator.KINDS:
            problems.append(f"sensing kind '{self.sensing.kind}' not in {list(SensingOperator.KINDS)}")
        for name in ("p", "pt", "pv"):
            value = getattr(self.sensing, name)
            if value is not None and value < 0:
                problems.append(f"{name} must be nonnegative")
        if self.j < 0:
            problems.append("j must be nonnegative")
        if self.trials < 1:
            problems.append("trials must be at least 1")
        if self.seed < 0:
            problems.append("seed must be nonnegative")
        if self.train_fraction is not None and not (0.0 < self.train_fraction <= 1.0):
            problems.append("train_fraction must lie in (0, 1]")
        if self.j_max is not None and self.j_max < 0:
            problems.append("j_max must be nonnegative")
        if any(j < 0 for j in self.j_list):
            problems.append("j_list entries must be nonnegative")
        try:
            self.policy()
        except ArgumentError as e:
            problems.append(str(e))
        if problems:
            raise ConfigError("Invalid experiment configuration: " + "; ".join(problems))
        return self


def load_experiment(path: str) -> ExperimentConfig:
    """Load an experiment file (JSON)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
        if not isinstance(raw, dict):
            raise ValueError("top level must be an object")
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown keys {unknown}")
        return ExperimentConfig.from_dict(raw)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"Cannot load experiment configuration {path}: {str(e)}")


def merge_overrides(config: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Apply explicitly given flag values (None means not given) over ``config``.

    Keys ``kind``, ``p``, ``pt``, ``pv``, ``sensing_seed`` and
    ``boundary_offset`` go to the sensing block.
    """
    sensing_keys = {"kind": "kind", "p": "p", "pt": "pt", "pv": "pv",
                    "sensing_seed": "seed", "boundary_offset": "boundary_offset"}
    sensing_changes = {target: overrides[key] for key, target in sensing_keys.items()
                       if overrides.get(key) is not None}
    top_changes = {key: value for key, value in overrides.items()
                   if key not in sensing_keys and value is not None and value != ()}
    for key in top_changes:
        if not hasattr(config, key):
            raise ConfigError(f"Unknown experiment option '{key}'")
    for key in ("p_list", "pt_list", "pv_list", "j_list", "snr_list"):
        if key in top_changes:
            top_changes[key] = list(top_changes[key])

    merged = replace(config, **top_changes)
    if sensing_changes:
        merged = replace(merged, sensing=replace(merged.sensing, **sensing_changes))
    return merged
