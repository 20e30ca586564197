"""
Synthetic suite configuration: named suites and JSON suite files.
"""
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from dataclasses_json import dataclass_json

from rscope.exceptions import ArgumentError, ConfigError
from rscope.models import FieldGrid
from rscope.synthgen import AdvectionRegimeSpec, LinearRegimeSpec, SuiteEntry


@dataclass_json
@dataclass
class GridConfig:
    """Grid shape and field stacking of a regime."""
    nx: int
    ny: int
    fields: List[str] = field(default_factory=lambda: ["T"])
    field_scales: List[float] = field(default_factory=lambda: [1.0])

    def to_grid(self) -> FieldGrid:
        return FieldGrid(self.nx, self.ny, tuple(self.fields), tuple(self.field_scales))


@dataclass_json
@dataclass
class RegimeConfig:
    """One regime of a suite; ``kind`` selects the linear or advection family.

    Eigenvalues are ``[real, imag]`` pairs.
    """
    label: str
    parameter: float
    kind: str = "linear"
    s: int = 200
    dt: float = 1.0
    grid: Optional[GridConfig] = None
    # linear family
    n: Optional[int] = None
    r: Optional[int] = None
    eigenvalues: List[List[float]] = field(default_factory=list)
    mode_seed: int = 0
    mode_perturbation: float = 0.0
    perturbation_seed: Optional[int] = None
    # advection family
    speed: float = 0.0
    angle: float = 0.0
    diffusivity: float = 0.0
    init_seed: int = 0
    substeps: int = 1
    init_modes: int = 3

    def to_entry(self) -> SuiteEntry:
        grid = self.grid.to_grid() if self.grid is not None else None
        if self.kind == "linear":
            eigenvalues = [complex(re, im) for re, im in self.eigenvalues]
            n = self.n if self.n is not None else (grid.state_dim if grid is not None else None)
            if n is None:
                raise ConfigError(f"Regime {self.label}: linear regimes need n or a grid")
            r = self.r if self.r is not None else len(eigenvalues)
            spec = LinearRegimeSpec(n, r, eigenvalues, self.mode_seed, self.s, self.dt,
                                    self.mode_perturbation, self.perturbation_seed, grid, self.label)
        elif self.kind == "advection":
            if grid is None:
                raise ConfigError(f"Regime {self.label}: advection regimes need a grid")
            spec = AdvectionRegimeSpec(grid, self.speed, self.angle, self.diffusivity, self.s, self.dt,
                                       self.init_seed, self.substeps, self.init_modes, self.label)
        else:
            raise ConfigError(f"Regime {self.label}: unknown kind '{self.kind}'")
        return SuiteEntry(self.label, self.parameter, spec)


@dataclass_json
@dataclass
class SuiteConfig:
    """A named set of regimes with its default train/test split."""
    name: str
    regimes: List[RegimeConfig]
    train_fraction: float = 0.5
    j_max: int = 10
    description: str = ""

    def entries(self) -> List[SuiteEntry]:
        return [regime.to_entry() for regime in self.regimes]


def _conjugate_pairs(radii: List[float], angles: List[float]) -> List[List[float]]:
    pairs = []
    for radius, angle in zip(radii, angles):
        value = radius * np.exp(1j * angle)
        pairs.append([float(value.real), float(value.imag)])
        pairs.append([float(value.real), float(-value.imag)])
    return pairs


def _default_suite() -> SuiteConfig:
    """Six 50x50 scalar regimes, r = 10, with regime-dependent frequencies."""
    regimes = []
    for i in range(6):
        angles = [0.05 + 0.09 * i + 0.5 * m for m in range(5)]
        radii = [1.0] + [0.998] * 4
        regimes.append(RegimeConfig(
            label=f"R{i + 1}", parameter=float(i + 1), kind="linear", s=200, dt=1.0,
            grid=GridConfig(50, 50), n=2500, r=10,
            eigenvalues=_conjugate_pairs(radii, angles), mode_seed=1000 + i,
        ))
    return SuiteConfig("default", regimes, train_fraction=0.5, j_max=10,
                       description="d=6, n=2500 (50x50 field T), r=10, s=200")


def _small_suite() -> SuiteConfig:
    """Three 10x10 regimes, r = 4, for quick runs."""
    regimes = []
    for i in range(3):
        angles = [0.2 + 0.3 * i, 1.1 + 0.3 * i]
        regimes.append(RegimeConfig(
            label=f"S{i + 1}", parameter=float(i + 1), kind="linear", s=80, dt=1.0,
            grid=GridConfig(10, 10), n=100, r=4,
            eigenvalues=_conjugate_pairs([1.0, 0.99], angles), mode_seed=200 + i,
        ))
    return SuiteConfig("small", regimes, train_fraction=0.5, j_max=5,
                       description="d=3, n=100 (10x10 field T), r=4, s=80")


def _advection_suite() -> SuiteConfig:
    """Four advection-diffusion regimes differing in flow direction."""
    regimes = []
    for i in range(4):
        regimes.append(RegimeConfig(
            label=f"A{i + 1}", parameter=float(i) * np.pi / 4, kind="advection", s=120, dt=0.02,
            grid=GridConfig(24, 24), speed=0.5, angle=float(i) * np.pi / 4,
            diffusivity=1e-4, init_seed=300 + i,
        ))
    return SuiteConfig("advection", regimes, train_fraction=0.5, j_max=5,
                       description="d=4, 24x24 periodic advection-diffusion, rotated velocity")


class SuiteRegistry:
    """Registry of named synthetic suites."""

    def __init__(self):
        self.suites: Dict[str, SuiteConfig] = {
            "default": _default_suite(),
            "small": _small_suite(),
            "advection": _advection_suite(),
        }

    def get_suite(self, name: str) -> SuiteConfig:
        """Suite by registry name, or loaded from a JSON file path."""
        if name in self.suites:
            return self.suites[name]
        if os.path.isfile(name):
            return self.load_suite(name)
        raise ArgumentError(f"Unknown suite '{name}'. Available: {self.get_suite_names()}")

    def get_suite_names(self) -> List[str]:
        return list(self.suites.keys())

    def load_suite(self, path: str) -> SuiteConfig:
        """Load a suite from JSON (same schema as :class:`SuiteConfig`)."""
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
            return SuiteConfig.from_dict(raw)
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"Cannot load suite from {path}: {str(e)}")

    def save_suite(self, suite: SuiteConfig, path: str) -> str:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(json.dumps(suite.to_dict(), indent=2))
            handle.write("\n")
        return path


# Global suite registry instance
suite_registry = SuiteRegistry()
