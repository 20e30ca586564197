"""
Synthetic regime generators: exact linear systems with a prescribed
spectrum and a periodic 2-D advection-diffusion field.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import settings
from rscope.exceptions import ArgumentError, DimensionError
from rscope.models import FieldGrid, SnapshotMatrix
from utils.logger import logger

CFL_LIMIT = 0.9


@dataclass
class LinearRegimeSpec:
    """Linear regime ``x(t) = Re(Phi diag(lambda)^t beta)`` with seeded modes.

    ``mode_perturbation`` adds a seeded offset of that relative size to the
    modes drawn from ``mode_seed``, giving near-duplicates of a base regime.
    """
    n: int
    r: int
    eigenvalues: Sequence[complex]
    mode_seed: int
    s: int
    dt: float = 1.0
    mode_perturbation: float = 0.0
    perturbation_seed: Optional[int] = None
    grid: Optional[FieldGrid] = None
    label: str = ""


@dataclass
class AdvectionRegimeSpec:
    """Scalar field advected by a uniform velocity on a periodic grid."""
    grid: FieldGrid
    speed: float
    angle: float
    diffusivity: float
    s: int
    dt: float
    init_seed: int
    substeps: int = 1
    init_modes: int = 3
    label: str = ""

    @property
    def velocity(self) -> Tuple[float, float]:
        return self.speed * np.cos(self.angle), self.speed * np.sin(self.angle)

    def cfl_number(self) -> float:
        """``|vx| dt/hx + |vy| dt/hy + 2 D dt (1/hx^2 + 1/hy^2)`` for one solver step."""
        vx, vy = self.velocity
        hx, hy = 1.0 / self.grid.nx, 1.0 / self.grid.ny
        step = self.dt / self.substeps
        return (abs(vx) * step / hx + abs(vy) * step / hy
                + 2.0 * self.diffusivity * step * (1.0 / hx ** 2 + 1.0 / hy ** 2))


RegimeSpec = Union[LinearRegimeSpec, AdvectionRegimeSpec]


@dataclass
class SuiteEntry:
    """One regime of a synthetic suite."""
    label: str
    parameter: float
    spec: RegimeSpec = field(repr=False)


def _spectrum_groups(eigenvalues: np.ndarray) -> List[Tuple[int, ...]]:
    """Split a spectrum into real singletons ``(i,)`` and conjugate pairs ``(i, k)``."""
    tolerance = settings.numerics.conjugate_tolerance
    used = np.zeros(eigenvalues.shape[0], dtype=bool)
    groups = []
    for i, value in enumerate(eigenvalues):
        if used[i]:
            continue
        used[i] = True
        if abs(value.imag) <= tolerance:
            groups.append((i,))
            continue
        partners = [k for k in range(i + 1, eigenvalues.shape[0])
                    if not used[k] and abs(eigenvalues[k] - np.conj(value)) <= tolerance * max(1.0, abs(value))]
        if not partners:
            raise ArgumentError(f"Eigenvalue {value} has no conjugate partner; spectrum must be conjugate-closed")
        used[partners[0]] = True
        groups.append((i, partners[0]))
    return groups


def _validate_linear(spec: LinearRegimeSpec) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    eigenvalues = np.asarray(spec.eigenvalues, dtype=np.complex128).ravel()
    if spec.n < 1 or spec.r < 1:
        raise ArgumentError(f"n and r must be positive, got n={spec.n}, r={spec.r}")
    if eigenvalues.shape[0] != spec.r:
        raise ArgumentError(f"Spectrum has {eigenvalues.shape[0]} eigenvalues, r={spec.r}")
    if spec.r > spec.n:
        raise ArgumentError(f"r={spec.r} exceeds the state dimension n={spec.n}")
    if spec.s < 2:
        raise ArgumentError(f"At least two snapshots are required, got s={spec.s}")
    if spec.dt <= 0.0:
        raise ArgumentError(f"dt must be positive, got {spec.dt}")
    if np.any(np.abs(eigenvalues) > settings.numerics.max_eigen_modulus):
        raise ArgumentError(
            f"Eigenvalue moduli must not exceed {settings.numerics.max_eigen_modulus}, "
            f"got {np.max(np.abs(eigenvalues)):.6f}"
        )
    if spec.mode_perturbation < 0.0:
        raise ArgumentError("mode_perturbation must be nonnegative")
    if spec.grid is not None and spec.grid.state_dim != spec.n:
        raise DimensionError(f"Grid has {spec.grid.state_dim} entries, spec has n={spec.n}")
    return eigenvalues, _spectrum_groups(eigenvalues)


def _draw_modes(rng: np.random.Generator, n: int, eigenvalues: np.ndarray,
                groups: Sequence[Tuple[int, ...]]) -> np.ndarray:
    modes = np.zeros((n, eigenvalues.shape[0]), dtype=np.complex128)
    for group in groups:
        if len(group) == 1:
            modes[:, group[0]] = rng.standard_normal(n)
        else:
            vector = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            modes[:, group[0]] = vector
            modes[:, group[1]] = np.conj(vector)
    return modes


def linear_regime_truth(spec: LinearRegimeSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ground-truth ``(modes, eigenvalues, amplitudes)`` of a linear regime."""
    eigenvalues, groups = _validate_linear(spec)
    rng = np.random.default_rng(spec.mode_seed)
    modes = _draw_modes(rng, spec.n, eigenvalues, groups)

    amplitudes = np.zeros(spec.r, dtype=np.complex128)
    for group in groups:
        magnitude = rng.uniform(0.5, 1.5)
        if len(group) == 1:
            amplitudes[group[0]] = magnitude * rng.choice((-1.0, 1.0))
        else:
            value = magnitude * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
            amplitudes[group[0]] = value
            amplitudes[group[1]] = np.conj(value)

    if spec.mode_perturbation > 0.0:
        offset = _draw_modes(np.random.default_rng(spec.perturbation_seed), spec.n, eigenvalues, groups)
        offset /= np.linalg.norm(offset, axis=0)
        modes = modes / np.linalg.norm(modes, axis=0) + spec.mode_perturbation * offset

    modes /= np.linalg.norm(modes, axis=0)
    return modes, eigenvalues, amplitudes


def gen_linear_regime(spec: LinearRegimeSpec) -> SnapshotMatrix:
    """Snapshots ``x(t) = Phi diag(lambda)^t beta`` for ``t = 0..s-1`` (real by construction)."""
    modes, eigenvalues, amplitudes = linear_regime_truth(spec)
    steps = np.arange(spec.s)
    dynamics = amplitudes[:, np.newaxis] * eigenvalues[:, np.newaxis] ** steps[np.newaxis, :]
    data = modes @ dynamics
    logger.debug(f"Generated linear regime {spec.label or '(unnamed)'}: n={spec.n}, r={spec.r}, s={spec.s}, "
                 f"max imaginary part {np.max(np.abs(data.imag)):.2e}")
    return SnapshotMatrix(data.real, spec.dt, spec.grid, spec.label)


def _initial_field(spec: AdvectionRegimeSpec) -> np.ndarray:
    """Seeded sum of low Fourier modes on the periodic grid (shape ny x nx)."""
    rng = np.random.default_rng(spec.init_seed)
    x = np.arange(spec.grid.nx) / spec.grid.nx
    y = np.arange(spec.grid.ny) / spec.grid.ny
    yy, xx = np.meshgrid(y, x, indexing="ij")
    values = np.zeros_like(xx)
    for kx in range(spec.init_modes + 1):
        for ky in range(spec.init_modes + 1):
            if kx == 0 and ky == 0:
                continue
            weight = rng.standard_normal() / (1.0 + kx * kx + ky * ky)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            values += weight * np.cos(2.0 * np.pi * (kx * xx + ky * yy) + phase)
    return values


def _advection_step(u: np.ndarray, vx: float, vy: float, diffusivity: float,
                    step: float, hx: float, hy: float) -> np.ndarray:
    """One explicit upwind-advection, centred-diffusion step; x runs along axis 1."""
    if vx >= 0.0:
        dudx = (u - np.roll(u, 1, axis=1)) / hx
    else:
        dudx = (np.roll(u, -1, axis=1) - u) / hx
    if vy >= 0.0:
        dudy = (u - np.roll(u, 1, axis=0)) / hy
    else:
        dudy = (np.roll(u, -1, axis=0) - u) / hy
    laplacian = ((np.roll(u, 1, axis=1) - 2.0 * u + np.roll(u, -1, axis=1)) / hx ** 2
                 + (np.roll(u, 1, axis=0) - 2.0 * u + np.roll(u, -1, axis=0)) / hy ** 2)
    return u + step * (diffusivity * laplacian - vx * dudx - vy * dudy)


def gen_advection_regime(spec: AdvectionRegimeSpec) -> SnapshotMatrix:
    """Advect and diffuse a smooth random field; column t is the field after t*dt."""
    if len(spec.grid.fields) != 1:
        raise ArgumentError(f"Advection regimes carry one scalar field, got {list(spec.grid.fields)}")
    if spec.s < 2 or spec.substeps < 1 or spec.dt <= 0.0:
        raise ArgumentError(f"Invalid time stepping: s={spec.s}, substeps={spec.substeps}, dt={spec.dt}")
    if spec.speed < 0.0 or spec.diffusivity < 0.0:
        raise ArgumentError("speed and diffusivity must be nonnegative")
    cfl = spec.cfl_number()
    if cfl > CFL_LIMIT:
        raise ArgumentError(
            f"CFL number {cfl:.4f} exceeds {CFL_LIMIT}; it sums |vx| dt/hx and |vy| dt/hy plus the diffusion "
            "term, so it is stricter than max|v| dt/h. Reduce dt or add substeps"
        )

    vx, vy = spec.velocity
    hx, hy = 1.0 / spec.grid.nx, 1.0 / spec.grid.ny
    step = spec.dt / spec.substeps

    u = _initial_field(spec)
    data = np.empty((spec.grid.nodes, spec.s))
    data[:, 0] = u.ravel()
    for t in range(1, spec.s):
        for _ in range(spec.substeps):
            u = _advection_step(u, vx, vy, spec.diffusivity, step, hx, hy)
        data[:, t] = u.ravel()

    logger.debug(f"Generated advection regime {spec.label or '(unnamed)'}: CFL {cfl:.3f}, "
                 f"angle {spec.angle:.3f}, s={spec.s}")
    return SnapshotMatrix(data, spec.dt, spec.grid, spec.label)


def generate(spec: RegimeSpec) -> SnapshotMatrix:
    """Dispatch to the generator for ``spec``'s family."""
    if isinstance(spec, LinearRegimeSpec):
        return gen_linear_regime(spec)
    if isinstance(spec, AdvectionRegimeSpec):
        return gen_advection_regime(spec)
    raise ArgumentError(f"Unknown regime spec type {type(spec).__name__}")


def gen_suite(entries: Sequence[SuiteEntry], train_fraction: float, j_max: int = 0,
              threads: Optional[int] = None
              ) -> Tuple[List[Tuple[str, float, SnapshotMatrix]], List[SnapshotMatrix]]:
    """Generate every regime and split its columns into train and test ranges.

    The first ``round(s * train_fraction)`` snapshots train the library, the
    rest form the test set. With ``train_fraction = 1`` the test list is empty;
    a fraction that empties the test range of only some regimes is an error.
    """
    if not entries:
        raise ArgumentError("A suite needs at least one regime")
    if not (0.0 < train_fraction <= 1.0):
        raise ArgumentError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    if j_max < 0:
        raise ArgumentError(f"j_max must be nonnegative, got {j_max}")

    workers = max(1, threads if threads is not None else settings.compute.threads)
    specs = [entry.spec for entry in entries]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            snaps = list(pool.map(generate, specs))
    else:
        snaps = [generate(spec) for spec in specs]

    train, test = [], []
    for entry, snap in zip(entries, snaps):
        cut = int(round(snap.s * train_fraction))
        remainder = snap.s - cut
        if cut < 2:
            raise ArgumentError(f"Regime {entry.label}: {cut} training snapshots, need at least 2")
        if remainder and remainder < max(2, j_max + 1):
            raise ArgumentError(
                f"Regime {entry.label}: {remainder} test snapshots, need at least {max(2, j_max + 1)}"
            )
        train.append((entry.label, entry.parameter, snap.columns(0, cut, entry.label)))
        if remainder:
            test.append(snap.columns(cut, snap.s, entry.label))

    if 0 < len(test) < len(train):
        tested = {snap.label for snap in test}
        missing = [label for label, _, _ in train if label not in tested]
        raise ArgumentError(
            f"train_fraction {train_fraction} leaves no test snapshots for {missing}; "
            "every regime needs a test split or none does"
        )

    logger.info(f"Generated suite of {len(entries)} regimes "
                f"({'no test split' if not test else f'train fraction {train_fraction}'})")
    return train, test
