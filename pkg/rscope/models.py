"""
Data models for snapshots, DMD models, regime libraries, sensing and reports.

All models are immutable after construction. Array fields are copied and
marked read-only, so instances can be shared between worker threads.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from rscope.exceptions import ArgumentError, DimensionError
from rscope.linalg import rank_revealing_pinv


def _frozen_array(values, dtype=None) -> np.ndarray:
    """Copy ``values`` into a read-only array."""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FieldGrid:
    """Equidistant 2-D grid on the unit square carrying one or more fields.

    The state vector is field-major: each field occupies a block of
    ``nx * ny`` entries and node ``(ix, iy)`` sits at ``iy * nx + ix``
    inside its block.
    """
    nx: int
    ny: int
    fields: Tuple[str, ...] = ("T",)
    field_scales: Tuple[float, ...] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "field_scales", tuple(float(s) for s in self.field_scales))

        if int(self.nx) < 1 or int(self.ny) < 1:
            raise ArgumentError(f"Grid sizes must be positive, got {self.nx}x{self.ny}")
        if not self.fields:
            raise ArgumentError("A grid needs at least one field")
        if len(set(self.fields)) != len(self.fields):
            raise ArgumentError(f"Duplicate field names: {self.fields}")
        if len(self.field_scales) != len(self.fields):
            raise ArgumentError(f"Expected {len(self.fields)} field scales, got {len(self.field_scales)}")
        if any(not np.isfinite(s) or s <= 0.0 for s in self.field_scales):
            raise ArgumentError(f"Field scales must be positive, got {self.field_scales}")

    @property
    def nodes(self) -> int:
        return self.nx * self.ny

    @property
    def state_dim(self) -> int:
        return self.nodes * len(self.fields)

    def field_index(self, name: str) -> int:
        """Position of a field in the stacking order."""
        try:
            return self.fields.index(name)
        except ValueError:
            raise ArgumentError(f"Unknown field '{name}'. Available: {list(self.fields)}")

    def field_slice(self, name: str) -> slice:
        """Rows of the state vector that belong to a field."""
        start = self.field_index(name) * self.nodes
        return slice(start, start + self.nodes)

    def node_index(self, ix: int, iy: int) -> int:
        return iy * self.nx + ix

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinates along x and y (endpoints included)."""
        x = np.linspace(0.0, 1.0, self.nx) if self.nx > 1 else np.zeros(1)
        y = np.linspace(0.0, 1.0, self.ny) if self.ny > 1 else np.zeros(1)
        return x, y

    def with_shape(self, nx: int, ny: int) -> "FieldGrid":
        return FieldGrid(nx, ny, self.fields, self.field_scales)


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """State snapshots arranged column-wise: column ``t`` is ``x(t)``."""
    data: np.ndarray
    dt: float = 1.0
    grid: Optional[FieldGrid] = None
    label: str = ""

    def __post_init__(self):
        data = np.asarray(self.data)
        if np.iscomplexobj(data):
            raise ArgumentError("Snapshot data must be real")
        data = _frozen_array(data, dtype=np.float64)

        if data.ndim != 2:
            raise DimensionError(f"Snapshot data must be a 2-D matrix, got {data.ndim} dimensions")
        if data.shape[1] < 2:
            raise DimensionError(f"At least two snapshots are required, got {data.shape[1]}")
        if not np.all(np.isfinite(data)):
            raise ArgumentError("Snapshot data contains NaN or Inf entries")
        if not np.isfinite(self.dt) or self.dt <= 0.0:
            raise ArgumentError(f"Sampling interval must be positive, got {self.dt}")
        if self.grid is not None and self.grid.state_dim != data.shape[0]:
            raise DimensionError(
                f"Grid describes {self.grid.state_dim} state entries but data has {data.shape[0]} rows"
            )

        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def s(self) -> int:
        return self.data.shape[1]

    def window(self, start: int, count: int) -> np.ndarray:
        """Columns ``start .. start+count-1`` as an ``n x count`` array."""
        if start < 0 or count < 1 or start + count > self.s:
            raise ArgumentError(f"Window [{start}, {start + count}) outside 0..{self.s}")
        return self.data[:, start:start + count]

    def columns(self, start: int, stop: int, label: Optional[str] = None) -> "SnapshotMatrix":
        """Sub-matrix of consecutive snapshots keeping grid and dt."""
        return SnapshotMatrix(self.data[:, start:stop], self.dt, self.grid,
                              self.label if label is None else label)


@dataclass(frozen=True)
class RankPolicy:
    """Truncation rule for the SVD step: fixed rank or energy threshold."""
    kind: str = "energy"
    rank: Optional[int] = None
    threshold: Optional[float] = None
    sigma_rel_floor: float = field(default_factory=lambda: settings.numerics.sigma_rel_floor)

    def __post_init__(self):
        if self.kind == "fixed":
            if self.rank is None or int(self.rank) < 1:
                raise ArgumentError(f"Fixed rank policy needs r >= 1, got {self.rank}")
        elif self.kind == "energy":
            if self.threshold is None or not (0.0 < float(self.threshold) <= 1.0):
                raise ArgumentError(f"Energy threshold must lie in (0, 1], got {self.threshold}")
        else:
            raise ArgumentError(f"Unknown rank policy kind '{self.kind}'")
        if self.sigma_rel_floor < 0.0:
            raise ArgumentError("sigma_rel_floor must be nonnegative")

    @classmethod
    def fixed(cls, rank: int, **kwargs) -> "RankPolicy":
        return cls(kind="fixed", rank=int(rank), **kwargs)

    @classmethod
    def energy(cls, threshold: float, **kwargs) -> "RankPolicy":
        return cls(kind="energy", threshold=float(threshold), **kwargs)

    @classmethod
    def parse(cls, text: str) -> "RankPolicy":
        """Parse ``fixed:R`` or ``energy:T``."""
        kind, _, value = text.strip().partition(":")
        try:
            if kind == "fixed":
                return cls.fixed(int(value))
            if kind == "energy":
                return cls.energy(float(value))
        except ValueError:
            pass
        raise ArgumentError(f"Rank policy must look like 'fixed:R' or 'energy:T', got '{text}'")

    def describe(self) -> str:
        return f"fixed:{self.rank}" if self.kind == "fixed" else f"energy:{self.threshold}"


@dataclass(frozen=True, eq=False)
class DmdModel:
    """DMD modes (unit 2-norm columns), eigenvalues and SVD energy profile."""
    modes: np.ndarray
    eigenvalues: np.ndarray
    singular_values: np.ndarray
    dt: float
    energy_captured: float
    subspace_gap: float = 0.0
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        modes = _frozen_array(np.asarray(self.modes, dtype=np.complex128))
        eigenvalues = _frozen_array(np.asarray(self.eigenvalues, dtype=np.complex128).ravel())
        if modes.ndim != 2:
            raise DimensionError("Modes must be an n x r matrix")
        if eigenvalues.shape[0] != modes.shape[1]:
            raise DimensionError(
                f"{modes.shape[1]} modes but {eigenvalues.shape[0]} eigenvalues"
            )
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "singular_values",
                           _frozen_array(np.asarray(self.singular_values, dtype=np.float64).ravel()))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def rank(self) -> int:
        return self.modes.shape[1]

    @property
    def state_dim(self) -> int:
        return self.modes.shape[0]

    @property
    def continuous_eigenvalues(self) -> np.ndarray:
        """Continuous-time eigenvalues log(lambda) / dt."""
        with np.errstate(divide="ignore"):
            return np.log(self.eigenvalues) / self.dt

    @property
    def frequencies(self) -> np.ndarray:
        """Oscillation frequencies in cycles per unit time."""
        return np.imag(self.continuous_eigenvalues) / (2.0 * np.pi)

    def amplitudes(self, state: np.ndarray) -> np.ndarray:
        """Least-squares mode amplitudes of a state vector."""
        pinv, _, _, _ = rank_revealing_pinv(self.modes)
        return pinv @ np.asarray(state, dtype=np.float64)


@dataclass(frozen=True)
class RegimeEntry:
    """One library regime: label, parameter tag and its DMD model."""
    label: str
    parameter: float
    model: DmdModel


@dataclass(frozen=True)
class RegimeLibrary:
    """Ordered set of regimes sharing state dimension and sampling interval."""
    entries: Tuple[RegimeEntry, ...]
    state_dim: int
    dt: float
    grid: Optional[FieldGrid] = None

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ArgumentError("A regime library needs at least one entry")

        labels = [entry.label for entry in entries]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ArgumentError(f"Duplicate regime labels: {duplicates}")

        for entry in entries:
            if entry.model.state_dim != self.state_dim:
                raise DimensionError(
                    f"Regime {entry.label} has state dimension {entry.model.state_dim}, "
                    f"library expects {self.state_dim}"
                )
            if not np.isclose(entry.model.dt, self.dt, rtol=1e-12, atol=0.0):
                raise DimensionError(
                    f"Regime {entry.label} sampled at dt={entry.model.dt}, library uses dt={self.dt}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[RegimeEntry]:
        return iter(self.entries)

    @property
    def labels(self) -> List[str]:
        return [entry.label for entry in self.entries]

    @property
    def ranks(self) -> List[int]:
        return [entry.model.rank for entry in self.entries]

    def index_of(self, label: str) -> int:
        for index, entry in enumerate(self.entries):
            if entry.label == label:
                return index
        raise ArgumentError(f"Regime '{label}' not in library {self.labels}")

    def check_snapshots(self, snap: SnapshotMatrix):
        """Raise :class:`DimensionError` unless ``snap`` shares the state dimension and dt."""
        name = snap.label or "snapshots"
        if snap.n != self.state_dim:
            raise DimensionError(f"Test set {name} has n={snap.n}, library has n={self.state_dim}")
        if not np.isclose(snap.dt, self.dt, rtol=1e-12, atol=0.0):
            raise DimensionError(f"Test set {name} sampled at dt={snap.dt}, library uses dt={self.dt}")


@dataclass(frozen=True, eq=False)
class AugmentedBasis:
    """Time-augmented basis [Phi; Phi Lambda; ...; Phi Lambda^j]."""
    matrix: np.ndarray
    depth: int
    source: str

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen_array(self.matrix, dtype=np.complex128))

    def block(self, b: int) -> np.ndarray:
        """Block ``b`` (the ``n x r`` slice Phi Lambda^b)."""
        n = self.matrix.shape[0] // (self.depth + 1)
        return self.matrix[b * n:(b + 1) * n]


@dataclass(frozen=True, eq=False)
class SensingOperator:
    """Measurement matrix C (p x n) with its construction provenance."""
    matrix: np.ndarray
    kind: str
    seed: Optional[int] = None
    sensor_indices: Optional[Tuple[int, ...]] = None

    KINDS = ("point", "boundary", "gaussian", "bernoulli", "identity", "tomographic")

    def __post_init__(self):
        matrix = _frozen_array(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionError("Sensing matrix must be 2-D")
        if self.kind not in self.KINDS:
            raise ArgumentError(f"Unknown sensing kind '{self.kind}'. Available: {list(self.KINDS)}")
        if self.sensor_indices is not None:
            object.__setattr__(self, "sensor_indices", tuple(int(i) for i in self.sensor_indices))

        if self.kind in ("point", "boundary"):
            ones = np.count_nonzero(matrix, axis=1)
            if np.any(ones != 1) or np.any(matrix.sum(axis=1) != 1.0):
                raise ArgumentError(f"{self.kind} sensing rows must be one-hot")
            columns = np.argmax(matrix, axis=1)
            if len(set(columns.tolist())) != len(columns):
                raise ArgumentError(f"{self.kind} sensing rows must select distinct components")
        if self.kind == "identity":
            if matrix.shape[0] != matrix.shape[1] or not np.array_equal(matrix, np.eye(matrix.shape[0])):
                raise ArgumentError("identity sensing requires C = I_n")

        object.__setattr__(self, "matrix", matrix)

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class Measurement:
    """Stacked measurements y(t:t+j), optionally with calibrated noise."""
    values: np.ndarray
    depth: int = 0
    snr_db: Optional[float] = None
    seed: Optional[int] = None
    noise_fraction: float = 0.0

    def __post_init__(self):
        values = _frozen_array(np.asarray(self.values, dtype=np.float64).ravel())
        if not np.all(np.isfinite(values)):
            raise ArgumentError("Measurement contains NaN or Inf entries")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class ObservedLibrary:
    """Sensed (optionally time-augmented) bases with cached pseudoinverses."""
    thetas: Tuple[np.ndarray, ...]
    pinvs: Tuple[np.ndarray, ...]
    numerical_ranks: Tuple[int, ...]
    labels: Tuple[str, ...]
    depth: int = 0
    sensing: Optional[SensingOperator] = None
    flags: Tuple[Optional[str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(_frozen_array(t, dtype=np.complex128) for t in self.thetas))
        object.__setattr__(self, "pinvs", tuple(_frozen_array(p, dtype=np.complex128) for p in self.pinvs))
        object.__setattr__(self, "numerical_ranks", tuple(int(r) for r in self.numerical_ranks))
        object.__setattr__(self, "labels", tuple(self.labels))
        flags = tuple(self.flags) if self.flags else (None,) * len(self.thetas)
        object.__setattr__(self, "flags", flags)

        counts = {len(self.thetas), len(self.pinvs), len(self.numerical_ranks), len(self.labels), len(flags)}
        if len(counts) != 1:
            raise DimensionError("Observed library components have inconsistent lengths")
        rows = {theta.shape[0] for theta in self.thetas}
        if len(rows) > 1:
            raise DimensionError(f"Observed bases disagree on measurement length: {sorted(rows)}")

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray], labels: Optional[Sequence[str]] = None,
                    depth: int = 0, sensing: Optional[SensingOperator] = None) -> "ObservedLibrary":
        """Build an observed library directly from Theta blocks."""
        blocks = [np.asarray(block, dtype=np.complex128) for block in blocks]
        if labels is None:
            labels = [f"R{index + 1}" for index in range(len(blocks))]
        pinvs, ranks, flags = [], [], []
        for label, block in zip(labels, blocks):
            pinv, rank, _, _ = rank_revealing_pinv(block)
            pinvs.append(pinv)
            ranks.append(rank)
            if rank < block.shape[1]:
                flags.append(f"rank-deficient observed basis for {label}: rank {rank} < {block.shape[1]}")
            else:
                flags.append(None)
        return cls(tuple(blocks), tuple(pinvs), tuple(ranks), tuple(labels), depth, sensing, tuple(flags))

    def __len__(self) -> int:
        return len(self.thetas)

    @property
    def measurement_dim(self) -> int:
        return self.thetas[0].shape[0] if self.thetas else 0

    @property
    def ranks(self) -> List[int]:
        return [theta.shape[1] for theta in self.thetas]

    @property
    def flagged(self) -> Dict[str, str]:
        return {label: flag for label, flag in zip(self.labels, self.flags) if flag}


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    """Per-regime projection results and the winning regime."""
    winner: int
    labels: Tuple[str, ...]
    projection_norms: np.ndarray
    residuals: np.ndarray
    coefficients: np.ndarray
    flags: Tuple[str, ...] = ()

    @property
    def winner_label(self) -> str:
        return self.labels[self.winner]

    def to_record(self) -> Dict[str, object]:
        """Flat record for CSV export."""
        record: Dict[str, object] = {"winner": self.winner_label}
        for label, norm, residual in zip(self.labels, self.projection_norms, self.residuals):
            record[f"projection_{label}"] = float(norm)
            record[f"residual_{label}"] = float(residual)
        record["flags"] = "; ".join(self.flags)
        return record


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Full-state estimate x*(t..t+j) from one regime."""
    states: np.ndarray
    regime: int
    imag_residual: float
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    """d x d diagnostic matrix (eta, gamma or kappa)."""
    values: np.ndarray
    metric_kind: str
    basis_space: str = "full"
    labels: Tuple[str, ...] = ()
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, dtype=np.float64))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "flags", tuple(self.flags))


@dataclass(frozen=True)
class CoherenceReport:
    """Block-coherence, sub-coherence and the single-block recovery bound."""
    mu_b: float
    nu: float
    r_block: int
    d: int
    bound: float
    bound_satisfied: bool


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Row-stochastic classification percentages (rows: test sets)."""
    values: np.ndarray
    row_labels: Tuple[str, ...]
    col_labels: Tuple[str, ...]
    trials: int
    snr_db: Optional[float]
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, dtype=np.float64))
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    def accuracy(self) -> Dict[str, float]:
        """Diagonal share per row label that also appears as a column."""
        result = {}
        for row, label in enumerate(self.row_labels):
            if label in self.col_labels:
                result[label] = float(self.values[row, self.col_labels.index(label)])
        return result
