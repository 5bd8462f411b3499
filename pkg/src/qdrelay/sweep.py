"""Parameter sweeps over relay chains and their CSV / JSON / pixmap outputs."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .chain import (
    BSM_X_X,
    FiberLink,
    QdSource,
    RateParams,
    RelayChain,
    chain_fidelity,
    chain_pair_rate,
)
from .formulas import JITTER_PRINTED
from .numerics import DomainError
from .states import NOISE_PRODUCT
from .wavepacket.grid import FilterSpec

CSV_HEADER = "axis1,axis2,L,fidelity,success_prob,pair_rate_hz"
DEFAULT_POINTS = 25

PRESETS = ("fig2a", "fig2b", "fig2c")
CUSTOM = "custom"

# Parameters a sweep axis may vary. "purcell" sets P_X = P and
# P_XX = purcell_xx_ratio * P.
AXIS_PARAMETERS = (
    "purcell",
    "purcell_x",
    "purcell_xx",
    "delta_e",
    "fss",
    "g2",
    "filter_fwhm",
    "length",
)

# Linear color map: fidelity 0 -> COLOR_LOW, fidelity 1 -> COLOR_HIGH.
COLOR_LOW = (68, 1, 84)
COLOR_HIGH = (253, 231, 37)
COLOR_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    points: int = DEFAULT_POINTS

    def __post_init__(self):
        if self.name not in AXIS_PARAMETERS:
            raise DomainError(f"unknown sweep parameter {self.name!r}; choose from {', '.join(AXIS_PARAMETERS)}")
        if int(self.points) != self.points or self.points < 1:
            raise DomainError(f"axis {self.name} needs at least one point")
        if self.points > 1 and not self.stop > self.start:
            raise DomainError(f"axis {self.name} range is empty: {self.start} .. {self.stop}")

    @classmethod
    def from_step(cls, name: str, start: float, stop: float, step: float) -> "Axis":
        if not step > 0:
            raise DomainError(f"axis {name} step must be positive")
        return cls(name, start, stop, int(round((stop - start) / step)) + 1)

    @property
    def step(self) -> float:
        return 0.0 if self.points == 1 else (self.stop - self.start) / (self.points - 1)

    @property
    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.start)])
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ChainConfig:
    """Everything about a chain except its depth."""

    source: QdSource = field(default_factory=QdSource)
    rate: RateParams = field(default_factory=RateParams)
    fiber: FiberLink = field(default_factory=FiberLink)
    filter: FilterSpec | None = None
    bsm_mode: str = BSM_X_X
    jitter_convention: str = JITTER_PRINTED
    noise: str = NOISE_PRODUCT

    def chain(self, depth: int) -> RelayChain:
        return RelayChain.homogeneous(
            depth,
            self.source,
            fiber=self.fiber,
            filter=self.filter,
            bsm_mode=self.bsm_mode,
            jitter_convention=self.jitter_convention,
            noise=self.noise,
        )

    def with_parameter(self, name: str, value: float, purcell_xx_ratio: float = 1.0) -> "ChainConfig":
        value = float(value)
        src = self.source
        if name == "purcell":
            return replace(self, source=replace(src, P_X=value, P_XX=purcell_xx_ratio * value))
        if name == "purcell_x":
            return replace(self, source=replace(src, P_X=value))
        if name == "purcell_xx":
            return replace(self, source=replace(src, P_XX=value))
        if name == "delta_e":
            return replace(self, source=replace(src, delta_E=value))
        if name == "fss":
            return replace(self, source=replace(src, S=value))
        if name == "g2":
            return replace(self, source=replace(src, g2=value))
        if name == "filter_fwhm":
            center = self.filter.center_detuning if self.filter else 0.0
            return replace(self, filter=FilterSpec(value, center))
        if name == "length":
            return replace(self, fiber=replace(self.fiber, length=value))
        raise DomainError(f"unknown sweep parameter {name!r}")


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis
    fixed: ChainConfig = field(default_factory=ChainConfig)
    depths: tuple[int, ...] = (1, 2, 3)
    preset: str = CUSTOM
    purcell_xx_ratio: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if not self.depths or any(d < 0 for d in self.depths):
            raise DomainError("depths must be a non-empty list of integers >= 0")
        if self.preset not in PRESETS + (CUSTOM,):
            raise DomainError(f"unknown preset {self.preset!r}")
        if not self.purcell_xx_ratio > 0:
            raise DomainError("purcell_xx_ratio must be positive")

    def cells(self) -> list[tuple[float, float]]:
        """Lattice points, axis2 outer and axis1 inner (row-major image order)."""
        return [(float(a), float(b)) for b in self.axis2.values for a in self.axis1.values]

    def config_at(self, v1: float, v2: float) -> ChainConfig:
        cfg = self.fixed.with_parameter(self.axis1.name, v1, self.purcell_xx_ratio)
        return cfg.with_parameter(self.axis2.name, v2, self.purcell_xx_ratio)


def preset_spec(name: str, points: int = DEFAULT_POINTS, depths=(1, 2, 3)) -> SweepSpec:
    """The three reference lattices with their locked parameters (S = 0.05 µeV)."""
    src = QdSource(S=0.05)
    if name in ("fig2a", "fig2b"):
        ratio = 1.0 if name == "fig2a" else 7.0
        return SweepSpec(
            Axis("purcell", 1.0, 15.0, points),
            Axis("delta_e", 0.0, 2.4, points),
            ChainConfig(source=src),
            depths,
            name,
            ratio,
        )
    if name == "fig2c":
        return SweepSpec(
            Axis("filter_fwhm", 1.0, 25.0, points),
            Axis("delta_e", 0.0, 0.3, points),
            ChainConfig(source=replace(src, P_X=2.0, P_XX=10.0), filter=FilterSpec(4.0)),
            depths,
            name,
        )
    raise DomainError(f"unknown preset {name!r}")


@dataclass(frozen=True)
class Row:
    axis1: float
    axis2: float
    L: int
    fidelity: float
    success_prob: float
    pair_rate_hz: float


@dataclass(frozen=True)
class ResultTable:
    spec: SweepSpec
    rows: tuple[Row, ...]

    def grid(self, depth: int, column: str = "fidelity") -> np.ndarray:
        """Values for one depth as an array indexed [axis2, axis1]."""
        vals = [getattr(r, column) for r in self.rows if r.L == depth]
        return np.array(vals).reshape(self.spec.axis2.points, self.spec.axis1.points)


def evaluate_cell(spec: SweepSpec, v1: float, v2: float) -> list[Row]:
    """All requested depths at one lattice point."""
    try:
        cfg = spec.config_at(v1, v2)
        rows = []
        for depth in spec.depths:
            chain = cfg.chain(depth)
            res = chain_fidelity(chain)
            rate = chain_pair_rate(chain, res, cfg.rate)
            rows.append(Row(v1, v2, depth, res.fidelity, res.success_prob, rate))
        return rows
    except ValueError as exc:
        where = f"{spec.axis1.name}={v1:g}, {spec.axis2.name}={v2:g}"
        raise type(exc)(f"at {where}: {exc}") from exc


def _evaluate_chunk(args) -> list[Row]:
    spec, cells = args
    out = []
    for v1, v2 in cells:
        out.extend(evaluate_cell(spec, v1, v2))
    return out


def run_sweep(spec: SweepSpec, threads: int = 1) -> ResultTable:
    """Evaluate every lattice point for every depth.

    Rows are ordered by lattice index (axis2 outer, axis1 inner), then by
    depth, independently of how the work was split across processes.
    """
    if threads < 1:
        raise DomainError("threads must be >= 1")
    cells = spec.cells()
    if threads == 1 or len(cells) == 1:
        rows = _evaluate_chunk((spec, cells))
    else:
        n_chunks = min(len(cells), 4 * threads)
        bounds = np.linspace(0, len(cells), n_chunks + 1).astype(int)
        chunks = [(spec, cells[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = [r for part in pool.map(_evaluate_chunk, chunks) for r in part]
    return ResultTable(spec, tuple(rows))


def format_value(x: float) -> str:
    return f"{x:.9g}"


def table_csv(t: ResultTable) -> str:
    lines = [CSV_HEADER]
    for r in t.rows:
        lines.append(
            ",".join(
                (
                    format_value(r.axis1),
                    format_value(r.axis2),
                    str(r.L),
                    format_value(r.fidelity),
                    format_value(r.success_prob),
                    format_value(r.pair_rate_hz),
                )
            )
        )
    return "\n".join(lines) + "\n"


def table_json(t: ResultTable) -> str:
    """JSON mirror of the CSV: the same rounded numbers plus axis metadata."""
    doc = {
        "preset": t.spec.preset,
        "axis1": t.spec.axis1.name,
        "axis2": t.spec.axis2.name,
        "columns": CSV_HEADER.split(","),
        "rows": [
            [
                float(format_value(r.axis1)),
                float(format_value(r.axis2)),
                r.L,
                float(format_value(r.fidelity)),
                float(format_value(r.success_prob)),
                float(format_value(r.pair_rate_hz)),
            ]
            for r in t.rows
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def colormap(f: np.ndarray) -> np.ndarray:
    """Linear interpolation between COLOR_LOW and COLOR_HIGH over COLOR_RANGE."""
    lo, hi = COLOR_RANGE
    s = np.clip((np.asarray(f, dtype=float) - lo) / (hi - lo), 0.0, 1.0)[..., None]
    rgb = (1.0 - s) * np.array(COLOR_LOW) + s * np.array(COLOR_HIGH)
    return np.rint(rgb).astype(np.uint8)


def heatmap_ppm(values: np.ndarray, scale: int = 1) -> bytes:
    """P6 image; columns follow axis1, rows follow axis2 with its maximum on top."""
    if int(scale) != scale or scale < 1:
        raise DomainError("heatmap scale must be a positive integer")
    img = colormap(values[::-1, :])
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def heatmap_sidecar(t: ResultTable, depth: int, scale: int) -> str:
    s = t.spec
    vals = t.grid(depth)
    return "\n".join(
        [
            f"preset: {s.preset}",
            f"depth L: {depth}",
            f"x axis (columns, left to right): {s.axis1.name} from {s.axis1.start:g} to {s.axis1.stop:g}, "
            f"{s.axis1.points} points, step {s.axis1.step:g}",
            f"y axis (rows, bottom to top): {s.axis2.name} from {s.axis2.start:g} to {s.axis2.stop:g}, "
            f"{s.axis2.points} points, step {s.axis2.step:g}",
            f"pixel size: {scale}x{scale}",
            f"color map: linear in fidelity over [{COLOR_RANGE[0]:g}, {COLOR_RANGE[1]:g}], "
            f"RGB{COLOR_LOW} at {COLOR_RANGE[0]:g} to RGB{COLOR_HIGH} at {COLOR_RANGE[1]:g}",
            f"fidelity min {format_value(float(vals.min()))}, max {format_value(float(vals.max()))}",
            "",
        ]
    )


def emit_outputs(t: ResultTable, out_dir, formats=("csv", "json", "heatmap"), scale: int = 1, stem: str | None = None):
    """Write the table; returns the list of paths written."""
    if not t.rows:
        raise DomainError("cannot emit an empty table")
    unknown = set(formats) - {"csv", "json", "heatmap"}
    if unknown:
        raise DomainError(f"unknown output format(s): {', '.join(sorted(unknown))}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or (t.spec.preset if t.spec.preset != CUSTOM else "sweep")
    written = []

    def write(path: Path, data):
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        written.append(path)

    if "csv" in formats:
        write(out / f"{stem}.csv", table_csv(t))
    if "json" in formats:
        write(out / f"{stem}.json", table_json(t))
    if "heatmap" in formats:
        for depth in t.spec.depths:
            write(out / f"{stem}_L{depth}.ppm", heatmap_ppm(t.grid(depth), scale))
            write(out / f"{stem}_L{depth}.txt", heatmap_sidecar(t, depth, scale))
    return written


def default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def is_unimodal(values, tol: float = 1e-12) -> bool:
    """True if the sequence rises (weakly) to one maximum and then falls (weakly)."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    k = int(np.argmax(v))
    return bool(np.all(d[:k] >= -tol) and np.all(d[k:] <= tol)) and math.isfinite(v.sum())
