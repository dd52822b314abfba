"""Spatial functional datasets: container, CSV (de)serialization, smoothing, detrending.

CSV schema: header ``site_id,x,y,t_0,...,t_{T-1}`` with one sampled function
per row; optional companion file with header ``site_id,<name>,...`` for
per-site covariates. Files are UTF-8 with LF newlines; values are written in
full-precision scientific notation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spafda.fdcore import Grid, InvalidInputError, SampledFunction, srsf_transform

__all__ = [
    "SpatialDataset",
    "DatasetFormatError",
    "DegenerateCovariatesError",
    "load_dataset",
    "save_dataset",
    "load_covariates",
    "save_covariates",
    "smooth_dataset",
    "detrend_spatial",
]


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files; message carries the offending line."""


class DegenerateCovariatesError(ValueError):
    """Raised when the covariate design matrix is rank deficient."""


@dataclass(frozen=True)
class SpatialDataset:
    """Collection of sited functions on a common grid, plus optional covariates."""

    grid: Grid
    functions: tuple[SampledFunction, ...]
    site_ids: tuple[str, ...] = ()
    covariates: dict[str, tuple[float, ...]] | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        fns = tuple(self.functions)
        object.__setattr__(self, "functions", fns)
        if not self.site_ids:
            object.__setattr__(self, "site_ids", tuple(str(i) for i in range(len(fns))))
        if len(self.site_ids) != len(fns):
            raise InvalidInputError("site_ids must match functions")
        for f in fns:
            if f.grid.size != self.grid.size or not np.array_equal(f.grid.points, self.grid.points):
                raise InvalidInputError("all functions must share the dataset grid")
        sites = [f.site for f in fns]
        if len(set(sites)) != len(sites):
            raise InvalidInputError("sites must be distinct")
        if self.covariates is not None:
            for name, vals in self.covariates.items():
                if len(vals) != len(fns):
                    raise InvalidInputError(f"covariate {name!r} length mismatch")

    @property
    def n(self) -> int:
        return len(self.functions)

    @property
    def sites(self) -> np.ndarray:
        return np.array([f.site for f in self.functions], dtype=float)

    @property
    def values_matrix(self) -> np.ndarray:
        return np.array([f.values for f in self.functions], dtype=float)

    @property
    def starts(self) -> np.ndarray:
        return np.array([f.values[0] for f in self.functions], dtype=float)

    def srsfs(self) -> list:
        return [srsf_transform(f) for f in self.functions]

    def subset(self, indices) -> "SpatialDataset":
        idx = list(indices)
        cov = None
        if self.covariates is not None:
            cov = {k: tuple(v[i] for i in idx) for k, v in self.covariates.items()}
        return SpatialDataset(
            grid=self.grid,
            functions=tuple(self.functions[i] for i in idx),
            site_ids=tuple(self.site_ids[i] for i in idx),
            covariates=cov,
            meta=dict(self.meta),
        )

    def with_values(self, values: np.ndarray) -> "SpatialDataset":
        """Same sites and grid, new value matrix (n x T)."""
        vals = np.asarray(values, dtype=float)
        if vals.shape != (self.n, self.grid.size):
            raise InvalidInputError("value matrix shape mismatch")
        fns = tuple(
            SampledFunction(self.grid, vals[i], site=f.site) for i, f in enumerate(self.functions)
        )
        return SpatialDataset(self.grid, fns, self.site_ids, self.covariates, dict(self.meta))


def _fmt(x: float) -> str:
    return np.format_float_scientific(x, unique=True)


def save_dataset(dataset: SpatialDataset, path) -> None:
    path = Path(path)
    T = dataset.grid.size
    header = "site_id,x,y," + ",".join(f"t_{k}" for k in range(T))
    lines = [header]
    for sid, f in zip(dataset.site_ids, dataset.functions):
        row = [sid, _fmt(f.site[0]), _fmt(f.site[1])] + [_fmt(v) for v in f.values]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_dataset(path, grid_size: int | None = None, covariates_path=None) -> SpatialDataset:
    """Parse a dataset CSV, validate it, and resample onto a uniform grid.

    With ``grid_size=None`` the file's own sample count is kept; samples are
    assumed uniform on [0,1].
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[:3] != ["site_id", "x", "y"] or len(header) < 5:
        raise DatasetFormatError(f"{path}:1: bad header, expected site_id,x,y,t_0,...")
    T_file = len(header) - 3
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise DatasetFormatError(
                f"{path}:{lineno}: expected {len(header)} cells, got {len(cells)}"
            )
        try:
            nums = [float(c) for c in cells[1:]]
        except ValueError:
            raise DatasetFormatError(f"{path}:{lineno}: non-numeric cell") from None
        if not all(np.isfinite(nums)):
            raise DatasetFormatError(f"{path}:{lineno}: non-finite value")
        rows.append((cells[0], nums[0], nums[1], np.array(nums[2:])))
    sids = [r[0] for r in rows]
    if len(set(sids)) != len(sids):
        raise DatasetFormatError(f"{path}: duplicate site_id")
    src = np.linspace(0.0, 1.0, T_file)
    grid = Grid.uniform(grid_size or T_file)
    fns = tuple(
        SampledFunction(grid, np.interp(grid.points, src, vals), site=(x, y))
        for _, x, y, vals in rows
    )
    cov = None
    if covariates_path is not None:
        cov = load_covariates(covariates_path, sids)
    return SpatialDataset(grid, fns, tuple(sids), cov, meta={"source": str(path)})


def save_covariates(dataset: SpatialDataset, path) -> None:
    if dataset.covariates is None:
        raise InvalidInputError("dataset has no covariates")
    names = sorted(dataset.covariates)
    lines = ["site_id," + ",".join(names)]
    for i, sid in enumerate(dataset.site_ids):
        lines.append(",".join([sid] + [_fmt(dataset.covariates[n][i]) for n in names]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_covariates(path, site_ids) -> dict[str, tuple[float, ...]]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    if header[0] != "site_id" or len(header) < 2:
        raise DatasetFormatError(f"{path}:1: bad covariates header")
    names = header[1:]
    table: dict[str, list[float]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise DatasetFormatError(f"{path}:{lineno}: cell count mismatch")
        try:
            table[cells[0]] = [float(c) for c in cells[1:]]
        except ValueError:
            raise DatasetFormatError(f"{path}:{lineno}: non-numeric cell") from None
    missing = [s for s in site_ids if s not in table]
    if missing:
        raise DatasetFormatError(f"{path}: missing covariates for sites {missing}")
    return {name: tuple(table[s][k] for s in site_ids) for k, name in enumerate(names)}


def smooth_dataset(d: SpatialDataset, iota: float) -> SpatialDataset:
    """Penalized least-squares smoothing with a second-difference roughness penalty.

    Solves (I + iota * D'D) x = y per function, with D approximating the second
    derivative, so iota plays the role of a smoothing-spline tuning parameter.
    iota=0 returns the input unchanged.
    """
    if iota < 0:
        raise InvalidInputError("smoothing parameter must be nonnegative")
    if iota == 0:
        return d
    T = d.grid.size
    dt = d.grid.spacing
    D = np.zeros((T - 2, T))
    for i in range(T - 2):
        D[i, i : i + 3] = (1.0, -2.0, 1.0)
    D /= dt**2
    A = np.eye(T) + iota * dt * (D.T @ D)
    smoothed = np.linalg.solve(A, d.values_matrix.T).T
    return d.with_values(smoothed)


def detrend_spatial(d: SpatialDataset, covariate_names) -> SpatialDataset:
    """Per-grid-node OLS of values on (1, covariates); returns residual functions.

    An empty covariate list reduces to mean-centering.
    """
    names = list(covariate_names)
    cols = [np.ones(d.n)]
    for name in names:
        if d.covariates is None or name not in d.covariates:
            raise InvalidInputError(f"covariate {name!r} not present")
        cols.append(np.asarray(d.covariates[name], dtype=float))
    X = np.column_stack(cols)
    if d.n <= X.shape[1]:
        raise DegenerateCovariatesError("need more sites than covariates plus intercept")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateCovariatesError("covariate design matrix is rank deficient")
    Y = d.values_matrix
    beta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    return d.with_values(Y - X @ beta)
