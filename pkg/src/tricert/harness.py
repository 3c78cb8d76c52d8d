"""Synthetic triangulation experiments.

World points are drawn uniformly in the unit cube. Cameras use identity
intrinsics and look at the cube center ``(0.5, 0.5, 0.5)``:

* ``sphere``: centers uniform on the sphere of radius 2 about the origin;
* ``circle``: centers at uniform random angles on the radius-2 circle in the
  xy-plane;
* ``line``: centers on the x-axis at distances 3, 5, 7, 9 (continued
  11, 13, ... beyond four cameras).

Observations are exact projections plus i.i.d. Gaussian noise of standard
deviation ``sigma`` on each image coordinate.

Randomness: every trial draws from its own numpy ``PCG64`` generator seeded
from ``SeedSequence([seed, trial])``. The scene and the standard-normal noise
draws of a trial are therefore shared across the noise levels of a sweep;
only the noise scale changes.
"""
import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Sequence

import numpy as np

from . import geometry
from .certify import CertifyConfig, Status, triangulate
from .errors import InvalidInputError

log = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"
RADIUS = 2.0
LINE_DISTANCES = (3.0, 5.0, 7.0, 9.0)
TARGET = np.array([0.5, 0.5, 0.5])

RECORD_FIELDS = ["geometry", "n_cameras", "sigma", "trial", "seed", "status",
                 "objective", "dual_bound", "cert_min_eig", "recon_error", "runtime_ms"]
SUMMARY_FIELDS = ["geometry", "n_cameras", "sigma", "trials", "fraction_optimal",
                  "mean_objective", "mean_recon_error", "mean_runtime_ms"]


class Geometry(str, Enum):
    SPHERE = "sphere"
    CIRCLE = "circle"
    LINE = "line"


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: Geometry
    n_cameras: int
    sigma_grid: Sequence[float]
    trials_per_sigma: int
    seed: int = 0
    certify: CertifyConfig = field(default_factory=CertifyConfig)
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        grid = tuple(float(s) for s in self.sigma_grid)
        if not grid or any(s < 0 for s in grid) or list(grid) != sorted(grid):
            raise InvalidInputError("sigma_grid must be non-empty, nonnegative and ascending")
        if self.trials_per_sigma < 1 or self.n_cameras < 2:
            raise InvalidInputError("need trials >= 1 and at least two cameras")
        object.__setattr__(self, "sigma_grid", grid)


@dataclass(frozen=True)
class ExperimentRecord:
    geometry: str
    n_cameras: int
    sigma: float
    trial: int
    seed: int
    status: str
    objective: float
    dual_bound: float
    cert_min_eig: float
    recon_error: float
    runtime_ms: float


def look_at(center, target=TARGET) -> np.ndarray:
    """Camera ``[R | -R c]`` at ``center`` with optical axis toward ``target``."""
    center = np.asarray(center, dtype=float)
    forward = target - center
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, [0.0, 0.0, 1.0])
    if np.linalg.norm(right) < 1e-6:
        right = np.cross(forward, [1.0, 0.0, 0.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.array([right, down, forward])
    return np.hstack([R, -(R @ center)[:, None]])


def line_distances(n) -> List[float]:
    return [3.0 + 2.0 * i for i in range(n)]


def camera_centers(geometry_, n, rng) -> np.ndarray:
    geometry_ = Geometry(geometry_)
    if geometry_ is Geometry.SPHERE:
        v = rng.normal(size=(n, 3))
        return RADIUS * v / np.linalg.norm(v, axis=1, keepdims=True)
    if geometry_ is Geometry.CIRCLE:
        t = rng.uniform(0.0, 2.0 * np.pi, size=n)
        return RADIUS * np.column_stack([np.cos(t), np.sin(t), np.zeros(n)])
    return np.column_stack([line_distances(n), np.zeros(n), np.zeros(n)])


def generate_instance(geometry_, n_cameras, sigma, rng):
    """Draw ``(cameras, X_true, obs)`` for one trial."""
    if n_cameras < 2:
        raise InvalidInputError("need at least two cameras")
    cameras = [look_at(c) for c in camera_centers(geometry_, n_cameras, rng)]
    X = rng.uniform(0.0, 1.0, size=3)
    noise = rng.normal(size=2 * n_cameras)
    obs = geometry.project_all(cameras, X) + sigma * noise
    return cameras, X, obs


def trial_seed(seed, trial) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint64)[0])


def run_trial(cfg: ExperimentConfig, sigma, trial) -> ExperimentRecord:
    s = trial_seed(cfg.seed, trial)
    rng = np.random.Generator(np.random.PCG64(s))
    cameras, X_true, obs = generate_instance(cfg.geometry, cfg.n_cameras, sigma, rng)
    t0 = time.perf_counter()
    try:
        res = triangulate(cameras, obs, cfg.certify)
        status, objective, dual_bound, cert = (res.status.value, res.objective,
                                               res.dual_bound, res.certificate_min_eig)
        recon = float(np.linalg.norm(res.X - X_true))
    except Exception as exc:  # a single bad trial must not abort the batch
        log.warning("trial %d (sigma=%g) failed: %s", trial, sigma, exc)
        status, objective, dual_bound, cert, recon = (
            Status.SUBOPTIMAL.value + ":error", math.nan, math.nan, math.nan, math.nan)
    runtime = (time.perf_counter() - t0) * 1e3 if cfg.timing else math.nan
    return ExperimentRecord(cfg.geometry.value, cfg.n_cameras, float(sigma), trial, s,
                            status, objective, dual_bound, cert, recon, runtime)


def run_experiment(cfg: ExperimentConfig) -> List[ExperimentRecord]:
    """Run every (sigma, trial) cell; records are ordered by sigma then trial."""
    if cfg.geometry is Geometry.LINE and cfg.n_cameras > len(LINE_DISTANCES):
        log.warning("line geometry with %d cameras: distances continue past 9 (%s)",
                    cfg.n_cameras, line_distances(cfg.n_cameras))
    return [run_trial(cfg, sigma, t)
            for sigma in cfg.sigma_grid for t in range(cfg.trials_per_sigma)]


def _is_optimal(status):
    return status == Status.OPTIMAL.value


def summarize(records: Iterable[ExperimentRecord]) -> List[dict]:
    records = list(records)
    if not records:
        raise InvalidInputError("no records to summarize")
    cells = {}
    for r in records:
        cells.setdefault((r.geometry, r.n_cameras, r.sigma), []).append(r)
    rows = []
    for (geo, n, sigma), rs in cells.items():
        obj = np.array([r.objective for r in rs])
        rows.append({
            "geometry": geo, "n_cameras": n, "sigma": sigma, "trials": len(rs),
            "fraction_optimal": sum(_is_optimal(r.status) for r in rs) / len(rs),
            "mean_objective": float(np.mean(obj)),
            "median_objective": float(np.median(obj)),
            "mean_recon_error": float(np.mean([r.recon_error for r in rs])),
            "mean_runtime_ms": float(np.mean([r.runtime_ms for r in rs])),
        })
    return rows


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _to_csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([_fmt(row[f]) for f in fields])
    return buf.getvalue()


def records_csv(records) -> str:
    return _to_csv([r.__dict__ for r in records], RECORD_FIELDS)


def summary_csv(rows) -> str:
    return _to_csv(rows, SUMMARY_FIELDS)


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
