"""Parameter sweeps and CSV emission."""

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from app.config import Config, SweepConfig
from app.dissipator import BathParams
from app.errors import SimulationError
from app.hamiltonian import SystemParams
from app.phenomenological import PhenomParams, phenom_evolve
from app.propagator import (
    IntegratorOptions,
    TrajectoryRecord,
    coherence_table,
    evolve,
    population_table,
)

logger = logging.getLogger(__name__)

SWEEP_HEADER = ["axis", "P1", "P2", "P3", "trace_error", "min_eig", "wall_time_s"]
TRAJECTORY_HEADER = ["t", "P1", "P2", "P3", "re_rho12", "im_rho12"]

# Populations outside this band are more than a monitored positivity defect
POPULATION_TOLERANCE = 1e-3


@dataclass(frozen=True)
class SweepResultRow:
    axis: float
    p1: float
    p2: float
    p3: float
    trace_error: float
    min_eig: float
    wall_time: float
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def out_of_range(self) -> bool:
        """True when a population leaves [0, 1]."""
        return any(not 0.0 <= p <= 1.0 for p in (self.p1, self.p2, self.p3))

    @property
    def out_of_tolerance(self) -> bool:
        low, high = -POPULATION_TOLERANCE, 1.0 + POPULATION_TOLERANCE
        return any(not low <= p <= high for p in (self.p1, self.p2, self.p3))


def integrator_options(cfg: SweepConfig) -> IntegratorOptions:
    return IntegratorOptions(
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        max_step=cfg.max_step,
        method=cfg.method,
        samples=cfg.samples,
    )


def point_config(cfg: SweepConfig, value: float) -> SweepConfig:
    """Configuration with the swept parameter set to ``value``."""
    return replace(cfg, **{cfg.sweep: float(value)})


def system_params(cfg: SweepConfig) -> SystemParams:
    return SystemParams(omega=cfg.omega, kappa=cfg.kappa, omega3=cfg.omega3, tau=cfg.tau)


def bath_params(cfg: SweepConfig) -> BathParams:
    if cfg.model == "closed":
        return BathParams(gamma=0.0, theta=0.0)
    return BathParams(gamma=cfg.gamma, theta=cfg.theta)


def simulate(cfg: SweepConfig) -> TrajectoryRecord:
    """Run the configured model once over [-tau, tau] with fixed parameters."""
    opts = integrator_options(cfg)
    if cfg.model == "phenomenological":
        return _phenomenological_record(cfg, opts)
    return evolve(system_params(cfg), bath_params(cfg), opts=opts, secular=cfg.secular)


def _phenomenological_record(cfg: SweepConfig, opts: IntegratorOptions) -> TrajectoryRecord:
    """Embed the lossy amplitudes as rho = c c^+ plus the lost norm on |3><3|."""
    trajectory = phenom_evolve(
        PhenomParams(omega=cfg.omega, kappa=cfg.kappa, tau=cfg.tau, gamma_ph=cfg.gamma), opts
    )
    c = trajectory.amplitudes
    lost = 1.0 - trajectory.norm
    states = np.zeros((len(c), 3, 3), dtype=np.complex128)
    states[:, :2, :2] = c[:, :, None] * c[:, None, :].conj()
    states[:, 2, 2] = lost
    return TrajectoryRecord(
        times=trajectory.times,
        populations=population_table(states),
        coherences=coherence_table(states),
        trace_error=0.0,
        herm_error=0.0,
        # eigenvalues of the embedding are |c|^2, 0 and the lost norm
        min_eig=min(0.0, float(np.min(lost))),
        min_eig_time=float(trajectory.times[int(np.argmin(lost))]),
        wall_time=trajectory.wall_time,
        states=states,
    )


def run_point(cfg: SweepConfig, value: float) -> SweepResultRow:
    """
    Evaluate one axis value. Failures are recorded in the row.

    Module-level so that it can be shipped to worker processes.
    """
    started = time.perf_counter()
    try:
        record = simulate(point_config(cfg, value))
    except (SimulationError, ValueError) as e:
        logger.error(f"{cfg.sweep}={value:.6g} failed: {e}")
        nan = float("nan")
        return SweepResultRow(
            float(value), nan, nan, nan, nan, nan, time.perf_counter() - started, error=str(e)
        )

    p1, p2, p3 = record.final_populations
    row = SweepResultRow(
        axis=float(value),
        p1=p1,
        p2=p2,
        p3=p3,
        trace_error=record.trace_error,
        min_eig=record.min_eig,
        wall_time=time.perf_counter() - started,
    )
    if row.out_of_range:
        logger.warning(f"{cfg.sweep}={value:.6g}: populations leave [0, 1]: {p1}, {p2}, {p3}")
    return row


class SweepService:
    """Runs a configured sweep, sequentially or across worker processes."""

    def __init__(self, config: SweepConfig):
        config.validate()
        self.config = config

    def run(self) -> List[SweepResultRow]:
        """
        Evaluate every axis value.

        Returns:
            One row per axis value, sorted by axis value
        """
        cfg = self.config
        values = [float(v) for v in cfg.axis_values()]
        logger.info(
            f"Sweeping {cfg.sweep} over {len(values)} points "
            f"[{cfg.sweep_min:g}, {cfg.sweep_max:g}] ({cfg.model}, jobs={cfg.jobs})"
        )
        worker = partial(run_point, cfg)
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                rows = list(pool.map(worker, values))
        else:
            rows = [worker(v) for v in values]

        rows.sort(key=lambda row: row.axis)
        failures = sum(row.failed for row in rows)
        if failures:
            logger.warning(f"{failures} of {len(rows)} sweep points failed")
        return rows


def run_sweep(cfg: SweepConfig) -> List[SweepResultRow]:
    return SweepService(cfg).run()


def _format(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.15g}"


def metadata_lines(metadata: Mapping[str, Any]) -> List[str]:
    """``#``-prefixed metadata block: artifact version first, then sorted keys."""
    lines = [f"# version: {Config.ARTIFACT_VERSION}"]
    for key in sorted(metadata):
        lines.append(f"# {key}: {json.dumps(metadata[key], sort_keys=True)}")
    return lines


def _write(path: str, metadata: Mapping[str, Any], header: Sequence[str], data: List[List[str]]):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            for line in metadata_lines(metadata):
                handle.write(line + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(data)
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise
    logger.info(f"Wrote {len(data)} rows to {path}")


def emit_csv(rows: Sequence[SweepResultRow], metadata: Mapping[str, Any], path: str) -> str:
    """
    Write sweep rows as CSV plot data.

    Args:
        rows: non-empty list of results
        metadata: configuration echo written as ``#`` lines
        path: output file

    Returns:
        The path written

    Raises:
        ValueError: if ``rows`` is empty
        OSError: if the path cannot be written
    """
    if not rows:
        raise ValueError("emit_csv needs at least one row")
    meta: Dict[str, Any] = dict(metadata)
    failed = [row.axis for row in rows if row.failed]
    if failed:
        meta["failed_rows"] = failed
    data = [
        [
            _format(row.axis),
            _format(row.p1),
            _format(row.p2),
            _format(row.p3),
            _format(row.trace_error),
            _format(row.min_eig),
            _format(row.wall_time),
        ]
        for row in rows
    ]
    _write(path, meta, SWEEP_HEADER, data)
    return path


def emit_trajectory_csv(record: TrajectoryRecord, metadata: Mapping[str, Any], path: str) -> str:
    """Write a single trajectory with the same metadata convention."""
    rho12 = record.coherences[:, 0]
    data = [
        [
            _format(float(t)),
            _format(float(p[0])),
            _format(float(p[1])),
            _format(float(p[2])),
            _format(float(c.real)),
            _format(float(c.imag)),
        ]
        for t, p, c in zip(record.times, record.populations, rho12)
    ]
    _write(path, metadata, TRAJECTORY_HEADER, data)
    return path
