"""Monte Carlo sweeps of the secondary-link SINR over the interference threshold or outage level.

Every cell of a sweep sees the same channel realizations: realization ``i``
is drawn from substream ``i`` of the run seed whichever scenario or axis
value is being evaluated.  Differences between cells therefore reflect the
design choice and not fresh channel noise, and any single cell can be
recomputed in isolation from the seed alone.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields

import numpy as np

from .channel import realize_network
from .errors import CogbeamError
from .extraction import solve_beamformer
from .problem import Scenario, build_qcqp, interference_power, objective_matrix
from .rng import SeededStream
from .sdp import SdpStatus

log = logging.getLogger(__name__)

__all__ = ["SweepRecord", "CellSamples", "sweep_axis_values", "run_sweep", "write_csv",
           "aggregate", "FULL_SCALE_REALIZATIONS", "DESK_SCALE_REALIZATIONS"]

DESK_SCALE_REALIZATIONS = 200
FULL_SCALE_REALIZATIONS = 50_000
_CHANNEL_STREAM, _ROUNDING_STREAM = 1, 2
_OUTAGE_RTOL = 1e-6


@dataclass
class SweepRecord:
    scenario: str
    epsilon_over_N0_db: float
    delta: float
    mean_sinr_db: float
    std_sinr_db: float
    upper_bound_db: float
    mean_outage: float
    n_realizations: int
    n_failures: int = 0


@dataclass
class CellSamples:
    """Raw per-realization outputs of one sweep cell (NaN marks a failed solve)."""
    sinr: np.ndarray
    upper: np.ndarray
    outage: np.ndarray


def _db(x: float) -> float:
    if not np.isfinite(x):
        return math.nan
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def aggregate(scenario: str, eps_db: float, delta: float, cell: CellSamples) -> SweepRecord:
    """Reduce one cell to a record.

    The mean is taken in linear scale and then converted; the spread is the
    delta-method standard deviation of that dB value, (10 / ln 10) * std / mean.
    """
    ok = np.isfinite(cell.sinr)
    n_fail = int(np.sum(~ok))
    s, u, o = cell.sinr[ok], cell.upper[ok], cell.outage[ok]
    if s.size == 0:
        return SweepRecord(scenario, eps_db, delta, math.nan, math.nan, math.nan, math.nan, 0, n_fail)
    mean = float(np.mean(s))
    std = float(np.std(s, ddof=1)) if s.size > 1 else 0.0
    std_db = 10.0 / math.log(10.0) * std / mean if mean > 0 else math.nan
    return SweepRecord(scenario, float(eps_db), float(delta), _db(mean), std_db,
                       _db(float(np.mean(u))), float(np.mean(o)), int(s.size), n_fail)


def sweep_axis_values(start: float, stop: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return np.array([start]) if steps == 1 else np.linspace(start, stop, steps)


def _one_realization(args):
    """All cells of one realization: arrays shaped (n_scenarios, n_values) and solver counts."""
    exp, axis, values, scenarios, seed, i = args
    cfg = exp.network
    shape = (len(scenarios), len(values))
    sinr, upper, outage = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    counts = {"optimal": 0, "kkt_failed": 0, "numerical_trouble": 0}
    try:
        real = realize_network(cfg, SeededStream(seed, _CHANNEL_STREAM).substream(i))
        A = objective_matrix(real)
    except (CogbeamError, np.linalg.LinAlgError) as exc:
        log.warning("realization %d could not be built: %s", i, exc)
        return i, sinr, upper, outage, counts
    for si, sc in enumerate(scenarios):
        for vi, v in enumerate(values):
            spec = (exp.with_interference(sc, epsilon_over_N0_db=v) if axis == "epsilon"
                    else exp.with_interference(sc, delta=v))
            try:
                prob = build_qcqp(real, spec, A=A)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    res = solve_beamformer(prob, stream=SeededStream(seed, _ROUNDING_STREAM).substream(i, si, vi),
                                           draws=exp.draws, tolerances=exp.sdp)
            except (CogbeamError, np.linalg.LinAlgError, ValueError) as exc:
                log.warning("cell (%s, %g) realization %d failed: %s", sc, v, i, exc)
                continue
            if res.sdp_status is SdpStatus.OPTIMAL:
                counts["optimal"] += 1
                counts["kkt_failed"] += int(res.kkt is not None and not res.kkt.passed)
            elif res.sdp_status is not None:
                counts["numerical_trouble"] += 1
            sinr[si, vi] = res.objective
            upper[si, vi] = res.upper_bound
            levels = [interference_power(real, res.t, k) / spec.epsilon[k] for k in range(real.K)]
            outage[si, vi] = float(np.mean(np.asarray(levels) > 1.0 + _OUTAGE_RTOL)) if levels else 0.0
    return i, sinr, upper, outage, counts


def run_sweep(exp, axis: str, start: float, stop: float, steps: int, n_realizations: int,
              scenarios=("S1", "S2", "S3"), seed: int | None = None, workers: int = 1,
              return_cells: bool = False, solver_counts: dict | None = None):
    """Sweep ``axis`` ("epsilon" in dB over N0, or "delta") for every scenario.

    Parameters
    ----------
    exp : :class:`~cogbeam.config.ExperimentConfig`; the fixed axis takes its value from here.
    workers : process count; results are identical for any value.
    solver_counts : if given, incremented with the number of Optimal SDP
        solves, how many of those failed the KKT check, and NumericalTrouble
        outcomes.

    Returns
    -------
    Rows sorted by (scenario, axis value); with ``return_cells`` also the raw
    per-realization samples keyed by (scenario, axis value).
    """
    if axis not in ("epsilon", "delta"):
        raise ValueError(f"axis must be 'epsilon' or 'delta', got {axis!r}")
    if n_realizations < 10:
        raise ValueError("n_realizations must be >= 10")
    values = sweep_axis_values(start, stop, steps)
    if axis == "delta" and np.any((values < 0) | (values >= 1)):
        raise ValueError("delta values must lie in [0, 1)")
    scenarios = [Scenario(s).value for s in scenarios]
    seed = exp.seed if seed is None else seed
    jobs = [(exp, axis, values, scenarios, seed, i) for i in range(n_realizations)]
    shape = (len(scenarios), len(values), n_realizations)
    S, U, O = np.empty(shape), np.empty(shape), np.empty(shape)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_one_realization, jobs, chunksize=max(1, n_realizations // (4 * workers))))
    else:
        outputs = map(_one_realization, jobs)
    for i, s, u, o, counts in outputs:
        S[..., i], U[..., i], O[..., i] = s, u, o
        if solver_counts is not None:
            for key, v in counts.items():
                solver_counts[key] = solver_counts.get(key, 0) + v

    rows, cells = [], {}
    eps_fixed = float(np.mean(exp.epsilon_over_N0_db)) if exp.network.K else math.nan
    delta_fixed = float(np.mean(exp.interference.delta)) if exp.network.K else math.nan
    for si, sc in enumerate(scenarios):
        for vi, v in enumerate(values):
            cell = CellSamples(S[si, vi], U[si, vi], O[si, vi])
            eps_db, delta = (float(v), delta_fixed) if axis == "epsilon" else (eps_fixed, float(v))
            rows.append(aggregate(sc, eps_db, delta, cell))
            cells[(sc, float(v))] = cell
    rows.sort(key=lambda r: (r.scenario, r.epsilon_over_N0_db if axis == "epsilon" else r.delta))
    return (rows, cells) if return_cells else rows


def write_csv(rows, path) -> None:
    """Header plus one line per record; floats written with full round-trip precision."""
    names = [f.name for f in fields(SweepRecord)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=",", lineterminator="\n")
        w.writerow(names)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in astuple(r)])
