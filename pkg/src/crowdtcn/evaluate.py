"""Realism metrics comparing simulated trajectories against experiments.

Trajectory-level metrics (all reported in seconds or meters, with step
arithmetic converted via dt):

- egress-time error: absolute difference of the two sets' total egress
  durations, plus its fraction of the experimental egress time;
- travel-time error per pedestrian, plus the fraction of that pedestrian's
  experimental travel time;
- travel-displacement error: for each experimental point, the distance to the
  nearest simulated point of the same pedestrian, averaged over the
  experimental trajectory;
- final-displacement error: distance between the two final positions.

Crowd-level measures use area-weighted Voronoi statistics: every pedestrian's
cell is bounded by the walkable region, intersected with the measurement
area M, and contributes its area fraction to density and its speed (weighted
by intersection area) to velocity. Flow is defined as density * velocity *
measurement width, so that identity holds at every sample by construction.

Pedestrians participate in a time step's measurement only from one step after
entry, when their arrival velocity is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import bounded_voronoi, point_in_polygon, polygon_area, polygon_clip

__all__ = [
    "EmptySet",
    "UnmatchedId",
    "TrajectoryPair",
    "MetricTable",
    "MeasurementSeries",
    "ete_pete",
    "tte_ptte",
    "tde",
    "fde",
    "nearest_rank_percentile",
    "voronoi_measures",
    "profiles",
    "fundamental_diagram",
]


class EmptySet(ValueError):
    pass


class UnmatchedId(KeyError):
    pass


def _as_map(trajectories) -> dict:
    if isinstance(trajectories, dict):
        return dict(trajectories)
    return {tr.id: tr for tr in trajectories}


@dataclass(frozen=True)
class TrajectoryPair:
    """Experimental and simulated trajectory sets matched by pedestrian id.

    Accepts dicts keyed by id or iterables of objects with id, enter_step,
    and positions. Every simulated id must exist in the experiment set (the
    reverse need not hold: pedestrians can be dropped from a simulation).
    """

    experiment: dict
    simulation: dict

    def __init__(self, experiment, simulation):
        object.__setattr__(self, "experiment", _as_map(experiment))
        object.__setattr__(self, "simulation", _as_map(simulation))
        missing = sorted(set(self.simulation) - set(self.experiment))
        if missing:
            raise UnmatchedId(f"simulated ids missing from experiment: {missing}")

    @property
    def matched_ids(self) -> list:
        return sorted(self.simulation)


def _travel_steps(tr) -> int:
    return len(tr.positions) - 1


def _last_step(tr) -> int:
    return tr.enter_step + _travel_steps(tr)


def nearest_rank_percentile(values, q: float) -> float:
    """Empirical percentile by the nearest-rank rule (q in (0, 100])."""
    data = sorted(float(v) for v in values)
    if not data:
        raise EmptySet("percentile of an empty sample")
    # multiply before dividing: q * n is exact for any realistic n, whereas
    # q / 100 rounds and can push ceil over an integer boundary
    rank = max(1, math.ceil(q * len(data) / 100.0))
    return data[min(rank, len(data)) - 1]


@dataclass(frozen=True)
class MetricTable:
    """Per-pedestrian metric values with distribution summaries."""

    values: dict
    mean: float
    p95: float

    @classmethod
    def from_values(cls, values: dict) -> "MetricTable":
        if not values:
            raise EmptySet("no pedestrians to summarize")
        data = list(values.values())
        return cls(
            values=values,
            mean=float(np.mean(np.asarray(data, dtype=np.float64))),
            p95=nearest_rank_percentile(data, 95.0),
        )


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return numerator / denominator


def ete_pete(pair: TrajectoryPair, dt: float = 0.5) -> tuple[float, float]:
    """Egress-time error in seconds and as a fraction of the experimental one.

    A set's egress duration runs from the first pedestrian's entry step to
    the last pedestrian's final step.
    """
    if not pair.experiment or not pair.simulation:
        raise EmptySet("egress-time error needs both trajectory sets nonempty")

    def egress_steps(trs) -> int:
        return max(_last_step(t) for t in trs.values()) - min(
            t.enter_step for t in trs.values()
        )

    expt = egress_steps(pair.experiment)
    sim = egress_steps(pair.simulation)
    ete = abs(sim - expt) * dt
    return ete, _ratio(ete, expt * dt)


def tte_ptte(pair: TrajectoryPair, dt: float = 0.5) -> tuple[MetricTable, MetricTable]:
    """Per-pedestrian travel-time error (seconds) and its fractional form."""
    tte_values: dict = {}
    ptte_values: dict = {}
    for ped in pair.matched_ids:
        expt_steps = _travel_steps(pair.experiment[ped])
        sim_steps = _travel_steps(pair.simulation[ped])
        err = abs(sim_steps - expt_steps) * dt
        tte_values[ped] = err
        ptte_values[ped] = _ratio(err, expt_steps * dt)
    return MetricTable.from_values(tte_values), MetricTable.from_values(ptte_values)


def tde(pair: TrajectoryPair) -> MetricTable:
    """Mean distance from each experimental point to the nearest simulated one."""
    values: dict = {}
    for ped in pair.matched_ids:
        expt = np.asarray(pair.experiment[ped].positions, dtype=np.float64)
        sim = np.asarray(pair.simulation[ped].positions, dtype=np.float64)
        if len(expt) == 0 or len(sim) == 0:
            raise EmptySet(f"pedestrian {ped} has an empty trajectory")
        diff = expt[:, None, :] - sim[None, :, :]
        dists = np.sqrt((diff * diff).sum(axis=2))
        values[ped] = float(dists.min(axis=1).mean())
    return MetricTable.from_values(values)


def fde(pair: TrajectoryPair) -> MetricTable:
    """Distance between the final experimental and simulated positions."""
    values: dict = {}
    for ped in pair.matched_ids:
        pe = np.asarray(pair.experiment[ped].positions[-1], dtype=np.float64)
        ps = np.asarray(pair.simulation[ped].positions[-1], dtype=np.float64)
        values[ped] = float(np.hypot(*(pe - ps)))
    return MetricTable.from_values(values)


def voronoi_measures(
    positions,
    speeds,
    walkable,
    measurement_area,
    width: float,
    simple_density: bool = False,
):
    """Crowd density, velocity, and flow for one time step, or None when no
    pedestrian's cell touches the measurement area.

    Density integrates each pedestrian's cell-area reciprocal over its
    intersection with M: rho = sum_i area(cell_i in M)/area(cell_i) / area(M).
    Velocity weights each speed by the same intersection area. With
    simple_density=True the count-based variant is used instead: pedestrians
    inside M divided by its area, with their plain mean speed.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    speeds = np.asarray(speeds, dtype=float).reshape(-1)
    if len(positions) != len(speeds):
        raise ValueError("need one speed per position")
    if len(positions) == 0:
        return None
    area_m = polygon_area(measurement_area)

    if simple_density:
        inside = np.array(
            [point_in_polygon(p, measurement_area) for p in positions], dtype=bool
        )
        if not inside.any():
            return None
        rho = float(inside.sum()) / area_m
        vel = float(np.mean(speeds[inside], dtype=np.float64))
        return rho, vel, rho * vel * width

    cells = bounded_voronoi(positions, walkable)
    ratio_sum = 0.0
    weight_sum = 0.0
    speed_sum = 0.0
    for cell in cells:
        inter = polygon_clip(cell.polygon, measurement_area)
        a = polygon_area(inter)
        if a <= 0.0:
            continue
        ratio_sum += a / cell.area
        weight_sum += a
        speed_sum += speeds[cell.site_index] * a
    if weight_sum <= 0.0:
        return None
    rho = ratio_sum / area_m
    vel = speed_sum / weight_sum
    return rho, vel, rho * vel * width


@dataclass(frozen=True)
class MeasurementSeries:
    """Per-step crowd measures inside one measurement area."""

    label: str
    width: float
    steps: np.ndarray
    density: np.ndarray
    velocity: np.ndarray
    flow: np.ndarray

    def __len__(self) -> int:
        return len(self.steps)


def profiles(
    trajectories,
    walkable,
    measurement_area,
    width: float,
    label: str = "",
    simple_density: bool = False,
) -> MeasurementSeries:
    """Evaluate voronoi_measures at every step spanned by the trajectories.

    Steps where no pedestrian (with a defined arrival velocity) intersects the
    measurement area are absent from the series rather than zero-filled.
    """
    trs = list(_as_map(trajectories).values())
    steps: list[int] = []
    rho: list[float] = []
    vel: list[float] = []
    flow: list[float] = []
    if trs:
        lo = min(tr.enter_step for tr in trs)
        hi = max(_last_step(tr) for tr in trs)
        for t in range(lo, hi + 1):
            positions = []
            speeds = []
            for tr in trs:
                local = t - tr.enter_step
                # entry-step pedestrians have no arrival velocity yet
                if local < 1 or local > _travel_steps(tr):
                    continue
                positions.append(tr.positions[local])
                v = tr.velocities[local - 1]
                speeds.append(float(np.hypot(v[0], v[1])))
            sample = voronoi_measures(
                np.asarray(positions, dtype=float).reshape(-1, 2),
                speeds,
                walkable,
                measurement_area,
                width,
                simple_density=simple_density,
            )
            if sample is None:
                continue
            steps.append(t)
            rho.append(sample[0])
            vel.append(sample[1])
            flow.append(sample[2])
    return MeasurementSeries(
        label=label,
        width=width,
        steps=np.asarray(steps, dtype=int),
        density=np.asarray(rho, dtype=float),
        velocity=np.asarray(vel, dtype=float),
        flow=np.asarray(flow, dtype=float),
    )


def fundamental_diagram(series_list) -> list[tuple]:
    """Flatten measurement series into (label, step, density, velocity,
    specific_flow) rows; specific flow is flow per unit width."""
    rows: list[tuple] = []
    for series in series_list:
        for i in range(len(series)):
            rows.append(
                (
                    series.label,
                    int(series.steps[i]),
                    float(series.density[i]),
                    float(series.velocity[i]),
                    float(series.flow[i]) / series.width,
                )
            )
    return rows
