"""Rolling-forecast crowd simulation.

Pedestrians are seeded from experimental trajectories: each one enters at its
recorded entry step and position, follows its recorded velocities while its
history is shorter than the model lookback window, and is then advanced by
model predictions until it crosses a departure segment (an exit or an
entrance). All pedestrians advance synchronously: every decision within a
time step is computed from the same start-of-step snapshot, so the iteration
order over pedestrians cannot change the outcome.

A step that would carry a pedestrian through a wall is intercepted: the
pedestrian is placed a small standoff inside the wall at the crossing point,
its recent velocities are rewritten to a blend of wall tangent and inward
normal at its recent mean speed, and its stored feature frames are recomputed
from the historical snapshots so later predictions see the corrected history.

Positions integrate as p[t+1] = p[t] + dt * v[t+1]; the stored velocity is
re-derived from the committed displacement so that identity holds exactly in
floating point (boundary corrections excepted; those steps are logged).
"""

from __future__ import annotations

import math
import time
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureExtractor, heading
from .geometry import Segment, point_in_polygon
from .ingest import Trajectory
from .scenario import Scenario

__all__ = [
    "MissingSeedData",
    "ModelShapeMismatch",
    "NoInwardDirection",
    "SimConfig",
    "SimulatedTrajectory",
    "SimResult",
    "SimWorld",
    "run",
]


class MissingSeedData(ValueError):
    """A seed trajectory is too short to cover the lookback window."""


class ModelShapeMismatch(ValueError):
    """Model architecture disagrees with the scenario or simulation config."""


class NoInwardDirection(RuntimeError):
    """Boundary correction could not place the pedestrian back inside."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.5
    window: int = 8
    standoff: float = 0.05
    tangent_blend: float = 0.7
    inward_blend: float = 0.3
    step_cap_factor: float = 10.0
    drop_short_seeds: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.window < 1:
            raise ValueError("dt must be positive and window at least 1")
        if self.standoff <= 0:
            raise ValueError("standoff must be positive")
        if self.step_cap_factor < 1:
            raise ValueError("step_cap_factor must be at least 1")
        if min(self.tangent_blend, self.inward_blend) < 0 or (
            self.tangent_blend + self.inward_blend <= 0
        ):
            raise ValueError("blend weights must be nonnegative and not both zero")


@dataclass
class SimulatedTrajectory:
    """Finished or truncated simulated path of one pedestrian."""

    id: int
    enter_step: int
    positions: np.ndarray  # (n, 2)
    velocities: np.ndarray  # (n - 1, 2) arrival velocities
    exit_step: int | None
    corrected_steps: tuple
    exited: bool

    @property
    def travel_steps(self) -> int:
        return len(self.positions) - 1

    @property
    def last_step(self) -> int:
        return self.enter_step + self.travel_steps


@dataclass
class _PedState:
    ped_id: int
    enter_step: int
    seed: Trajectory
    positions: list = field(default_factory=list)
    velocities: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    corrected_steps: list = field(default_factory=list)

    @property
    def steps_since_entry(self) -> int:
        return len(self.positions) - 1


def _crossing_param(p0: np.ndarray, p1: np.ndarray, seg: Segment):
    """Motion parameter in (0, 1] where p0->p1 crosses seg, else None.

    Counts a strict side change and also a step that lands exactly on the
    segment's line (t = 1), so a pedestrian can never come to rest on a wall
    or departure line and slip over it undetected next step. Starting on the
    line (side0 = 0) is not a crossing: that covers both entry positions on
    the entrance segment and motion sliding along a boundary. Side values
    within 1e-9 m of the line count as on it, so smoothing noise on seed
    points that sit on a boundary (e.g. filter edge effects pushing an
    entry position a few 1e-17 m outside) cannot fake a departure.
    """
    e = seg.b - seg.a
    side0 = e[0] * (p0[1] - seg.a[1]) - e[1] * (p0[0] - seg.a[0])
    side1 = e[0] * (p1[1] - seg.a[1]) - e[1] * (p1[0] - seg.a[0])
    tol = 1e-9 * math.hypot(e[0], e[1])
    if abs(side0) <= tol:
        side0 = 0.0
    if abs(side1) <= tol:
        side1 = 0.0
    if side0 == 0.0:
        return None
    if side1 != 0.0 and (side0 > 0) == (side1 > 0):
        return None
    d = p1 - p0
    denom = d[0] * e[1] - d[1] * e[0]
    if denom == 0.0:
        return None
    rel = seg.a - p0
    t = (rel[0] * e[1] - rel[1] * e[0]) / denom
    u = (rel[0] * d[1] - rel[1] * d[0]) / denom
    if not (-1e-9 <= u <= 1.0 + 1e-9):
        return None
    return float(t)


def _first_crossing(p0: np.ndarray, p1: np.ndarray, segments):
    """(motion param, segment index) of the nearest proper crossing, else None."""
    best = None
    for i, seg in enumerate(segments):
        t = _crossing_param(p0, p1, seg)
        if t is not None and (best is None or t < best[0]):
            best = (t, i)
    return best


class SimWorld:
    """Mutable simulation state advanced one synchronous step at a time."""

    def __init__(self, scenario: Scenario, model, seeds, config: SimConfig = SimConfig()):
        if model.arch.feature_dim != scenario.feature_dim:
            raise ModelShapeMismatch(
                f"model expects {model.arch.feature_dim} features, "
                f"scenario produces {scenario.feature_dim}"
            )
        if model.arch.window != config.window:
            raise ModelShapeMismatch(
                f"model lookback window is {model.arch.window}, config says {config.window}"
            )
        if abs(scenario.dt - config.dt) > 0:
            raise ModelShapeMismatch(
                f"scenario step is {scenario.dt} s, config says {config.dt} s"
            )
        self.scenario = scenario
        self.model = model
        self.config = config
        self.extractor: FeatureExtractor = scenario.extractor()
        self.pending: list[_PedState] = sorted(
            (
                _PedState(ped_id=tr.id, enter_step=tr.enter_step, seed=tr)
                for tr in seeds
            ),
            key=lambda st: (st.enter_step, st.ped_id),
        )
        ids = [st.ped_id for st in self.pending]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate pedestrian ids in seed data")
        self.active: dict[int, _PedState] = {}
        self.exited: dict[int, SimulatedTrajectory] = {}
        self.clock: int = self.pending[0].enter_step if self.pending else 0
        self.total_corrections: int = 0
        # historical snapshots, world step -> {id: (position, velocity)}
        self._snapshots: dict[int, dict] = {}

    @property
    def population(self) -> int:
        return len(self.pending) + len(self.active) + len(self.exited)

    def _frame_at(self, st: _PedState, local: int, snap: dict) -> np.ndarray:
        pos = st.positions[local]
        vel = st.velocities[local - 1]
        head = heading(st.velocities[:local], self.scenario.default_heading)
        others_pos = []
        others_vel = []
        for pid, (p, v) in snap.items():
            if pid != st.ped_id:
                others_pos.append(p)
                others_vel.append(v)
        return self.extractor.frame(
            pos,
            vel,
            head,
            np.array(others_pos, dtype=float).reshape(-1, 2),
            np.array(others_vel, dtype=float).reshape(-1, 2),
        )

    def _correct(self, st: _PedState, p_cur, v_hat, tentative, wall: Segment, t: int):
        """Place the pedestrian standoff-inside the crossed wall and rewrite
        its recent velocities and feature frames. Returns snapshot updates."""
        cfg = self.config
        e = wall.b - wall.a
        # inward normal: the pedestrian came from the walkable side, so point
        # the wall's perpendicular back toward the pre-step position
        side = e[0] * (p_cur[1] - wall.a[1]) - e[1] * (p_cur[0] - wall.a[0])
        inward = np.array([-e[1], e[0]]) / np.hypot(e[0], e[1])
        if side < 0:
            inward = -inward
        t_hit = _crossing_param(p_cur, tentative, wall)
        hit_point = p_cur + t_hit * (tentative - p_cur)
        corrected = hit_point + cfg.standoff * inward
        if not point_in_polygon(corrected, self.scenario.walkable_polygon, include_boundary=False):
            raise NoInwardDirection(
                f"pedestrian {st.ped_id} at step {t + 1}: corrected position "
                f"({corrected[0]:.3f}, {corrected[1]:.3f}) is not strictly inside "
                "the walkable region"
            )
        speed = float(np.hypot(v_hat[0], v_hat[1]))
        if speed > 1e-12:
            prior_dir = v_hat / speed
        else:
            prior_dir = heading(st.velocities, self.scenario.default_heading)
        tangent = e / np.hypot(e[0], e[1])
        if float(tangent @ prior_dir) < 0:
            tangent = -tangent
        direction = cfg.tangent_blend * tangent + cfg.inward_blend * inward
        direction = direction / np.hypot(direction[0], direction[1])

        st.velocities.append((tentative - p_cur) / cfg.dt)
        k = min(cfg.window, len(st.velocities))
        mean_speed = float(
            np.mean([np.hypot(v[0], v[1]) for v in st.velocities[-k:]], dtype=np.float64)
        )
        replacement = direction * mean_speed
        for i in range(len(st.velocities) - k, len(st.velocities)):
            st.velocities[i] = replacement.copy()
        st.positions.append(corrected)
        st.corrected_steps.append(t + 1)
        self.total_corrections += 1
        # recompute this pedestrian's stored frames over the rewritten span
        s_new = st.steps_since_entry  # after append
        updates = []
        for local in range(max(1, s_new - k + 1), s_new):
            world_step = st.enter_step + local
            snap = self._snapshots[world_step]
            st.frames[local - 1] = self._frame_at(st, local, snap)
            updates.append((world_step, st.ped_id, replacement))
        return updates

    def step(self) -> None:
        """Advance the world from its clock t to t + 1."""
        t = self.clock
        cfg = self.config
        while self.pending and self.pending[0].enter_step == t:
            st = self.pending.pop(0)
            st.positions.append(np.asarray(st.seed.positions[0], dtype=float).copy())
            self.active[st.ped_id] = st

        zero = np.zeros(2)
        snap = {
            pid: (
                np.asarray(st.positions[-1], dtype=float),
                np.asarray(st.velocities[-1], dtype=float) if st.velocities else zero,
            )
            for pid, st in sorted(self.active.items())
        }
        self._snapshots[t] = snap
        for old in [s for s in self._snapshots if s < t - cfg.window + 1]:
            del self._snapshots[old]

        order = sorted(self.active)
        for pid in order:
            st = self.active[pid]
            if st.steps_since_entry >= 1:
                st.frames.append(self._frame_at(st, st.steps_since_entry, snap))

        decisions: dict[int, np.ndarray] = {}
        for pid in order:
            st = self.active[pid]
            s = st.steps_since_entry
            if s >= cfg.window:
                window = np.stack(st.frames[s - cfg.window : s])
                decisions[pid] = np.asarray(self.model.predict(window), dtype=float)
            else:
                decisions[pid] = np.asarray(st.seed.velocities[s], dtype=float)

        exits: list[int] = []
        snapshot_updates: list[tuple] = []
        for pid in order:
            st = self.active[pid]
            p_cur = st.positions[-1]
            tentative = p_cur + cfg.dt * decisions[pid]
            dep = _first_crossing(p_cur, tentative, self.scenario.departure_segments)
            hit = _first_crossing(p_cur, tentative, self.scenario.walls)
            if dep is not None and (hit is None or dep[0] <= hit[0]):
                st.positions.append(tentative)
                st.velocities.append((tentative - p_cur) / cfg.dt)
                exits.append(pid)
            elif hit is not None:
                snapshot_updates += self._correct(
                    st, p_cur, decisions[pid], tentative, self.scenario.walls[hit[1]], t
                )
            else:
                if not point_in_polygon(
                    tentative, self.scenario.walkable_polygon, include_boundary=True
                ):
                    raise NoInwardDirection(
                        f"pedestrian {pid} left the walkable region at step {t + 1} "
                        f"at ({tentative[0]:.3f}, {tentative[1]:.3f}) without crossing "
                        "a wall or departure segment"
                    )
                st.positions.append(tentative)
                st.velocities.append((tentative - p_cur) / cfg.dt)

        # corrections commit after all decisions, so within a step nobody
        # observes another pedestrian's corrected history
        for world_step, pid, velocity in snapshot_updates:
            pos, _ = self._snapshots[world_step][pid]
            self._snapshots[world_step][pid] = (pos, velocity)

        for pid in exits:
            st = self.active.pop(pid)
            self.exited[pid] = SimulatedTrajectory(
                id=pid,
                enter_step=st.enter_step,
                positions=np.array(st.positions),
                velocities=np.array(st.velocities).reshape(-1, 2),
                exit_step=t + 1,
                corrected_steps=tuple(st.corrected_steps),
                exited=True,
            )
        self.clock = t + 1

    def unfinished(self) -> list[SimulatedTrajectory]:
        """Active pedestrians as truncated trajectories (cap diagnostics)."""
        out = []
        for pid, st in sorted(self.active.items()):
            out.append(
                SimulatedTrajectory(
                    id=pid,
                    enter_step=st.enter_step,
                    positions=np.array(st.positions),
                    velocities=np.array(st.velocities).reshape(-1, 2),
                    exit_step=None,
                    corrected_steps=tuple(st.corrected_steps),
                    exited=False,
                )
            )
        return out


@dataclass
class SimResult:
    trajectories: list
    report: dict

    @property
    def step_cap_exceeded(self) -> bool:
        return self.report["step_cap_exceeded"]


def run(scenario: Scenario, seeds, model, config: SimConfig = SimConfig()) -> SimResult:
    """Simulate until everyone has departed or the step cap trips.

    The cap defaults to step_cap_factor times the experimental duration; when
    it trips, the partial trajectories are still returned and the report says
    so (step_cap_exceeded) rather than raising.
    """
    t_start = time.monotonic()
    seeds = list(seeds.values()) if isinstance(seeds, Mapping) else list(seeds)
    short = [tr.id for tr in seeds if len(tr.positions) < config.window + 1]
    if short and not config.drop_short_seeds:
        raise MissingSeedData(
            f"seed trajectories must cover window + 1 = {config.window + 1} "
            f"positions; too short: {short}"
        )
    usable = [tr for tr in seeds if len(tr.positions) >= config.window + 1]

    report: dict = {
        "scenario": scenario.name,
        "dropped_short_seeds": sorted(short),
        "pedestrians": {},
        "total_corrections": 0,
        "steps_run": 0,
        "step_cap": 0,
        "step_cap_exceeded": False,
        "not_activated": [],
        "wall_time_s": 0.0,
    }
    if not usable:
        report["wall_time_s"] = time.monotonic() - t_start
        return SimResult(trajectories=[], report=report)

    world = SimWorld(scenario, model, usable, config)
    start = world.clock
    duration = max(tr.last_step for tr in usable) - start + 1
    cap = max(1, math.ceil(config.step_cap_factor * duration))
    report["step_cap"] = cap

    steps = 0
    while (world.pending or world.active) and steps < cap:
        world.step()
        steps += 1
    report["steps_run"] = steps
    report["step_cap_exceeded"] = bool(world.pending or world.active)
    report["not_activated"] = sorted(st.ped_id for st in world.pending)

    trajectories = sorted(
        list(world.exited.values()) + world.unfinished(), key=lambda tr: tr.id
    )
    for tr in trajectories:
        report["pedestrians"][str(tr.id)] = {
            "enter_step": int(tr.enter_step),
            "exit_step": None if tr.exit_step is None else int(tr.exit_step),
            "exited": bool(tr.exited),
            "travel_steps": int(tr.travel_steps),
            "corrections": len(tr.corrected_steps),
            "corrected_steps": [int(s) for s in tr.corrected_steps],
        }
    report["total_corrections"] = int(world.total_corrections)
    report["wall_time_s"] = time.monotonic() - t_start
    return SimResult(trajectories=trajectories, report=report)
