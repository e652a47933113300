"""Trajectory ingestion: parsing, smoothing, resampling, and dataset assembly.

Raw recordings are text files with one observation per row (pedestrian id,
frame number, x, y, optional extra columns). They are resampled to the model
time step dt by taking every stride-th frame starting from each pedestrian's
first observed frame, after optional Savitzky-Golay smoothing of the raw
positions. Velocities are backward differences:

    v[t] = (p[t] - p[t-1]) / dt

so a trajectory with n positions carries n - 1 velocities, and velocity index
k is the velocity of arrival at position index k + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import savgol_filter

from .features import heading as _heading
from .geometry import point_in_polygon

__all__ = [
    "ParseError",
    "NonMonotonicFrames",
    "TooShort",
    "BadWindow",
    "TooFewSamples",
    "ColumnSpec",
    "RawTrack",
    "Trajectory",
    "WindowSample",
    "DatasetSplit",
    "parse_trajectories",
    "smooth",
    "resample",
    "load_trajectories",
    "load_step_trajectories",
    "write_trajectory_file",
    "snapshot",
    "build_samples",
    "split",
]


class ParseError(ValueError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class NonMonotonicFrames(ValueError):
    pass


class TooShort(ValueError):
    pass


class BadWindow(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


@dataclass(frozen=True)
class ColumnSpec:
    """Maps file columns (0-based) to fields; extra columns are ignored."""

    id: int = 0
    frame: int = 1
    x: int = 2
    y: int = 3
    delimiter: str | None = None  # None: whitespace, or comma when present

    @property
    def max_column(self) -> int:
        return max(self.id, self.frame, self.x, self.y)


@dataclass
class RawTrack:
    """One pedestrian's raw observations, frame-sorted."""

    id: int
    frames: np.ndarray  # (n,) int
    positions: np.ndarray  # (n, 2) float


@dataclass
class Trajectory:
    """Resampled track at fixed step dt.

    enter_step is the global time-step index of the first position; velocities
    satisfy positions[k] + dt * velocities[k] = positions[k + 1].
    """

    id: int
    enter_step: int
    positions: np.ndarray  # (n, 2)
    velocities: np.ndarray  # (n - 1, 2)
    dt: float = 0.5

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float).reshape(-1, 2)
        if len(self.velocities) != len(self.positions) - 1:
            raise ValueError("need exactly one velocity per position transition")
        recon = self.positions[:-1] + self.dt * self.velocities
        if len(recon) and np.abs(recon - self.positions[1:]).max() > 1e-9:
            raise ValueError("velocities do not reconstruct positions within 1e-9")

    @property
    def n_steps(self) -> int:
        """Number of transitions (= velocity count)."""
        return len(self.velocities)

    @property
    def last_step(self) -> int:
        return self.enter_step + self.n_steps

    def position_at(self, step: int) -> np.ndarray:
        return self.positions[step - self.enter_step]

    def velocity_at(self, step: int) -> np.ndarray:
        """Arrival velocity at a global step; zero at the entry step."""
        local = step - self.enter_step
        if local == 0:
            return np.zeros(2)
        return self.velocities[local - 1]

    def covers(self, step: int) -> bool:
        return self.enter_step <= step <= self.last_step


@dataclass
class WindowSample:
    """One training sample: w feature rows and the next-step velocity."""

    input: np.ndarray  # (w, F)
    target: np.ndarray  # (2,)
    ped_id: int = -1
    step: int = -1  # global step of the last input row


@dataclass
class DatasetSplit:
    training: list[WindowSample]
    validation: list[WindowSample]
    seed: int


def _split_line(line: str, delimiter: str | None) -> list[str]:
    if delimiter is not None:
        return [f.strip() for f in line.split(delimiter)]
    if "," in line:
        return [f.strip() for f in line.split(",")]
    return line.split()


def parse_trajectories(path_or_lines, spec: ColumnSpec = ColumnSpec()) -> dict[int, RawTrack]:
    """Parse a trajectory file into frame-sorted per-pedestrian tracks.

    Accepts a path or an iterable of lines. Comment lines start with '#';
    blank lines are skipped. Duplicate frames for one pedestrian raise
    NonMonotonicFrames.
    """
    if isinstance(path_or_lines, (str, Path)):
        lines = Path(path_or_lines).read_text().splitlines()
    else:
        lines = list(path_or_lines)
    rows: dict[int, list[tuple[int, float, float]]] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = _split_line(stripped, spec.delimiter)
        if len(fields) <= spec.max_column:
            raise ParseError(lineno, f"expected at least {spec.max_column + 1} columns")
        try:
            ped = int(float(fields[spec.id]))
            frame = int(float(fields[spec.frame]))
            x = float(fields[spec.x])
            y = float(fields[spec.y])
        except ValueError as exc:
            raise ParseError(lineno, f"malformed numeric field ({exc})") from exc
        rows.setdefault(ped, []).append((frame, x, y))
    tracks: dict[int, RawTrack] = {}
    for ped in sorted(rows):
        rec = sorted(rows[ped], key=lambda r: r[0])
        frames = np.array([r[0] for r in rec], dtype=int)
        if len(frames) > 1 and (np.diff(frames) <= 0).any():
            raise NonMonotonicFrames(f"pedestrian {ped} has duplicate frames")
        positions = np.array([[r[1], r[2]] for r in rec], dtype=float)
        tracks[ped] = RawTrack(id=ped, frames=frames, positions=positions)
    return tracks


def smooth(positions, window: int, polyorder: int) -> np.ndarray:
    """Savitzky-Golay smoothing of an (n, 2) position series.

    Polynomials of degree <= polyorder pass through unchanged; output length
    equals input length.
    """
    pts = np.asarray(positions, dtype=float)
    if window % 2 == 0 or window <= polyorder or polyorder < 0:
        raise BadWindow(f"window {window} must be odd and exceed polyorder {polyorder}")
    if len(pts) < window:
        raise BadWindow(f"series of length {len(pts)} is shorter than window {window}")
    return savgol_filter(pts, window_length=window, polyorder=polyorder, axis=0, mode="interp")


def resample(
    track: RawTrack,
    frame_rate: float,
    dt: float = 0.5,
    smoothing=None,
    clip_polygon=None,
) -> Trajectory:
    """Resample a raw track to the model step and derive velocities.

    Rows outside clip_polygon are dropped first; only the first contiguous
    frame run is kept if clipping opens gaps. Smoothing (a SmoothingConfig or
    None) is applied to raw-frame positions before resampling when its
    before_resample flag is set, and to the resampled positions otherwise;
    tracks shorter than the smoothing window pass through unsmoothed.
    """
    stride_f = frame_rate * dt
    stride = round(stride_f)
    if abs(stride_f - stride) > 1e-9 or stride < 1:
        raise ValueError(f"frame_rate * dt must be a positive integer, got {stride_f}")
    frames = track.frames
    positions = track.positions
    if clip_polygon is not None:
        keep = np.array([point_in_polygon(p, clip_polygon) for p in positions])
        frames = frames[keep]
        positions = positions[keep]
        if len(frames) == 0:
            raise TooShort(f"pedestrian {track.id} never enters the clipping area")
        # keep the first contiguous run of surviving frames
        gaps = np.flatnonzero(np.diff(frames) != 1)
        if len(gaps):
            end = gaps[0] + 1
            frames = frames[:end]
            positions = positions[:end]

    def apply_smoothing(pts):
        if smoothing is None or not smoothing.enabled or len(pts) < smoothing.window:
            return pts
        return smooth(pts, smoothing.window, smoothing.polyorder)

    if smoothing is not None and smoothing.before_resample:
        positions = apply_smoothing(positions)

    index_of = {int(f): i for i, f in enumerate(frames)}
    first = int(frames[0])
    picks = []
    f = first
    while f in index_of:
        picks.append(index_of[f])
        f += stride
    sampled = positions[picks]
    if smoothing is not None and not smoothing.before_resample:
        sampled = apply_smoothing(sampled)
    if len(sampled) < 2:
        raise TooShort(
            f"pedestrian {track.id} observed for {len(sampled)} resampled steps, need >= 2"
        )
    velocities = np.diff(sampled, axis=0) / dt
    enter_step = round(first / stride)
    return Trajectory(
        id=track.id,
        enter_step=enter_step,
        positions=sampled,
        velocities=velocities,
        dt=dt,
    )


def load_trajectories(path, scenario, spec: ColumnSpec = ColumnSpec()) -> dict[int, Trajectory]:
    """Parse + clip + smooth + resample one file against a Scenario.

    Pedestrians too short to resample are dropped.
    """
    tracks = parse_trajectories(path, spec)
    out: dict[int, Trajectory] = {}
    for ped, track in tracks.items():
        try:
            out[ped] = resample(
                track,
                frame_rate=scenario.frame_rate,
                dt=scenario.dt,
                smoothing=scenario.smoothing,
                clip_polygon=scenario.clipping_polygon,
            )
        except TooShort:
            continue
    return out


def load_step_trajectories(path, dt: float = 0.5, spec: ColumnSpec = ColumnSpec()) -> dict[int, Trajectory]:
    """Load a file whose frame column already counts model steps.

    This reads simulator output (and any other step-resolution file) without
    clipping, smoothing, or stride resampling. Steps must be contiguous per
    pedestrian.
    """
    out: dict[int, Trajectory] = {}
    for ped, track in parse_trajectories(path, spec).items():
        if len(track.frames) > 1 and (np.diff(track.frames) != 1).any():
            raise NonMonotonicFrames(f"pedestrian {ped} has step gaps")
        out[ped] = Trajectory(
            id=ped,
            enter_step=int(track.frames[0]),
            positions=track.positions,
            velocities=np.diff(track.positions, axis=0) / dt,
            dt=dt,
        )
    return out


def write_trajectory_file(path, trajectories) -> None:
    """Write trajectories in the standard text format: id, index, x, y.

    Accepts anything with id, enter_step, and positions attributes; the index
    column counts one unit per row starting at enter_step. Floats are written
    with repr, so values round-trip bit-exactly through parse_trajectories and
    identical inputs yield byte-identical files.
    """
    lines = ["# id step x y"]
    for tr in trajectories:
        for k, p in enumerate(np.asarray(tr.positions)):
            lines.append(
                f"{int(tr.id)} {int(tr.enter_step) + k} {float(p[0])!r} {float(p[1])!r}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def snapshot(trajectories: dict[int, Trajectory], step: int, exclude: int | None = None):
    """Positions and velocities of all pedestrians present at a global step.

    Pedestrians at their entry step appear with zero velocity (no backward
    difference exists yet). Returns (ids, positions (n, 2), velocities (n, 2)).
    """
    ids, pos, vel = [], [], []
    for ped, traj in trajectories.items():
        if ped == exclude or not traj.covers(step):
            continue
        ids.append(ped)
        pos.append(traj.position_at(step))
        vel.append(traj.velocity_at(step))
    if ids:
        return ids, np.array(pos), np.array(vel)
    return ids, np.zeros((0, 2)), np.zeros((0, 2))


def build_samples(
    trajectories: dict[int, Trajectory],
    extractor,
    default_heading,
    w: int = 8,
) -> list[WindowSample]:
    """Sliding-window samples over all pedestrians.

    A sample at global step t stacks the pedestrian's feature frames for steps
    t - w + 1 .. t and targets the observed velocity of arrival at t + 1, so a
    trajectory with n velocities yields max(0, n - w) samples. Feature frames
    exist from each pedestrian's first transition onward.
    """
    samples: list[WindowSample] = []
    frames_by_ped: dict[int, dict[int, np.ndarray]] = {}
    for ped, traj in trajectories.items():
        frames: dict[int, np.ndarray] = {}
        for local in range(1, traj.n_steps + 1):
            step = traj.enter_step + local
            ids, pos, vel = snapshot(trajectories, step, exclude=ped)
            head = _heading(traj.velocities[:local], default_heading)
            frames[step] = extractor.frame(
                traj.position_at(step),
                traj.velocity_at(step),
                head,
                pos,
                vel,
            )
        frames_by_ped[ped] = frames
    for ped, traj in sorted(trajectories.items()):
        frames = frames_by_ped[ped]
        for local_t in range(w, traj.n_steps):
            t = traj.enter_step + local_t
            window = np.stack([frames[s] for s in range(t - w + 1, t + 1)])
            target = traj.velocities[local_t]  # arrival velocity at t + 1
            samples.append(WindowSample(input=window, target=target.copy(), ped_id=ped, step=t))
    return samples


def split(samples: list[WindowSample], seed: int, ratio: tuple[int, int] = (4, 1)) -> DatasetSplit:
    """Deterministic sample-level split; validation size is floor(n * val / total)."""
    n = len(samples)
    total = ratio[0] + ratio[1]
    if n < total:
        raise TooFewSamples(f"need at least {total} samples, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = n * ratio[1] // total
    val_idx = set(order[:n_val].tolist())
    training = [samples[i] for i in range(n) if i not in val_idx]
    validation = [samples[i] for i in sorted(val_idx)]
    return DatasetSplit(training=training, validation=validation, seed=seed)
