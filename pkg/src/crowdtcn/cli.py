"""Command-line entry point wiring the whole pipeline into reproducible runs.

Subcommands: train, simulate, evaluate, features, sweep, and synth. A single
JSON run-config document carries the scenario path, dataset file lists, model
hyperparameters, and output directory; command-line flags override individual
fields. Identical config + seed yields byte-identical primary outputs (model
artifacts, trajectory files, metric tables); only wall-time fields in logs
and reports may differ between runs.

Exit codes: 0 success, 1 runtime failure, 2 configuration or IO error.
Set CROWDTCN_LOG=debug|info|warning to control log verbosity.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .evaluate import (
    EmptySet,
    TrajectoryPair,
    UnmatchedId,
    ete_pete,
    fde,
    fundamental_diagram,
    profiles,
    tde,
    tte_ptte,
)
from .ingest import (
    NonMonotonicFrames,
    ParseError,
    TooFewSamples,
    build_samples,
    load_step_trajectories,
    load_trajectories,
    split,
    write_trajectory_file,
)
from .scenario import BadConfig, Scenario, load_scenario
from .simulate import MissingSeedData, ModelShapeMismatch, SimConfig, run
from .synth import GEOMETRIES, write_dataset
from .tcn import (
    Architecture,
    EmptyDataset,
    ShapeMismatch,
    TrainConfig,
    load_model,
    save_model,
    train,
    write_training_log,
)

__all__ = ["RunConfig", "load_run_config", "main"]

log = logging.getLogger("crowdtcn")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

# anything here means the user's config, flags, or input files need fixing
_CONFIG_ERRORS = (
    BadConfig,
    ParseError,
    NonMonotonicFrames,
    TooFewSamples,
    EmptyDataset,
    EmptySet,
    ShapeMismatch,
    ModelShapeMismatch,
    MissingSeedData,
    OSError,
)

_KNOWN_KEYS = {
    "scenario",
    "training_files",
    "testing_files",
    "output_dir",
    "seed",
    "window",
    "iterations",
    "batch_size",
    "learning_rate",
    "eval_every",
    "dropout",
    "dtype",
    "channels",
    "kernel_size",
    "dilations",
    "split_ratio",
    "radar",
    "rays",
    "sim",
    "sweep",
}


@dataclass
class RunConfig:
    """One validated run document; all paths are resolved absolute."""

    base_dir: Path
    scenario: Scenario
    scenario_doc: dict
    training_files: list[Path]
    testing_files: list[Path]
    output_dir: Path
    seed: int
    window: int
    iterations: int
    batch_size: int
    learning_rate: float
    eval_every: int
    dropout: float
    dtype: str
    channels: tuple
    kernel_size: int
    dilations: tuple
    split_ratio: tuple
    sim: SimConfig
    sweep_grid: dict

    def architecture(self) -> Architecture:
        return Architecture(
            feature_dim=self.scenario.feature_dim,
            window=self.window,
            channels=self.channels,
            kernel_size=self.kernel_size,
            dilations=self.dilations,
            dropout=self.dropout,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            iterations=self.iterations,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            eval_every=self.eval_every,
            seed=self.seed,
            dropout=self.dropout,
            dtype=self.dtype,
        )


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a run-config JSON file.

    overrides maps top-level keys to replacement values (CLI flags); None
    values are ignored. Referenced files must exist.
    """
    path = Path(path)
    if not path.exists():
        raise BadConfig(f"run config not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BadConfig(f"run config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise BadConfig(f"run config {path} must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise BadConfig(f"run config {path} has unknown keys: {unknown}")
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value

    base = path.parent.resolve()
    if "scenario" not in doc:
        raise BadConfig(f"run config {path} is missing the 'scenario' path")
    scenario_path = (base / doc["scenario"]).resolve()
    if not scenario_path.exists():
        raise BadConfig(f"scenario file not found: {scenario_path}")
    try:
        scenario_doc = json.loads(scenario_path.read_text())
    except json.JSONDecodeError as exc:
        raise BadConfig(f"scenario file {scenario_path} is not valid JSON: {exc}") from exc
    # run-config radar/rays sections override the scenario's own values
    for section in ("radar", "rays"):
        if section in doc:
            merged = dict(scenario_doc.get(section, {}))
            merged.update(doc[section])
            scenario_doc[section] = merged
    scenario = Scenario.from_dict(scenario_doc)

    def file_list(key):
        out = []
        for name in doc.get(key, []):
            p = (base / name).resolve()
            if not p.exists():
                raise BadConfig(f"{key} entry not found: {p}")
            out.append(p)
        return out

    window = int(doc.get("window", 8))
    sim_section = doc.get("sim", {})
    if not isinstance(sim_section, dict):
        raise BadConfig("'sim' must be an object")
    try:
        sim = SimConfig(dt=scenario.dt, window=window, **sim_section)
    except TypeError as exc:
        raise BadConfig(f"bad 'sim' section: {exc}") from exc

    return RunConfig(
        base_dir=base,
        scenario=scenario,
        scenario_doc=scenario_doc,
        training_files=file_list("training_files"),
        testing_files=file_list("testing_files"),
        output_dir=(base / doc.get("output_dir", "out")).resolve(),
        seed=int(doc.get("seed", 0)),
        window=window,
        iterations=int(doc.get("iterations", 3000)),
        batch_size=int(doc.get("batch_size", 128)),
        learning_rate=float(doc.get("learning_rate", 1e-4)),
        eval_every=int(doc.get("eval_every", 50)),
        dropout=float(doc.get("dropout", 0.1)),
        dtype=str(doc.get("dtype", "float32")),
        channels=tuple(doc.get("channels", (32, 64, 96))),
        kernel_size=int(doc.get("kernel_size", 8)),
        dilations=tuple(doc.get("dilations", (1, 2, 4))),
        split_ratio=tuple(doc.get("split_ratio", (4, 1))),
        sim=sim,
        sweep_grid=doc.get("sweep", {}),
    )


def _with_ray_params(cfg: RunConfig, exit_distance: float, step_deg: float) -> RunConfig:
    """A copy of cfg whose scenario uses the given ray-scan parameters."""
    doc = copy.deepcopy(cfg.scenario_doc)
    doc.setdefault("rays", {})
    doc["rays"]["exit_distance"] = float(exit_distance)
    doc["rays"]["step_deg"] = float(step_deg)
    return replace(cfg, scenario=Scenario.from_dict(doc), scenario_doc=doc)


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _collect_samples(cfg: RunConfig, files) -> list:
    """Window samples per file; pedestrians in different files never interact."""
    extractor = cfg.scenario.extractor()
    samples = []
    for f in files:
        trajs = load_trajectories(f, cfg.scenario)
        file_samples = build_samples(
            trajs, extractor, cfg.scenario.default_heading, w=cfg.window
        )
        log.info("%s: %d pedestrians, %d samples", f.name, len(trajs), len(file_samples))
        samples.extend(file_samples)
    return samples


def _metric_doc(pair: TrajectoryPair, dt: float) -> dict:
    ete, pete = ete_pete(pair, dt)
    tte_t, ptte_t = tte_ptte(pair, dt)
    tde_t = tde(pair)
    fde_t = fde(pair)

    def table(t):
        return {
            "mean": t.mean,
            "p95": t.p95,
            "per_pedestrian": {str(k): v for k, v in sorted(t.values.items())},
        }

    return {
        "n_pedestrians": len(pair.matched_ids),
        "ete_s": ete,
        "pete": pete,
        "tte_s": table(tte_t),
        "ptte": table(ptte_t),
        "tde_m": table(tde_t),
        "fde_m": table(fde_t),
    }


def _print_metrics(doc: dict) -> None:
    print(f"pedestrians matched: {doc['n_pedestrians']}")
    print(f"egress time error: {doc['ete_s']:.6g} s ({doc['pete'] * 100:.4g} %)")
    for key, unit, label in (
        ("tte_s", "s", "travel time error"),
        ("ptte", "%", "travel time error fraction"),
        ("tde_m", "m", "trajectory displacement error"),
        ("fde_m", "m", "final displacement error"),
    ):
        t = doc[key]
        scale = 100.0 if unit == "%" else 1.0
        print(
            f"{label}: mean {t['mean'] * scale:.6g} {unit}, "
            f"95th percentile {t['p95'] * scale:.6g} {unit}"
        )


def _write_profile_tables(out_dir: Path, series_list, simple: bool) -> None:
    prof_lines = ["label,step,density,velocity,flow"]
    for s in series_list:
        for i in range(len(s)):
            prof_lines.append(
                f"{s.label},{int(s.steps[i])},{float(s.density[i])!r},"
                f"{float(s.velocity[i])!r},{float(s.flow[i])!r}"
            )
    (out_dir / "profiles.csv").write_text("\n".join(prof_lines) + "\n")
    fd_lines = ["label,step,density,velocity,specific_flow"]
    for label, step, rho, vel, js in fundamental_diagram(series_list):
        fd_lines.append(f"{label},{step},{rho!r},{vel!r},{js!r}")
    (out_dir / "fd.csv").write_text("\n".join(fd_lines) + "\n")


def _train_pipeline(cfg: RunConfig) -> tuple:
    if not cfg.training_files:
        raise BadConfig("no training_files configured")
    samples = _collect_samples(cfg, cfg.training_files)
    dataset = split(samples, seed=cfg.seed, ratio=cfg.split_ratio)
    model, rows = train(dataset, cfg.train_config(), cfg.architecture())
    return model, rows, len(samples), len(dataset.training), len(dataset.validation)


def cmd_train(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    model, rows, n_samples, n_train, n_val = _train_pipeline(cfg)
    artifact = cfg.output_dir / "model.bin"
    save_model(artifact, model)
    write_training_log(cfg.output_dir / "training_log.csv", rows)
    meta = model.meta
    print(f"samples: {n_samples} ({n_train} training, {n_val} validation)")
    print(f"final train loss: {rows[-1][1]:.6g}")
    print(
        f"validation loss: initial {meta['initial_val_loss']:.6g}, "
        f"best {meta['best_val_loss']:.6g}, final {meta['final_val_loss']:.6g}"
    )
    print(f"model: {artifact}")
    return EXIT_OK


def _simulate_pipeline(cfg: RunConfig, model) -> list[tuple[str, dict, object]]:
    """Simulate every testing file; returns (stem, seed trajectories, result)."""
    if not cfg.testing_files:
        raise BadConfig("no testing_files configured")
    outputs = []
    for f in cfg.testing_files:
        seeds = load_trajectories(f, cfg.scenario)
        result = run(cfg.scenario, seeds, model, cfg.sim)
        outputs.append((f.stem, seeds, result))
    return outputs


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    try:
        model = load_model(args.artifact)
    except FileNotFoundError:
        raise BadConfig(f"model artifact not found: {args.artifact}")
    except ValueError as exc:
        raise BadConfig(f"cannot load model artifact {args.artifact}: {exc}")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for stem, _seeds, result in _simulate_pipeline(cfg, model):
        traj_path = cfg.output_dir / f"{stem}.sim.txt"
        write_trajectory_file(traj_path, sorted(result.trajectories, key=lambda t: t.id))
        report = dict(result.report)
        report["artifact"] = str(args.artifact)
        _write_json(cfg.output_dir / f"{stem}.report.json", report)
        flag = " (step cap exceeded)" if result.step_cap_exceeded else ""
        print(
            f"{stem}: {len(result.trajectories)} pedestrians, "
            f"{report['steps_run']} steps, {report['total_corrections']} "
            f"boundary corrections{flag} -> {traj_path}"
        )
        if result.step_cap_exceeded:
            status = EXIT_RUNTIME
    return status


def cmd_evaluate(args) -> int:
    scenario = load_scenario(args.scenario)
    expt = load_trajectories(args.experiment, scenario)
    sim = load_step_trajectories(args.simulation, dt=scenario.dt)
    pair = TrajectoryPair(expt, sim)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = _metric_doc(pair, scenario.dt)
    _write_json(out / "metrics.json", doc)
    series = [
        profiles(
            expt.values(),
            scenario.walkable_polygon,
            scenario.measurement_area,
            scenario.measurement_width,
            label="experiment",
            simple_density=args.simple_density,
        ),
        profiles(
            sim.values(),
            scenario.walkable_polygon,
            scenario.measurement_area,
            scenario.measurement_width,
            label="simulation",
            simple_density=args.simple_density,
        ),
    ]
    _write_profile_tables(out, series, args.simple_density)
    _print_metrics(doc)
    print(f"tables: {out / 'metrics.json'}, {out / 'profiles.csv'}, {out / 'fd.csv'}")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    files = {
        "training": cfg.training_files,
        "testing": cfg.testing_files,
        "all": cfg.training_files + cfg.testing_files,
    }[args.which]
    if not files:
        raise BadConfig(f"no {args.which} files configured")
    samples = _collect_samples(cfg, files)
    if not samples:
        raise EmptyDataset("no window samples could be built from the input files")
    out = cfg.output_dir / "features"
    out.mkdir(parents=True, exist_ok=True)
    windows = np.stack([s.input for s in samples])
    targets = np.stack([s.target for s in samples])
    ped_ids = np.array([s.ped_id for s in samples], dtype=np.int64)
    steps = np.array([s.step for s in samples], dtype=np.int64)
    for name, arr in (
        ("windows", windows),
        ("targets", targets),
        ("ped_ids", ped_ids),
        ("steps", steps),
    ):
        np.save(out / f"{name}.npy", arr)
    print(
        f"{len(samples)} samples, window {windows.shape[1]}, "
        f"{windows.shape[2]} features -> {out}"
    )
    return EXIT_OK


def _pooled_metrics(per_file: list[dict]) -> dict:
    """Average set-level metrics and pool per-pedestrian ones across files."""
    out = {
        "ete_s": float(np.mean([d["ete_s"] for d in per_file])),
        "pete": float(np.mean([d["pete"] for d in per_file])),
    }
    for key in ("tte_s", "ptte", "tde_m", "fde_m"):
        values = [v for d in per_file for v in d[key]["per_pedestrian"].values()]
        out[key] = float(np.mean(values))
    return out


def _sweep_one(task: tuple) -> dict:
    config_path, overrides, exit_distance, step_deg, label = task
    row = {
        "label": label,
        "exit_distance_m": exit_distance,
        "ray_step_deg": step_deg,
        "status": "ok",
    }
    try:
        cfg = load_run_config(config_path, overrides)
        cfg = _with_ray_params(cfg, exit_distance, step_deg)
        cfg = replace(cfg, output_dir=cfg.output_dir / label)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        model, rows, *_ = _train_pipeline(cfg)
        save_model(cfg.output_dir / "model.bin", model)
        write_training_log(cfg.output_dir / "training_log.csv", rows)
        per_file = []
        for stem, seeds, result in _simulate_pipeline(cfg, model):
            write_trajectory_file(
                cfg.output_dir / f"{stem}.sim.txt",
                sorted(result.trajectories, key=lambda t: t.id),
            )
            _write_json(cfg.output_dir / f"{stem}.report.json", dict(result.report))
            sim_trajs = {tr.id: tr for tr in result.trajectories}
            doc = _metric_doc(TrajectoryPair(seeds, sim_trajs), cfg.scenario.dt)
            _write_json(cfg.output_dir / f"{stem}.metrics.json", doc)
            per_file.append(doc)
        row.update(_pooled_metrics(per_file))
    except Exception as exc:  # per-combination failures must not stop the sweep
        row["status"] = f"failed: {exc}"
    return row


_SWEEP_COLUMNS = [
    "label",
    "exit_distance_m",
    "ray_step_deg",
    "ete_s",
    "pete",
    "tte_s",
    "ptte",
    "tde_m",
    "fde_m",
    "status",
]


def cmd_sweep(args) -> int:
    overrides = _overrides(args)
    cfg = load_run_config(args.config, overrides)
    grid = cfg.sweep_grid
    exit_distances = args.exit_distances or grid.get("exit_distances")
    step_degs = args.step_degs or grid.get("step_degs")
    if not exit_distances or not step_degs:
        raise BadConfig(
            "sweep needs exit distances and ray step angles "
            "(--exit-distances/--step-degs or a 'sweep' config section)"
        )
    jobs = args.jobs or int(grid.get("jobs", 1))
    tasks = []
    for de in exit_distances:
        for beta in step_degs:
            label = f"{de:g}-{beta:g}"
            tasks.append((str(args.config), overrides, float(de), float(beta), label))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    lines = [",".join(_SWEEP_COLUMNS)]
    for row in rows:
        cells = []
        for col in _SWEEP_COLUMNS:
            value = row.get(col, "")
            if isinstance(value, float):
                cells.append(f"{value:.9g}")
            else:
                cells.append(str(value).replace(",", ";"))
        lines.append(",".join(cells))
    table_path = cfg.output_dir / "sweep.csv"
    table_path.write_text("\n".join(lines) + "\n")
    failed = [r for r in rows if r["status"] != "ok"]
    for row in rows:
        if row["status"] == "ok":
            print(
                f"{row['label']}: ETE {row['ete_s']:.4g} s, PETE {row['pete']:.4g}, "
                f"TTE {row['tte_s']:.4g} s, PTTE {row['ptte']:.4g}, "
                f"TDE {row['tde_m']:.4g} m, FDE {row['fde_m']:.4g} m"
            )
        else:
            print(f"{row['label']}: {row['status']}")
    print(f"table: {table_path}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_synth(args) -> int:
    builder = GEOMETRIES[args.geometry]
    kwargs = {"seed": args.seed, "n_train": args.n_train, "n_test": args.n_test}
    if args.step_deg is not None:
        kwargs["step_deg"] = args.step_deg
    if args.exit_distance is not None:
        kwargs["exit_distance"] = args.exit_distance
    dataset = builder(**kwargs)
    paths = write_dataset(dataset, args.out)
    run_doc = {
        "scenario": paths["scenario"].name,
        "training_files": [paths["training"].name],
        "testing_files": [paths["testing"].name],
        "output_dir": "out",
        "seed": args.seed,
        "window": 8,
        "iterations": 800,
        "batch_size": 64,
        "learning_rate": 1e-3,
        "eval_every": 50,
    }
    config_path = Path(args.out) / "run.json"
    _write_json(config_path, run_doc)
    print(
        f"{args.geometry}: {len(dataset.training)} training and "
        f"{len(dataset.testing)} testing pedestrians -> {Path(args.out).resolve()}"
    )
    print(f"run config: {config_path}")
    return EXIT_OK


def _overrides(args) -> dict:
    keys = ("seed", "iterations", "output_dir", "learning_rate", "batch_size")
    return {k: getattr(args, k, None) for k in keys}


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdtcn",
        description="Data-driven crowd simulation: train, simulate, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("-c", "--config", required=True, help="run config JSON path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--iterations", type=int, help="override training iterations")
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--output-dir", dest="output_dir", help="override the output directory")

    p = sub.add_parser("train", help="train a velocity predictor")
    add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="closed-loop simulation from seed trajectories")
    add_config_flags(p)
    p.add_argument("--artifact", required=True, help="trained model artifact path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="realism metrics for a simulated run")
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--experiment", required=True, help="experimental trajectory file")
    p.add_argument("--simulation", required=True, help="simulated trajectory file")
    p.add_argument("--output-dir", dest="output_dir", default="eval-out")
    p.add_argument(
        "--simple-density",
        action="store_true",
        help="count-based density instead of area-weighted cells",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", help="extract window samples to .npy files")
    add_config_flags(p)
    p.add_argument(
        "--which",
        choices=("training", "testing", "all"),
        default="training",
        help="which file list to featurize",
    )
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("sweep", help="grid over ray exit distance and step angle")
    add_config_flags(p)
    p.add_argument("--exit-distances", type=_float_list, help="comma-separated meters")
    p.add_argument("--step-degs", type=_float_list, help="comma-separated degrees")
    p.add_argument("--jobs", type=int, help="parallel combinations (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--geometry", choices=sorted(GEOMETRIES), default="corridor")
    p.add_argument("--out", required=True, help="dataset output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", dest="n_train", type=int, default=50)
    p.add_argument("--n-test", dest="n_test", type=int, default=12)
    p.add_argument("--step-deg", dest="step_deg", type=float)
    p.add_argument("--exit-distance", dest="exit_distance", type=float)
    p.set_defaults(func=cmd_synth)
    return parser


def _setup_logging() -> None:
    name = os.environ.get("CROWDTCN_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnmatchedId as exc:
        # KeyError str() wraps the message in quotes; print it bare
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure
        log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
