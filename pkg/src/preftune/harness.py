"""Experiment driver: excitation week, identification, daily tuning loop.

Runs {baseline, static, contextual} x seeds on paired weather, scores
each day under the configured occupant, and emits the figure-ready
data files plus a machine-readable manifest.  Every random draw flows
from the run seed through named substreams, days are checkpointed, and
a resumed run reproduces the uninterrupted byte stream exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .arx import ArxModel, FitReport, IoWindow, excitation_control, fit_arx, \
    rollout_open_loop, save_model
from .config import ExperimentConfig, config_to_dict, load_config, save_config
from .kernels import Context, EvalPoint, ParamPoint
from .mpc import HorizonForecasts, MpcConfig, mpc_step
from .occupants import evaluate_day, preference_feedback
from .plant import (
    STEPS_PER_DAY,
    BaselineController,
    PlantState,
    TrajectoryLog,
    WeatherDay,
    generate_weather,
    load_log,
    save_log,
    simulate_day,
)
from .seeding import STREAM_EXCITATION, STREAM_FEEDBACK, substream
from .tuner import (
    TunerState,
    create_tuner,
    load_checkpoint,
    make_theta_grid,
    predict_optimal_theta2,
    propose,
    save_checkpoint,
    update,
)

log = logging.getLogger(__name__)

BASELINE = "baseline"


def weather_hash(w: WeatherDay) -> str:
    """Digest of one day's exogenous traces, for the pairing contract."""
    h = hashlib.sha256()
    h.update(np.int64(w.day_index).tobytes())
    for arr in (w.outdoor, w.solar, w.price):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


@dataclass
class MetricSeries:
    """Per-day realized utility with its cumulative and running mean."""

    j: np.ndarray
    r_sum: np.ndarray
    r_ave: np.ndarray


def compute_metrics(j_series) -> MetricSeries:
    """Cumulative and running-average series from per-day utilities."""
    j = np.asarray(j_series, dtype=float)
    if j.size == 0:
        raise ValueError("metric series must be nonempty")
    r_sum = np.cumsum(j)
    r_ave = r_sum / np.arange(1, j.size + 1)
    return MetricSeries(j, r_sum, r_ave)


@dataclass
class DayRecord:
    """One executed day of one method: parameters, scores, feedback."""

    method: str
    seed: int
    day: int
    theta1: float
    theta2: float
    z: float
    cost: float
    discomfort: float
    t_ave: float
    t_env: float
    utility: float
    q: int | None
    weather_hash: str

    CSV_HEADER = ("day,theta1,theta2,z,cost,discomfort,t_ave,t_env,"
                  "utility,q,weather_hash")

    def to_row(self) -> str:
        q = "" if self.q is None else str(self.q)
        vals = [self.theta1, self.theta2, self.z, self.cost, self.discomfort,
                self.t_ave, self.t_env, self.utility]
        return ",".join([str(self.day)] + [repr(float(v)) for v in vals]
                        + [q, self.weather_hash])

    @classmethod
    def from_row(cls, method: str, seed: int, row: str) -> "DayRecord":
        t = row.split(",")
        return cls(method, seed, int(t[0]), float(t[1]), float(t[2]),
                   float(t[3]), float(t[4]), float(t[5]), float(t[6]),
                   float(t[7]), float(t[8]), int(t[9]) if t[9] else None,
                   t[10])


@dataclass
class IdentResult:
    """Identification phase output plus what the tuning phase inherits."""

    seed: int
    model: ArxModel
    report: FitReport
    val_open_loop_mae: float
    end_state: PlantState
    tail_y: np.ndarray
    tail_u: np.ndarray


@dataclass
class MethodRun:
    """One (method, seed) cell of the experiment."""

    method: str
    seed: int
    records: list[DayRecord]
    metrics: MetricSeries
    logs: list[TrajectoryLog] | None
    theta2_curve: list[tuple[float, float]] | None

    @property
    def seed_record(self) -> DayRecord:
        return self.records[0]

    @property
    def tuning_records(self) -> list[DayRecord]:
        return self.records[1:]


@dataclass
class ResultsBundle:
    """Everything the artifact emitters and tests consume."""

    cfg: ExperimentConfig
    runs: dict[tuple[str, int], MethodRun]
    ident_maes: dict[int, tuple[float, float]]


def run_identification_phase(cfg: ExperimentConfig,
                             seed: int | None = None) -> IdentResult:
    """Excitation week, ARX fit, and a held-out open-loop validation.

    Simulates 7 randomized bang-bang days from the excitation start day,
    fits the ARX model on the logged series, then branches a 14-day
    baseline-thermostat run off the final state and scores the model's
    open-loop rollout against it.  The returned tail buffers carry the
    last 10 aligned samples into the tuning phase.
    """
    if seed is None:
        seed = cfg.seeds[0]
    start = cfg.excitation_start_day
    state = PlantState(cfg.init_zone_temp, cfg.init_wall_temp,
                       clock_s=start * 86400.0)
    logs: list[TrajectoryLog] = []
    for d in range(start, start + cfg.excitation_days):
        rng = substream(seed, STREAM_EXCITATION, d)

        def controller(step, time_s, y, outdoor, solar, price):
            return excitation_control(y, cfg.excitation_lower,
                                      cfg.excitation_upper, rng)

        day_log, state = simulate_day(controller, state,
                                      generate_weather(seed, d), cfg.plant)
        logs.append(day_log)

    y = np.concatenate([lg.y for lg in logs])
    u = np.vstack([np.concatenate([lg.valve for lg in logs]),
                   np.concatenate([lg.outdoor for lg in logs]),
                   np.concatenate([lg.solar for lg in logs])])
    model, report = fit_arx(y, u, cfg.arx_ridge)

    val_state = state
    thermostat = BaselineController()
    val_logs: list[TrajectoryLog] = []
    for d in range(start + cfg.excitation_days,
                   start + cfg.excitation_days + cfg.validation_days):
        day_log, val_state = simulate_day(thermostat, val_state,
                                          generate_weather(seed, d), cfg.plant)
        val_logs.append(day_log)
    future = np.vstack([np.concatenate([lg.valve for lg in val_logs]),
                        np.concatenate([lg.outdoor for lg in val_logs]),
                        np.concatenate([lg.solar for lg in val_logs])])
    window = IoWindow.from_series(y, u)
    preds = rollout_open_loop(model, window, future)
    y_val = np.concatenate([lg.y for lg in val_logs])
    val_mae = float(np.mean(np.abs(preds - y_val)))
    log.info("seed %d identification: train MAE %.4f degC, "
             "14-day open-loop MAE %.4f degC", seed, report.train_mae, val_mae)
    return IdentResult(seed, model, report, val_mae, state,
                       y[-10:].copy(), u[:, -10:].copy())


class MpcController:
    """Receding-horizon controller persisting I/O buffers across days.

    Each step appends the fresh measurement, solves the horizon LP on
    forecasts spliced from today's and tomorrow's weather, applies the
    first valve command, and records it in the buffer slot the window
    had left as a placeholder.
    """

    def __init__(self, model: ArxModel, cfg: MpcConfig,
                 tail_y: np.ndarray, tail_u: np.ndarray):
        self.model = model
        self.cfg = cfg
        self.y_buf = [float(v) for v in tail_y]
        self.u_buf = [[float(tail_u[0, k]), float(tail_u[1, k]),
                       float(tail_u[2, k])] for k in range(tail_u.shape[1])]
        self.theta: ParamPoint | None = None
        self._price_ext = None
        self._outdoor_ext = None
        self._solar_ext = None

    def set_day(self, theta: ParamPoint | None, today: WeatherDay,
                tomorrow: WeatherDay) -> None:
        n = self.cfg.horizon
        need = STEPS_PER_DAY + n
        self.theta = theta
        self._price_ext = np.concatenate([today.price, tomorrow.price])[:need]
        self._outdoor_ext = np.concatenate([today.outdoor,
                                            tomorrow.outdoor])[:need]
        self._solar_ext = np.concatenate([today.solar, tomorrow.solar])[:need]

    def __call__(self, step: int, time_s: float, y: float,
                 outdoor: float, solar: float, price: float) -> float:
        n = self.cfg.horizon
        self.y_buf.append(float(y))
        self.u_buf.append([0.0, float(outdoor), float(solar)])
        window = IoWindow(np.array(self.y_buf[-10:]),
                          np.array(self.u_buf[-10:]).T)
        fc = HorizonForecasts(
            price=self._price_ext[step: step + n + 1],
            outdoor=self._outdoor_ext[step + 1: step + 1 + n],
            solar=self._solar_ext[step + 1: step + 1 + n],
            hours=(np.arange(step + 1, step + 1 + n) % STEPS_PER_DAY) * 0.25,
        )
        valve = mpc_step(self.model, window, fc, self.theta, self.cfg)
        self.u_buf[-1][0] = valve
        self.y_buf = self.y_buf[-10:]
        self.u_buf = self.u_buf[-10:]
        return valve


def _records_path(out_dir: Path, method: str, seed: int) -> Path:
    return out_dir / "raw" / f"records_{method}_seed{seed}.csv"


def _curve_path(out_dir: Path, method: str, seed: int) -> Path:
    return out_dir / "raw" / f"theta2_{method}_seed{seed}.csv"


def _traj_dir(out_dir: Path, method: str, seed: int) -> Path:
    return out_dir / "raw" / "trajectories" / f"{method}_seed{seed}"


def _chk_dir(out_dir: Path, method: str, seed: int) -> Path:
    return out_dir / "checkpoints" / f"{method}_seed{seed}"


def _write_run_checkpoint(path: Path, method: str, seed: int, day: int,
                          state: PlantState, j_prev: float | None,
                          controller) -> None:
    lines = [
        "# run checkpoint v1",
        f"method {method}",
        f"seed {seed}",
        f"day {day}",
        f"plant {state.zone_temp!r} {state.wall_temp!r} {state.clock_s!r}",
    ]
    if j_prev is not None:
        lines.append(f"jprev {j_prev!r}")
    if isinstance(controller, BaselineController):
        lines.append(f"thermostat {controller.prev}")
    else:
        lines.append("ybuf " + " ".join(repr(v) for v in controller.y_buf))
        for i, name in enumerate(("uvalve", "uout", "usolar")):
            lines.append(name + " " + " ".join(repr(col[i])
                                               for col in controller.u_buf))
    path.write_text("\n".join(lines) + "\n")


def _read_run_checkpoint(path: Path) -> dict:
    out: dict = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, *vals = line.split()
        out[key] = vals
    return out


def _load_records(path: Path, method: str, seed: int,
                  max_day: int | None = None) -> list[DayRecord]:
    records = []
    for line in path.read_text().splitlines()[1:]:
        if not line.strip():
            continue
        rec = DayRecord.from_row(method, seed, line)
        if max_day is None or rec.day <= max_day:
            records.append(rec)
    return records


def _rewrite_records(path: Path, records: list[DayRecord]) -> None:
    rows = [DayRecord.CSV_HEADER] + [r.to_row() for r in records]
    path.write_text("\n".join(rows) + "\n")


def run_tuning_loop(cfg: ExperimentConfig, ident: IdentResult,
                    methods: list[str] | None = None,
                    out_dir: Path | None = None, resume: bool = False,
                    feedback_fn=None, keep_logs: bool = True
                    ) -> dict[tuple[str, int], MethodRun]:
    """Daily loop for every requested method on one seed's weather.

    Day 42 is executed by every method to align plant states (the tuner
    methods run the seed parameters, the baseline its thermostat); the
    following ``cfg.days`` days are the scored tuning days.  Feedback
    comes from ``feedback_fn(day, j_now, j_prev) -> {0, 1}`` when given,
    otherwise from the configured occupant.
    """
    methods = list(methods if methods is not None else cfg.methods)
    runs: dict[tuple[str, int], MethodRun] = {}
    for method in methods:
        runs[(method, ident.seed)] = _run_method(
            cfg, ident, method, out_dir, resume, feedback_fn, keep_logs)
    return runs


def _run_method(cfg: ExperimentConfig, ident: IdentResult, method: str,
                out_dir: Path | None, resume: bool, feedback_fn,
                keep_logs: bool) -> MethodRun:
    seed = ident.seed
    start_day = cfg.tuning_start_day
    last_day = start_day + cfg.days
    tuned = method != BASELINE

    chk_dir = rec_path = traj_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        chk_dir = _chk_dir(out_dir, method, seed)
        chk_dir.mkdir(parents=True, exist_ok=True)
        rec_path = _records_path(out_dir, method, seed)
        rec_path.parent.mkdir(parents=True, exist_ok=True)
        if keep_logs:
            traj_dir = _traj_dir(out_dir, method, seed)
            traj_dir.mkdir(parents=True, exist_ok=True)

    done_day = None
    if resume and chk_dir is not None:
        days_present = sorted(
            int(p.stem.split("_")[1]) for p in chk_dir.glob("day_*.txt")
            if not p.stem.endswith("_tuner"))
        days_present = [d for d in days_present if d <= last_day]
        if days_present:
            done_day = days_present[-1]

    records: list[DayRecord] = []
    tuner: TunerState | None = None
    j_prev: float | None = None
    if done_day is None:
        plant_state = ident.end_state
        controller = (BaselineController() if not tuned else
                      MpcController(ident.model, cfg.mpc, ident.tail_y,
                                    ident.tail_u))
        next_day = start_day
        if rec_path is not None:
            rec_path.write_text(DayRecord.CSV_HEADER + "\n")
    else:
        chk = _read_run_checkpoint(chk_dir / f"day_{done_day:03d}.txt")
        plant_state = PlantState(float(chk["plant"][0]),
                                 float(chk["plant"][1]),
                                 float(chk["plant"][2]))
        if tuned:
            controller = MpcController(
                ident.model, cfg.mpc,
                np.array([float(v) for v in chk["ybuf"]]),
                np.vstack([[float(v) for v in chk["uvalve"]],
                           [float(v) for v in chk["uout"]],
                           [float(v) for v in chk["usolar"]]]))
            tuner = load_checkpoint(chk_dir / f"day_{done_day:03d}_tuner.txt")
            j_prev = float(chk["jprev"][0])
        else:
            controller = BaselineController()
            controller.prev = int(chk["thermostat"][0])
        records = _load_records(rec_path, method, seed, max_day=done_day)
        _rewrite_records(rec_path, records)
        next_day = done_day + 1
        log.info("%s seed %d: resuming after day %d", method, seed, done_day)

    mem_logs: list[TrajectoryLog] = []
    if keep_logs and traj_dir is not None:
        mem_logs = [load_log(traj_dir / f"day_{d:03d}.txt")
                    for d in range(start_day, next_day)]

    for day in range(next_day, last_day + 1):
        try:
            weather = generate_weather(seed, day)
            z = Context(weather.mean_outdoor)
            if not tuned:
                theta = None
            elif day == start_day:
                theta = ParamPoint(cfg.seed_theta1, cfg.seed_theta2)
            else:
                theta = propose(tuner, z)
            if tuned:
                controller.set_day(theta, weather,
                                   generate_weather(seed, day + 1))
            day_log, plant_state = simulate_day(controller, plant_state,
                                                weather, cfg.plant)
            result = evaluate_day(day_log, weather, cfg.occupant,
                                  cfg.mpc.day_start_hour,
                                  cfg.mpc.day_end_hour)
            q: int | None = None
            if tuned:
                if day == start_day:
                    kcfg = replace(cfg.kernel,
                                   contextual=(method == "contextual"))
                    grid = make_theta_grid(cfg.grid_n_theta1,
                                           cfg.grid_n_theta2)
                    tuner = create_tuner(EvalPoint(theta, z), kcfg, grid,
                                         cfg.bound, cfg.beta)
                else:
                    if feedback_fn is not None:
                        q = int(feedback_fn(day, result.utility, j_prev))
                    else:
                        q = preference_feedback(
                            result.utility, j_prev, cfg.occupant,
                            substream(seed, STREAM_FEEDBACK, day))
                    tuner = update(tuner, theta, z, bool(q))
                j_prev = result.utility
            rec = DayRecord(
                method, seed, day,
                float("nan") if theta is None else theta.theta1,
                float("nan") if theta is None else theta.theta2,
                z.mean_outdoor_temp, result.c_t, result.d_t, result.t_ave,
                result.t_env, result.utility, q, weather_hash(weather))
            records.append(rec)
        except Exception as exc:
            raise RuntimeError(
                f"method {method}, seed {seed}, day {day}: {exc}") from exc
        if keep_logs:
            mem_logs.append(day_log)
        if rec_path is not None:
            with open(rec_path, "a") as fh:
                fh.write(rec.to_row() + "\n")
        if traj_dir is not None:
            save_log(day_log, traj_dir / f"day_{day:03d}.txt")
        if chk_dir is not None:
            _write_run_checkpoint(chk_dir / f"day_{day:03d}.txt", method,
                                  seed, day, plant_state, j_prev, controller)
            if tuned:
                save_checkpoint(tuner, chk_dir / f"day_{day:03d}_tuner.txt")

    metrics = compute_metrics([r.utility for r in records
                               if r.day > start_day])
    curve = None
    if tuned and tuner.dataset.n_comparisons >= 5:
        zs = np.linspace(-10.0, 10.0, 21)
        t2 = predict_optimal_theta2(tuner, [Context(float(v)) for v in zs])
        curve = list(zip([float(v) for v in zs], [float(v) for v in t2]))
        if out_dir is not None:
            rows = ["z,theta2_star"] + [f"{z!r},{t!r}" for z, t in curve]
            _curve_path(out_dir, method, seed).write_text(
                "\n".join(rows) + "\n")
    logs = mem_logs if keep_logs else None
    total_cost = sum(r.cost for r in records[1:])
    total_disc = sum(r.discomfort for r in records[1:])
    log.info("%s seed %d: %d days, total cost %.2f EUR, "
             "total discomfort %.1f", method, seed, len(records) - 1,
             total_cost, total_disc)
    return MethodRun(method, seed, records, metrics, logs, curve)


def improvement_table(bundle: ResultsBundle
                      ) -> list[tuple[str, int, float, float, float]]:
    """Per-(method, seed) relative improvement over the baseline.

    The compared quantity is the occupant's own objective summed over
    the tuning days: the heating bill for the energy occupant, the
    discomfort measure for the comfort occupant.  Positive percentages
    mean the tuned method beat the thermostat.
    """
    kind = bundle.cfg.occupant.kind
    rows = []
    for method in bundle.cfg.methods:
        if method == BASELINE:
            continue
        for seed in bundle.cfg.seeds:
            if (method, seed) not in bundle.runs or \
                    (BASELINE, seed) not in bundle.runs:
                continue

            def total(run: MethodRun) -> float:
                if kind == "energy":
                    return float(sum(r.cost for r in run.tuning_records))
                return float(sum(r.discomfort for r in run.tuning_records))

            b = total(bundle.runs[(BASELINE, seed)])
            m = total(bundle.runs[(method, seed)])
            rows.append((method, seed, b, m, 100.0 * (b - m) / b))
    return rows


def verify_paired_weather(bundle: ResultsBundle) -> None:
    """Check every method saw identical weather per (seed, day)."""
    for seed in bundle.cfg.seeds:
        per_method = {}
        for method in bundle.cfg.methods:
            run = bundle.runs.get((method, seed))
            if run is not None:
                per_method[method] = {r.day: r.weather_hash
                                      for r in run.records}
        if len(per_method) < 2:
            continue
        ref_method, ref = next(iter(per_method.items()))
        for method, hashes in per_method.items():
            if hashes != ref:
                raise RuntimeError(
                    f"weather pairing broken for seed {seed}: "
                    f"{method} disagrees with {ref_method}")


def emit_artifacts(bundle: ResultsBundle, outdir) -> list[Path]:
    """Write the figure-ready data files and the run manifest.

    Emits per-day trajectory tables for the first seed, cumulative and
    running-average metric series per (method, seed), the per-seed
    improvement summary, the context-to-setpoint curves, and a manifest
    echoing the configuration, library versions, identification errors,
    and weather digests.  Output bytes depend only on the run data, so
    re-emission from saved raw files is identical.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = bundle.cfg
    files: list[Path] = []
    seed0 = cfg.seeds[0]

    for method in cfg.methods:
        run = bundle.runs.get((method, seed0))
        if run is None or not run.logs:
            continue
        p = outdir / f"fig3_trajectories_{method}_seed{seed0}.csv"
        rows = ["day,step,y,valve,q_kw,price,outdoor,solar"]
        for lg in run.logs:
            for k in range(lg.y.shape[0]):
                vals = (lg.y[k], lg.valve[k], lg.q_kw[k], lg.price[k],
                        lg.outdoor[k], lg.solar[k])
                rows.append(",".join([str(lg.day_index), str(k)]
                                     + [repr(float(v)) for v in vals]))
        p.write_text("\n".join(rows) + "\n")
        files.append(p)

    for (method, seed), run in sorted(bundle.runs.items()):
        p = outdir / f"fig4_metrics_{method}_seed{seed}.csv"
        rows = ["day,utility,r_sum,r_ave"]
        days = [r.day for r in run.tuning_records]
        for d, j, rs, ra in zip(days, run.metrics.j, run.metrics.r_sum,
                                run.metrics.r_ave):
            rows.append(f"{d},{float(j)!r},{float(rs)!r},{float(ra)!r}")
        p.write_text("\n".join(rows) + "\n")
        files.append(p)

    p = outdir / "fig5_improvement.csv"
    rows = ["method,seed,baseline_total,method_total,improvement_pct"]
    for method, seed, b, m, pct in improvement_table(bundle):
        rows.append(f"{method},{seed},{b!r},{m!r},{pct!r}")
    p.write_text("\n".join(rows) + "\n")
    files.append(p)

    for (method, seed), run in sorted(bundle.runs.items()):
        if not run.theta2_curve:
            continue
        p = outdir / f"fig6_theta2_{method}_seed{seed}.csv"
        rows = ["z,theta2_star"] + [f"{z!r},{t!r}" for z, t in run.theta2_curve]
        p.write_text("\n".join(rows) + "\n")
        files.append(p)

    import scipy

    from . import __version__

    hash_method = next(m for m in cfg.methods
                       if any(k[0] == m for k in bundle.runs))
    weather = {}
    for seed in cfg.seeds:
        run = bundle.runs.get((hash_method, seed))
        if run is not None:
            for r in run.records:
                weather[f"{seed}:{r.day}"] = r.weather_hash
    manifest = {
        "package": "preftune",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config": config_to_dict(cfg),
        "identification_mae": {
            str(s): {"train": t, "open_loop_val": v}
            for s, (t, v) in sorted(bundle.ident_maes.items())},
        "weather_sha256": weather,
        "notes": ("All methods consume identical per-(seed, day) weather; "
                  "this paired design is stricter than independent draws "
                  "and is verified against the digests above."),
        "files": sorted(p.name for p in files) + ["manifest.json"],
    }
    p = outdir / "manifest.json"
    p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    files.append(p)
    log.info("emitted %d artifact files to %s", len(files), outdir)
    return files


def run_experiment(cfg: ExperimentConfig, resume: bool = False,
                   feedback_fn=None) -> ResultsBundle:
    """Identification plus the full tuning grid, then artifact emission."""
    t0 = time.monotonic()
    out = Path(cfg.out_dir)
    (out / "raw").mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    runs: dict[tuple[str, int], MethodRun] = {}
    ident_maes: dict[int, tuple[float, float]] = {}
    for seed in cfg.seeds:
        ident = run_identification_phase(cfg, seed)
        ident_maes[seed] = (ident.report.train_mae, ident.val_open_loop_mae)
        save_model(ident.model, ident.report,
                   out / "raw" / f"arx_seed{seed}.txt")
        runs.update(run_tuning_loop(cfg, ident, out_dir=out, resume=resume,
                                    feedback_fn=feedback_fn,
                                    keep_logs=(seed == cfg.seeds[0])))
    rows = ["seed,train_mae,open_loop_val_mae"]
    rows += [f"{s},{t!r},{v!r}" for s, (t, v) in sorted(ident_maes.items())]
    (out / "raw" / "identification.csv").write_text("\n".join(rows) + "\n")

    bundle = ResultsBundle(cfg, runs, ident_maes)
    verify_paired_weather(bundle)
    emit_artifacts(bundle, out / "artifacts")
    log.info("experiment finished in %.1f s", time.monotonic() - t0)
    return bundle


def load_experiment(out_dir) -> ResultsBundle:
    """Rebuild a ResultsBundle from a finished run's raw files."""
    out = Path(out_dir)
    cfg = load_config(out / "config.json")
    ident_maes: dict[int, tuple[float, float]] = {}
    ident_path = out / "raw" / "identification.csv"
    if ident_path.exists():
        for line in ident_path.read_text().splitlines()[1:]:
            if line.strip():
                s, t, v = line.split(",")
                ident_maes[int(s)] = (float(t), float(v))
    runs: dict[tuple[str, int], MethodRun] = {}
    for method in cfg.methods:
        for seed in cfg.seeds:
            rp = _records_path(out, method, seed)
            if not rp.exists():
                continue
            records = _load_records(rp, method, seed)
            metrics = compute_metrics(
                [r.utility for r in records if r.day > cfg.tuning_start_day])
            logs = None
            td = _traj_dir(out, method, seed)
            if td.exists():
                logs = [load_log(p) for p in sorted(td.glob("day_*.txt"))]
            curve = None
            cp = _curve_path(out, method, seed)
            if cp.exists():
                curve = []
                for line in cp.read_text().splitlines()[1:]:
                    if line.strip():
                        a, b = line.split(",")
                        curve.append((float(a), float(b)))
            runs[(method, seed)] = MethodRun(method, seed, records, metrics,
                                             logs, curve)
    if not runs:
        raise FileNotFoundError(f"no run records under {out}")
    return ResultsBundle(cfg, runs, ident_maes)
