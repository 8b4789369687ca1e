"""Monte-Carlo sweeps, the bike-sharing MSE table and the convergence study.

Every replicate draws from its own substream ``(seed, rep, ...)``, so
results do not depend on how many replicates run or on how they are spread
over worker processes. Results are collected in replicate order and written
as CSV tables with a JSON sidecar echoing the configuration.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import sdr, synth
from .errors import InvalidArgumentError
from .funcspace import make_grid
from .ingest import build_saturday_dataset, parse_bike_csv
from .metrics import subspace_distance
from .regress import gpr_fit, gpr_predict

DEFAULT_M_GRID = list(range(2, 15)) + [20, 30, 40]
DEFAULT_RHO_GRID = [k / 100 for k in list(range(1, 11)) + [15, 20, 25, 30] + list(range(40, 151, 10))]
BIKE_M_GRID = [1, 3, 5, 7, 9, 11, 13]
BIKE_D_GRID = [1, 2, 3, 4, 5]

COMMANDS = ("synth-sweep", "bike-eval", "convergence")
METHODS = ("fsfir", "tfsir", "rfsir")


@dataclass
class ExperimentConfig:
    command: str = "synth-sweep"
    model: str = "M1"
    method: str = "fsfir"
    n: int = 20000
    reps: int = 100
    seed: int = 7
    m_grid: List[int] = field(default_factory=lambda: list(DEFAULT_M_GRID))
    rho_grid: List[float] = field(default_factory=lambda: list(DEFAULT_RHO_GRID))
    H: int = 10
    d: Optional[int] = None
    noise_var: float = 0.25
    grid_points: int = 256
    block_size: int = 1024
    basis_size: int = 100
    n_list: List[int] = field(default_factory=lambda: [500, 2000, 8000])
    gamma: float = 0.1
    alpha1: float = 1.1
    alpha2: float = 2.0
    t: float = 1.0
    d_grid: List[int] = field(default_factory=lambda: list(BIKE_D_GRID))
    train_size: int = 90
    data: Optional[str] = None
    max_missing_hours: int = 0
    workers: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def dim(self) -> int:
        return self.d if self.d is not None else synth.STRUCTURAL_DIM[self.model]

    def validate(self) -> None:
        def bad(msg):
            raise InvalidArgumentError(f"config: {msg}")

        if self.command not in COMMANDS:
            bad(f"command must be one of {COMMANDS}")
        if self.model not in synth.MODEL_IDS:
            bad(f"model must be one of {synth.MODEL_IDS}")
        if self.method not in METHODS:
            bad(f"method must be one of {METHODS}")
        if self.reps < 1:
            bad("reps must be >= 1")
        if self.workers < 1:
            bad("workers must be >= 1")
        for name in ("n", "H", "grid_points", "block_size", "basis_size", "train_size"):
            if getattr(self, name) <= 0:
                bad(f"{name} must be positive")
        if self.d is not None and self.d < 1:
            bad("d must be positive")
        if self.noise_var < 0:
            bad("noise_var must be nonnegative")
        if self.t <= 0:
            bad("t must be positive")
        for name in ("m_grid", "rho_grid", "n_list", "d_grid"):
            values = getattr(self, name)
            if not values:
                bad(f"{name} must be nonempty")
            if any(not v > 0 for v in values):
                bad(f"{name} entries must be positive")
        if list(self.n_list) != sorted(self.n_list):
            bad("n_list must be ascending")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: List[dict]
    summary: List[dict]
    row_columns: List[str]
    summary_columns: List[str]
    extra: Dict[str, object] = field(default_factory=dict)


def _status(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def _mean_se(values: List[float]):
    if not values:
        return None, None
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, None
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def _map(fn, tasks, workers: int):
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _grid_values(cfg: ExperimentConfig) -> List[float]:
    return list(cfg.rho_grid) if cfg.method == "rfsir" else [int(m) for m in cfg.m_grid]


def _sweep_replicate(task) -> List[dict]:
    cfg, rep = task
    grid = make_grid(cfg.grid_points)
    values = _grid_values(cfg)
    param = "rho" if cfg.method == "rfsir" else "m"
    d = cfg.dim
    rows = []
    try:
        ds = synth.generate(cfg.model, cfg.n, cfg.seed, noise_var=cfg.noise_var, grid=grid, rep=rep)
        basis = ds.coordinate_basis()
        if cfg.method == "fsfir":
            solver = sdr.FsfirSolver(ds.X, ds.Y, max(values), block=cfg.block_size)
        elif cfg.method == "tfsir":
            solver = sdr.TfsirSolver(ds.X, ds.Y, cfg.H, max(values))
        else:
            solver = sdr.RfsirSolver(ds.X, ds.Y, cfg.H, cfg.basis_size)
    except Exception as exc:  # noqa: BLE001 - recorded per replicate
        solver, prep_error = None, _status(exc)
    for v in values:
        row = {"model": cfg.model, "method": cfg.method, "param": param,
               "grid_value": v, "rep": rep, "error": None, "status": "ok"}
        if solver is None:
            row["status"] = prep_error
        else:
            try:
                model = solver.fit(v, d)
                row["error"] = subspace_distance(ds.truth, model.directions, basis)
                if model.warnings:
                    row["status"] = "ok: degenerate spectrum"
            except Exception as exc:  # noqa: BLE001
                row["status"] = _status(exc)
        rows.append(row)
    return rows


def _summarize(rows, key: str, extra_keys=()) -> List[dict]:
    groups: Dict[object, List[dict]] = {}
    for r in rows:
        groups.setdefault(r[key], []).append(r)
    summary = []
    for k, members in groups.items():
        errs = [r["error"] for r in members if r["error"] is not None]
        mean, se = _mean_se(errs)
        entry = {key: k}
        for e in extra_keys:
            entry[e] = members[0][e]
        entry.update({
            "mean_error": mean,
            "se_error": se,
            "n_ok": len(errs),
            "n_failed": len(members) - len(errs),
            "failure_fraction": (len(members) - len(errs)) / len(members),
        })
        summary.append(entry)
    return summary


def synth_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Subspace error of one method on one model over its tuning grid."""
    tasks = [(cfg, rep) for rep in range(cfg.reps)]
    rows = [r for chunk in _map(_sweep_replicate, tasks, cfg.workers) for r in chunk]
    summary = _summarize(rows, "grid_value", extra_keys=("model", "method", "param"))
    means = [s["mean_error"] for s in summary]
    valid = [i for i, m in enumerate(means) if m is not None]
    best = min(valid, key=lambda i: means[i]) if valid else None
    for i, s in enumerate(summary):
        s["is_min"] = i == best
    return ExperimentResult(
        cfg,
        rows,
        summary,
        ["model", "method", "param", "grid_value", "rep", "error", "status"],
        ["model", "method", "param", "grid_value", "mean_error", "se_error",
         "n_ok", "n_failed", "failure_fraction", "is_min"],
        {"min_mean_error": means[best] if best is not None else None,
         "argmin": summary[best]["grid_value"] if best is not None else None},
    )


def m_rule(n: int, t: float = 1.0, gamma: float = 0.1, alpha1: float = 1.1,
           alpha2: float = 2.0, d: int = 1) -> int:
    """``round(t * n^((1 - 2 gamma) / (2 alpha1 + 2 alpha2 + 1)))``, at least ``d``."""
    expo = (1.0 - 2.0 * gamma) / (2.0 * alpha1 + 2.0 * alpha2 + 1.0)
    m = int(math.floor(t * n**expo + 0.5))
    return max(d, min(m, n - 1))


def _convergence_replicate(task) -> dict:
    cfg, n, m, rep = task
    grid = make_grid(cfg.grid_points)
    row = {"model": cfg.model, "method": cfg.method, "n": n, "m": m, "rep": rep,
           "error": None, "status": "ok"}
    try:
        ds = synth.generate(cfg.model, n, cfg.seed, noise_var=cfg.noise_var, grid=grid, rep=(rep, n))
        if cfg.method == "fsfir":
            model = sdr.fsfir_fit(ds.X, ds.Y, m, cfg.dim, block=cfg.block_size)
        else:
            model = sdr.tfsir_fit(ds.X, ds.Y, m, cfg.H, cfg.dim)
        row["error"] = subspace_distance(ds.truth, model.directions, ds.coordinate_basis())
    except Exception as exc:  # noqa: BLE001
        row["status"] = _status(exc)
    return row


def convergence_study(cfg: ExperimentConfig) -> ExperimentResult:
    """Mean error per sample size with ``m`` from the rate-optimal rule."""
    if cfg.method == "rfsir":
        raise InvalidArgumentError("convergence study uses a truncation level; rfsir has none")
    ms = {n: m_rule(n, cfg.t, cfg.gamma, cfg.alpha1, cfg.alpha2, cfg.dim) for n in cfg.n_list}
    tasks = [(cfg, n, ms[n], rep) for n in cfg.n_list for rep in range(cfg.reps)]
    rows = _map(_convergence_replicate, tasks, cfg.workers)
    summary = _summarize(rows, "n", extra_keys=("model", "method", "m"))
    means = [s["mean_error"] for s in summary]
    if len(summary) < 2:
        trend = None
    else:
        trend = all(a is not None and b is not None and b < a for a, b in zip(means, means[1:]))
    for s in summary:
        s["strictly_decreasing"] = trend
    return ExperimentResult(
        cfg,
        rows,
        summary,
        ["model", "method", "n", "m", "rep", "error", "status"],
        ["model", "method", "n", "m", "mean_error", "se_error", "n_ok", "n_failed",
         "failure_fraction", "strictly_decreasing"],
        {"strictly_decreasing": trend},
    )


def load_bike_dataset(path, grid_points: int = 256, max_missing_hours: int = 0):
    records, parse_report = parse_bike_csv(path)
    X, Y, report = build_saturday_dataset(records, make_grid(grid_points), max_missing_hours)
    return X, Y, report, parse_report


def _bike_replicate(task) -> List[dict]:
    cfg, X, Y, rep = task
    n = len(X)
    rng = synth.replicate_rng(cfg.seed, rep)
    perm = rng.permutation(n)
    train, test = perm[: cfg.train_size], perm[cfg.train_size:]
    cells = [(d, m) for d in cfg.d_grid for m in cfg.m_grid if m >= d]
    rows = []
    try:
        solver = sdr.FsfirSolver(X.take(train), Y[train], max(cfg.m_grid), block=cfg.block_size)
    except Exception as exc:  # noqa: BLE001
        solver, prep_error = None, _status(exc)
    x_tr, x_te = X.take(train), X.take(test)
    y_tr, y_te = Y[train, 0], Y[test, 0]
    offset = float(np.mean(y_tr))
    for d, m in cells:
        row = {"rep": rep, "d": d, "m": m, "mse": None, "status": "ok"}
        if solver is None:
            row["status"] = prep_error
            rows.append(row)
            continue
        try:
            model = solver.fit(m, d)
            z_tr, z_te = sdr.reduce(model, x_tr), sdr.reduce(model, x_te)
            gp = gpr_fit(z_tr, y_tr - offset)
            pred = gpr_predict(gp, z_te) + offset
            row["mse"] = float(np.mean((pred - y_te) ** 2))
        except Exception as exc:  # noqa: BLE001
            row["status"] = _status(exc)
        rows.append(row)
    return rows


def bike_eval(cfg: ExperimentConfig, data_path=None) -> ExperimentResult:
    """Out-of-sample GPR error on FSFIR-reduced Saturday temperature curves."""
    path = data_path or cfg.data
    if path is None:
        raise InvalidArgumentError("bike-eval needs a data path")
    X, Y, report, parse_report = load_bike_dataset(path, cfg.grid_points, cfg.max_missing_hours)
    if len(X) <= cfg.train_size:
        raise InvalidArgumentError(
            f"only {len(X)} Saturdays retained; need more than train_size={cfg.train_size}"
        )
    tasks = [(cfg, X, Y, rep) for rep in range(cfg.reps)]
    rows = [r for chunk in _map(_bike_replicate, tasks, cfg.workers) for r in chunk]
    summary = []
    for d in cfg.d_grid:
        for m in cfg.m_grid:
            if m < d:
                summary.append({"d": d, "m": m, "mean_mse": None, "se_mse": None,
                                "n_ok": None, "n_failed": None})
                continue
            vals = [r["mse"] for r in rows if r["d"] == d and r["m"] == m and r["mse"] is not None]
            n_cell = sum(1 for r in rows if r["d"] == d and r["m"] == m)
            mean, se = _mean_se(vals)
            summary.append({"d": d, "m": m, "mean_mse": mean, "se_mse": se,
                            "n_ok": len(vals), "n_failed": n_cell - len(vals)})
    extra = {
        "retained_saturdays": len(report.retained),
        "expected_saturdays": 102,
        "excluded_saturdays": [[str(day), why] for day, why in report.excluded],
        "rejected_rows": [[line, why] for line, why in parse_report.rejected],
    }
    if len(report.retained) != 102:
        extra["discrepancy"] = (
            f"retained {len(report.retained)} Saturdays, expected 102; "
            "see excluded_saturdays"
        )
    return ExperimentResult(
        cfg,
        rows,
        summary,
        ["rep", "d", "m", "mse", "status"],
        ["d", "m", "mean_mse", "se_mse", "n_ok", "n_failed"],
        extra,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns: List[str], rows: List[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def table_layout(result: ExperimentResult) -> str:
    """Bike-eval summary as a d-by-m grid of ``mean (se)``, blanks where m < d."""
    cfg = result.config
    cells = {(s["d"], s["m"]): s for s in result.summary}
    width = 16
    lines = ["d \\ m".ljust(6) + "".join(str(m).rjust(width) for m in cfg.m_grid)]
    for d in cfg.d_grid:
        parts = []
        for m in cfg.m_grid:
            s = cells[(d, m)]
            if s["mean_mse"] is None:
                parts.append("".rjust(width))
            elif s["se_mse"] is None:
                parts.append(f"{s['mean_mse']:.3f}".rjust(width))
            else:
                parts.append(f"{s['mean_mse']:.3f} ({s['se_mse']:.4f})".rjust(width))
        lines.append(str(d).ljust(6) + "".join(parts))
    return "\n".join(lines) + "\n"


def output_paths(out) -> Dict[str, Path]:
    out = Path(out)
    stem = out.with_suffix("")
    return {
        "rows": out,
        "summary": stem.with_name(stem.name + ".summary.csv"),
        "config": stem.with_name(stem.name + ".config.json"),
        "table": stem.with_name(stem.name + ".table.txt"),
    }


def write_result(result: ExperimentResult, out) -> Dict[str, Path]:
    """Per-replicate CSV, summary CSV and JSON sidecar (plus the table for bike-eval)."""
    paths = output_paths(out)
    paths["rows"].parent.mkdir(parents=True, exist_ok=True)
    _write_csv(paths["rows"], result.row_columns, result.rows)
    _write_csv(paths["summary"], result.summary_columns, result.summary)
    cfg = asdict(result.config)
    cfg["out"] = str(out)
    sidecar = {"config": cfg, "result": result.extra}
    with open(paths["config"], "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written = {k: paths[k] for k in ("rows", "summary", "config")}
    if result.config.command == "bike-eval":
        paths["table"].write_text(table_layout(result))
        written["table"] = paths["table"]
    return written


RUNNERS = {"synth-sweep": synth_sweep, "bike-eval": bike_eval, "convergence": convergence_study}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.command](cfg)
