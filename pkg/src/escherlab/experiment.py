"""Experiment grids: config parsing, per-run execution and roll-up summaries.

Config files are YAML. A minimal one::

    game: kuhn_poker
    algo: escher
    iterations: 1000

Top-level solver keys act as defaults for every entry of ``runs`` (or for
the runs implied by ``algo``/``algos``). ``dump_config`` writes the fully
expanded form, which parses back to an equal spec.
"""

from __future__ import annotations

import csv
import io
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from .games import GAMES, ConfigurationError, GameSpec, load_game
from .metrics import RunManifest, emit_run_outputs, windowed_variance
from .policy import SamplingPolicySpec
from .solvers import ALGORITHMS, LearnedValueSpec, Solver, SolverConfig

SOLVER_KEYS = (
    "algorithm", "iterations", "trajectories_per_update", "sampling", "os_exploration_eps", "averaging",
    "oracle_noise", "noise_redraw", "learned_value", "use_bootstrap_baseline", "use_reach_weighting",
    "value_source",
)
TOP_KEYS = {
    "game", "games", "algo", "algos", "runs", "seed", "seeds", "eval_every", "variance_window", "out",
    "workers", "log_rate", *SOLVER_KEYS,
}
RUN_KEYS = {"name", *SOLVER_KEYS}


@dataclass(frozen=True)
class RunSpec:
    name: str
    config: SolverConfig


@dataclass(frozen=True)
class ExperimentSpec:
    games: tuple[GameSpec, ...]
    runs: tuple[RunSpec, ...]
    seeds: tuple[int, ...] = (0,)
    eval_every: int = 100
    variance_window: int = 5
    out: str = "runs"
    workers: int = 1
    log_rate: float = 1.0

    def __post_init__(self):
        if not self.games:
            raise ConfigurationError("games: at least one game is required")
        if not self.runs:
            raise ConfigurationError("runs: at least one algorithm is required")
        if not self.seeds:
            raise ConfigurationError("seeds: must be non-empty")
        if self.eval_every < 1:
            raise ConfigurationError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.variance_window < 1:
            raise ConfigurationError(f"variance_window must be >= 1, got {self.variance_window}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if not 0.0 < self.log_rate <= 1.0:
            raise ConfigurationError(f"log_rate must be in (0, 1], got {self.log_rate}")
        names = [r.name for r in self.runs]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"runs: names must be unique, got {names}")
        for g in self.games:
            load_game(g)  # validates name and parameters

    def cells(self) -> list[tuple[GameSpec, RunSpec, int]]:
        return [(g, r, s) for g in self.games for r in self.runs for s in self.seeds]


# ---- parsing ---------------------------------------------------------------

def _check_keys(d: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _typed(field_name: str, value, kind):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{field_name}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{field_name}: expected a number, got {value!r}")
        return float(value)
    if kind is bool:
        if value is not None and not isinstance(value, bool):
            raise ConfigurationError(f"{field_name}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if value is not None and not isinstance(value, str):
            raise ConfigurationError(f"{field_name}: expected a string, got {value!r}")
        return value
    return value


_SOLVER_TYPES = {
    "algorithm": str, "iterations": int, "trajectories_per_update": int, "os_exploration_eps": float,
    "averaging": str, "oracle_noise": float, "noise_redraw": str, "use_bootstrap_baseline": bool,
    "use_reach_weighting": bool, "value_source": str,
}


def _parse_game(entry) -> GameSpec:
    if isinstance(entry, str):
        name, params = entry, {}
    elif isinstance(entry, dict):
        _check_keys(entry, {"name", "params"}, "game")
        if "name" not in entry:
            raise ConfigurationError("game.name: required")
        name, params = entry["name"], entry.get("params") or {}
        if not isinstance(params, dict):
            raise ConfigurationError("game.params: expected a mapping")
    else:
        raise ConfigurationError(f"game: expected a name or a mapping, got {entry!r}")
    if name not in GAMES:
        raise ConfigurationError(f"game: unknown game {name!r}; choose from {sorted(GAMES)}")
    spec = GameSpec(name, dict(params))
    try:
        load_game(spec)
    except ConfigurationError as e:
        raise ConfigurationError(f"game.params: {e}") from None
    return spec


def _parse_sampling(value) -> SamplingPolicySpec:
    if value is None or value == "uniform":
        return SamplingPolicySpec()
    if isinstance(value, dict):
        _check_keys(value, {"kind", "epsilon"}, "sampling")
        kind = value.get("kind", "uniform")
        if kind not in ("uniform", "epsilon"):
            raise ConfigurationError(f"sampling.kind: expected uniform or epsilon in config files, got {kind!r}")
        return SamplingPolicySpec(kind, _typed("sampling.epsilon", value.get("epsilon", 0.6), float))
    raise ConfigurationError(f"sampling: expected 'uniform' or a mapping, got {value!r}")


def _parse_learned(value) -> LearnedValueSpec | None:
    if value is None or value is False:
        return None
    if value is True:
        return LearnedValueSpec()
    if not isinstance(value, dict):
        raise ConfigurationError(f"learned_value: expected a mapping, got {value!r}")
    _check_keys(value, {"rollouts", "exploration_mix"}, "learned_value")
    return LearnedValueSpec(
        _typed("learned_value.rollouts", value.get("rollouts", 1000), int),
        _typed("learned_value.exploration_mix", value.get("exploration_mix", 0.01), float),
    )


def _solver_config(d: dict, where: str) -> SolverConfig:
    kw = {}
    for key in SOLVER_KEYS:
        if key not in d:
            continue
        value = d[key]
        if key == "sampling":
            kw[key] = _parse_sampling(value)
        elif key == "learned_value":
            kw[key] = _parse_learned(value)
        else:
            kw[key] = _typed(f"{where}{key}", value, _SOLVER_TYPES[key])
    try:
        return SolverConfig(**kw)
    except ConfigurationError as e:
        raise ConfigurationError(f"{where}{e}") from None


def spec_from_dict(d: dict) -> ExperimentSpec:
    if not isinstance(d, dict):
        raise ConfigurationError("config: expected a mapping at the top level")
    _check_keys(d, TOP_KEYS, "config")
    if "game" in d and "games" in d:
        raise ConfigurationError("games: give either 'game' or 'games', not both")
    game_entries = d.get("games", [d["game"]] if "game" in d else None)
    if not game_entries:
        raise ConfigurationError("game: required")
    if not isinstance(game_entries, list):
        raise ConfigurationError("games: expected a list")
    games = tuple(_parse_game(g) for g in game_entries)

    defaults = {k: d[k] for k in SOLVER_KEYS if k in d}
    if sum(k in d for k in ("algo", "algos", "runs")) > 1:
        raise ConfigurationError("runs: give only one of 'algo', 'algos' or 'runs'")
    if "runs" in d:
        entries = d["runs"]
        if not isinstance(entries, list) or not entries:
            raise ConfigurationError("runs: expected a non-empty list")
    else:
        algos = d.get("algos", [d["algo"]] if "algo" in d else [defaults.get("algorithm", "escher")])
        if isinstance(algos, str):
            algos = [a.strip() for a in algos.split(",") if a.strip()]
        if not isinstance(algos, list):
            raise ConfigurationError("algos: expected a list")
        for a in algos:
            if a not in ALGORITHMS:
                raise ConfigurationError(f"algo: expected one of {ALGORITHMS}, got {a!r}")
        entries = [{"algorithm": a} for a in algos]
    runs = []
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigurationError(f"runs[{k}]: expected a mapping")
        _check_keys(entry, RUN_KEYS, f"runs[{k}]")
        merged = {**defaults, **entry}
        cfg = _solver_config(merged, f"runs[{k}]." if "runs" in d else "")
        runs.append(RunSpec(entry.get("name") or cfg.algorithm, cfg))

    if "seed" in d and "seeds" in d:
        raise ConfigurationError("seeds: give either 'seed' or 'seeds', not both")
    seeds = d.get("seeds", [d["seed"]] if "seed" in d else [0])
    if not isinstance(seeds, list):
        raise ConfigurationError("seeds: expected a list of integers")
    seeds = tuple(_typed("seeds", s, int) for s in seeds)
    return ExperimentSpec(
        games=games,
        runs=tuple(runs),
        seeds=seeds,
        eval_every=_typed("eval_every", d.get("eval_every", 100), int),
        variance_window=_typed("variance_window", d.get("variance_window", 5), int),
        out=str(_typed("out", d.get("out", "runs"), str)),
        workers=_typed("workers", d.get("workers", 1), int),
        log_rate=_typed("log_rate", d.get("log_rate", 1.0), float),
    )


def parse_config(text: str) -> ExperimentSpec:
    """Parse a YAML experiment config into a validated spec with defaults filled."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"config: not valid YAML: {e}") from None
    return spec_from_dict(data or {})


def _config_dict(cfg: SolverConfig) -> dict:
    out = {}
    for f in fields(SolverConfig):
        if f.name in ("seed", "track_true_regret"):
            continue
        v = getattr(cfg, f.name)
        if f.name == "sampling":
            v = "uniform" if v.kind == "uniform" else {"kind": v.kind, "epsilon": v.epsilon}
        elif f.name == "learned_value":
            v = None if v is None else asdict(v)
        out[f.name] = v
    return out


def spec_to_dict(spec: ExperimentSpec) -> dict:
    return {
        "games": [{"name": g.name, "params": dict(g.params)} for g in spec.games],
        "runs": [{"name": r.name, **_config_dict(r.config)} for r in spec.runs],
        "seeds": list(spec.seeds),
        "eval_every": spec.eval_every,
        "variance_window": spec.variance_window,
        "out": spec.out,
        "workers": spec.workers,
        "log_rate": spec.log_rate,
    }


def dump_config(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False)


# ---- execution -------------------------------------------------------------

def game_label(g: GameSpec) -> str:
    if not g.params:
        return g.name
    parts = []
    for k, v in sorted(g.params.items()):
        v = "-".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v)
        parts.append(f"{k}={v}")
    return g.name + "_" + "_".join(parts)


def run_dir(spec: ExperimentSpec, g: GameSpec, run: RunSpec, seed: int) -> Path:
    return Path(spec.out) / run.name / game_label(g) / f"seed_{seed}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def execute_run(spec: ExperimentSpec, g: GameSpec, run: RunSpec, seed: int) -> dict:
    """Run one grid cell and write its outputs. Never raises; failures are returned."""
    row = {"game": game_label(g), "run": run.name, "seed": seed, "status": "ok",
           "final_exploitability": None, "windowed_variance": None, "seconds": None, "error": ""}
    started = _now()
    t0 = time.perf_counter()
    try:
        cfg = run.config.with_(seed=seed)
        solver = Solver(load_game(g), cfg, log_rate=spec.log_rate)
        result = solver.run(eval_every=spec.eval_every)
        var = windowed_variance(solver.log, spec.variance_window)
        row["final_exploitability"] = result.final_exploitability
        row["windowed_variance"] = var.mean
        manifest = RunManifest(
            config={"game": {"name": g.name, "params": dict(g.params)}, "run": run.name,
                    **_config_dict(cfg), "eval_every": spec.eval_every,
                    "variance_window": spec.variance_window, "log_rate": spec.log_rate},
            seed=seed,
            started=started,
            finished=_now(),
            summary={"final_exploitability": result.final_exploitability, "windowed_variance": var.mean,
                     "variance_window_partial": var.partial, "infosets_visited": solver.infosets_visited},
        )
        emit_run_outputs(result.series, manifest, run_dir(spec, g, run, seed))
    except Exception as e:  # isolate the cell; siblings keep running
        row["status"] = "failed"
        row["error"] = f"{type(e).__name__}: {e}"
        row["traceback"] = traceback.format_exc()
    row["seconds"] = round(time.perf_counter() - t0, 3)
    return row


def _execute_packed(args):
    return execute_run(*args)


def _mean_std(values) -> str:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    if not vals:
        return "n/a"
    return f"{np.mean(vals):.3g} ± {np.std(vals):.2g}"


def summary_table(spec: ExperimentSpec, rows: list[dict], key: str = "windowed_variance") -> str:
    """Rows = games, columns = runs, cell = mean ± std across seeds."""
    names = [r.name for r in spec.runs]
    games = [game_label(g) for g in spec.games]
    cells = [["game", *names]]
    for gl in games:
        line = [gl]
        for n in names:
            mine = [r for r in rows if r["game"] == gl and r["run"] == n]
            failed = sum(r["status"] != "ok" for r in mine)
            text = _mean_std([r[key] for r in mine if r["status"] == "ok"])
            if failed:
                text += f" ({failed} failed)"
            line.append(text)
        cells.append(line)
    widths = [max(len(c[k]) for c in cells) for k in range(len(cells[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


SUMMARY_COLUMNS = ("game", "run", "seed", "status", "final_exploitability", "windowed_variance", "seconds", "error")


_FULL_PRECISION = ("final_exploitability", "windowed_variance")


def write_summary(spec: ExperimentSpec, rows: list[dict]) -> str:
    """Write summary.csv, summary.txt and the resolved config; return the text table."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow(["" if r.get(c) is None else (format(r[c], ".17g") if c in _FULL_PRECISION else r[c])
                    for c in SUMMARY_COLUMNS])
    (out / "summary.csv").write_text(buf.getvalue())
    text = (
        f"Windowed variance of regret estimates (first {spec.variance_window} iterations), mean ± std over seeds\n\n"
        + summary_table(spec, rows, "windowed_variance")
        + "\nFinal average-policy exploitability, mean ± std over seeds\n\n"
        + summary_table(spec, rows, "final_exploitability")
    )
    (out / "summary.txt").write_text(text)
    (out / "config.yaml").write_text(dump_config(spec))
    return text


@dataclass
class ExperimentResult:
    rows: list[dict] = field(default_factory=list)
    summary: str = ""

    @property
    def ok(self) -> bool:
        return all(r["status"] == "ok" for r in self.rows)

    @property
    def exit_status(self) -> int:
        return 0 if self.ok else 1


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every (game, run, seed) cell, at most ``spec.workers`` at a time."""
    cells = spec.cells()
    jobs = [(spec, g, r, s) for g, r, s in cells]
    workers = min(spec.workers, len(jobs))
    if workers == 1:
        rows = [_execute_packed(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_execute_packed, jobs))
    return ExperimentResult(rows, write_summary(spec, rows))
