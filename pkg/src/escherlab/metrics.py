"""Estimator-variance statistics, convergence series and run output files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .games import UsageError

SERIES_COLUMNS = ("iteration", "infosets_visited_cumulative", "exploitability", "iteration_variance")


class EstimateLog:
    """Every instantaneous regret estimate, grouped by iteration (1-based)."""

    def __init__(self):
        self._chunks: dict[int, list[np.ndarray]] = {}
        self._closed: set[int] = set()

    def record(self, t: int, estimates) -> None:
        if t in self._closed:
            raise UsageError(f"iteration {t} is already closed")
        self._chunks.setdefault(t, []).append(np.asarray(estimates, dtype=np.float64).ravel())

    def close(self, t: int) -> None:
        self._chunks.setdefault(t, [])
        self._closed.add(t)

    def iterations(self) -> list[int]:
        return sorted(self._chunks)

    def is_complete(self, t: int) -> bool:
        return t in self._closed

    def estimates(self, t: int) -> np.ndarray:
        chunks = self._chunks.get(t)
        if not chunks:
            return np.zeros(0)
        return np.concatenate(chunks)

    def count(self, t: int) -> int:
        return sum(c.size for c in self._chunks.get(t, ()))

    def __len__(self) -> int:
        return len(self._chunks)


def population_variance(values) -> float | None:
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        return None
    return float(np.mean((x - x.mean()) ** 2))


def iteration_variance(log: EstimateLog, t: int) -> float | None:
    """Population variance of iteration t's estimates; None with fewer than 2."""
    return population_variance(log.estimates(t))


@dataclass(frozen=True)
class VarianceReport:
    window: int
    per_iteration: tuple[float | None, ...]
    mean: float | None
    partial: bool

    def __float__(self) -> float:
        return math.nan if self.mean is None else self.mean


def windowed_variance(log: EstimateLog, window: int = 5) -> VarianceReport:
    """Mean of the per-iteration variances over the first ``window`` complete iterations."""
    if window < 1:
        raise UsageError(f"variance window must be >= 1, got {window}")
    complete = [t for t in log.iterations() if log.is_complete(t)][:window]
    per = tuple(iteration_variance(log, t) for t in complete)
    defined = [v for v in per if v is not None]
    mean = float(np.mean(defined)) if defined else None
    return VarianceReport(window, per, mean, partial=len(defined) < window)


@dataclass(frozen=True)
class SeriesRow:
    iteration: int
    infosets_visited_cumulative: int
    exploitability: float | None = None
    iteration_variance: float | None = None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def series_to_csv(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for row in series:
        w.writerow([_fmt(getattr(row, c)) for c in SERIES_COLUMNS])
    return buf.getvalue()


def _opt_float(s: str) -> float | None:
    return float(s) if s != "" else None


def read_series(text_or_path) -> list[SeriesRow]:
    """Parse a series file (or its text) back into rows."""
    if isinstance(text_or_path, Path) or (isinstance(text_or_path, str) and "\n" not in text_or_path
                                          and os.path.exists(text_or_path)):
        text = Path(text_or_path).read_text()
    else:
        text = text_or_path
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != SERIES_COLUMNS:
        raise UsageError(f"not a series file: header {header!r}")
    return [
        SeriesRow(int(r[0]), int(r[1]), _opt_float(r[2]), _opt_float(r[3]))
        for r in reader if r
    ]


def code_version() -> str:
    """``git describe`` of the source checkout, or the package version."""
    from . import __version__

    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"], cwd=here, capture_output=True, text=True, timeout=5
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class RunManifest:
    config: dict
    seed: int
    code_version: str = field(default_factory=code_version)
    started: str = ""
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def emit_run_outputs(series, manifest: RunManifest, path) -> dict[str, Path]:
    """Write ``series.csv`` and ``manifest.json`` into directory ``path``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        series_path = out / "series.csv"
        manifest_path = out / "manifest.json"
        series_path.write_text(series_to_csv(series))
        manifest.outputs = {"series": series_path.name, "manifest": manifest_path.name}
        manifest_path.write_text(manifest.to_json() + "\n")
    except OSError as e:
        raise OSError(f"cannot write run outputs to {out}: {e}") from e
    return {"series": series_path, "manifest": manifest_path}
