"""Cycle segmentation, per-cycle work, force/velocity statistics, cut
frequency and slice-thickness statistics over recorded traces.

The wrist point is the handle point p2; forces are the wrist sensor
readings (force applied by the robot on the environment).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

CUTTING, RAISING = 0, 1
WRIST_COLUMNS = ("p2_x", "p2_y", "p2_z")
FORCE_COLUMNS = ("Fx", "Fy", "Fz")
CYCLE_COLUMNS = ["cycle", "t_start", "t_end", "F_avg", "F_peak", "v_avg", "v_peak", "work"]


class MetricsError(ValueError):
    pass


@dataclass
class Trace:
    columns: list[str]
    data: np.ndarray

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.size == 0:
            self.data = np.zeros((0, len(self.columns)))
        if self.data.shape[1] != len(self.columns):
            raise MetricsError(f"trace has {self.data.shape[1]} columns, header names {len(self.columns)}")
        t = self.data[:, self.columns.index("t")] if "t" in self.columns else None
        if t is None:
            raise MetricsError("trace has no t column")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise MetricsError("trace time must be strictly increasing")

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise MetricsError(f"trace has no {name!r} column") from None

    def columns_of(self, names) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names]) if len(self) else np.zeros((0, len(names)))

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def phase(self) -> np.ndarray:
        return np.rint(self.column("phase")).astype(int)

    @property
    def wrist(self) -> np.ndarray:
        return self.columns_of(WRIST_COLUMNS)

    @property
    def force(self) -> np.ndarray:
        return self.columns_of(FORCE_COLUMNS)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self) > 1 else 0.0

    def subsample(self, every: int) -> "Trace":
        return Trace(list(self.columns), self.data[::every].copy())

    @classmethod
    def from_result(cls, result) -> "Trace":
        return cls(list(result.columns), result.trace)

    @classmethod
    def from_csv(cls, path) -> "Trace":
        text = Path(path).read_text()
        header = text.splitlines()[0].split(",") if text.strip() else []
        if not header or header == [""]:
            raise MetricsError(f"{path}: empty trace file")
        rows = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        return cls(header, rows.reshape(-1, len(header)) if rows.size else np.zeros((0, len(header))))


# ---------------------------------------------------------------------------
# segmentation


def _phase_array(trace_or_phase) -> np.ndarray:
    if isinstance(trace_or_phase, Trace):
        return trace_or_phase.phase
    return np.asarray(trace_or_phase, dtype=int)


def cut_entries(trace_or_phase) -> np.ndarray:
    """Sample indices where the cutting phase begins. A trace that starts in
    cutting opens its first cycle at index 0."""
    ph = _phase_array(trace_or_phase)
    if ph.size == 0:
        return np.zeros(0, dtype=int)
    idx = np.flatnonzero((ph[1:] == CUTTING) & (ph[:-1] == RAISING)) + 1
    if ph[0] == CUTTING:
        idx = np.concatenate([[0], idx])
    return idx


def segment_cycles(trace_or_phase) -> list[range]:
    """Complete cycles, each from one entry into cutting up to the next; the
    open segment after the last entry is dropped."""
    e = cut_entries(trace_or_phase)
    return [range(int(a), int(b)) for a, b in zip(e[:-1], e[1:])]


def cut_raise_count(trace_or_phase) -> int:
    ph = _phase_array(trace_or_phase)
    return int(np.count_nonzero((ph[1:] == RAISING) & (ph[:-1] == CUTTING)))


# ---------------------------------------------------------------------------
# work, forces, velocities


def work_sum(forces, positions) -> float:
    """Left Riemann sum of ``F(t_i) . (x(t_{i+1}) - x(t_i))`` over consecutive samples."""
    F = np.atleast_2d(np.asarray(forces, dtype=float))
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    if F.shape != x.shape:
        raise MetricsError("forces and positions must have the same shape")
    if len(x) < 2:
        raise MetricsError("work needs at least two samples")
    return float(np.sum(F[:-1] * np.diff(x, axis=0)))


def cycle_work(trace: Trace, cycle: range) -> float:
    """Work over a cycle. The step out of the last sample uses the first
    sample of the next cycle, so cycle works add up to the sum over the
    concatenated samples."""
    stop = min(cycle.stop + 1, len(trace))
    sl = slice(cycle.start, stop)
    return work_sum(trace.force[sl], trace.wrist[sl])


def norm_stats(vectors) -> tuple[float, float]:
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.size == 0:
        raise MetricsError("statistics need at least one sample")
    n = np.linalg.norm(v, axis=1)
    return float(n.mean()), float(n.max())


def cutting_samples(trace: Trace, cycle: range) -> np.ndarray:
    idx = np.arange(cycle.start, cycle.stop)
    return idx[trace.phase[idx] == CUTTING]


def wrist_velocity(trace: Trace) -> np.ndarray:
    x = trace.wrist
    if len(x) < 2:
        return np.zeros_like(x)
    return np.gradient(x, trace.t, axis=0)


def force_stats(trace: Trace, samples) -> tuple[float, float]:
    """Mean and peak wrist-force magnitude over the given samples."""
    return norm_stats(trace.force[np.asarray(samples, dtype=int)])


def velocity_stats(trace: Trace, samples, velocity: np.ndarray | None = None) -> tuple[float, float]:
    v = wrist_velocity(trace) if velocity is None else velocity
    return norm_stats(v[np.asarray(samples, dtype=int)])


def cut_frequency_from_counts(n_switch: int, duration: float) -> float:
    if n_switch < 2:
        raise MetricsError(f"cut frequency needs at least two cut-to-raise transitions, got {n_switch}")
    if not duration > 0:
        raise MetricsError("cut frequency needs a positive duration")
    return (n_switch - 1) / duration


def cut_frequency(trace: Trace) -> float:
    """``(N_switch - 1) / T`` with N_switch the cut-to-raise transitions and
    T the full trace duration."""
    return cut_frequency_from_counts(cut_raise_count(trace), trace.duration)


@dataclass(frozen=True)
class CycleMetrics:
    cycle: int
    t_start: float
    t_end: float
    F_avg: float
    F_peak: float
    v_avg: float
    v_peak: float
    work: float


def cycle_table(trace: Trace) -> list[CycleMetrics]:
    t = trace.t
    vel = wrist_velocity(trace)
    rows = []
    for j, cyc in enumerate(segment_cycles(trace)):
        cut = cutting_samples(trace, cyc)
        if cut.size == 0:
            cut = np.arange(cyc.start, cyc.stop)
        fa, fp = force_stats(trace, cut)
        va, vp = velocity_stats(trace, cut, vel)
        t_end = t[min(cyc.stop, len(trace) - 1)]
        rows.append(CycleMetrics(j, float(t[cyc.start]), float(t_end), fa, fp, va, vp, cycle_work(trace, cyc)))
    return rows


# ---------------------------------------------------------------------------
# thickness


@dataclass(frozen=True)
class ThicknessStats:
    mean: float
    var_between: float
    var_within: float
    per_slice: tuple[float, ...]


def thickness_stats(measurements) -> ThicknessStats:
    """Mean thickness, between-slice variance (consistency) and the mean of
    the within-slice variances (evenness), from four readings per slice."""
    m = np.asarray(measurements, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] != 4:
        raise MetricsError("thickness readings must be an (N, 4) array with N >= 1")
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise MetricsError("thickness readings must be finite and positive")
    per = m.mean(axis=1)
    mean = per.mean()
    between = np.mean((per - mean) ** 2)
    within = np.mean(np.mean((m - per[:, None]) ** 2, axis=1))
    return ThicknessStats(float(mean), float(between), float(within), tuple(map(float, per)))


def thickness_readings(cut_paths: dict, levels: int = 4) -> np.ndarray:
    """Per-slice readings from cut-path positions: reading j of slice i is the
    spacing between the paths of consecutive slices at depth level j."""
    keys = sorted(k for k, v in cut_paths.items() if len(v) >= levels)
    rows = []
    for a, b in zip(keys[:-1], keys[1:]):
        if b == a + 1:
            rows.append(np.subtract(cut_paths[b][:levels], cut_paths[a][:levels]))
    return np.array(rows).reshape(-1, levels)


# ---------------------------------------------------------------------------
# reports


def summarize(trace: Trace, thickness=None, cycles: list[CycleMetrics] | None = None) -> dict:
    cycles = cycle_table(trace) if cycles is None else cycles
    out: dict[str, float | int | str] = {
        "duration": trace.duration,
        "samples": len(trace),
        "cut_raise_transitions": cut_raise_count(trace) if len(trace) else 0,
        "cycles": len(cycles),
    }
    try:
        out["f_cut"] = cut_frequency(trace)
    except MetricsError:
        out["f_cut"] = math.nan
    if cycles:
        for key in ("F_avg", "F_peak", "v_avg", "v_peak", "work"):
            vals = np.array([getattr(c, key) for c in cycles])
            out[f"mean_{key}"] = float(vals.mean())
        out["max_F_peak"] = float(max(c.F_peak for c in cycles))
        # the first cycle starts from rest and is left out of the period
        per = np.diff([c.t_start for c in cycles[1:]])
        if per.size > 1:
            out["period_mean"] = float(per.mean())
            out["period_cv"] = float(per.std() / per.mean())
    if thickness is not None:
        out["thickness_mean"] = thickness.mean
        out["thickness_var_between"] = thickness.var_between
        out["thickness_var_within"] = thickness.var_within
    return out


def format_report(summary: dict) -> str:
    lines = []
    for k, v in summary.items():
        lines.append(f"{k} = {v:.10g}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            for conv in (int, float, str):
                try:
                    out[k] = conv(v)
                    break
                except ValueError:
                    continue
    return out


def write_cycle_csv(cycles: list[CycleMetrics], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CYCLE_COLUMNS)
        for c in cycles:
            d = asdict(c)
            w.writerow([d["cycle"]] + [f"{d[k]:.10g}" for k in CYCLE_COLUMNS[1:]])
