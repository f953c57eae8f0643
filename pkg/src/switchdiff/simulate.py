"""
Trajectory simulation for switching diffusions.

X is advanced by Euler-Maruyama; Z switches by thinning a dominating
homogeneous Poisson process of rate ``lam_bar = max(sup lambda_0, sup lambda_1)``.
Candidate times are merged into the Euler grid, so switches happen at
exact candidate times and X is continuous across them.

Randomness: every path draws from its own Philox stream, keyed by
``SeedSequence(seed, spawn_key=(path_index,))``. Path ``i`` of a batch is
therefore identical to ``simulate_path(..., path_index=i)`` and batch
results do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InternalInvariantError, NumericalBlowupError, ParameterRangeError
from .model import SwitchingDiffusionModel

__all__ = [
    "SimParams",
    "SwitchEvent",
    "PathRecord",
    "HitResult",
    "HitBatch",
    "path_rng",
    "simulate_path",
    "simulate_until_hit",
    "simulate_hits",
    "thinning_accept",
    "map_paths",
    "write_path_csv",
    "write_events_csv",
]


@dataclass(frozen=True)
class SimParams:
    """Discretization and reproducibility settings.

    Parameters
    ----------
    dt : float
        Euler step.
    horizon : float
        Maximum simulated time for ``simulate_path``.
    seed : int
        Root seed (any non-negative integer below 2**64).
    record_stride : int
        Keep every k-th grid point of recorded trajectories.
    """

    dt: float = 1e-3
    horizon: float = 10.0
    seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterRangeError(f"must be > 0, got {self.dt!r}", "dt")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ParameterRangeError(f"must be > 0, got {self.horizon!r}", "horizon")
        if self.dt > self.horizon:
            raise ParameterRangeError(f"dt={self.dt!r} exceeds horizon={self.horizon!r}", "dt")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterRangeError(f"must be an integer in [0, 2**64), got {self.seed!r}", "seed")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ParameterRangeError(
                f"must be an integer >= 1, got {self.record_stride!r}", "record_stride"
            )


@dataclass(frozen=True)
class SwitchEvent:
    """A switching time T_n with the state there and the regime entered.

    When a path starts in regime 0 the event list opens with the convention
    marker ``SwitchEvent(0, 0.0, x0, 0)`` (T_0 = 0).
    """

    n: int
    time: float
    x_at: np.ndarray
    new_regime: int

    def __eq__(self, other):
        if not isinstance(other, SwitchEvent):
            return NotImplemented
        return (
            self.n == other.n
            and self.time == other.time
            and self.new_regime == other.new_regime
            and np.array_equal(self.x_at, other.x_at)
        )

    __hash__ = None


@dataclass
class PathRecord:
    times: np.ndarray
    xs: np.ndarray
    zs: np.ndarray
    events: list
    min_abs_x_running: np.ndarray
    censored: bool
    seed: int
    path_index: int = 0
    z0: int = 0

    def __eq__(self, other):
        if not isinstance(other, PathRecord):
            return NotImplemented
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.zs, other.zs)
            and self.events == other.events
            and self.censored == other.censored
            and self.seed == other.seed
            and self.path_index == other.path_index
        )

    __hash__ = None


@dataclass(frozen=True)
class HitResult:
    """Hitting times of one path; ``None`` means censored."""

    tau_m1: float | None
    tau_embedded: float | None
    path_summary: dict = field(default_factory=dict)


@dataclass
class HitBatch:
    """Hitting times for a batch of paths, NaN where censored."""

    tau_m1: np.ndarray
    tau_embedded: np.ndarray
    n_events: np.ndarray
    t_end: np.ndarray
    seed: int


def path_rng(seed, path_index=0):
    """Independent Philox generator for path ``path_index`` under root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


def thinning_accept(lambda_current, lambda_bar, u):
    """Accept a dominating-process candidate: ``u < lambda_current / lambda_bar``."""
    if not lambda_current > 0:
        raise ValueError(f"lambda_current must be > 0, got {lambda_current!r}")
    if lambda_current > lambda_bar:
        raise InternalInvariantError(
            f"dominating rate {lambda_bar!r} below current rate {lambda_current!r}"
        )
    return bool(_kernels.accept(float(lambda_current), float(lambda_bar), float(u)))


def _state(model, x0):
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (model.dim,):
        raise ValueError(f"x0 must have shape ({model.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    return x


def _regime(z0):
    if z0 not in (0, 1):
        raise ValueError(f"z0 must be 0 or 1, got {z0!r}")
    return int(z0)


def simulate_path(model: SwitchingDiffusionModel, x0, z0, params: SimParams, path_index=0):
    """Simulate (X, Z) on [0, params.horizon].

    Returns
    -------
    PathRecord
        ``events`` includes the T_0 = 0 marker when ``z0 == 0``;
        ``censored`` is True whenever the horizon ended the run.

    Raises
    ------
    NumericalBlowupError
        If X becomes non-finite.
    """
    x = _state(model, x0)
    z0 = _regime(z0)
    drift, rate, sigma, lam_bar = model.kernel_arrays()
    rng = path_rng(params.seed, path_index)
    times, xs, zs, ev_t, ev_x, ev_z, status, t_last = _kernels.path_kernel(
        x, z0, drift, rate, sigma, lam_bar, params.dt, params.horizon,
        int(params.record_stride), rng,
    )
    if status != _kernels.OK:
        raise NumericalBlowupError(t_last)
    events = []
    if z0 == 0:
        events.append(SwitchEvent(0, 0.0, x.copy(), 0))
    # with z0 = 1 the first switch is T_0
    offset = 1 if z0 == 0 else 0
    for i in range(len(ev_t)):
        events.append(SwitchEvent(i + offset, float(ev_t[i]), ev_x[i].copy(), int(ev_z[i])))
    norms = np.sqrt(np.sum(xs * xs, axis=1))
    return PathRecord(
        times=times,
        xs=xs,
        zs=zs.astype(np.int64),
        events=events,
        min_abs_x_running=np.minimum.accumulate(norms),
        censored=True,
        seed=int(params.seed),
        path_index=int(path_index),
        z0=z0,
    )


def _none_if_nan(v):
    return None if math.isnan(v) else float(v)


def simulate_until_hit(model, x0, z0, M1, params: SimParams, max_time, path_index=0,
                       stop_at_m1=False):
    """Run one path until the embedded hitting time of the ball |x| <= M1.

    ``tau_m1`` is the first integration node with |X| <= M1 and
    ``tau_embedded`` the first switching time T_n with |X_{T_n}| <= M1
    (T_0 = 0 counts when ``z0 == 0``). Either is ``None`` if ``max_time``
    came first. ``params.horizon`` is not used.
    """
    if not M1 > 0:
        raise ParameterRangeError(f"must be > 0, got {M1!r}", "M1")
    if not max_time > 0:
        raise ParameterRangeError(f"must be > 0, got {max_time!r}", "max_time")
    x = _state(model, x0)
    z0 = _regime(z0)
    drift, rate, sigma, lam_bar = model.kernel_arrays()
    tau_m1, tau_emb, n_ev, t_end, min_sq, status = _kernels.hit_kernel(
        x, z0, float(M1), drift, rate, sigma, lam_bar, params.dt, float(max_time),
        bool(stop_at_m1), path_rng(params.seed, path_index),
    )
    if status != _kernels.OK:
        raise NumericalBlowupError(t_end)
    summary = {
        "n_events": int(n_ev),
        "t_end": float(t_end),
        "min_abs_x": math.sqrt(min_sq),
        "seed": int(params.seed),
        "path_index": int(path_index),
    }
    return HitResult(_none_if_nan(tau_m1), _none_if_nan(tau_emb), summary)


def map_paths(fn, n_paths, workers=1, chunk=None):
    """Apply ``fn(index) -> tuple`` to ``range(n_paths)``, results in index order.

    ``fn`` must be deterministic in its index; with nogil kernels threads
    run in parallel. Output is identical for any ``workers``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    workers = max(1, int(workers or 1))
    if workers == 1 or n_paths == 1:
        return [fn(i) for i in range(n_paths)]
    chunk = chunk or max(1, n_paths // (4 * workers))
    starts = range(0, n_paths, chunk)

    def run(s):
        return [fn(i) for i in range(s, min(s + chunk, n_paths))]

    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(run, starts))
    return [r for part in parts for r in part]


def simulate_hits(model, x0, z0, M1, params: SimParams, max_time, n_paths, workers=1,
                  stop_at_m1=False):
    """Hitting times for paths ``0 .. n_paths-1``.

    Raises
    ------
    NumericalBlowupError
        If any path blows up; ``last_time`` is that path's last finite time.
    """
    if not M1 > 0:
        raise ParameterRangeError(f"must be > 0, got {M1!r}", "M1")
    if not max_time > 0:
        raise ParameterRangeError(f"must be > 0, got {max_time!r}", "max_time")
    x = _state(model, x0)
    z0 = _regime(z0)
    drift, rate, sigma, lam_bar = model.kernel_arrays()

    def one(i):
        return _kernels.hit_kernel(
            x, z0, float(M1), drift, rate, sigma, lam_bar, params.dt, float(max_time),
            bool(stop_at_m1), path_rng(params.seed, i),
        )

    out = map_paths(one, n_paths, workers)
    for r in out:
        if r[5] != _kernels.OK:
            raise NumericalBlowupError(r[3])
    arr = np.array([r[:4] for r in out], dtype=float)
    return HitBatch(
        tau_m1=arr[:, 0],
        tau_embedded=arr[:, 1],
        n_events=arr[:, 2].astype(np.int64),
        t_end=arr[:, 3],
        seed=int(params.seed),
    )


# ---------------------------------------------------------------------------
# CSV dumps


def fmt(v):
    """Shortest round-trip text for a number; empty for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows):
    """Write a CSV atomically (temp file in the same directory, then rename)."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    os.replace(tmp, path)


def write_path_csv(path, record: PathRecord):
    """Columns: time, x_1..x_d, z."""
    d = record.xs.shape[1]
    header = ["time"] + [f"x_{i + 1}" for i in range(d)] + ["z"]
    rows = (
        [t, *x, int(z)] for t, x, z in zip(record.times, record.xs, record.zs)
    )
    write_csv(path, header, rows)


def write_events_csv(path, events, dim):
    """Columns: n, T_n, x_1..x_d, new_regime."""
    header = ["n", "T_n"] + [f"x_{i + 1}" for i in range(dim)] + ["new_regime"]
    rows = ([e.n, e.time, *e.x_at, e.new_regime] for e in events)
    write_csv(path, header, rows)
