"""
The chain observed at switching times.

Switching times follow the usual convention: if Z_0 = 0 then T_0 = 0,
otherwise T_0 is the first switch (into regime 0); T_1 < T_2 < ... are the
later switches. The embedded hitting time is the first T_n with
|X_{T_n}| <= M1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .errors import InsufficientSampleError, NumericalBlowupError, ParameterRangeError
from .simulate import PathRecord, SimParams, _regime, _state, map_paths, path_rng

__all__ = [
    "IntervalStats",
    "OccupationReport",
    "FirstSwitchBatch",
    "extract_switch_times",
    "embedded_tau",
    "sojourn_intervals",
    "interval_stats",
    "first_switch_batch",
    "occupation_time_near_origin",
]


def extract_switch_times(path: PathRecord):
    """Switching events of a path, T_0 marker included when z0 = 0."""
    return list(path.events)


def embedded_tau(events, M1):
    """Earliest T_n with |X_{T_n}| <= M1, or ``None`` (censored)."""
    m1sq = M1 * M1
    for ev in events:
        if float(np.dot(ev.x_at, ev.x_at)) <= m1sq:
            return ev.time
    return None


def sojourn_intervals(events):
    """Completed sojourns ``(regime, duration)`` of one path.

    The path starts at time 0. The T_0 = 0 marker is not a sojourn. The
    open interval after the last event is not returned.
    """
    out = []
    prev = 0.0
    for ev in events:
        if ev.time == 0.0:
            # T_0 = 0 marker; real switches happen at positive times
            continue
        out.append((1 - ev.new_regime, ev.time - prev))
        prev = ev.time
    return out


@dataclass(frozen=True)
class IntervalStats:
    """Pooled sojourn statistics in one regime against the bounds [1/sup, 1/inf]."""

    regime: int
    count: int
    mean: float
    stderr: float
    lemma_lo: float
    lemma_hi: float
    within_bounds: bool
    excluded: int = 0

    def to_dict(self):
        return asdict(self)


def interval_stats(event_batches, regime, model):
    """Pool completed sojourns in ``regime`` across paths.

    Parameters
    ----------
    event_batches : iterable of event lists
        One list per path, as returned by ``extract_switch_times``.
    regime : {0, 1}
    model : SwitchingDiffusionModel
        Supplies the rate bounds.

    Returns
    -------
    IntervalStats
        ``within_bounds`` is true when [mean - 3 SE, mean + 3 SE] meets
        [1/sup lambda, 1/inf lambda]. ``excluded`` counts final sojourns in
        ``regime`` that were still open when the path stopped.

    Raises
    ------
    InsufficientSampleError
        Fewer than two completed sojourns.
    """
    regime = _regime(regime)
    durations = []
    excluded = 0
    for events in event_batches:
        intervals = sojourn_intervals(events)
        durations.extend(dur for z, dur in intervals if z == regime)
        # regime of the open tail interval
        last = events[-1].new_regime if events else None
        if last == regime:
            excluded += 1
    if len(durations) < 2:
        raise InsufficientSampleError(
            f"need at least 2 completed intervals in regime {regime}, got {len(durations)}"
        )
    arr = np.asarray(durations)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size))
    b = model.bounds
    lo = 1 / (b.lam1_hi if regime else b.lam0_hi)
    hi = 1 / (b.lam1_lo if regime else b.lam0_lo)
    within = mean - 3 * se <= hi and mean + 3 * se >= lo
    return IntervalStats(regime, int(arr.size), mean, se, lo, hi, bool(within), excluded)


@dataclass
class FirstSwitchBatch:
    """Per-path first-switch data; NaN ``t_switch`` marks censoring."""

    t_switch: np.ndarray
    sq_norm_at_switch: np.ndarray
    occupation: np.ndarray

    @property
    def censored(self):
        return np.isnan(self.t_switch)


def first_switch_batch(model, x0, z0, M, params: SimParams, n_paths, max_time=None, workers=1):
    """Run ``n_paths`` paths to their first switch (T_1 if z0 = 0, else T_0).

    ``max_time`` defaults to ``params.horizon``.
    """
    x = _state(model, x0)
    z0 = _regime(z0)
    max_time = params.horizon if max_time is None else float(max_time)
    drift, rate, sigma, lam_bar = model.kernel_arrays()

    def one(i):
        return _kernels.first_switch_kernel(
            x, z0, float(M), drift, rate, sigma, lam_bar, params.dt, max_time,
            path_rng(params.seed, i),
        )

    out = map_paths(one, n_paths, workers)
    for r in out:
        if r[3] != _kernels.OK:
            raise NumericalBlowupError(max_time)
    arr = np.array([r[:3] for r in out], dtype=float)
    return FirstSwitchBatch(arr[:, 0], arr[:, 1], arr[:, 2])


@dataclass(frozen=True)
class OccupationReport:
    """Mean time before the first switch spent after first entering the M-ball."""

    M: float
    mean_occupation: float
    stderr: float
    start_radius: float
    n_paths: int
    n_censored: int
    mean_first_switch: float
    stderr_first_switch: float
    warning: str | None = None

    def to_dict(self):
        return asdict(self)


def occupation_time_near_origin(model, x0, z0, M, params: SimParams, n_paths, workers=1):
    """Estimate E int_0^{T} 1(min_{s<=t} |X_s| <= M) dt up to the first switch T.

    The running minimum is taken over the integration nodes, so
    ``params.record_stride`` must be 1. Paths not switching before
    ``params.horizon`` contribute their occupation up to the horizon; if
    more than half are censored the report carries a warning.
    """
    if params.record_stride != 1:
        raise ParameterRangeError("occupation needs record_stride == 1", "record_stride")
    if n_paths < 100:
        raise ParameterRangeError(f"need n_paths >= 100, got {n_paths!r}", "n_paths")
    x = _state(model, x0)
    radius = float(np.linalg.norm(x))
    if radius < M:
        raise ParameterRangeError(f"|x0|={radius!r} is inside the M={M!r} ball", "x0")
    batch = first_switch_batch(model, x, z0, M, params, n_paths, workers=workers)
    n_cens = int(batch.censored.sum())
    warning = None
    if n_cens > n_paths / 2:
        warning = f"{n_cens}/{n_paths} paths censored before the first switch"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    occ = batch.occupation
    ts = batch.t_switch[~batch.censored]
    return OccupationReport(
        M=float(M),
        mean_occupation=float(occ.mean()),
        stderr=float(occ.std(ddof=1) / math.sqrt(n_paths)),
        start_radius=radius,
        n_paths=int(n_paths),
        n_censored=n_cens,
        mean_first_switch=float(ts.mean()) if ts.size else math.nan,
        stderr_first_switch=float(ts.std(ddof=1) / math.sqrt(ts.size)) if ts.size > 1 else math.nan,
        warning=warning,
    )
