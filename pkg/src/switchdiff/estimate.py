"""
Monte Carlo estimators and the checks built on them.

All pass/fail comparisons use a 3-standard-error slack. Censored samples
(paths stopped by ``max_time`` before the event) are excluded from means
and counted separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .embedded import first_switch_batch
from .errors import (
    CriterionUnsatisfiedError,
    EstimationFailureError,
    NumericalBlowupError,
    ParameterRangeError,
    ReliabilityError,
    ShapeError,
)
from .model import CriterionReport, check_recurrence_criterion
from .simulate import SimParams, _regime, _state, path_rng, simulate_hits

__all__ = [
    "MCEstimate",
    "BoundReport",
    "DriftReport",
    "Histogram",
    "default_max_time",
    "estimate_hitting_moment",
    "verify_theorem_bound",
    "lyapunov_drift_check",
    "estimate_invariant_histogram",
    "tv_distance",
]

Z95 = 1.959963984540054
SLACK = 3.0


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean with a normal-approximation 95% interval.

    ``median`` and ``iqr`` are diagnostics only (hitting times are
    heavy-tailed near criticality).
    """

    mean: float
    stderr: float
    ci95_lo: float
    ci95_hi: float
    n_samples: int
    n_censored: int = 0
    median: float = math.nan
    iqr: float = math.nan

    @classmethod
    def from_samples(cls, samples, n_censored=0):
        x = np.asarray(samples, dtype=float)
        n = x.size
        if n == 0:
            raise EstimationFailureError("no uncensored samples")
        mean = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        q1, med, q3 = np.percentile(x, [25, 50, 75])
        return cls(
            mean=mean,
            stderr=se,
            ci95_lo=mean - Z95 * se,
            ci95_hi=mean + Z95 * se,
            n_samples=int(n + n_censored),
            n_censored=int(n_censored),
            median=float(med),
            iqr=float(q3 - q1),
        )

    def to_dict(self):
        return dict(self.__dict__)


def _criterion(model):
    return check_recurrence_criterion(model)


def _sq(x0):
    return float(np.sum(np.square(np.atleast_1d(np.asarray(x0, dtype=float)))))


def default_max_time(model, x0, z0, params=None, report=None):
    """50 x C_z (|x0|^2 + 1) for a recurrent model, else ``params.horizon``."""
    report = report or _criterion(model)
    if report.recurrent:
        C = report.C_z1 if z0 else report.C_z0
        return 50.0 * C * (_sq(x0) + 1.0)
    if params is None:
        raise ValueError("max_time required for a model failing the criterion")
    return params.horizon


def estimate_hitting_moment(model, x0, z0, M1, n_paths, params: SimParams, max_time=None,
                            target="embedded", workers=1):
    """Estimate E tau from (x0, z0).

    Parameters
    ----------
    target : {"embedded", "m1"}
        ``"embedded"``: first switching time with |X| <= M1 (the default);
        ``"m1"``: first time |X| <= M1 on the integration grid.

    Raises
    ------
    EstimationFailureError
        Every path was censored.
    """
    if n_paths < 100:
        raise ParameterRangeError(f"need n_paths >= 100, got {n_paths!r}", "n_paths")
    if target not in ("embedded", "m1"):
        raise ValueError(f"target must be 'embedded' or 'm1', got {target!r}")
    report = _criterion(model)
    if not report.recurrent:
        warnings.warn(f"recurrence criterion fails: {report.reason}", RuntimeWarning, stacklevel=2)
    if max_time is None:
        max_time = default_max_time(model, x0, z0, params, report)
    batch = simulate_hits(
        model, x0, z0, M1, params, max_time, n_paths, workers=workers, stop_at_m1=target == "m1"
    )
    taus = batch.tau_m1 if target == "m1" else batch.tau_embedded
    ok = ~np.isnan(taus)
    if not ok.any():
        raise EstimationFailureError(
            f"all {n_paths} paths censored at max_time={max_time!r}"
        )
    return MCEstimate.from_samples(taus[ok], n_censored=int((~ok).sum()))


@dataclass
class BoundReport:
    """E tau estimates at several starts against the bound |x|^2/c (+1/inf lambda_1)."""

    start_points: list
    estimates: list
    theory_bound: list
    satisfied: list
    constants_used: CriterionReport
    seeds: list = field(default_factory=list)

    def recompute_satisfied(self):
        return [
            e.mean + SLACK * e.stderr <= b for e, b in zip(self.estimates, self.theory_bound)
        ]

    @property
    def all_satisfied(self):
        return all(self.satisfied)

    def rows(self):
        """One row per start: x0, z0, n, mean, stderr, ci_lo, ci_hi, theory_bound, satisfied."""
        for (x0, z0), e, b, s in zip(self.start_points, self.estimates, self.theory_bound,
                                     self.satisfied):
            yield {
                "x0": [float(v) for v in np.atleast_1d(x0)],
                "z0": z0,
                "n": e.n_samples,
                "n_censored": e.n_censored,
                "mean": e.mean,
                "stderr": e.stderr,
                "ci_lo": e.ci95_lo,
                "ci_hi": e.ci95_hi,
                "theory_bound": b,
                "satisfied": s,
            }


def verify_theorem_bound(model, starts, M1, n_paths, params: SimParams, max_time=None,
                         workers=1):
    """Check E tau <= |x0|^2 / c (+ 1/inf lambda_1 when z0 = 1) at each start.

    Parameters
    ----------
    starts : list of (x0, z0) or (x0, z0, seed)
        A third entry overrides ``params.seed`` for that start.
    max_time : float, optional
        Censoring time; default 50x the bound at each start.

    Raises
    ------
    CriterionUnsatisfiedError
        If the model fails the recurrence criterion.
    ParameterRangeError
        If some start lies inside the M1 ball.
    """
    report = _criterion(model)
    if not report.recurrent:
        raise CriterionUnsatisfiedError(f"no bound to verify: {report.reason}")
    points, ests, bounds, seeds = [], [], [], []
    for s in starts:
        x0, z0 = s[0], _regime(s[1])
        seed = int(s[2]) if len(s) > 2 and s[2] is not None else params.seed
        x = _state(model, x0)
        if math.sqrt(_sq(x)) <= M1:
            raise ParameterRangeError(f"start {x.tolist()} lies inside the M1={M1!r} ball", "starts")
        p = SimParams(params.dt, params.horizon, seed, params.record_stride)
        mt = max_time if max_time is not None else default_max_time(model, x, z0, p, report)
        est = estimate_hitting_moment(model, x, z0, M1, n_paths, p, mt, workers=workers)
        points.append((x.copy(), z0))
        ests.append(est)
        bounds.append(report.theory_bound(x, z0))
        seeds.append(seed)
    out = BoundReport(points, ests, bounds, [], report, seeds)
    out.satisfied = out.recompute_satisfied()
    return out


@dataclass(frozen=True)
class DriftReport:
    """Change of |X|^2 over the first sojourn against the drift bound.

    ``theory_rhs`` is -(1/sup lambda_0)(R_- - eps) from regime 0 and
    (1/inf lambda_1)(R_+ + eps) from regime 1; it is ``None`` when the model
    fails the criterion and no ``eps`` was supplied.
    """

    x0: np.ndarray
    z0: int
    empirical_lhs: MCEstimate
    switch_time: MCEstimate
    theory_rhs: float | None
    satisfied: bool | None
    eps: float | None


def lyapunov_drift_check(model, x0, z0, n_paths, params: SimParams, M1=None, eps=None,
                         workers=1):
    """Estimate E|X_T|^2 - |x0|^2 at the first switch T and compare with the bound.

    Paths are capped at ``params.horizon``; censored paths are dropped.

    Raises
    ------
    ReliabilityError
        More than 10% of paths censored before the first switch.
    """
    if n_paths < 1000:
        raise ParameterRangeError(f"need n_paths >= 1000, got {n_paths!r}", "n_paths")
    x = _state(model, x0)
    z0 = _regime(z0)
    r2 = _sq(x)
    if M1 is not None and math.sqrt(r2) <= M1:
        raise ParameterRangeError(f"|x0| must exceed M1={M1!r}", "x0")
    batch = first_switch_batch(model, x, z0, 0.0, params, n_paths, workers=workers)
    cens = batch.censored
    if cens.sum() > 0.1 * n_paths:
        raise ReliabilityError(
            f"{int(cens.sum())}/{n_paths} paths censored before the first switch"
        )
    ok = ~cens
    lhs = MCEstimate.from_samples(batch.sq_norm_at_switch[ok] - r2, int(cens.sum()))
    ts = MCEstimate.from_samples(batch.t_switch[ok], int(cens.sum()))

    b = model.bounds
    if eps is None:
        rep = _criterion(model)
        eps = rep.eps if rep.recurrent else None
    rhs = None
    satisfied = None
    if eps is not None:
        if z0 == 0:
            rhs = -(b.R_minus - eps) / b.lam0_hi
        else:
            rhs = (b.R_plus + eps) / b.lam1_lo
        satisfied = bool(lhs.mean <= rhs + SLACK * lhs.stderr)
    return DriftReport(x, z0, lhs, ts, rhs, satisfied, eps)


@dataclass
class Histogram:
    """Binned probability masses plus an out-of-range bucket.

    Parameters
    ----------
    bin_edges : ndarray
        Uniform edges, shared by every axis (or of |x| when ``radial``).
    masses : ndarray
        Shape ``(nbins,)*d`` or ``(nbins,)`` if radial, with a leading axis
        of length 2 when ``by_regime``.
    out_of_range : float or ndarray
        Mass outside the box (per regime when ``by_regime``).
    """

    bin_edges: np.ndarray
    masses: np.ndarray
    out_of_range: float | np.ndarray = 0.0
    n_samples: int = 0
    radial: bool = False
    by_regime: bool = False

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        self.out_of_range = np.asarray(self.out_of_range, dtype=float)
        if np.any(self.masses < 0) or np.any(self.out_of_range < 0):
            raise ValueError("masses must be non-negative")
        if abs(self.total_mass - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {self.total_mass!r}, not 1")

    @property
    def total_mass(self):
        return float(self.masses.sum() + self.out_of_range.sum())

    def rows(self):
        """CSV rows (regime, bin, bin_lo, bin_hi, mass); the out-of-range row has bin = -1."""
        masses = self.masses if self.by_regime else self.masses[None]
        outs = np.atleast_1d(self.out_of_range)
        e = self.bin_edges
        nb = e.size - 1
        for z in range(masses.shape[0]):
            reg = z if self.by_regime else ""
            flat = masses[z].ravel()
            for i, m in enumerate(flat):
                if flat.size == nb:
                    yield [reg, i, e[i], e[i + 1], m]
                else:
                    yield [reg, i, "", "", m]
            yield [reg, -1, "", "", outs[z]]


def estimate_invariant_histogram(model, x0, z0, burn_in, horizon, bins, params: SimParams, *,
                                 M1=None, box=None, radial=None, by_regime=False,
                                 path_index=0):
    """Time-average occupation histogram of X over [burn_in, horizon].

    The box is [-box, box]^d per axis (or [0, box) for |x| when radial);
    by default ``box = 3 * M1``. Radial binning is the default for d > 1.
    ``params.horizon`` is ignored in favour of ``horizon``.
    """
    if not horizon > burn_in >= 0:
        raise ParameterRangeError(f"need horizon > burn_in >= 0, got {horizon!r}, {burn_in!r}",
                                  "burn_in")
    if int(bins) != bins or bins < 1:
        raise ParameterRangeError(f"must be a positive integer, got {bins!r}", "bins")
    bins = int(bins)
    if box is None:
        if M1 is None:
            raise ValueError("give either box or M1")
        box = 3.0 * M1
    if not box > 0:
        raise ParameterRangeError(f"must be > 0, got {box!r}", "box")
    report = _criterion(model)
    if not report.recurrent:
        warnings.warn(f"recurrence criterion fails: {report.reason}", RuntimeWarning, stacklevel=2)
    x = _state(model, x0)
    z0 = _regime(z0)
    if radial is None:
        radial = model.dim > 1
    lo, hi = (0.0, float(box)) if radial else (-float(box), float(box))
    drift, rate, sigma, lam_bar = model.kernel_arrays()
    w, n_steps, status, t_last = _kernels.histogram_kernel(
        x, z0, drift, rate, sigma, lam_bar, params.dt, float(burn_in), float(horizon),
        lo, hi, bins, bool(radial), bool(by_regime), path_rng(params.seed, path_index),
    )
    if status != _kernels.OK:
        raise NumericalBlowupError(t_last)
    w = w / w.sum()
    shape = (bins,) if radial else (bins,) * model.dim
    masses = w[:, :-1].reshape((w.shape[0],) + shape)
    out = w[:, -1]
    if not by_regime:
        masses, out = masses[0], float(out[0])
    return Histogram(
        bin_edges=np.linspace(lo, hi, bins + 1),
        masses=masses,
        out_of_range=out,
        n_samples=int(n_steps),
        radial=bool(radial),
        by_regime=bool(by_regime),
    )


def tv_distance(h1: Histogram, h2: Histogram):
    """Half the L1 distance between two histograms, out-of-range bucket included."""
    if (
        h1.radial != h2.radial
        or h1.by_regime != h2.by_regime
        or h1.masses.shape != h2.masses.shape
        or not np.array_equal(h1.bin_edges, h2.bin_edges)
    ):
        raise ShapeError("histograms have different bins")
    diff = np.abs(h1.masses - h2.masses).sum() + np.abs(h1.out_of_range - h2.out_of_range).sum()
    return float(min(1.0, 0.5 * diff))
