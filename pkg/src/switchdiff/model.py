"""
Two-regime switching diffusion models and their recurrence constants.

A model is the system

    dX_t = b(X_t, Z_t) dt + sigma(X_t, Z_t) dW_t,    Z_t in {0, 1},

where Z leaves regime z at the state-dependent rate lambda_z(X_t). Regime 0
is the recurrent ("inward") regime and regime 1 the transient one.

Drift, intensity and diffusion are drawn from closed parametric families so
that every bound the recurrence criterion needs (sup/inf of the rates, the
radial drift constants r_-, r_+, the radius M and the sup-norm of b) is known
in closed form.

Examples
--------
>>> m = build_model({
...     "dim": 1,
...     "drift_0": {"family": "InverseRadial", "rho": 2, "sign": -1, "cap": 1},
...     "drift_1": {"family": "InverseRadial", "rho": 1, "sign": 1, "cap": 1},
...     "intensity_0": {"family": "Constant", "lambda": 0.5},
...     "intensity_1": {"family": "Constant", "lambda": 2},
... })
>>> rep = check_recurrence_criterion(m)
>>> rep.recurrent, rep.A, rep.B
(True, 6.0, 1.5)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .errors import InfeasibleError, ParameterRangeError

__all__ = [
    "InverseRadial",
    "ConstantRadial",
    "ZeroDrift",
    "Constant",
    "LogisticRadial",
    "UnitMatrix",
    "ScalarPerRegime",
    "ModelBounds",
    "SwitchingDiffusionModel",
    "RecurrenceConstants",
    "CriterionReport",
    "build_model",
    "drift_eval",
    "intensity_eval",
    "check_recurrence_criterion",
    "compute_eps_q_c",
    "constants_from_balance",
    "DEFAULT_EPS_FRACTION",
]

# default eps as a fraction of R_- = 2r_- - d, and the q<1 safety margin
DEFAULT_EPS_FRACTION = 0.1
EPS_FEASIBLE_MARGIN = 0.9

# integer tags used by the compiled kernels
DRIFT_ZERO, DRIFT_INVERSE, DRIFT_CONSTANT = 0, 1, 2
RATE_CONSTANT, RATE_LOGISTIC = 0, 1


def _positive(value, name):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ParameterRangeError(f"must be a finite number > 0, got {value!r}", name)
    return value


def _finite(value, name):
    value = float(value)
    if not math.isfinite(value):
        raise ParameterRangeError(f"must be finite, got {value!r}", name)
    return value


def _sign(value, name):
    if value not in (-1, 1):
        raise ParameterRangeError(f"must be -1 or +1, got {value!r}", name)
    return int(value)


def _norm(x):
    return np.sqrt(np.sum(np.square(x), axis=-1, keepdims=True))


# ---------------------------------------------------------------------------
# drift families


@dataclass(frozen=True)
class InverseRadial:
    """b(x) = sign * rho * x / max(|x|^2, cap^2).

    For |x| >= cap the radial component is exactly x.b(x) = sign * rho,
    and |b| never exceeds rho / cap.
    """

    rho: float
    sign: int = -1
    cap: float = 1.0
    family = "InverseRadial"

    def __post_init__(self):
        object.__setattr__(self, "rho", _positive(self.rho, "rho"))
        object.__setattr__(self, "sign", _sign(self.sign, "sign"))
        object.__setattr__(self, "cap", _positive(self.cap, "cap"))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        return self.sign * self.rho * x / np.maximum(r2, self.cap**2)

    @property
    def sup_norm(self):
        return self.rho / self.cap

    def radial_sup(self, M):
        """sup of x.b(x) over |x| >= M (M >= cap)."""
        return self.sign * self.rho

    @property
    def radius(self):
        return self.cap


@dataclass(frozen=True)
class ConstantRadial:
    """b(x) = sign * rho * x / max(|x|, cap); |b| <= rho."""

    rho: float
    sign: int = -1
    cap: float = 1.0
    family = "ConstantRadial"

    def __post_init__(self):
        object.__setattr__(self, "rho", _positive(self.rho, "rho"))
        object.__setattr__(self, "sign", _sign(self.sign, "sign"))
        object.__setattr__(self, "cap", _positive(self.cap, "cap"))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.sign * self.rho * x / np.maximum(_norm(x), self.cap)

    @property
    def sup_norm(self):
        return self.rho

    def radial_sup(self, M):
        # x.b(x) = sign * rho * |x| on |x| >= cap
        return -self.rho * M if self.sign < 0 else math.inf

    @property
    def radius(self):
        return self.cap


@dataclass(frozen=True)
class ZeroDrift:
    """b(x) = 0."""

    family = "ZeroDrift"

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def sup_norm(self):
        return 0.0

    def radial_sup(self, M):
        return 0.0

    @property
    def radius(self):
        return None


# ---------------------------------------------------------------------------
# intensity families


@dataclass(frozen=True)
class Constant:
    """lambda(x) = lam."""

    lam: float
    family = "Constant"

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive(self.lam, "lambda"))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.lam) if x.ndim > 1 else self.lam

    @property
    def lower(self):
        return self.lam

    @property
    def upper(self):
        return self.lam


def _expit(z):
    z = np.asarray(z, dtype=float)
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))


@dataclass(frozen=True)
class LogisticRadial:
    """lambda(x) = lo + (hi - lo) / (1 + exp(-slope * (|x| - center)))."""

    lambda_lo: float
    lambda_hi: float
    center: float = 0.0
    slope: float = 1.0
    family = "LogisticRadial"

    def __post_init__(self):
        lo = _positive(self.lambda_lo, "lambda_lo")
        hi = _positive(self.lambda_hi, "lambda_hi")
        if lo >= hi:
            raise ParameterRangeError(
                f"lambda_lo={lo!r} must be < lambda_hi={hi!r}", "lambda_lo"
            )
        object.__setattr__(self, "lambda_lo", lo)
        object.__setattr__(self, "lambda_hi", hi)
        object.__setattr__(self, "center", _finite(self.center, "center"))
        object.__setattr__(self, "slope", _finite(self.slope, "slope"))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        out = self.lambda_lo + (self.lambda_hi - self.lambda_lo) * _expit(
            self.slope * (r - self.center)
        )
        return float(out) if out.ndim == 0 else out

    @property
    def lower(self):
        return self.lambda_lo

    @property
    def upper(self):
        return self.lambda_hi


# ---------------------------------------------------------------------------
# diffusion families


@dataclass(frozen=True)
class UnitMatrix:
    """sigma = identity in both regimes."""

    family = "UnitMatrix"

    def sigma(self, z):
        return 1.0


@dataclass(frozen=True)
class ScalarPerRegime:
    """sigma(x, z) = sigma_z * identity."""

    sigma_0: float
    sigma_1: float
    family = "ScalarPerRegime"

    def __post_init__(self):
        object.__setattr__(self, "sigma_0", _positive(self.sigma_0, "sigma_0"))
        object.__setattr__(self, "sigma_1", _positive(self.sigma_1, "sigma_1"))

    def sigma(self, z):
        return self.sigma_1 if z else self.sigma_0


_DRIFTS = {cls.family: cls for cls in (InverseRadial, ConstantRadial, ZeroDrift)}
_RATES = {"Constant": Constant, "LogisticRadial": LogisticRadial}
_DIFFUSIONS = {cls.family: cls for cls in (UnitMatrix, ScalarPerRegime)}
# dict key -> dataclass field, where they differ
_KEY_ALIASES = {"lambda": "lam"}


def family_to_dict(fam):
    """Serialize a family instance to its JSON-compatible description."""
    out = {"family": fam.family}
    for k, v in asdict(fam).items():
        out["lambda" if k == "lam" else k] = v
    return out


def _family_from_dict(desc, registry, where):
    if isinstance(desc, str):
        desc = {"family": desc}
    if not isinstance(desc, Mapping):
        raise ParameterRangeError("expected an object with a 'family' key", where)
    if "family" not in desc:
        raise ParameterRangeError("missing 'family'", where)
    name = desc["family"]
    if name not in registry:
        raise ParameterRangeError(
            f"unknown family {name!r}; expected one of {sorted(registry)}", f"{where}.family"
        )
    cls = registry[name]
    kwargs = {}
    valid = set(cls.__dataclass_fields__)
    for key, value in desc.items():
        if key == "family":
            continue
        attr = _KEY_ALIASES.get(key, key)
        if attr not in valid:
            raise ParameterRangeError(f"unknown parameter for {name}", f"{where}.{key}")
        kwargs[attr] = value
    try:
        return cls(**kwargs)
    except ParameterRangeError as exc:
        raise ParameterRangeError(exc.message, f"{where}.{exc.field}") from None
    except TypeError as exc:
        raise ParameterRangeError(f"missing parameter ({exc})", where) from None


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True)
class ModelBounds:
    """Closed-form bounds used by the recurrence criterion.

    ``trace_0``/``trace_1`` are Tr a(x, z); ``R_minus = 2 r_minus - trace_0``
    and ``R_plus = 2 r_plus + trace_1`` (with unit diffusion these reduce to
    2r_- - d and 2r_+ + d).
    """

    lam0_hi: float
    lam0_lo: float
    lam1_hi: float
    lam1_lo: float
    r_minus: float
    r_plus: float
    M: float
    b_norm: float
    trace_0: float
    trace_1: float
    R_minus: float
    R_plus: float

    @property
    def lam_bar(self):
        """Dominating rate for thinning."""
        return max(self.lam0_hi, self.lam1_hi)


def _compute_bounds(dim, drift_0, drift_1, intensity_0, intensity_1, diffusion):
    caps = [r for r in (drift_0.radius, drift_1.radius) if r is not None]
    M = max(caps) if caps else 1.0
    r_minus = -drift_0.radial_sup(M)
    r_plus = max(drift_1.radial_sup(M), 0.0)
    s0, s1 = diffusion.sigma(0), diffusion.sigma(1)
    trace_0, trace_1 = dim * s0 * s0, dim * s1 * s1
    return ModelBounds(
        lam0_hi=intensity_0.upper,
        lam0_lo=intensity_0.lower,
        lam1_hi=intensity_1.upper,
        lam1_lo=intensity_1.lower,
        r_minus=r_minus,
        r_plus=r_plus,
        M=M,
        b_norm=max(drift_0.sup_norm, drift_1.sup_norm),
        trace_0=trace_0,
        trace_1=trace_1,
        R_minus=2 * r_minus - trace_0,
        R_plus=2 * r_plus + trace_1,
    )


@dataclass(frozen=True)
class SwitchingDiffusionModel:
    """A two-regime switching diffusion in R^dim.

    Parameters
    ----------
    dim : int
        State dimension d >= 1.
    drift_0, drift_1 : drift family
        Drift in the recurrent (0) and transient (1) regime.
    intensity_0, intensity_1 : intensity family
        Rate of leaving regime 0 (resp. 1).
    diffusion : diffusion family, default UnitMatrix()

    Attributes
    ----------
    bounds : ModelBounds
        Derived constants, recomputed from the families at construction.
    """

    dim: int
    drift_0: Any
    drift_1: Any
    intensity_0: Any
    intensity_1: Any
    diffusion: Any = field(default_factory=UnitMatrix)
    bounds: ModelBounds = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise ParameterRangeError(f"must be an integer >= 1, got {self.dim!r}", "dim")
        object.__setattr__(self, "dim", int(self.dim))
        for name, registry in (
            ("drift_0", _DRIFTS),
            ("drift_1", _DRIFTS),
            ("intensity_0", _RATES),
            ("intensity_1", _RATES),
            ("diffusion", _DIFFUSIONS),
        ):
            fam = getattr(self, name)
            if type(fam) not in registry.values():
                raise ParameterRangeError(f"not a supported family: {fam!r}", name)
        object.__setattr__(
            self,
            "bounds",
            _compute_bounds(
                self.dim,
                self.drift_0,
                self.drift_1,
                self.intensity_0,
                self.intensity_1,
                self.diffusion,
            ),
        )

    @property
    def unit_diffusion(self):
        return isinstance(self.diffusion, UnitMatrix)

    def drift(self, z):
        return self.drift_1 if z else self.drift_0

    def intensity(self, z):
        return self.intensity_1 if z else self.intensity_0

    def with_drift_1(self, drift_1):
        """Copy of the model with the transient-regime drift replaced."""
        return SwitchingDiffusionModel(
            self.dim, self.drift_0, drift_1, self.intensity_0, self.intensity_1, self.diffusion
        )

    def to_dict(self):
        return {
            "dim": self.dim,
            "drift_0": family_to_dict(self.drift_0),
            "drift_1": family_to_dict(self.drift_1),
            "intensity_0": family_to_dict(self.intensity_0),
            "intensity_1": family_to_dict(self.intensity_1),
            "diffusion": family_to_dict(self.diffusion),
        }

    def kernel_arrays(self):
        """Pack the model into flat float arrays for the compiled kernels.

        Returns
        -------
        drift : ndarray, shape (2, 4)
            Rows ``[kind, rho, sign, cap]``.
        rate : ndarray, shape (2, 5)
            Rows ``[kind, lo, hi, center, slope]``.
        sigma : ndarray, shape (2,)
        lam_bar : float
        """
        drift = np.zeros((2, 4))
        rate = np.zeros((2, 5))
        for z in (0, 1):
            b = self.drift(z)
            if isinstance(b, InverseRadial):
                drift[z] = (DRIFT_INVERSE, b.rho, b.sign, b.cap)
            elif isinstance(b, ConstantRadial):
                drift[z] = (DRIFT_CONSTANT, b.rho, b.sign, b.cap)
            else:
                drift[z] = (DRIFT_ZERO, 0.0, 0.0, 1.0)
            lam = self.intensity(z)
            if isinstance(lam, Constant):
                rate[z] = (RATE_CONSTANT, lam.lam, lam.lam, 0.0, 0.0)
            else:
                rate[z] = (RATE_LOGISTIC, lam.lambda_lo, lam.lambda_hi, lam.center, lam.slope)
        sigma = np.array([self.diffusion.sigma(0), self.diffusion.sigma(1)])
        return drift, rate, sigma, self.bounds.lam_bar


def build_model(spec):
    """Build a model from a JSON-compatible description.

    The description has keys ``dim``, ``drift_0``, ``drift_1``,
    ``intensity_0``, ``intensity_1`` and optionally ``diffusion`` (defaults
    to ``{"family": "UnitMatrix"}``). Each family entry is an object with a
    ``family`` name plus that family's parameters:

    ========================  ======================================
    family                    parameters
    ========================  ======================================
    InverseRadial             rho, sign (-1 or 1), cap
    ConstantRadial            rho, sign (-1 or 1), cap
    ZeroDrift                 (none)
    Constant                  lambda
    LogisticRadial            lambda_lo, lambda_hi, center, slope
    UnitMatrix                (none)
    ScalarPerRegime           sigma_0, sigma_1
    ========================  ======================================

    Raises
    ------
    ParameterRangeError
        Unknown family or key, missing field, or a parameter out of range.
        The ``field`` attribute names the offending entry.
    """
    if isinstance(spec, SwitchingDiffusionModel):
        return spec
    if not isinstance(spec, Mapping):
        raise ParameterRangeError("model description must be an object")
    allowed = {"dim", "drift_0", "drift_1", "intensity_0", "intensity_1", "diffusion"}
    for key in spec:
        if key not in allowed:
            raise ParameterRangeError("unknown model field", key)
    for key in allowed - {"diffusion"}:
        if key not in spec:
            raise ParameterRangeError("missing required field", key)
    return SwitchingDiffusionModel(
        dim=spec["dim"],
        drift_0=_family_from_dict(spec["drift_0"], _DRIFTS, "drift_0"),
        drift_1=_family_from_dict(spec["drift_1"], _DRIFTS, "drift_1"),
        intensity_0=_family_from_dict(spec["intensity_0"], _RATES, "intensity_0"),
        intensity_1=_family_from_dict(spec["intensity_1"], _RATES, "intensity_1"),
        diffusion=_family_from_dict(
            spec.get("diffusion", {"family": "UnitMatrix"}), _DIFFUSIONS, "diffusion"
        ),
    )


def _as_state(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != model.dim:
        raise ValueError(f"state has dimension {x.shape[-1]}, model has {model.dim}")
    return x


def drift_eval(model, x, z):
    """Evaluate b(x, z). Accepts a single state or a stack of shape (n, d)."""
    return model.drift(z)(_as_state(model, x))


def intensity_eval(model, x, z):
    """Evaluate the rate lambda_z(x) of leaving regime z."""
    return model.intensity(z)(_as_state(model, x))


# ---------------------------------------------------------------------------
# recurrence criterion


@dataclass(frozen=True)
class RecurrenceConstants:
    """eps, q and the bound constants satisfying the balance relation.

    ``C_z0 = 1/c`` bounds E tau from regime 0 as ``C_z0 * |x|^2``; from
    regime 1 the mean holding time 1/lam1_lo is added, so
    ``C_z1 = 1/c + 1/lam1_lo`` is the additive-correction constant.
    """

    eps: float
    q: float
    c: float
    C_z0: float
    C_z1: float
    eps_is_default: bool = False


def constants_from_balance(R_minus, R_plus, lam0_hi, lam1_lo, eps=None):
    """Solve lam0_hi (R_plus + eps) = q lam1_lo (R_minus - eps) for q and build c.

    ``R_minus`` and ``R_plus`` play the roles of 2r_- - d and 2r_+ + d (or
    their trace-weighted versions under a general diffusion matrix).

    Raises
    ------
    InfeasibleError
        If lam1_lo R_minus <= lam0_hi R_plus, or ``eps`` is outside
        (0, R_minus), or the resulting q is not below 1.
    """
    A = lam1_lo * R_minus
    B = lam0_hi * R_plus
    if not (R_minus > 0 and math.isfinite(B) and A > B):
        raise InfeasibleError(
            f"balance inequality lam1_lo*R_minus > lam0_hi*R_plus fails: "
            f"{A!r} <= {B!r}"
        )
    eps_is_default = eps is None
    if eps is None:
        # largest eps giving q = 1, kept at a 10% margin
        eps_max = (A - B) / (lam0_hi + lam1_lo)
        eps = min(DEFAULT_EPS_FRACTION * R_minus, EPS_FEASIBLE_MARGIN * eps_max)
    else:
        eps = float(eps)
        if not (0 < eps < R_minus):
            raise InfeasibleError(f"eps={eps!r} must lie in (0, R_minus={R_minus!r})")
    q = lam0_hi * (R_plus + eps) / (lam1_lo * (R_minus - eps))
    if not q < 1:
        raise InfeasibleError(
            f"eps={eps!r} gives q={q!r} >= 1: lam0_hi*(R_plus+eps) < lam1_lo*(R_minus-eps) fails"
        )
    c = min((1 - q) / (2 * q) * (R_plus + eps), (1 - q) / 2 * (R_minus - eps))
    return RecurrenceConstants(
        eps=eps, q=q, c=c, C_z0=1 / c, C_z1=1 / c + 1 / lam1_lo, eps_is_default=eps_is_default
    )


def compute_eps_q_c(r_minus, r_plus, d, lam0_hi, lam1_lo, eps=None):
    """Constants for the unit-diffusion case.

    Examples
    --------
    >>> k = compute_eps_q_c(2, 1, 1, 0.5, 2, eps=0.3)
    >>> round(k.q, 6), k.c, round(k.C_z0, 5), round(k.C_z1, 5)
    (0.305556, 0.9375, 1.06667, 1.56667)
    """
    return constants_from_balance(2 * r_minus - d, 2 * r_plus + d, lam0_hi, lam1_lo, eps)


@dataclass(frozen=True)
class CriterionReport:
    recurrent: bool
    reason: str
    A: Optional[float] = None
    B: Optional[float] = None
    eps: Optional[float] = None
    q: Optional[float] = None
    c: Optional[float] = None
    C_z0: Optional[float] = None
    C_z1: Optional[float] = None
    eps_is_default: Optional[bool] = None
    bounds: Optional[ModelBounds] = None

    @property
    def recurrent_verdict(self):
        return self.recurrent

    def balance_residual(self):
        """Relative residual of lam0_hi (R_+ + eps) = q lam1_lo (R_- - eps)."""
        if not self.recurrent:
            return None
        b = self.bounds
        lhs = b.lam0_hi * (b.R_plus + self.eps)
        rhs = self.q * b.lam1_lo * (b.R_minus - self.eps)
        return abs(lhs - rhs) / abs(lhs)

    def theory_bound(self, x0, z0):
        """Upper bound on E tau from (x0, z0): |x0|^2 / c, plus 1/lam1_lo if z0 = 1."""
        if not self.recurrent:
            raise ValueError("no bound: model is not recurrent")
        r2 = float(np.sum(np.square(np.atleast_1d(np.asarray(x0, dtype=float)))))
        return self.C_z0 * r2 + (1 / self.bounds.lam1_lo if z0 else 0.0)

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "recurrent", "reason", "A", "B", "eps", "q", "c", "C_z0", "C_z1", "eps_is_default"
        )}
        out["balance_residual"] = self.balance_residual()
        out["bounds"] = asdict(self.bounds) if self.bounds is not None else None
        return out


def check_recurrence_criterion(model, eps=None):
    """Evaluate the sufficient condition for positive recurrence.

    With unit diffusion the model is declared recurrent when
    ``2 r_- > d`` and ``lam1_lo (2r_- - d) > lam0_hi (2r_+ + d)``; with a
    per-regime diffusion scale, 2r_- - d and 2r_+ + d are replaced by
    R_- = 2r_- - Tr a(., 0) and R_+ = 2r_+ + Tr a(., 1).

    Parameters
    ----------
    model : SwitchingDiffusionModel
    eps : float, optional
        Override of the default eps (see ``constants_from_balance``).
    """
    b = model.bounds
    unit = model.unit_diffusion
    A = b.lam1_lo * b.R_minus if math.isfinite(b.R_minus) else None
    B = b.lam0_hi * b.R_plus if math.isfinite(b.R_plus) else None
    kw = dict(A=A, B=B, bounds=b)
    if not b.r_minus > 0:
        return CriterionReport(False, f"no r_- > 0: sup x.b_-(x) over |x|>=M is {-b.r_minus!r}", **kw)
    if not math.isfinite(b.r_plus):
        return CriterionReport(False, "x.b_+(x) is unbounded above: no finite r_+", **kw)
    if not b.R_minus > 0:
        reason = "2r_- <= d" if unit else "R_- <= 0"
        return CriterionReport(False, f"{reason} ({b.R_minus + b.trace_0!r} <= {b.trace_0!r})", **kw)
    if not A > B:
        tag = "lam1_lo(2r_- - d) <= lam0_hi(2r_+ + d)" if unit else "lam1_lo R_- <= lam0_hi R_+"
        return CriterionReport(False, f"{tag} (A={A!r} <= B={B!r})", **kw)
    k = constants_from_balance(b.R_minus, b.R_plus, b.lam0_hi, b.lam1_lo, eps)
    return CriterionReport(
        True,
        "recurrent: all conditions hold",
        eps=k.eps,
        q=k.q,
        c=k.c,
        C_z0=k.C_z0,
        C_z1=k.C_z1,
        eps_is_default=k.eps_is_default,
        **kw,
    )
