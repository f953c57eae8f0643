"""Monte Carlo toolkit for two-regime switching diffusions.

dX = b(X, Z) dt + sigma(Z) dW, with Z in {0, 1} leaving regime z at rate
lambda_z(X). Provides the explicit positive-recurrence criterion and its
constants, an Euler-Maruyama/thinning simulator with reproducible parallel
streams, the embedded chain at switching times and Monte Carlo estimators
for hitting times, drift of |X|^2 and invariant histograms.
"""

from .embedded import (
    embedded_tau,
    extract_switch_times,
    interval_stats,
    occupation_time_near_origin,
    sojourn_intervals,
)
from .errors import (
    ConfigError,
    CriterionUnsatisfiedError,
    EstimationFailureError,
    InfeasibleError,
    InsufficientSampleError,
    NumericalBlowupError,
    ParameterRangeError,
    ReliabilityError,
    ShapeError,
    SwitchDiffError,
)
from .estimate import (
    Histogram,
    MCEstimate,
    estimate_hitting_moment,
    estimate_invariant_histogram,
    lyapunov_drift_check,
    tv_distance,
    verify_theorem_bound,
)
from .model import (
    Constant,
    ConstantRadial,
    InverseRadial,
    LogisticRadial,
    ScalarPerRegime,
    SwitchingDiffusionModel,
    UnitMatrix,
    ZeroDrift,
    build_model,
    check_recurrence_criterion,
    compute_eps_q_c,
)
from .simulate import SimParams, simulate_hits, simulate_path, simulate_until_hit

__version__ = "0.1.0"
