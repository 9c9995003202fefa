"""Hitting times with taboo for symmetric random walks on Z^d.

Closed-form limits, tail-asymptotic constants, full time-domain c.d.f.
curves, and independent Monte Carlo / linear-algebra verification oracles.
"""

import os as _os

# Propagate the package-level thread knob to the BLAS runtimes before numpy
# loads them; only effective when this package is imported first.
_threads = _os.environ.get("TABOOWALK_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import (
    AsymmetricRates,
    BracketTooWide,
    DegenerateSamples,
    DivergentGreenFunction,
    EmptySupport,
    ExtrapolationUnstable,
    InvalidQuery,
    ModelError,
    NonpositiveRate,
    NotConverged,
    NotIrreducible,
    QueryOutsideBox,
    SingularHessian,
    StepTooCoarse,
    TabooWalkError,
    ZeroJumpInSupport,
)
from .kernels import (
    KernelValue,
    QuadratureConfig,
    default_config,
    green_function,
    k_kernel,
    rho,
    transition_probability,
    trig_identity_check,
)
from .model import (
    SpectralScalars,
    WalkModel,
    char_exponent,
    is_simple_1d,
    load_model,
    model_from_dict,
    nearest_neighbor_walk,
    save_model,
    simple_walk_1d,
    spectral_scalars,
    support_generates_lattice,
    tilde_gamma,
    validate_model,
)
from .limits import (
    LimitValue,
    TabooQuery,
    TailAsymptotic,
    TailOrder,
    Variant,
    hitting_limit,
    hitting_tail,
    taboo_limit,
    taboo_limit_minus,
    taboo_tail,
    taboo_tail_minus,
)
from .curves import (
    CdfCurve,
    TimeGrid,
    hitting_cdf,
    laplace_hitting,
    laplace_taboo,
    minus_from_plus,
    taboo_cdf,
    tail_extract,
)
from .simulate import (
    McEstimate,
    SimConfig,
    absorption_limit_bracket,
    absorption_limit_oracle,
    estimate_minus_cdf,
    estimate_taboo_cdf,
    fit_tail_order,
)

__version__ = "0.1.0"
