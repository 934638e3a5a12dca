"""Run-and-tumble (telegraph) motion with time-varying speed and tumbling rate."""
from ._version import __version__
from .analytic import (
    LawAtTime,
    Regime,
    RegimeReport,
    TelegraphParams,
    boundary_atoms,
    cdf,
    classify_regime,
    density_ac,
    law_at_time,
    msd,
    msd_limit,
    msd_moment_ode,
)
from .errors import (
    CapabilityError,
    ConfigError,
    DegenerateLawError,
    DomainError,
    ExtrapolationError,
    QualityError,
    SaturationError,
    SingularityError,
    TeleswimError,
)
from .fractional import CharFunGrid, FractionalParams, charfun, charfun_grid, invert_charfun
from .grids import DensityGrid
from .montecarlo import PathEnsemble, empirical_histogram, empirical_msd, simulate_ensemble, simulate_path
from .pde import GridSpec, convergence_study, solve_ab_system
from .profiles import (
    Constant,
    ConstantRate,
    ExplicitRate,
    ExponentialDecay,
    PiecewiseConstant,
    PowerLaw,
    ProportionalToSpeed,
    Tabulated,
    eval_lambda_eff,
    eval_tau,
    eval_t_of_tau,
    eval_w,
)
from .stats import fit_exponent, fit_logarithmic, ks_distance, l1_distance

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
