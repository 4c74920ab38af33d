"""Change-point estimation for the angular density of bivariate extremes.

The pipeline runs raw price series through negative log returns, GARCH(1,1)
devolatilization and rank-based unit Pareto margins into pseudo-angle radial
exceedances, then fits a two-regime Bernstein angular density with an
adaptive componentwise Metropolis sampler and summarizes the change-point
posterior.
"""

from .angular import (
    BernsteinWeights,
    bev_cdf,
    density_grid,
    density_integral,
    density_mean,
    dirichlet_density,
    eval_density,
    sample_angle,
    uniform_weights,
    validate_weights,
)
from .changepoint import ChangePointModel, log_likelihood, log_posterior, log_prior, regime_of
from .errors import DataError, NumericalError
from .ingest import (
    GarchFit,
    GarchParams,
    PriceSeries,
    ReturnSeries,
    align_pairs,
    fit_garch11,
    garch_loglik,
    load_price_csv,
    negative_log_returns,
)
from .margins import (
    AngularSample,
    ParetoPairs,
    load_angular_sample,
    make_angular_sample,
    rank_pareto_transform,
    threshold_exceedances,
    write_angular_sample,
)
from .mcmc import (
    AdaptiveScale,
    ChainConfig,
    PosteriorDraws,
    adapt_scale,
    merge_draws,
    nullspace_direction,
    propose_tau,
    propose_weights,
    run_chain,
    run_chains,
)
from .simulate import (
    SyntheticSpec,
    random_weights,
    simulate_changepoint_angles,
    simulate_garch11,
)
from .summary import (
    DensityCurve,
    export_plot_data,
    predictive_density,
    tau_estimate,
    tau_interval,
)

__version__ = "0.1.0"
