//! Desk-scale maximum score, ERM and threshold regression estimators with
//! synthetic designs whose limit experiments are known in closed form.

mod dgp;
mod fit;
mod mc;
pub mod oracle;
mod percentile;

pub use dgp::{
    gen_erm, gen_maxscore, gen_threshreg, limit_specs, normal_cdf, CovariateAtoms, Dataset, DgpSpec, ErmDgp, ErrorLaw,
    MaxScoreDgp, ThreshRegDgp,
};
pub use fit::{
    erm_candidates, erm_classifier, erm_errors, fit_erm, fit_maxscore, fit_threshreg, FitResult, ThetaGrid, RSS_TIE_TOL,
};
pub use mc::{
    coverage_experiment, fit_dgp, sampling_law, sampling_law_from, subsample_draws, CoverageReport, CoverageRow,
    CoverageSpec, GridPolicy, SubsampleDraws,
};
pub use percentile::{percentile_interval, percentile_quantile, quantile_inf, PercentileQuery};
