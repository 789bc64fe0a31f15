use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::dgp::{Dataset, DgpSpec};
use super::fit::{fit_erm, fit_maxscore, fit_threshreg, FitResult, ThetaGrid};
use super::percentile::{percentile_interval, PercentileQuery};
use crate::diagnostics::binomial_se;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::RngPolicy;
use crate::simulate::EmpiricalLaw;

/// Search grid in units of `1/r_n`, centered at the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub half_width: f64,
    pub spacing: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { half_width: 6.0, spacing: 0.1 }
    }
}

/// Fits `data` with the estimator matching `dgp`; grid searches are
/// centered at `center` and scaled by `rate`.
pub fn fit_dgp(dgp: &DgpSpec, data: &Dataset, center: &[f64], rate: f64, grid: GridPolicy) -> Result<FitResult> {
    match dgp {
        DgpSpec::Erm(g) => fit_erm(data, g.theta0.len()),
        DgpSpec::MaxScore(_) => {
            fit_maxscore(data, &ThetaGrid::centered(center, grid.half_width / rate, grid.spacing / rate)?)
        }
        DgpSpec::ThreshReg(_) => {
            fit_threshreg(data, &ThetaGrid::centered(center, grid.half_width / rate, grid.spacing / rate)?)
        }
    }
}

fn at_search_edge(dgp: &DgpSpec, fit: &FitResult, scaled: &[f64], grid: GridPolicy) -> bool {
    match dgp {
        DgpSpec::Erm(_) => fit.theta.iter().any(|t| *t <= 0.0 || *t >= 1.0),
        _ => scaled.iter().any(|s| s.abs() >= grid.half_width - 0.5 * grid.spacing),
    }
}

/// `reps` draws of `r_n(θ̂ − θ₀)`; replicate `r` uses substream `first + r`.
pub fn sampling_law_from(
    dgp: &DgpSpec,
    n: usize,
    first: u64,
    reps: u64,
    rngp: RngPolicy,
    grid: GridPolicy,
    exec: Execution,
) -> Result<EmpiricalLaw> {
    dgp.validate()?;
    if reps < 100 {
        return Err(Error::InvalidSpec(format!("sampling laws need at least 100 replications, got {reps}")));
    }
    let theta0 = dgp.theta0().to_vec();
    let rate = dgp.rate(n);
    let rows = exec.try_map_reps(
        reps,
        || (),
        |_, r| -> Result<(Vec<f64>, f64, bool)> {
            let data = dgp.generate(n, &mut rngp.substream(first + r))?;
            let fit = fit_dgp(dgp, &data, &theta0, rate, grid)?;
            let scaled: Vec<f64> = fit.theta.iter().zip(&theta0).map(|(t, t0)| rate * (t - t0)).collect();
            let edge = at_search_edge(dgp, &fit, &scaled, grid);
            Ok((scaled, fit.objective, edge))
        },
    )?;
    let d = theta0.len();
    let mut draws = Vec::with_capacity(rows.len() * d);
    let mut values = Vec::with_capacity(rows.len());
    let mut edges = Vec::with_capacity(rows.len());
    for (s, v, e) in rows {
        draws.extend(s);
        values.push(v);
        edges.push(e);
    }
    EmpiricalLaw::new(d, draws, values, edges, rngp.master_seed)
}

pub fn sampling_law(
    dgp: &DgpSpec,
    n: usize,
    reps: u64,
    rngp: RngPolicy,
    grid: GridPolicy,
    exec: Execution,
) -> Result<EmpiricalLaw> {
    sampling_law_from(dgp, n, 0, reps, rngp, grid, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleDraws {
    pub query: PercentileQuery,
    pub failures: usize,
}

/// `scale·(λ'θ̃*_b − point)` over `b` subsamples of size `m` drawn without
/// replacement; `fitter` returns `λ'θ̃*` for a subsample.
#[allow(clippy::too_many_arguments)]
pub fn subsample_draws<F>(
    data: &Dataset,
    m: usize,
    b: u64,
    scale: f64,
    point: f64,
    fitter: F,
    rngp: RngPolicy,
    exec: Execution,
) -> Result<SubsampleDraws>
where
    F: Fn(&Dataset) -> Result<f64> + Sync + Send,
{
    let n = data.len();
    if m == 0 || m > n {
        return Err(Error::InvalidSpec(format!("subsample size must lie in 1..={n}, got {m}")));
    }
    if b == 0 {
        return Err(Error::InvalidSpec("need at least one subsample".into()));
    }
    let fits = exec.map_reps(
        b,
        || (),
        |_, r| {
            let mut rng = rngp.substream(r);
            let mut idx = index::sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            fitter(&data.subset(&idx)).map(|v| scale * (v - point))
        },
    );
    let failures = fits.iter().filter(|f| f.is_err()).count();
    if failures * 10 > fits.len() {
        return Err(Error::Fit(format!("{failures} of {b} subsample fits failed")));
    }
    let draws: Vec<f64> = fits.into_iter().flatten().collect();
    Ok(SubsampleDraws { query: PercentileQuery::new(draws)?, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub dgp: DgpSpec,
    pub n: usize,
    pub reps: u64,
    pub subsamples: u64,
    /// Defaults to `⌈n^{2/3}⌉`.
    #[serde(default)]
    pub m: Option<usize>,
    pub alpha: f64,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub grid: GridPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub rep: u64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub covered: bool,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n: usize,
    pub m: usize,
    pub subsamples: u64,
    pub reps: u64,
    pub alpha: f64,
    pub nominal: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_length: f64,
    pub rows: Vec<CoverageRow>,
}

/// Percentile-interval coverage of `λ'θ₀` with subsampling standing in for
/// the resampled estimator.
pub fn coverage_experiment(spec: &CoverageSpec, rngp: RngPolicy, exec: Execution) -> Result<CoverageReport> {
    let dgp = &spec.dgp;
    dgp.validate()?;
    if spec.lambda.len() != dgp.dim() {
        return Err(Error::Dimension { expected: dgp.dim(), got: spec.lambda.len() });
    }
    let n = spec.n;
    let m = spec.m.unwrap_or_else(|| (n as f64).powf(2.0 / 3.0).ceil() as usize).min(n);
    let theta0 = dgp.theta0();
    let lam = |t: &[f64]| -> f64 { t.iter().zip(&spec.lambda).map(|(a, b)| a * b).sum() };
    let target = lam(theta0);
    let (rn, rm) = (dgp.rate(n), dgp.rate(m));
    let data_rng = rngp.child(0);
    let mut rows = Vec::with_capacity(spec.reps as usize);
    for r in 0..spec.reps {
        let data = dgp.generate(n, &mut data_rng.substream(r))?;
        let fit = fit_dgp(dgp, &data, theta0, rn, spec.grid)?;
        let point = lam(&fit.theta);
        let center = fit.theta.clone();
        let fitter = |sub: &Dataset| fit_dgp(dgp, sub, &center, rm, spec.grid).map(|f| lam(&f.theta));
        let sub = subsample_draws(&data, m, spec.subsamples, rm / rn, point, fitter, rngp.child(1 + r), exec)?;
        let (lo, hi) = percentile_interval(point, &sub.query, spec.alpha)?;
        rows.push(CoverageRow { rep: r, point, lo, hi, covered: lo <= target && target <= hi, failures: sub.failures });
    }
    let covered = rows.iter().filter(|r| r.covered).count();
    let coverage = covered as f64 / rows.len().max(1) as f64;
    Ok(CoverageReport {
        n,
        m,
        subsamples: spec.subsamples,
        reps: spec.reps,
        alpha: spec.alpha,
        nominal: 1.0 - spec.alpha,
        coverage,
        coverage_se: binomial_se(coverage, rows.len()),
        mean_length: rows.iter().map(|r| r.hi - r.lo).sum::<f64>() / rows.len().max(1) as f64,
        rows,
    })
}
