//! Continuity evidence for argmax laws.
//!
//! A genuine atom keeps its mass as the lattice is refined, while
//! discretization mass shrinks in proportion to the spacing. The refinement
//! profile is therefore the main discriminator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::quantile_inf;
use crate::exec::Execution;
use crate::kernels::{CovSpec, MeanSpec};
use crate::rng::RngPolicy;
use crate::simulate::{
    argmax_index, build_lattice, fill_bm_at_times, fill_bm_exact_1d, mc_argmax, EmpiricalLaw, McOptions,
};

/// Binomial standard error of a proportion.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Fraction of draws with `|ŝ_l − t| ≤ h/2`, with its standard error.
pub fn atom_mass(law: &EmpiricalLaw, l: usize, t: f64, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("window width must be positive, got {h}")));
    }
    if l >= law.dim() {
        return Err(Error::Dimension { expected: law.dim(), got: l + 1 });
    }
    let n = law.replications();
    if n == 0 {
        return Err(Error::Empty("law draws"));
    }
    let hits = law.draws().filter(|d| (d[l] - t).abs() <= h / 2.0).count();
    let p = hits as f64 / n as f64;
    Ok((p, binomial_se(p, n)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomLevel {
    pub ppu: u32,
    pub h: f64,
    pub mass: f64,
    pub stderr: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomProfile {
    pub coordinate: usize,
    pub location: f64,
    /// Ordered by decreasing `h`.
    pub levels: Vec<AtomLevel>,
}

impl AtomProfile {
    /// `mass[i+1] / mass[i]` for consecutive levels.
    pub fn ratios(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| w[1].mass / w[0].mass).collect()
    }

    /// Whether every consecutive ratio is within `[lo, hi]`, widened by
    /// `z` standard errors of the ratio (delta method).
    pub fn ratios_within(&self, lo: f64, hi: f64, z: f64) -> bool {
        self.levels.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.mass == 0.0 {
                return false;
            }
            let r = b.mass / a.mass;
            let se = r * ((a.stderr / a.mass).powi(2) + (b.stderr / b.mass.max(f64::MIN_POSITIVE)).powi(2)).sqrt();
            r >= lo - z * se && r <= hi + z * se
        })
    }
}

/// Lattice-point mass at `t` for each refinement level, each from a fresh law.
#[allow(clippy::too_many_arguments)]
pub fn continuity_profile(
    k: &CovSpec,
    m: &MeanSpec,
    l: usize,
    t: f64,
    extent: f64,
    ppu_levels: &[u32],
    reps: u64,
    rngp: RngPolicy,
    opts: McOptions,
) -> Result<AtomProfile> {
    if ppu_levels.len() < 3 {
        return Err(Error::InvalidSpec("a continuity profile needs at least 3 refinement levels".into()));
    }
    let mut levels = Vec::with_capacity(ppu_levels.len());
    let mut sorted = ppu_levels.to_vec();
    sorted.sort_unstable();
    for &ppu in &sorted {
        let lat = build_lattice(k.dim(), extent, ppu)?;
        let law = mc_argmax(k, m, &lat, reps, rngp.child(u64::from(ppu)), opts)?;
        let h = lat.spacing();
        let (mass, stderr) = atom_mass(&law, l, t, h)?;
        levels.push(AtomLevel { ppu, h, mass, stderr, replications: law.replications() });
    }
    Ok(AtomProfile { coordinate: l, location: t, levels })
}

/// Largest single-point mass of the `l`-th marginal and its location
/// (smallest location on ties).
pub fn max_marginal_jump(law: &EmpiricalLaw, l: usize) -> Result<(f64, f64)> {
    if l >= law.dim() {
        return Err(Error::Dimension { expected: law.dim(), got: l + 1 });
    }
    let mut xs = law.marginal(l);
    if xs.is_empty() {
        return Err(Error::Empty("law draws"));
    }
    xs.sort_by(f64::total_cmp);
    let (mut best_loc, mut best) = (xs[0], 0usize);
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        if j - i > best {
            best = j - i;
            best_loc = xs[i];
        }
        i = j;
    }
    Ok((best_loc, best as f64 / xs.len() as f64))
}

/// Monitoring times on `(0, 1]`: the lattice points plus `2^{-j}`.
pub fn calibration_grid(ppu: u32) -> Vec<f64> {
    let mut t: Vec<f64> = (1..=ppu).map(|i| f64::from(i) / f64::from(ppu)).collect();
    t.extend((1..=40).map(|j| 0.5f64.powi(j)));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::Domain(format!("γ must lie in (0, 1/2), got {gamma}")));
    }
    Ok(())
}

/// Replicates `first..first+reps` of `sup_{s ∈ grid} s^{-γ} σB(s)`.
pub fn sup_sample(
    gamma: f64,
    sigma2: f64,
    ppu: u32,
    first: u64,
    reps: u64,
    rngp: RngPolicy,
    exec: Execution,
) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("σ² must be positive, got {sigma2}")));
    }
    if ppu == 0 {
        return Err(Error::InvalidSpec("points per unit must be at least 1".into()));
    }
    let times = calibration_grid(ppu);
    let weights: Vec<f64> = times.iter().map(|s| s.powf(-gamma)).collect();
    let sigma = sigma2.sqrt();
    Ok(exec.map_reps(
        reps,
        || vec![0.0; times.len()],
        |buf, r| {
            fill_bm_at_times(&times, sigma, &mut rngp.substream(first + r), buf);
            buf.iter().zip(&weights).map(|(b, w)| b * w).fold(f64::NEG_INFINITY, f64::max)
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub gamma: f64,
    pub sigma2: f64,
    pub q: f64,
    pub ppu: u32,
    pub replications: u64,
    pub c: f64,
    /// `P[sup ≥ c]` re-estimated on fresh replicates.
    pub exceedance: f64,
    pub exceedance_se: f64,
}

impl Calibration {
    /// How many standard errors the exceedance sits below 1/4.
    pub fn margin_se(&self) -> f64 {
        (0.25 - self.exceedance) / self.exceedance_se
    }
}

/// `c` as the empirical `q`-quantile of the weighted supremum; replicates
/// `0..R` estimate the quantile and `R..2R` re-estimate the exceedance.
pub fn calibrate_c(
    gamma: f64,
    sigma2: f64,
    ppu: u32,
    reps: u64,
    q: f64,
    rngp: RngPolicy,
    exec: Execution,
) -> Result<Calibration> {
    check_gamma(gamma)?;
    if !(0.75..1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level must lie in [3/4, 1), got {q}")));
    }
    if reps == 0 {
        return Err(Error::InvalidSpec("replications must be at least 1".into()));
    }
    let mut sups = sup_sample(gamma, sigma2, ppu, 0, reps, rngp, exec)?;
    sups.sort_by(f64::total_cmp);
    let c = quantile_inf(&sups, q)?;
    let fresh = sup_sample(gamma, sigma2, ppu, reps, reps, rngp, exec)?;
    let exceed = fresh.iter().filter(|v| **v >= c).count() as f64 / reps as f64;
    Ok(Calibration {
        gamma,
        sigma2,
        q,
        ppu,
        replications: reps,
        c,
        exceedance: exceed,
        exceedance_se: binomial_se(exceed, reps as usize),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityReport {
    pub gamma: f64,
    pub c: f64,
    pub sigma2: f64,
    pub extent: f64,
    pub ppu: u32,
    pub replications: u64,
    pub count_zero: u64,
    pub count_pos: u64,
    pub count_neg: u64,
    pub p_zero: f64,
    pub p_pos: f64,
    pub p_neg: f64,
    pub se_zero: f64,
    pub se_pos: f64,
    pub se_neg: f64,
    /// `P[sup_{(0,1]} s^{-γ} 𝒢^μ(s) ≥ c]` on the same paths.
    pub sup_quantile_check: f64,
    pub sup_quantile_se: f64,
    pub boundary_fraction: f64,
}

impl DiscontinuityReport {
    pub fn partition_exact(&self) -> bool {
        self.count_zero + self.count_pos + self.count_neg == self.replications
    }

    pub fn zero_detected(&self, z: f64) -> bool {
        self.p_zero >= z * self.se_zero && self.p_zero > 0.0
    }

    pub fn pos_below_half(&self, z: f64) -> bool {
        self.p_pos <= 0.5 - z * self.se_pos
    }

    pub fn neg_below_half(&self, z: f64) -> bool {
        self.p_neg <= 0.5 - z * self.se_neg
    }

    /// `|Δp_zero|` against another run and the pooled standard error.
    pub fn zero_shift(&self, other: &DiscontinuityReport) -> (f64, f64) {
        ((self.p_zero - other.p_zero).abs(), (self.se_zero.powi(2) + other.se_zero.powi(2)).sqrt())
    }
}

/// Simulates `σB + PiecewisePowerMean(c, γ)` on `[-N, N]` at spacing `1/ppu`.
#[allow(clippy::too_many_arguments)]
pub fn discontinuity_experiment(
    gamma: f64,
    c: f64,
    sigma2: f64,
    extent: f64,
    ppu: u32,
    reps: u64,
    rngp: RngPolicy,
    exec: Execution,
) -> Result<DiscontinuityReport> {
    check_gamma(gamma)?;
    if !(c > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("c and σ² must be positive, got c={c}, σ²={sigma2}")));
    }
    if ppu < 100 {
        return Err(Error::Domain(format!("the discontinuity lattice needs ppu ≥ 100, got {ppu}")));
    }
    if reps == 0 {
        return Err(Error::InvalidSpec("replications must be at least 1".into()));
    }
    let lat = build_lattice(1, extent, ppu)?;
    let m = MeanSpec::PiecewisePowerMean { c, gamma };
    let mean = crate::simulate::mean_on_lattice(&m, &lat)?;
    let origin = lat.origin_index();
    let unit = ppu as usize;
    let weights: Vec<f64> = (1..=unit).map(|i| lat.point(origin + i)[0].powf(-gamma)).collect();
    let rows = exec.map_reps(
        reps,
        || vec![0.0; lat.len()],
        |buf, r| {
            fill_bm_exact_1d(&lat, sigma2, &mut rngp.substream(r), buf);
            let exceeds = (1..=unit).any(|i| buf[origin + i] * weights[i - 1] >= c);
            for (v, mu) in buf.iter_mut().zip(&mean) {
                *v += mu;
            }
            let i = argmax_index(buf);
            (i.cmp(&origin), exceeds, lat.is_boundary(i))
        },
    );
    let (mut zero, mut pos, mut neg, mut exc, mut bnd) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (side, e, b) in rows {
        match side {
            std::cmp::Ordering::Equal => zero += 1,
            std::cmp::Ordering::Greater => pos += 1,
            std::cmp::Ordering::Less => neg += 1,
        }
        exc += u64::from(e);
        bnd += u64::from(b);
    }
    let n = reps as f64;
    let p = |k: u64| k as f64 / n;
    let se = |k: u64| binomial_se(p(k), reps as usize);
    Ok(DiscontinuityReport {
        gamma,
        c,
        sigma2,
        extent,
        ppu,
        replications: reps,
        count_zero: zero,
        count_pos: pos,
        count_neg: neg,
        p_zero: p(zero),
        p_pos: p(pos),
        p_neg: p(neg),
        se_zero: se(zero),
        se_pos: se(pos),
        se_neg: se(neg),
        sup_quantile_check: p(exc),
        sup_quantile_se: se(exc),
        boundary_fraction: p(bnd),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcjProbe {
    pub s: f64,
    pub etas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub consistent: bool,
}

/// Finite-difference look at `(μ(s+η) − μ(s))/√η` as `η ↓ 0`. A numerical
/// diagnostic only: it cannot establish the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcjReport {
    pub probes: Vec<CcjProbe>,
    pub conclusive: bool,
}

impl CcjReport {
    pub fn all_consistent(&self) -> bool {
        self.probes.iter().all(|p| p.consistent)
    }
}

pub fn ccj_condition_check(m: &MeanSpec, probes: &[f64], etas: &[f64]) -> Result<CcjReport> {
    if m.dim() != 1 {
        return Err(Error::Dimension { expected: 1, got: m.dim() });
    }
    m.validate()?;
    if etas.len() < 3 || etas.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidSpec("need at least 3 positive η levels".into()));
    }
    let mut etas = etas.to_vec();
    etas.sort_by(|a, b| b.total_cmp(a));
    let probes = probes
        .iter()
        .map(|&s| {
            let ratios: Vec<f64> =
                etas.iter().map(|&e| (m.eval_unchecked(&[s + e]) - m.eval_unchecked(&[s])) / e.sqrt()).collect();
            let tail = &ratios[ratios.len() - 3..];
            let consistent =
                tail.iter().all(|r| *r == 0.0) || tail.windows(2).all(|w| w[1].abs() < w[0].abs() * (1.0 - 1e-3));
            CcjProbe { s, etas: etas.clone(), ratios, consistent }
        })
        .collect();
    Ok(CcjReport { probes, conclusive: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(draws: Vec<f64>) -> EmpiricalLaw {
        EmpiricalLaw::from_points(1, draws, 0).unwrap()
    }

    #[test]
    fn atom_mass_examples() {
        assert_eq!(atom_mass(&law(vec![0.0; 5]), 0, 0.0, 0.1).unwrap().0, 1.0);
        let n = 20_000;
        let uniform = law((0..n).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect());
        let (m, se) = atom_mass(&uniform, 0, 0.0, 0.1).unwrap();
        assert!((m - 0.05).abs() <= 3.0 * se.max(1e-4));
        assert!(atom_mass(&uniform, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn jump_examples() {
        assert_eq!(max_marginal_jump(&law(vec![1.0, 1.0, 2.0, 3.0]), 0).unwrap(), (1.0, 0.5));
        let j = max_marginal_jump(&law((0..40).map(f64::from).collect()), 0).unwrap();
        assert_eq!(j.1, 1.0 / 40.0);
    }

    #[test]
    fn zero_noise_profile_is_all_mass() {
        let k = CovSpec::SeparableBm { f: vec![0.0] };
        let m = MeanSpec::PowerMean { c: 1.0, gamma: 2.0 };
        let p =
            continuity_profile(&k, &m, 0, 0.0, 2.0, &[4, 8, 16], 10, RngPolicy::new(1), McOptions::default()).unwrap();
        assert!(p.levels.iter().all(|l| l.mass == 1.0));
        assert!(p.levels.windows(2).all(|w| w[0].h > w[1].h));
    }

    #[test]
    fn calibration_guards_and_monotonicity() {
        let rp = RngPolicy::new(3);
        assert!(calibrate_c(0.5, 1.0, 50, 100, 0.8, rp, Execution::Sequential).is_err());
        assert!(calibrate_c(0.25, 1.0, 50, 100, 0.5, rp, Execution::Sequential).is_err());
        let mut sups = sup_sample(0.25, 1.0, 50, 0, 2000, rp, Execution::Parallel).unwrap();
        sups.sort_by(f64::total_cmp);
        let cs: Vec<f64> = [0.75, 0.8, 0.85, 0.9, 0.95].iter().map(|q| quantile_inf(&sups, *q).unwrap()).collect();
        assert!(cs.windows(2).all(|w| w[0] <= w[1]));
        let a = calibrate_c(0.25, 1.0, 50, 500, 0.8, rp, Execution::Sequential).unwrap();
        let b = calibrate_c(0.25, 1.0, 50, 500, 0.8, rp, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_grid_has_dyadic_points() {
        let g = calibration_grid(10);
        assert!(g.contains(&0.5) && g.contains(&0.125) && g.contains(&1.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]) && g[0] > 0.0);
    }

    #[test]
    fn discontinuity_partition() {
        let r =
            discontinuity_experiment(0.25, 1.0, 1.0, 2.0, 100, 500, RngPolicy::new(1), Execution::Parallel).unwrap();
        assert!(r.partition_exact());
        assert!((r.p_zero + r.p_pos + r.p_neg - 1.0).abs() < 1e-12);
        assert!(discontinuity_experiment(0.25, 1.0, 1.0, 2.0, 50, 10, RngPolicy::new(1), Execution::Parallel).is_err());
    }

    #[test]
    fn ccj_examples() {
        let etas = [1e-2, 1e-3, 1e-4, 1e-5];
        let check = |gamma: f64| {
            ccj_condition_check(&MeanSpec::PowerMean { c: 1.0, gamma }, &[0.0], &etas).unwrap().all_consistent()
        };
        assert!(check(1.0));
        assert!(!check(0.25));
        assert!(!check(0.5));
        let r = ccj_condition_check(&MeanSpec::PowerMean { c: 1.0, gamma: 1.0 }, &[0.0], &etas).unwrap();
        assert!(!r.conclusive);
        assert!((r.probes[0].ratios[0] + 0.1).abs() < 1e-12);
        assert!(ccj_condition_check(&MeanSpec::Linear { g: vec![1.0, 0.0] }, &[0.0], &etas).is_err());
    }
}
