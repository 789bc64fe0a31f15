//! Model-space representations of the limit kernels and means.
//!
//! A kernel `C_N` on `[-N, N]^d` has a model `(Ω_N, ν_N, e_N)` when
//! `C_N(s,t) = ∫ e_N(ω;s) e_N(ω;t) dν_N(ω)`, and `μ_N` lies in the RKHS when
//! additionally `μ_N(s) = ∫ e_N(ω;s) l_N(ω) dν_N(ω)` for some `l_N ∈ L₂(ν_N)`.
//! The checks below evaluate both integrals numerically and compare them
//! with the closed-form kernel and mean.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{validate_atoms, CovSpec, Matrix, MeanSpec, MixtureAtom};
use crate::rng::RngPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `ν_N = λ × P_x` over the atoms.
    MaxScore { atoms: Vec<MixtureAtom> },
    /// `ν_N = λ^d`, with `f_ℓ` and `p_ℓ` at each cut.
    Erm { f: Vec<f64>, p: Vec<f64> },
    /// `ν_N = λ × P_w` over the atoms.
    ThreshReg { atoms: Vec<MixtureAtom> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    pub family: Family,
    pub extent: f64,
    /// Multiplies the `N√d‖x‖` truncation radius of `l_N`.
    #[serde(default = "one")]
    pub truncation_scale: f64,
}

fn one() -> f64 {
    1.0
}

/// A point of `Ω_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omega<'a> {
    /// `(ω₁, atom index)` for the mixture families.
    Atom { w1: f64, atom: usize },
    /// `ω ∈ ℝ^d` for ERM.
    Point(&'a [f64]),
}

impl ModelSpace {
    pub fn maxscore(atoms: Vec<MixtureAtom>, extent: f64) -> Self {
        Self { family: Family::MaxScore { atoms }, extent, truncation_scale: 1.0 }
    }

    pub fn erm(f: Vec<f64>, p: Vec<f64>, extent: f64) -> Self {
        Self { family: Family::Erm { f, p }, extent, truncation_scale: 1.0 }
    }

    pub fn threshreg(atoms: Vec<MixtureAtom>, extent: f64) -> Self {
        Self { family: Family::ThreshReg { atoms }, extent, truncation_scale: 1.0 }
    }

    pub fn with_truncation_scale(mut self, scale: f64) -> Self {
        self.truncation_scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            Family::MaxScore { atoms } | Family::ThreshReg { atoms } => atoms.first().map_or(0, |a| a.x.len()),
            Family::Erm { f, .. } => f.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extent >= 1.0) || !self.extent.is_finite() {
            return Err(Error::InvalidSpec(format!("extent must be ≥ 1, got {}", self.extent)));
        }
        if !(self.truncation_scale > 0.0) {
            return Err(Error::InvalidSpec("truncation scale must be positive".into()));
        }
        match &self.family {
            Family::MaxScore { atoms } | Family::ThreshReg { atoms } => {
                validate_atoms(atoms)?;
            }
            Family::Erm { f, p } => {
                check_dim(f.len(), p.len())?;
                if f.is_empty() || f.len() > 2 {
                    return Err(Error::InvalidSpec(format!("ERM model spaces support d ∈ {{1, 2}}, got {}", f.len())));
                }
                if f.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidSpec("ERM densities must be nonnegative".into()));
                }
            }
        }
        Ok(())
    }

    /// The kernel this model should reproduce.
    pub fn cov_spec(&self) -> CovSpec {
        match &self.family {
            Family::MaxScore { atoms } => {
                CovSpec::MixtureBm { atoms: atoms.iter().map(|a| a.clone().with_a(1.0)).collect() }
            }
            Family::ThreshReg { atoms } => CovSpec::MixtureBm { atoms: atoms.clone() },
            Family::Erm { f, .. } => CovSpec::SeparableBm { f: f.clone() },
        }
    }

    /// The mean this model should reproduce (may carry a nonstandard sign
    /// pattern for ERM, so it is evaluated directly rather than validated).
    pub fn mean_spec(&self) -> MeanSpec {
        match &self.family {
            Family::MaxScore { atoms } => {
                let d = self.dim();
                let mut v = vec![vec![0.0; d]; d];
                for a in atoms {
                    for i in 0..d {
                        for j in 0..d {
                            v[i][j] += a.w * a.fu * a.f * a.x[i] * a.x[j];
                        }
                    }
                }
                MeanSpec::Quadratic { v: Matrix::from_rows(v).expect("square by construction") }
            }
            Family::ThreshReg { atoms } => MeanSpec::ThreshRegAbs { atoms: atoms.clone() },
            Family::Erm { f, p } => MeanSpec::SeparableQuadratic {
                kappa: f.iter().zip(p).enumerate().map(|(l, (f, p))| -sign_l(l) * p * f).collect(),
            },
        }
    }

    fn radius(&self, atom: &MixtureAtom) -> f64 {
        self.truncation_scale * self.extent * (self.dim() as f64).sqrt() * atom.norm()
    }

    fn check_point(&self, s: &[f64]) -> Result<()> {
        check_dim(self.dim(), s.len())?;
        if s.iter().any(|v| v.abs() > self.extent) {
            return Err(Error::Domain(format!("point {s:?} lies outside [-{n}, {n}]^d", n = self.extent)));
        }
        Ok(())
    }

    /// Uniform density on `[-N, N]^d` at `ω`.
    fn u_n(&self, w: &[f64]) -> f64 {
        if w.iter().all(|v| v.abs() <= self.extent) {
            (2.0 * self.extent).powi(-(w.len() as i32))
        } else {
            0.0
        }
    }
}

/// `(-1)^ℓ` with `ℓ = l + 1`.
fn sign_l(l: usize) -> f64 {
    if l.is_multiple_of(2) {
        -1.0
    } else {
        1.0
    }
}

#[inline]
fn between(w1: f64, v: f64) -> bool {
    (0.0 <= w1 && w1 <= v) || (v <= w1 && w1 < 0.0)
}

/// Per-coordinate ERM factor `(ω − ∛s/2)·[indicators on ∛s]`.
#[inline]
fn erm_g(w: f64, s: f64) -> f64 {
    let c = s.cbrt();
    if between(w, c) {
        w - c / 2.0
    } else {
        0.0
    }
}

fn atoms_of(ms: &ModelSpace) -> Option<&[MixtureAtom]> {
    match &ms.family {
        Family::MaxScore { atoms } | Family::ThreshReg { atoms } => Some(atoms),
        Family::Erm { .. } => None,
    }
}

fn e_atom(ms: &ModelSpace, w1: f64, atom: &MixtureAtom, s: &[f64]) -> f64 {
    if !between(w1, atom.project(s)) {
        return 0.0;
    }
    match ms.family {
        Family::MaxScore { .. } => atom.f.sqrt(),
        _ => (atom.a * atom.f).sqrt(),
    }
}

fn l_atom(ms: &ModelSpace, w1: f64, atom: &MixtureAtom) -> f64 {
    if w1.abs() > ms.radius(atom) {
        return 0.0;
    }
    match ms.family {
        Family::MaxScore { .. } => -2.0 * w1.abs() * atom.fu * atom.f.sqrt(),
        _ => {
            if atom.a == 0.0 {
                if atom.f * atom.b == 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                -0.5 * atom.b * (atom.f / atom.a).sqrt()
            }
        }
    }
}

fn e_point(ms: &ModelSpace, w: &[f64], s: &[f64]) -> f64 {
    let Family::Erm { f, .. } = &ms.family else { unreachable!() };
    let k = (24.0 * ms.extent * ms.u_n(w)).sqrt();
    if k == 0.0 {
        return 0.0;
    }
    k * (0..f.len()).map(|l| erm_g(w[l], s[l]) * f[l].sqrt()).sum::<f64>()
}

fn l_point(ms: &ModelSpace, w: &[f64]) -> f64 {
    let Family::Erm { f, p } = &ms.family else { unreachable!() };
    let k = (75.0 * ms.extent * ms.u_n(w) / 2.0).sqrt();
    if k == 0.0 {
        return 0.0;
    }
    k * (0..f.len()).map(|l| w[l].powi(3) * w[l].abs() * sign_l(l) * p[l] * f[l].sqrt()).sum::<f64>()
}

fn omega_matches<'a>(ms: &'a ModelSpace, w: &Omega<'_>) -> Result<Option<(&'a MixtureAtom, f64)>> {
    match (w, atoms_of(ms)) {
        (Omega::Atom { w1, atom }, Some(atoms)) => {
            let a = atoms.get(*atom).ok_or_else(|| Error::Domain(format!("atom index {atom} out of range")))?;
            Ok(Some((a, *w1)))
        }
        (Omega::Point(p), None) => {
            check_dim(ms.dim(), p.len())?;
            Ok(None)
        }
        _ => Err(Error::InvalidSpec("ω does not match the model-space family".into())),
    }
}

pub fn eval_e(ms: &ModelSpace, w: &Omega<'_>, s: &[f64]) -> Result<f64> {
    ms.check_point(s)?;
    Ok(match (omega_matches(ms, w)?, w) {
        (Some((atom, w1)), _) => e_atom(ms, w1, atom, s),
        (None, Omega::Point(p)) => e_point(ms, p, s),
        _ => unreachable!(),
    })
}

pub fn eval_l(ms: &ModelSpace, w: &Omega<'_>) -> Result<f64> {
    Ok(match (omega_matches(ms, w)?, w) {
        (Some((atom, w1)), _) => l_atom(ms, w1, atom),
        (None, Omega::Point(p)) => l_point(ms, p),
        _ => unreachable!(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// Piecewise Gauss–Legendre between the integrand's breakpoints; the
    /// error estimate is the change from half as many nodes.
    Deterministic { nodes: usize },
    /// Uniform sampling of `ω₁` (or `ω`) on the truncation box; the error
    /// estimate is one standard error.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::Deterministic { nodes: 64 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::Deterministic { nodes } if nodes < 64 => {
                Err(Error::InvalidSpec(format!("deterministic quadrature needs ≥ 64 nodes, got {nodes}")))
            }
            QuadratureSpec::MonteCarlo { samples, .. } if samples < 10_000 => {
                Err(Error::InvalidSpec(format!("Monte Carlo quadrature needs ≥ 10⁴ samples, got {samples}")))
            }
            _ => Ok(()),
        }
    }
}

/// Estimate and error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Estimate {
    value: f64,
    err: f64,
}

struct Rule {
    fine: GaussLegendre,
    coarse: GaussLegendre,
}

impl Rule {
    fn new(nodes: usize) -> Self {
        let n = NonZeroUsize::new(nodes).expect("validated node count");
        let half = NonZeroUsize::new((nodes / 2).max(1)).expect("positive");
        Self { fine: GaussLegendre::new(n), coarse: GaussLegendre::new(half) }
    }
}

fn breakpoints(lo: f64, hi: f64, inner: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = inner.iter().copied().filter(|v| *v > lo && *v < hi).collect();
    b.push(lo);
    b.push(hi);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn piecewise_1d(rule: &GaussLegendre, bps: &[f64], f: &dyn Fn(f64) -> f64) -> f64 {
    bps.windows(2).map(|w| rule.integrate(w[0], w[1], f)).sum()
}

fn piecewise_2d(rule: &GaussLegendre, b1: &[f64], b2: &[f64], f: &dyn Fn(f64, f64) -> f64) -> f64 {
    piecewise_1d(rule, b1, &|x| piecewise_1d(rule, b2, &|y| f(x, y)))
}

/// Integrates a function over `ν_N`. For the mixture families `g` receives
/// `(atom, ω₁)` and `inner` lists per-atom breakpoints; for ERM `g` receives
/// `ω` and `inner` lists per-coordinate breakpoints.
struct Integrator<'a> {
    ms: &'a ModelSpace,
    quad: QuadratureSpec,
    rule: Option<Rule>,
}

impl<'a> Integrator<'a> {
    fn new(ms: &'a ModelSpace, quad: QuadratureSpec) -> Result<Self> {
        ms.validate()?;
        quad.validate()?;
        let rule = match quad {
            QuadratureSpec::Deterministic { nodes } => Some(Rule::new(nodes)),
            QuadratureSpec::MonteCarlo { .. } => None,
        };
        Ok(Self { ms, quad, rule })
    }

    fn atoms(
        &self,
        g: &dyn Fn(&MixtureAtom, f64) -> f64,
        inner: &dyn Fn(&MixtureAtom) -> Vec<f64>,
        stream: u64,
    ) -> Estimate {
        let atoms = atoms_of(self.ms).expect("mixture family");
        match (&self.rule, self.quad) {
            (Some(rule), _) => {
                let (mut fine, mut coarse) = (0.0, 0.0);
                for a in atoms {
                    let r = self.ms.radius(a);
                    let bps = breakpoints(-r, r, &inner(a));
                    let f = |w1: f64| g(a, w1);
                    fine += a.w * piecewise_1d(&rule.fine, &bps, &f);
                    coarse += a.w * piecewise_1d(&rule.coarse, &bps, &f);
                }
                Estimate { value: fine, err: (fine - coarse).abs() }
            }
            (None, QuadratureSpec::MonteCarlo { samples, seed }) => {
                let mut rng = RngPolicy::new(seed).substream(stream);
                let (mut value, mut var) = (0.0, 0.0);
                for a in atoms {
                    let r = self.ms.radius(a);
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for _ in 0..samples {
                        let w1 = if r > 0.0 { rng.random_range(-r..r) } else { 0.0 };
                        let v = 2.0 * r * g(a, w1);
                        s1 += v;
                        s2 += v * v;
                    }
                    let n = samples as f64;
                    let mean = s1 / n;
                    value += a.w * mean;
                    var += a.w * a.w * (s2 / n - mean * mean).max(0.0) / n;
                }
                Estimate { value, err: var.sqrt() }
            }
            _ => unreachable!(),
        }
    }

    fn points(&self, g: &dyn Fn(&[f64]) -> f64, inner: &[Vec<f64>], stream: u64) -> Estimate {
        let n_ext = self.ms.extent;
        let d = self.ms.dim();
        match (&self.rule, self.quad) {
            (Some(rule), _) => {
                let bps: Vec<Vec<f64>> = inner.iter().map(|i| breakpoints(-n_ext, n_ext, i)).collect();
                let run = |r: &GaussLegendre| match d {
                    1 => piecewise_1d(r, &bps[0], &|x| g(&[x])),
                    _ => piecewise_2d(r, &bps[0], &bps[1], &|x, y| g(&[x, y])),
                };
                let fine = run(&rule.fine);
                let coarse = run(&rule.coarse);
                Estimate { value: fine, err: (fine - coarse).abs() }
            }
            (None, QuadratureSpec::MonteCarlo { samples, seed }) => {
                let mut rng = RngPolicy::new(seed).substream(stream);
                let vol = (2.0 * n_ext).powi(d as i32);
                let (mut s1, mut s2) = (0.0, 0.0);
                let mut w = vec![0.0; d];
                for _ in 0..samples {
                    for v in w.iter_mut() {
                        *v = rng.random_range(-n_ext..n_ext);
                    }
                    let v = vol * g(&w);
                    s1 += v;
                    s2 += v * v;
                }
                let n = samples as f64;
                let mean = s1 / n;
                Estimate { value: mean, err: ((s2 / n - mean * mean).max(0.0) / n).sqrt() }
            }
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationRow {
    pub s: Vec<f64>,
    /// Empty for mean checks.
    pub t: Vec<f64>,
    /// The model-space integral.
    pub lhs: f64,
    /// The closed-form kernel or mean.
    pub rhs: f64,
    pub error: f64,
    /// Quadrature error estimate (refinement change or one MC standard error).
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub rows: Vec<RepresentationRow>,
    pub max_error: f64,
    pub max_error_estimate: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

fn summarize(rows: Vec<RepresentationRow>, quad: QuadratureSpec, tol: f64) -> RepresentationReport {
    let max_error = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let max_est = rows.iter().map(|r| r.error_estimate).fold(0.0, f64::max);
    let finite = rows.iter().all(|r| r.lhs.is_finite() && r.rhs.is_finite());
    let verdict = match quad {
        _ if !finite => Verdict::Fail,
        QuadratureSpec::Deterministic { .. } => {
            if max_est > tol {
                Verdict::Inconclusive
            } else if max_error <= tol {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        QuadratureSpec::MonteCarlo { .. } => {
            if rows.iter().all(|r| r.error <= 3.0 * r.error_estimate + tol) {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
    };
    RepresentationReport { rows, max_error, max_error_estimate: max_est, tolerance: tol, verdict }
}

/// Compares `∫ e(·;s) e(·;t) dν_N` with `C(s,t)` on each pair.
pub fn verify_cov_representation(
    ms: &ModelSpace,
    pairs: &[(Vec<f64>, Vec<f64>)],
    quad: QuadratureSpec,
    tol: f64,
) -> Result<RepresentationReport> {
    let integ = Integrator::new(ms, quad)?;
    let k = ms.cov_spec();
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, (s, t)) in pairs.iter().enumerate() {
        ms.check_point(s)?;
        ms.check_point(t)?;
        let est = match atoms_of(ms) {
            Some(_) => integ.atoms(
                &|a, w1| e_atom(ms, w1, a, s) * e_atom(ms, w1, a, t),
                &|a| vec![0.0, a.project(s), a.project(t)],
                i as u64,
            ),
            None => {
                let inner: Vec<Vec<f64>> = (0..ms.dim()).map(|l| vec![0.0, s[l].cbrt(), t[l].cbrt()]).collect();
                integ.points(&|w| e_point(ms, w, s) * e_point(ms, w, t), &inner, i as u64)
            }
        };
        let rhs = k.eval_unchecked(s, t);
        rows.push(RepresentationRow {
            s: s.clone(),
            t: t.clone(),
            lhs: est.value,
            rhs,
            error: (est.value - rhs).abs(),
            error_estimate: est.err,
        });
    }
    Ok(summarize(rows, quad, tol))
}

/// Compares `∫ e(·;s) l dν_N` with `μ(s)` at each point.
pub fn verify_mean_representation(
    ms: &ModelSpace,
    points: &[Vec<f64>],
    quad: QuadratureSpec,
    tol: f64,
) -> Result<RepresentationReport> {
    let integ = Integrator::new(ms, quad)?;
    let m = ms.mean_spec();
    let mut rows = Vec::with_capacity(points.len());
    for (i, s) in points.iter().enumerate() {
        ms.check_point(s)?;
        let est = match atoms_of(ms) {
            Some(_) => {
                integ.atoms(&|a, w1| e_atom(ms, w1, a, s) * l_atom(ms, w1, a), &|a| vec![0.0, a.project(s)], i as u64)
            }
            None => {
                let inner: Vec<Vec<f64>> = (0..ms.dim()).map(|l| vec![0.0, s[l].cbrt()]).collect();
                integ.points(&|w| e_point(ms, w, s) * l_point(ms, w), &inner, i as u64)
            }
        };
        let rhs = m.eval_unchecked(s);
        rows.push(RepresentationRow {
            s: s.clone(),
            t: vec![],
            lhs: est.value,
            rhs,
            error: (est.value - rhs).abs(),
            error_estimate: est.err,
        });
    }
    Ok(summarize(rows, quad, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `∫ l² dν_N`.
    pub value: f64,
    pub error_estimate: f64,
    pub finite: bool,
}

pub fn l2_norm_l(ms: &ModelSpace, quad: QuadratureSpec) -> Result<NormReport> {
    let integ = Integrator::new(ms, quad)?;
    let est = match atoms_of(ms) {
        Some(_) => integ.atoms(&|a, w1| l_atom(ms, w1, a).powi(2), &|_| vec![0.0], 0),
        None => {
            let inner = vec![vec![0.0]; ms.dim()];
            integ.points(&|w| l_point(ms, w).powi(2), &inner, 0)
        }
    };
    Ok(NormReport { value: est.value, error_estimate: est.err, finite: est.value.is_finite() })
}

/// The `ℓ ≠ ℓ′` part of `∫ e(·;s) e(·;t) dν_N` for ERM, integrated numerically.
pub fn erm_cross_term(ms: &ModelSpace, s: &[f64], t: &[f64], quad: QuadratureSpec) -> Result<f64> {
    let Family::Erm { f, .. } = &ms.family else {
        return Err(Error::InvalidSpec("cross terms are defined for the ERM family".into()));
    };
    ms.check_point(s)?;
    ms.check_point(t)?;
    let integ = Integrator::new(ms, quad)?;
    let d = f.len();
    let inner: Vec<Vec<f64>> = (0..d).map(|l| vec![0.0, s[l].cbrt(), t[l].cbrt()]).collect();
    let g = |w: &[f64]| {
        let k2 = 24.0 * ms.extent * ms.u_n(w);
        let mut acc = 0.0;
        for l in 0..d {
            for m in 0..d {
                if l != m {
                    acc += erm_g(w[l], s[l]) * f[l].sqrt() * erm_g(w[m], t[m]) * f[m].sqrt();
                }
            }
        }
        k2 * acc
    };
    Ok(integ.points(&g, &inner, 0).value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub steps: Vec<f64>,
    /// Finite-difference estimates of `∫ (μ_ℓ')² / f_ℓ` at each step.
    pub estimates: Vec<f64>,
    pub consistent: bool,
}

/// Heuristic check that each coordinate part has a square-integrable weak
/// derivative on `[-N, N]`: the finite-difference energy should settle
/// (relative change ≤ 5% over the last two refinements). Not conclusive.
pub fn tensor_membership_check(
    parts: &[&dyn Fn(f64) -> f64],
    scales: &[f64],
    extent: f64,
    refinements: u32,
) -> Result<Vec<MembershipVerdict>> {
    check_dim(parts.len(), scales.len())?;
    if refinements < 3 {
        return Err(Error::InvalidSpec("need at least 3 refinement levels".into()));
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidSpec("coordinate scales must be positive".into()));
    }
    let mut out = Vec::with_capacity(parts.len());
    for (mu, &scale) in parts.iter().zip(scales) {
        if mu(0.0) != 0.0 {
            return Err(Error::Domain("coordinate part is not zero at the origin".into()));
        }
        let mut steps = Vec::new();
        let mut est = Vec::new();
        for r in 0..refinements {
            let cells = 16usize << (2 * r);
            let h = 2.0 * extent / cells as f64;
            let energy: f64 = (0..cells)
                .map(|i| {
                    let a = -extent + i as f64 * h;
                    let slope = (mu(a + h) - mu(a)) / h;
                    slope * slope * h
                })
                .sum::<f64>()
                / scale;
            steps.push(h);
            est.push(energy);
        }
        let (a, b) = (est[est.len() - 2], est[est.len() - 1]);
        let consistent = b.is_finite() && ((a == 0.0 && b == 0.0) || (b - a).abs() <= 0.05 * a.abs().max(b.abs()));
        out.push(MembershipVerdict { steps, estimates: est, consistent });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: f64, f: f64) -> MixtureAtom {
        MixtureAtom::new(1.0, vec![x], f)
    }

    #[test]
    fn maxscore_point_values() {
        let ms = ModelSpace::maxscore(vec![single(1.0, 1.0).with_fu(0.25)], 2.0);
        assert_eq!(eval_e(&ms, &Omega::Atom { w1: 0.5, atom: 0 }, &[1.0]).unwrap(), 1.0);
        assert_eq!(eval_e(&ms, &Omega::Atom { w1: 0.5, atom: 0 }, &[0.0]).unwrap(), 0.0);
        assert_eq!(eval_l(&ms, &Omega::Atom { w1: 1.0, atom: 0 }).unwrap(), -0.5);
        assert_eq!(eval_l(&ms, &Omega::Atom { w1: 10.0, atom: 0 }).unwrap(), 0.0);
        assert!(eval_e(&ms, &Omega::Atom { w1: 0.5, atom: 0 }, &[3.0]).is_err());
        assert!(eval_e(&ms, &Omega::Point(&[0.5]), &[1.0]).is_err());
    }

    #[test]
    fn erm_point_values() {
        let ms = ModelSpace::erm(vec![1.0], vec![-1.0], 1.0);
        assert_eq!(eval_e(&ms, &Omega::Point(&[0.5]), &[1.0]).unwrap(), 0.0);
        // √(75·1·½ / 2) · 0.5³ · 0.5 · (−1)¹ · (−1) · 1
        let l = eval_l(&ms, &Omega::Point(&[0.5])).unwrap();
        assert!((l - 18.75f64.sqrt() * 0.0625).abs() < 1e-15);
        assert_eq!(eval_l(&ms, &Omega::Point(&[1.5])).unwrap(), 0.0);
    }

    #[test]
    fn analytic_integrals() {
        let quad = QuadratureSpec::default();
        let ms = ModelSpace::maxscore(vec![single(1.0, 1.0).with_fu(0.25)], 2.0);
        let c = verify_cov_representation(&ms, &[(vec![1.0], vec![2.0])], quad, 1e-10).unwrap();
        assert!((c.rows[0].lhs - 1.0).abs() < 1e-12);
        let m = verify_mean_representation(&ms, &[vec![1.0], vec![0.0]], quad, 1e-10).unwrap();
        assert!((m.rows[0].lhs + 0.25).abs() < 1e-12);
        assert_eq!(m.rows[1].lhs, 0.0);
        let tr = ModelSpace::threshreg(vec![single(1.0, 1.0).with_a(1.0).with_b(1.0)], 2.0);
        let m = verify_mean_representation(&tr, &[vec![1.0]], quad, 1e-10).unwrap();
        assert!((m.rows[0].lhs + 0.5).abs() < 1e-12);
        let erm = ModelSpace::erm(vec![1.0], vec![1.0], 1.0);
        for s in [0.1, 0.5, 1.0, -0.7] {
            let r = verify_cov_representation(&erm, &[(vec![s], vec![s])], quad, 1e-10).unwrap();
            assert!((r.rows[0].lhs - s.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_scaling() {
        let quad = QuadratureSpec::default();
        let base = l2_norm_l(&ModelSpace::maxscore(vec![single(1.0, 1.0).with_fu(0.25)], 2.0), quad).unwrap();
        let doubled = l2_norm_l(&ModelSpace::maxscore(vec![single(1.0, 1.0).with_fu(0.5)], 2.0), quad).unwrap();
        assert!(base.finite);
        assert!((doubled.value - 4.0 * base.value).abs() < 1e-12);
    }

    #[test]
    fn quadrature_spec_limits() {
        assert!(QuadratureSpec::Deterministic { nodes: 32 }.validate().is_err());
        assert!(QuadratureSpec::MonteCarlo { samples: 100, seed: 0 }.validate().is_err());
    }

    #[test]
    fn membership_examples() {
        let quad = |s: f64| 0.7 * s * s;
        let rough = |s: f64| -s.abs().powf(0.25);
        let zero = |_: f64| 0.0;
        let v = tensor_membership_check(&[&quad, &rough, &zero], &[1.0, 1.0, 1.0], 2.0, 4).unwrap();
        let exact = (2.0f64 * 0.7).powi(2) * 2.0 * 8.0 / 3.0;
        assert!((v[0].estimates.last().unwrap() - exact).abs() < 1e-3 * exact);
        assert!(v[0].consistent);
        assert!(!v[1].consistent);
        assert!(v[2].consistent && v[2].estimates.iter().all(|e| *e == 0.0));
    }
}
