use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{CovSpec, Matrix, MeanSpec, MixtureAtom};

/// A discrete covariate law: `P[x = support[j]] = prob[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateAtoms {
    pub prob: Vec<f64>,
    pub support: Vec<Vec<f64>>,
}

impl CovariateAtoms {
    pub fn single(x: Vec<f64>) -> Self {
        Self { prob: vec![1.0], support: vec![x] }
    }

    fn validate(&self) -> Result<usize> {
        if self.prob.is_empty() || self.prob.len() != self.support.len() {
            return Err(Error::InvalidSpec("covariate atoms need one probability per support point".into()));
        }
        let d = self.support[0].len();
        for x in &self.support {
            check_dim(d, x.len())?;
        }
        if self.prob.iter().any(|p| !(*p > 0.0)) || (self.prob.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec("covariate probabilities must be positive and sum to 1".into()));
        }
        Ok(d)
    }

    fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.prob).expect("validated probabilities")
    }
}

/// Law of the maximum score error `u` (median zero unless a point mass).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorLaw {
    Normal {
        sd: f64,
    },
    Uniform {
        half_width: f64,
    },
    /// Test surrogate with no density.
    PointMass {
        at: f64,
    },
}

impl ErrorLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ErrorLaw::Normal { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            ErrorLaw::Uniform { half_width } => rng.random_range(-half_width..=half_width),
            ErrorLaw::PointMass { at } => at,
        }
    }

    /// Density at zero.
    pub fn density_at_zero(&self) -> Result<f64> {
        match *self {
            ErrorLaw::Normal { sd } => Ok(normal_pdf(0.0, 0.0, sd)),
            ErrorLaw::Uniform { half_width } => Ok(0.5 / half_width),
            ErrorLaw::PointMass { .. } => Err(Error::InvalidSpec("a point-mass error law has no density".into())),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ErrorLaw::Normal { sd } => sd > 0.0,
            ErrorLaw::Uniform { half_width } => half_width > 0.0,
            ErrorLaw::PointMass { at } => at.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidSpec(format!("invalid error law {self:?}")));
        }
        Ok(())
    }
}

pub(crate) fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxScoreDgp {
    pub theta0: Vec<f64>,
    pub x: CovariateAtoms,
    /// `w | x ~ N(w_mean, w_sd²)`.
    pub w_mean: f64,
    pub w_sd: f64,
    pub u: ErrorLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmDgp {
    /// Ordered cut points in (0, 1).
    pub theta0: Vec<f64>,
    /// Slope of `P[y = 1 | x]` at each cut; the signs must alternate `+, −`.
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreshRegDgp {
    pub beta0: Vec<f64>,
    /// Direction of the threshold effect (normalized on use).
    pub delta_dir: Vec<f64>,
    #[serde(default = "one")]
    pub delta_scale: f64,
    /// `δ_n = delta_scale · n^{-a} · δ̄`.
    pub rate_a: f64,
    pub theta0: Vec<f64>,
    pub w: CovariateAtoms,
    /// Non-constant regressors are iid `N(0, x_sd²)`; the first is an intercept.
    pub x_sd: f64,
    /// `q | w ~ N(q_mean, q_sd²)`.
    pub q_mean: f64,
    pub q_sd: f64,
    pub u_sd: f64,
}

fn one() -> f64 {
    1.0
}

/// Synthetic data-generating processes with closed-form limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpSpec {
    MaxScore(MaxScoreDgp),
    Erm(ErmDgp),
    ThreshReg(ThreshRegDgp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dataset {
    MaxScore { y: Vec<bool>, w: Vec<f64>, x: Vec<Vec<f64>> },
    Erm { y: Vec<i8>, x: Vec<f64> },
    ThreshReg { y: Vec<f64>, x: Vec<Vec<f64>>, q: Vec<f64>, w: Vec<Vec<f64>> },
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::MaxScore { y, .. } => y.len(),
            Dataset::Erm { y, .. } => y.len(),
            Dataset::ThreshReg { y, .. } => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
            idx.iter().map(|&i| v[i].clone()).collect()
        }
        match self {
            Dataset::MaxScore { y, w, x } => Dataset::MaxScore { y: pick(y, idx), w: pick(w, idx), x: pick(x, idx) },
            Dataset::Erm { y, x } => Dataset::Erm { y: pick(y, idx), x: pick(x, idx) },
            Dataset::ThreshReg { y, x, q, w } => {
                Dataset::ThreshReg { y: pick(y, idx), x: pick(x, idx), q: pick(q, idx), w: pick(w, idx) }
            }
        }
    }
}

impl ErmDgp {
    /// `P[y = 1 | x]`: linear through 1/2 at each cut, meeting in a tent
    /// between two cuts, clamped to `[0, 1]`.
    pub fn success_prob(&self, x: f64) -> f64 {
        let lin = |l: usize| 0.5 + self.p[l] * (x - self.theta0[l]);
        let v = match self.theta0.len() {
            1 => lin(0),
            _ => {
                let m = self.tent_peak();
                if x <= m {
                    lin(0)
                } else {
                    lin(1)
                }
            }
        };
        v.clamp(0.0, 1.0)
    }

    fn tent_peak(&self) -> f64 {
        let (p1, p2) = (self.p[0], self.p[1]);
        ((p1 * self.theta0[0] - p2 * self.theta0[1]) / (p1 - p2)).clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        let d = self.theta0.len();
        if !(1..=2).contains(&d) {
            return Err(Error::InvalidSpec(format!("ERM supports d ∈ {{1, 2}}, got {d}")));
        }
        check_dim(d, self.p.len())?;
        if self.theta0.iter().any(|t| !(*t > 0.0 && *t < 1.0)) || self.theta0.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSpec("ERM cut points must be ordered inside (0, 1)".into()));
        }
        for (l, p) in self.p.iter().enumerate() {
            // (-1)^ℓ p f < 0 with ℓ = l + 1 and f = 1.
            let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
            if !(sign * p < 0.0) {
                return Err(Error::InvalidSpec(format!("slope p_{} = {p} has the wrong sign", l + 1)));
            }
        }
        Ok(())
    }
}

impl ThreshRegDgp {
    pub fn k(&self) -> usize {
        self.beta0.len()
    }

    pub fn delta_bar(&self) -> Vec<f64> {
        let norm = self.delta_dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.delta_dir.iter().map(|v| v / norm).collect()
    }

    pub fn delta_n(&self, n: usize) -> Vec<f64> {
        let scale = self.delta_scale * (n as f64).powf(-self.rate_a);
        self.delta_bar().iter().map(|v| v * scale).collect()
    }

    /// `δ̄' E[xx'] δ̄` for `x = (1, z)` with `z ~ N(0, x_sd² I)`.
    pub fn effect_second_moment(&self) -> f64 {
        let db = self.delta_bar();
        db[0] * db[0] + db[1..].iter().map(|v| v * v * self.x_sd * self.x_sd).sum::<f64>()
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Empty("threshold regression coefficients"));
        }
        check_dim(k, self.delta_dir.len())?;
        if self.delta_dir.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidSpec("threshold effect direction is zero".into()));
        }
        if !(self.rate_a > 0.0 && self.rate_a < 0.5) {
            return Err(Error::InvalidSpec(format!("rate exponent must lie in (0, 1/2), got {}", self.rate_a)));
        }
        let d = self.w.validate()?;
        check_dim(d, self.theta0.len())?;
        if !(self.x_sd > 0.0 && self.q_sd > 0.0 && self.u_sd >= 0.0 && self.delta_scale > 0.0) {
            return Err(Error::InvalidSpec("threshold regression scales must be positive".into()));
        }
        Ok(())
    }
}

impl DgpSpec {
    /// Dimension of θ.
    pub fn dim(&self) -> usize {
        match self {
            DgpSpec::MaxScore(g) => g.theta0.len(),
            DgpSpec::Erm(g) => g.theta0.len(),
            DgpSpec::ThreshReg(g) => g.theta0.len(),
        }
    }

    pub fn theta0(&self) -> &[f64] {
        match self {
            DgpSpec::MaxScore(g) => &g.theta0,
            DgpSpec::Erm(g) => &g.theta0,
            DgpSpec::ThreshReg(g) => &g.theta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DgpSpec::MaxScore(g) => {
                let d = g.x.validate()?;
                check_dim(d, g.theta0.len())?;
                if !(g.w_sd > 0.0) {
                    return Err(Error::InvalidSpec("w_sd must be positive".into()));
                }
                g.u.validate()
            }
            DgpSpec::Erm(g) => g.validate(),
            DgpSpec::ThreshReg(g) => g.validate(),
        }
    }

    /// Convergence rate `r_n`.
    pub fn rate(&self, n: usize) -> f64 {
        match self {
            DgpSpec::MaxScore(_) | DgpSpec::Erm(_) => (n as f64).cbrt(),
            DgpSpec::ThreshReg(g) => {
                let dn = g.delta_n(n);
                n as f64 * dn.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidSpec("sample size must be at least 1".into()));
        }
        Ok(match self {
            DgpSpec::MaxScore(g) => gen_maxscore(g, n, rng),
            DgpSpec::Erm(g) => gen_erm(g, n, rng),
            DgpSpec::ThreshReg(g) => gen_threshreg(g, n, rng),
        })
    }
}

pub fn gen_maxscore<R: Rng + ?Sized>(g: &MaxScoreDgp, n: usize, rng: &mut R) -> Dataset {
    let pick = g.x.sampler();
    let wlaw = Normal::new(g.w_mean, g.w_sd).expect("validated scale");
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = g.x.support[pick.sample(rng)].clone();
        let wi = wlaw.sample(rng);
        let u = g.u.sample(rng);
        let index = wi + xi.iter().zip(&g.theta0).map(|(a, b)| a * b).sum::<f64>();
        y.push(index >= u);
        w.push(wi);
        x.push(xi);
    }
    Dataset::MaxScore { y, w, x }
}

pub fn gen_erm<R: Rng + ?Sized>(g: &ErmDgp, n: usize, rng: &mut R) -> Dataset {
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.random();
        let yi = if rng.random::<f64>() < g.success_prob(xi) { 1 } else { -1 };
        x.push(xi);
        y.push(yi);
    }
    Dataset::Erm { y, x }
}

pub fn gen_threshreg<R: Rng + ?Sized>(g: &ThreshRegDgp, n: usize, rng: &mut R) -> Dataset {
    let pick = g.w.sampler();
    let delta = g.delta_n(n);
    let k = g.k();
    let mut y = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut qs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = vec![1.0; k];
        for v in x.iter_mut().skip(1) {
            *v = g.x_sd * rng.sample::<f64, _>(StandardNormal);
        }
        let w = g.w.support[pick.sample(rng)].clone();
        let q = g.q_mean + g.q_sd * rng.sample::<f64, _>(StandardNormal);
        let u = g.u_sd * rng.sample::<f64, _>(StandardNormal);
        let cut: f64 = w.iter().zip(&g.theta0).map(|(a, b)| a * b).sum();
        let xb: f64 = x.iter().zip(&g.beta0).map(|(a, b)| a * b).sum();
        let xd: f64 = x.iter().zip(&delta).map(|(a, b)| a * b).sum();
        y.push(xb + if q > cut { xd } else { 0.0 } + u);
        xs.push(x);
        qs.push(q);
        ws.push(w);
    }
    Dataset::ThreshReg { y, x: xs, q: qs, w: ws }
}

/// Limiting mean and kernel of `r_n(θ̂ − θ₀)`.
pub fn limit_specs(dgp: &DgpSpec) -> Result<(MeanSpec, CovSpec)> {
    dgp.validate()?;
    match dgp {
        DgpSpec::MaxScore(g) => {
            let fu = g.u.density_at_zero()?;
            let atoms: Vec<MixtureAtom> =
                g.x.prob
                    .iter()
                    .zip(&g.x.support)
                    .map(|(&p, x)| {
                        let idx: f64 = x.iter().zip(&g.theta0).map(|(a, b)| a * b).sum();
                        MixtureAtom::new(p, x.clone(), normal_pdf(-idx, g.w_mean, g.w_sd)).with_fu(fu)
                    })
                    .collect();
            let d = g.theta0.len();
            let mut v = vec![vec![0.0; d]; d];
            for a in &atoms {
                for i in 0..d {
                    for j in 0..d {
                        v[i][j] += a.w * a.fu * a.f * a.x[i] * a.x[j];
                    }
                }
            }
            Ok((MeanSpec::Quadratic { v: Matrix::from_rows(v)? }, CovSpec::MixtureBm { atoms }))
        }
        DgpSpec::Erm(g) => {
            // Uniform features: f ≡ 1 at every cut.
            let kappa = g.p.iter().enumerate().map(|(l, p)| if l % 2 == 0 { *p } else { -p }).collect();
            Ok((MeanSpec::SeparableQuadratic { kappa }, CovSpec::SeparableBm { f: vec![1.0; g.theta0.len()] }))
        }
        DgpSpec::ThreshReg(g) => {
            let b = g.effect_second_moment();
            let a = g.u_sd * g.u_sd * b;
            let atoms: Vec<MixtureAtom> =
                g.w.prob
                    .iter()
                    .zip(&g.w.support)
                    .map(|(&p, w)| {
                        let cut: f64 = w.iter().zip(&g.theta0).map(|(a, b)| a * b).sum();
                        MixtureAtom::new(p, w.clone(), normal_pdf(cut, g.q_mean, g.q_sd)).with_a(a).with_b(b)
                    })
                    .collect();
            Ok((MeanSpec::ThreshRegAbs { atoms: atoms.clone() }, CovSpec::MixtureBm { atoms }))
        }
    }
}
