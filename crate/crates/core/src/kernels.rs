//! Mean functions and covariance kernels of the limiting Gaussian processes,
//! plus numerical checks of the structural identities they must satisfy.
//!
//! Expectation-form kernels (maximum score, threshold regression) are
//! represented as finite mixtures over covariate atoms, so every evaluation
//! here is exact floating-point arithmetic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Default tolerance for algebraic identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Square matrix stored row-major; (de)serializes as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("matrix rows"));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            check_dim(n, row.len())?;
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = scale;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `s' M t`
    pub fn bilinear(&self, s: &[f64], t: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            acc += s[i] * row.iter().zip(t).map(|(m, t)| m * t).sum::<f64>();
        }
        acc
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_nalgebra();
        let sym = (&m + m.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.rows()
    }
}

/// One covariate support point of an expectation-form kernel.
///
/// `x` is the covariate (x for maximum score, w for threshold regression);
/// `f` the conditional density at the limit point; `a` the conditional
/// second moment of the score (1 for maximum score); `fu` the density of
/// the error at zero (maximum score); `b` the conditional second moment of
/// the threshold effect (threshold regression).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureAtom {
    pub w: f64,
    pub x: Vec<f64>,
    pub f: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub fu: f64,
    #[serde(default)]
    pub b: f64,
}

fn one() -> f64 {
    1.0
}

impl MixtureAtom {
    pub fn new(w: f64, x: Vec<f64>, f: f64) -> Self {
        Self { w, x, f, a: 1.0, fu: 0.0, b: 0.0 }
    }

    pub fn with_fu(mut self, fu: f64) -> Self {
        self.fu = fu;
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    #[inline]
    pub fn project(&self, s: &[f64]) -> f64 {
        self.x.iter().zip(s).map(|(x, s)| x * s).sum()
    }

    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn validate_atoms(atoms: &[MixtureAtom]) -> Result<usize> {
    let first = atoms.first().ok_or(Error::Empty("mixture atoms"))?;
    let d = first.x.len();
    if d == 0 {
        return Err(Error::InvalidSpec("atom covariate has dimension 0".into()));
    }
    let mut total = 0.0;
    for atom in atoms {
        check_dim(d, atom.x.len())?;
        if !(atom.w > 0.0) {
            return Err(Error::InvalidSpec(format!("atom weight {} is not positive", atom.w)));
        }
        for (name, v) in [("f", atom.f), ("a", atom.a), ("fu", atom.fu), ("b", atom.b)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("atom field {name} = {v} must be a finite nonnegative number")));
            }
        }
        total += atom.w;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!("atom weights sum to {total}, not 1")));
    }
    Ok(d)
}

/// Mean function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanSpec {
    /// `-s'Vs`
    Quadratic { v: Matrix },
    /// `-Σ κ_ℓ s_ℓ²`
    SeparableQuadratic { kappa: Vec<f64> },
    /// `-½ Σ_j w_j f_j b_j |x_j's|`
    ThreshRegAbs { atoms: Vec<MixtureAtom> },
    /// `-c|s|^γ`, d = 1
    PowerMean { c: f64, gamma: f64 },
    /// `-c|s| min{1,|s|}^{γ-1}`, d = 1
    PiecewisePowerMean { c: f64, gamma: f64 },
    /// `s'g`
    Linear { g: Vec<f64> },
}

impl MeanSpec {
    pub fn dim(&self) -> usize {
        match self {
            MeanSpec::Quadratic { v } => v.dim(),
            MeanSpec::SeparableQuadratic { kappa } => kappa.len(),
            MeanSpec::ThreshRegAbs { atoms } => atoms.first().map_or(0, |a| a.x.len()),
            MeanSpec::PowerMean { .. } | MeanSpec::PiecewisePowerMean { .. } => 1,
            MeanSpec::Linear { g } => g.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeanSpec::Quadratic { v } => {
                if !v.is_symmetric() {
                    return Err(Error::InvalidSpec("quadratic mean matrix is not symmetric".into()));
                }
                if v.min_eigenvalue() < -1e-12 * (1.0 + v.get(0, 0).abs()) {
                    return Err(Error::InvalidSpec("quadratic mean matrix is not positive semidefinite".into()));
                }
            }
            MeanSpec::SeparableQuadratic { kappa } => {
                if kappa.is_empty() || kappa.iter().any(|k| !(*k > 0.0)) {
                    return Err(Error::InvalidSpec("separable quadratic needs positive κ values".into()));
                }
            }
            MeanSpec::ThreshRegAbs { atoms } => {
                validate_atoms(atoms)?;
            }
            MeanSpec::PowerMean { c, gamma } | MeanSpec::PiecewisePowerMean { c, gamma } => {
                if !(*c > 0.0) || !(*gamma > 0.0) {
                    return Err(Error::InvalidSpec(format!("power mean needs c > 0 and γ > 0, got c={c}, γ={gamma}")));
                }
            }
            MeanSpec::Linear { g } => {
                if g.is_empty() {
                    return Err(Error::Empty("linear mean gradient"));
                }
            }
        }
        Ok(())
    }

    /// Evaluates without a dimension check.
    #[inline]
    pub(crate) fn eval_unchecked(&self, s: &[f64]) -> f64 {
        match self {
            MeanSpec::Quadratic { v } => -v.bilinear(s, s),
            MeanSpec::SeparableQuadratic { kappa } => -kappa.iter().zip(s).map(|(k, s)| k * s * s).sum::<f64>(),
            MeanSpec::ThreshRegAbs { atoms } => {
                -0.5 * atoms.iter().map(|a| a.w * a.f * a.b * a.project(s).abs()).sum::<f64>()
            }
            MeanSpec::PowerMean { c, gamma } => {
                let r = s[0].abs();
                if r == 0.0 {
                    0.0
                } else {
                    -c * r.powf(*gamma)
                }
            }
            MeanSpec::PiecewisePowerMean { c, gamma } => {
                let r = s[0].abs();
                if r == 0.0 {
                    0.0
                } else if r <= 1.0 {
                    -c * r.powf(*gamma)
                } else {
                    -c * r
                }
            }
            MeanSpec::Linear { g } => g.iter().zip(s).map(|(g, s)| g * s).sum(),
        }
    }
}

/// Covariance kernel families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovSpec {
    /// `σ² C_BM(s,t)`, d = 1
    ScaledBm1d { sigma2: f64 },
    /// `s'Σt`
    Bilinear { sigma: Matrix },
    /// `Σ_j w_j a_j f_j C_BM(x_j's, x_j't)`
    MixtureBm { atoms: Vec<MixtureAtom> },
    /// `Σ_ℓ f_ℓ C_BM(s_ℓ, t_ℓ)`
    SeparableBm { f: Vec<f64> },
}

impl CovSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovSpec::ScaledBm1d { .. } => 1,
            CovSpec::Bilinear { sigma } => sigma.dim(),
            CovSpec::MixtureBm { atoms } => atoms.first().map_or(0, |a| a.x.len()),
            CovSpec::SeparableBm { f } => f.len(),
        }
    }

    pub fn is_bilinear(&self) -> bool {
        matches!(self, CovSpec::Bilinear { .. })
    }

    /// Self-similarity index of the family.
    pub fn hurst(&self) -> f64 {
        if self.is_bilinear() {
            1.0
        } else {
            0.5
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovSpec::ScaledBm1d { sigma2 } => {
                if !(*sigma2 > 0.0) {
                    return Err(Error::InvalidSpec(format!("σ² must be positive, got {sigma2}")));
                }
            }
            CovSpec::Bilinear { sigma } => {
                if !sigma.is_symmetric() {
                    return Err(Error::InvalidSpec("bilinear Σ is not symmetric".into()));
                }
                if sigma.to_nalgebra().cholesky().is_none() {
                    return Err(Error::InvalidSpec("bilinear Σ is not positive definite".into()));
                }
            }
            CovSpec::MixtureBm { atoms } => {
                validate_atoms(atoms)?;
            }
            CovSpec::SeparableBm { f } => {
                if f.is_empty() || f.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidSpec("separable kernel needs nonnegative scales".into()));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, s: &[f64], t: &[f64]) -> f64 {
        match self {
            CovSpec::ScaledBm1d { sigma2 } => sigma2 * eval_cbm(s[0], t[0]),
            CovSpec::Bilinear { sigma } => sigma.bilinear(s, t),
            CovSpec::MixtureBm { atoms } => {
                atoms.iter().map(|a| a.w * a.a * a.f * eval_cbm(a.project(s), a.project(t))).sum()
            }
            CovSpec::SeparableBm { f } => f.iter().zip(s.iter().zip(t)).map(|(f, (s, t))| f * eval_cbm(*s, *t)).sum(),
        }
    }
}

/// Covariance of two-sided standard Brownian motion.
#[inline]
pub fn eval_cbm(s: f64, t: f64) -> f64 {
    if (s > 0.0 && t > 0.0) || (s < 0.0 && t < 0.0) {
        s.abs().min(t.abs())
    } else {
        0.0
    }
}

pub fn eval_mean(m: &MeanSpec, s: &[f64]) -> Result<f64> {
    check_dim(m.dim(), s.len())?;
    Ok(m.eval_unchecked(s))
}

pub fn eval_cov(k: &CovSpec, s: &[f64], t: &[f64]) -> Result<f64> {
    check_dim(k.dim(), s.len())?;
    check_dim(k.dim(), t.len())?;
    Ok(k.eval_unchecked(s, t))
}

/// Gram matrix; the upper triangle is computed and mirrored.
pub fn gram(k: &CovSpec, pts: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if pts.is_empty() {
        return Err(Error::Empty("gram points"));
    }
    for p in pts {
        check_dim(k.dim(), p.len())?;
    }
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.eval_unchecked(&pts[i], &pts[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub residual: f64,
    pub pass: bool,
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a + b).collect()
}

/// Increment-stationarity identity
/// `C(h+s,h+t) - C(h+s,h) - C(h,h+t) + C(h,h) = C(s,t)` together with
/// `C(h,h) > 0`.
pub fn check_shift_equivariance(k: &CovSpec, h: &[f64], s: &[f64], t: &[f64], tol: f64) -> Result<IdentityCheck> {
    let d = k.dim();
    check_dim(d, h.len())?;
    check_dim(d, s.len())?;
    check_dim(d, t.len())?;
    if h.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("shift h must be nonzero".into()));
    }
    let hs = add(h, s);
    let ht = add(h, t);
    let c = |a: &[f64], b: &[f64]| k.eval_unchecked(a, b);
    let chh = c(h, h);
    let lhs = c(&hs, &ht) - c(&hs, h) - c(h, &ht) + chh;
    let residual = (lhs - c(s, t)).abs();
    Ok(IdentityCheck { residual, pass: residual <= tol && chh > 0.0 })
}

/// `|C(τs, τt) - τ^{2H} C(s,t)|`
pub fn check_self_similarity(
    k: &CovSpec,
    tau: f64,
    s: &[f64],
    t: &[f64],
    hurst: f64,
    tol: f64,
) -> Result<IdentityCheck> {
    let d = k.dim();
    check_dim(d, s.len())?;
    check_dim(d, t.len())?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("τ must be positive, got {tau}")));
    }
    let ts: Vec<f64> = s.iter().map(|v| tau * v).collect();
    let tt: Vec<f64> = t.iter().map(|v| tau * v).collect();
    let residual = (k.eval_unchecked(&ts, &tt) - tau.powf(2.0 * hurst) * k.eval_unchecked(s, t)).abs();
    Ok(IdentityCheck { residual, pass: residual <= tol })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanTailReport {
    /// `(radius, direction index, μ(r·u) / r^{H+ε})`
    pub ratios: Vec<(f64, usize, f64)>,
    /// Negative of the largest ratio over the outermost radii.
    pub eta: f64,
    pub pass: bool,
}

/// Number of outermost radii the tail verdict is taken over.
const TAIL_RADII: usize = 3;

/// Coercivity of the mean: `μ(r·u) / r^{H+ε} ≤ -η < 0` at large radii.
pub fn check_mean_tail(
    m: &MeanSpec,
    hurst: f64,
    eps: f64,
    radii: &[f64],
    directions: &[Vec<f64>],
) -> Result<MeanTailReport> {
    let last = *radii.last().ok_or(Error::Empty("radii"))?;
    if radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(Error::Domain("radii must be positive and increasing".into()));
    }
    if last < 100.0 {
        return Err(Error::Domain(format!("largest radius {last} is below 100")));
    }
    if directions.is_empty() {
        return Err(Error::Empty("directions"));
    }
    let exponent = hurst + eps;
    let mut ratios = Vec::with_capacity(radii.len() * directions.len());
    for &r in radii {
        for (j, u) in directions.iter().enumerate() {
            let point: Vec<f64> = u.iter().map(|v| r * v).collect();
            ratios.push((r, j, eval_mean(m, &point)? / r.powf(exponent)));
        }
    }
    let first_outer = radii.len().saturating_sub(TAIL_RADII);
    let worst = ratios
        .iter()
        .filter(|(r, _, _)| *r >= radii[first_outer])
        .map(|(_, _, q)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    let eta = -worst;
    Ok(MeanTailReport { ratios, eta, pass: eta > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn maxscore_atoms() -> Vec<MixtureAtom> {
        vec![
            MixtureAtom::new(0.5, vec![1.0, 0.5], 0.4).with_fu(0.3),
            MixtureAtom::new(0.3, vec![-0.2, 1.0], 0.25).with_fu(0.5),
            MixtureAtom::new(0.2, vec![0.7, -0.9], 0.35).with_fu(0.2),
        ]
    }

    #[test]
    fn cbm_values() {
        assert_eq!(eval_cbm(1.0, 2.0), 1.0);
        assert_eq!(eval_cbm(1.0, -1.0), 0.0);
        assert_eq!(eval_cbm(0.0, 5.0), 0.0);
        assert_eq!(eval_cbm(-3.0, -2.0), 2.0);
    }

    #[test]
    fn mean_examples() {
        let m = MeanSpec::PowerMean { c: 1.0, gamma: 1.0 };
        assert_eq!(eval_mean(&m, &[-2.0]).unwrap(), -2.0);
        let m = MeanSpec::PiecewisePowerMean { c: 1.0, gamma: 0.25 };
        assert_eq!(eval_mean(&m, &[4.0]).unwrap(), -4.0);
        assert_eq!(eval_mean(&m, &[0.0]).unwrap(), 0.0);
        let m = MeanSpec::Quadratic { v: Matrix::identity(2) };
        assert_eq!(eval_mean(&m, &[1.0, 1.0]).unwrap(), -2.0);
        assert!(matches!(eval_mean(&m, &[1.0]), Err(Error::Dimension { expected: 2, got: 1 })));
    }

    #[test]
    fn cov_examples() {
        let k = CovSpec::MixtureBm { atoms: vec![MixtureAtom::new(1.0, vec![1.0, 1.0], 2.0)] };
        assert_eq!(eval_cov(&k, &[1.0, 0.0], &[2.0, 0.0]).unwrap(), 2.0);
        let k = CovSpec::SeparableBm { f: vec![1.0, 3.0] };
        assert_eq!(eval_cov(&k, &[1.0, -2.0], &[2.0, -1.0]).unwrap(), 4.0);
        let k = CovSpec::Bilinear { sigma: Matrix::identity(2) };
        assert_eq!(eval_cov(&k, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(eval_cov(&k, &[1.0], &[3.0, 4.0]).is_err());
    }

    #[test]
    fn gram_examples() {
        let g = gram(&CovSpec::ScaledBm1d { sigma2: 1.0 }, &[vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]));
        let g = gram(&CovSpec::ScaledBm1d { sigma2: 3.0 }, &[vec![0.0]]).unwrap();
        assert_eq!(g[(0, 0)], 0.0);
        let g = gram(&CovSpec::SeparableBm { f: vec![1.0] }, &[vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
        assert!(gram(&CovSpec::ScaledBm1d { sigma2: 1.0 }, &[]).is_err());
    }

    #[test]
    fn shift_equivariance_examples() {
        let k = CovSpec::ScaledBm1d { sigma2: 1.0 };
        let r = check_shift_equivariance(&k, &[1.0], &[1.0], &[2.0], IDENTITY_TOL).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.pass);
        let k = CovSpec::Bilinear { sigma: Matrix::identity(2) };
        let r = check_shift_equivariance(&k, &[0.3, -1.0], &[2.0, 0.5], &[-1.5, 4.0], IDENTITY_TOL).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(check_shift_equivariance(&k, &[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0], IDENTITY_TOL).is_err());
    }

    #[test]
    fn degenerate_direction_fails_positivity() {
        // Single atom orthogonal to h: C(h,h) = 0.
        let k = CovSpec::MixtureBm { atoms: vec![MixtureAtom::new(1.0, vec![1.0, 0.0], 1.0)] };
        let r = check_shift_equivariance(&k, &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0], IDENTITY_TOL).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(!r.pass);
    }

    #[test]
    fn self_similarity_examples() {
        let k = CovSpec::ScaledBm1d { sigma2: 1.0 };
        let r = check_self_similarity(&k, 4.0, &[1.0], &[2.0], 0.5, IDENTITY_TOL).unwrap();
        assert_eq!(r.residual, 0.0);
        let k = CovSpec::Bilinear { sigma: Matrix::identity(2) };
        let r = check_self_similarity(&k, 2.0, &[1.0, -1.0], &[0.5, 3.0], 1.0, IDENTITY_TOL).unwrap();
        assert!(r.pass);
        let r = check_self_similarity(&k, 2.0, &[1.0, -1.0], &[0.5, 3.0], 0.5, IDENTITY_TOL).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn mean_tail_examples() {
        let radii = [10.0, 30.0, 100.0];
        let m = MeanSpec::Quadratic { v: Matrix::identity(1) };
        let r = check_mean_tail(&m, 0.5, 1.5, &radii, &[vec![1.0]]).unwrap();
        assert_abs_diff_eq!(r.eta, 1.0, epsilon = 1e-12);
        assert!(r.pass);

        let m = MeanSpec::ThreshRegAbs { atoms: vec![MixtureAtom::new(1.0, vec![1.0], 1.0).with_b(1.0)] };
        let r = check_mean_tail(&m, 0.5, 0.5, &radii, &[vec![1.0], vec![-1.0]]).unwrap();
        assert_abs_diff_eq!(r.eta, 0.5, epsilon = 1e-12);
        assert!(r.pass);

        let m = MeanSpec::Linear { g: vec![1.0, 0.0] };
        let r = check_mean_tail(&m, 0.5, 1.5, &radii, &[vec![1.0, 0.0]]).unwrap();
        assert!(!r.pass);

        assert!(check_mean_tail(&m, 0.5, 1.5, &[10.0, 50.0], &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn validation() {
        assert!(CovSpec::ScaledBm1d { sigma2: 0.0 }.validate().is_err());
        let bad = vec![MixtureAtom::new(0.5, vec![1.0], 1.0)];
        assert!(CovSpec::MixtureBm { atoms: bad }.validate().is_err());
        assert!(CovSpec::MixtureBm { atoms: maxscore_atoms() }.validate().is_ok());
        let not_pd = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(CovSpec::Bilinear { sigma: not_pd.clone() }.validate().is_err());
        assert!(MeanSpec::Quadratic { v: not_pd }.validate().is_err());
        assert!(MeanSpec::PowerMean { c: 1.0, gamma: 0.0 }.validate().is_err());
    }

    #[test]
    fn spec_roundtrip_through_json() {
        let k = CovSpec::MixtureBm { atoms: maxscore_atoms() };
        let text = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<CovSpec>(&text).unwrap(), k);
        let m = MeanSpec::Quadratic { v: Matrix::identity(2) };
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"kind\":\"quadratic\""));
        assert_eq!(serde_json::from_str::<MeanSpec>(&text).unwrap(), m);
    }
}
