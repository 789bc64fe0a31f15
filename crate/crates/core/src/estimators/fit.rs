use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dgp::Dataset;
use crate::error::{check_dim, Error, Result};

/// Product grid for θ (`d ≤ 2`), enumerated lexicographically with the first
/// coordinate slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub axes: Vec<Vec<f64>>,
}

impl ThetaGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::Empty("θ grid"));
        }
        if axes.len() > 2 {
            return Err(Error::InvalidSpec(format!("grid search supports d ≤ 2, got {}", axes.len())));
        }
        Ok(Self { axes })
    }

    /// `center ± half_width` at `spacing`, per coordinate.
    pub fn centered(center: &[f64], half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && half_width >= 0.0) {
            return Err(Error::InvalidSpec("grid spacing must be positive".into()));
        }
        let k = (half_width / spacing).round() as i64;
        Self::new(center.iter().map(|c| (-k..=k).map(|i| c + i as f64 * spacing).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0][i]],
            _ => {
                let n2 = self.axes[1].len();
                vec![self.axes[0][i / n2], self.axes[1][i % n2]]
            }
        }
    }

    /// Index of the grid point nearest to `theta`.
    pub fn nearest(&self, theta: &[f64]) -> usize {
        let idx: Vec<usize> = self
            .axes
            .iter()
            .zip(theta)
            .map(|(ax, t)| {
                (0..ax.len()).min_by(|&a, &b| (ax[a] - t).abs().total_cmp(&(ax[b] - t).abs())).expect("nonempty axis")
            })
            .collect();
        match idx.len() {
            1 => idx[0],
            _ => idx[0] * self.axes[1].len() + idx[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    /// Score (maximum score), error count (ERM) or RSS (threshold regression).
    pub objective: f64,
    /// Index of θ̂ in the searched candidate list.
    pub index: usize,
    pub candidates: usize,
    /// Candidates dropped for a singular design.
    #[serde(default)]
    pub skipped: usize,
}

/// Maximizes `Σ (2y−1) 1{w + x'θ ≥ 0}` over the grid; ties go to the
/// smallest grid index.
pub fn fit_maxscore(data: &Dataset, grid: &ThetaGrid) -> Result<FitResult> {
    let Dataset::MaxScore { y, w, x } = data else {
        return Err(Error::InvalidSpec("fit_maxscore needs a maximum score dataset".into()));
    };
    let d = grid.dim();
    for xi in x {
        check_dim(d, xi.len())?;
    }
    let scores = match d {
        1 => {
            let ax = &grid.axes[0];
            let mut diff = vec![0i64; ax.len() + 1];
            for ((&yi, &wi), xi) in y.iter().zip(w).zip(x) {
                let sign = if yi { 1 } else { -1 };
                add_row(&mut diff, ax, sign, |t| wi + xi[0] * t >= 0.0, xi[0]);
            }
            prefix(&diff, ax.len())
        }
        _ => {
            let (a0, a1) = (&grid.axes[0], &grid.axes[1]);
            let mut out = Vec::with_capacity(grid.len());
            let mut diff = vec![0i64; a1.len() + 1];
            for &t1 in a0 {
                diff.iter_mut().for_each(|v| *v = 0);
                for ((&yi, &wi), xi) in y.iter().zip(w).zip(x) {
                    let sign = if yi { 1 } else { -1 };
                    let base = wi + xi[0] * t1;
                    add_row(&mut diff, a1, sign, |t2| base + xi[1] * t2 >= 0.0, xi[1]);
                }
                out.extend(prefix(&diff, a1.len()));
            }
            out
        }
    };
    let (index, best) =
        scores.iter().enumerate().fold((0, i64::MIN), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    Ok(FitResult {
        theta: grid.point(index),
        beta: None,
        delta: None,
        objective: best as f64,
        index,
        candidates: grid.len(),
        skipped: 0,
    })
}

/// Adds `sign` on the grid positions where `pred` holds. `pred` is monotone
/// along the axis (increasing when `slope > 0`), so one binary search finds
/// the switch point.
fn add_row(diff: &mut [i64], ax: &[f64], sign: i64, pred: impl Fn(f64) -> bool, slope: f64) {
    let n = ax.len();
    if slope > 0.0 {
        let start = ax.partition_point(|&t| !pred(t));
        diff[start] += sign;
        diff[n] -= sign;
    } else if slope < 0.0 {
        let end = ax.partition_point(|&t| pred(t));
        diff[0] += sign;
        diff[end] -= sign;
    } else if pred(ax[0]) {
        diff[0] += sign;
        diff[n] -= sign;
    }
}

fn prefix(diff: &[i64], n: usize) -> Vec<i64> {
    let mut acc = 0;
    diff[..n]
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect()
}

/// The classifier `h_θ(x) = Σ_{ℓ=1}^{d+1} (−1)^ℓ 1{θ_{ℓ−1} ≤ x < θ_ℓ}` with
/// `θ_0 = 0` and `θ_{d+1} = 1`.
pub fn erm_classifier(theta: &[f64], x: f64) -> i8 {
    let mut lo = 0.0;
    for l in 1..=theta.len() + 1 {
        let hi = if l <= theta.len() { theta[l - 1] } else { 1.0 };
        if lo <= x && x < hi {
            return if l % 2 == 0 { 1 } else { -1 };
        }
        lo = hi;
    }
    0
}

/// Candidate cut values: `{0} ∪ sorted x ∪ {1}`, deduplicated.
pub fn erm_candidates(x: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = x.iter().copied().filter(|v| (0.0..=1.0).contains(v)).collect();
    c.push(0.0);
    c.push(1.0);
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Exact empirical risk minimizer over ordered cuts (`d ∈ {1, 2}`).
pub fn fit_erm(data: &Dataset, d: usize) -> Result<FitResult> {
    let Dataset::Erm { y, x } = data else {
        return Err(Error::InvalidSpec("fit_erm needs an ERM dataset".into()));
    };
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidSpec(format!("ERM fitting supports d ∈ {{1, 2}}, got {d}")));
    }
    let cand = erm_candidates(x);
    // Sorted inside [0, 1); points outside are misclassified for every θ.
    let mut pts: Vec<(f64, i8)> =
        x.iter().copied().zip(y.iter().copied()).filter(|(v, _)| (0.0..1.0).contains(v)).collect();
    let always_wrong = (x.len() - pts.len()) as i64;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let (mut plus, mut minus) = (vec![0i64; n + 1], vec![0i64; n + 1]);
    for (i, (_, yi)) in pts.iter().enumerate() {
        plus[i + 1] = plus[i] + i64::from(*yi == 1);
        minus[i + 1] = minus[i] + i64::from(*yi == -1);
    }
    // Number of points strictly below each candidate.
    let below: Vec<usize> = cand.iter().map(|c| pts.partition_point(|p| p.0 < *c)).collect();
    let mut best = (i64::MAX, 0usize, vec![]);
    let mut counter = 0usize;
    match d {
        1 => {
            for (i, &k) in below.iter().enumerate() {
                let err = plus[k] + (minus[n] - minus[k]) + always_wrong;
                if err < best.0 {
                    best = (err, counter, vec![cand[i]]);
                }
                counter += 1;
            }
        }
        _ => {
            for (i, &ka) in below.iter().enumerate() {
                for (j, &kb) in below.iter().enumerate().skip(i) {
                    let err = plus[ka] + (minus[kb] - minus[ka]) + (plus[n] - plus[kb]) + always_wrong;
                    if err < best.0 {
                        best = (err, counter, vec![cand[i], cand[j]]);
                    }
                    counter += 1;
                }
            }
        }
    }
    Ok(FitResult {
        theta: best.2,
        beta: None,
        delta: None,
        objective: best.0 as f64,
        index: best.1,
        candidates: counter,
        skipped: 0,
    })
}

/// Misclassification count of `θ` recomputed from the classifier.
pub fn erm_errors(data: &Dataset, theta: &[f64]) -> Result<usize> {
    let Dataset::Erm { y, x } = data else {
        return Err(Error::InvalidSpec("erm_errors needs an ERM dataset".into()));
    };
    Ok(x.iter().zip(y).filter(|(xi, yi)| erm_classifier(theta, **xi) != **yi).count())
}

/// Relative tolerance under which two RSS values count as tied.
pub const RSS_TIE_TOL: f64 = 1e-9;

pub(crate) fn pick_min_rss(rss: &[Option<f64>]) -> Option<usize> {
    let min = rss.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    rss.iter().position(|r| matches!(r, Some(v) if *v <= min + RSS_TIE_TOL * (1.0 + min)))
}

/// Profile least squares over the θ grid; candidates with a singular
/// design are skipped.
pub fn fit_threshreg(data: &Dataset, grid: &ThetaGrid) -> Result<FitResult> {
    let Dataset::ThreshReg { y, x, q, w } = data else {
        return Err(Error::InvalidSpec("fit_threshreg needs a threshold regression dataset".into()));
    };
    let n = y.len();
    if n == 0 {
        return Err(Error::Empty("dataset"));
    }
    let k = x[0].len();
    for (xi, wi) in x.iter().zip(w) {
        check_dim(k, xi.len())?;
        check_dim(grid.dim(), wi.len())?;
    }
    let yv = DVector::from_column_slice(y);
    let mut fits: Vec<Option<(f64, DVector<f64>)>> = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let theta = grid.point(g);
        let z = threshreg_design(x, q, w, &theta);
        fits.push(ols_normal_equations(&z, &yv));
    }
    let rss: Vec<Option<f64>> = fits.iter().map(|f| f.as_ref().map(|f| f.0)).collect();
    let skipped = rss.iter().filter(|r| r.is_none()).count();
    let index = pick_min_rss(&rss).ok_or_else(|| Error::Fit("every candidate θ gave a singular design".into()))?;
    let (best, coef) = fits[index].clone().expect("picked a fitted candidate");
    Ok(FitResult {
        theta: grid.point(index),
        beta: Some(coef.as_slice()[..k].to_vec()),
        delta: Some(coef.as_slice()[k..].to_vec()),
        objective: best,
        index,
        candidates: grid.len(),
        skipped,
    })
}

/// Columns `(x, x·1{q > w'θ})`.
pub(crate) fn threshreg_design(x: &[Vec<f64>], q: &[f64], w: &[Vec<f64>], theta: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let k = x[0].len();
    DMatrix::from_fn(n, 2 * k, |i, j| {
        if j < k {
            x[i][j]
        } else {
            let cut: f64 = w[i].iter().zip(theta).map(|(a, b)| a * b).sum();
            if q[i] > cut {
                x[i][j - k]
            } else {
                0.0
            }
        }
    })
}

fn ols_normal_equations(z: &DMatrix<f64>, y: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let ztz = z.transpose() * z;
    let scale = ztz.diagonal().iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let chol = ztz.clone().cholesky()?;
    // Reject numerically rank-deficient designs.
    let l = chol.l();
    let min_pivot = l.diagonal().iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-10 * scale {
        return None;
    }
    let coef = chol.solve(&(z.transpose() * y));
    let resid = y - z * &coef;
    Some((resid.norm_squared(), coef))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifier_follows_the_literal_display() {
        assert_eq!(erm_classifier(&[0.5], 0.2), -1);
        assert_eq!(erm_classifier(&[0.5], 0.5), 1);
        assert_eq!(erm_classifier(&[0.3, 0.6], 0.4), 1);
        assert_eq!(erm_classifier(&[0.3, 0.6], 0.7), -1);
        assert_eq!(erm_classifier(&[0.5], 1.0), 0);
    }

    #[test]
    fn erm_two_point_example() {
        let data = Dataset::Erm { y: vec![-1, 1], x: vec![0.2, 0.8] };
        let fit = fit_erm(&data, 1).unwrap();
        assert_eq!(fit.objective, 0.0);
        assert!(fit.theta[0] > 0.2 && fit.theta[0] <= 0.8);
        assert_eq!(erm_errors(&data, &fit.theta).unwrap(), 0);
    }

    #[test]
    fn grid_indexing() {
        let g = ThetaGrid::centered(&[1.0, -1.0], 0.2, 0.1).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(0), vec![0.8, -1.2]);
        assert_eq!(g.nearest(&[1.0, -1.0]), 12);
    }

    #[test]
    fn maxscore_separable_data() {
        let data = Dataset::MaxScore {
            y: vec![true, false, true, false],
            w: vec![1.0, -1.0, 0.5, -0.2],
            x: vec![vec![1.0]; 4],
        };
        let grid = ThetaGrid::centered(&[0.0], 0.1, 0.1).unwrap();
        let fit = fit_maxscore(&data, &grid).unwrap();
        // Score counts positive responses with index ≥ 0 minus negatives.
        assert_eq!(fit.objective, 2.0);
    }

    #[test]
    fn threshreg_rejects_singular_designs() {
        let data = Dataset::ThreshReg {
            y: vec![1.0, 2.0],
            x: vec![vec![1.0], vec![1.0]],
            q: vec![0.0, 1.0],
            w: vec![vec![1.0]; 2],
        };
        let grid = ThetaGrid::new(vec![vec![5.0]]).unwrap();
        assert!(matches!(fit_threshreg(&data, &grid), Err(Error::Fit(_))));
    }
}
