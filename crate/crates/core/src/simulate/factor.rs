use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::lattice::Lattice;
use crate::error::{check_dim, Error, Result};
use crate::kernels::CovSpec;

/// Largest Gram dimension the dense factor will build.
pub const FACTOR_MAX_POINTS: usize = 6_000;

/// Jitter escalation: start at `initial·max_diag`, multiply by `growth`
/// until `max·max_diag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial: f64,
    pub max: f64,
    pub growth: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { initial: 1e-12, max: 1e-6, growth: 10.0 }
    }
}

/// Cholesky factor of the Gram matrix of the non-origin lattice points.
///
/// The origin has variance exactly zero and is always assigned 0.
#[derive(Debug, Clone)]
pub struct PinnedFactor {
    lower: DMatrix<f64>,
    /// Lattice index of each factor row.
    rows: Vec<usize>,
    lattice_len: usize,
    jitter: f64,
}

pub fn pinned_factor(k: &CovSpec, lat: &Lattice, initial_jitter: f64) -> Result<PinnedFactor> {
    PinnedFactor::new(k, lat, JitterPolicy { initial: initial_jitter, ..JitterPolicy::default() })
}

impl PinnedFactor {
    pub fn new(k: &CovSpec, lat: &Lattice, policy: JitterPolicy) -> Result<Self> {
        check_dim(k.dim(), lat.dim())?;
        let origin = lat.origin_index();
        let rows: Vec<usize> = (0..lat.len()).filter(|&i| i != origin).collect();
        let n = rows.len();
        if n > FACTOR_MAX_POINTS {
            return Err(Error::Sizing { points: n as u128, cap: FACTOR_MAX_POINTS as u128 });
        }
        let mut gram = DMatrix::zeros(n, n);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate().skip(a) {
                let v = k.eval_unchecked(lat.point(i), lat.point(j));
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
        let max_diag = gram.diagonal().iter().cloned().fold(0.0, f64::max);
        if max_diag == 0.0 {
            return Ok(Self { lower: DMatrix::zeros(n, n), rows, lattice_len: lat.len(), jitter: 0.0 });
        }
        let mut rel = policy.initial.max(0.0);
        loop {
            let jitter = rel * max_diag;
            let mut m = gram.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = m.cholesky() {
                return Ok(Self { lower: chol.unpack(), rows, lattice_len: lat.len(), jitter });
            }
            if rel >= policy.max {
                return Err(Error::Factorization { jitter });
            }
            rel = if rel == 0.0 { JitterPolicy::default().initial } else { (rel * policy.growth).min(policy.max) };
        }
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Absolute jitter added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lattice_len(&self) -> usize {
        self.lattice_len
    }

    /// Writes a centered sample into `out` (lattice order), origin = 0.
    pub fn sample_centered_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut DVector<f64>, out: &mut [f64]) {
        let n = self.rows.len();
        if z.len() != n {
            *z = DVector::zeros(n);
        }
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        // Column-major lower triangle: accumulate column by column.
        for c in 0..n {
            let zc = z[c];
            let col = self.lower.column(c);
            for r in c..n {
                out[self.rows[r]] += col[r] * zc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Matrix;
    use crate::simulate::build_lattice;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_three_point_lattice_gives_identity() {
        let lat = build_lattice(1, 1.0, 1).unwrap();
        let f = pinned_factor(&CovSpec::ScaledBm1d { sigma2: 1.0 }, &lat, 1e-12).unwrap();
        assert_abs_diff_eq!(f.lower(), &DMatrix::identity(2, 2), epsilon = 1e-9);
    }

    #[test]
    fn two_by_two_cholesky_by_hand() {
        // Gram on {1, 2}: [[1,1],[1,2]] = L L' with L = [[1,0],[1,1]].
        let lat = build_lattice(1, 2.0, 1).unwrap();
        let f = pinned_factor(&CovSpec::ScaledBm1d { sigma2: 1.0 }, &lat, 1e-12).unwrap();
        // Non-origin points are {-2,-1,1,2}; the positive block is decoupled.
        let l = f.lower();
        assert_abs_diff_eq!(l[(2, 2)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l[(3, 2)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l[(3, 3)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l[(3, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bilinear_gram_needs_and_gets_jitter() {
        let lat = build_lattice(2, 1.0, 2).unwrap();
        let k = CovSpec::Bilinear { sigma: Matrix::identity(2) };
        let f = pinned_factor(&k, &lat, 1e-12).unwrap();
        let trace: f64 = lat.points().map(|p| p[0] * p[0] + p[1] * p[1]).sum();
        assert!(f.jitter() > 0.0 && f.jitter() <= 1e-8 * trace, "jitter {}", f.jitter());
        // Reconstruction within jitter.
        let l = f.lower();
        let recon = l * l.transpose();
        let rows: Vec<usize> = (0..lat.len()).filter(|&i| i != lat.origin_index()).collect();
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                let c = k.eval_unchecked(lat.point(i), lat.point(j));
                let tol = if a == b { 2.0 * f.jitter() } else { f.jitter() } + 1e-12;
                assert!((recon[(a, b)] - c).abs() <= tol);
            }
        }
    }

    #[test]
    fn degenerate_kernel_gives_zero_factor() {
        let lat = build_lattice(1, 1.0, 2).unwrap();
        let k = CovSpec::SeparableBm { f: vec![0.0] };
        let f = pinned_factor(&k, &lat, 1e-12).unwrap();
        assert!(f.lower().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn oversized_gram_is_refused() {
        let lat = build_lattice(2, 3.0, 13).unwrap();
        let err = pinned_factor(&CovSpec::SeparableBm { f: vec![1.0, 1.0] }, &lat, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Sizing { .. }));
    }
}
