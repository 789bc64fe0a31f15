//! Exact path samplers on a lattice.
//!
//! Every Brownian-type kernel in this crate is a nonnegative combination of
//! `C_BM(x's, x't)` terms, so the centered process is a sum of independent
//! two-sided Brownian motions evaluated at the projections `x's`. Sampling
//! each motion at the sorted distinct projections is exact and costs
//! `O(points)` per path, against `O(points²)` for a dense factor.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::factor::{JitterPolicy, PinnedFactor};
use super::lattice::Lattice;
use crate::error::{check_dim, Error, Result};
use crate::kernels::{CovSpec, MeanSpec};

/// One pinned path on a lattice: `μ + 𝒢^μ` at every lattice point.
#[derive(Debug, Clone)]
pub struct PathSample<'a> {
    pub lattice: &'a Lattice,
    pub values: Vec<f64>,
}

/// Brownian motion `scale·B(x's)` restricted to the lattice.
#[derive(Debug, Clone)]
struct BmComponent {
    /// Standard deviation of each increment, walking outward on the positive side.
    pos_sd: Vec<f64>,
    /// Same for the negative side, ordered by increasing distance from 0.
    neg_sd: Vec<f64>,
    /// Per lattice point: slot in the scratch buffer `[0, pos.., neg..]`.
    slot: Vec<u32>,
}

impl BmComponent {
    fn new(lat: &Lattice, x: &[f64], scale: f64) -> Self {
        let proj: Vec<f64> = lat.points().map(|p| p.iter().zip(x).map(|(p, x)| p * x).sum()).collect();
        let mut pos: Vec<f64> = proj.iter().copied().filter(|v| *v > 0.0).collect();
        let mut neg: Vec<f64> = proj.iter().copied().filter(|v| *v < 0.0).map(f64::abs).collect();
        for side in [&mut pos, &mut neg] {
            side.sort_by(f64::total_cmp);
            side.dedup();
        }
        let sds = |levels: &[f64]| -> Vec<f64> {
            let mut prev = 0.0;
            levels
                .iter()
                .map(|&v| {
                    let sd = scale * (v - prev).sqrt();
                    prev = v;
                    sd
                })
                .collect()
        };
        let slot = proj
            .iter()
            .map(|&v| {
                let s = if v > 0.0 {
                    1 + pos.binary_search_by(|p| p.total_cmp(&v)).expect("level present")
                } else if v < 0.0 {
                    1 + pos.len() + neg.binary_search_by(|p| p.total_cmp(&-v)).expect("level present")
                } else {
                    0
                };
                s as u32
            })
            .collect();
        Self { pos_sd: sds(&pos), neg_sd: sds(&neg), slot }
    }

    fn buffer_len(&self) -> usize {
        1 + self.pos_sd.len() + self.neg_sd.len()
    }

    fn fill<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64]) {
        buf[0] = 0.0;
        let mut acc = 0.0;
        for (i, sd) in self.pos_sd.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            acc += sd * z;
            buf[1 + i] = acc;
        }
        let off = 1 + self.pos_sd.len();
        acc = 0.0;
        for (i, sd) in self.neg_sd.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            acc += sd * z;
            buf[off + i] = acc;
        }
    }
}

#[derive(Debug, Clone)]
enum Structure {
    Brownian(Vec<BmComponent>),
    /// `𝒢^μ(s) = s'Ġ`, `Ġ = L z`.
    Bilinear {
        lower: Vec<Vec<f64>>,
    },
    Factor(PinnedFactor),
}

/// Which centered-path sampler to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Exact projection sampler (every kernel family has one).
    #[default]
    Structured,
    /// Dense Cholesky factor of the pinned Gram matrix.
    Factor,
}

/// Samples full paths `μ + 𝒢^μ` on a fixed lattice.
#[derive(Debug, Clone)]
pub struct PathSampler<'a> {
    lattice: &'a Lattice,
    mean: Vec<f64>,
    structure: Structure,
}

/// Per-worker scratch space.
#[derive(Debug, Default)]
pub struct Scratch {
    bufs: Vec<Vec<f64>>,
    z: DVector<f64>,
    centered: Vec<f64>,
    pub values: Vec<f64>,
}

pub(crate) fn mean_on_lattice(m: &MeanSpec, lat: &Lattice) -> Result<Vec<f64>> {
    check_dim(m.dim(), lat.dim())?;
    let origin = lat.origin_index();
    Ok((0..lat.len()).map(|i| if i == origin { 0.0 } else { m.eval_unchecked(lat.point(i)) }).collect())
}

impl<'a> PathSampler<'a> {
    pub fn new(k: &CovSpec, m: &MeanSpec, lat: &'a Lattice, kind: SamplerKind) -> Result<Self> {
        k.validate()?;
        m.validate()?;
        check_dim(k.dim(), lat.dim())?;
        let mean = mean_on_lattice(m, lat)?;
        let structure = match kind {
            SamplerKind::Factor => Structure::Factor(PinnedFactor::new(k, lat, JitterPolicy::default())?),
            SamplerKind::Structured => Self::structured(k, lat)?,
        };
        Ok(Self { lattice: lat, mean, structure })
    }

    /// Sampler from a prebuilt factor; the factor is reused across means.
    pub fn from_factor(factor: PinnedFactor, m: &MeanSpec, lat: &'a Lattice) -> Result<Self> {
        check_dim(lat.len(), factor.lattice_len())?;
        let mean = mean_on_lattice(m, lat)?;
        Ok(Self { lattice: lat, mean, structure: Structure::Factor(factor) })
    }

    fn structured(k: &CovSpec, lat: &Lattice) -> Result<Structure> {
        let d = lat.dim();
        let comps = match k {
            CovSpec::ScaledBm1d { sigma2 } => vec![BmComponent::new(lat, &[1.0], sigma2.sqrt())],
            CovSpec::SeparableBm { f } => f
                .iter()
                .enumerate()
                .filter(|(_, f)| **f > 0.0)
                .map(|(l, f)| {
                    let mut e = vec![0.0; d];
                    e[l] = 1.0;
                    BmComponent::new(lat, &e, f.sqrt())
                })
                .collect(),
            CovSpec::MixtureBm { atoms } => atoms
                .iter()
                .filter(|a| a.w * a.a * a.f > 0.0)
                .map(|a| BmComponent::new(lat, &a.x, (a.w * a.a * a.f).sqrt()))
                .collect(),
            CovSpec::Bilinear { sigma } => {
                let chol = sigma.to_nalgebra().cholesky().ok_or(Error::Singular("bilinear Σ"))?;
                let l = chol.unpack();
                let lower = (0..d).map(|i| (0..d).map(|j| l[(i, j)]).collect()).collect();
                return Ok(Structure::Bilinear { lower });
            }
        };
        Ok(Structure::Brownian(comps))
    }

    pub fn lattice(&self) -> &'a Lattice {
        self.lattice
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Fills `scratch.values` with one path.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch) {
        let n = self.lattice.len();
        scratch.values.clear();
        scratch.values.extend_from_slice(&self.mean);
        match &self.structure {
            Structure::Brownian(comps) => {
                if scratch.bufs.len() < comps.len() {
                    scratch.bufs.resize_with(comps.len(), Vec::new);
                }
                for (comp, buf) in comps.iter().zip(scratch.bufs.iter_mut()) {
                    buf.resize(comp.buffer_len(), 0.0);
                    comp.fill(rng, buf);
                    for (v, &s) in scratch.values.iter_mut().zip(&comp.slot) {
                        *v += buf[s as usize];
                    }
                }
            }
            Structure::Bilinear { lower } => {
                let d = lower.len();
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let grad: Vec<f64> = lower.iter().map(|row| row.iter().zip(&z).map(|(l, z)| l * z).sum()).collect();
                for (i, v) in scratch.values.iter_mut().enumerate() {
                    *v += self.lattice.point(i).iter().zip(&grad).map(|(p, g)| p * g).sum::<f64>();
                }
            }
            Structure::Factor(f) => {
                scratch.centered.resize(n, 0.0);
                f.sample_centered_into(rng, &mut scratch.z, &mut scratch.centered);
                for (v, c) in scratch.values.iter_mut().zip(&scratch.centered) {
                    *v += c;
                }
            }
        }
        // The origin is pinned.
        scratch.values[self.lattice.origin_index()] = 0.0;
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSample<'a> {
        let mut scratch = Scratch::default();
        self.sample_into(rng, &mut scratch);
        PathSample { lattice: self.lattice, values: scratch.values }
    }
}

/// One path `μ + L z` from a dense pinned factor.
pub fn sample_path<'a, R: Rng + ?Sized>(
    factor: &PinnedFactor,
    m: &MeanSpec,
    lat: &'a Lattice,
    rng: &mut R,
) -> Result<PathSample<'a>> {
    let sampler = PathSampler::from_factor(factor.clone(), m, lat)?;
    Ok(sampler.sample(rng))
}

/// Oracle sampler for `σ²·C_BM` in one dimension: cumulative sums of
/// independent `N(0, σ²h)` increments walking outward from the origin.
pub fn sample_bm_exact_1d<'a, R: Rng + ?Sized>(lat: &'a Lattice, sigma2: f64, rng: &mut R) -> Result<PathSample<'a>> {
    check_dim(1, lat.dim())?;
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidSpec(format!("σ² must be nonnegative, got {sigma2}")));
    }
    let mut values = vec![0.0; lat.len()];
    fill_bm_exact_1d(lat, sigma2, rng, &mut values);
    Ok(PathSample { lattice: lat, values })
}

pub(crate) fn fill_bm_exact_1d<R: Rng + ?Sized>(lat: &Lattice, sigma2: f64, rng: &mut R, values: &mut [f64]) {
    let sd = (sigma2 * lat.spacing()).sqrt();
    let origin = lat.origin_index();
    values[origin] = 0.0;
    let mut acc = 0.0;
    for v in values[origin + 1..].iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        *v = acc;
    }
    acc = 0.0;
    for v in values[..origin].iter_mut().rev() {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        *v = acc;
    }
}

/// Samples `B` at arbitrary sorted positive times.
pub(crate) fn fill_bm_at_times<R: Rng + ?Sized>(times: &[f64], sigma: f64, rng: &mut R, out: &mut [f64]) {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (t, o) in times.iter().zip(out.iter_mut()) {
        let z: f64 = rng.sample(StandardNormal);
        acc += sigma * (t - prev).sqrt() * z;
        prev = *t;
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Matrix, MixtureAtom};
    use crate::rng::RngPolicy;
    use crate::simulate::build_lattice;

    #[test]
    fn degenerate_kernel_returns_mean() {
        let lat = build_lattice(1, 2.0, 4).unwrap();
        let m = MeanSpec::PowerMean { c: 1.0, gamma: 2.0 };
        for kind in [SamplerKind::Structured, SamplerKind::Factor] {
            let s = PathSampler::new(&CovSpec::SeparableBm { f: vec![0.0] }, &m, &lat, kind).unwrap();
            let p = s.sample(&mut RngPolicy::new(1).substream(0));
            for (i, v) in p.values.iter().enumerate() {
                assert_eq!(*v, m.eval_unchecked(lat.point(i)));
            }
        }
    }

    #[test]
    fn paths_are_pinned_and_reproducible() {
        let lat = build_lattice(2, 1.0, 3).unwrap();
        let atoms = vec![MixtureAtom::new(0.6, vec![1.0, 0.3], 0.5), MixtureAtom::new(0.4, vec![-0.4, 1.0], 0.8)];
        let m = MeanSpec::Quadratic { v: Matrix::identity(2) };
        for k in [CovSpec::MixtureBm { atoms }, CovSpec::Bilinear { sigma: Matrix::identity(2) }] {
            let s = PathSampler::new(&k, &m, &lat, SamplerKind::Structured).unwrap();
            let a = s.sample(&mut RngPolicy::new(5).substream(2));
            let b = s.sample(&mut RngPolicy::new(5).substream(2));
            assert_eq!(a.values, b.values);
            assert_eq!(a.values[lat.origin_index()], 0.0);
        }
    }

    #[test]
    fn scaled_bm_marginal_variance() {
        // Var G(1) = σ² = 4; SE of the sample variance is about σ²·sqrt(2/R).
        let lat = build_lattice(1, 1.0, 4).unwrap();
        let zero = MeanSpec::Linear { g: vec![0.0] };
        let s = PathSampler::new(&CovSpec::ScaledBm1d { sigma2: 4.0 }, &zero, &lat, SamplerKind::Structured).unwrap();
        let reps = 100_000;
        let policy = RngPolicy::new(11);
        let last = lat.len() - 1;
        let mut scratch = Scratch::default();
        let mut sum2 = 0.0;
        for r in 0..reps {
            s.sample_into(&mut policy.substream(r), &mut scratch);
            sum2 += scratch.values[last].powi(2);
        }
        let var = sum2 / reps as f64;
        let se = 4.0 * (2.0 / reps as f64).sqrt();
        assert!((var - 4.0).abs() < 3.0 * se, "variance {var}");
    }

    #[test]
    fn exact_bm_covariances() {
        let lat = build_lattice(1, 1.0, 2).unwrap();
        let policy = RngPolicy::new(3);
        let reps = 100_000;
        let (mut c_pos, mut c_cross) = (0.0, 0.0);
        let (mut q_pos, mut q_cross) = (0.0, 0.0);
        for r in 0..reps {
            let p = sample_bm_exact_1d(&lat, 1.0, &mut policy.substream(r)).unwrap();
            // points: -1, -0.5, 0, 0.5, 1
            let x = p.values[3] * p.values[4];
            let y = p.values[4] * p.values[0];
            c_pos += x;
            q_pos += x * x;
            c_cross += y;
            q_cross += y * y;
        }
        let n = reps as f64;
        let se = |s: f64, q: f64| ((q / n - (s / n).powi(2)) / n).sqrt();
        assert!((c_pos / n - 0.5).abs() < 3.0 * se(c_pos, q_pos));
        assert!((c_cross / n).abs() < 3.0 * se(c_cross, q_cross));
    }
}
