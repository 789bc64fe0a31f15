use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use super::law::EmpiricalLaw;
use super::sampler::{PathSample, PathSampler, SamplerKind, Scratch};
use crate::error::{check_dim, Error, Result};
use crate::exec::Execution;
use crate::kernels::{CovSpec, Matrix, MeanSpec};
use crate::rng::RngPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxDraw {
    pub point: Vec<f64>,
    pub value: f64,
    pub on_boundary: bool,
}

/// Index of the first maximum (lexicographically smallest on ties).
pub(crate) fn argmax_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_on_lattice(p: &PathSample<'_>) -> ArgmaxDraw {
    let i = argmax_index(&p.values);
    ArgmaxDraw { point: p.lattice.point(i).to_vec(), value: p.values[i], on_boundary: p.lattice.is_boundary(i) }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub execution: Execution,
}

/// `R` argmax draws over `lat`; replicate `r` uses substream `r`.
pub fn mc_argmax(
    k: &CovSpec,
    m: &MeanSpec,
    lat: &Lattice,
    reps: u64,
    rngp: RngPolicy,
    opts: McOptions,
) -> Result<EmpiricalLaw> {
    let sampler = PathSampler::new(k, m, lat, opts.sampler)?;
    mc_argmax_with(&sampler, reps, rngp, opts.execution)
}

/// Same as [`mc_argmax`] with a prebuilt sampler.
pub fn mc_argmax_with(sampler: &PathSampler<'_>, reps: u64, rngp: RngPolicy, exec: Execution) -> Result<EmpiricalLaw> {
    if reps == 0 {
        return Err(Error::InvalidSpec("replications must be at least 1".into()));
    }
    let lat = sampler.lattice();
    let hits = exec.map_reps(reps, Scratch::default, |scratch, r| {
        sampler.sample_into(&mut rngp.substream(r), scratch);
        let i = argmax_index(&scratch.values);
        (i, scratch.values[i])
    });
    let d = lat.dim();
    let mut draws = Vec::with_capacity(hits.len() * d);
    let mut values = Vec::with_capacity(hits.len());
    let mut bnd = Vec::with_capacity(hits.len());
    for (i, v) in hits {
        draws.extend_from_slice(lat.point(i));
        values.push(v);
        bnd.push(lat.is_boundary(i));
    }
    EmpiricalLaw::new(d, draws, values, bnd, rngp.master_seed)
}

/// Draws of `ŝ = Γ⁻¹Ġ` with `Ġ ~ N(0, Σ)`.
pub fn gaussian_argmax_law(
    gamma: &Matrix,
    sigma: &Matrix,
    reps: u64,
    rngp: RngPolicy,
    exec: Execution,
) -> Result<EmpiricalLaw> {
    let d = gamma.dim();
    check_dim(d, sigma.dim())?;
    if reps == 0 {
        return Err(Error::InvalidSpec("replications must be at least 1".into()));
    }
    let lu = gamma.to_nalgebra().lu();
    if !lu.is_invertible() || gamma.min_eigenvalue() <= 0.0 {
        return Err(Error::Singular("Γ"));
    }
    let l: DMatrix<f64> = sigma.to_nalgebra().cholesky().ok_or(Error::Singular("Σ"))?.unpack();
    let rows = exec.map_reps(
        reps,
        || (),
        |_, r| {
            let mut rng = rngp.substream(r);
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let g = &l * z;
            lu.solve(&g).expect("invertible Γ")
        },
    );
    let draws = rows.iter().flat_map(|s| s.iter().copied()).collect();
    EmpiricalLaw::new(d, draws, vec![0.0; reps as usize], vec![false; reps as usize], rngp.master_seed)
}

/// Applies the boundary guard: warn above `warn`, error above `fail`.
pub fn boundary_guard(law: &EmpiricalLaw, warn: f64, fail: f64) -> Result<Option<String>> {
    let b = law.boundary_fraction;
    if b > fail {
        return Err(Error::Domain(format!("boundary fraction {b:.4} exceeds {fail}; enlarge the lattice extent")));
    }
    Ok((b > warn).then(|| format!("boundary fraction {b:.4} exceeds {warn}")))
}
