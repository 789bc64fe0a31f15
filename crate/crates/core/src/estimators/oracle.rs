//! Exhaustive reference implementations of the three fitters.

use nalgebra::DVector;

use super::dgp::Dataset;
use super::fit::{erm_candidates, erm_classifier, pick_min_rss, threshreg_design, FitResult, ThetaGrid};
use crate::error::{Error, Result};

/// Full table of maximum score objectives, grid order.
pub fn maxscore_table(data: &Dataset, grid: &ThetaGrid) -> Result<Vec<i64>> {
    let Dataset::MaxScore { y, w, x } = data else {
        return Err(Error::InvalidSpec("maximum score dataset expected".into()));
    };
    Ok((0..grid.len())
        .map(|g| {
            let t = grid.point(g);
            let mut s = 0;
            for ((yi, wi), xi) in y.iter().zip(w).zip(x) {
                let index = match t.len() {
                    1 => wi + xi[0] * t[0],
                    _ => (wi + xi[0] * t[0]) + xi[1] * t[1],
                };
                if index >= 0.0 {
                    s += if *yi { 1 } else { -1 };
                }
            }
            s
        })
        .collect())
}

pub fn brute_force_maxscore(data: &Dataset, grid: &ThetaGrid) -> Result<FitResult> {
    let table = maxscore_table(data, grid)?;
    let best = *table.iter().max().ok_or(Error::Empty("θ grid"))?;
    let index = table.iter().position(|v| *v == best).expect("maximum present");
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

/// Enumerates every ordered tuple of candidate cuts with the literal classifier.
pub fn brute_force_erm(data: &Dataset, d: usize) -> Result<FitResult> {
    let Dataset::Erm { y, x } = data else {
        return Err(Error::InvalidSpec("ERM dataset expected".into()));
    };
    let cand = erm_candidates(x);
    let count = |theta: &[f64]| x.iter().zip(y).filter(|(xi, yi)| erm_classifier(theta, **xi) != **yi).count();
    let mut tuples: Vec<Vec<f64>> = Vec::new();
    match d {
        1 => tuples.extend(cand.iter().map(|c| vec![*c])),
        2 => {
            for i in 0..cand.len() {
                for j in i..cand.len() {
                    tuples.push(vec![cand[i], cand[j]]);
                }
            }
        }
        _ => return Err(Error::InvalidSpec(format!("ERM supports d ∈ {{1, 2}}, got {d}"))),
    }
    let errs: Vec<usize> = tuples.iter().map(|t| count(t)).collect();
    let best = *errs.iter().min().expect("candidates present");
    let index = errs.iter().position(|e| *e == best).expect("minimum present");
    Ok(FitResult {
        theta: tuples[index].clone(),
        beta: None,
        delta: None,
        objective: best as f64,
        index,
        candidates: tuples.len(),
        skipped: 0,
    })
}

/// RSS per grid point via an SVD least-squares solve (`None` when rank deficient).
pub fn threshreg_table(data: &Dataset, grid: &ThetaGrid) -> Result<Vec<Option<f64>>> {
    let Dataset::ThreshReg { y, x, q, w } = data else {
        return Err(Error::InvalidSpec("threshold regression dataset expected".into()));
    };
    let yv = DVector::from_column_slice(y);
    Ok((0..grid.len())
        .map(|g| {
            let z = threshreg_design(x, q, w, &grid.point(g));
            let svd = z.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let rank = svd.rank(1e-5 * smax.max(f64::MIN_POSITIVE));
            if rank < z.ncols() {
                return None;
            }
            let coef = svd.solve(&yv, 0.0).ok()?;
            Some((&yv - &z * coef).norm_squared())
        })
        .collect())
}

pub fn brute_force_threshreg(data: &Dataset, grid: &ThetaGrid) -> Result<FitResult> {
    let table = threshreg_table(data, grid)?;
    let index = pick_min_rss(&table).ok_or_else(|| Error::Fit("every candidate θ gave a singular design".into()))?;
    Ok(FitResult {
        theta: grid.point(index),
        beta: None,
        delta: None,
        objective: table[index].expect("picked a fitted candidate"),
        index,
        candidates: grid.len(),
        skipped: table.iter().filter(|r| r.is_none()).count(),
    })
}
