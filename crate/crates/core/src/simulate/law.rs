use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A seeded Monte Carlo sample of argmax (or estimator) draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    dim: usize,
    /// Row-major, one row per replicate.
    draws: Vec<f64>,
    values: Vec<f64>,
    on_boundary: Vec<bool>,
    pub master_seed: u64,
    pub boundary_fraction: f64,
}

impl EmpiricalLaw {
    pub fn new(
        dim: usize,
        draws: Vec<f64>,
        values: Vec<f64>,
        on_boundary: Vec<bool>,
        master_seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("law dimension must be at least 1".into()));
        }
        let reps = values.len();
        check_dim(reps * dim, draws.len())?;
        check_dim(reps, on_boundary.len())?;
        let hits = on_boundary.iter().filter(|b| **b).count();
        let boundary_fraction = if reps == 0 { 0.0 } else { hits as f64 / reps as f64 };
        Ok(Self { dim, draws, values, on_boundary, master_seed, boundary_fraction })
    }

    /// Law from bare points (value 0, interior).
    pub fn from_points(dim: usize, draws: Vec<f64>, master_seed: u64) -> Result<Self> {
        if dim == 0 || !draws.len().is_multiple_of(dim) {
            return Err(Error::InvalidSpec("draws do not divide into rows of the given dimension".into()));
        }
        let reps = draws.len() / dim;
        Self::new(dim, draws, vec![0.0; reps], vec![false; reps], master_seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn replications(&self) -> usize {
        self.values.len()
    }

    pub fn draw(&self, rep: usize) -> &[f64] {
        &self.draws[rep * self.dim..(rep + 1) * self.dim]
    }

    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn on_boundary(&self) -> &[bool] {
        &self.on_boundary
    }

    /// Coordinate `l` of every draw.
    pub fn marginal(&self, l: usize) -> Vec<f64> {
        self.draws().map(|d| d[l]).collect()
    }

    /// Concatenates two laws of the same dimension (provenance from `self`).
    pub fn concat(&self, other: &EmpiricalLaw) -> Result<EmpiricalLaw> {
        check_dim(self.dim, other.dim)?;
        let mut draws = self.draws.clone();
        draws.extend_from_slice(&other.draws);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        let mut bnd = self.on_boundary.clone();
        bnd.extend_from_slice(&other.on_boundary);
        EmpiricalLaw::new(self.dim, draws, values, bnd, self.master_seed)
    }
}

/// Fraction of draws with every coordinate `≤ t` (inclusive).
pub fn ecdf_eval(law: &EmpiricalLaw, t: &[f64]) -> Result<f64> {
    check_dim(law.dim, t.len())?;
    let reps = law.replications();
    if reps == 0 {
        return Err(Error::Empty("law draws"));
    }
    let hits = law.draws().filter(|d| d.iter().zip(t).all(|(d, t)| d <= t)).count();
    Ok(hits as f64 / reps as f64)
}

/// Reference distribution for [`ks_distance`].
pub enum KsTarget<'a> {
    Law(&'a EmpiricalLaw),
    /// A continuous one-dimensional CDF.
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// Kolmogorov distance `sup_t |F_a(t) - F_b(t)|`.
///
/// For two laws the supremum runs over all corner points formed from the
/// pooled coordinate values, which is exact: both CDFs are constant between
/// consecutive pooled values in every coordinate. For `d = 1` this is the
/// two-sample KS statistic. A continuous CDF target is supported in `d = 1`.
pub fn ks_distance(a: &EmpiricalLaw, b: KsTarget<'_>) -> Result<f64> {
    if a.replications() == 0 {
        return Err(Error::Empty("law draws"));
    }
    match b {
        KsTarget::Law(b) => {
            check_dim(a.dim, b.dim)?;
            if b.replications() == 0 {
                return Err(Error::Empty("law draws"));
            }
            Ok(ks_two_sample(a, b))
        }
        KsTarget::Cdf(cdf) => {
            check_dim(1, a.dim)?;
            let mut xs = a.marginal(0);
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let mut best: f64 = 0.0;
            let mut i = 0;
            while i < xs.len() {
                let mut j = i;
                while j < xs.len() && xs[j] == xs[i] {
                    j += 1;
                }
                let f = cdf(xs[i]);
                let below = i as f64 / n;
                let at = j as f64 / n;
                best = best.max((f - below).abs()).max((at - f).abs());
                i = j;
            }
            Ok(best)
        }
    }
}

fn ks_two_sample(a: &EmpiricalLaw, b: &EmpiricalLaw) -> f64 {
    let (na, nb) = (a.replications() as i64, b.replications() as i64);
    // Integer weights: draws of `a` count +nb, draws of `b` count -na, so
    // D(t) = (F_a - F_b)(t)·na·nb exactly.
    let mut pts: Vec<(&[f64], i64)> = a.draws().map(|d| (d, nb)).collect();
    pts.extend(b.draws().map(|d| (d, -na)));
    let best = max_abs_orthant_sum(&pts, a.dim);
    best as f64 / (na as f64 * nb as f64)
}

/// `max_t |Σ_{p ≤ t} w_p|` over corners of the pooled coordinate grid.
fn max_abs_orthant_sum(pts: &[(&[f64], i64)], dim: usize) -> i64 {
    match dim {
        1 => {
            let mut v: Vec<(f64, i64)> = pts.iter().map(|(p, w)| (p[0], *w)).collect();
            v.sort_by(|x, y| x.0.total_cmp(&y.0));
            let (mut acc, mut best) = (0i64, 0i64);
            let mut i = 0;
            while i < v.len() {
                let x = v[i].0;
                while i < v.len() && v[i].0 == x {
                    acc += v[i].1;
                    i += 1;
                }
                best = best.max(acc.abs());
            }
            best
        }
        2 => sweep_2d(pts.iter().map(|(p, w)| (p[0], p[1], *w)).collect()),
        _ => {
            // Enumerate thresholds on the leading coordinate, recurse on the rest.
            let mut levels: Vec<f64> = pts.iter().map(|(p, _)| p[0]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let mut best = 0;
            for t in levels {
                let sub: Vec<(&[f64], i64)> =
                    pts.iter().filter(|(p, _)| p[0] <= t).map(|(p, w)| (&p[1..], *w)).collect();
                best = best.max(max_abs_orthant_sum(&sub, dim - 1));
            }
            best
        }
    }
}

/// Sweep over the first coordinate; a segment tree over the ranks of the
/// second coordinate tracks the extreme prefix sums.
fn sweep_2d(mut pts: Vec<(f64, f64, i64)>) -> i64 {
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tree = PrefixTree::new(ys.len());
    let mut best = 0i64;
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        while i < pts.len() && pts[i].0 == x {
            let rank = ys.binary_search_by(|y| y.total_cmp(&pts[i].1)).expect("pooled value");
            tree.add(rank, pts[i].2);
            i += 1;
        }
        best = best.max(tree.max_abs_prefix());
    }
    best
}

#[derive(Clone, Copy, Default)]
struct Node {
    sum: i64,
    max_pref: i64,
    min_pref: i64,
}

struct PrefixTree {
    size: usize,
    nodes: Vec<Node>,
}

impl PrefixTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        Self { size, nodes: vec![Node::default(); 2 * size] }
    }

    fn add(&mut self, pos: usize, w: i64) {
        let mut i = pos + self.size;
        let leaf = &mut self.nodes[i];
        leaf.sum += w;
        leaf.max_pref = leaf.sum;
        leaf.min_pref = leaf.sum;
        while i > 1 {
            i /= 2;
            let (l, r) = (self.nodes[2 * i], self.nodes[2 * i + 1]);
            self.nodes[i] = Node {
                sum: l.sum + r.sum,
                max_pref: l.max_pref.max(l.sum + r.max_pref),
                min_pref: l.min_pref.min(l.sum + r.min_pref),
            };
        }
    }

    fn max_abs_prefix(&self) -> i64 {
        let root = self.nodes[1];
        root.max_pref.abs().max(root.min_pref.abs())
    }
}
