use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of lattice points.
pub const DEFAULT_POINT_CAP: u128 = 4_000_000;

/// Regular symmetric grid on `[-N, N]^d` with spacing `1/ppu`.
///
/// Points are ordered lexicographically by integer index, first coordinate
/// slowest, starting from `(-N, ..., -N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    extent: f64,
    ppu: u32,
    half: i64,
    coords: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub extent: f64,
    pub ppu: u32,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        build_lattice(self.dim, self.extent, self.ppu)
    }
}

pub fn build_lattice(dim: usize, extent: f64, ppu: u32) -> Result<Lattice> {
    Lattice::with_cap(dim, extent, ppu, DEFAULT_POINT_CAP)
}

impl Lattice {
    pub fn with_cap(dim: usize, extent: f64, ppu: u32, cap: u128) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("lattice dimension must be at least 1".into()));
        }
        if !(extent >= 1.0) || !extent.is_finite() {
            return Err(Error::InvalidSpec(format!("lattice extent must be ≥ 1, got {extent}")));
        }
        if ppu == 0 {
            return Err(Error::InvalidSpec("points per unit must be at least 1".into()));
        }
        let scaled = extent * f64::from(ppu);
        let half = scaled.round();
        if (scaled - half).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("extent·ppu = {scaled} is not an integer")));
        }
        let half = half as i64;
        let side = (2 * half + 1) as u128;
        let points = side.checked_pow(dim as u32).unwrap_or(u128::MAX);
        if points > cap {
            return Err(Error::Sizing { points, cap });
        }
        let n = points as usize;
        let side = side as usize;
        let mut coords = vec![0.0; n * dim];
        for i in 0..n {
            let mut rem = i;
            for l in (0..dim).rev() {
                let k = (rem % side) as i64 - half;
                rem /= side;
                coords[i * dim + l] = k as f64 / f64::from(ppu);
            }
        }
        Ok(Self { dim, extent, ppu, half, coords })
    }

    pub fn spec(&self) -> LatticeSpec {
        LatticeSpec { dim: self.dim, extent: self.extent, ppu: self.ppu }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn ppu(&self) -> u32 {
        self.ppu
    }

    pub fn spacing(&self) -> f64 {
        1.0 / f64::from(self.ppu)
    }

    /// Number of grid values per coordinate.
    pub fn side(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Integer index of coordinate `l` of point `i`, in `-K..=K`.
    pub fn index(&self, i: usize, l: usize) -> i64 {
        let side = self.side();
        let mut rem = i;
        for _ in (l + 1)..self.dim {
            rem /= side;
        }
        (rem % side) as i64 - self.half
    }

    pub fn origin_index(&self) -> usize {
        // Middle of the lexicographic order.
        (self.len() - 1) / 2
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        (0..self.dim).any(|l| self.index(i, l).abs() == self.half)
    }
}
