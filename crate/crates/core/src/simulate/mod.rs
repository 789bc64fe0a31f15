//! Lattice path sampling, argmax extraction and empirical argmax laws.

mod factor;
mod lattice;
mod law;
mod mc;
mod sampler;

pub use factor::{pinned_factor, JitterPolicy, PinnedFactor, FACTOR_MAX_POINTS};
pub use lattice::{build_lattice, Lattice, LatticeSpec, DEFAULT_POINT_CAP};
pub use law::{ecdf_eval, ks_distance, EmpiricalLaw, KsTarget};
pub use mc::{
    argmax_on_lattice, boundary_guard, gaussian_argmax_law, mc_argmax, mc_argmax_with, ArgmaxDraw, McOptions,
};
pub use sampler::{sample_bm_exact_1d, sample_path, PathSample, PathSampler, SamplerKind, Scratch};

pub(crate) use mc::argmax_index;
pub(crate) use sampler::mean_on_lattice;
pub(crate) use sampler::{fill_bm_at_times, fill_bm_exact_1d};
