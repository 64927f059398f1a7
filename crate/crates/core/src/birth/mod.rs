//! The pure birth process `Z` leaving state `k` at rate `f(k)`.

mod laplace;
mod measure;
mod path;
mod semigroup;

pub use laplace::{laplace_pf, laplace_pf_all, SeriesConfig, SeriesStatus, SeriesValue};
pub use measure::{log_tau_grid, HProfile, MeasureTables};
pub use path::{
    sample_conditioned_path, sample_coupled_pair, sample_path, CoupledPair, JumpPath,
    DEFAULT_JUMP_CAP,
};
pub use semigroup::{
    semigroup_for, BirthSemigroup, LinearSemigroup, SemigroupTable, StateLaw, TableConfig, TableMeta,
};
