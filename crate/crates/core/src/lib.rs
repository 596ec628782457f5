//! Quasiorder lattices of finite posets and small generating sets for them.

pub mod authsim;
pub mod eqslat;
pub mod error;
pub mod genset;
pub mod lattice;
pub mod latterm;
pub mod poset;
pub mod quolattice;
pub mod rel;
pub mod report;

pub use error::{Error, Result};
pub use lattice::{Lattice, QuleqLattice, QuoLattice, TableLattice};
pub use latterm::LatTerm;
pub use poset::{build_poset, Poset};
pub use rel::QuasiRel;

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/posets.md")]
    mod posets {}
    #[doc = include_str!("../../../book/src/quasiorders.md")]
    mod quasiorders {}
    #[doc = include_str!("../../../book/src/terms.md")]
    mod terms {}
    #[doc = include_str!("../../../book/src/generating-sets.md")]
    mod generating_sets {}
    #[doc = include_str!("../../../book/src/equations.md")]
    mod equations {}
    #[doc = include_str!("../../../book/src/authentication.md")]
    mod authentication {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
