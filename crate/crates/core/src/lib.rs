//! Randomized coordinate methods for structured nonconvex composite
//! problems `F(x) = f(x) + phi(x) - h(x)`.
//!
//! `f` is a smooth generalized linear loss over a sparse data matrix, `phi`
//! is a separable convex regularizer and `h` is convex (possibly nonsmooth).
//! See [`solvers::solve`] for the entry point.

pub mod blockspace;
pub mod data;
pub mod error;
pub mod measures;
pub mod oracles;
pub mod problem;
pub mod regularizers;
pub mod rng;
pub mod solvers;

pub use blockspace::BlockPartition;
pub use error::{Error, Result};
pub use problem::CompositeProblem;
pub use solvers::{solve, Algorithm, SolverConfig, SolverOutput};

// compiles and runs the guide's snippets with the doc-tests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/blocks.md")]
    mod blocks {}
    #[doc = include_str!("../../../book/src/regularizers.md")]
    mod regularizers {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
