//! Finite-dimensional laboratory for covering constructions over unitaries.
//!
//! * [`operator`]: dense complex operators, norms, Hilbert–Schmidt products.
//! * [`spectral`]: eigen-decomposition of unitaries and circle functional calculus.
//! * [`roots`]: branch n-th roots and blockwise roots on degenerate eigenspaces.
//! * [`tower`]: square-root towers and the embedding of compactly supported functions.
//! * [`torus`]: clock/shift representations of the rational noncommutative torus.
//! * [`span`]: word spans of generated algebras and membership tests.
//! * [`amplification`]: the branch-change isomorphism on finite amplifications.
//!
//! Batch entry points take an [`Execution`]; with the default `parallel` feature it
//! runs on rayon, otherwise everything stays on the calling thread.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplification;
pub mod error;
pub mod exec;
pub mod operator;
pub mod random;
pub mod roots;
pub mod span;
pub mod spectral;
pub mod torus;
pub mod tower;

pub use amplification::{amplification_iso_check, amplification_iso_check_with, IsoOptions, IsoReport};
pub use error::{LabError, Result};
pub use exec::Execution;
pub use operator::{hs_inner, operator_norm, Operator, Unitary, C64};
pub use roots::{
    general_root_search, nth_root_branch, root_residual, BranchArc, BranchFunction, MixerBlock, RootReport,
};
pub use span::{generate_span, generate_span_with, membership_residual, GeneratedAlgebraSpan, SpanOptions, SpanReport};
pub use spectral::{apply_circle_function, spectral_decompose, spectral_decompose_with, SpectralDecomposition};
pub use torus::{
    anticommuting_root_example, clock_shift, commutation_residual, covering_generator_products,
    theta_halving_embedding, TorusParams, TorusRep,
};
pub use tower::{
    build_tower, embed_compact_function, level_independence_residual, multiplier_membership_check,
    CompactFunction, RootTower,
};
