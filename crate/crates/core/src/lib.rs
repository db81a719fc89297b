//! Orthogonal nonnegative Tucker decomposition (ONTD) on dense tensors.
//!
//! A nonnegative tensor `A` of shape `I_1 x ... x I_d` is approximated as
//! `S x_1 U1 x_2 U2 ... x_d Ud` where every factor `Un` is nonnegative with
//! orthonormal columns and the core `S` is nonnegative. Each factor is found
//! by an ADMM solve for the projector `Kn = Un Un^T` over a convex relaxation,
//! followed by a clustering step that turns the projector back into a factor.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! wall-clock timing live in the `ontd` companion crate.
//!
//! Modes are 0-based throughout this API.

#![no_std]

extern crate alloc;

pub mod admm;
pub mod core_solver;
pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod prox;
pub mod recovery;
pub mod rng;
pub mod synth;
pub mod tensor;

pub use admm::{AdmmParams, AdmmSolver, AdmmState, BoxProjection, ModeSolve};
pub use core_solver::{reconstruct, rowwise_norm_check, solve_core, CoreSolve, ModeFactor, OntdModel};
pub use error::{Error, Result};
pub use linalg::{spd_solve, sym_eig, Cholesky, EigenPair};
pub use pipeline::{
    avg_error, compression_ratio, decompose, extract_features, similarity, space_savings,
    DecomposeConfig, DecomposeReport, FactorRoute,
};
pub use recovery::{
    exact_factor_from_unfolding, kmeans, match_factors, recover_factor, ClusterAssignment,
    FactorMatrix,
};
pub use synth::{gen_factor, gen_tensor, gen_unmixing, suite, SynthSpec, UnmixingInstance};
pub use tensor::{kron, DenseMatrix, DenseTensor};
