//! Sparse and dense linear algebra.

pub mod csr;
pub mod dense;
pub mod iterative;
pub mod lu;
pub mod ordering;

pub use csr::{CsrMatrix, SparsityBuilder};
pub use dense::{dense_solve, DenseLu};
pub use iterative::{bicgstab, Ilu0};
pub use lu::SparseLu;
