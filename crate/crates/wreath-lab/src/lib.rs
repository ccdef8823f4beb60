//! Character theory of the infinite wreath product Γ≀S∞ for a finite base group Γ.
//!
//! The crate is organised bottom-up:
//! - [`finite_group`]: base groups by multiplication table, classes, unitary irreps.
//! - [`wreath`]: exact arithmetic with finitely supported elements of Γ≀S∞.
//! - [`thoma`]: the indecomposable characters and their axiom checks.
//! - [`fock`]: the truncated tensor-product realization and Okounkov averages.
//! - [`cosets`]: double-coset diagrams and their multiplication.
//! - [`typeiii`]: the ℤ₂×ℤ₂ product-measure example and its modular operator.
//! - [`suites`] and [`report`]: named verification suites and their reports.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod cosets;
pub mod error;
pub mod finite_group;
pub mod fock;
pub mod report;
pub mod sampling;
pub mod suites;
pub mod thoma;
pub mod typeiii;
pub mod wreath;

pub use error::{Error, Result};
pub use finite_group::{Group, GroupTable, MatrixRep};
pub use thoma::ThomaParams;
pub use wreath::{GammaTuple, Permutation, WreathElement};
