//! Classical simulator of the commutation circuit.
//!
//! A `(2L+1)`-qubit circuit (control, system, reference) whose control-qubit
//! `⟨Z⟩` encodes `⟨Φ|Ẑ^χ_A|Φ⟩`, from which matrix elements of commutators and
//! anti-commutators of a time-evolved density operator are read out. On top
//! of that sit the closed-system (von Neumann) and open-system (Lindblad)
//! rate-matrix assemblers.

pub mod circuit;
pub mod error;
pub mod estimator;
pub mod lindblad;
pub mod qcore;
pub mod random;
pub mod vonneumann;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
