//! Complex linear-algebra substrate: states, dense operators, Pauli algebra,
//! and exact unitary propagation.

pub mod eigen;
pub mod operator;
pub mod pauli;
pub mod state;

pub use eigen::{eigh, evolve_unitary, HermitianEigen, Propagator};
pub use operator::{anticommutator, commutator, dagger, Operator};
pub use pauli::{
    pauli_decompose, pauli_decompose_with_tolerance, pauli_matrix, pauli_reconstruct, Pauli,
    PauliString, WeightedPauliSum,
};
pub use state::{DensityMatrix, RawVector, StateVector};
