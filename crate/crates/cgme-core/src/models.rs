//! The two-qubit benchmark and seeded random test models.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bath::Bath;
use crate::error::Result;
use crate::operator::{c, hermitian_part, operator_norm, pauli_string, CMat, DensityMatrix, HermitianOperator};

/// H, coupling A, and initial state of a system coupled to one bath.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub hamiltonian: HermitianOperator,
    pub coupling: HermitianOperator,
    pub initial: DensityMatrix,
}

/// H = ½ZI − 0.7IZ + 0.3ZZ + XI + IX, A = ZI, ρ₀ = |11⟩⟨11|.
pub fn two_qubit_benchmark() -> Result<Model> {
    let hamiltonian =
        HermitianOperator::from_pauli_sum(&[(0.5, "ZI"), (-0.7, "IZ"), (0.3, "ZZ"), (1.0, "XI"), (1.0, "IX")])?;
    let coupling = HermitianOperator::new(pauli_string("ZI")?)?;
    Ok(Model { hamiltonian, coupling, initial: DensityMatrix::basis(4, 3)? })
}

/// Toy bath of the benchmark: a = 1.01, b = 0.6, β = 4.
pub fn benchmark_bath(tau_sb: f64) -> Result<Bath> {
    Bath::toy(1.01, 0.6, 4.0, tau_sb)
}

/// Hermitian matrix with i.i.d. complex Gaussian entries, symmetrized.
pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    hermitian_part(&g)
}

/// Random n-qubit model: H with ‖H‖ ~ 1, coupling normalized to ‖A‖ = 1,
/// and a random pure initial state.
pub fn random_model(qubits: u32, seed: u64) -> Result<Model> {
    let d = 1usize << qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(&mut rng, d);
    let h = &h / c(operator_norm(&h)?, 0.0);
    let a = random_hermitian(&mut rng, d);
    let a = &a / c(operator_norm(&a)?, 0.0);
    let psi: Vec<_> = (0..d).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let psi = nalgebra::DVector::from_vec(psi);
    let psi = &psi / c(psi.norm(), 0.0);
    Ok(Model {
        hamiltonian: HermitianOperator::new(hermitian_part(&h))?,
        coupling: HermitianOperator::new(hermitian_part(&a))?,
        initial: DensityMatrix::pure(&psi)?,
    })
}
