//! Dense complex linear algebra: Hermitian operators, spectral projectors,
//! norms, and column-stacked superoperators.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, numeric, Result};

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// (X + X†)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entry of X − X†, relative to the largest entry of X.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

fn ensure_finite(m: &CMat) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(invalid!("matrix has non-finite entries"))
    }
}

/// Pauli matrix by label (I, X, Y, Z).
pub fn pauli(label: char) -> Result<CMat> {
    let m = match label.to_ascii_uppercase() {
        'I' => [ONE, ZERO, ZERO, ONE],
        'X' => [ZERO, ONE, ONE, ZERO],
        'Y' => [ZERO, -I, I, ZERO],
        'Z' => [ONE, ZERO, ZERO, -ONE],
        other => return Err(invalid!("unknown Pauli label '{other}'")),
    };
    Ok(CMat::from_row_slice(2, 2, &m))
}

/// Tensor product of single-qubit Paulis; the leftmost label is the leftmost
/// Kronecker factor ("ZI" = Z ⊗ 1).
pub fn pauli_string(s: &str) -> Result<CMat> {
    let mut out: Option<CMat> = None;
    for ch in s.chars() {
        let p = pauli(ch)?;
        out = Some(match out {
            None => p,
            Some(acc) => kron(&acc, &p),
        });
    }
    out.ok_or_else(|| invalid!("empty Pauli string"))
}

/// Σ coefficient · Pauli string, all strings over the same qubit count.
pub fn pauli_sum(terms: &[(f64, &str)]) -> Result<CMat> {
    let mut acc: Option<CMat> = None;
    for (coef, s) in terms {
        let p = pauli_string(s)? * c(*coef, 0.0);
        acc = Some(match acc {
            None => p,
            Some(a) if a.shape() == p.shape() => a + p,
            Some(_) => return Err(invalid!("Pauli string '{s}' has inconsistent length")),
        });
    }
    acc.ok_or_else(|| invalid!("empty Pauli sum"))
}

/// Sum of singular values, ‖X‖₁ = Tr√(X†X).
pub fn trace_norm(m: &CMat) -> Result<f64> {
    ensure_finite(m)?;
    Ok(m.clone().svd(false, false).singular_values.iter().sum())
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> Result<f64> {
    ensure_finite(m)?;
    Ok(m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max))
}

/// Eigen-decomposition of the Hermitian part of `m`, ascending eigenvalues.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    ensure_finite(m)?;
    let h = hermitian_part(m);
    let n = h.nrows();
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| numeric!("Hermitian eigensolver did not converge ({n}×{n}, max entry {scale:.3e})"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((vals, vecs))
}

pub fn min_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.0.first().copied().unwrap_or(0.0))
}

/// exp(−i H τ) for Hermitian H.
pub fn unitary_evolution(h: &CMat, tau: f64) -> Result<CMat> {
    let (e, v) = eigh(h)?;
    let phases = CMat::from_diagonal(&DVector::from_iterator(e.len(), e.iter().map(|x| Complex64::cis(-x * tau))));
    Ok(&v * phases * v.adjoint())
}

/// Dense Hermitian matrix with validated Hermiticity.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMat);

impl HermitianOperator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(invalid!("operator must be square and non-empty, got {}×{}", m.nrows(), m.ncols()));
        }
        ensure_finite(&m)?;
        let r = hermiticity_residual(&m);
        if r > 1e-12 {
            return Err(invalid!("operator is not Hermitian (relative residual {r:.3e})"));
        }
        Ok(Self(hermitian_part(&m)))
    }

    pub fn from_pauli_sum(terms: &[(f64, &str)]) -> Result<Self> {
        Self::new(pauli_sum(terms)?)
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMat::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }
}

/// Unit-trace Hermitian state, checked for positivity at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn new(m: CMat, positivity_tol: f64) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(invalid!("density matrix must be square"));
        }
        ensure_finite(&m)?;
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(invalid!("density matrix not Hermitian (residual {herm:.3e})"));
        }
        let tr = trace(&m);
        if (tr - ONE).norm() > 1e-9 {
            return Err(invalid!("density matrix trace is {tr}, expected 1"));
        }
        let lo = min_eigenvalue(&m)?;
        if lo < -positivity_tol {
            return Err(invalid!("density matrix has eigenvalue {lo:.3e} below −{positivity_tol:.1e}"));
        }
        Ok(Self(hermitian_part(&m)))
    }

    /// |ψ⟩⟨ψ| after normalizing ψ.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(invalid!("state vector must be finite and nonzero"));
        }
        let v = psi / c(n, 0.0);
        Self::new(&v * v.adjoint(), 1e-12)
    }

    /// Computational basis projector |k⟩⟨k|.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(invalid!("basis index {k} out of range for dimension {d}"));
        }
        let mut m = CMat::zeros(d, d);
        m[(k, k)] = ONE;
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }
}

/// Spectral projectors of a Hermitian operator with degenerate levels merged.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub projectors: Vec<CMat>,
    /// Eigenvectors as columns, ordered by ascending eigenvalue.
    pub vectors: CMat,
    /// min |E_i − E_j| over distinct levels; infinite for a single level.
    pub level_spacing: f64,
    pub degeneracy_tol: f64,
}

/// Default merge tolerance 1e-9·max(1, ‖H‖).
pub fn default_degeneracy_tol(h: &HermitianOperator) -> f64 {
    1e-9 * operator_norm(h.matrix()).unwrap_or(1.0).max(1.0)
}

pub fn eigensystem(h: &HermitianOperator, degeneracy_tol: Option<f64>) -> Result<EigenSystem> {
    let tol = degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(h));
    if !(tol >= 0.0) {
        return Err(invalid!("degeneracy tolerance must be ≥ 0"));
    }
    let (vals, vecs) = eigh(h.matrix())?;
    let n = vals.len();
    let mut energies = Vec::new();
    let mut projectors: Vec<CMat> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < tol {
            end += 1;
        }
        let cols = vecs.columns(start, end - start);
        projectors.push(cols * cols.adjoint());
        energies.push(vals[start..end].iter().sum::<f64>() / (end - start) as f64);
        start = end;
    }
    let level_spacing = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(EigenSystem { energies, projectors, vectors: vecs, level_spacing, degeneracy_tol: tol })
}

impl EigenSystem {
    pub fn reconstruct(&self) -> CMat {
        let d = self.vectors.nrows();
        self.energies.iter().zip(&self.projectors).fold(CMat::zeros(d, d), |acc, (e, p)| acc + p * c(*e, 0.0))
    }
}

/// Column-stacking vectorization.
pub fn vec_of(m: &CMat) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<Complex64>, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Linear map on d×d matrices stored as a d²×d² matrix acting on vec(ρ).
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub matrix: CMat,
    pub dim: usize,
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        Self { matrix: CMat::zeros(dim * dim, dim * dim), dim }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMat::identity(dim * dim, dim * dim), dim }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvec(&(&self.matrix * vec_of(rho)), self.dim)
    }

    /// Adds −i[H, ·].
    pub fn add_hamiltonian(&mut self, h: &CMat) {
        let id = identity(self.dim);
        self.matrix += (kron(&id, h) - kron(&h.transpose(), &id)) * (-I);
    }

    /// Adds w·(LρL† − ½{ρ, L†L}).
    pub fn add_lindblad(&mut self, w: f64, l: &CMat) {
        let id = identity(self.dim);
        let ldl = l.adjoint() * l;
        let wc = c(w, 0.0);
        self.matrix += (kron(&l.conjugate(), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * c(0.5, 0.0)) * wc;
    }

    /// Adds AρA_f − ρA_fA + h.c. (Redfield pair form).
    pub fn add_redfield_pair(&mut self, a: &CMat, af: &CMat) {
        let id = identity(self.dim);
        let afd = af.adjoint();
        self.matrix += kron(&af.transpose(), a) - kron(&(af * a).transpose(), &id) + kron(&a.transpose(), &afd)
            - kron(&id, &(a * &afd));
    }

    /// Induced 2-norm of the d²×d² matrix.
    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.matrix).unwrap_or(f64::NAN)
    }

    /// Choi matrix Σ_ij E_ij ⊗ Φ(E_ij).
    pub fn choi(&self) -> CMat {
        let d = self.dim;
        CMat::from_fn(d * d, d * d, |r, s| {
            let (i, k) = (r / d, r % d);
            let (j, l) = (s / d, s % d);
            self.matrix[(k + l * d, i + j * d)]
        })
    }

    /// Minimum eigenvalue of the Choi matrix of 1 + dt·𝓛.
    pub fn step_choi_min_eigenvalue(&self, dt: f64) -> Result<f64> {
        let step = Superoperator { matrix: CMat::identity(self.matrix.nrows(), self.matrix.ncols()) + &self.matrix * c(dt, 0.0), dim: self.dim };
        min_eigenvalue(&step.choi())
    }
}

/// Vectorized Lindblad generator −i[H, ρ] + Σ w(LρL† − ½{ρ, L†L}).
pub fn vectorize_generator(h_eff: &HermitianOperator, lindblad_ops: &[(f64, CMat)]) -> Result<Superoperator> {
    let d = h_eff.dim();
    let mut s = Superoperator::zeros(d);
    s.add_hamiltonian(h_eff.matrix());
    for (w, l) in lindblad_ops {
        if l.shape() != (d, d) {
            return Err(invalid!("Lindblad operator is {}×{}, expected {d}×{d}", l.nrows(), l.ncols()));
        }
        if !(*w >= 0.0) {
            return Err(invalid!("Lindblad weight {w} must be ≥ 0"));
        }
        s.add_lindblad(*w, l);
    }
    Ok(s)
}

/// Vectorized Redfield generator −i[H, ρ] + Σ (AρA_f − ρA_fA + h.c.).
pub fn vectorize_redfield(h: &HermitianOperator, pairs: &[(CMat, CMat)]) -> Result<Superoperator> {
    let d = h.dim();
    let mut s = Superoperator::zeros(d);
    s.add_hamiltonian(h.matrix());
    for (a, af) in pairs {
        if a.shape() != (d, d) || af.shape() != (d, d) {
            return Err(invalid!("Redfield operators must be {d}×{d}"));
        }
        s.add_redfield_pair(a, af);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(d: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(d, d, |_, _| c(next(), next()))
    }

    #[test]
    fn pauli_spectrum_and_spacing() {
        let z = HermitianOperator::new(pauli('Z').unwrap()).unwrap();
        let es = eigensystem(&z, None).unwrap();
        assert_eq!(es.energies, alloc::vec![-1.0, 1.0]);
        assert!((es.level_spacing - 2.0).abs() < 1e-14);
    }

    #[test]
    fn null_hamiltonian_is_one_level() {
        let es = eigensystem(&HermitianOperator::zeros(2), None).unwrap();
        assert_eq!(es.energies.len(), 1);
        assert!((&es.projectors[0] - identity(2)).norm() < 1e-14);
        assert!(es.level_spacing.is_infinite());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = pauli('X').unwrap();
        m[(0, 1)] = c(2.0, 0.0);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn norms_of_simple_matrices() {
        assert!((trace_norm(&identity(3)).unwrap() - 3.0).abs() < 1e-14);
        assert!((operator_norm(&pauli('Z').unwrap()).unwrap() - 1.0).abs() < 1e-14);
        assert!((operator_norm(&(identity(2) * c(3.0, 0.0))).unwrap() - 3.0).abs() < 1e-14);
        let mut bad = identity(2);
        bad[(0, 0)] = c(f64::NAN, 0.0);
        assert!(trace_norm(&bad).is_err());
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let d = 3;
        let h = HermitianOperator::new(hermitian_part(&random_matrix(d, 1))).unwrap();
        let l = random_matrix(d, 2);
        let rho = random_matrix(d, 3);
        let s = vectorize_generator(&h, &[(0.7, l.clone())]).unwrap();
        let hm = h.matrix();
        let ldl = l.adjoint() * &l;
        let direct = (hm * &rho - &rho * hm) * (-I)
            + (&l * &rho * l.adjoint() - (&rho * &ldl + &ldl * &rho) * c(0.5, 0.0)) * c(0.7, 0.0);
        assert!((s.apply(&rho) - direct).norm() < 1e-12);

        let a = hermitian_part(&random_matrix(d, 4));
        let af = random_matrix(d, 5);
        let r = vectorize_redfield(&h, &[(a.clone(), af.clone())]).unwrap();
        // The h.c. term is linear only on Hermitian inputs.
        let rho_h = hermitian_part(&rho);
        let x = &a * &rho_h * &af - &rho_h * &af * &a;
        let direct_h = (hm * &rho_h - &rho_h * hm) * (-I) + &x + x.adjoint();
        assert!((r.apply(&rho_h) - direct_h).norm() < 1e-12);
    }

    #[test]
    fn dephasing_superoperator_is_cp_and_decays_coherences() {
        let s = vectorize_generator(&HermitianOperator::zeros(2), &[(0.3, pauli('Z').unwrap())]).unwrap();
        assert!(s.step_choi_min_eigenvalue(1e-3).unwrap() >= -1e-12);
        let rho = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let drho = s.apply(&rho);
        assert!((drho[(0, 1)] - c(-0.6 * 0.5, 0.0)).norm() < 1e-14);
        assert!(drho[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn pauli_strings_order_factors_left_to_right() {
        let zi = pauli_string("ZI").unwrap();
        assert_eq!(zi[(2, 2)], c(-1.0, 0.0));
        assert_eq!(zi[(1, 1)], c(1.0, 0.0));
        assert!(pauli_string("ZQ").is_err());
        assert!(pauli_sum(&[(1.0, "Z"), (1.0, "ZZ")]).is_err());
    }

    #[test]
    fn unitary_evolution_is_unitary() {
        let h = hermitian_part(&random_matrix(4, 9));
        let u = unitary_evolution(&h, 0.37).unwrap();
        assert!((u.adjoint() * &u - identity(4)).norm() < 1e-12);
    }
}
