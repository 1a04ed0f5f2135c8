//! Runs configured equations on a model; shared by the subcommands and the
//! acceptance suite.

use cgme_core::bath::{Bath, BathTimescales};
use cgme_core::driving::{DriveSchedule, TdCgme, TdRedfield};
use cgme_core::evolve::{evolve, evolve_generator, evolve_ore, EvolutionResult, IntegratorConfig};
use cgme_core::generators::{
    build_generator, commutator_norm, decompose_coupling, discretization_params, Dissipator, EquationKind, GeneratorConfig,
    GeneratorSet, JumpDecomposition,
};
use cgme_core::operator::{eigensystem, CMat, DensityMatrix, HermitianOperator};
use rayon::prelude::*;

use crate::config::{EquationConfig, EquationName, ExperimentConfig};
use crate::error::{config_err, CliError, Result};

/// A model ready to evolve.
#[derive(Debug, Clone)]
pub struct Setup {
    pub hamiltonian: HermitianOperator,
    pub couplings: Vec<HermitianOperator>,
    pub initial: DensityMatrix,
    pub bath: Bath,
    pub timescales: BathTimescales,
}

impl Setup {
    pub fn new(hamiltonian: HermitianOperator, couplings: Vec<HermitianOperator>, initial: DensityMatrix, bath: Bath, t_cutoff: Option<f64>) -> Result<Self> {
        let timescales = bath.timescales(t_cutoff)?;
        Ok(Self { hamiltonian, couplings, initial, bath, timescales })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(cfg.hamiltonian()?, cfg.couplings()?, cfg.initial_state()?, cfg.bath()?, cfg.t_cutoff())
    }

    /// √(τ_Bτ_SB/5).
    pub fn theory_t_a(&self) -> f64 {
        (self.timescales.tau_b * self.timescales.tau_sb / 5.0).sqrt()
    }

    fn jump_decompositions(&self) -> Result<Vec<JumpDecomposition>> {
        let eig = eigensystem(&self.hamiltonian, None)?;
        self.couplings.iter().map(|a| Ok(decompose_coupling(&eig, a, None)?)).collect()
    }

    fn single_coupling(&self, what: &str) -> Result<&HermitianOperator> {
        match self.couplings.as_slice() {
            [a] => Ok(a),
            _ => Err(config_err(format!("{what} supports a single coupling operator"))),
        }
    }

    /// Time-independent generator; couplings to independent copies of the
    /// bath add their dissipators and Lamb shifts.
    pub fn generator(&self, eq: &EquationConfig, t_a: Option<f64>) -> Result<(GeneratorSet, Option<f64>)> {
        let jds = self.jump_decompositions()?;
        let (gc, t_a) = match eq.kind {
            EquationName::Redfield => (GeneratorConfig::new(EquationKind::Redfield), None),
            EquationName::Davies => (GeneratorConfig::new(EquationKind::Davies), None),
            EquationName::Cgme => {
                let t_a = t_a.or(eq.t_a).unwrap_or_else(|| self.theory_t_a());
                (GeneratorConfig::cgme(t_a), Some(t_a))
            }
            EquationName::CgmeDiscrete => {
                let a = self.single_coupling("the discrete CGME")?;
                let (recipe_t_a, disc) = discretization_params(&self.timescales, commutator_norm(&self.hamiltonian, a)?)?;
                let t_a = t_a.or(eq.t_a).unwrap_or(recipe_t_a);
                let gc = GeneratorConfig { kind: EquationKind::CgmeDiscrete, t_a: Some(t_a), lambless: false, discretization: Some(disc) };
                (gc, Some(t_a))
            }
            EquationName::Ore => return Err(config_err("the ORE has no time-independent generator")),
        };
        let gc = if eq.lambless { gc.lambless() } else { gc };
        let mut sets = jds.iter().map(|jd| build_generator(jd, &self.bath, &gc)).collect::<cgme_core::Result<Vec<_>>>()?;
        let mut merged = sets.remove(0);
        for s in sets {
            merged.lamb_shift += &s.lamb_shift;
            merged.h_eff = HermitianOperator::new(merged.h_eff.matrix() + &s.lamb_shift)?;
            match (&mut merged.dissipator, s.dissipator) {
                (Dissipator::Lindblad(a), Dissipator::Lindblad(b)) => a.extend(b),
                (Dissipator::Redfield(a), Dissipator::Redfield(b)) => a.extend(b),
                _ => unreachable!("one equation kind per merge"),
            }
        }
        Ok((merged, t_a))
    }

    /// Evolves one equation on `grid`, driven when `schedule` is given.
    pub fn run(&self, eq: &EquationConfig, t_a: Option<f64>, grid: &[f64], cfg: &IntegratorConfig, schedule: Option<&DriveSchedule>, history_cutoff: Option<f64>) -> Result<EvolutionResult> {
        if let Some(sched) = schedule {
            let a = self.single_coupling("driven evolution")?.clone();
            return Ok(match eq.kind {
                EquationName::Cgme => {
                    let t_a = t_a.or(eq.t_a).unwrap_or_else(|| self.theory_t_a());
                    let mut gen = TdCgme::new(sched.clone(), a, self.bath.clone(), t_a)?;
                    gen.lambless = eq.lambless;
                    let mut r = evolve(&gen, &self.initial, grid, cfg)?;
                    r.t_a = Some(t_a);
                    r
                }
                EquationName::Redfield => {
                    let cutoff = history_cutoff.unwrap_or(10.0 * self.timescales.tau_b);
                    let gen = TdRedfield { schedule: sched.clone(), coupling: a, bath: self.bath.clone(), history_cutoff: cutoff, order: 32 };
                    evolve(&gen, &self.initial, grid, cfg)?
                }
                _ => return Err(config_err(format!("{} does not support a drive", eq.name()))),
            });
        }
        if eq.kind == EquationName::Ore {
            let a = self.single_coupling("the ORE")?;
            return Ok(evolve_ore(&self.hamiltonian, a, &self.bath, &self.initial, grid, cfg)?);
        }
        let (gen, t_a) = self.generator(eq, t_a)?;
        Ok(evolve_generator(&gen, Some(&self.bath), t_a, &self.initial, grid, cfg)?)
    }

    /// CGME at each T_a, in parallel; results keep the input order.
    pub fn t_a_sweep(&self, eq: &EquationConfig, values: &[f64], grid: &[f64], cfg: &IntegratorConfig) -> Vec<Result<EvolutionResult>> {
        values.par_iter().map(|&t_a| self.run(eq, Some(t_a), grid, cfg, None, None)).collect()
    }
}

/// p_n(t) = ⟨n|ρ(t)|n⟩ in the eigenbasis of H.
pub fn populations(h: &HermitianOperator, res: &EvolutionResult) -> Result<Vec<Vec<f64>>> {
    let eig = eigensystem(h, None)?;
    let v: &CMat = &eig.vectors;
    Ok(res
        .states
        .iter()
        .map(|rho| {
            let r = v.adjoint() * rho * v;
            (0..r.nrows()).map(|n| r[(n, n)].re).collect()
        })
        .collect())
}

/// Index and value of the smallest finite entry.
pub fn argmin(values: &[(f64, f64)]) -> Option<(f64, f64)> {
    values.iter().copied().filter(|(_, v)| v.is_finite()).min_by(|a, b| a.1.total_cmp(&b.1))
}

pub(crate) fn numeric_err(e: CliError, context: &str) -> CliError {
    match e {
        CliError::Numeric(m) => CliError::Numeric(format!("{context}: {m}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cgme_core::evolve::uniform_grid;
    use cgme_core::models::{benchmark_bath, two_qubit_benchmark};

    fn bench() -> Setup {
        let m = two_qubit_benchmark().unwrap();
        Setup::new(m.hamiltonian, vec![m.coupling], m.initial, benchmark_bath(10.0).unwrap(), None).unwrap()
    }

    fn eq(kind: EquationName) -> EquationConfig {
        EquationConfig { kind, t_a: None, lambless: false, label: None }
    }

    #[test]
    fn populations_sum_to_one_and_start_on_eleven() {
        let s = bench();
        let grid = uniform_grid(1.0, 5).unwrap();
        let r = s.run(&eq(EquationName::Davies), None, &grid, &IntegratorConfig::default(), None, None).unwrap();
        let p = populations(&s.hamiltonian, &r).unwrap();
        for row in &p {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
        let eig = eigensystem(&s.hamiltonian, None).unwrap();
        let overlaps: Vec<f64> = (0..4).map(|n| eig.vectors[(3, n)].norm_sqr()).collect();
        for n in 0..4 {
            assert!((p[0][n] - overlaps[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_keeps_populations_constant() {
        let m = two_qubit_benchmark().unwrap();
        let s = Setup::new(m.hamiltonian, vec![HermitianOperator::zeros(4)], m.initial, benchmark_bath(10.0).unwrap(), None).unwrap();
        let grid = uniform_grid(5.0, 11).unwrap();
        for kind in [EquationName::Cgme, EquationName::Davies, EquationName::Redfield, EquationName::Ore] {
            let r = s.run(&eq(kind), None, &grid, &IntegratorConfig::default(), None, None).unwrap();
            let p = populations(&s.hamiltonian, &r).unwrap();
            for row in &p {
                for n in 0..4 {
                    assert!((row[n] - p[0][n]).abs() < 1e-8, "{kind:?}");
                }
            }
        }
    }

    #[test]
    fn two_independent_couplings_double_a_single_one() {
        let m = two_qubit_benchmark().unwrap();
        let a = m.coupling.clone();
        let one = Setup::new(m.hamiltonian.clone(), vec![a.clone()], m.initial.clone(), benchmark_bath(10.0).unwrap(), None).unwrap();
        let two = Setup::new(m.hamiltonian, vec![a.clone(), a], m.initial, benchmark_bath(10.0).unwrap(), None).unwrap();
        for kind in [EquationName::Cgme, EquationName::Davies, EquationName::Redfield] {
            let (g1, _) = one.generator(&eq(kind), Some(2.0)).unwrap();
            let (g2, _) = two.generator(&eq(kind), Some(2.0)).unwrap();
            let l1 = g1.superoperator().unwrap();
            let l2 = g2.superoperator().unwrap();
            let h = cgme_core::operator::vectorize_generator(&one.hamiltonian, &[]).unwrap();
            let diss1 = &l1.matrix - &h.matrix;
            let diss2 = &l2.matrix - &h.matrix;
            assert!((diss2 - diss1 * num_complex::Complex64::new(2.0, 0.0)).norm() < 1e-9 * (1.0 + l1.matrix.norm()), "{kind:?}");
        }
    }

    #[test]
    fn sweep_preserves_order() {
        let s = bench();
        let grid = uniform_grid(1.0, 3).unwrap();
        let vals = [0.5, 1.0, 2.0];
        let rs = s.t_a_sweep(&eq(EquationName::Cgme), &vals, &grid, &IntegratorConfig::default());
        for (r, v) in rs.iter().zip(vals) {
            assert_eq!(r.as_ref().unwrap().t_a, Some(v));
        }
    }
}
