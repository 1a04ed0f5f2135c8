//! Time-independent generators: Bohr decomposition of the coupling,
//! Redfield, Davies, and the coarse-grained master equation (frequency and
//! discretized forms), Lamb shifts, and correlated multi-coupling noise.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::{Bath, BathTimescales};
use crate::error::{invalid, numeric, Result};
use crate::operator::{
    self, c, dagger, eigh, hermitian_part, hermiticity_residual, operator_norm, vectorize_generator,
    vectorize_redfield, CMat, EigenSystem, HermitianOperator, Superoperator,
};
use crate::quad::{self, sinc, Tolerance};

/// Components A_ω = Σ_{E_m − E_n = ω} Π_n A Π_m of a coupling, sorted by ω.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDecomposition {
    pub terms: Vec<(f64, CMat)>,
    pub coupling: HermitianOperator,
    pub eigensystem: EigenSystem,
}

impl JumpDecomposition {
    pub fn dim(&self) -> usize {
        self.coupling.dim()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.terms.iter().map(|(w, _)| *w).collect()
    }

    /// H = Σ E_n Π_n.
    pub fn hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::new(hermitian_part(&self.eigensystem.reconstruct())).expect("Hermitian by construction")
    }

    /// A(t) = Σ_ω A_ω e^{−iωt}, the coupling in the interaction picture.
    pub fn interaction_picture(&self, t: f64) -> CMat {
        let d = self.dim();
        self.terms.iter().fold(CMat::zeros(d, d), |acc, (w, a)| acc + a * Complex64::cis(-w * t))
    }

    /// Whether ‖A‖ = 1 (the normalization the error bounds assume).
    pub fn is_normalized(&self) -> bool {
        operator_norm(self.coupling.matrix()).map(|n| (n - 1.0).abs() < 1e-9).unwrap_or(false)
    }

    /// Index of the term with frequency −ω.
    fn partner(&self, k: usize) -> Option<usize> {
        let w = self.terms[k].0;
        self.terms.iter().position(|(v, _)| (v + w).abs() <= self.freq_tol())
    }

    fn freq_tol(&self) -> f64 {
        default_freq_tol(&self.eigensystem)
    }
}

fn default_freq_tol(eig: &EigenSystem) -> f64 {
    let scale = eig.energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    1e-8 * scale
}

/// Groups Π_n A Π_m by Bohr frequency; components with zero norm are dropped.
pub fn decompose_coupling(eig: &EigenSystem, a: &HermitianOperator, freq_tol: Option<f64>) -> Result<JumpDecomposition> {
    let d = a.dim();
    if eig.vectors.nrows() != d {
        return Err(invalid!("coupling is {d}×{d} but the eigensystem has dimension {}", eig.vectors.nrows()));
    }
    let tol = freq_tol.unwrap_or_else(|| default_freq_tol(eig));
    let scale = operator_norm(a.matrix())?.max(f64::MIN_POSITIVE);
    let mut terms: Vec<(f64, CMat)> = Vec::new();
    for (m, pm) in eig.projectors.iter().enumerate() {
        for (n, pn) in eig.projectors.iter().enumerate() {
            let block = pn * a.matrix() * pm;
            if block.norm() <= 1e-14 * scale {
                continue;
            }
            let w = eig.energies[m] - eig.energies[n];
            match terms.iter_mut().find(|(v, _)| (*v - w).abs() <= tol) {
                Some((_, acc)) => *acc += block,
                None => terms.push((w, block)),
            }
        }
    }
    terms.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(JumpDecomposition { terms, coupling: a.clone(), eigensystem: eig.clone() })
}

/// Which master equation a [`GeneratorSet`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationKind {
    Redfield,
    Davies,
    CgmeFrequency,
    CgmeDiscrete,
    Ore,
}

/// Frequency grid εₖ = kΔε, |k| < k*, replacing the continuous ε integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub delta_eps: f64,
    pub k_star: usize,
}

impl Discretization {
    pub fn new(delta_eps: f64, k_star: usize) -> Result<Self> {
        if !(delta_eps > 0.0 && delta_eps.is_finite()) || k_star == 0 {
            return Err(invalid!("discretization needs Δε > 0 and k* ≥ 1"));
        }
        Ok(Self { delta_eps, k_star })
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let k = self.k_star as i64;
        (1 - k..k).map(move |j| j as f64 * self.delta_eps)
    }
}

/// Grid and coarse-graining time that guarantee the discretization error
/// stays below √(τ_B/τ_SB)/τ_SB, with T_a = √(τ_Bτ_SB/5).
pub fn discretization_params(ts: &BathTimescales, commutator_norm: f64) -> Result<(f64, Discretization)> {
    if !(ts.tau_b > 0.0) {
        return Err(invalid!("τ_B = 0: the discretization is undefined"));
    }
    if !(commutator_norm >= 0.0) {
        return Err(invalid!("‖[H, A]‖ must be ≥ 0"));
    }
    let (tb, tsb) = (ts.tau_b, ts.tau_sb);
    let t_a = libm::sqrt(tb * tsb / 5.0);
    let g = 2.0 + commutator_norm * t_a;
    let c = 10.0 * libm::sqrt(2.0 / 5.0) + 1.0;
    let ratio = libm::sqrt(tb / tsb);
    let delta_eps = ratio / tsb / (g * g) * libm::sqrt(5.0) * PI * PI / (2.0 * c);
    let k_star = libm::ceil(libm::pow(1.0 / ratio, 3.0) * libm::pow(g, 4.0) * 4.0 * c / (PI * PI * PI) + 0.5);
    if !(k_star < 1e8) {
        return Err(invalid!("k* = {k_star:.3e} is impractically large"));
    }
    Ok((t_a, Discretization::new(delta_eps, k_star as usize)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub kind: EquationKind,
    /// Coarse-graining time (CGME only).
    pub t_a: Option<f64>,
    pub lambless: bool,
    pub discretization: Option<Discretization>,
}

impl GeneratorConfig {
    pub fn new(kind: EquationKind) -> Self {
        Self { kind, t_a: None, lambless: false, discretization: None }
    }

    pub fn cgme(t_a: f64) -> Self {
        Self { t_a: Some(t_a), ..Self::new(EquationKind::CgmeFrequency) }
    }

    pub fn lambless(mut self) -> Self {
        self.lambless = true;
        self
    }

    fn coarse_graining_time(&self) -> Result<f64> {
        match self.t_a {
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(invalid!("T_a must be positive, got {t}")),
            None => Err(invalid!("{:?} requires T_a", self.kind)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dissipator {
    /// Σ w(LρL† − ½{ρ, L†L}), w ≥ 0.
    Lindblad(Vec<(f64, CMat)>),
    /// Σ (AρA_f − ρA_fA + h.c.).
    Redfield(Vec<(CMat, CMat)>),
}

/// H + H_LS together with a dissipator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    pub kind: EquationKind,
    pub h_eff: HermitianOperator,
    pub lamb_shift: CMat,
    pub dissipator: Dissipator,
}

impl GeneratorSet {
    pub fn dim(&self) -> usize {
        self.h_eff.dim()
    }

    pub fn is_lindblad(&self) -> bool {
        matches!(self.dissipator, Dissipator::Lindblad(_))
    }

    pub fn superoperator(&self) -> Result<Superoperator> {
        match &self.dissipator {
            Dissipator::Lindblad(ops) => vectorize_generator(&self.h_eff, ops),
            Dissipator::Redfield(pairs) => vectorize_redfield(&self.h_eff, pairs),
        }
    }

    /// 𝓛(ρ) evaluated directly, without vectorization.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let h = self.h_eff.matrix();
        let mut out = (h * rho - rho * h) * c(0.0, -1.0);
        match &self.dissipator {
            Dissipator::Lindblad(ops) => {
                for (w, l) in ops {
                    let ld = l.adjoint();
                    let ldl = &ld * l;
                    out += (l * rho * &ld - (rho * &ldl + &ldl * rho) * c(0.5, 0.0)) * c(*w, 0.0);
                }
            }
            Dissipator::Redfield(pairs) => {
                for (a, af) in pairs {
                    let term = a * rho * af - rho * af * a;
                    out += &term + term.adjoint();
                }
            }
        }
        out
    }
}

fn checked_lamb(h: &HermitianOperator, lamb: CMat, what: &str) -> Result<(HermitianOperator, CMat)> {
    let residual = hermiticity_residual(&lamb);
    if residual > 1e-9 {
        return Err(numeric!("{what} Lamb shift is not Hermitian (residual {residual:.2e})"));
    }
    let lamb = hermitian_part(&lamb);
    Ok((HermitianOperator::new(h.matrix() + &lamb)?, lamb))
}

/// A_f = Σ_ω f*(−ω)A_ω; the Lambless variant drops S and uses ½γ(−ω).
pub fn redfield_filtered(jd: &JumpDecomposition, bath: &Bath, lambless: bool) -> Result<CMat> {
    let d = jd.dim();
    let mut af = CMat::zeros(d, d);
    for (w, a) in &jd.terms {
        let coef = if lambless {
            c(0.5 * bath.gamma(-w), 0.0)
        } else {
            bath.half_fourier(-w)?.conj()
        };
        af += a * coef;
    }
    Ok(af)
}

pub fn redfield_generator(jd: &JumpDecomposition, bath: &Bath, lambless: bool) -> Result<GeneratorSet> {
    let af = redfield_filtered(jd, bath, lambless)?;
    let d = jd.dim();
    Ok(GeneratorSet {
        kind: EquationKind::Redfield,
        h_eff: jd.hamiltonian(),
        lamb_shift: CMat::zeros(d, d),
        dissipator: Dissipator::Redfield(alloc::vec![(jd.coupling.matrix().clone(), af)]),
    })
}

/// One jump per Bohr frequency with rate γ(ω); H_LS = Σ_ω S(ω)A_ω†A_ω.
pub fn davies_generator(jd: &JumpDecomposition, bath: &Bath, lambless: bool) -> Result<GeneratorSet> {
    if !bath.is_positive() {
        return Err(invalid!("Davies generator needs γ(ω) ≥ 0"));
    }
    let d = jd.dim();
    let mut lamb = CMat::zeros(d, d);
    let mut ops = Vec::with_capacity(jd.terms.len());
    for (w, a) in &jd.terms {
        ops.push((bath.gamma(*w), a.clone()));
        if !lambless {
            lamb += a.adjoint() * a * c(bath.lamb_amplitude_s(*w)?, 0.0);
        }
    }
    let (h_eff, lamb_shift) = checked_lamb(&jd.hamiltonian(), lamb, "Davies")?;
    Ok(GeneratorSet { kind: EquationKind::Davies, h_eff, lamb_shift, dissipator: Dissipator::Lindblad(ops) })
}

fn coefficient_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-11).with_max_intervals(200_000)
}

fn require_ta(t_a: f64) -> Result<()> {
    if t_a > 0.0 && t_a.is_finite() {
        Ok(())
    } else {
        Err(invalid!("T_a must be positive and finite, got {t_a}"))
    }
}

/// Breakpoints on [−T_a, T_a] (or a sub-range) at C's kinks, at 0, and
/// every half oscillation period of the fastest phase.
fn time_breaks(bath: &Bath, lo: f64, hi: f64, fastest: f64) -> Vec<f64> {
    let mut cuts = alloc::vec![0.0];
    for k in bath.correlation_breaks() {
        cuts.push(k);
        cuts.push(-k);
    }
    quad::panel_breaks(lo, hi, &cuts, PI / fastest.max(1e-300))
}

/// Σ over s of the square-domain kernel, restricted to [s_lo, s_hi] ⊂ [−T_a, T_a]:
/// (1/T_a)∫ds C(s)e^{−iω′s}e^{iΩs/2}(T_a−|s|)sinc(Ω(T_a−|s|)/2), Ω = ω+ω′.
fn square_kernel(bath: &Bath, w: f64, wp: f64, t_a: f64, s_lo: f64, s_hi: f64) -> Result<Complex64> {
    let big = w + wp;
    let fastest = w.abs().max(wp.abs()).max(2.0 * PI / t_a).max(bath.frequency_scale());
    let breaks = time_breaks(bath, s_lo, s_hi, fastest);
    let mut failure = None;
    let est = quad::adaptive(
        |s: f64| {
            let cs = match bath.correlation(s) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return Complex64::new(0.0, 0.0);
                }
            };
            let len = t_a - s.abs();
            cs * Complex64::cis(-wp * s + 0.5 * big * s) * (len * sinc(0.5 * big * len))
        },
        &breaks,
        coefficient_tol(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value / t_a)
}

/// x_{ωω′}: the half (s < 0) of the coarse-grained correlation double integral.
pub fn cgme_x(w: f64, wp: f64, t_a: f64, bath: &Bath) -> Result<Complex64> {
    require_ta(t_a)?;
    square_kernel(bath, w, wp, t_a, -t_a, 0.0)
}

/// γ_{ωω′} by the time-domain (square-window) double integral.
pub fn cgme_gamma_direct(w: f64, wp: f64, t_a: f64, bath: &Bath) -> Result<Complex64> {
    require_ta(t_a)?;
    square_kernel(bath, w, wp, t_a, -t_a, t_a)
}

/// f(ε, ω) = √(γ(ε)T_a/2π)·sinc(T_a(ε−ω)/2).
pub fn filter(bath: &Bath, eps: f64, w: f64, t_a: f64) -> f64 {
    libm::sqrt(bath.gamma(eps).max(0.0) * t_a / (2.0 * PI)) * sinc(0.5 * t_a * (eps - w))
}

/// ∫dε γ(ε)(T_a/2π)sinc(T_a(ε−ω)/2)sinc(T_a(ε−ν)/2): the Kossakowski entry
/// pairing A_ω with A_ν†.
fn kossakowski_entry(bath: &Bath, w: f64, nu: f64, t_a: f64) -> Result<f64> {
    let Some((lo, hi)) = bath.frequency_window() else {
        return Ok(cgme_gamma_direct(w, -nu, t_a, bath)?.re);
    };
    let breaks = quad::panel_breaks(lo, hi, &[0.0, w, nu], 2.0 * PI / t_a);
    let est = quad::adaptive(
        |e: f64| bath.gamma(e) * sinc(0.5 * t_a * (e - w)) * sinc(0.5 * t_a * (e - nu)),
        &breaks,
        coefficient_tol(),
    )?;
    Ok(est.value * t_a / (2.0 * PI))
}

/// γ_{ωω′} = ∫dε f(ε,ω)f*(ε,−ω′), the filter-function form.
pub fn cgme_gamma(w: f64, wp: f64, t_a: f64, bath: &Bath) -> Result<Complex64> {
    require_ta(t_a)?;
    Ok(c(kossakowski_entry(bath, w, -wp, t_a)?, 0.0))
}

/// F_{ω₁ω₂} = (1/T_a)∫₀^{T_a}(T_a−θ)sinc(ω₊(T_a−θ))·Im[e^{iω₋θ}C(θ)]dθ with
/// ω± = (ω₁ ± ω₂)/2; H_LS = Σ F_{ω₁ω₂}A_{ω₂}A_{ω₁}. This form is regular at
/// ω₊ = 0.
pub fn cgme_lamb_f(w1: f64, w2: f64, t_a: f64, bath: &Bath) -> Result<f64> {
    require_ta(t_a)?;
    let (wp, wm) = (0.5 * (w1 + w2), 0.5 * (w1 - w2));
    let fastest = wp.abs().max(wm.abs()).max(2.0 * PI / t_a).max(bath.frequency_scale());
    let breaks = time_breaks(bath, 0.0, t_a, fastest);
    let mut failure = None;
    let est = quad::adaptive(
        |th: f64| {
            let cth = match bath.correlation(th) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            };
            let len = t_a - th;
            len * sinc(wp * len) * (Complex64::cis(wm * th) * cth).im
        },
        &breaks,
        coefficient_tol(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value / t_a)
}

/// A_ε = Σ_ω f(ε,ω)A_ω.
pub fn cgme_a_epsilon(jd: &JumpDecomposition, eps: f64, t_a: f64, bath: &Bath) -> Result<CMat> {
    require_ta(t_a)?;
    if bath.gamma(eps) < 0.0 {
        return Err(invalid!("γ({eps}) < 0: A_ε undefined"));
    }
    let d = jd.dim();
    Ok(jd.terms.iter().fold(CMat::zeros(d, d), |acc, (w, a)| acc + a * c(filter(bath, eps, *w, t_a), 0.0)))
}

/// Kossakowski matrix K_{ων} = γ_{ω,−ν} over the decomposition's frequencies.
pub fn kossakowski_matrix(jd: &JumpDecomposition, t_a: f64, bath: &Bath) -> Result<CMat> {
    require_ta(t_a)?;
    let ws = jd.frequencies();
    let n = ws.len();
    let mut k = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kossakowski_entry(bath, ws[i], ws[j], t_a)?;
            k[(i, j)] = c(v, 0.0);
            k[(j, i)] = c(v, 0.0);
        }
    }
    Ok(k)
}

/// Lamb shift Σ F_{ωω′}A_{ω′}A_ω over all ordered Bohr pairs.
pub fn cgme_lamb_shift(jd: &JumpDecomposition, t_a: f64, bath: &Bath) -> Result<CMat> {
    let d = jd.dim();
    let mut h = CMat::zeros(d, d);
    for (w1, a1) in &jd.terms {
        for (w2, a2) in &jd.terms {
            let prod = a2 * a1;
            if prod.norm() == 0.0 {
                continue;
            }
            h += prod * c(cgme_lamb_f(*w1, *w2, t_a, bath)?, 0.0);
        }
    }
    Ok(h)
}

/// Negative eigenvalues above this are roundoff; below, a positivity bug.
pub const WEIGHT_CLIP: f64 = 1e-9;

/// Diagonalizes a Kossakowski matrix over operators `ops` into Lindblad
/// terms Σ_k λ_k(L_kρL_k† − …), L_k = Σ_i v_k(i)·ops_i.
pub fn diagonalize_kossakowski(k: &CMat, ops: &[&CMat]) -> Result<Vec<(f64, CMat)>> {
    if k.nrows() != ops.len() {
        return Err(invalid!("Kossakowski matrix is {}×{} for {} operators", k.nrows(), k.ncols(), ops.len()));
    }
    let Some(d) = ops.first().map(|o| o.nrows()) else {
        return Ok(Vec::new());
    };
    let (vals, vecs) = eigh(&hermitian_part(k))?;
    let mut out = Vec::new();
    for (idx, lam) in vals.iter().enumerate() {
        if *lam < -WEIGHT_CLIP {
            return Err(numeric!("Kossakowski matrix has eigenvalue {lam:.3e} < −{WEIGHT_CLIP:e}: positivity violated"));
        }
        if *lam <= 0.0 {
            continue;
        }
        let l = ops.iter().enumerate().fold(CMat::zeros(d, d), |acc, (i, o)| acc + *o * vecs[(i, idx)]);
        out.push((*lam, l));
    }
    Ok(out)
}

/// CGME generator in frequency (Kossakowski) or discretized form.
pub fn cgme_generator(jd: &JumpDecomposition, bath: &Bath, config: &GeneratorConfig) -> Result<GeneratorSet> {
    let t_a = config.coarse_graining_time()?;
    if !bath.is_positive() {
        return Err(invalid!("CGME needs γ(ω) ≥ 0; this bath is not CP-admissible"));
    }
    let ops = match config.kind {
        EquationKind::CgmeFrequency => {
            let k = kossakowski_matrix(jd, t_a, bath)?;
            let refs: Vec<&CMat> = jd.terms.iter().map(|(_, a)| a).collect();
            diagonalize_kossakowski(&k, &refs)?
        }
        EquationKind::CgmeDiscrete => {
            let disc = config.discretization.ok_or_else(|| invalid!("discrete CGME needs (Δε, k*)"))?;
            disc.points()
                .map(|e| cgme_a_epsilon(jd, e, t_a, bath).map(|a| (disc.delta_eps, a)))
                .collect::<Result<Vec<_>>>()?
        }
        other => return Err(invalid!("cgme_generator cannot build {other:?}")),
    };
    let d = jd.dim();
    let lamb = if config.lambless { CMat::zeros(d, d) } else { cgme_lamb_shift(jd, t_a, bath)? };
    let (h_eff, lamb_shift) = checked_lamb(&jd.hamiltonian(), lamb, "CGME")?;
    Ok(GeneratorSet { kind: config.kind, h_eff, lamb_shift, dissipator: Dissipator::Lindblad(ops) })
}

/// Dispatches on `config.kind` (ORE is time-dependent and lives in `evolve`).
pub fn build_generator(jd: &JumpDecomposition, bath: &Bath, config: &GeneratorConfig) -> Result<GeneratorSet> {
    match config.kind {
        EquationKind::Redfield => redfield_generator(jd, bath, config.lambless),
        EquationKind::Davies => davies_generator(jd, bath, config.lambless),
        EquationKind::CgmeFrequency | EquationKind::CgmeDiscrete => cgme_generator(jd, bath, config),
        EquationKind::Ore => Err(invalid!("the ORE is time-dependent; use evolve::evolve_ore")),
    }
}

/// Correlated noise γ_ij(ω) = Σ_r M⁽ʳ⁾_ij γ_r(ω): each bath r enters with a
/// real symmetric PSD mixing matrix over the couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedBaths {
    pub components: Vec<(Bath, nalgebra::DMatrix<f64>)>,
}

impl CorrelatedBaths {
    pub fn new(components: Vec<(Bath, nalgebra::DMatrix<f64>)>) -> Result<Self> {
        let Some(n) = components.first().map(|(_, m)| m.nrows()) else {
            return Err(invalid!("no bath components"));
        };
        for (bath, m) in &components {
            if m.shape() != (n, n) {
                return Err(invalid!("mixing matrices must all be {n}×{n}"));
            }
            if (m - m.transpose()).abs().max() > 1e-12 * (1.0 + m.abs().max()) {
                return Err(invalid!("mixing matrix is not symmetric"));
            }
            let min = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.min();
            if min < -1e-12 * (1.0 + m.abs().max()) {
                return Err(invalid!("mixing matrix is not PSD (eigenvalue {min:.3e})"));
            }
            if !bath.is_positive() {
                return Err(invalid!("correlated noise needs γ(ω) ≥ 0 components"));
            }
        }
        Ok(Self { components })
    }

    pub fn couplings(&self) -> usize {
        self.components[0].1.nrows()
    }

    /// γ_ij(ε).
    pub fn gamma_matrix(&self, eps: f64) -> nalgebra::DMatrix<f64> {
        let n = self.couplings();
        self.components.iter().fold(nalgebra::DMatrix::zeros(n, n), |acc, (b, m)| acc + m * b.gamma(eps))
    }

    /// Eigenmodes (D_μ, U_μ·) of γ_ij(ε), ascending.
    pub fn modes(&self, eps: f64) -> Vec<(f64, Vec<f64>)> {
        let eig = nalgebra::SymmetricEigen::new(self.gamma_matrix(eps));
        let mut out: Vec<(f64, Vec<f64>)> = (0..eig.eigenvalues.len())
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

/// CGME for several couplings A_i sharing H, with correlated noise. The
/// Kossakowski matrix runs over (coupling, Bohr frequency) pairs.
pub fn multi_coupling_generator(
    jds: &[JumpDecomposition],
    baths: &CorrelatedBaths,
    config: &GeneratorConfig,
) -> Result<GeneratorSet> {
    if config.kind != EquationKind::CgmeFrequency {
        return Err(invalid!("multi-coupling generator supports the frequency-form CGME only"));
    }
    if jds.len() != baths.couplings() {
        return Err(invalid!("{} couplings but mixing matrices are {}×{}", jds.len(), baths.couplings(), baths.couplings()));
    }
    let t_a = config.coarse_graining_time()?;
    let first = jds.first().ok_or_else(|| invalid!("no couplings"))?;
    let d = first.dim();
    let index: Vec<(usize, usize)> =
        jds.iter().enumerate().flat_map(|(i, jd)| (0..jd.terms.len()).map(move |k| (i, k))).collect();
    let n = index.len();
    let mut kmat = CMat::zeros(n, n);
    let mut lamb = CMat::zeros(d, d);
    for (bath, mix) in &baths.components {
        for p in 0..n {
            let (i, a) = index[p];
            for q in p..n {
                let (j, b) = index[q];
                let m = mix[(i, j)];
                if m == 0.0 {
                    continue;
                }
                let v = m * kossakowski_entry(bath, jds[i].terms[a].0, jds[j].terms[b].0, t_a)?;
                kmat[(p, q)] += c(v, 0.0);
                if p != q {
                    kmat[(q, p)] += c(v, 0.0);
                }
            }
        }
        if config.lambless {
            continue;
        }
        for (i, jdi) in jds.iter().enumerate() {
            for (j, jdj) in jds.iter().enumerate() {
                let m = mix[(i, j)];
                if m == 0.0 {
                    continue;
                }
                for (w1, a1) in &jdi.terms {
                    for (w2, a2) in &jdj.terms {
                        let prod = a2 * a1;
                        if prod.norm() == 0.0 {
                            continue;
                        }
                        lamb += prod * c(m * cgme_lamb_f(*w1, *w2, t_a, bath)?, 0.0);
                    }
                }
            }
        }
    }
    let refs: Vec<&CMat> = index.iter().map(|&(i, k)| &jds[i].terms[k].1).collect();
    let ops = diagonalize_kossakowski(&kmat, &refs)?;
    let (h_eff, lamb_shift) = checked_lamb(&first.hamiltonian(), lamb, "multi-coupling CGME")?;
    Ok(GeneratorSet { kind: EquationKind::CgmeFrequency, h_eff, lamb_shift, dissipator: Dissipator::Lindblad(ops) })
}

/// ‖[H, A]‖ for the discretization recipe.
pub fn commutator_norm(h: &HermitianOperator, a: &HermitianOperator) -> Result<f64> {
    operator_norm(&operator::commutator(h.matrix(), a.matrix()))
}

/// Checks A_{−ω} = A_ω† for every term.
pub fn conjugate_pairs_consistent(jd: &JumpDecomposition) -> bool {
    (0..jd.terms.len()).all(|k| match jd.partner(k) {
        Some(p) => (&jd.terms[p].1 - dagger(&jd.terms[k].1)).norm() <= 1e-12 * (1.0 + jd.terms[k].1.norm()),
        None => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{benchmark_bath, random_model, two_qubit_benchmark};
    use crate::operator::{eigensystem, pauli, trace, unitary_evolution};
    use crate::quad::GaussLegendre;

    fn decompose(h: &HermitianOperator, a: &HermitianOperator) -> JumpDecomposition {
        decompose_coupling(&eigensystem(h, None).unwrap(), a, None).unwrap()
    }

    fn benchmark() -> JumpDecomposition {
        let m = two_qubit_benchmark().unwrap();
        decompose(&m.hamiltonian, &m.coupling)
    }

    fn herm(label: char) -> HermitianOperator {
        HermitianOperator::new(pauli(label).unwrap()).unwrap()
    }

    #[test]
    fn decomposition_of_null_and_pauli_hamiltonians() {
        let jd = decompose(&HermitianOperator::zeros(2), &herm('X'));
        assert_eq!(jd.terms.len(), 1);
        assert_eq!(jd.terms[0].0, 0.0);
        let jd = decompose(&herm('Z'), &herm('X'));
        assert_eq!(jd.frequencies(), alloc::vec![-2.0, 2.0]);
        // ω = +2 lowers the energy: |1⟩⟨0| in the Z basis (|0⟩ has E = +1).
        assert!((jd.terms[1].1[(1, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(conjugate_pairs_consistent(&jd));
    }

    #[test]
    fn benchmark_decomposition_matches_projector_sandwich() {
        let m = two_qubit_benchmark().unwrap();
        let jd = benchmark();
        let (e, v) = eigh(m.hamiltonian.matrix()).unwrap();
        let a = m.coupling.matrix();
        for (w, aw) in &jd.terms {
            let mut oracle = CMat::zeros(4, 4);
            for mm in 0..4 {
                for n in 0..4 {
                    if (e[mm] - e[n] - w).abs() < 1e-9 {
                        let (vm, vn) = (v.column(mm), v.column(n));
                        let amp = (vn.adjoint() * a * vm)[(0, 0)];
                        oracle += vn * vm.adjoint() * amp;
                    }
                }
            }
            assert!((aw - oracle).norm() < 1e-12);
        }
        let sum = jd.terms.iter().fold(CMat::zeros(4, 4), |acc, (_, x)| acc + x);
        assert!((sum - a).norm() < 1e-12);
        assert!(conjugate_pairs_consistent(&jd));
        let t = 0.37;
        let u = unitary_evolution(m.hamiltonian.matrix(), t).unwrap();
        let direct = u.adjoint() * a * &u;
        assert!((jd.interaction_picture(t) - direct).norm() < 1e-12);
        assert!(jd.is_normalized());
    }

    #[test]
    fn redfield_filter_single_frequency() {
        let bath = benchmark_bath(10.0).unwrap();
        let jd = decompose(&HermitianOperator::zeros(2), &herm('Z'));
        let af = redfield_filtered(&jd, &bath, false).unwrap();
        let f0 = bath.half_fourier(0.0).unwrap().conj();
        assert!((af - pauli('Z').unwrap() * f0).norm() < 1e-14);
        let lambless = redfield_filtered(&benchmark(), &bath, true).unwrap();
        let oracle = benchmark().terms.iter().fold(CMat::zeros(4, 4), |acc, (w, a)| {
            acc + a * c(0.5 * libm::exp(-4.0 * w) * bath.gamma(*w), 0.0)
        });
        assert!((lambless - oracle).norm() < 1e-12);
    }

    #[test]
    fn davies_spectrum_and_detailed_balance() {
        let bath = benchmark_bath(10.0).unwrap();
        let jd = benchmark();
        let g = davies_generator(&jd, &bath, false).unwrap();
        let Dissipator::Lindblad(ops) = &g.dissipator else { panic!() };
        for (k, (w, _)) in jd.terms.iter().enumerate() {
            let rate = ops[k].0;
            let partner = ops[jd.partner(k).unwrap()].0;
            let expect = libm::exp(-4.0 * w) * rate;
            assert!((partner - expect).abs() <= 1e-10 * expect, "ω={w}: {partner} vs {expect}");
        }
        let sup = g.superoperator().unwrap();
        let eig = nalgebra::Schur::new(sup.matrix.clone()).eigenvalues().unwrap();
        assert!(eig.iter().all(|z| z.re <= 1e-10));
        let rho = crate::models::random_model(2, 3).unwrap().initial.into_matrix();
        assert!((sup.apply(&rho) - g.apply(&rho)).norm() < 1e-12);
    }

    #[test]
    fn davies_lamb_shift_is_long_window_limit_of_cgme() {
        let bath = benchmark_bath(10.0).unwrap();
        let jd = benchmark();
        let davies = davies_generator(&jd, &bath, false).unwrap().lamb_shift;
        let errs: Vec<f64> = [25.0, 100.0, 400.0]
            .iter()
            .map(|&t_a| (cgme_lamb_shift(&jd, t_a, &bath).unwrap() - &davies).norm())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 0.05 * davies.norm(), "{errs:?} vs {}", davies.norm());
    }

    /// x by nested Gauss–Legendre on the triangle t₁ < t₂ of the centered window.
    fn x_oracle(bath: &Bath, w: f64, wp: f64, t_a: f64) -> Complex64 {
        let gl = GaussLegendre::new(40).unwrap();
        let h = 0.5 * t_a;
        let mut acc = Complex64::new(0.0, 0.0);
        for (t2, w2) in gl.panel(-h, h) {
            for (t1, w1) in gl.panel(-h, t2) {
                acc += bath.correlation(t1 - t2).unwrap() * Complex64::cis(-wp * t1 - w * t2) * (w1 * w2);
            }
        }
        acc / t_a
    }

    #[test]
    fn x_coefficient_matches_triangle_quadrature_and_symmetries() {
        let bath = benchmark_bath(10.0).unwrap();
        let x = cgme_x(1.0, 1.0, 0.97, &bath).unwrap();
        assert!((x - x_oracle(&bath, 1.0, 1.0, 0.97)).norm() < 1e-7);
        for (w, wp, t_a) in [(0.3, -1.7, 1.2), (2.1, 0.4, 2.5), (-0.9, -0.2, 0.6)] {
            let x = cgme_x(w, wp, t_a, &bath).unwrap();
            assert!((x - cgme_x(-wp, -w, t_a, &bath).unwrap()).norm() < 1e-8);
            let g = cgme_gamma_direct(w, wp, t_a, &bath).unwrap();
            assert!((g.re - 2.0 * x.re).abs() < 1e-8, "{g} vs {x}");
        }
    }

    #[test]
    fn filter_form_agrees_with_square_window() {
        let bath = benchmark_bath(10.0).unwrap();
        let mut state = 7u64;
        let mut unif = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let (w, wp, t_a) = (4.0 * unif() - 2.0, 4.0 * unif() - 2.0, 0.3 + 3.0 * unif());
            let eps = cgme_gamma(w, wp, t_a, &bath).unwrap();
            let sq = cgme_gamma_direct(w, wp, t_a, &bath).unwrap();
            assert!((eps - sq).norm() < 1e-7, "({w}, {wp}, {t_a}): {eps} vs {sq}");
        }
    }

    #[test]
    fn long_windows_recover_the_spectral_density() {
        let bath = benchmark_bath(10.0).unwrap();
        let tb = 0.69;
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for t_a in [10.0 * tb, 100.0 * tb] {
            let diag = (cgme_gamma(1.0, -1.0, t_a, &bath).unwrap().re - bath.gamma(1.0)).abs();
            let off = cgme_gamma(1.0, 0.5, t_a, &bath).unwrap().norm();
            assert!(diag < prev.0 && off < prev.1);
            prev = (diag, off);
        }
        assert!(prev.0 < 0.02 * bath.gamma(1.0));
    }

    #[test]
    fn lamb_f_symmetry_and_removable_point() {
        let bath = benchmark_bath(10.0).unwrap();
        for (w1, w2, t_a) in [(0.4, 1.3, 1.0), (-2.0, 0.7, 2.2)] {
            let f = cgme_lamb_f(w1, w2, t_a, &bath).unwrap();
            assert!((f - cgme_lamb_f(-w2, -w1, t_a, &bath).unwrap()).abs() < 1e-8);
            // Unrewritten form: (1/2T_aω₊) Re∫₀^{T_a}(e^{i(ω₁θ−T_aω₊)} − e^{−i(ω₂θ−T_aω₊)})C(θ)dθ.
            let wp = 0.5 * (w1 + w2);
            let gl = GaussLegendre::new(120).unwrap();
            let raw = gl.integrate(
                |th| {
                    ((Complex64::cis(w1 * th - t_a * wp) - Complex64::cis(-(w2 * th - t_a * wp)))
                        * bath.correlation(th).unwrap())
                    .re
                },
                0.0,
                t_a,
            ) / (2.0 * t_a * wp);
            assert!((f - raw).abs() < 1e-9, "{f} vs {raw}");
        }
        let at = cgme_lamb_f(1.0, -1.0, 1.5, &bath).unwrap();
        let near = cgme_lamb_f(1.0 + 1e-6, -1.0 + 1e-6, 1.5, &bath).unwrap();
        assert!((at - near).abs() < 1e-5);
    }

    #[test]
    fn lamb_shift_matches_ordered_kernel_quadrature() {
        let bath = benchmark_bath(10.0).unwrap();
        let m = two_qubit_benchmark().unwrap();
        let jd = benchmark();
        let t_a = 0.97;
        let hls = cgme_lamb_shift(&jd, t_a, &bath).unwrap();
        assert!(hermiticity_residual(&hls) < 1e-10);
        let gl = GaussLegendre::new(48).unwrap();
        let at = |t: f64| {
            let u = unitary_evolution(m.hamiltonian.matrix(), t).unwrap();
            u.adjoint() * m.coupling.matrix() * u
        };
        let h = 0.5 * t_a;
        let mut x = CMat::zeros(4, 4);
        for (t1, w1) in gl.panel(-h, h) {
            let a1 = at(t1);
            for (t2, w2) in gl.panel(-h, t1) {
                x += at(t2) * &a1 * (bath.correlation(t2 - t1).unwrap() * (w1 * w2));
            }
        }
        let oracle = (&x - x.adjoint()) * c(0.0, 0.5 / t_a);
        assert!((hls - oracle).norm() < 1e-6);
    }

    #[test]
    fn a_epsilon_forms() {
        let bath = benchmark_bath(10.0).unwrap();
        let jd = decompose(&HermitianOperator::zeros(2), &herm('Z'));
        let (eps, t_a) = (0.8, 1.3);
        let ae = cgme_a_epsilon(&jd, eps, t_a, &bath).unwrap();
        let expect = libm::sqrt(bath.gamma(eps) * t_a / (2.0 * PI)) * sinc(t_a * eps / 2.0);
        assert!((ae - pauli('Z').unwrap() * c(expect, 0.0)).norm() < 1e-14);

        let m = two_qubit_benchmark().unwrap();
        let jd = benchmark();
        let (eps, t_a) = (2.0, 0.97);
        let gl = GaussLegendre::new(40).unwrap();
        let mut acc = CMat::zeros(4, 4);
        for (t, w) in gl.panel(-t_a / 2.0, t_a / 2.0) {
            let u = unitary_evolution(m.hamiltonian.matrix(), t).unwrap();
            acc += u.adjoint() * m.coupling.matrix() * u * (Complex64::cis(eps * t) * w);
        }
        let oracle = acc * c(libm::sqrt(bath.gamma(eps) / (2.0 * PI * t_a)), 0.0);
        assert!((cgme_a_epsilon(&jd, eps, t_a, &bath).unwrap() - oracle).norm() < 1e-8);
    }

    #[test]
    fn discretization_recipe() {
        let ts = BathTimescales { tau_sb: 1.0, tau_b: 0.1, t_cutoff: f64::INFINITY, epsilon_t: 0.0 };
        let (t_a, d) = discretization_params(&ts, 2.0).unwrap();
        assert!((t_a - 0.141_421_356_237_309_5).abs() < 1e-15);
        assert!((d.delta_eps - 0.091_415_851_533_178_43).abs() < 1e-14);
        assert_eq!(d.k_star, 813);
        assert_eq!(d.points().count(), 2 * 813 - 1);
        let (_, d0) = discretization_params(&ts, 0.0).unwrap();
        assert!(d0.delta_eps > d.delta_eps && d0.k_star < d.k_star);
        let slow = BathTimescales { tau_b: 0.025, ..ts };
        let (_, d1) = discretization_params(&slow, 0.0).unwrap();
        let growth = d1.k_star as f64 / d0.k_star as f64;
        assert!((growth - 8.0).abs() < 0.1, "k* ∝ (τ_SB/τ_B)^1.5: ratio {growth}");
        assert!(discretization_params(&BathTimescales { tau_b: 0.0, ..ts }, 1.0).is_err());
    }

    #[test]
    fn pure_dephasing_rate() {
        let bath = benchmark_bath(10.0).unwrap();
        let jd = decompose(&HermitianOperator::zeros(2), &herm('Z'));
        let t_a = 1.1;
        let g = cgme_generator(&jd, &bath, &GeneratorConfig::cgme(t_a)).unwrap();
        let (lo, hi) = bath.frequency_window().unwrap();
        let r = quad::adaptive(
            |e| bath.gamma(e) * t_a / (2.0 * PI) * sinc(t_a * e / 2.0).powi(2),
            &[lo, 0.0, hi],
            Tolerance::new(1e-14, 1e-12),
        )
        .unwrap()
        .value;
        let rho = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let d = g.apply(&rho);
        // Off-diagonal decays at 2r; the Lamb shift ∝ Z² = 1 drops out.
        assert!((d[(0, 1)].re + 2.0 * r * 0.5).abs() < 1e-10, "{} vs {}", d[(0, 1)], -r);
        assert!(d[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn generators_preserve_trace_hermiticity_and_cp() {
        let bath = benchmark_bath(10.0).unwrap();
        for seed in 0..4 {
            let m = random_model(1 + (seed as u32 % 2), seed).unwrap();
            let jd = decompose(&m.hamiltonian, &m.coupling);
            let d = jd.dim();
            let rho = crate::models::random_hermitian(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed + 100), d);
            for cfg in [
                GeneratorConfig::new(EquationKind::Redfield),
                GeneratorConfig::new(EquationKind::Davies),
                GeneratorConfig::cgme(1.0),
                GeneratorConfig::cgme(2.5).lambless(),
            ] {
                let g = build_generator(&jd, &bath, &cfg).unwrap();
                let out = g.apply(&rho);
                assert!(trace(&out).norm() < 1e-12);
                assert!(hermiticity_residual(&out) < 1e-12);
                if g.is_lindblad() {
                    let sup = g.superoperator().unwrap();
                    for dt in [1e-3, 1e-4] {
                        assert!(sup.step_choi_min_eigenvalue(dt).unwrap() >= -10.0 * dt * dt);
                    }
                }
            }
        }
    }

    #[test]
    fn kossakowski_is_psd_on_benchmark() {
        let bath = benchmark_bath(10.0).unwrap();
        let k = kossakowski_matrix(&benchmark(), 0.97, &bath).unwrap();
        assert!(crate::operator::min_eigenvalue(&k).unwrap() > -1e-9);
    }

    fn two_qubit_pair() -> (HermitianOperator, [HermitianOperator; 2]) {
        let h = HermitianOperator::from_pauli_sum(&[(0.6, "ZI"), (-0.4, "IZ"), (0.5, "XI"), (0.3, "IX"), (0.2, "ZZ")]).unwrap();
        let a = [
            HermitianOperator::new(crate::operator::pauli_string("ZI").unwrap()).unwrap(),
            HermitianOperator::new(crate::operator::pauli_string("IZ").unwrap()).unwrap(),
        ];
        (h, a)
    }

    #[test]
    fn uncorrelated_couplings_add_independently() {
        let (h, a) = two_qubit_pair();
        let eig = eigensystem(&h, None).unwrap();
        let jds: Vec<_> = a.iter().map(|x| decompose_coupling(&eig, x, None).unwrap()).collect();
        let b1 = benchmark_bath(10.0).unwrap();
        let b2 = Bath::ohmic(0.05, 3.0, 2.0).unwrap();
        let p = |i: usize| nalgebra::DMatrix::from_fn(2, 2, |r, s| if r == i && s == i { 1.0 } else { 0.0 });
        let baths = CorrelatedBaths::new(alloc::vec![(b1.clone(), p(0)), (b2.clone(), p(1))]).unwrap();
        let cfg = GeneratorConfig::cgme(1.2);
        let multi = multi_coupling_generator(&jds, &baths, &cfg).unwrap().superoperator().unwrap();
        let g1 = cgme_generator(&jds[0], &b1, &cfg).unwrap().superoperator().unwrap();
        let g2 = cgme_generator(&jds[1], &b2, &cfg).unwrap().superoperator().unwrap();
        let mut unitary = Superoperator::zeros(4);
        unitary.add_hamiltonian(h.matrix());
        let sum = &g1.matrix + &g2.matrix - &unitary.matrix;
        assert!((multi.matrix - sum).norm() < 1e-10);
    }

    #[test]
    fn collective_noise_has_one_mode() {
        let b = benchmark_bath(10.0).unwrap();
        let ones = nalgebra::DMatrix::from_element(3, 3, 1.0);
        let baths = CorrelatedBaths::new(alloc::vec![(b.clone(), ones)]).unwrap();
        let modes = baths.modes(1.3);
        assert!(modes[0].0.abs() < 1e-12 && modes[1].0.abs() < 1e-12);
        assert!((modes[2].0 - 3.0 * b.gamma(1.3)).abs() < 1e-12);
        let bad = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CorrelatedBaths::new(alloc::vec![(b, bad)]).is_err());
    }

    #[test]
    fn correlated_dissipator_matches_double_sum() {
        let (h, a) = two_qubit_pair();
        let eig = eigensystem(&h, None).unwrap();
        let jds: Vec<_> = a.iter().map(|x| decompose_coupling(&eig, x, None).unwrap()).collect();
        let b1 = benchmark_bath(10.0).unwrap();
        let b2 = Bath::ohmic(0.05, 3.0, 2.0).unwrap();
        let m1 = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 0.5]);
        let m2 = nalgebra::DMatrix::from_row_slice(2, 2, &[0.3, -0.2, -0.2, 0.9]);
        let baths = CorrelatedBaths::new(alloc::vec![(b1.clone(), m1.clone()), (b2.clone(), m2.clone())]).unwrap();
        let t_a = 0.9;
        let g = multi_coupling_generator(&jds, &baths, &GeneratorConfig::cgme(t_a).lambless()).unwrap();
        let rho = crate::models::random_model(2, 11).unwrap().initial.into_matrix();
        // Σ_ij Σ_ωω′ γ^{ij}_{ω,−ω′}(A_{i,ω}ρA_{j,ω′}† − ½{A_{j,ω′}†A_{i,ω}, ρ}).
        let mut oracle = (h.matrix() * &rho - &rho * h.matrix()) * c(0.0, -1.0);
        for (b, m) in [(&b1, &m1), (&b2, &m2)] {
            for i in 0..2 {
                for j in 0..2 {
                    for (w, ai) in &jds[i].terms {
                        for (v, aj) in &jds[j].terms {
                            let k = m[(i, j)] * cgme_gamma_direct(*w, -v, t_a, b).unwrap().re;
                            let ajd = aj.adjoint();
                            let p = &ajd * ai;
                            oracle += (ai * &rho * &ajd - (&p * &rho + &rho * &p) * c(0.5, 0.0)) * c(k, 0.0);
                        }
                    }
                }
            }
        }
        assert!((g.apply(&rho) - oracle).norm() < 1e-8);
    }
}
