//! Error bounds, the optimal coarse-graining time, and generator-norm
//! sampling for the effective rate Λ.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bath::Bath;
use crate::error::{invalid, Result};
use crate::evolve::OreKernel;
use crate::generators::decompose_coupling;
use crate::operator::{c, eigensystem, trace_norm, unitary_evolution, HermitianOperator};
use crate::models::random_hermitian;

/// Inputs to the bound formulas. Λ defaults to 4/τ_SB (c_Λ = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub tau_b: f64,
    pub tau_sb: f64,
    pub lambda: f64,
    /// Measured c_BM; when absent the self-consistent bound is used.
    pub c_bm: Option<f64>,
    pub epsilon_t: f64,
    pub t_a: f64,
    /// Minimum level spacing, needed only for the Davies bound.
    pub delta_e: Option<f64>,
    /// Leading constant of the simple CGME bound.
    pub k_simple: f64,
    /// Driven runs: the bounds are applied by analogy and flagged.
    pub driven: bool,
}

impl BoundParams {
    pub fn new(tau_b: f64, tau_sb: f64) -> Result<Self> {
        if !(tau_b > 0.0 && tau_sb > 0.0 && tau_b.is_finite() && tau_sb.is_finite()) {
            return Err(invalid!("τ_B and τ_SB must be positive, got {tau_b}, {tau_sb}"));
        }
        Ok(Self {
            tau_b,
            tau_sb,
            lambda: 4.0 / tau_sb,
            c_bm: None,
            epsilon_t: 0.0,
            t_a: libm::sqrt(tau_b * tau_sb / 5.0),
            delta_e: None,
            k_simple: 13.0,
            driven: false,
        })
    }

    /// Sets Λ; requires c_Λ = 4/(Λτ_SB) ≥ 1.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || 4.0 / (lambda * self.tau_sb) < 1.0 - 1e-12 {
            return Err(invalid!("Λ = {lambda} must lie in (0, 4/τ_SB = {}]", 4.0 / self.tau_sb));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_c_bm(mut self, c_bm: f64) -> Result<Self> {
        if !(c_bm >= 1.0) {
            return Err(invalid!("c_BM must be ≥ 1, got {c_bm}"));
        }
        self.c_bm = Some(c_bm);
        Ok(self)
    }

    pub fn with_epsilon_t(mut self, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(invalid!("ε_T must lie in [0, 1), got {eps}"));
        }
        self.epsilon_t = eps;
        Ok(self)
    }

    pub fn with_t_a(mut self, t_a: f64) -> Result<Self> {
        if !(t_a > 0.0 && t_a.is_finite()) {
            return Err(invalid!("T_a must be positive"));
        }
        self.t_a = t_a;
        Ok(self)
    }

    pub fn with_delta_e(mut self, delta_e: f64) -> Result<Self> {
        if !(delta_e > 0.0) {
            return Err(invalid!("level spacing must be positive"));
        }
        self.delta_e = Some(delta_e);
        Ok(self)
    }

    pub fn c_lambda(&self) -> f64 {
        4.0 / (self.lambda * self.tau_sb)
    }

    fn ratio(&self) -> f64 {
        self.tau_b / self.tau_sb
    }

    fn c_bm_at(&self, t: f64) -> f64 {
        self.c_bm.unwrap_or_else(|| c_bm_bound(self, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaVariant {
    /// √(τ_SBτ_B/5).
    Theory,
    /// √(c_Λτ_SBτ_B/5) with the measured Λ.
    Adjusted,
}

pub fn optimal_ta(bp: &BoundParams, variant: TaVariant) -> f64 {
    let base = bp.tau_b * bp.tau_sb / 5.0;
    match variant {
        TaVariant::Theory => libm::sqrt(base),
        TaVariant::Adjusted => libm::sqrt(bp.c_lambda() * base),
    }
}

/// Comparison of the formula T_a with an externally quoted value.
#[derive(Debug, Clone, PartialEq)]
pub struct TaDiscrepancy {
    pub formula: f64,
    pub quoted: f64,
    pub relative: f64,
    /// τ_Bτ_SB that would reproduce the quoted value.
    pub implied_product: f64,
    pub report: String,
}

/// Flags a quoted theory T_a that deviates from √(τ_Bτ_SB/5) by more than 1%.
pub fn ta_discrepancy(bp: &BoundParams, quoted: f64) -> Option<TaDiscrepancy> {
    let formula = optimal_ta(bp, TaVariant::Theory);
    let relative = (quoted - formula) / formula;
    if relative.abs() <= 0.01 {
        return None;
    }
    let implied_product = 5.0 * quoted * quoted;
    let report = format!(
        "quoted T_a = {quoted} differs from √(τ_Bτ_SB/5) = {formula:.4} by {:.1}%; the quoted value implies τ_Bτ_SB = {implied_product:.3} (τ_SB = {:.3} at τ_B = {:.4}, or τ_B = {:.3} at τ_SB = {:.4})",
        100.0 * relative,
        implied_product / bp.tau_b,
        bp.tau_b,
        implied_product / bp.tau_sb,
        bp.tau_sb
    );
    Some(TaDiscrepancy { formula, quoted, relative, implied_product, report })
}

/// c_BM = 1 + ½(√(20X + 9X²) + 3X).
pub fn c_bm_from_x(x: f64) -> f64 {
    1.0 + 0.5 * (libm::sqrt(20.0 * x + 9.0 * x * x) + 3.0 * x)
}

/// Self-consistent c_BM with X = 4c_Λ(τ_B/τ_SB)(e^{Λt+1} − 3/5)².
pub fn c_bm_bound(bp: &BoundParams, t: f64) -> f64 {
    let e = libm::exp(bp.lambda * t + 1.0) - 0.6;
    c_bm_from_x(4.0 * bp.c_lambda() * bp.ratio() * e * e)
}

/// Named bounds at one time. Big-O remainders are not evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSummary {
    pub t: f64,
    pub cgme_simple: f64,
    pub cgme_detailed: f64,
    /// The omitted term of the detailed bound.
    pub cgme_detailed_remainder: &'static str,
    pub redfield_log: f64,
    pub davies: Option<f64>,
    pub strongest: f64,
    pub c_bm: f64,
    /// Set for driven runs: the time-independent bounds are applied by analogy.
    pub heuristic: bool,
}

impl BoundSummary {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = alloc::vec![
            ("cgme_simple", self.cgme_simple),
            ("cgme_detailed", self.cgme_detailed),
            ("redfield_log", self.redfield_log),
            ("strongest", self.strongest),
        ];
        if let Some(d) = self.davies {
            out.push(("davies", d));
        }
        out
    }
}

/// K√(τ_B/τ_SB)e^{6t/τ_SB}.
pub fn cgme_simple_bound(bp: &BoundParams, t: f64) -> f64 {
    bp.k_simple * libm::sqrt(bp.ratio()) * libm::exp(6.0 * t / bp.tau_sb)
}

/// 13e^{4t/τ}√r(1 + 29re^{8t/τ}) + 12(e^{4t/τ} − 1)e^{8t/τ}r, r = τ_B/τ_SB.
pub fn cgme_detailed_bound(bp: &BoundParams, t: f64) -> f64 {
    let r = bp.ratio();
    let e4 = libm::exp(4.0 * t / bp.tau_sb);
    let e8 = libm::exp(8.0 * t / bp.tau_sb);
    13.0 * e4 * libm::sqrt(r) * (1.0 + 29.0 * r * e8) + 12.0 * (e4 - 1.0) * e8 * r
}

pub const CGME_DETAILED_REMAINDER: &str = "(e^{4t/τ_SB} − 1)e^{8t/τ_SB}(τ_B/τ_SB)·O(e^{4t/τ_SB}τ_B/τ_SB)";

/// c_BM e^{4t/τ}[4r(1 − ln(1 − e^{−4r/(1−ε_T)})) + ε_T].
pub fn redfield_log_bound(bp: &BoundParams, t: f64) -> f64 {
    let r = bp.ratio();
    let bracket = 4.0 * r * (1.0 - libm::log(1.0 - libm::exp(-4.0 * r / (1.0 - bp.epsilon_t)))) + bp.epsilon_t;
    bp.c_bm_at(t) * libm::exp(4.0 * t / bp.tau_sb) * bracket
}

/// (τ_B/τ_SB + 1/√(τ_SBδE))e^{12t/τ_SB}.
pub fn davies_bound(bp: &BoundParams, t: f64) -> Result<f64> {
    let de = bp.delta_e.ok_or_else(|| invalid!("the Davies bound needs the level spacing δE"))?;
    Ok((bp.ratio() + 1.0 / libm::sqrt(bp.tau_sb * de)) * libm::exp(12.0 * t / bp.tau_sb))
}

pub fn bound_summary(bp: &BoundParams, t: f64) -> Result<BoundSummary> {
    if !(t >= 0.0) {
        return Err(invalid!("t must be ≥ 0"));
    }
    Ok(BoundSummary {
        t,
        cgme_simple: cgme_simple_bound(bp, t),
        cgme_detailed: cgme_detailed_bound(bp, t),
        cgme_detailed_remainder: CGME_DETAILED_REMAINDER,
        redfield_log: redfield_log_bound(bp, t),
        davies: bp.delta_e.map(|_| davies_bound(bp, t)).transpose()?,
        strongest: strongest_bound(bp, t),
        c_bm: bp.c_bm_at(t),
        heuristic: bp.driven,
    })
}

/// b₂(t) = 4c t/T_a + c(4 − 2ΛT_a − (ΛT_a/2)²)/(ΛT_a)·(1 − e^{Λt}), t ≤ T_a/2.
fn b2(c_bm: f64, lambda: f64, t_a: f64, t: f64) -> f64 {
    let lt = lambda * t_a;
    4.0 * c_bm * t / t_a + c_bm * (4.0 - 2.0 * lt - 0.25 * lt * lt) / lt * (1.0 - libm::exp(lambda * t))
}

/// Tightest bound on ‖ρ_BM,I − ρ_C,I‖₁; zero at t = 0.
pub fn strongest_bound(bp: &BoundParams, t: f64) -> f64 {
    let (l, ta) = (bp.lambda, bp.t_a);
    let c_bm = bp.c_bm_at(t);
    let grow = libm::exp(l * (t - 0.5 * ta)).max(1.0);
    let shift = 0.25 * c_bm * l * ta;
    let first = (b2(c_bm, l, ta, t.min(0.5 * ta)) + shift) * grow - shift;
    let second = 4.0 / (l * bp.tau_sb) * ((libm::exp(l * t) - grow) + bp.tau_b / ta * (grow - 1.0));
    first + second
}

/// Generator-norm samples ‖𝓛^{BM,I}_t(X)‖₁ over GUE test matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub max: f64,
    /// Center of the most populated histogram bin.
    pub typical: f64,
    /// (bin lower edge, bin upper edge, count).
    pub histogram: Vec<(f64, f64, usize)>,
    /// (t, norm) per sample, in sample order.
    pub samples: Vec<(f64, f64)>,
}

pub const LAMBDA_BINS: usize = 50;

/// One sample on its own ChaCha stream: a GUE matrix normalized to
/// ‖X‖₁ = 1 and a uniform time in [t_lo, t_hi].
pub fn lambda_sample(h: &HermitianOperator, a: &HermitianOperator, kernel: &OreKernel, seed: u64, index: u64, t_range: (f64, f64)) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let x = random_hermitian(&mut rng, h.dim());
    let x = &x / c(trace_norm(&x)?, 0.0);
    let t = t_range.0 + (t_range.1 - t_range.0) * rng.random::<f64>();
    let u = unitary_evolution(h.matrix(), t)?;
    let rho = &u * x * u.adjoint();
    let af = kernel.filtered(t)?;
    let am = a.matrix();
    let term = am * &rho * &af - &rho * &af * am;
    Ok((t, trace_norm(&(&term + term.adjoint()))?))
}

/// Memory kernel for Λ sampling on [0, t_max] at `points_per_tau_b`.
pub fn lambda_kernel(h: &HermitianOperator, a: &HermitianOperator, bath: &Bath, t_max: f64, points_per_tau_b: f64) -> Result<OreKernel> {
    let ts = bath.timescales(None).or_else(|_| bath.timescales(Some(t_max)))?;
    let jd = decompose_coupling(&eigensystem(h, None)?, a, None)?;
    OreKernel::new(jd, bath, t_max, ts.tau_b / points_per_tau_b)
}

/// Reduces (t, norm) samples to max, histogram mode and histogram.
pub fn summarize_lambda(samples: Vec<(f64, f64)>) -> LambdaEstimate {
    let max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let width = if max > 0.0 { max / LAMBDA_BINS as f64 } else { 1.0 };
    let mut counts = alloc::vec![0usize; LAMBDA_BINS];
    for (_, v) in &samples {
        counts[((v / width) as usize).min(LAMBDA_BINS - 1)] += 1;
    }
    let mode = counts.iter().enumerate().max_by_key(|(i, n)| (**n, core::cmp::Reverse(*i))).map_or(0, |(i, _)| i);
    let histogram = counts.iter().enumerate().map(|(i, n)| (i as f64 * width, (i + 1) as f64 * width, *n)).collect();
    LambdaEstimate { max, typical: (mode as f64 + 0.5) * width * (max > 0.0) as u8 as f64, histogram, samples }
}

/// Samples ‖𝓛^{BM,I}_t(X)‖₁ for `n_samples` GUE matrices X (‖X‖₁ = 1) at
/// uniform t ∈ `t_range`; deterministic for a fixed seed.
pub fn lambda_estimate(h: &HermitianOperator, a: &HermitianOperator, bath: &Bath, n_samples: usize, seed: u64, t_range: (f64, f64)) -> Result<LambdaEstimate> {
    if n_samples < 100 {
        return Err(invalid!("Λ estimation needs at least 100 samples, got {n_samples}"));
    }
    if !(t_range.0 >= 0.0 && t_range.1 > t_range.0) {
        return Err(invalid!("time range must satisfy 0 ≤ t_lo < t_hi"));
    }
    let kernel = lambda_kernel(h, a, bath, t_range.1, 400.0)?;
    let samples = (0..n_samples as u64).map(|i| lambda_sample(h, a, &kernel, seed, i, t_range)).collect::<Result<Vec<_>>>()?;
    Ok(summarize_lambda(samples))
}
