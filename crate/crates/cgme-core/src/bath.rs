//! Bath models: spectral density γ(ω), correlation function C(t), the
//! half-sided transform f(ω) = ½γ(ω) + iS(ω), timescales, and KMS checks.
//!
//! Conventions (ħ = 1): C(t) = (1/2π)∫γ(ω)e^{−iωt}dω and
//! f(ω) = ∫₀^∞ C(t)e^{iωt}dt.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, exp, expm1, sin};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quad::{self, GaussLegendre, Tolerance};

/// Sampled spectral density with monotone cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    omega: Vec<f64>,
    gamma: Vec<f64>,
    slopes: Vec<f64>,
    beta: Option<f64>,
}

impl Tabulated {
    /// Grid must be strictly increasing with at least two points. `beta`
    /// marks the table as thermal at that inverse temperature.
    pub fn new(omega: Vec<f64>, gamma: Vec<f64>, beta: Option<f64>) -> Result<Self> {
        if omega.len() < 2 || omega.len() != gamma.len() {
            return Err(invalid!("tabulated bath needs ≥ 2 (ω, γ) pairs of equal length"));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid!("tabulated ω grid must be strictly increasing"));
        }
        if omega.iter().chain(&gamma).any(|x| !x.is_finite()) {
            return Err(invalid!("tabulated bath contains non-finite values"));
        }
        let slopes = monotone_slopes(&omega, &gamma);
        Ok(Self { omega, gamma, slopes, beta })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.omega[0], self.omega[self.omega.len() - 1])
    }

    fn eval(&self, w: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(w >= lo && w <= hi) {
            return None;
        }
        let k = match self.omega.binary_search_by(|x| x.total_cmp(&w)) {
            Ok(i) => return Some(self.gamma[i].max(0.0)),
            Err(i) => i - 1,
        };
        let h = self.omega[k + 1] - self.omega[k];
        let s = (w - self.omega[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let v = h00 * self.gamma[k] + h10 * h * self.slopes[k] + h01 * self.gamma[k + 1] + h11 * h * self.slopes[k + 1];
        Some(v.max(0.0))
    }
}

/// Fritsch–Carlson slopes: no overshoot between samples.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut m = alloc::vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for k in 1..n - 1 {
        m[k] = if d[k - 1] * d[k] <= 0.0 { 0.0 } else { 0.5 * (d[k - 1] + d[k]) };
    }
    for k in 0..n - 1 {
        if d[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / d[k];
        let b = m[k + 1] / d[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / libm::sqrt(r);
            m[k] = t * a * d[k];
            m[k + 1] = t * b * d[k];
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathKind {
    /// γ(ω) = 2πκ ω e^{−|ω|/ω_c} / (1 − e^{−βω}).
    Ohmic { kappa: f64, omega_c: f64, beta: f64 },
    /// γ(ω) = (3𝒩/τ_SB) e^{βω/2}(e^{−bβ|ω|} − a^{−1}e^{−abβ|ω|}), with 𝒩
    /// fixed by ∫₀^∞|C| = 1/τ_SB.
    Toy { a: f64, b: f64, beta: f64, tau_sb: f64 },
    /// C(t) = g²θ(τ_c − |t|); not a valid (positive) spectral density.
    Rectangle { g: f64, tau_c: f64 },
    Tabulated(Tabulated),
}

/// Numerical knobs shared by the bath integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathOptions {
    pub tol: Tolerance,
    /// Half-width of the excised principal-value window, in units of the
    /// bath's frequency scale.
    pub pv_halfwidth: f64,
    /// Integration horizon for |C(t)| moments when C is itself computed by
    /// quadrature, in units of the inverse frequency scale.
    pub t_horizon: f64,
}

impl Default for BathOptions {
    fn default() -> Self {
        Self { tol: Tolerance::new(1e-13, 1e-11).with_max_intervals(20_000), pv_halfwidth: 1e-4, t_horizon: 200.0 }
    }
}

/// A validated bath.
#[derive(Debug, Clone, PartialEq)]
pub struct Bath {
    kind: BathKind,
    options: BathOptions,
    /// Overall prefactor of γ and C (toy bath only; 1 otherwise).
    prefactor: f64,
}

/// τ_SB = 1/∫₀^∞|C|, τ_B = τ_SB∫₀^T t|C|, ε_T = τ_SB∫_T^∞|C|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathTimescales {
    pub tau_sb: f64,
    pub tau_b: f64,
    pub t_cutoff: f64,
    pub epsilon_t: f64,
}

/// Detailed-balance residuals on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KmsReport {
    pub beta: f64,
    pub max_relative_deviation: f64,
    pub worst_omega: f64,
    /// |γ′(0) − ½βγ(0)| / (½βγ(0)) by central difference.
    pub derivative_residual: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid!("{name} must be positive and finite, got {v}"))
    }
}

impl Bath {
    pub fn new(kind: BathKind, options: BathOptions) -> Result<Self> {
        match &kind {
            BathKind::Ohmic { kappa, omega_c, beta } => {
                positive("κ", *kappa)?;
                positive("ω_c", *omega_c)?;
                positive("β", *beta)?;
            }
            BathKind::Toy { a, b, beta, tau_sb } => {
                if !(*a > 1.0) {
                    return Err(invalid!("toy bath needs a > 1, got {a}"));
                }
                if !(*b > 0.5) {
                    return Err(invalid!("toy bath needs b > 1/2, got {b}"));
                }
                positive("β", *beta)?;
                positive("τ_SB", *tau_sb)?;
            }
            BathKind::Rectangle { g, tau_c } => {
                positive("g", *g)?;
                positive("τ_c", *tau_c)?;
            }
            BathKind::Tabulated(t) => {
                let peak = t.gamma.iter().copied().fold(0.0, f64::max);
                if peak <= 0.0 {
                    return Err(invalid!("tabulated γ has no positive samples"));
                }
                let edge = t.gamma[0].abs().max(t.gamma[t.gamma.len() - 1].abs());
                if edge > 1e-6 * peak {
                    return Err(invalid!("tabulated γ does not decay at the grid edges (edge/peak = {:.2e})", edge / peak));
                }
                if let Some(b) = t.beta {
                    positive("β", b)?;
                }
            }
        }
        let mut bath = Self { kind, options, prefactor: 1.0 };
        if let BathKind::Toy { tau_sb, .. } = bath.kind {
            let area = quad::semi_infinite(|t| bath.correlation_unscaled(t).norm(), 0.0, options.tol)?.value;
            bath.prefactor = 1.0 / (tau_sb * area);
        }
        Ok(bath)
    }

    pub fn ohmic(kappa: f64, omega_c: f64, beta: f64) -> Result<Self> {
        Self::new(BathKind::Ohmic { kappa, omega_c, beta }, BathOptions::default())
    }

    pub fn toy(a: f64, b: f64, beta: f64, tau_sb: f64) -> Result<Self> {
        Self::new(BathKind::Toy { a, b, beta, tau_sb }, BathOptions::default())
    }

    pub fn rectangle(g: f64, tau_c: f64) -> Result<Self> {
        Self::new(BathKind::Rectangle { g, tau_c }, BathOptions::default())
    }

    pub fn tabulated(t: Tabulated) -> Result<Self> {
        Self::new(BathKind::Tabulated(t), BathOptions::default())
    }

    pub fn kind(&self) -> &BathKind {
        &self.kind
    }

    pub fn options(&self) -> &BathOptions {
        &self.options
    }

    /// Whether γ(−ω) = e^{−βω}γ(ω) is asserted.
    pub fn is_thermal(&self) -> bool {
        self.beta().is_some()
    }

    pub fn beta(&self) -> Option<f64> {
        match &self.kind {
            BathKind::Ohmic { beta, .. } | BathKind::Toy { beta, .. } => Some(*beta),
            BathKind::Rectangle { .. } => None,
            BathKind::Tabulated(t) => t.beta,
        }
    }

    /// Whether γ(ω) ≥ 0 everywhere (required for completely positive
    /// Lindblad forms).
    pub fn is_positive(&self) -> bool {
        !matches!(self.kind, BathKind::Rectangle { .. })
    }

    /// The toy bath's 𝒩 such that C(t) = 𝒩·325620/(τ_SB π (22i+5t)(553i+125t)(−106−515it+625t²))
    /// at (a, b, β) = (1.01, 0.6, 4); in general 𝒩 = τ_SB·prefactor/3.
    pub fn normalization(&self) -> Option<f64> {
        match self.kind {
            BathKind::Toy { tau_sb, .. } => Some(self.prefactor * tau_sb / 3.0),
            _ => None,
        }
    }

    /// Characteristic frequency used to scale numerical windows.
    pub fn frequency_scale(&self) -> f64 {
        match &self.kind {
            BathKind::Ohmic { omega_c, .. } => *omega_c,
            BathKind::Toy { b, beta, .. } => 1.0 / ((b - 0.5) * beta),
            BathKind::Rectangle { tau_c, .. } => 1.0 / tau_c,
            BathKind::Tabulated(t) => {
                let (lo, hi) = t.range();
                (hi - lo) / 20.0
            }
        }
    }

    /// Frequency interval outside which γ is negligible (< 1e-18 relative),
    /// or `None` when γ does not decay.
    pub fn frequency_window(&self) -> Option<(f64, f64)> {
        match &self.kind {
            BathKind::Ohmic { omega_c, beta, .. } => Some((-50.0 * omega_c / (1.0 + beta * omega_c), 50.0 * omega_c)),
            BathKind::Toy { b, beta, .. } => Some((-45.0 / ((b + 0.5) * beta), 45.0 / ((b - 0.5) * beta))),
            BathKind::Rectangle { .. } => None,
            BathKind::Tabulated(t) => Some(t.range()),
        }
    }

    /// γ(ω). Outside a tabulated grid this returns 0; use [`Bath::try_gamma`]
    /// to treat that as an error.
    pub fn gamma(&self, w: f64) -> f64 {
        match &self.kind {
            BathKind::Ohmic { kappa, omega_c, beta } => {
                let x = beta * w;
                // ω/(1 − e^{−βω}) → 1/β at ω = 0.
                let bose = if x == 0.0 { 1.0 / beta } else { w / -expm1(-x) };
                2.0 * PI * kappa * bose * exp(-w.abs() / omega_c)
            }
            BathKind::Toy { a, b, beta, .. } => {
                let aw = w.abs();
                self.prefactor * exp(beta * w / 2.0) * (exp(-b * beta * aw) - exp(-a * b * beta * aw) / a)
            }
            BathKind::Rectangle { g, tau_c } => {
                if w == 0.0 {
                    2.0 * g * g * tau_c
                } else {
                    2.0 * g * g * sin(w * tau_c) / w
                }
            }
            BathKind::Tabulated(t) => t.eval(w).unwrap_or(0.0),
        }
    }

    pub fn try_gamma(&self, w: f64) -> Result<f64> {
        if let BathKind::Tabulated(t) = &self.kind {
            let (lo, hi) = t.range();
            if !(w >= lo && w <= hi) {
                return Err(invalid!("ω = {w} outside tabulated range [{lo}, {hi}]"));
            }
        }
        Ok(self.gamma(w))
    }

    /// Toy-bath C(t) without the normalization prefactor.
    fn correlation_unscaled(&self, t: f64) -> Complex64 {
        let BathKind::Toy { a, b, beta, .. } = self.kind else {
            return Complex64::new(0.0, 0.0);
        };
        let it = Complex64::new(0.0, t);
        let p1 = b * beta - beta / 2.0;
        let p2 = b * beta + beta / 2.0;
        let q1 = a * b * beta - beta / 2.0;
        let q2 = a * b * beta + beta / 2.0;
        let s = 1.0 / (p1 + it) + 1.0 / (p2 - it) - (1.0 / (q1 + it) + 1.0 / (q2 - it)) / a;
        s / (2.0 * PI)
    }

    /// C(t); closed form for toy and rectangle baths, otherwise adaptive
    /// inverse-Fourier quadrature of γ.
    pub fn correlation(&self, t: f64) -> Result<Complex64> {
        match &self.kind {
            BathKind::Toy { .. } => Ok(self.correlation_unscaled(t) * self.prefactor),
            BathKind::Ohmic { kappa, omega_c, beta } => {
                // Σₙ≥₀ (1/ω_c + nβ + it)⁻² + Σₙ≥₁ (1/ω_c + nβ − it)⁻².
                let z = Complex64::new(1.0 / omega_c, t) / beta;
                let w = Complex64::new(1.0 / omega_c, -t) / beta + 1.0;
                Ok((trigamma(z) + trigamma(w)) * (kappa / (beta * beta)))
            }
            BathKind::Rectangle { g, tau_c } => {
                let v = if t.abs() < *tau_c {
                    g * g
                } else if t.abs() == *tau_c {
                    0.5 * g * g
                } else {
                    0.0
                };
                Ok(Complex64::new(v, 0.0))
            }
            _ => {
                let (lo, hi) = self.frequency_window().ok_or_else(|| invalid!("γ has no finite window"))?;
                let breaks = self.oscillation_breaks(lo, hi, t.abs());
                let est = quad::adaptive(|w| Complex64::cis(-w * t) * self.gamma(w), &breaks, self.options.tol)?;
                Ok(est.value / (2.0 * PI))
            }
        }
    }

    /// Breakpoints in [lo, hi] at ω = 0 and roughly every few oscillation
    /// periods of e^{iωt}.
    fn oscillation_breaks(&self, lo: f64, hi: f64, t: f64) -> Vec<f64> {
        let mut b = alloc::vec![lo];
        let pieces = if t > 0.0 { ((hi - lo) * t / (8.0 * PI)).clamp(1.0, 4000.0) as usize } else { 1 };
        for k in 1..pieces {
            b.push(lo + (hi - lo) * k as f64 / pieces as f64);
        }
        b.push(hi);
        if lo < 0.0 && hi > 0.0 {
            b.push(0.0);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// S(ω) = (1/2π) P∫γ(ω′)/(ω − ω′)dω′, evaluated as
    /// (1/2π)∫₀^∞[γ(ω−u) − γ(ω+u)]/u du with [0, h] replaced by the linearized
    /// contribution −2hγ′(ω).
    pub fn lamb_amplitude_s(&self, w: f64) -> Result<f64> {
        if let BathKind::Rectangle { g, tau_c } = self.kind {
            return Ok(if w == 0.0 { 0.0 } else { g * g * (1.0 - cos(w * tau_c)) / w });
        }
        let (lo, hi) = self.frequency_window().ok_or_else(|| invalid!("γ does not decay; principal value diverges"))?;
        let h = self.options.pv_halfwidth * self.frequency_scale();
        let dg = (self.gamma(w + h) - self.gamma(w - h)) / (2.0 * h);
        let local = -2.0 * h * dg;
        let umax = (w - lo).max(hi - w);
        let mut breaks = alloc::vec![h, umax];
        for p in [w.abs(), w - lo, hi - w] {
            if p > h && p < umax {
                breaks.push(p);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let tol = Tolerance { abs: self.options.tol.abs * 10.0, ..self.options.tol };
        let body = quad::adaptive(|u| (self.gamma(w - u) - self.gamma(w + u)) / u, &breaks, tol)?.value;
        Ok((body + local) / (2.0 * PI))
    }

    /// f(ω) = ½γ(ω) + iS(ω).
    pub fn half_fourier(&self, w: f64) -> Result<Complex64> {
        Ok(Complex64::new(0.5 * self.gamma(w), self.lamb_amplitude_s(w)?))
    }

    /// Times t > 0 where C is not smooth; quadratures over t should break there.
    pub fn correlation_breaks(&self) -> Vec<f64> {
        match self.kind {
            BathKind::Rectangle { tau_c, .. } => alloc::vec![tau_c],
            _ => Vec::new(),
        }
    }

    /// Bath timescales; `t_cutoff = None` means T = ∞, which the Ohmic bath
    /// does not admit (∫t|C| diverges logarithmically).
    pub fn timescales(&self, t_cutoff: Option<f64>) -> Result<BathTimescales> {
        if let (BathKind::Ohmic { .. }, None) = (&self.kind, t_cutoff) {
            return Err(invalid!("Ohmic bath: ∫t|C(t)|dt diverges; supply a finite T_cutoff"));
        }
        if let Some(t) = t_cutoff {
            positive("T_cutoff", t)?;
        }
        let (total, moment, tail) = if self.has_closed_form_correlation() {
            self.abs_moments_adaptive(t_cutoff)?
        } else {
            self.abs_moments_composite(t_cutoff)?
        };
        let tau_sb = 1.0 / total;
        Ok(BathTimescales {
            tau_sb,
            tau_b: tau_sb * moment,
            t_cutoff: t_cutoff.unwrap_or(f64::INFINITY),
            epsilon_t: tau_sb * tail,
        })
    }

    fn has_closed_form_correlation(&self) -> bool {
        !matches!(self.kind, BathKind::Tabulated(_))
    }

    /// (∫₀^∞|C|, ∫₀^T t|C|, ∫_T^∞|C|) with C in closed form.
    fn abs_moments_adaptive(&self, t_cutoff: Option<f64>) -> Result<(f64, f64, f64)> {
        let tol = self.options.tol;
        let abs_c = |t: f64| self.correlation(t).map(|c| c.norm()).unwrap_or(f64::NAN);
        let kinks = self.correlation_breaks();
        let head_end = kinks.iter().copied().fold(20.0 / self.frequency_scale(), f64::max);
        let mut head = alloc::vec![0.0];
        head.extend(kinks.iter().copied());
        head.push(head_end);
        head.sort_by(f64::total_cmp);
        head.dedup();
        let total = quad::adaptive(abs_c, &head, tol)?.value + quad::semi_infinite(abs_c, head_end, tol)?.value;
        Ok(match t_cutoff {
            None => {
                let m = quad::adaptive(|t| t * abs_c(t), &head, tol)?.value
                    + quad::semi_infinite(|t| t * abs_c(t), head_end, tol)?.value;
                (total, m, 0.0)
            }
            Some(tc) => {
                let mut pts: Vec<f64> = head.iter().copied().filter(|&x| x < tc).collect();
                pts.push(tc);
                let m = quad::adaptive(|t| t * abs_c(t), &pts, tol)?.value;
                (total, m, quad::semi_infinite(abs_c, tc, tol)?.value)
            }
        })
    }

    /// Same moments when C itself is a quadrature: fixed composite
    /// Gauss–Legendre up to a horizon, beyond which |C| is taken as zero.
    fn abs_moments_composite(&self, t_cutoff: Option<f64>) -> Result<(f64, f64, f64)> {
        let horizon = self.options.t_horizon / self.frequency_scale();
        let tc = t_cutoff.unwrap_or(f64::INFINITY);
        let mut cuts = alloc::vec![];
        if tc < horizon {
            cuts.push(tc);
        }
        let breaks = quad::panel_breaks(0.0, horizon, &cuts, 0.25 / self.frequency_scale());
        let gl = GaussLegendre::new(16)?;
        let (mut total, mut moment, mut tail) = (0.0, 0.0, 0.0);
        for (t, w) in gl.composite(&breaks) {
            let a = self.correlation(t)?.norm();
            total += w * a;
            if t < tc {
                moment += w * t * a;
            } else {
                tail += w * a;
            }
        }
        Ok((total, moment, tail))
    }

    /// KMS residuals; refuses baths that are not marked thermal.
    pub fn kms_report(&self, grid: &[f64]) -> Result<KmsReport> {
        let beta = self.beta().ok_or_else(|| invalid!("bath is not thermal; KMS check does not apply"))?;
        let mut worst = 0.0;
        let mut worst_omega = 0.0;
        for &w in grid {
            let lhs = self.gamma(-w);
            let rhs = exp(-beta * w) * self.gamma(w);
            let scale = lhs.abs().max(rhs.abs());
            let dev = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
            if dev > worst {
                worst = dev;
                worst_omega = w;
            }
        }
        let h = 1e-4;
        let slope = (self.gamma(h) - self.gamma(-h)) / (2.0 * h);
        let target = 0.5 * beta * self.gamma(0.0);
        let derivative_residual = if target == 0.0 { slope.abs() } else { (slope - target).abs() / target.abs() };
        Ok(KmsReport { beta, max_relative_deviation: worst, worst_omega, derivative_residual })
    }

    /// Location of max γ and the half-maximum interval, by golden-section
    /// refinement of a grid scan over the frequency window.
    pub fn peak(&self) -> Result<SpectralPeak> {
        let (lo, hi) = self.frequency_window().ok_or_else(|| invalid!("γ has no finite window"))?;
        let n = 4000;
        let step = (hi - lo) / n as f64;
        let (mut k_best, mut g_best) = (0, f64::MIN);
        for k in 0..=n {
            let g = self.gamma(lo + step * k as f64);
            if g > g_best {
                g_best = g;
                k_best = k;
            }
        }
        let center = lo + step * k_best as f64;
        let w_star = golden_max(|w| self.gamma(w), center - step, center + step);
        let g_max = self.gamma(w_star);
        let half = 0.5 * g_max;
        let left = bisect(|w| self.gamma(w) - half, lo, w_star);
        let right = bisect(|w| self.gamma(w) - half, w_star, hi);
        Ok(SpectralPeak { omega_star: w_star, gamma_max: g_max, half_max: (left, right) })
    }
}

/// ψ₁(z) = Σₙ≥₀ (z + n)⁻² for Re z > 0: upward recurrence, then the
/// asymptotic series.
fn trigamma(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < 12.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli terms B₂ₖ/z^{2k+1}.
    const B: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv * inv2;
    for b in B {
        series += p * b;
        p *= inv2;
    }
    acc + inv + inv2 * 0.5 + series
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub omega_star: f64,
    pub gamma_max: f64,
    pub half_max: (f64, f64),
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while (b - a).abs() > 1e-12 * (1.0 + a.abs()) {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Root of a sign-changing function on [a, b]; returns the endpoint
/// nearest zero when there is no sign change.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let (mut fa, fb) = (f(a), f(b));
    if fa * fb > 0.0 {
        return if fa.abs() < fb.abs() { a } else { b };
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
        if b - a < 1e-13 * (1.0 + m.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Bath {
        Bath::toy(1.01, 0.6, 4.0, 10.0).unwrap()
    }

    #[test]
    fn ohmic_zero_frequency_limit() {
        let b = Bath::ohmic(0.3, 2.0, 1.5).unwrap();
        let expect = 2.0 * PI * 0.3 / 1.5;
        assert!((b.gamma(0.0) - expect).abs() < 1e-14);
        assert!((b.gamma(1e-9) - expect).abs() < 1e-8);
    }

    #[test]
    fn rectangle_closed_forms() {
        let b = Bath::rectangle(0.5, 2.0).unwrap();
        assert_eq!(b.correlation(1.0).unwrap().re, 0.25);
        assert_eq!(b.correlation(-2.5).unwrap().re, 0.0);
        let ts = b.timescales(None).unwrap();
        assert!((ts.tau_sb - 1.0 / (0.25 * 2.0)).abs() < 1e-10);
        assert!((ts.tau_b - 1.0).abs() < 1e-10);
        assert!(!b.is_thermal());
        assert!(b.kms_report(&[1.0]).is_err());
        let f = b.half_fourier(0.7).unwrap();
        assert!((2.0 * f.re - b.gamma(0.7)).abs() < 1e-14);
    }

    #[test]
    fn correlation_is_hermitian_in_time() {
        let b = toy();
        for t in [0.1, 0.9, 3.3] {
            let d = b.correlation(-t).unwrap() - b.correlation(t).unwrap().conj();
            assert!(d.norm() < 1e-12);
        }
        let o = Bath::ohmic(1.0, 1.0, 1.0).unwrap();
        let d = o.correlation(-0.8).unwrap() - o.correlation(0.8).unwrap().conj();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn gaussian_table_timescales() {
        // γ = (√(2π)/s)e^{−ω²/2s²} ↔ C(t) = e^{−s²t²/2}.
        let s = 1.5;
        let omega: Vec<f64> = (0..=1200).map(|k| -15.0 + 0.025 * k as f64).collect();
        let gamma: Vec<f64> =
            omega.iter().map(|w| libm::sqrt(2.0 * PI) / s * libm::exp(-w * w / (2.0 * s * s))).collect();
        let opts = BathOptions { t_horizon: 15.0, ..BathOptions::default() };
        let b = Bath::new(BathKind::Tabulated(Tabulated::new(omega, gamma, None).unwrap()), opts).unwrap();
        let c = b.correlation(0.7).unwrap();
        assert!((c.re - libm::exp(-s * s * 0.49 / 2.0)).abs() < 1e-6 && c.im.abs() < 1e-9);
        let ts = b.timescales(None).unwrap();
        let tau_sb = s / libm::sqrt(PI / 2.0);
        assert!((ts.tau_sb - tau_sb).abs() < 1e-5 * tau_sb);
        assert!((ts.tau_b - tau_sb / (s * s)).abs() < 1e-5);
    }

    #[test]
    fn toy_matches_printed_rational_form() {
        let b = toy();
        let n = b.normalization().unwrap();
        assert!((n - 21.03).abs() < 0.01, "𝒩 = {n}");
        let i = Complex64::i();
        for t in [-2.0, 0.0, 0.3, 1.7, 12.0] {
            let den = (22.0 * i + 5.0 * t) * (553.0 * i + 125.0 * t) * (-106.0 - 515.0 * i * t + 625.0 * t * t);
            let printed = 325620.0 * n / (10.0 * PI * den);
            let ours = b.correlation(t).unwrap();
            assert!((ours - printed).norm() < 1e-12 * (1.0 + printed.norm()), "t={t}");
        }
        assert!((b.timescales(None).unwrap().tau_sb - 10.0).abs() < 1e-9);
    }

    #[test]
    fn toy_correlation_matches_fourier_quadrature() {
        let b = toy();
        let (lo, hi) = b.frequency_window().unwrap();
        for t in [0.0, 0.5, 2.0] {
            let q = quad::adaptive(|w| Complex64::cis(-w * t) * b.gamma(w), &[lo, 0.0, hi], Tolerance::new(1e-14, 1e-12))
                .unwrap()
                .value
                / (2.0 * PI);
            assert!((q - b.correlation(t).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn lamb_amplitude_matches_half_fourier_of_correlation() {
        // Independent route: S = Im ∫₀^∞ C(t)e^{iωt}dt on the toy bath.
        let b = toy();
        for w in [-0.4, 0.0, 0.25, 1.1] {
            let direct = quad::semi_infinite(|t| (b.correlation(t).unwrap() * Complex64::cis(w * t)).im, 0.0, Tolerance::new(1e-13, 1e-11))
                .unwrap()
                .value;
            let s = b.lamb_amplitude_s(w).unwrap();
            assert!((s - direct).abs() < 1e-7, "ω={w}: {s} vs {direct}");
        }
    }

    #[test]
    fn ohmic_correlation_matches_fourier_quadrature() {
        let b = Bath::ohmic(0.05, 2.0, 0.8).unwrap();
        let (lo, hi) = b.frequency_window().unwrap();
        for t in [0.0, 0.4, 3.0, -1.2] {
            let breaks = b.oscillation_breaks(lo, hi, t);
            let q = quad::adaptive(|w| Complex64::cis(-w * t) * b.gamma(w), &breaks, Tolerance::new(1e-14, 1e-12))
                .unwrap()
                .value
                / (2.0 * PI);
            assert!((q - b.correlation(t).unwrap()).norm() < 1e-10, "t={t}");
        }
        assert!(b.timescales(Some(5.0)).unwrap().epsilon_t > 0.0);
    }

    #[test]
    fn trigamma_known_values() {
        let z1 = trigamma(Complex64::new(1.0, 0.0));
        assert!((z1.re - PI * PI / 6.0).abs() < 1e-14 && z1.im.abs() < 1e-15);
        let zh = trigamma(Complex64::new(0.5, 0.0));
        assert!((zh.re - PI * PI / 2.0).abs() < 1e-13);
        // Reflection on the line Re z = ½: ψ₁(½+iy) + ψ₁(½−iy) = π²/cosh²(πy).
        let y = 0.7;
        let s = trigamma(Complex64::new(0.5, y)) + trigamma(Complex64::new(0.5, -y));
        assert!((s.re - PI * PI / libm::cosh(PI * y).powi(2)).abs() < 1e-13);
    }

    #[test]
    fn thermal_baths_satisfy_kms() {
        let grid: Vec<f64> = (1..40).map(|k| 0.1 * k as f64).collect();
        for b in [toy(), Bath::ohmic(0.2, 3.0, 0.7).unwrap()] {
            let r = b.kms_report(&grid).unwrap();
            assert!(r.max_relative_deviation < 1e-12, "{r:?}");
            assert!(r.derivative_residual < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn tabulated_interpolation_is_monotone_and_errors_outside() {
        let w: Vec<f64> = (0..=40).map(|k| -10.0 + 0.5 * k as f64).collect();
        let g: Vec<f64> = w.iter().map(|x| libm::exp(-x * x)).collect();
        let b = Bath::tabulated(Tabulated::new(w, g, None).unwrap()).unwrap();
        assert!(b.try_gamma(11.0).is_err());
        assert!((b.gamma(0.0) - 1.0).abs() < 1e-15);
        let mut prev = b.gamma(0.0);
        for k in 1..100 {
            let v = b.gamma(0.05 * k as f64);
            assert!(v <= prev + 1e-15 && v >= 0.0);
            prev = v;
        }
    }

    #[test]
    fn ohmic_requires_cutoff_for_timescales() {
        let o = Bath::ohmic(0.1, 1.0, 1.0).unwrap();
        assert!(o.timescales(None).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Bath::toy(0.9, 0.6, 4.0, 10.0).is_err());
        assert!(Bath::toy(1.01, 0.4, 4.0, 10.0).is_err());
        assert!(Bath::ohmic(-1.0, 1.0, 1.0).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn toy_invariants(a in 1.001f64..3.0, b in 0.55f64..2.0, beta in 0.2f64..6.0, w in -3.0f64..3.0) {
            let bath = Bath::toy(a, b, beta, 7.0).unwrap();
            let g = bath.gamma(w);
            proptest::prop_assert!(g >= 0.0);
            let kms = libm::exp(-beta * w) * g;
            proptest::prop_assert!((bath.gamma(-w) - kms).abs() <= 1e-12 * (1.0 + kms));
            let c = bath.correlation(w).unwrap();
            proptest::prop_assert!(c.norm() <= bath.correlation(0.0).unwrap().re * (1.0 + 1e-12));
        }

        #[test]
        fn ohmic_invariants(kappa in 0.01f64..1.0, wc in 0.2f64..5.0, beta in 0.1f64..5.0, w in -4.0f64..4.0) {
            let bath = Bath::ohmic(kappa, wc, beta).unwrap();
            let g = bath.gamma(w);
            proptest::prop_assert!(g >= 0.0);
            let kms = libm::exp(-beta * w) * g;
            proptest::prop_assert!((bath.gamma(-w) - kms).abs() <= 1e-12 * (1.0 + kms));
        }
    }
}
