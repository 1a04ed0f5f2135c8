//! Driven systems: piecewise-constant Hamiltonians with instantaneous
//! pulses, the time-dependent CGME (Lindblad operators, Lamb shift) and
//! Redfield filter, and the dynamical-decoupling suppression factor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::Bath;
use crate::error::{invalid, Result};
use crate::generators::{diagonalize_kossakowski, Dissipator, EquationKind, GeneratorSet};
use crate::operator::{c, hermitian_part, hermiticity_residual, identity, operator_norm, unitary_evolution, CMat, HermitianOperator};
use crate::quad::{self, sinc, GaussLegendre, Tolerance};

/// H held constant on [start, end).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub hamiltonian: HermitianOperator,
}

/// Instantaneous unitary applied at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub time: f64,
    pub unitary: CMat,
}

/// Contiguous segments covering [0, duration] plus pulses strictly inside.
/// Outside [0, duration] the first/last Hamiltonian is extended and no
/// pulses act, so coarse-graining windows near the edges stay defined.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule {
    segments: Vec<Segment>,
    pulses: Vec<Pulse>,
}

impl DriveSchedule {
    pub fn new(segments: Vec<Segment>, mut pulses: Vec<Pulse>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| invalid!("schedule needs at least one segment"))?;
        if first.start != 0.0 {
            return Err(invalid!("first segment must start at t = 0"));
        }
        let d = first.hamiltonian.dim();
        for (k, s) in segments.iter().enumerate() {
            if !(s.end > s.start) {
                return Err(invalid!("segment {k} is empty or reversed"));
            }
            if s.hamiltonian.dim() != d {
                return Err(invalid!("segment {k} has dimension {}, expected {d}", s.hamiltonian.dim()));
            }
            if k > 0 && segments[k - 1].end != s.start {
                return Err(invalid!("segments {} and {k} are not contiguous", k - 1));
            }
        }
        let duration = segments[segments.len() - 1].end;
        pulses.sort_by(|a, b| a.time.total_cmp(&b.time));
        for p in &pulses {
            if !(p.time > 0.0 && p.time < duration) {
                return Err(invalid!("pulse at t = {} lies outside (0, {duration})", p.time));
            }
            if p.unitary.shape() != (d, d) {
                return Err(invalid!("pulse unitary must be {d}×{d}"));
            }
            let dev = (p.unitary.adjoint() * &p.unitary - identity(d)).norm();
            if dev > 1e-12 {
                return Err(invalid!("pulse at t = {} is not unitary (‖U†U − 1‖ = {dev:.2e})", p.time));
            }
        }
        Ok(Self { segments, pulses })
    }

    pub fn constant(h: HermitianOperator, duration: f64) -> Result<Self> {
        Self::new(alloc::vec![Segment { start: 0.0, end: duration, hamiltonian: h }], Vec::new())
    }

    /// Pulses `u` at t = jΔt, j = 1, 2, …, strictly inside (0, duration).
    pub fn periodic_pulses(h: HermitianOperator, u: CMat, dt: f64, duration: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid!("pulse interval must be positive"));
        }
        let pulses = (1..).map(|j| j as f64 * dt).take_while(|&t| t < duration).map(|time| Pulse { time, unitary: u.clone() }).collect();
        Self::new(alloc::vec![Segment { start: 0.0, end: duration, hamiltonian: h }], pulses)
    }

    pub fn dim(&self) -> usize {
        self.segments[0].hamiltonian.dim()
    }

    pub fn duration(&self) -> f64 {
        self.segments[self.segments.len() - 1].end
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// H(t) on the half-open segment containing t (edges extended).
    pub fn hamiltonian_at(&self, t: f64) -> &HermitianOperator {
        let k = self.segments.iter().position(|s| t < s.end).unwrap_or(self.segments.len() - 1);
        &self.segments[k].hamiltonian
    }

    /// Times in (lo, hi) where the integrand of a window quadrature jumps.
    pub fn discontinuities(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .segments
            .iter()
            .map(|s| s.end)
            .chain(self.pulses.iter().map(|p| p.time))
            .filter(|&x| x > lo && x < hi)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Largest ‖H‖ over the segments (sets quadrature panel lengths).
    pub fn max_norm(&self) -> f64 {
        self.segments.iter().map(|s| operator_norm(s.hamiltonian.matrix()).unwrap_or(0.0)).fold(0.0, f64::max)
    }

    /// U(t₁, t₀) for t₁ ≥ t₀ with pulses in [t₀, t₁); any real times.
    fn forward(&self, t0: f64, t1: f64) -> Result<CMat> {
        let d = self.dim();
        let mut u = identity(d);
        let mut tau = t0;
        let mut events: Vec<(f64, Option<&CMat>)> =
            self.segments.iter().map(|s| (s.end, None)).filter(|(x, _)| *x > t0 && *x < t1).collect();
        events.extend(self.pulses.iter().filter(|p| p.time >= t0 && p.time < t1).map(|p| (p.time, Some(&p.unitary))));
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (at, pulse) in events {
            if at > tau {
                let h = self.hamiltonian_at(0.5 * (tau + at));
                u = unitary_evolution(h.matrix(), at - tau)? * u;
                tau = at;
            }
            if let Some(p) = pulse {
                u = p * u;
            }
        }
        if t1 > tau {
            let h = self.hamiltonian_at(0.5 * (tau + t1));
            u = unitary_evolution(h.matrix(), t1 - tau)? * u;
        }
        Ok(u)
    }

    /// U(t_to, t_from), with the adjoint for t_to < t_from.
    pub fn propagator(&self, t_from: f64, t_to: f64) -> Result<CMat> {
        let dur = self.duration();
        for t in [t_from, t_to] {
            if !(t >= 0.0 && t <= dur) {
                return Err(invalid!("time {t} outside the schedule [0, {dur}]"));
            }
        }
        self.propagator_extended(t_from, t_to)
    }

    /// As [`DriveSchedule::propagator`] but accepting times outside the schedule.
    pub fn propagator_extended(&self, t_from: f64, t_to: f64) -> Result<CMat> {
        if t_to >= t_from {
            self.forward(t_from, t_to)
        } else {
            Ok(self.forward(t_to, t_from)?.adjoint())
        }
    }
}

/// A(t′, t) = U†(t′, t)·A·U(t′, t).
pub fn heisenberg_a(sched: &DriveSchedule, a: &CMat, t_prime: f64, t: f64) -> Result<CMat> {
    let u = sched.propagator_extended(t, t_prime)?;
    Ok(u.adjoint() * a * u)
}

/// (−1)^{⌈x/Δt⌉}.
pub fn dd_sign(x: f64, dt: f64) -> f64 {
    if (libm::ceil(x / dt) as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Gauss nodes (s, w) on the window [lo, hi] (relative to `origin`), split
/// at the schedule's discontinuities and `extra` cuts, with panels no longer
/// than `max_len`.
fn window_nodes(sched: &DriveSchedule, origin: f64, lo: f64, hi: f64, extra: &[f64], max_len: f64, gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = sched.discontinuities(origin + lo, origin + hi).iter().map(|x| x - origin).collect();
    cuts.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    gl.composite(&quad::panel_breaks(lo, hi, &cuts, max_len))
}

fn panel_length(sched: &DriveSchedule, rates: &[f64]) -> f64 {
    let fastest = rates.iter().copied().fold(2.0 * sched.max_norm(), f64::max);
    if fastest > 0.0 {
        2.0 * PI / fastest
    } else {
        f64::INFINITY
    }
}

fn require_order(order: usize) -> Result<GaussLegendre> {
    if order < 2 {
        return Err(invalid!("quadrature order must be ≥ 2, got {order}"));
    }
    GaussLegendre::new(order)
}

/// A_ε(t) = √(γ(ε)/2πT_a)∫_{−T_a/2}^{T_a/2} e^{iεt₁}A(t+t₁, t)dt₁.
pub fn td_a_epsilon(sched: &DriveSchedule, a: &HermitianOperator, bath: &Bath, t: f64, eps: f64, t_a: f64, order: usize) -> Result<CMat> {
    let gl = require_order(order)?;
    if !(t_a > 0.0) {
        return Err(invalid!("T_a must be positive"));
    }
    let g = bath.gamma(eps);
    if g < 0.0 {
        return Err(invalid!("γ({eps}) < 0: A_ε undefined"));
    }
    let nodes = window_nodes(sched, t, -0.5 * t_a, 0.5 * t_a, &[], panel_length(sched, &[eps.abs()]), &gl);
    let d = sched.dim();
    let mut acc = CMat::zeros(d, d);
    for (s, w) in nodes {
        acc += heisenberg_a(sched, a.matrix(), t + s, t)? * (Complex64::cis(eps * s) * w);
    }
    Ok(acc * c(libm::sqrt(g / (2.0 * PI * t_a)), 0.0))
}

/// H_LS(t) = (i/2T_a)(X − X†), X = ∬_{t₁>t₂} C(t₂−t₁)A(t+t₂,t)A(t+t₁,t)
/// over the centered window.
pub fn td_lamb(sched: &DriveSchedule, a: &HermitianOperator, bath: &Bath, t: f64, t_a: f64, order: usize) -> Result<HermitianOperator> {
    let gl = require_order(order)?;
    if !(t_a > 0.0) {
        return Err(invalid!("T_a must be positive"));
    }
    let h = 0.5 * t_a;
    let len = panel_length(sched, &[bath.frequency_scale()]);
    let kinks = bath.correlation_breaks();
    let d = sched.dim();
    let mut x = CMat::zeros(d, d);
    for (t1, w1) in window_nodes(sched, t, -h, h, &[], len, &gl) {
        let a1 = heisenberg_a(sched, a.matrix(), t + t1, t)?;
        let inner_cuts: Vec<f64> = kinks.iter().map(|k| t1 - k).collect();
        for (t2, w2) in window_nodes(sched, t, -h, t1, &inner_cuts, len, &gl) {
            let a2 = heisenberg_a(sched, a.matrix(), t + t2, t)?;
            x += a2 * &a1 * (bath.correlation(t2 - t1)? * (w1 * w2));
        }
    }
    let lamb = (&x - x.adjoint()) * c(0.0, 0.5 / t_a);
    HermitianOperator::new(hermitian_part(&lamb))
}

/// A_f(t) = ∫₀^{cutoff} C(−t′)A(t−t′, t)dt′.
pub fn td_redfield_filter(sched: &DriveSchedule, a: &HermitianOperator, bath: &Bath, t: f64, history_cutoff: f64, order: usize) -> Result<CMat> {
    let gl = require_order(order)?;
    if !(history_cutoff > 0.0) {
        return Err(invalid!("history cutoff must be positive"));
    }
    let len = panel_length(sched, &[bath.frequency_scale()]);
    // Nodes in s = −t′ ∈ [−cutoff, 0].
    let kinks: Vec<f64> = bath.correlation_breaks().iter().map(|k| -k).collect();
    let d = sched.dim();
    let mut acc = CMat::zeros(d, d);
    for (s, w) in window_nodes(sched, t, -history_cutoff, 0.0, &kinks, len, &gl) {
        acc += heisenberg_a(sched, a.matrix(), t + s, t)? * (bath.correlation(s)? * w);
    }
    Ok(acc)
}

/// Whether a history cutoff spans the recommended three bath correlation times.
pub fn history_is_sufficient(history_cutoff: f64, tau_b: f64) -> bool {
    history_cutoff >= 3.0 * tau_b
}

/// A master equation whose generator depends on time, with instantaneous
/// pulses applied between integration intervals.
pub trait TimeDependentGenerator {
    fn dim(&self) -> usize;
    fn generator_at(&self, t: f64) -> Result<GeneratorSet>;
    fn pulses(&self) -> Vec<Pulse> {
        Vec::new()
    }
    /// Whether every generator is of Lindblad form.
    fn is_lindblad(&self) -> bool;
    /// Whether `generator_at` ignores t (lets integrators build it once).
    fn is_constant(&self) -> bool {
        false
    }
}

impl TimeDependentGenerator for GeneratorSet {
    fn dim(&self) -> usize {
        GeneratorSet::dim(self)
    }
    fn generator_at(&self, _t: f64) -> Result<GeneratorSet> {
        Ok(self.clone())
    }
    fn is_lindblad(&self) -> bool {
        GeneratorSet::is_lindblad(self)
    }
    fn is_constant(&self) -> bool {
        true
    }
}

/// Time-dependent CGME: Lindblad operators from the time-domain
/// coarse-graining kernel on Gauss nodes, Lamb shift from [`td_lamb`].
#[derive(Debug, Clone)]
pub struct TdCgme {
    pub schedule: DriveSchedule,
    pub coupling: HermitianOperator,
    pub bath: Bath,
    pub t_a: f64,
    pub lambless: bool,
    /// Gauss order per smooth panel for the dissipator.
    pub order: usize,
    /// Gauss order per panel for each Lamb-shift dimension.
    pub lamb_order: usize,
}

impl TdCgme {
    pub fn new(schedule: DriveSchedule, coupling: HermitianOperator, bath: Bath, t_a: f64) -> Result<Self> {
        if !(t_a > 0.0 && t_a.is_finite()) {
            return Err(invalid!("T_a must be positive"));
        }
        if coupling.dim() != schedule.dim() {
            return Err(invalid!("coupling and schedule dimensions differ"));
        }
        if !bath.is_positive() {
            return Err(invalid!("time-dependent CGME needs γ(ω) ≥ 0"));
        }
        Ok(Self { schedule, coupling, bath, t_a, lambless: false, order: 32, lamb_order: 16 })
    }

    /// Lindblad terms (λ_μ, L_μ) with L_μ = Σ_k u_μk A(t+t_k, t), from the
    /// PSD matrix M_kl = w_k w_l C(t_l − t_k)/T_a.
    pub fn lindblad_terms(&self, t: f64) -> Result<Vec<(f64, CMat)>> {
        let gl = require_order(self.order)?;
        let h = 0.5 * self.t_a;
        let len = panel_length(&self.schedule, &[self.bath.frequency_scale()]);
        let nodes = window_nodes(&self.schedule, t, -h, h, &[], len, &gl);
        let ops: Vec<CMat> = nodes
            .iter()
            .map(|(s, _)| heisenberg_a(&self.schedule, self.coupling.matrix(), t + s, t))
            .collect::<Result<_>>()?;
        let n = nodes.len();
        let mut m = CMat::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let v = self.bath.correlation(nodes[l].0 - nodes[k].0)? * (nodes[k].1 * nodes[l].1 / self.t_a);
                m[(k, l)] = v;
                m[(l, k)] = v.conj();
            }
        }
        let refs: Vec<&CMat> = ops.iter().collect();
        let mut terms = diagonalize_kossakowski(&m, &refs)?;
        let top = terms.iter().map(|(w, _)| *w).fold(0.0, f64::max);
        terms.retain(|(w, _)| *w > 1e-15 * top);
        Ok(terms)
    }
}

impl TimeDependentGenerator for TdCgme {
    fn dim(&self) -> usize {
        self.schedule.dim()
    }

    fn generator_at(&self, t: f64) -> Result<GeneratorSet> {
        let d = self.dim();
        let lamb = if self.lambless {
            CMat::zeros(d, d)
        } else {
            td_lamb(&self.schedule, &self.coupling, &self.bath, t, self.t_a, self.lamb_order)?.into_matrix()
        };
        let h_eff = HermitianOperator::new(self.schedule.hamiltonian_at(t).matrix() + &lamb)?;
        Ok(GeneratorSet {
            kind: EquationKind::CgmeFrequency,
            h_eff,
            lamb_shift: lamb,
            dissipator: Dissipator::Lindblad(self.lindblad_terms(t)?),
        })
    }

    fn pulses(&self) -> Vec<Pulse> {
        self.schedule.pulses().to_vec()
    }

    fn is_lindblad(&self) -> bool {
        true
    }
}

/// Time-dependent Redfield equation with a finite history window.
#[derive(Debug, Clone)]
pub struct TdRedfield {
    pub schedule: DriveSchedule,
    pub coupling: HermitianOperator,
    pub bath: Bath,
    pub history_cutoff: f64,
    pub order: usize,
}

impl TimeDependentGenerator for TdRedfield {
    fn dim(&self) -> usize {
        self.schedule.dim()
    }

    fn generator_at(&self, t: f64) -> Result<GeneratorSet> {
        let af = td_redfield_filter(&self.schedule, &self.coupling, &self.bath, t, self.history_cutoff, self.order)?;
        let d = self.dim();
        Ok(GeneratorSet {
            kind: EquationKind::Redfield,
            h_eff: self.schedule.hamiltonian_at(t).clone(),
            lamb_shift: CMat::zeros(d, d),
            dissipator: Dissipator::Redfield(alloc::vec![(self.coupling.matrix().clone(), af)]),
        })
    }

    fn pulses(&self) -> Vec<Pulse> {
        self.schedule.pulses().to_vec()
    }

    fn is_lindblad(&self) -> bool {
        false
    }
}

/// ∫_{−1/2}^{1/2} e^{iεζT_a}(−1)^{⌈(t+ζT_a)/Δt⌉ − ⌈t/Δt⌉}dζ, exactly, piece by piece.
pub fn dd_window_integral(eps: f64, t: f64, dt: f64, t_a: f64) -> Complex64 {
    let k = eps * t_a;
    let mut pts = alloc::vec![-0.5];
    let first = libm::ceil((t - 0.5 * t_a) / dt) as i64;
    let mut j = first;
    while (j as f64) * dt < t + 0.5 * t_a {
        let z = ((j as f64) * dt - t) / t_a;
        if z > -0.5 {
            pts.push(z);
        }
        j += 1;
    }
    pts.push(0.5);
    let base = dd_sign(t, dt);
    let mut acc = Complex64::new(0.0, 0.0);
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        // Sign is constant on (a, b]; sample inside.
        let s = dd_sign(t + 0.5 * (a + b) * t_a, dt) * base;
        acc += Complex64::cis(0.5 * k * (a + b)) * ((b - a) * sinc(0.5 * k * (b - a)) * s);
    }
    acc
}

/// ξ(t) = ∫γ(ε)|window integral|²dε / ∫γ(ε)sinc²(εT_a/2)dε.
pub fn dd_suppression_xi_at(bath: &Bath, dt: f64, t_a: f64, t: f64) -> Result<f64> {
    if !(dt > 0.0 && t_a > 0.0) {
        return Err(invalid!("Δt and T_a must be positive"));
    }
    let (lo, hi) = bath.frequency_window().ok_or_else(|| invalid!("ξ needs a decaying γ"))?;
    let breaks = quad::panel_breaks(lo, hi, &[0.0], PI / t_a.max(dt));
    let tol = Tolerance::new(1e-14, 1e-10).with_max_intervals(200_000);
    let num = quad::adaptive(|e| bath.gamma(e) * dd_window_integral(e, t, dt, t_a).norm_sqr(), &breaks, tol)?.value;
    let den = quad::adaptive(|e| bath.gamma(e) * sinc(0.5 * e * t_a).powi(2), &breaks, tol)?.value;
    Ok(num / den)
}

/// Suppression factor at t = ℓΔt with T_a = 4k′Δt.
pub fn dd_suppression_xi(bath: &Bath, dt: f64, k_prime: usize) -> Result<f64> {
    if k_prime == 0 {
        return Err(invalid!("k′ must be ≥ 1"));
    }
    if !bath.is_thermal() {
        return Err(invalid!("ξ is defined for thermal baths"));
    }
    dd_suppression_xi_at(bath, dt, 4.0 * k_prime as f64 * dt, 0.0)
}

/// Whether a drive keeps the Lamb shift Hermitian to roundoff.
pub fn lamb_is_hermitian(h: &CMat) -> bool {
    hermiticity_residual(h) < 1e-9
}
