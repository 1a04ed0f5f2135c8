//! Density-matrix integration for every equation kind, the Original
//! Redfield equation with its growing memory integral, and trajectory
//! monitors.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bath::Bath;
use crate::driving::{Pulse, TimeDependentGenerator};
use crate::error::{invalid, numeric, Result};
use crate::generators::{decompose_coupling, Dissipator, EquationKind, GeneratorSet, JumpDecomposition};
use crate::operator::{c, eigensystem, hermitian_part, hermiticity_residual, min_eigenvalue, trace, trace_norm, CMat, DensityMatrix, HermitianOperator, Superoperator};
use crate::quad::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4Fixed { step: f64 },
    /// Dormand–Prince 5(4) with per-entry mixed error control.
    Rk45Adaptive { atol: f64, rtol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Eigenvalues above −positivity_tol count as positive.
    pub positivity_tol: f64,
    /// Run-wide eigenvalue monitor every this many accepted steps.
    pub monitor_cadence: usize,
    pub max_steps: usize,
    /// Original Redfield kernel samples per bath correlation time.
    pub kernel_points_per_tau_b: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive { atol: 1e-10, rtol: 1e-8 },
            positivity_tol: 1e-8,
            monitor_cadence: 1,
            max_steps: 5_000_000,
            kernel_points_per_tau_b: 400.0,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self { method: Method::Rk4Fixed { step }, ..Self::default() }
    }

    pub fn rk45(atol: f64, rtol: f64) -> Self {
        Self { method: Method::Rk45Adaptive { atol, rtol }, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Rk4Fixed { step } => step > 0.0,
            Method::Rk45Adaptive { atol, rtol } => atol > 0.0 && rtol > 0.0,
        };
        if !ok || !(self.positivity_tol >= 0.0) || self.monitor_cadence == 0 || !(self.kernel_points_per_tau_b > 0.0) {
            return Err(invalid!("integrator tolerances and step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    /// |Tr ρ − 1|.
    pub trace_deviation: f64,
    pub hermiticity_deviation: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl Monitor {
    pub fn of(rho: &CMat) -> Result<Self> {
        Ok(Self {
            trace_deviation: (trace(rho) - 1.0).norm(),
            hermiticity_deviation: hermiticity_residual(rho),
            min_eigenvalue: min_eigenvalue(&hermitian_part(rho))?,
        })
    }
}

/// Trajectory on the requested grid. States are plain matrices because
/// non-CP equations may leave the set of density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    /// ρ̇ at each grid time (from the right, after any pulse at that time),
    /// used for Hermite interpolation between grid points.
    pub derivatives: Vec<CMat>,
    pub monitors: Vec<Monitor>,
    pub kind: Option<EquationKind>,
    pub t_a: Option<f64>,
    /// FNV-1a hash of the bath parameters.
    pub bath_hash: Option<u64>,
    /// Smallest eigenvalue seen on any monitored step, and when.
    pub run_min_eigenvalue: (f64, f64),
    pub accepted_steps: usize,
    pub pulses: Vec<f64>,
}

impl EvolutionResult {
    pub fn final_state(&self) -> &CMat {
        &self.states[self.states.len() - 1]
    }

    pub fn max_trace_deviation(&self) -> f64 {
        self.monitors.iter().map(|m| m.trace_deviation).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_deviation(&self) -> f64 {
        self.monitors.iter().map(|m| m.hermiticity_deviation).fold(0.0, f64::max)
    }

    /// Cubic Hermite interpolation of ρ(t) inside the grid. Pulse times
    /// are grid-aligned only if the caller put them on the grid.
    pub fn interpolate(&self, t: f64) -> Result<CMat> {
        let n = self.times.len();
        if !(t >= self.times[0] && t <= self.times[n - 1]) {
            return Err(invalid!("t = {t} outside the trajectory"));
        }
        let k = self.times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(&self.states[k] * c(h00, 0.0)
            + &self.derivatives[k] * c(h10 * h, 0.0)
            + &self.states[k + 1] * c(h01, 0.0)
            + &self.derivatives[k + 1] * c(h11 * h, 0.0))
    }
}

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn bath_hash(bath: &Bath) -> u64 {
    fnv1a(alloc::format!("{:?}", bath.kind()).as_bytes())
}

struct Rhs<'a> {
    source: &'a dyn TimeDependentGenerator,
    /// Vectorized form of a constant generator, built on first use.
    cached: Option<Superoperator>,
}

impl Rhs<'_> {
    fn eval(&mut self, t: f64, rho: &CMat) -> Result<CMat> {
        if let Some(s) = &self.cached {
            return Ok(s.apply(rho));
        }
        let g = self.source.generator_at(t)?;
        if self.source.is_constant() {
            let s = g.superoperator()?;
            let out = s.apply(rho);
            self.cached = Some(s);
            return Ok(out);
        }
        Ok(g.apply(rho))
    }
}

fn rk4_step(rhs: &mut Rhs, t: f64, y: &CMat, h: f64) -> Result<CMat> {
    let k1 = rhs.eval(t, y)?;
    let k2 = rhs.eval(t + 0.5 * h, &(y + &k1 * c(0.5 * h, 0.0)))?;
    let k3 = rhs.eval(t + 0.5 * h, &(y + &k2 * c(0.5 * h, 0.0)))?;
    let k4 = rhs.eval(t + h, &(y + &k3 * c(h, 0.0)))?;
    Ok(y + (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0))
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step: (y_new, error estimate, derivative at the end).
fn dp_step(rhs: &mut Rhs, t: f64, y: &CMat, k0: &CMat, h: f64) -> Result<(CMat, CMat, CMat)> {
    let mut ks: Vec<CMat> = Vec::with_capacity(7);
    ks.push(k0.clone());
    for s in 1..7 {
        let mut arg = y.clone();
        for (j, a) in DP_A[s].iter().enumerate() {
            if *a != 0.0 {
                arg += &ks[j] * c(h * a, 0.0);
            }
        }
        ks.push(rhs.eval(t + DP_C[s] * h, &arg)?);
    }
    // Stage 7 is evaluated at y_new (FSAL).
    let mut y_new = y.clone();
    for (j, a) in DP_A[6].iter().enumerate() {
        if *a != 0.0 {
            y_new += &ks[j] * c(h * a, 0.0);
        }
    }
    let mut err = CMat::zeros(y.nrows(), y.ncols());
    for (j, e) in DP_E.iter().enumerate() {
        if *e != 0.0 {
            err += &ks[j] * c(h * e, 0.0);
        }
    }
    let k_end = ks.pop().expect("seven stages");
    Ok((y_new, err, k_end))
}

fn error_ratio(err: &CMat, y0: &CMat, y1: &CMat, atol: f64, rtol: f64) -> f64 {
    err.iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| e.norm() / (atol + rtol * a.norm().max(b.norm())))
        .fold(0.0, f64::max)
}

struct Tracker {
    cadence: usize,
    accepted: usize,
    min: (f64, f64),
}

impl Tracker {
    fn accept(&mut self, t: f64, rho: &CMat) -> Result<()> {
        self.accepted += 1;
        if self.accepted.is_multiple_of(self.cadence) {
            let m = min_eigenvalue(&hermitian_part(rho))?;
            if m < self.min.0 {
                self.min = (m, t);
            }
        }
        Ok(())
    }
}

/// Integrates from `t0` to `t1` (no pulses strictly inside).
fn integrate(rhs: &mut Rhs, cfg: &IntegratorConfig, t0: f64, t1: f64, y: CMat, h_hint: &mut f64, tracker: &mut Tracker) -> Result<CMat> {
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y);
    }
    let mut t = t0;
    let mut y = y;
    match cfg.method {
        Method::Rk4Fixed { step } => {
            let n = libm::ceil(span / step - 1e-9).max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                y = rk4_step(rhs, t, &y, h)?;
                t = t0 + (i + 1) as f64 * h;
                tracker.accept(t, &y)?;
            }
        }
        Method::Rk45Adaptive { atol, rtol } => {
            let mut k0 = rhs.eval(t, &y)?;
            let mut h = if *h_hint > 0.0 { h_hint.min(span) } else { (1e-2 * y.norm() / k0.norm().max(1e-300)).min(span) };
            let mut steps = 0usize;
            while t < t1 {
                let last = t + h >= t1 - 1e-12 * span;
                let h_try = if last { t1 - t } else { h };
                let (y_new, err, k_end) = dp_step(rhs, t, &y, &k0, h_try)?;
                let ratio = error_ratio(&err, &y, &y_new, atol, rtol);
                if ratio.is_finite() && ratio <= 1.0 {
                    t = if last { t1 } else { t + h_try };
                    y = y_new;
                    k0 = k_end;
                    tracker.accept(t, &y)?;
                    steps += 1;
                    if steps > cfg.max_steps {
                        return Err(numeric!("step budget exhausted at t = {t}"));
                    }
                }
                let factor = if ratio.is_finite() && ratio > 0.0 { 0.9 * libm::pow(ratio, -0.2) } else if ratio == 0.0 { 5.0 } else { 0.1 };
                h = h_try * factor.clamp(0.1, 5.0);
                if !last || ratio > 1.0 {
                    *h_hint = h;
                }
                if h < 1e-14 * (t.abs() + span) {
                    return Err(numeric!("step size collapsed at t = {t}"));
                }
            }
        }
    }
    Ok(y)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(invalid!("time grid needs at least two points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid!("time grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Integrates ρ̇ = 𝓛_t(ρ) with ρ(grid[0]) = ρ₀, applying pulses ρ → UρU†
/// at their times (a pulse at a grid time acts after that sample).
pub fn evolve(gen: &dyn TimeDependentGenerator, rho0: &DensityMatrix, grid: &[f64], cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    cfg.validate()?;
    check_grid(grid)?;
    if gen.dim() != rho0.dim() {
        return Err(invalid!("generator dimension {} does not match state dimension {}", gen.dim(), rho0.dim()));
    }
    let pulses: Vec<Pulse> = gen.pulses().into_iter().filter(|p| p.time >= grid[0] && p.time < grid[grid.len() - 1]).collect();
    let mut rhs = Rhs { source: gen, cached: None };
    let mut tracker = Tracker { cadence: cfg.monitor_cadence, accepted: 0, min: (f64::INFINITY, grid[0]) };
    let mut y = rho0.matrix().clone();
    let mut h_hint = 0.0;
    let mut pi = 0;
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    let mut derivatives = Vec::with_capacity(grid.len());
    let mut monitors = Vec::with_capacity(grid.len());
    let mut t = grid[0];
    for (gi, &tg) in grid.iter().enumerate() {
        while pi < pulses.len() && pulses[pi].time < tg {
            let p = &pulses[pi];
            y = integrate(&mut rhs, cfg, t, p.time, y, &mut h_hint, &mut tracker)?;
            t = p.time;
            y = &p.unitary * &y * p.unitary.adjoint();
            pi += 1;
        }
        y = integrate(&mut rhs, cfg, t, tg, y, &mut h_hint, &mut tracker)?;
        t = tg;
        let m = Monitor::of(&y)?;
        if m.min_eigenvalue < tracker.min.0 {
            tracker.min = (m.min_eigenvalue, tg);
        }
        monitors.push(m);
        times.push(tg);
        states.push(y.clone());
        // Derivative from the right of any pulse at this time.
        let mut y_after = y.clone();
        while pi < pulses.len() && pulses[pi].time == tg && gi + 1 < grid.len() {
            y_after = &pulses[pi].unitary * &y_after * pulses[pi].unitary.adjoint();
            pi += 1;
        }
        derivatives.push(rhs.eval(tg, &y_after)?);
        y = y_after;
    }
    Ok(EvolutionResult {
        times,
        states,
        derivatives,
        monitors,
        kind: None,
        t_a: None,
        bath_hash: None,
        run_min_eigenvalue: tracker.min,
        accepted_steps: tracker.accepted,
        pulses: pulses.iter().map(|p| p.time).collect(),
    })
}

/// Evolves a time-independent generator and tags the result.
pub fn evolve_generator(gen: &GeneratorSet, bath: Option<&Bath>, t_a: Option<f64>, rho0: &DensityMatrix, grid: &[f64], cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    let mut res = evolve(gen, rho0, grid, cfg)?;
    res.kind = Some(gen.kind);
    res.t_a = t_a;
    res.bath_hash = bath.map(bath_hash);
    Ok(res)
}

/// G_ω(t) = ∫₀^t C*(s)e^{iωs}ds tabulated on a uniform grid, with
/// cubic Hermite interpolation (the derivative is known exactly).
#[derive(Debug, Clone)]
pub struct OreKernel {
    jd: JumpDecomposition,
    step: f64,
    nodes: usize,
    values: Vec<Vec<Complex64>>,
    slopes: Vec<Vec<Complex64>>,
}

impl OreKernel {
    pub fn new(jd: JumpDecomposition, bath: &Bath, t_max: f64, step: f64) -> Result<Self> {
        if !(t_max > 0.0 && step > 0.0) {
            return Err(invalid!("kernel range and step must be positive"));
        }
        let n = libm::ceil(t_max / step) as usize + 1;
        let gl = GaussLegendre::new(8)?;
        let cs: Vec<Complex64> = (0..n).map(|i| bath.correlation(i as f64 * step).map(|z| z.conj())).collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(jd.terms.len());
        let mut slopes = Vec::with_capacity(jd.terms.len());
        for (w, _) in &jd.terms {
            let mut g = Vec::with_capacity(n);
            let mut acc = Complex64::new(0.0, 0.0);
            g.push(acc);
            for i in 1..n {
                let (a, b) = ((i - 1) as f64 * step, i as f64 * step);
                let mut piece = Complex64::new(0.0, 0.0);
                for (s, wt) in gl.panel(a, b) {
                    piece += bath.correlation(s)?.conj() * Complex64::cis(w * s) * wt;
                }
                acc += piece;
                g.push(acc);
            }
            values.push(g);
            slopes.push(cs.iter().enumerate().map(|(i, z)| z * Complex64::cis(w * i as f64 * step)).collect());
        }
        Ok(Self { jd, step, nodes: n, values, slopes })
    }

    pub fn t_max(&self) -> f64 {
        (self.nodes - 1) as f64 * self.step
    }

    pub fn g(&self, k: usize, t: f64) -> Result<Complex64> {
        let v = &self.values[k];
        if !(t >= 0.0 && t <= self.t_max() * (1.0 + 1e-12)) {
            return Err(invalid!("t = {t} outside the memory-kernel table"));
        }
        let i = ((t / self.step) as usize).min(v.len() - 2);
        let s = t / self.step - i as f64;
        let h = self.step;
        let m = &self.slopes[k];
        let (s2, s3) = (s * s, s * s * s);
        Ok(v[i] * (2.0 * s3 - 3.0 * s2 + 1.0) + m[i] * ((s3 - 2.0 * s2 + s) * h) + v[i + 1] * (-2.0 * s3 + 3.0 * s2) + m[i + 1] * ((s3 - s2) * h))
    }

    /// A_f(t) = ∫₀^t C(−s)A(−s)ds = Σ_ω G_ω(t)A_ω.
    pub fn filtered(&self, t: f64) -> Result<CMat> {
        let d = self.jd.dim();
        let mut af = CMat::zeros(d, d);
        for (k, (_, a)) in self.jd.terms.iter().enumerate() {
            af += a * self.g(k, t)?;
        }
        Ok(af)
    }
}

/// Original Redfield generator: Redfield's pair form with A_f(t).
pub struct OreGenerator {
    pub hamiltonian: HermitianOperator,
    pub coupling: CMat,
    pub kernel: OreKernel,
}

impl TimeDependentGenerator for OreGenerator {
    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn generator_at(&self, t: f64) -> Result<GeneratorSet> {
        let d = self.dim();
        Ok(GeneratorSet {
            kind: EquationKind::Ore,
            h_eff: self.hamiltonian.clone(),
            lamb_shift: CMat::zeros(d, d),
            dissipator: Dissipator::Redfield(alloc::vec![(self.coupling.clone(), self.kernel.filtered(t)?)]),
        })
    }

    fn is_lindblad(&self) -> bool {
        false
    }
}

/// Original Redfield run from t = 0. The grid must start at 0.
pub fn evolve_ore(h: &HermitianOperator, a: &HermitianOperator, bath: &Bath, rho0: &DensityMatrix, grid: &[f64], cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    cfg.validate()?;
    check_grid(grid)?;
    if grid[0] != 0.0 {
        return Err(invalid!("the Original Redfield memory starts at t = 0; the grid must too"));
    }
    let t_end = grid[grid.len() - 1];
    let ts = bath.timescales(None).or_else(|_| bath.timescales(Some(t_end)))?;
    let jd = decompose_coupling(&eigensystem(h, None)?, a, None)?;
    let kernel = OreKernel::new(jd, bath, t_end, ts.tau_b / cfg.kernel_points_per_tau_b)?;
    let gen = OreGenerator { hamiltonian: h.clone(), coupling: a.matrix().clone(), kernel };
    let mut res = evolve(&gen, rho0, grid, cfg)?;
    res.kind = Some(EquationKind::Ore);
    res.bath_hash = Some(bath_hash(bath));
    Ok(res)
}

/// First time the minimum eigenvalue drops below −tol, bisected between
/// the bracketing grid points on the interpolated trajectory to `resolution`.
pub fn positivity_crossing(res: &EvolutionResult, tol: f64, resolution: f64) -> Result<Option<f64>> {
    let Some(k) = res.monitors.iter().position(|m| m.min_eigenvalue < -tol) else {
        return Ok(None);
    };
    if k == 0 {
        return Ok(Some(res.times[0]));
    }
    let below = |t: f64| -> Result<bool> { Ok(min_eigenvalue(&hermitian_part(&res.interpolate(t)?))? < -tol) };
    let (mut lo, mut hi) = (res.times[k - 1], res.times[k]);
    // The interpolant may dip earlier inside the bracket; scan before bisecting.
    let probes = 16;
    for j in 1..probes {
        let t = lo + (hi - lo) * j as f64 / probes as f64;
        if below(t)? {
            hi = t;
            break;
        }
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// ‖ρ_a(t) − ρ_b(t)‖₁ on the shared grid and its trapezoid time average.
pub fn trace_distance_series(a: &EvolutionResult, b: &EvolutionResult) -> Result<(Vec<f64>, f64)> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
        return Err(invalid!("trajectories are on different grids"));
    }
    let d: Vec<f64> = a.states.iter().zip(&b.states).map(|(x, y)| trace_norm(&(x - y))).collect::<Result<_>>()?;
    let span = a.times[a.times.len() - 1] - a.times[0];
    let integral: f64 = a.times.windows(2).zip(d.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum();
    Ok((d, integral / span))
}

/// Uniform grid of `points` samples on [0, t_max].
pub fn uniform_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(t_max > 0.0) {
        return Err(invalid!("grid needs t_max > 0 and at least two points"));
    }
    Ok((0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect())
}

/// Human-readable one-line monitor summary.
pub fn monitor_summary(res: &EvolutionResult) -> String {
    alloc::format!(
        "steps {}, max |Tr ρ − 1| {:.2e}, max Hermiticity residual {:.2e}, min eigenvalue {:.3e} at t = {:.4}",
        res.accepted_steps,
        res.max_trace_deviation(),
        res.max_hermiticity_deviation(),
        res.run_min_eigenvalue.0,
        res.run_min_eigenvalue.1
    )
}
