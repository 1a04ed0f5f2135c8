//! Declarative experiment configuration (JSON) and its translation into
//! core objects. Relative file paths resolve against the config's directory.

use std::path::{Path, PathBuf};

use cgme_core::bath::{Bath, Tabulated};
use cgme_core::driving::{DriveSchedule, Pulse, Segment};
use cgme_core::evolve::IntegratorConfig;
use cgme_core::operator::{pauli_string, CMat, DensityMatrix, HermitianOperator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub bath: BathConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equations: Vec<EquationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dd: Option<DdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Directory that relative paths resolve against; set on load.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub qubits: u32,
    pub hamiltonian: OperatorSpec,
    pub couplings: Vec<OperatorSpec>,
    pub initial: InitialState,
}

/// `{"pauli": [[0.5, "ZI"], [1.0, "XI"]]}` or `{"matrix_file": "h.txt"}`.
/// Matrix files hold one row per line, entries `re` or `re:im`, `#` comments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Pauli(Vec<(f64, String)>),
    MatrixFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Computational basis state, most significant qubit first ("11").
    Bitstring(String),
    Basis(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathConfig {
    Toy {
        a: f64,
        b: f64,
        beta: f64,
        tau_sb: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cutoff: Option<f64>,
    },
    Ohmic {
        kappa: f64,
        omega_c: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cutoff: Option<f64>,
    },
    Rectangle {
        g: f64,
        tau_c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cutoff: Option<f64>,
    },
    /// Two whitespace-separated columns ω γ(ω).
    Tabulated {
        file: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cutoff: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationName {
    Cgme,
    CgmeDiscrete,
    Davies,
    Redfield,
    Ore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub kind: EquationName,
    /// Coarse-graining time in absolute units; CGME defaults to √(τ_Bτ_SB/5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_a: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lambless: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EquationConfig {
    pub fn name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let base = match self.kind {
            EquationName::Cgme => "cgme",
            EquationName::CgmeDiscrete => "cgme_discrete",
            EquationName::Davies => "davies",
            EquationName::Redfield => "redfield",
            EquationName::Ore => "ore",
        };
        if self.lambless {
            format!("{base}_lambless")
        } else {
            base.to_string()
        }
    }
}

/// t_max is in units of τ_SB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Coarse-graining time of every CGME equation (absolute units).
    TA,
    /// τ_SB of a toy bath.
    TauSb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk45,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: MethodName,
    pub atol: f64,
    pub rtol: f64,
    /// Fixed step for RK4.
    pub step: f64,
    pub positivity_tol: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { method: MethodName::Rk45, atol: 1e-10, rtol: 1e-8, step: 1e-2, positivity_tol: 1e-8 }
    }
}

impl IntegratorSection {
    pub fn to_core(&self) -> IntegratorConfig {
        let mut cfg = match self.method {
            MethodName::Rk45 => IntegratorConfig::rk45(self.atol, self.rtol),
            MethodName::Rk4 => IntegratorConfig::rk4(self.step),
        };
        cfg.positivity_tol = self.positivity_tol;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start: f64,
    pub end: f64,
    pub hamiltonian: OperatorSpec,
}

/// Instantaneous unitary given as a Pauli string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub time: f64,
    pub pauli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicPulses {
    pub pauli: String,
    pub dt: f64,
}

/// Piecewise-constant drive. Without segments the model Hamiltonian holds
/// over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<PulseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<PeriodicPulses>,
    /// History window of the driven Redfield equation (absolute units).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdConfig {
    #[serde(default = "one")]
    pub kappa: f64,
    pub betas: Vec<f64>,
    pub omega_cs: Vec<f64>,
    pub dts: Vec<f64>,
    /// T_a = 4k′Δt.
    #[serde(default = "one_usize")]
    pub k_prime: usize,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Rate Λ; defaults to 4/τ_SB.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    /// CGME coarse-graining time; defaults to √(τ_Bτ_SB/5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    pub samples: usize,
    /// Sampling window [0, t_max·τ_SB].
    pub t_max: f64,
    /// Externally quoted T_a to check against the formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quoted_t_a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Populations,
    Monitors,
    TraceDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub series: Vec<Series>,
    pub gnuplot: bool,
    /// ω grid for the bath report: (min, max, points).
    pub gamma_grid: (f64, f64, usize),
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            series: vec![Series::Populations, Series::Monitors, Series::TraceDistance],
            gnuplot: false,
            gamma_grid: (-10.0, 10.0, 401),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)
            .map_err(|e| config_err(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base).map_err(|e| match e {
            CliError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Structural checks that do not need the numerics.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.qubits == 0 || m.qubits > 6 {
            return Err(config_err(format!("model.qubits = {} must be in 1..=6", m.qubits)));
        }
        for (i, op) in std::iter::once(&m.hamiltonian).chain(&m.couplings).enumerate() {
            match op {
                OperatorSpec::Pauli(terms) => {
                    for (_, s) in terms {
                        if s.chars().count() != m.qubits as usize || !s.chars().all(|ch| "IXYZ".contains(ch)) {
                            return Err(config_err(format!("operator {i}: Pauli string {s:?} is not over {} qubits", m.qubits)));
                        }
                    }
                }
                OperatorSpec::MatrixFile(p) => {
                    if !self.resolve(p).is_file() {
                        return Err(config_err(format!("matrix file {} not found", p.display())));
                    }
                }
            }
        }
        if m.couplings.is_empty() {
            return Err(config_err("model.couplings must not be empty"));
        }
        if let InitialState::Bitstring(s) = &m.initial {
            if s.len() != m.qubits as usize || !s.chars().all(|ch| ch == '0' || ch == '1') {
                return Err(config_err(format!("initial bitstring {s:?} is not over {} qubits", m.qubits)));
            }
        }
        if let BathConfig::Tabulated { file, .. } = &self.bath {
            if !self.resolve(file).is_file() {
                return Err(config_err(format!("bath file {} not found", file.display())));
            }
        }
        if let Some(g) = &self.grid {
            if !(g.t_max > 0.0) || g.points < 2 {
                return Err(config_err("grid needs t_max > 0 and points ≥ 2"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(config_err("sweep.values must not be empty"));
            }
            if s.parameter == SweepParameter::TauSb && !matches!(self.bath, BathConfig::Toy { .. }) {
                return Err(config_err("a tau_sb sweep needs a toy bath"));
            }
        }
        let mut names: Vec<String> = self.equations.iter().map(EquationConfig::name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("equation labels must be unique"));
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<HermitianOperator> {
        self.operator(&self.model.hamiltonian)
    }

    pub fn couplings(&self) -> Result<Vec<HermitianOperator>> {
        self.model.couplings.iter().map(|o| self.operator(o)).collect()
    }

    pub fn operator(&self, spec: &OperatorSpec) -> Result<HermitianOperator> {
        let d = 1usize << self.model.qubits;
        let m = match spec {
            OperatorSpec::Pauli(terms) => {
                let mut m = CMat::zeros(d, d);
                for (coef, s) in terms {
                    m += pauli_string(s).map_err(CliError::from_core_config)? * Complex64::new(*coef, 0.0);
                }
                m
            }
            OperatorSpec::MatrixFile(p) => read_matrix(&self.resolve(p), d)?,
        };
        HermitianOperator::new(m).map_err(CliError::from_core_config)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let d = 1usize << self.model.qubits;
        let k = match &self.model.initial {
            InitialState::Bitstring(s) => usize::from_str_radix(s, 2).map_err(|e| config_err(format!("bitstring: {e}")))?,
            InitialState::Basis(k) => *k,
        };
        DensityMatrix::basis(d, k).map_err(CliError::from_core_config)
    }

    pub fn bath(&self) -> Result<Bath> {
        let b = match &self.bath {
            BathConfig::Toy { a, b, beta, tau_sb, .. } => Bath::toy(*a, *b, *beta, *tau_sb),
            BathConfig::Ohmic { kappa, omega_c, beta, .. } => Bath::ohmic(*kappa, *omega_c, *beta),
            BathConfig::Rectangle { g, tau_c, .. } => Bath::rectangle(*g, *tau_c),
            BathConfig::Tabulated { file, beta, .. } => {
                let (w, g) = read_columns(&self.resolve(file))?;
                Tabulated::new(w, g, *beta).and_then(Bath::tabulated)
            }
        };
        b.map_err(CliError::from_core_config)
    }

    pub fn t_cutoff(&self) -> Option<f64> {
        match &self.bath {
            BathConfig::Toy { t_cutoff, .. }
            | BathConfig::Ohmic { t_cutoff, .. }
            | BathConfig::Rectangle { t_cutoff, .. }
            | BathConfig::Tabulated { t_cutoff, .. } => *t_cutoff,
        }
    }

    /// Copy with the toy bath's τ_SB replaced.
    pub fn with_tau_sb(&self, v: f64) -> Self {
        let mut c = self.clone();
        if let BathConfig::Toy { tau_sb, .. } = &mut c.bath {
            *tau_sb = v;
        }
        c
    }

    /// Drive schedule over [0, duration], if a drive section is present.
    pub fn schedule(&self, duration: f64) -> Result<Option<DriveSchedule>> {
        let Some(dr) = &self.drive else { return Ok(None) };
        let segments = if dr.segments.is_empty() {
            vec![Segment { start: 0.0, end: duration, hamiltonian: self.hamiltonian()? }]
        } else {
            dr.segments
                .iter()
                .map(|s| Ok(Segment { start: s.start, end: s.end, hamiltonian: self.operator(&s.hamiltonian)? }))
                .collect::<Result<_>>()?
        };
        let mut pulses: Vec<Pulse> = dr
            .pulses
            .iter()
            .map(|p| Ok(Pulse { time: p.time, unitary: pauli_string(&p.pauli).map_err(CliError::from_core_config)? }))
            .collect::<Result<_>>()?;
        if let Some(per) = &dr.periodic {
            if !(per.dt > 0.0) {
                return Err(config_err("drive.periodic.dt must be positive"));
            }
            let u = pauli_string(&per.pauli).map_err(CliError::from_core_config)?;
            let end = segments.last().map_or(duration, |s| s.end);
            let mut j = 1;
            while (j as f64) * per.dt < end {
                pulses.push(Pulse { time: j as f64 * per.dt, unitary: u.clone() });
                j += 1;
            }
        }
        DriveSchedule::new(segments, pulses).map(Some).map_err(CliError::from_core_config)
    }
}

fn data_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().map(str::to_string).collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty())
        .collect())
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| config_err(format!("{}:{line}: bad number {s:?}", path.display())))
}

fn read_matrix(path: &Path, d: usize) -> Result<CMat> {
    let rows = data_lines(path)?;
    if rows.len() != d {
        return Err(config_err(format!("{}: expected {d} rows, found {}", path.display(), rows.len())));
    }
    let mut m = CMat::zeros(d, d);
    for (r, (line, fields)) in rows.iter().enumerate() {
        if fields.len() != d {
            return Err(config_err(format!("{}:{line}: expected {d} entries", path.display())));
        }
        for (col, f) in fields.iter().enumerate() {
            let (re, im) = match f.split_once(':') {
                Some((a, b)) => (parse_f64(path, *line, a)?, parse_f64(path, *line, b)?),
                None => (parse_f64(path, *line, f)?, 0.0),
            };
            m[(r, col)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

fn read_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut w = Vec::new();
    let mut g = Vec::new();
    for (line, fields) in data_lines(path)? {
        if fields.len() != 2 {
            return Err(config_err(format!("{}:{line}: expected two columns", path.display())));
        }
        w.push(parse_f64(path, line, &fields[0])?);
        g.push(parse_f64(path, line, &fields[1])?);
    }
    Ok((w, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BENCH: &str = r#"{
        "model": {
            "qubits": 2,
            "hamiltonian": {"pauli": [[0.5, "ZI"], [-0.7, "IZ"], [0.3, "ZZ"], [1.0, "XI"], [1.0, "IX"]]},
            "couplings": [{"pauli": [[1.0, "ZI"]]}],
            "initial": {"bitstring": "11"}
        },
        "bath": {"kind": "toy", "a": 1.01, "b": 0.6, "beta": 4.0, "tau_sb": 10.0},
        "equations": [{"kind": "ore"}, {"kind": "cgme", "t_a": 2.0}, {"kind": "davies"}],
        "grid": {"t_max": 0.5, "points": 11},
        "sweep": {"parameter": "t_a", "values": [1.0, 2.0]}
    }"#;

    #[test]
    fn round_trip_is_idempotent() {
        let a = ExperimentConfig::from_json(BENCH, Path::new(".")).unwrap();
        let text = a.to_json();
        let b = ExperimentConfig::from_json(&text, Path::new(".")).unwrap();
        assert_eq!(a, b);
        assert_eq!(text, b.to_json());
    }

    #[test]
    fn benchmark_operators_match_core_model() {
        let cfg = ExperimentConfig::from_json(BENCH, Path::new(".")).unwrap();
        let m = cgme_core::models::two_qubit_benchmark().unwrap();
        assert_eq!(cfg.hamiltonian().unwrap(), m.hamiltonian);
        assert_eq!(cfg.couplings().unwrap()[0], m.coupling);
        assert_eq!(cfg.initial_state().unwrap(), m.initial);
    }

    #[test]
    fn malformed_configs_are_config_errors() {
        let bad_pauli = BENCH.replace("\"ZZ\"", "\"ZQ\"");
        let unknown = BENCH.replace("\"grid\"", "\"gird\"");
        let syntax = BENCH.replace("\"qubits\": 2,", "\"qubits\": 2");
        for text in [bad_pauli, unknown, syntax] {
            assert!(matches!(ExperimentConfig::from_json(&text, Path::new(".")), Err(CliError::Config(_))));
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let syntax = BENCH.replace("\"qubits\": 2,", "\"qubits\": 2");
        let Err(CliError::Config(msg)) = ExperimentConfig::from_json(&syntax, Path::new(".")) else { panic!() };
        assert!(msg.starts_with("line 4"), "{msg}");
    }

    #[test]
    fn matrix_files_and_tables_parse() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "# σ_y\n0 0:-1\n0:1 0\n").unwrap();
        std::fs::write(dir.path().join("g.txt"), "# ω γ\n-3 0\n-1 0.5\n0 1\n1 2 # peak\n3 0\n").unwrap();
        let text = r#"{
            "model": {"qubits": 1, "hamiltonian": {"pauli": [[1.0, "Z"]]},
                      "couplings": [{"matrix_file": "a.txt"}], "initial": {"basis": 0}},
            "bath": {"kind": "tabulated", "file": "g.txt"}
        }"#;
        let cfg = ExperimentConfig::from_json(text, dir.path()).unwrap();
        assert_eq!(cfg.couplings().unwrap()[0].matrix(), &pauli_string("Y").unwrap());
        assert!((cfg.bath().unwrap().gamma(1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_pulses_fill_the_schedule() {
        let text = BENCH.replace("\"grid\"", "\"drive\": {\"periodic\": {\"pauli\": \"XI\", \"dt\": 0.5}}, \"grid\"");
        let cfg = ExperimentConfig::from_json(&text, Path::new(".")).unwrap();
        let s = cfg.schedule(2.0).unwrap().unwrap();
        let times: Vec<f64> = s.pulses().iter().map(|p| p.time).collect();
        assert_eq!(times, vec![0.5, 1.0, 1.5]);
    }
}
