//! Command-line front end: parameter scans over state families, scans over
//! the number of measurements, and single-behavior queries.
//!
//! Scans write CSV: `#` metadata lines, a header, one row per grid point and
//! `#` footer lines with the argmax and interior local minima of each
//! requested quantifier column. Output never depends on the thread count.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::montecarlo::{derive_seed, MonteCarloError, SamplerSpec, VolumeEstimator, DEFAULT_TOL};
use crate::polytope::{
    bell_value, cglmp_optimal_settings, enumerate_strategies, functional_by_name,
    trace_distance_to_local, Behavior, BellFunctional, PolytopeError, MAX_STRATEGIES,
};
use crate::quantum::{behavior_from, ghz_alpha, psi_alpha, psi_gamma, PureState, SettingKind};

/// Weights at or below this are left out of the `distance` report.
const WEIGHT_PRINT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation error: {0}")]
    Computation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl CliError {
    /// Process exit code: 2 configuration, 3 computation, 4 parse.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Computation(_) => 3,
            CliError::Parse(_) => 4,
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Config(_) | MonteCarloError::Polytope(PolytopeError::Capacity { .. }) => {
                CliError::Config(e.to_string())
            }
            MonteCarloError::Sink(_) => CliError::Config(e.to_string()),
            other => CliError::Computation(other.to_string()),
        }
    }
}

fn computation(e: impl fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

/// Parametrized state families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// `alpha|00> + sqrt(1 - alpha^2)|11>`
    PsiAlpha,
    /// `(|00> + gamma|11> + |22>) / sqrt(2 + gamma^2)`
    PsiGamma,
    /// `sin(a)|00> + cos(a)/sqrt(2) (|11> + |22>)`, `a` in degrees
    GhzAlpha,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PsiAlpha => "psi-alpha",
            Family::PsiGamma => "psi-gamma",
            Family::GhzAlpha => "ghz-alpha",
        }
    }

    pub fn state(self, param: f64) -> Result<PureState, CliError> {
        match self {
            Family::PsiAlpha => psi_alpha(param),
            Family::PsiGamma => psi_gamma(param),
            Family::GhzAlpha => ghz_alpha(param),
        }
        .map_err(|e| CliError::Config(format!("{}({param}): {e}", self.name())))
    }

    pub fn local_dim(self) -> usize {
        match self {
            Family::PsiAlpha => 2,
            Family::PsiGamma | Family::GhzAlpha => 3,
        }
    }

    /// Closed-form entanglement entropy in bits.
    pub fn entropy_bits(self, param: f64) -> f64 {
        match self {
            Family::PsiAlpha => {
                let p = param * param;
                shannon_bits(&[p, 1.0 - p])
            }
            Family::PsiGamma => {
                let n = 2.0 + param * param;
                shannon_bits(&[1.0 / n, param * param / n, 1.0 / n])
            }
            Family::GhzAlpha => {
                let a = param.to_radians();
                let c = a.cos() * a.cos() / 2.0;
                shannon_bits(&[a.sin() * a.sin(), c, c])
            }
        }
    }
}

fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum::<f64>().max(0.0)
}

/// `start:stop:step`, inclusive of `stop` when it lies on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, String> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if step <= 0.0 {
            return Err(format!("grid step {step} must be > 0"));
        }
        if stop < start {
            return Err(format!("grid stop {stop} is below start {start}"));
        }
        Ok(Self { start, stop, step })
    }

    /// Grid points `start + i step`, rounded to 12 decimals so that decimal
    /// steps land on their nominal values.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got '{s}'"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
        Grid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{:?}", self.start, self.stop, self.step)
    }
}

/// Parses `qubit:<n>` or `qutrit:<n>`.
pub fn parse_sampler(s: &str) -> Result<SamplerSpec, String> {
    let (kind, n) = s
        .split_once(':')
        .ok_or_else(|| format!("expected qubit:<n> or qutrit:<n>, got '{s}'"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("measurement count '{n}': {e}"))?;
    let spec = match kind.trim() {
        "qubit" => SamplerSpec::qubit(n),
        "qutrit" => SamplerSpec::qutrit(n),
        other => return Err(format!("unknown sampler '{other}'")),
    };
    spec.map_err(|e| e.to_string())
}

fn sampler_label(spec: &SamplerSpec) -> String {
    let kind = match spec.kind {
        SettingKind::QubitBloch => "qubit",
        SettingKind::QutritReck => "qutrit",
    };
    format!("{kind}:{}", spec.measurements_per_party)
}

/// Columns a scan reports on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Volume,
    TraceWeighted,
    Violation(String),
}

impl FromStr for Quantifier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "volume" => Ok(Quantifier::Volume),
            "trace-weighted" => Ok(Quantifier::TraceWeighted),
            other => match other.strip_prefix("violation:") {
                Some(name) => {
                    functional_by_name(name).map_err(|e| e.to_string())?;
                    Ok(Quantifier::Violation(name.to_string()))
                }
                None => Err(format!(
                    "unknown quantifier '{other}' (volume, trace-weighted, violation:<functional>)"
                )),
            },
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantifier::Volume => f.write_str("volume"),
            Quantifier::TraceWeighted => f.write_str("trace-weighted"),
            Quantifier::Violation(name) => write!(f, "violation:{name}"),
        }
    }
}

/// How measurement settings are chosen at each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SettingsMode {
    /// Monte Carlo over uniformly sampled angles.
    Sampled,
    /// The fixed CGLMP-optimal qutrit settings; one deterministic evaluation
    /// per point, so `vHat` and `vQHat` are the indicator and distance.
    Canonical,
}

impl SettingsMode {
    fn name(self) -> &'static str {
        match self {
            SettingsMode::Sampled => "sampled",
            SettingsMode::Canonical => "canonical",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub family: Family,
    pub grid: Grid,
    pub sampler: SamplerSpec,
    pub quantifiers: Vec<Quantifier>,
    pub settings: SettingsMode,
    pub samples: u64,
    pub seed: u64,
    pub tol: f64,
}

impl ScanConfig {
    /// Checks everything that can be checked without sampling, including
    /// that every grid point yields a valid state.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Config("--samples must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol < 0.0 {
            return Err(CliError::Config(format!("--tol {} must be finite and >= 0", self.tol)));
        }
        if self.family.local_dim() != self.sampler.kind.local_dim() {
            return Err(CliError::Config(format!(
                "family {} needs {} measurements, got {}",
                self.family.name(),
                if self.family.local_dim() == 2 { "qubit" } else { "qutrit" },
                sampler_label(&self.sampler)
            )));
        }
        if self.settings == SettingsMode::Canonical && self.sampler != SamplerSpec::qutrit(2)? {
            return Err(CliError::Config(
                "canonical settings exist only for the qutrit:2 scenario".into(),
            ));
        }
        let scenario = self.sampler.scenario();
        for f in self.functionals()? {
            if f.scenario() != scenario {
                return Err(CliError::Config(format!(
                    "functional '{}' is defined on {}, the sampler produces {}",
                    f.name(),
                    f.scenario(),
                    scenario
                )));
            }
        }
        if let Some(count) = scenario.strategy_count().filter(|&c| c > MAX_STRATEGIES as u128) {
            return Err(CliError::Config(format!(
                "{count} deterministic strategies exceed the limit of {MAX_STRATEGIES}"
            )));
        }
        for p in self.grid.points() {
            self.family.state(p)?;
        }
        Ok(())
    }

    pub fn functionals(&self) -> Result<Vec<BellFunctional>, CliError> {
        self.quantifiers
            .iter()
            .filter_map(|q| match q {
                Quantifier::Violation(name) => Some(name),
                _ => None,
            })
            .map(|name| functional_by_name(name).map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    /// One-line echo of the configuration, for the CSV metadata.
    pub fn echo(&self) -> String {
        let quantifiers: Vec<String> = self.quantifiers.iter().map(|q| q.to_string()).collect();
        format!(
            "command=scan family={} grid={} scenario={} quantifiers={} settings={} samples={} seed={} tol={:?}",
            self.family.name(),
            self.grid,
            sampler_label(&self.sampler),
            quantifiers.join(","),
            self.settings.name(),
            self.samples,
            self.seed,
            self.tol
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub param: f64,
    pub entropy_bits: f64,
    pub v_hat: f64,
    pub std_err_v: f64,
    pub vq_hat: f64,
    pub std_err_vq: f64,
    pub vi_hat: Vec<f64>,
    pub max_bell: Vec<f64>,
    pub n_samples: u64,
    pub seed: u64,
}

/// Rows of a finished scan plus what is needed to print them.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanTable {
    pub quantifiers: Vec<Quantifier>,
    pub functionals: Vec<String>,
    pub rows: Vec<ScanRow>,
}

/// Parameter of the first maximum of `values`.
fn argmax(params: &[f64], values: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&p, &v) in params.iter().zip(values) {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((p, v));
        }
    }
    best.map(|(p, _)| p)
}

/// Parameters of interior points strictly below their left neighbour and
/// not above their right one.
fn local_minima(params: &[f64], values: &[f64]) -> Vec<f64> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
        .map(|i| params[i])
        .collect()
}

impl ScanTable {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["param", "entropyBits", "vHat", "stdErrV", "vQHat", "stdErrVQ"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for f in &self.functionals {
            h.push(format!("vI_{f}"));
            h.push(format!("maxBell_{f}"));
        }
        h.push("nSamples".into());
        h.push("seed".into());
        h
    }

    pub fn params(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }

    pub fn v_hat(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.v_hat).collect()
    }

    pub fn vq_hat(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.vq_hat).collect()
    }

    pub fn vi_hat(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.vi_hat[k]).collect()
    }

    pub fn max_bell(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_bell[k]).collect()
    }

    /// Quantifier columns in footer order, as `(name, values)`.
    pub fn quantifier_columns(&self) -> Vec<(String, Vec<f64>)> {
        let mut cols = Vec::new();
        for q in &self.quantifiers {
            match q {
                Quantifier::Volume => cols.push(("vHat".to_string(), self.v_hat())),
                Quantifier::TraceWeighted => cols.push(("vQHat".to_string(), self.vq_hat())),
                Quantifier::Violation(name) => {
                    let k = self.functionals.iter().position(|f| f == name).expect("listed");
                    cols.push((format!("vI_{name}"), self.vi_hat(k)));
                    cols.push((format!("maxBell_{name}"), self.max_bell(k)));
                }
            }
        }
        cols
    }

    pub fn argmax_of(&self, column: &[f64]) -> Option<f64> {
        argmax(&self.params(), column)
    }

    pub fn local_minima_of(&self, column: &[f64]) -> Vec<f64> {
        local_minima(&self.params(), column)
    }

    /// Renders the CSV body: header, rows and footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header().join(","));
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![
                num(r.param),
                num(r.entropy_bits),
                num(r.v_hat),
                num(r.std_err_v),
                num(r.vq_hat),
                num(r.std_err_vq),
            ];
            for (vi, mb) in r.vi_hat.iter().zip(&r.max_bell) {
                cells.push(num(*vi));
                cells.push(num(*mb));
            }
            cells.push(r.n_samples.to_string());
            cells.push(r.seed.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        let cols = self.quantifier_columns();
        let maxima: Vec<String> = cols
            .iter()
            .map(|(name, v)| format!("{name}={}", self.argmax_of(v).map(num).unwrap_or_default()))
            .collect();
        out.push_str(&format!("# argmax {}\n", maxima.join(" ")));
        let minima: Vec<String> = cols
            .iter()
            .filter(|(name, _)| name == "vHat" || name == "vQHat")
            .map(|(name, v)| {
                let m: Vec<String> = self.local_minima_of(v).into_iter().map(num).collect();
                format!("{name}={}", m.join(";"))
            })
            .collect();
        if !minima.is_empty() {
            out.push_str(&format!("# local-minima {}\n", minima.join(" ")));
        }
        out
    }
}

/// Shortest round-trip decimal form.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn metadata(echo: &str) -> String {
    format!("# nlvol {}\n# {echo}\n", env!("CARGO_PKG_VERSION"))
}

/// Hard per-row checks: `vQ <= v` exactly and `vI <= v + 3 sigma`.
fn check_row(row: &ScanRow, std_err_vi: &[f64], functionals: &[BellFunctional]) -> Result<(), CliError> {
    if row.vq_hat > row.v_hat {
        return Err(CliError::Computation(format!(
            "vQHat {} exceeds vHat {} at param {}",
            row.vq_hat, row.v_hat, row.param
        )));
    }
    for ((vi, se), f) in row.vi_hat.iter().zip(std_err_vi).zip(functionals) {
        let sigma = (row.std_err_v.powi(2) + se.powi(2)).sqrt();
        if *vi > row.v_hat + 3.0 * sigma {
            return Err(CliError::Computation(format!(
                "vI_{} = {vi} exceeds vHat {} by more than 3 sigma at param {}",
                f.name(),
                row.v_hat,
                row.param
            )));
        }
    }
    Ok(())
}

/// Runs a scan. Records of sampled points go to `records`, each point
/// preceded by a `# point` comment line.
pub fn run_scan(config: &ScanConfig, mut records: Option<&mut dyn Write>) -> Result<ScanTable, CliError> {
    config.validate()?;
    let functionals = config.functionals()?;
    let mut rows = Vec::new();
    for (i, param) in config.grid.points().into_iter().enumerate() {
        let state = config.family.state(param)?;
        let seed = derive_seed(config.seed, i as u64);
        let entropy_bits = config.family.entropy_bits(param);
        let (row, std_err_vi) = match config.settings {
            SettingsMode::Sampled => {
                let estimator =
                    VolumeEstimator::new(state, config.sampler, functionals.clone(), config.tol)?;
                let est = match records.as_deref_mut() {
                    Some(w) => {
                        writeln!(w, "# point {i} param {} seed {seed}", num(param))
                            .map_err(|e| CliError::Config(format!("records: {e}")))?;
                        estimator.estimate_with(config.samples, seed, |r| writeln!(w, "{}", r.to_line()))?
                    }
                    None => estimator.estimate(config.samples, seed)?,
                };
                let row = ScanRow {
                    param,
                    entropy_bits,
                    v_hat: est.v_hat,
                    std_err_v: est.std_err_v,
                    vq_hat: est.vq_hat,
                    std_err_vq: est.std_err_vq,
                    vi_hat: est.vi_hat,
                    max_bell: est.max_bell_values,
                    n_samples: est.n_samples,
                    seed,
                };
                (row, est.std_err_vi)
            }
            SettingsMode::Canonical => {
                (canonical_row(&state, param, entropy_bits, seed, &functionals, config.tol)?, vec![0.0; functionals.len()])
            }
        };
        check_row(&row, &std_err_vi, &functionals)?;
        rows.push(row);
    }
    Ok(ScanTable {
        quantifiers: config.quantifiers.clone(),
        functionals: functionals.iter().map(|f| f.name().to_string()).collect(),
        rows,
    })
}

fn canonical_row(
    state: &PureState,
    param: f64,
    entropy_bits: f64,
    seed: u64,
    functionals: &[BellFunctional],
    tol: f64,
) -> Result<ScanRow, CliError> {
    let (ma, mb) = cglmp_optimal_settings();
    let behavior = behavior_from(state, &ma, &mb).map_err(computation)?;
    let polytope = enumerate_strategies(behavior.scenario()).map_err(computation)?;
    let distance = trace_distance_to_local(&behavior, &polytope).map_err(computation)?.distance;
    let nonlocal = distance > tol;
    let values: Vec<f64> = functionals
        .iter()
        .map(|f| bell_value(f, &behavior).map_err(computation))
        .collect::<Result<_, _>>()?;
    Ok(ScanRow {
        param,
        entropy_bits,
        v_hat: if nonlocal { 1.0 } else { 0.0 },
        std_err_v: 0.0,
        vq_hat: if nonlocal { distance } else { 0.0 },
        std_err_vq: 0.0,
        vi_hat: functionals
            .iter()
            .zip(&values)
            .map(|(f, &v)| if v > f.local_bound() + tol { 1.0 } else { 0.0 })
            .collect(),
        max_bell: values,
        n_samples: 1,
        seed,
    })
}

/// Full CSV text of a scan, metadata included.
pub fn scan_csv(config: &ScanConfig, records: Option<&mut dyn Write>) -> Result<String, CliError> {
    let table = run_scan(config, records)?;
    Ok(metadata(&config.echo()) + &table.to_csv())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NScanConfig {
    pub alpha: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub samples: u64,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NScanRow {
    pub n: usize,
    pub v_hat: f64,
    pub std_err_v: f64,
    pub vq_hat: f64,
    pub std_err_vq: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl NScanConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Config("--samples must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol < 0.0 {
            return Err(CliError::Config(format!("--tol {} must be finite and >= 0", self.tol)));
        }
        if self.n_min == 0 || self.n_max < self.n_min {
            return Err(CliError::Config(format!(
                "measurement range {}:{} must satisfy 1 <= min <= max",
                self.n_min, self.n_max
            )));
        }
        Family::PsiAlpha.state(self.alpha)?;
        let worst = SamplerSpec::qubit(self.n_max)?.scenario().strategy_count();
        if worst.is_none_or(|c| c > MAX_STRATEGIES as u128) {
            return Err(CliError::Config(format!(
                "{} measurements per party exceed the limit of {MAX_STRATEGIES} deterministic strategies",
                self.n_max
            )));
        }
        Ok(())
    }

    pub fn echo(&self) -> String {
        format!(
            "command=nscan family=psi-alpha alpha={:?} n-range={}:{} samples={} seed={} tol={:?}",
            self.alpha, self.n_min, self.n_max, self.samples, self.seed, self.tol
        )
    }
}

/// Nonlocal volumes of `psi(alpha)` against the number of qubit
/// measurements per party. Row `n` uses seed `derive_seed(seed, n)`.
pub fn run_nscan(config: &NScanConfig) -> Result<Vec<NScanRow>, CliError> {
    config.validate()?;
    let state = Family::PsiAlpha.state(config.alpha)?;
    let mut rows = Vec::new();
    for n in config.n_min..=config.n_max {
        let seed = derive_seed(config.seed, n as u64);
        let estimator = VolumeEstimator::new(state.clone(), SamplerSpec::qubit(n)?, Vec::new(), config.tol)?;
        let est = estimator.estimate(config.samples, seed)?;
        if est.vq_hat > est.v_hat {
            return Err(CliError::Computation(format!("vQHat exceeds vHat at n = {n}")));
        }
        rows.push(NScanRow {
            n,
            v_hat: est.v_hat,
            std_err_v: est.std_err_v,
            vq_hat: est.vq_hat,
            std_err_vq: est.std_err_vq,
            n_samples: est.n_samples,
            seed,
        });
    }
    Ok(rows)
}

pub fn nscan_csv(config: &NScanConfig) -> Result<String, CliError> {
    let rows = run_nscan(config)?;
    let mut out = metadata(&config.echo());
    out.push_str("n,vHat,stdErrV,vQHat,stdErrVQ,nSamples,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            num(r.v_hat),
            num(r.std_err_v),
            num(r.vq_hat),
            num(r.std_err_vq),
            r.n_samples,
            r.seed
        ));
    }
    Ok(out)
}

/// Reads a behavior table; any failure is a parse error.
pub fn read_behavior(path: &Path) -> Result<Behavior, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Behavior::from_text(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Text report of the trace distance of a behavior file.
pub fn distance_report(behavior: &Behavior, expected: Option<SamplerSpec>, tol: f64) -> Result<String, CliError> {
    if let Some(spec) = expected {
        if spec.scenario() != behavior.scenario() {
            return Err(CliError::Config(format!(
                "file holds a {} behavior, expected {}",
                behavior.scenario(),
                spec.scenario()
            )));
        }
    }
    let polytope = enumerate_strategies(behavior.scenario()).map_err(|e| match e {
        PolytopeError::Capacity { .. } => CliError::Config(e.to_string()),
        other => computation(other),
    })?;
    let report = trace_distance_to_local(behavior, &polytope).map_err(computation)?;
    let s = behavior.scenario();
    let verdict = if report.distance > tol { "nonlocal" } else { "local" };
    let mut out = format!("nl = {}\nverdict = {verdict} (tol = {tol:?})\n", num(report.distance));
    out.push_str("weights (strategy, alice outcomes, bob outcomes, weight):\n");
    for (i, &w) in report.weights.iter().enumerate() {
        if w > WEIGHT_PRINT_CUTOFF {
            let alice: String = (0..s.n_x).map(|x| polytope.alice_outcome(i, x).to_string()).collect();
            let bob: String = (0..s.n_y).map(|y| polytope.bob_outcome(i, y).to_string()).collect();
            out.push_str(&format!("{i} {alice} {bob} {}\n", num(w)));
        }
    }
    Ok(out)
}

/// Text report of one functional on a behavior.
pub fn bellval_report(behavior: &Behavior, name: &str) -> Result<String, CliError> {
    let f = functional_by_name(name).map_err(|e| CliError::Config(e.to_string()))?;
    let value = bell_value(&f, behavior).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(format!(
        "functional = {}\nvalue = {}\nlocalBound = {}\n",
        f.name(),
        num(value),
        num(f.local_bound())
    ))
}

#[derive(Debug, Parser)]
#[command(name = "nlvol", version, about = "Nonlocal volumes of bipartite quantum states")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan a state family over a parameter grid and write CSV.
    Scan(ScanArgs),
    /// Scan psi(alpha) over the number of measurements per party.
    Nscan(NScanArgs),
    /// Trace distance of a behavior file to the local polytope.
    Distance(DistanceArgs),
    /// Value of a Bell functional on a behavior file.
    Bellval(BellvalArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// start:stop:step (degrees for ghz-alpha)
    #[arg(long)]
    pub grid: Grid,
    /// qubit:<n> or qutrit:<n>
    #[arg(long, value_parser = parse_sampler)]
    pub scenario: SamplerSpec,
    /// Comma-separated: volume, trace-weighted, violation:<functional>
    #[arg(long, value_delimiter = ',', default_value = "volume,trace-weighted")]
    pub quantifiers: Vec<Quantifier>,
    #[arg(long, value_enum, default_value = "sampled")]
    pub settings: SettingsMode,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// CSV destination (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-sample record dump
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NScanArgs {
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub alpha: f64,
    /// min:max measurements per party
    #[arg(long, default_value = "1:4")]
    pub n_range: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub file: PathBuf,
    /// Expected scenario, qubit:<n> or qutrit:<n>
    #[arg(long, value_parser = parse_sampler)]
    pub scenario: Option<SamplerSpec>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct BellvalArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub functional: String,
}

fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("expected min:max, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// Opens the output early so an unwritable path fails before any work.
fn open_output(path: &Option<PathBuf>) -> Result<Option<File>, CliError> {
    path.as_ref()
        .map(|p| File::create(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))))
        .transpose()
}

/// Writes `text` to `file`, or hands it back for stdout.
fn emit(file: Option<File>, text: String) -> Result<String, CliError> {
    match file {
        Some(mut f) => {
            f.write_all(text.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| CliError::Config(format!("writing output: {e}")))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Runs one subcommand and returns what goes to stdout.
fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Scan(a) => {
            let config = ScanConfig {
                family: a.family,
                grid: a.grid,
                sampler: a.scenario,
                quantifiers: a.quantifiers,
                settings: a.settings,
                samples: a.samples,
                seed: a.seed,
                tol: a.tol,
            };
            config.validate()?;
            if a.records.is_some() && config.settings == SettingsMode::Canonical {
                return Err(CliError::Config("--records needs sampled settings".into()));
            }
            let out = open_output(&a.out)?;
            let mut records = open_output(&a.records)?.map(BufWriter::new);
            let csv = scan_csv(&config, records.as_mut().map(|w| w as &mut dyn Write))?;
            if let Some(mut w) = records {
                w.flush().map_err(|e| CliError::Config(format!("records: {e}")))?;
            }
            emit(out, csv)
        }
        Command::Nscan(a) => {
            let (n_min, n_max) = parse_range(&a.n_range)?;
            let config = NScanConfig {
                alpha: a.alpha,
                n_min,
                n_max,
                samples: a.samples,
                seed: a.seed,
                tol: a.tol,
            };
            config.validate()?;
            let out = open_output(&a.out)?;
            let csv = nscan_csv(&config)?;
            emit(out, csv)
        }
        Command::Distance(a) => {
            let behavior = read_behavior(&a.file)?;
            distance_report(&behavior, a.scenario, a.tol)
        }
        Command::Bellval(a) => {
            let behavior = read_behavior(&a.file)?;
            bellval_report(&behavior, &a.functional)
        }
    }
}

/// Runs a parsed command line, on a dedicated pool when `--threads` is given.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| execute(cli.command))
        }
        None => execute(cli.command),
    }?;
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Config(format!("writing output: {e}")))
}
