//! Seeded Monte-Carlo sweeps over transmit power or user count, run for a set
//! of schemes on paired channel realizations, with CSV, JSON audit and SVG
//! outputs.

pub mod plot;
pub mod table;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, generate_scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::history::RunHistory;
use crate::metrics::{secrecy_rates, ObjectiveBreakdown};
use crate::orchestrator::{converged, outer_iterations, run_scheme, Scheme};
use crate::sca::max_rank_residual;

pub use plot::{emit_plot, render_svg};
pub use table::{parse_rows, to_csv_string, write_rows, CsvRow, RowKind, RunStatus, COLUMNS};

/// Default Monte-Carlo realizations per sweep point.
pub const DEFAULT_REALIZATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PMaxDbm,
    NumUsers,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PMaxDbm => "p_max_dbm",
            SweepVariable::NumUsers => "num_users",
        }
    }

    /// Values swept when none are given.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepVariable::PMaxDbm => vec![0.0, 10.0, 20.0, 30.0, 40.0],
            SweepVariable::NumUsers => vec![1.0, 2.0, 3.0, 4.0],
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepVariable::PMaxDbm => cfg.p_max = dbm_to_watts(value),
            SweepVariable::NumUsers => cfg.num_users = value as usize,
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "p_max_dbm" | "p_max" | "power" => Ok(SweepVariable::PMaxDbm),
            "num_users" | "k" | "users" => Ok(SweepVariable::NumUsers),
            other => Err(Error::invalid(format!("unknown sweep variable {other:?}"))),
        }
    }
}

/// Overrides applied on top of the base configuration for one group of series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Variant {
    /// Appended to the scheme name as `scheme/label`; empty means no suffix.
    pub label: String,
    pub num_bs_antennas: Option<usize>,
    pub num_irs_elements: Option<usize>,
    pub r_be: Option<f64>,
    pub r_re: Option<f64>,
    /// Schemes for this variant; the sweep's list when absent.
    pub schemes: Option<Vec<Scheme>>,
}

impl Variant {
    pub fn geometry(r_be: f64, r_re: f64) -> Self {
        Variant {
            label: format!("{r_be}-{r_re}m"),
            r_be: Some(r_be),
            r_re: Some(r_re),
            ..Variant::default()
        }
    }

    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(n) = self.num_bs_antennas {
            cfg.num_bs_antennas = n;
        }
        if let Some(m) = self.num_irs_elements {
            cfg.num_irs_elements = m;
        }
        if let Some(r) = self.r_be {
            cfg.r_be = r;
        }
        if let Some(r) = self.r_re {
            cfg.r_re = r;
        }
    }

    /// Series name of `scheme` under this variant.
    pub fn series(&self, scheme: Scheme) -> String {
        if self.label.is_empty() {
            scheme.name().to_string()
        } else {
            format!("{}/{}", scheme.name(), self.label)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// File stem of the outputs (`<name>.csv`, `<name>.svg`, `<name>.audit.json`).
    pub name: String,
    pub variable: SweepVariable,
    /// Non-empty and strictly increasing.
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub realizations: usize,
    pub base: ScenarioConfig,
    /// Series groups; a single unlabeled group when empty.
    #[serde(default)]
    pub variants: Vec<Variant>,
    pub out_dir: PathBuf,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, base: ScenarioConfig, out_dir: impl Into<PathBuf>) -> Self {
        SweepSpec {
            name: "sweep".into(),
            variable,
            values: variable.default_values(),
            schemes: Scheme::ALL.to_vec(),
            realizations: DEFAULT_REALIZATIONS,
            base,
            variants: Vec::new(),
            out_dir: out_dir.into(),
        }
    }

    fn variant_list(&self) -> Vec<Variant> {
        if self.variants.is_empty() {
            vec![Variant::default()]
        } else {
            self.variants.clone()
        }
    }

    /// `(series name, variant, scheme)` in output order.
    fn series(&self) -> Vec<(String, Variant, Scheme)> {
        let mut out = Vec::new();
        for v in self.variant_list() {
            for &s in v.schemes.as_deref().unwrap_or(&self.schemes) {
                out.push((v.series(s), v.clone(), s));
            }
        }
        out
    }

    /// Configuration of one run, before the seed is set.
    pub fn config_for(&self, value: f64, variant: &Variant) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        variant.apply(&mut cfg);
        self.variable.apply(&mut cfg, value);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::invalid(format!("sweep name {:?} must be non-empty [A-Za-z0-9_-]", self.name)));
        }
        check_values(&self.values)?;
        if self.variable == SweepVariable::NumUsers
            && self.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0 || v > 1e6)
        {
            return Err(Error::invalid("num_users sweep values must be positive integers"));
        }
        if self.realizations < 1 {
            return Err(Error::invalid("realizations must be at least 1"));
        }
        let mut labels = BTreeSet::new();
        for v in self.variant_list() {
            if !labels.insert(v.label.clone()) {
                return Err(Error::invalid(format!("duplicate variant label {:?}", v.label)));
            }
            if v.label.contains(['/', ',', '\n', '\r', '"']) {
                return Err(Error::invalid(format!("variant label {:?} has a reserved character", v.label)));
            }
            let schemes = v.schemes.as_deref().unwrap_or(&self.schemes);
            if schemes.is_empty() {
                return Err(Error::invalid("at least one scheme is required"));
            }
            if schemes.iter().collect::<BTreeSet<_>>().len() != schemes.len() {
                return Err(Error::invalid("schemes must not repeat"));
            }
            for &value in &self.values {
                self.config_for(value, &v)
                    .validate()
                    .map_err(|e| e.context(format!("{} = {value}, variant {:?}", self.variable, v.label)))?;
            }
        }
        Ok(())
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("value list is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("values must be strictly increasing"));
    }
    Ok(())
}

/// Parse a comma-separated, strictly increasing list of finite numbers.
pub fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    let values = s
        .split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad value {part:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    check_values(&values)?;
    Ok(values)
}

/// Parse a comma-separated scheme list.
pub fn parse_scheme_list(s: &str) -> Result<Vec<Scheme>> {
    let schemes = s.split(',').map(str::parse).collect::<Result<Vec<Scheme>>>()?;
    if schemes.iter().collect::<BTreeSet<_>>().len() != schemes.len() {
        return Err(Error::invalid("schemes must not repeat"));
    }
    Ok(schemes)
}

/// Scenario seed for `(value index, realization)`; shared by every scheme and
/// variant so that comparisons are paired.
pub fn derive_seed(base_seed: u64, value_index: usize, realization: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(((value_index as u64) << 32) | realization as u64);
    rng.next_u64()
}

/// Outcome of one optimizer run inside a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub value: f64,
    pub series: String,
    pub scheme: Scheme,
    pub variant: String,
    pub realization: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    /// FNV-1a hash of the channel realization.
    pub channel_fingerprint: Option<u64>,
    pub breakdown: Option<ObjectiveBreakdown>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub monotone: bool,
    pub max_rank_residual: Option<f64>,
    pub wall_ms: f64,
    pub history: RunHistory,
}

impl RunResult {
    pub fn sum_secrecy(&self) -> Option<f64> {
        self.breakdown.as_ref().map(|b| b.sum_secrecy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub value: f64,
    pub series: String,
    pub mean: Option<f64>,
    /// Sample standard deviation (0 for a single run).
    pub std: Option<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResults {
    pub spec: SweepSpec,
    pub runs: Vec<RunResult>,
    pub summaries: Vec<Summary>,
}

impl SweepResults {
    pub fn mean(&self, series: &str, value: f64) -> Option<f64> {
        self.summaries.iter().find(|s| s.series == series && s.value == value).and_then(|s| s.mean)
    }

    pub fn series_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for s in &self.summaries {
            if !names.contains(&s.series) {
                names.push(s.series.clone());
            }
        }
        names
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.status == RunStatus::Failed).count()
    }

    pub fn rows(&self) -> Vec<CsvRow> {
        let variable = self.spec.variable.name().to_string();
        let runs = self.runs.iter().map(|r| CsvRow {
            kind: RowKind::Run,
            variable: variable.clone(),
            value: r.value,
            series: r.series.clone(),
            realization: Some(r.realization),
            seed: Some(r.seed),
            status: r.status,
            sum_secrecy: r.sum_secrecy(),
            std_sum_secrecy: None,
            count: None,
            outer_iterations: Some(r.outer_iterations),
            per_user_secrecy: r.breakdown.as_ref().map(|b| b.secrecy.clone()).unwrap_or_default(),
        });
        let summaries = self.summaries.iter().map(|s| CsvRow {
            kind: RowKind::Summary,
            variable: variable.clone(),
            value: s.value,
            series: s.series.clone(),
            realization: None,
            seed: None,
            status: RunStatus::Ok,
            sum_secrecy: s.mean,
            std_sum_secrecy: s.std,
            count: Some(s.count),
            outer_iterations: None,
            per_user_secrecy: Vec::new(),
        });
        runs.chain(summaries).collect()
    }
}

struct Task {
    value: f64,
    value_index: usize,
    series: String,
    variant: Variant,
    scheme: Scheme,
    realization: usize,
}

fn run_task(spec: &SweepSpec, task: &Task) -> RunResult {
    let seed = derive_seed(spec.base.rng_seed, task.value_index, task.realization);
    let mut cfg = spec.config_for(task.value, &task.variant);
    cfg.rng_seed = seed;
    let clock = Instant::now();
    let outcome = generate_scenario(&cfg).and_then(|ch| {
        let (sol, history) = run_scheme(task.scheme, &ch, &cfg)?;
        let breakdown = secrecy_rates(&sol, &ch)?;
        Ok((ch.fingerprint(), sol, history, breakdown))
    });
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    let mut result = RunResult {
        value: task.value,
        series: task.series.clone(),
        scheme: task.scheme,
        variant: task.variant.label.clone(),
        realization: task.realization,
        seed,
        status: RunStatus::Failed,
        error: None,
        channel_fingerprint: None,
        breakdown: None,
        outer_iterations: 0,
        converged: false,
        monotone: false,
        max_rank_residual: None,
        wall_ms,
        history: RunHistory::default(),
    };
    match outcome {
        Ok((fingerprint, sol, history, breakdown)) => {
            result.status = RunStatus::Ok;
            result.channel_fingerprint = Some(fingerprint);
            result.breakdown = Some(breakdown);
            result.outer_iterations = outer_iterations(&history);
            result.converged = converged(&history, cfg.outer_tol);
            result.monotone = history.is_monotone(1e-6);
            result.max_rank_residual = Some(max_rank_residual(&sol));
            result.history = history;
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

fn summarize(spec: &SweepSpec, runs: &[RunResult]) -> Vec<Summary> {
    let mut out = Vec::new();
    for (series, _, _) in spec.series() {
        for &value in &spec.values {
            let xs: Vec<f64> = runs
                .iter()
                .filter(|r| r.series == series && r.value == value)
                .filter_map(RunResult::sum_secrecy)
                .collect();
            let n = xs.len();
            let (mean, std) = if n == 0 {
                (None, None)
            } else {
                let mean = xs.iter().sum::<f64>() / n as f64;
                let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
                (Some(mean), Some(var.sqrt()))
            };
            out.push(Summary { value, series: series.clone(), mean, std, count: n });
        }
    }
    out
}

/// Run every (value, series, realization) of `spec` without touching the
/// file system. Runs execute in parallel; results are in output order.
pub fn evaluate(spec: &SweepSpec) -> Result<SweepResults> {
    spec.validate()?;
    let series = spec.series();
    let mut tasks = Vec::new();
    for (value_index, &value) in spec.values.iter().enumerate() {
        for (name, variant, scheme) in &series {
            for realization in 0..spec.realizations {
                tasks.push(Task {
                    value,
                    value_index,
                    series: name.clone(),
                    variant: variant.clone(),
                    scheme: *scheme,
                    realization,
                });
            }
        }
    }
    let runs: Vec<RunResult> = tasks.par_iter().map(|t| run_task(spec, t)).collect();
    debug_assert!(paired(&runs), "schemes saw different channels at the same sweep point");
    let summaries = summarize(spec, &runs);
    Ok(SweepResults { spec: spec.clone(), runs, summaries })
}

/// Every scheme of a variant saw the same channel at a given (value, realization).
fn paired(runs: &[RunResult]) -> bool {
    let mut seen = std::collections::BTreeMap::new();
    runs.iter().filter_map(|r| r.channel_fingerprint.map(|f| (r, f))).all(|(r, f)| {
        *seen.entry((r.value.to_bits(), r.variant.clone(), r.realization)).or_insert(f) == f
    })
}

/// Files written by [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepOutputs {
    pub csv: PathBuf,
    /// Absent when no run succeeded (nothing to plot).
    pub svg: Option<PathBuf>,
    pub audit: PathBuf,
}

#[derive(Serialize)]
struct AuditLog<'a> {
    spec: &'a SweepSpec,
    runs: &'a [RunResult],
}

/// Write `<name>.csv`, `<name>.svg` and `<name>.audit.json` into `dir`.
pub fn write_outputs(results: &SweepResults, dir: &Path) -> Result<SweepOutputs> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))?;
    let name = &results.spec.name;
    let rows = results.rows();
    let csv = dir.join(format!("{name}.csv"));
    std::fs::write(&csv, to_csv_string(&rows)?).map_err(|e| Error::from(e).context(format!("writing {}", csv.display())))?;
    let svg = match render_svg(&rows) {
        Ok(text) => {
            let path = dir.join(format!("{name}.svg"));
            std::fs::write(&path, text).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
            Some(path)
        }
        Err(_) if results.failures() == results.runs.len() => None,
        Err(e) => return Err(e),
    };
    let audit = dir.join(format!("{name}.audit.json"));
    let log = AuditLog { spec: &results.spec, runs: &results.runs };
    std::fs::write(&audit, serde_json::to_string_pretty(&log)?)
        .map_err(|e| Error::from(e).context(format!("writing {}", audit.display())))?;
    Ok(SweepOutputs { csv, svg, audit })
}

/// Evaluate `spec` and write its outputs into `spec.out_dir`.
pub fn run_sweep(spec: &SweepSpec) -> Result<(SweepResults, SweepOutputs)> {
    let results = evaluate(spec)?;
    let outputs = write_outputs(&results, &spec.out_dir)?;
    Ok((results, outputs))
}

/// The user-count study: K in 1..=4 at 20 dBm with the eavesdropper 200 m
/// from the BS and 250 m from the IRS, for the default (N_T, M) = (6, 6)
/// array running `schemes`, plus the proposed scheme with N_T = 10 (`case1`)
/// and with M = 10 (`case2`).
pub fn case_study_spec(
    base: ScenarioConfig,
    schemes: Vec<Scheme>,
    realizations: usize,
    out_dir: impl Into<PathBuf>,
) -> SweepSpec {
    let base = ScenarioConfig {
        p_max: dbm_to_watts(20.0),
        r_be: 200.0,
        r_re: 250.0,
        num_bs_antennas: 6,
        num_irs_elements: 6,
        ..base
    };
    let proposed = Some(vec![Scheme::Proposed]);
    SweepSpec {
        name: "case_study".into(),
        variable: SweepVariable::NumUsers,
        values: SweepVariable::NumUsers.default_values(),
        schemes,
        realizations,
        base,
        variants: vec![
            Variant::default(),
            Variant {
                label: "case1".into(),
                num_bs_antennas: Some(10),
                schemes: proposed.clone(),
                ..Variant::default()
            },
            Variant {
                label: "case2".into(),
                num_irs_elements: Some(10),
                schemes: proposed,
                ..Variant::default()
            },
        ],
        out_dir: out_dir.into(),
    }
}

pub fn run_case_study(spec: &SweepSpec) -> Result<(SweepResults, SweepOutputs)> {
    run_sweep(spec)
}
